//! Cuthill-McKee orderings of the bond graph.
//!
//! Interaction strengths are ignored here; only the sparse adjacency matters.

use crate::instance::Instance;
use crate::metrics::Ordering;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RcmError {
    #[error("bond ({0}, {1}) references a vertex outside 0..{2}")]
    InvalidBond(usize, usize, usize),
    #[error("start vertex {0} outside 0..{1}")]
    InvalidStart(usize, usize),
}

fn adjacency(bonds: &[(usize, usize)], n: usize) -> Result<Vec<Vec<usize>>, RcmError> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in bonds {
        if a >= n || b >= n {
            return Err(RcmError::InvalidBond(a, b, n));
        }
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    Ok(adj)
}

/// Breadth-first level ordering. Each level is sorted by ascending degree,
/// ties by index. Components after the first start from their
/// minimum-degree vertex (ties by index). Without `start`, the first root is
/// the global minimum-degree vertex.
pub fn cuthill_mckee(
    bonds: &[(usize, usize)],
    n: usize,
    start: Option<usize>,
) -> Result<Ordering, RcmError> {
    let adj = adjacency(bonds, n)?;
    if let Some(s) = start {
        if s >= n {
            return Err(RcmError::InvalidStart(s, n));
        }
    }
    let degree = |v: usize| adj[v].len();
    let mut visited = vec![false; n];
    let mut sequence = Vec::with_capacity(n);
    let mut next_root = start;

    while sequence.len() < n {
        let root = next_root.take().unwrap_or_else(|| {
            (0..n)
                .filter(|&v| !visited[v])
                .min_by_key(|&v| (degree(v), v))
                .expect("an unvisited vertex remains")
        });
        visited[root] = true;
        let mut level = vec![root];
        while !level.is_empty() {
            sequence.extend_from_slice(&level);
            let mut next = Vec::new();
            for &v in &level {
                for &w in &adj[v] {
                    if !visited[w] {
                        visited[w] = true;
                        next.push(w);
                    }
                }
            }
            next.sort_unstable_by_key(|&v| (degree(v), v));
            level = next;
        }
    }
    Ok(Ordering::from_sequence(&sequence).expect("every vertex placed once"))
}

/// Cuthill-McKee with positions reversed: `pi(v) = n + 1 - pi_cm(v)`.
pub fn reverse_cuthill_mckee(
    bonds: &[(usize, usize)],
    n: usize,
    start: Option<usize>,
) -> Result<Ordering, RcmError> {
    cuthill_mckee(bonds, n, start).map(|o| o.reversed())
}

/// RCM on the instance's bond graph with the default start rule.
pub fn rcm_on_instance(inst: &Instance) -> Ordering {
    reverse_cuthill_mckee(inst.bonds(), inst.n(), None).expect("instance bonds are validated")
}
