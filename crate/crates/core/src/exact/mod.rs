//! Exact weighted bandwidth minimization.
//!
//! [`branch_and_bound`] fills positions left to right and prunes on the
//! running maximum. Two optional reinforcements can be switched on and off
//! independently: the max-interaction lower bound, which stops the search as
//! soon as an incumbent reaches it, and the reversal symmetry rule, which
//! confines an anchor vertex to the first `ceil(n/2)` positions.
//!
//! [`brute_force`] enumerates every permutation and serves as the oracle;
//! [`export_lp`] writes the equivalent MILP for external solvers.

mod lp;
mod search;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::instance::{Instance, InstanceError, InteractionMatrix};
use crate::metrics::{weighted_bandwidth, MetricsError, Ordering};
use crate::rcm::rcm_on_instance;

pub use lp::{export_lp, lp_string, write_lp};
pub use search::branch_and_bound;

pub const RESULT_SCHEMA: &str = "bandopt-result/1";

/// Largest size accepted by [`brute_force`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error("brute force is limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed result file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Stop as soon as the incumbent reaches the max-interaction bound.
    pub use_lower_bound: bool,
    /// Restrict the anchor vertex to positions `1..=ceil(n/2)`.
    pub use_symmetry_breaking: bool,
    /// Prune with the look-ahead bound on unplaced vertices, not only with
    /// the running maximum over placed pairs.
    pub use_lookahead: bool,
    pub time_limit: Duration,
    pub node_limit: Option<u64>,
    /// Defaults to the vertex with the largest row sum (ties by index).
    pub anchor_vertex: Option<usize>,
    /// Warm start; the identity ordering is used when absent.
    pub initial_ordering: Option<Ordering>,
    /// Worker threads. `1` is fully sequential and gives reproducible node
    /// counts; larger values need the `parallel` feature.
    pub threads: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            use_lower_bound: true,
            use_symmetry_breaking: true,
            use_lookahead: true,
            time_limit: Duration::from_secs(600),
            node_limit: None,
            anchor_vertex: None,
            initial_ordering: None,
            threads: 1,
        }
    }
}

impl SolveConfig {
    /// Both reinforcements disabled, everything else unchanged.
    pub fn without_reinforcements(&self) -> Self {
        Self {
            use_lower_bound: false,
            use_symmetry_breaking: false,
            ..self.clone()
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<(), ExactError> {
        if self.time_limit.is_zero() {
            return Err(ExactError::InvalidConfig("time limit must be positive".into()));
        }
        if self.threads == 0 {
            return Err(ExactError::InvalidConfig("thread count must be at least 1".into()));
        }
        if let Some(a) = self.anchor_vertex {
            if a >= n {
                return Err(ExactError::InvalidConfig(format!(
                    "anchor vertex {a} out of range for n = {n}"
                )));
            }
        }
        if let Some(o) = &self.initial_ordering {
            if o.len() != n {
                return Err(ExactError::InvalidConfig(format!(
                    "initial ordering has {} vertices, matrix has {n}",
                    o.len()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn anchor(&self, u: &InteractionMatrix) -> usize {
        self.anchor_vertex.unwrap_or_else(|| default_anchor(u))
    }
}

/// Vertex with the largest total interaction, smallest index on ties.
pub fn default_anchor(u: &InteractionMatrix) -> usize {
    let mut best = 0;
    let mut best_sum = f64::NEG_INFINITY;
    for v in 0..u.n() {
        let s = u.row_sum(v);
        if s > best_sum {
            best = v;
            best_sum = s;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeout,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleTimeout => "feasible-timeout",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(SolveStatus::Optimal),
            "feasible-timeout" => Ok(SolveStatus::FeasibleTimeout),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub ordering: Ordering,
    /// Weighted bandwidth of `ordering`.
    pub objective: f64,
    /// Max-interaction bound (0 when there are no pairs).
    pub lower_bound: f64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

#[derive(Serialize, Deserialize)]
struct ResultFile {
    schema: String,
    objective: f64,
    lower_bound: f64,
    status: SolveStatus,
    nodes: u64,
    wall_time_s: f64,
    ordering: Vec<usize>,
}

impl SolveResult {
    pub fn to_json(&self) -> String {
        let file = ResultFile {
            schema: RESULT_SCHEMA.to_owned(),
            objective: self.objective,
            lower_bound: self.lower_bound,
            status: self.status,
            nodes: self.nodes_explored,
            wall_time_s: self.wall_time.as_secs_f64(),
            ordering: self.ordering.positions().to_vec(),
        };
        let mut s = serde_json::to_string(&file).expect("result serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ExactError> {
        let file: ResultFile =
            serde_json::from_str(text).map_err(|e| ExactError::Malformed(e.to_string()))?;
        if file.schema != RESULT_SCHEMA {
            return Err(ExactError::Malformed(format!(
                "unsupported schema `{}`",
                file.schema
            )));
        }
        Ok(Self {
            ordering: Ordering::new(file.ordering)?,
            objective: file.objective,
            lower_bound: file.lower_bound,
            status: file.status,
            nodes_explored: file.nodes,
            wall_time: Duration::from_secs_f64(file.wall_time_s.max(0.0)),
        })
    }
}

/// Largest off-diagonal interaction: some pair always sits at distance at
/// least one, so no ordering does better.
pub fn theoretical_lower_bound(u: &InteractionMatrix) -> Result<f64, ExactError> {
    u.max_off_diagonal().ok_or(ExactError::TooFewVertices(u.n()))
}

/// Exhaustive enumeration of all `n!` orderings. Returns the
/// lexicographically smallest optimal position vector.
pub fn brute_force(u: &InteractionMatrix) -> Result<SolveResult, ExactError> {
    let n = u.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(ExactError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let start = std::time::Instant::now();
    let mut perm: Vec<usize> = (1..=n).collect();
    let mut best_perm = perm.clone();
    let mut best = f64::INFINITY;
    let mut count = 0u64;
    loop {
        count += 1;
        let ord = Ordering::new(perm.clone())?;
        let value = weighted_bandwidth(u, &ord)?.value;
        if value < best {
            best = value;
            best_perm.clone_from(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(SolveResult {
        ordering: Ordering::new(best_perm)?,
        objective: best,
        lower_bound: u.max_off_diagonal().unwrap_or(0.0),
        status: SolveStatus::Optimal,
        nodes_explored: count,
        wall_time: start.elapsed(),
    })
}

/// Advances to the next permutation in lexicographic order; false at the last.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("a larger suffix element exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Solves an instance, warm-starting from its RCM ordering unless the
/// configuration already carries an initial ordering.
pub fn solve_instance(inst: &Instance, cfg: &SolveConfig) -> Result<SolveResult, ExactError> {
    let u = inst.interaction_matrix()?;
    if cfg.initial_ordering.is_some() {
        return branch_and_bound(&u, cfg);
    }
    let cfg = SolveConfig {
        initial_ordering: Some(rcm_on_instance(inst)),
        ..cfg.clone()
    };
    branch_and_bound(&u, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::GenParams;

    fn line(xs: &[f64]) -> InteractionMatrix {
        let sites = xs.iter().map(|&x| [x, 0.0]).collect();
        Instance::new("line", 0, GenParams::for_n(xs.len()), sites, vec![])
            .unwrap()
            .interaction_matrix()
            .unwrap()
    }

    #[test]
    fn permutations_in_lexicographic_order() {
        let mut p = vec![1, 2, 3];
        let mut all = vec![p.clone()];
        while next_permutation(&mut p) {
            all.push(p.clone());
        }
        assert_eq!(
            all,
            vec![
                vec![1, 2, 3],
                vec![1, 3, 2],
                vec![2, 1, 3],
                vec![2, 3, 1],
                vec![3, 1, 2],
                vec![3, 2, 1]
            ]
        );
    }

    #[test]
    fn lower_bound_fixtures() {
        assert_eq!(theoretical_lower_bound(&line(&[0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(theoretical_lower_bound(&line(&[0.0, 1.0, 3.0])).unwrap(), 1.0);
        assert!(matches!(
            theoretical_lower_bound(&line(&[0.0])),
            Err(ExactError::TooFewVertices(1))
        ));
    }

    #[test]
    fn brute_force_fixtures() {
        let one = brute_force(&line(&[0.0])).unwrap();
        assert_eq!(one.objective, 0.0);
        assert_eq!(one.ordering, Ordering::identity(1));

        // Six orderings; A-B adjacent gives 1, the smallest such is the identity.
        let r = brute_force(&line(&[0.0, 1.0, 3.0])).unwrap();
        assert_eq!(r.objective, 1.0);
        assert_eq!(r.ordering.positions(), &[1, 2, 3]);
        assert_eq!(r.nodes_explored, 6);

        let tri = Instance::new(
            "tri",
            0,
            GenParams::for_n(3),
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]],
            vec![],
        )
        .unwrap()
        .interaction_matrix()
        .unwrap();
        let r = brute_force(&tri).unwrap();
        // The apex distances are not exactly 1 in floating point; the optimum
        // puts the weakest pair at the two ends.
        let expected = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| tri.get(i, j))
            .fold(f64::INFINITY, f64::min)
            * 2.0;
        assert_eq!(r.objective, expected);
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_refuses_large() {
        let u = InteractionMatrix::from_dense(11, vec![0.0; 121]).unwrap();
        assert!(matches!(
            brute_force(&u),
            Err(ExactError::TooLarge { n: 11, max: 10 })
        ));
    }

    #[test]
    fn config_validation() {
        let u = line(&[0.0, 1.0, 3.0]);
        let bad = [
            SolveConfig {
                time_limit: Duration::ZERO,
                ..Default::default()
            },
            SolveConfig {
                anchor_vertex: Some(3),
                ..Default::default()
            },
            SolveConfig {
                threads: 0,
                ..Default::default()
            },
            SolveConfig {
                initial_ordering: Some(Ordering::identity(2)),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(
                branch_and_bound(&u, &cfg),
                Err(ExactError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn anchor_default_is_heaviest_row() {
        // middle site interacts most
        assert_eq!(default_anchor(&line(&[0.0, 1.0, 2.0])), 1);
        // ties go to the smallest index
        assert_eq!(default_anchor(&line(&[0.0, 1.0])), 0);
    }

    #[test]
    fn result_json() {
        let r = SolveResult {
            ordering: Ordering::new(vec![2, 1]).unwrap(),
            objective: 1.5,
            lower_bound: 1.5,
            status: SolveStatus::Optimal,
            nodes_explored: 3,
            wall_time: Duration::from_millis(250),
        };
        let text = r.to_json();
        assert_eq!(
            text,
            "{\"schema\":\"bandopt-result/1\",\"objective\":1.5,\"lower_bound\":1.5,\
             \"status\":\"optimal\",\"nodes\":3,\"wall_time_s\":0.25,\"ordering\":[2,1]}\n"
        );
        assert_eq!(SolveResult::from_json(&text).unwrap(), r);
        assert_eq!("feasible-timeout".parse::<SolveStatus>(), Ok(SolveStatus::FeasibleTimeout));
    }
}
