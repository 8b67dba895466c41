use std::sync::atomic::{AtomicU64, AtomicU8, Ordering as Atomic};
use std::sync::Mutex;
use std::time::Instant;

use super::{ExactError, SolveConfig, SolveResult, SolveStatus};
use crate::instance::InteractionMatrix;
use crate::metrics::{weighted_bandwidth, Ordering};

const RUNNING: u8 = 0;
const BOUND_REACHED: u8 = 1;
const LIMIT_HIT: u8 = 2;

/// Nodes processed between deadline checks and flushes of the shared counter.
const FLUSH_EVERY: u64 = 1024;

/// Incumbent and termination state shared by every worker.
struct Shared {
    best_bits: AtomicU64,
    best: Mutex<Vec<usize>>,
    state: AtomicU8,
    nodes: AtomicU64,
}

impl Shared {
    fn incumbent(&self) -> f64 {
        f64::from_bits(self.best_bits.load(Atomic::Acquire))
    }

    /// Replaces the incumbent only on strict improvement.
    fn offer(&self, value: f64, positions: &[usize]) -> bool {
        let mut best = self.best.lock().expect("incumbent lock poisoned");
        if value < self.incumbent() {
            best.copy_from_slice(positions);
            self.best_bits.store(value.to_bits(), Atomic::Release);
            true
        } else {
            false
        }
    }

    fn stopped(&self) -> bool {
        self.state.load(Atomic::Relaxed) != RUNNING
    }

    fn stop(&self, reason: u8) {
        let _ = self
            .state
            .compare_exchange(RUNNING, reason, Atomic::AcqRel, Atomic::Relaxed);
    }
}

/// Read-only search parameters.
struct Context<'a> {
    u: &'a InteractionMatrix,
    n: usize,
    /// Anchor vertex and the last position it may take.
    anchor: Option<(usize, usize)>,
    /// Early-termination target (the max-interaction bound).
    target: Option<f64>,
    lookahead: bool,
    deadline: Instant,
    node_limit: Option<u64>,
    shared: Shared,
}

/// A partial assignment handed to a parallel worker.
#[cfg_attr(not(feature = "parallel"), allow(dead_code))]
struct Task {
    pos: Vec<usize>,
    seq: Vec<usize>,
    partial: f64,
}

struct Worker<'c, 'a> {
    ctx: &'c Context<'a>,
    /// 1-based position per vertex, 0 when unplaced.
    pos: Vec<usize>,
    /// Placed vertices in position order.
    seq: Vec<usize>,
    nodes: u64,
    unflushed: u64,
    /// Depth at which subtrees are handed off instead of explored.
    split_at: usize,
    tasks: Vec<Task>,
}

impl<'c, 'a> Worker<'c, 'a> {
    fn new(ctx: &'c Context<'a>) -> Self {
        Self {
            ctx,
            pos: vec![0; ctx.n],
            seq: Vec::with_capacity(ctx.n),
            nodes: 0,
            unflushed: 0,
            split_at: usize::MAX,
            tasks: Vec::new(),
        }
    }

    /// Counts one node; false once a limit is hit.
    fn tick(&mut self) -> bool {
        let ctx = self.ctx;
        if let Some(limit) = ctx.node_limit {
            if ctx.shared.nodes.load(Atomic::Relaxed) + self.unflushed >= limit {
                ctx.shared.stop(LIMIT_HIT);
                return false;
            }
        }
        self.nodes += 1;
        self.unflushed += 1;
        if self.unflushed >= FLUSH_EVERY {
            self.flush();
            if Instant::now() >= ctx.deadline {
                ctx.shared.stop(LIMIT_HIT);
                return false;
            }
        }
        true
    }

    fn flush(&mut self) {
        self.ctx
            .shared
            .nodes
            .fetch_add(self.unflushed, Atomic::Relaxed);
        self.unflushed = 0;
    }

    /// Children of the current node as `(vertex, partial objective, bound)`,
    /// in branching order: strongest interaction with the placed prefix
    /// first, ties by index.
    ///
    /// The partial objective covers placed pairs only. The bound adds the
    /// look-ahead term when enabled: every other unplaced vertex ends up at
    /// position `p + 1` or later, which fixes a minimum for its terms
    /// against the placed prefix.
    fn children(&self, partial: f64) -> Vec<(usize, f64, f64)> {
        let ctx = self.ctx;
        let p = self.seq.len() + 1;
        let forced = match ctx.anchor {
            Some((a, last)) if self.pos[a] == 0 && p == last => Some(a),
            _ => None,
        };
        let mut out: Vec<(usize, f64, f64, f64)> = Vec::with_capacity(ctx.n - self.seq.len());
        // Two largest look-ahead terms as (value, vertex).
        let mut top = [(0.0f64, usize::MAX); 2];
        for v in 0..ctx.n {
            if self.pos[v] != 0 {
                continue;
            }
            let row = ctx.u.row(v);
            let mut key = 0.0f64;
            let mut value = partial;
            let mut later = 0.0f64;
            for &w in &self.seq {
                let uw = row[w];
                let gap = p - self.pos[w];
                key = key.max(uw);
                value = value.max(uw * gap as f64);
                later = later.max(uw * (gap + 1) as f64);
            }
            if later > top[0].0 {
                top = [(later, v), top[0]];
            } else if later > top[1].0 {
                top[1] = (later, v);
            }
            if forced.is_none_or(|a| a == v) {
                out.push((v, key, value, later));
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out.into_iter()
            .map(|(v, _, value, _)| {
                let bound = if ctx.lookahead {
                    let others = if top[0].1 == v { top[1].0 } else { top[0].0 };
                    value.max(others)
                } else {
                    value
                };
                (v, value, bound)
            })
            .collect()
    }

    fn dfs(&mut self, partial: f64) {
        let ctx = self.ctx;
        let depth = self.seq.len();
        if depth == ctx.n {
            if ctx.shared.offer(partial, &self.pos) && ctx.target == Some(partial) {
                ctx.shared.stop(BOUND_REACHED);
            }
            return;
        }
        if depth == self.split_at {
            self.tasks.push(Task {
                pos: self.pos.clone(),
                seq: self.seq.clone(),
                partial,
            });
            return;
        }
        for (v, value, bound) in self.children(partial) {
            if ctx.shared.stopped() || !self.tick() {
                return;
            }
            if bound >= ctx.shared.incumbent() {
                continue;
            }
            self.seq.push(v);
            self.pos[v] = self.seq.len();
            self.dfs(value);
            self.pos[v] = 0;
            self.seq.pop();
        }
    }
}

/// Exact branch-and-bound over position assignments.
///
/// Positions are filled left to right; a child is pruned when its running
/// maximum already reaches the incumbent. With `threads > 1` (and the
/// `parallel` feature) the top two levels are expanded first and the
/// resulting subtrees are explored concurrently against a shared incumbent.
pub fn branch_and_bound(u: &InteractionMatrix, cfg: &SolveConfig) -> Result<SolveResult, ExactError> {
    let start = Instant::now();
    let n = u.n();
    cfg.validate(n)?;
    let lower_bound = u.max_off_diagonal().unwrap_or(0.0);

    let initial = cfg
        .initial_ordering
        .clone()
        .unwrap_or_else(|| Ordering::identity(n));
    let initial_value = weighted_bandwidth(u, &initial)?.value;

    let anchor = (cfg.use_symmetry_breaking && n >= 2).then(|| (cfg.anchor(u), n.div_ceil(2)));
    let ctx = Context {
        u,
        n,
        anchor,
        target: (cfg.use_lower_bound && n >= 2).then_some(lower_bound),
        lookahead: cfg.use_lookahead,
        deadline: start + cfg.time_limit,
        node_limit: cfg.node_limit,
        shared: Shared {
            best_bits: AtomicU64::new(initial_value.to_bits()),
            best: Mutex::new(initial.positions().to_vec()),
            state: AtomicU8::new(RUNNING),
            nodes: AtomicU64::new(0),
        },
    };

    // The root node.
    let mut nodes = 1;
    if n <= 1 || ctx.target == Some(initial_value) {
        ctx.shared.stop(BOUND_REACHED);
    } else if cfg.node_limit.is_some_and(|l| l <= 1) {
        ctx.shared.stop(LIMIT_HIT);
    } else {
        ctx.shared.nodes.store(1, Atomic::Relaxed);
        nodes += explore(&ctx, cfg.threads);
    }

    let state = ctx.shared.state.load(Atomic::Acquire);
    let objective = ctx.shared.incumbent();
    let mut ordering = Ordering::new(ctx.shared.best.into_inner().expect("incumbent lock poisoned"))?;
    if let Some((a, last)) = anchor {
        if ordering.position(a) > last {
            ordering = ordering.reversed();
        }
    }
    Ok(SolveResult {
        ordering,
        objective,
        lower_bound,
        status: if state == LIMIT_HIT {
            SolveStatus::FeasibleTimeout
        } else {
            SolveStatus::Optimal
        },
        nodes_explored: nodes,
        wall_time: start.elapsed(),
    })
}

#[cfg(feature = "parallel")]
fn explore(ctx: &Context<'_>, threads: usize) -> u64 {
    use rayon::prelude::*;

    if threads <= 1 {
        return explore_sequential(ctx);
    }
    let mut splitter = Worker::new(ctx);
    splitter.split_at = 2.min(ctx.n);
    splitter.dfs(0.0);
    splitter.flush();
    let tasks = std::mem::take(&mut splitter.tasks);
    let run = || {
        tasks
            .into_par_iter()
            .map(|task| {
                if ctx.shared.stopped() || task.partial >= ctx.shared.incumbent() {
                    return 0;
                }
                let mut worker = Worker::new(ctx);
                worker.pos = task.pos;
                worker.seq = task.seq;
                worker.dfs(task.partial);
                worker.flush();
                worker.nodes
            })
            .sum::<u64>()
    };
    let subtree_nodes = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    splitter.nodes + subtree_nodes
}

#[cfg(not(feature = "parallel"))]
fn explore(ctx: &Context<'_>, _threads: usize) -> u64 {
    explore_sequential(ctx)
}

fn explore_sequential(ctx: &Context<'_>) -> u64 {
    let mut worker = Worker::new(ctx);
    worker.dfs(0.0);
    worker.flush();
    worker.nodes
}
