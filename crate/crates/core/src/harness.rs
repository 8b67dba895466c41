//! Batch experiments: generate a suite of instances, solve each exactly and
//! with RCM, and report the RCM gap and the node counts with and without the
//! reinforcements.
//!
//! CSV columns are fixed:
//! `id,n,seed,obj_rcm,opt,gap_percent,status,nodes_on,nodes_off,wall_time_s`.
//! Floats carry 12 significant digits. `nodes_off` is empty when the
//! reinforcement-free run was not requested or did not finish.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::exact::{brute_force, solve_instance, SolveConfig, SolveStatus, BRUTE_FORCE_MAX_N};
use crate::instance::{generate, GenParams};
use crate::metrics::{rcm_gap, weighted_bandwidth};
use crate::rcm::rcm_on_instance;

pub const CSV_HEADER: [&str; 10] = [
    "id",
    "n",
    "seed",
    "obj_rcm",
    "opt",
    "gap_percent",
    "status",
    "nodes_on",
    "nodes_off",
    "wall_time_s",
];

pub const SUMMARY_SCHEMA: &str = "bandopt-summary/1";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid suite arguments: {0}")]
    InvalidArgument(String),
    #[error("cannot summarize an empty report")]
    EmptyReport,
    #[error("malformed report CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub sizes: Vec<usize>,
    pub per_size: usize,
    pub seed0: u64,
    pub solve: SolveConfig,
    /// Also solve every instance with both reinforcements off.
    pub ab_reinforcements: bool,
    /// Compare every optimum against brute force when `n` allows it.
    pub oracle_check: bool,
    /// Instances solved concurrently (needs the `parallel` feature).
    pub jobs: usize,
    /// Minimum site separation; the box side is always `sqrt(n)`.
    pub r_min: f64,
}

impl SuiteOptions {
    /// `n` in 6..=9, ten instances each, oracle cross-checks on.
    pub fn desk_scale(seed0: u64) -> Self {
        Self {
            sizes: vec![6, 7, 8, 9],
            per_size: 10,
            seed0,
            solve: SolveConfig::default(),
            ab_reinforcements: false,
            oracle_check: true,
            jobs: 1,
            r_min: GenParams::for_n(1).r_min,
        }
    }

    /// `n` in {10, 15, 20} with a per-solve time limit; meant for offline runs.
    pub fn full_scale(seed0: u64, time_limit: Duration) -> Self {
        Self {
            sizes: vec![10, 15, 20],
            per_size: 10,
            seed0,
            solve: SolveConfig {
                time_limit,
                ..SolveConfig::default()
            },
            ab_reinforcements: false,
            oracle_check: false,
            jobs: 1,
            r_min: GenParams::for_n(1).r_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub id: String,
    pub n: usize,
    pub seed: u64,
    pub obj_rcm: f64,
    pub opt: f64,
    pub gap_percent: f64,
    pub status: SolveStatus,
    pub nodes_on: u64,
    pub nodes_off: Option<u64>,
    pub wall_time_s: f64,
}

/// An instance that could not be run, or a check that did not hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteFailure {
    pub id: String,
    pub n: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub failures: Vec<SuiteFailure>,
}

/// Seed of replicate `rep` at size `n`.
pub fn instance_seed(seed0: u64, n: usize, rep: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = ((n as u64) << 32 | rep as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seed0.wrapping_add(z ^ (z >> 31))
}

struct Job {
    n: usize,
    rep: usize,
}

/// Outcome of one instance: the row, if any, and problems worth reporting.
type JobOutcome = (Option<GapRow>, Vec<SuiteFailure>);

fn run_job(opts: &SuiteOptions, job: &Job) -> JobOutcome {
    let n = job.n;
    let seed = instance_seed(opts.seed0, n, job.rep);
    let id = format!("n{n}-r{}", job.rep);
    let fail = |message: String| SuiteFailure {
        id: id.clone(),
        n,
        seed,
        message,
    };

    let params = GenParams {
        r_min: opts.r_min,
        ..GenParams::for_n(n)
    };
    let inst = match generate(n, seed, params) {
        Ok(inst) => inst,
        Err(e) => return (None, vec![fail(format!("generation failed: {e}"))]),
    };
    let u = match inst.interaction_matrix() {
        Ok(u) => u,
        Err(e) => return (None, vec![fail(e.to_string())]),
    };
    let rcm = rcm_on_instance(&inst);
    let obj_rcm = weighted_bandwidth(&u, &rcm)
        .expect("RCM ordering matches the instance size")
        .value;

    let solved = match solve_instance(&inst, &opts.solve) {
        Ok(r) => r,
        Err(e) => return (None, vec![fail(format!("solve failed: {e}"))]),
    };
    let mut problems = Vec::new();

    let nodes_off = if opts.ab_reinforcements {
        match solve_instance(&inst, &opts.solve.without_reinforcements()) {
            Ok(r) if r.status == SolveStatus::Optimal => {
                if solved.status == SolveStatus::Optimal && r.objective != solved.objective {
                    problems.push(fail(format!(
                        "reinforcement-free optimum {} differs from {}",
                        r.objective, solved.objective
                    )));
                }
                Some(r.nodes_explored)
            }
            Ok(r) => {
                problems.push(fail(format!(
                    "reinforcement-free run stopped early after {} nodes",
                    r.nodes_explored
                )));
                None
            }
            Err(e) => {
                problems.push(fail(format!("reinforcement-free solve failed: {e}")));
                None
            }
        }
    } else {
        None
    };

    if opts.oracle_check && n <= BRUTE_FORCE_MAX_N && solved.status == SolveStatus::Optimal {
        match brute_force(&u) {
            Ok(oracle) if oracle.objective != solved.objective => problems.push(fail(format!(
                "brute force optimum {} differs from {}",
                oracle.objective, solved.objective
            ))),
            Ok(_) => {}
            Err(e) => problems.push(fail(format!("oracle failed: {e}"))),
        }
    }

    let gap_percent = match rcm_gap(obj_rcm, solved.objective) {
        Ok(g) => g,
        Err(e) => {
            problems.push(fail(e.to_string()));
            return (None, problems);
        }
    };
    let row = GapRow {
        id: id.clone(),
        n,
        seed,
        obj_rcm,
        opt: solved.objective,
        gap_percent,
        status: solved.status,
        nodes_on: solved.nodes_explored,
        nodes_off,
        wall_time_s: solved.wall_time.as_secs_f64(),
    };
    (Some(row), problems)
}

/// Runs the suite. Rows come back ordered by `(n, replicate)` whatever the
/// completion order; failing instances are listed in `failures` and the suite
/// carries on.
pub fn run_suite(opts: &SuiteOptions) -> Result<GapReport, HarnessError> {
    if opts.sizes.is_empty() {
        return Err(HarnessError::InvalidArgument("no sizes given".into()));
    }
    if opts.per_size == 0 {
        return Err(HarnessError::InvalidArgument(
            "per_size must be at least 1".into(),
        ));
    }
    if let Some(&n) = opts.sizes.iter().find(|&&n| n < 2) {
        return Err(HarnessError::InvalidArgument(format!(
            "instance size {n} is below 2"
        )));
    }
    let jobs: Vec<Job> = opts
        .sizes
        .iter()
        .flat_map(|&n| (0..opts.per_size).map(move |rep| Job { n, rep }))
        .collect();

    let outcomes = run_jobs(opts, &jobs);
    let mut report = GapReport::default();
    for (row, problems) in outcomes {
        report.rows.extend(row);
        report.failures.extend(problems);
    }
    Ok(report)
}

#[cfg(feature = "parallel")]
fn run_jobs(opts: &SuiteOptions, jobs: &[Job]) -> Vec<JobOutcome> {
    use rayon::prelude::*;

    if opts.jobs <= 1 {
        return jobs.iter().map(|j| run_job(opts, j)).collect();
    }
    let run = || jobs.par_iter().map(|j| run_job(opts, j)).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(opts: &SuiteOptions, jobs: &[Job]) -> Vec<JobOutcome> {
    jobs.iter().map(|j| run_job(opts, j)).collect()
}

/// `%.12g`-style formatting used for every float in the CSV.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl GapReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.id.clone(),
                r.n.to_string(),
                r.seed.to_string(),
                format_sig(r.obj_rcm),
                format_sig(r.opt),
                format_sig(r.gap_percent),
                r.status.to_string(),
                r.nodes_on.to_string(),
                r.nodes_off.map(|v| v.to_string()).unwrap_or_default(),
                format_sig(r.wall_time_s),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
    }

    /// Parses rows written by [`GapReport::to_csv`]. Failures are not part of
    /// the CSV and come back empty.
    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(HarnessError::Csv(format!(
                "unexpected header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<&str, HarnessError> {
                rec.get(i).ok_or_else(|| {
                    HarnessError::Csv(format!("row {}: missing `{}`", line + 1, CSV_HEADER[i]))
                })
            };
            let bad = |i: usize| HarnessError::Csv(format!("row {}: bad `{}`", line + 1, CSV_HEADER[i]));
            let float = |i: usize| field(i)?.parse::<f64>().map_err(|_| bad(i));
            let nodes_off = match field(8)? {
                "" => None,
                s => Some(s.parse().map_err(|_| bad(8))?),
            };
            rows.push(GapRow {
                id: field(0)?.to_owned(),
                n: field(1)?.parse().map_err(|_| bad(1))?,
                seed: field(2)?.parse().map_err(|_| bad(2))?,
                obj_rcm: float(3)?,
                opt: float(4)?,
                gap_percent: float(5)?,
                status: field(6)?.parse().map_err(|_| bad(6))?,
                nodes_on: field(7)?.parse().map_err(|_| bad(7))?,
                nodes_off,
                wall_time_s: float(9)?,
            });
        }
        Ok(Self {
            rows,
            failures: Vec::new(),
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub instances: usize,
    pub optimal: usize,
    pub mean_gap_percent: f64,
    pub median_gap_percent: f64,
    /// `(nodes_off - nodes_on) / nodes_off * 100`, averaged over rows where
    /// both runs finished; `None` if there are no such rows.
    pub mean_node_reduction_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    #[serde(flatten)]
    pub stats: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub per_size: Vec<SizeSummary>,
    pub overall: Aggregate,
    pub failures: Vec<SuiteFailure>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serialises");
        s.push('\n');
        s
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn aggregate(rows: &[&GapRow]) -> Aggregate {
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap_percent).collect();
    let reductions: Vec<f64> = rows
        .iter()
        .filter(|r| r.status == SolveStatus::Optimal)
        .filter_map(|r| {
            r.nodes_off
                .filter(|&off| off > 0)
                .map(|off| (off as f64 - r.nodes_on as f64) / off as f64 * 100.0)
        })
        .collect();
    Aggregate {
        instances: rows.len(),
        optimal: rows
            .iter()
            .filter(|r| r.status == SolveStatus::Optimal)
            .count(),
        mean_gap_percent: mean(&gaps),
        median_gap_percent: median(&gaps),
        mean_node_reduction_percent: (!reductions.is_empty()).then(|| mean(&reductions)),
    }
}

/// Per-size and overall gap statistics.
pub fn summarize(report: &GapReport) -> Result<Summary, HarnessError> {
    if report.rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let mut sizes: Vec<usize> = report.rows.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let per_size = sizes
        .into_iter()
        .map(|n| {
            let rows: Vec<&GapRow> = report.rows.iter().filter(|r| r.n == n).collect();
            SizeSummary {
                n,
                stats: aggregate(&rows),
            }
        })
        .collect();
    let all: Vec<&GapRow> = report.rows.iter().collect();
    Ok(Summary {
        schema: SUMMARY_SCHEMA,
        per_size,
        overall: aggregate(&all),
        failures: report.failures.clone(),
    })
}
