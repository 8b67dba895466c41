use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use bandopt::exact::RESULT_SCHEMA;
use bandopt::harness::SuiteOptions;
use bandopt::metrics::ORDERING_SCHEMA;
use bandopt::{
    export_lp, generate, permute_matrix, rcm_on_instance, run_suite, solve_instance, summarize,
    weighted_bandwidth, GenParams, Instance, Ordering, SolveConfig, SolveResult,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bandopt", version, about = "Exact weighted bandwidth minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate amorphous instances.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output file, or a directory when --count > 1.
        #[arg(long)]
        out: PathBuf,
        /// Number of instances, with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Box side (default: sqrt(n)).
        #[arg(long)]
        box_side: Option<f64>,
        #[arg(long)]
        r_min: Option<f64>,
    },
    /// Reverse Cuthill-McKee ordering of an instance's bond graph.
    Rcm {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance exactly.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark suite and write the gap report.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "6,7,8,9")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        per_size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also solve each instance with both reinforcements off.
        #[arg(long)]
        ab_reinforcements: bool,
        /// Sizes 10, 15, 20 without oracle checks.
        #[arg(long)]
        full_scale: bool,
        /// Per-solve time limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Instances solved concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Skip the brute-force cross-check.
        #[arg(long)]
        no_oracle: bool,
        #[arg(long)]
        out: PathBuf,
        /// Summary JSON path (default: <out>.summary.json).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Export the MILP in LP format.
    Lp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        no_lb: bool,
        #[arg(long)]
        no_sym: bool,
        #[arg(long)]
        anchor: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the interaction matrix permuted by an ordering, as CSV.
    Permute {
        #[arg(long)]
        instance: PathBuf,
        /// Ordering or result JSON; identity when omitted.
        #[arg(long)]
        ordering: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Disable the max-interaction lower bound.
    #[arg(long)]
    no_lb: bool,
    /// Disable the anchor symmetry rule.
    #[arg(long)]
    no_sym: bool,
    /// Disable look-ahead pruning.
    #[arg(long)]
    no_lookahead: bool,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    anchor: Option<usize>,
}

fn seconds(s: f64) -> Result<Duration> {
    if !(s.is_finite() && s > 0.0) {
        bail!("time limit must be a positive number of seconds, got {s}");
    }
    Ok(Duration::from_secs_f64(s))
}

impl SolverArgs {
    fn config(&self, threads: usize) -> Result<SolveConfig> {
        Ok(SolveConfig {
            use_lower_bound: !self.no_lb,
            use_symmetry_breaking: !self.no_sym,
            use_lookahead: !self.no_lookahead,
            time_limit: seconds(self.time_limit)?,
            node_limit: self.node_limit,
            anchor_vertex: self.anchor,
            initial_ordering: None,
            threads,
        })
    }
}

fn load(path: &Path) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("loading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_ordering(path: &Path) -> Result<Ordering> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(ORDERING_SCHEMA) => Ok(Ordering::from_json(&text)?),
        Some(RESULT_SCHEMA) => Ok(SolveResult::from_json(&text)?.ordering),
        other => bail!("{}: not an ordering or result file (schema {other:?})", path.display()),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen {
            n,
            seed,
            out,
            count,
            box_side,
            r_min,
        } => {
            let defaults = GenParams::for_n(n);
            let params = GenParams {
                box_side: box_side.unwrap_or(defaults.box_side),
                r_min: r_min.unwrap_or(defaults.r_min),
            };
            if count == 0 {
                bail!("--count must be at least 1");
            }
            if count == 1 {
                generate(n, seed, params)?.save(&out)?;
                return Ok(());
            }
            fs::create_dir_all(&out)?;
            for k in 0..count {
                let s = seed.wrapping_add(k);
                let inst = generate(n, s, params).with_context(|| format!("seed {s}"))?;
                inst.save(out.join(format!("{}.json", inst.id())))?;
            }
        }
        Command::Rcm { instance, out } => {
            let inst = load(&instance)?;
            let ord = rcm_on_instance(&inst);
            let u = inst.interaction_matrix()?;
            eprintln!("weighted bandwidth {}", weighted_bandwidth(&u, &ord)?.value);
            write(&out, &ord.to_json())?;
        }
        Command::Solve {
            instance,
            solver,
            threads,
            out,
        } => {
            let inst = load(&instance)?;
            let result = solve_instance(&inst, &solver.config(threads)?)?;
            eprintln!(
                "{}: objective {} (bound {}), {} nodes, {:.3}s",
                result.status,
                result.objective,
                result.lower_bound,
                result.nodes_explored,
                result.wall_time.as_secs_f64()
            );
            write(&out, &result.to_json())?;
        }
        Command::Bench {
            sizes,
            per_size,
            seed,
            ab_reinforcements,
            full_scale,
            time_limit,
            jobs,
            no_oracle,
            out,
            summary,
        } => {
            let mut opts = if full_scale {
                SuiteOptions::full_scale(seed, Duration::from_secs(600))
            } else {
                SuiteOptions {
                    sizes,
                    ..SuiteOptions::desk_scale(seed)
                }
            };
            opts.per_size = per_size;
            opts.ab_reinforcements = ab_reinforcements;
            opts.jobs = jobs;
            opts.oracle_check &= !no_oracle;
            if let Some(t) = time_limit {
                opts.solve.time_limit = seconds(t)?;
            }
            let report = run_suite(&opts)?;
            for f in &report.failures {
                eprintln!("{} (n = {}, seed = {}): {}", f.id, f.n, f.seed, f.message);
            }
            report.write_csv(&out)?;
            let summary_path = summary.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".summary.json");
                PathBuf::from(p)
            });
            if report.rows.is_empty() {
                bail!("no instance completed");
            }
            let s = summarize(&report)?;
            eprintln!(
                "{} instances, mean RCM gap {:.2}%, median {:.2}%",
                s.overall.instances, s.overall.mean_gap_percent, s.overall.median_gap_percent
            );
            write(&summary_path, &s.to_json())?;
        }
        Command::Lp {
            instance,
            no_lb,
            no_sym,
            anchor,
            out,
        } => {
            let u = load(&instance)?.interaction_matrix()?;
            let cfg = SolveConfig {
                use_lower_bound: !no_lb,
                use_symmetry_breaking: !no_sym,
                anchor_vertex: anchor,
                ..SolveConfig::default()
            };
            export_lp(&u, &cfg, &out)?;
        }
        Command::Permute {
            instance,
            ordering,
            out,
        } => {
            let u = load(&instance)?.interaction_matrix()?;
            let ord = match ordering {
                Some(p) => read_ordering(&p)?,
                None => Ordering::identity(u.n()),
            };
            write(&out, &permute_matrix(&u, &ord)?.to_string())?;
        }
    }
    Ok(())
}
