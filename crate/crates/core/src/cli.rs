//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action_space::ProfileSet;
use crate::error::{Error, Result};
use crate::kinematics::{Agent, VehicleState};
use crate::minimax_qp::SolverSettings;
use crate::mprttc::{mprttc, EvalParams, MprttcResult, Snapshot};
use crate::parallel::par_map;
use crate::scenario::{evaluate_trace, parse_snapshot, parse_sweep, parse_trace, sweep, templates, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "mprism", version, about = "Worst-case time-to-collision for traffic snapshots and traces")]
pub struct Cli {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Collision radius C (m).
    #[arg(long, global = true, default_value_t = 2.0)]
    pub radius: f64,
    /// Step size (s).
    #[arg(long, global = true, default_value_t = 0.1)]
    pub delta: f64,
    /// Look-ahead steps T.
    #[arg(long, global = true, default_value_t = 10)]
    pub horizon: usize,
    /// Speed floor used when linearizing (m/s).
    #[arg(long = "v-floor", global = true, default_value_t = 0.1)]
    pub v_floor: f64,
    /// Regularization added to both quadratic terms.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub lambda: f64,
    /// Worker threads for agents, frames and sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Branch-and-bound time limit per pair (ms).
    #[arg(long = "bnb-ms", global = true, default_value_t = 50.0)]
    pub bnb_ms: f64,
    /// Use accelerated (momentum) gradient steps.
    #[arg(long, global = true)]
    pub momentum: bool,
    /// TOML file with extra or overriding acceleration profiles.
    #[arg(long = "profile-file", global = true)]
    pub profile_file: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Rows)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Rows,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Template {
    LeadFollowing,
    BoxedIn,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one snapshot document.
    EvalSnapshot {
        #[arg(long)]
        input: PathBuf,
    },
    /// Evaluate every frame of a scenario document.
    EvalScenario {
        #[arg(long)]
        input: PathBuf,
        /// Also write the report document here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a grid of snapshot variations.
    Sweep {
        #[arg(long, conflicts_with = "template", required_unless_present = "template")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        template: Option<Template>,
    },
    /// Throughput on randomized snapshots, single worker vs `--workers`.
    Bench {
        /// Agent counts to measure.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
        agents: Vec<usize>,
        /// Snapshots per measurement.
        #[arg(long, default_value_t = 20)]
        snapshots: usize,
    },
}

impl ParamArgs {
    pub fn eval_params(&self) -> Result<EvalParams> {
        let profiles = match &self.profile_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                ProfileSet::defaults_with_overrides(&text)?
            }
            None => ProfileSet::default(),
        };
        if !(self.bnb_ms.is_finite() && self.bnb_ms > 0.0) {
            return Err(Error::invalid("--bnb-ms must be positive"));
        }
        let params = EvalParams {
            radius: self.radius,
            delta: self.delta,
            horizon: self.horizon,
            v_floor: self.v_floor,
            solver: SolverSettings {
                lambda: self.lambda,
                momentum: self.momentum,
                bnb_time_limit: Duration::from_secs_f64(self.bnb_ms / 1e3),
                ..SolverSettings::default()
            },
            workers: self.workers,
            seed: self.seed,
            profiles: Arc::new(profiles),
        };
        params.validate()?;
        Ok(params)
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    /// Some pair solve failed or hit its time limit.
    pub solver_issues: bool,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn snapshot_text(result: &MprttcResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tau={}", result.tau);
    let _ = writeln!(out, "dominant={}", result.dominant.as_deref().unwrap_or("none"));
    let _ = writeln!(out, "safe={}", result.safe);
    for (id, tau) in &result.per_agent {
        let _ = writeln!(out, "agent {id} tau={tau}");
    }
    out
}

/// Randomized load: agents uniform in a 100 m x 20 m band around the SV,
/// speeds uniform in [0, 30] m/s, headings within 0.1 rad of the band.
pub fn bench_snapshots(agents: usize, count: usize, seed: u64) -> Vec<Snapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles = ["ev-like", "ice-like"];
    let vehicle = |rng: &mut ChaCha8Rng, id: String, p: f64, q: f64| {
        let v = rng.gen_range(0.0..=30.0);
        let phi = rng.gen_range(-0.1..=0.1);
        let profile = profiles[rng.gen_range(0..2)];
        Agent::vehicle(id, profile, VehicleState::new(p, q, v, phi).expect("finite sample"))
    };
    (0..count)
        .map(|k| {
            let sv = vehicle(&mut rng, "sv".into(), 0.0, 0.0);
            let others = (0..agents)
                .map(|i| {
                    let p = rng.gen_range(-50.0..=50.0);
                    let q = rng.gen_range(-10.0..=10.0);
                    vehicle(&mut rng, format!("a{i}"), p, q)
                })
                .collect();
            Snapshot::new(k as f64, sv, others).expect("generated ids are distinct")
        })
        .collect()
}

/// Evaluates a batch of snapshots with up to `params.workers` workers.
pub fn evaluate_batch(snapshots: &[Snapshot], params: &EvalParams) -> Result<Vec<MprttcResult>> {
    par_map(params.workers, snapshots, |s| mprttc(s, params)).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub agents: usize,
    pub workers: usize,
    pub snapshots: usize,
    pub seconds: f64,
    pub rate: f64,
}

pub fn bench(agent_counts: &[usize], snapshots: usize, params: &EvalParams) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    let mut worker_counts = vec![1];
    if params.workers > 1 {
        worker_counts.push(params.workers);
    }
    for &n in agent_counts {
        let batch = bench_snapshots(n, snapshots, params.seed);
        for &w in &worker_counts {
            let p = EvalParams {
                workers: w,
                ..params.clone()
            };
            let start = Instant::now();
            evaluate_batch(&batch, &p)?;
            let seconds = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                agents: n,
                workers: w,
                snapshots,
                seconds,
                rate: snapshots as f64 / seconds.max(1e-12),
            });
        }
    }
    Ok(rows)
}

fn sweep_spec(input: Option<&Path>, template: Option<Template>, params: EvalParams) -> Result<SweepSpec> {
    match (input, template) {
        (Some(path), _) => {
            let (spec, warnings) = parse_sweep(&read(path)?, params)?;
            warn(&warnings);
            Ok(spec)
        }
        (None, Some(Template::LeadFollowing)) => Ok(templates::lead_following_sweep(params)),
        (None, Some(Template::BoxedIn)) => Ok(templates::boxed_in_sweep(params)),
        (None, None) => Err(Error::invalid("sweep needs --input or --template")),
    }
}

pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let params = cli.params.eval_params()?;
    let output = cli.params.output.as_deref();
    let format = cli.params.format;
    match &cli.command {
        Command::EvalSnapshot { input } => {
            let (snapshot, warnings) = parse_snapshot(&read(input)?)?;
            warn(&warnings);
            let result = mprttc(&snapshot, &params)?;
            let text = match format {
                Format::Rows => snapshot_text(&result),
                Format::Report => to_json(&result),
            };
            emit(output, &text)?;
            Ok(RunOutcome {
                solver_issues: result.has_solver_issues(),
            })
        }
        Command::EvalScenario { input, report } => {
            let parsed = parse_trace(&read(input)?)?;
            warn(&parsed.warnings);
            let rep = evaluate_trace(&parsed.trace, &params)?;
            let text = match format {
                Format::Rows => rep.rows(),
                Format::Report => to_json(&rep),
            };
            emit(output, &text)?;
            if let Some(path) = report {
                emit(Some(path), &to_json(&rep))?;
            }
            Ok(RunOutcome {
                solver_issues: rep.has_solver_issues(),
            })
        }
        Command::Sweep { input, template } => {
            let spec = sweep_spec(input.as_deref(), *template, params)?;
            let grid = sweep(&spec)?;
            let text = match format {
                Format::Rows => grid.rows(),
                Format::Report => to_json(&grid),
            };
            emit(output, &text)?;
            Ok(RunOutcome {
                solver_issues: grid.has_solver_issues(),
            })
        }
        Command::Bench { agents, snapshots } => {
            if *snapshots == 0 || agents.is_empty() {
                return Err(Error::invalid("bench needs at least one snapshot and one agent count"));
            }
            let rows = bench(agents, *snapshots, &params)?;
            let mut text = String::from("agents,workers,snapshots,seconds,snapshots_per_second\n");
            for r in &rows {
                let _ = writeln!(text, "{},{},{},{:.6},{:.3}", r.agents, r.workers, r.snapshots, r.seconds, r.rate);
            }
            emit(output, &text)?;
            Ok(RunOutcome { solver_issues: false })
        }
    }
}

pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::InvalidProfile(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(RunOutcome { solver_issues: false }) => ExitCode::SUCCESS,
        Ok(RunOutcome { solver_issues: true }) => {
            eprintln!("warning: some pair solves failed or hit their time limit; see the report diagnostics");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
