//! `fracwave`: simulate, export noise, run ensembles and verification suites.
//!
//! Exit status is 0 on success, 1 when a verdict fails and 2 when the run
//! could not be carried out. In the last two cases a one-line JSON object
//! with a `status` and a `reason` is printed on stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fracwave::basis::QuadratureGrid;
use fracwave::io::{self, NoiseHeader, Summary};
use fracwave::verify::{self, AdditiveOptions, BoundInputs, ConsistencyOptions, EnsembleReport, RunInfo, Verdict};
use fracwave::{parse_config, RunConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fracwave", version, about = "Spectral Galerkin simulator for the fractional stochastic wave equation with Lévy noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory: trajectory.csv and summary.json.
    Simulate(Common),
    /// Export one noise path: noise.csv and noise.json.
    Noise(Common),
    /// Run an N-level ensemble: replicas.csv and report.json.
    Ensemble(Common),
    /// Run a verification suite: verdict_<suite>.json.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Break one ingredient of the suite on purpose; the suite must fail.
        #[arg(long)]
        negative_control: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replica count; each suite has its own default.
    #[arg(long)]
    replicas: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Isometry,
    Additive,
    Moment,
    Tail,
    Consistency,
    TauK,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Isometry => "isometry",
            Suite::Additive => "additive",
            Suite::Moment => "moment",
            Suite::Tail => "tail",
            Suite::Consistency => "consistency",
            Suite::TauK => "tau_k",
        }
    }

    fn default_replicas(self) -> usize {
        match self {
            Suite::Isometry | Suite::TauK => 100_000,
            Suite::Additive => 10_000,
            Suite::Moment | Suite::Tail => 1_000,
            Suite::Consistency => 100,
        }
    }
}

enum Outcome {
    Done,
    Failed(String),
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut config = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_config(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out_dir = Some(out.clone());
        }
        config.validate()?;
        let out = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok((config, out))
    }

    fn run(&self, replicas: usize, seed: u64) -> RunInfo {
        RunInfo::new(self.replicas.unwrap_or(replicas), seed, self.workers)
    }
}

fn sidecar(out: &Path, command: &str, started: Instant) -> Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let line = format!("{command} finished_unix={now} runtime_s={:.3}\n", started.elapsed().as_secs_f64());
    fs::write(out.join("run.log"), line)?;
    Ok(())
}

fn simulate(common: &Common) -> Result<Outcome> {
    let (config, out) = common.load()?;
    let sc = config.scenario()?;
    let path = sc.sample_path(config.seed)?;
    let traj = sc.solve(&path)?;
    io::write_file(&out.join("trajectory.csv"), |w| io::write_trajectory_csv(w, &traj))?;
    let summary = Summary::new(&config, sc.model.embedding_constant(), &path, &traj);
    io::write_json(&out.join("summary.json"), &summary)?;
    println!("{}", json!({"status": "ok", "final_norm": summary.final_norm, "final_n": summary.final_n}));
    Ok(Outcome::Done)
}

fn noise(common: &Common) -> Result<Outcome> {
    let (config, out) = common.load()?;
    let sc = config.scenario()?;
    let path = sc.sample_path(config.seed)?;
    io::write_file(&out.join("noise.csv"), |w| io::write_noise_csv(w, &path))?;
    io::write_json(&out.join("noise.json"), &NoiseHeader::of(&path))?;
    println!("{}", json!({"status": "ok", "jumps": path.jumps().len()}));
    Ok(Outcome::Done)
}

fn verdict_outcome(verdicts: &[&Verdict]) -> Outcome {
    let failed: Vec<String> = verdicts
        .iter()
        .flat_map(|v| v.failed_checks().map(move |c| format!("{}: {}", v.suite, c.label)))
        .collect();
    if failed.is_empty() {
        Outcome::Done
    } else {
        Outcome::Failed(failed.join("; "))
    }
}

fn ensemble(common: &Common) -> Result<Outcome> {
    let (config, out) = common.load()?;
    let sc = config.scenario()?;
    let run = common.run(1_000, config.seed);
    let levels = verify::dyadic_levels(config.n_max);
    let ens = verify::level_ensemble(&sc, &levels, run)?;
    let inputs = BoundInputs::for_scenario(&sc)?;
    let report = EnsembleReport::new(&ens, &inputs);
    io::write_file(&out.join("replicas.csv"), |w| io::write_replica_csv(w, &ens))?;
    io::write_json(&out.join("report.json"), &json!({"config": config, "report": report}))?;
    println!("{}", json!({"status": if report.passed { "pass" } else { "fail" }, "replicas": report.replicas}));
    Ok(verdict_outcome(&[&report.moment, &report.tail]))
}

fn run_suite(common: &Common, suite: Suite, broken: bool) -> Result<Outcome> {
    let (config, out) = common.load()?;
    let sc = config.scenario()?;
    let run = common.run(suite.default_replicas(), config.seed).broken(broken);
    let verdict = match suite {
        Suite::Isometry => {
            let grid = Arc::new(QuadratureGrid::new(config.dimension, 33)?);
            verify::isometry_suite(&sc.spec, sc.partition, grid, run)?
        }
        Suite::Additive => verify::additive_linear_suite(&sc.model, &sc.spec, &AdditiveOptions::default(), run)?,
        Suite::Moment | Suite::Tail => {
            let levels = verify::dyadic_levels(config.n_max);
            let ens = verify::level_ensemble(&sc, &levels, run)?;
            let inputs = BoundInputs::for_scenario(&sc)?;
            if suite == Suite::Moment {
                verify::check_moment_bound(&ens, &inputs)
            } else {
                verify::check_tail_bound(&ens, &inputs)
            }
        }
        Suite::Consistency => verify::consistency_suite(&sc, &ConsistencyOptions::default(), run)?,
        Suite::TauK => {
            let Some(&level) = config.k_schedule.first() else {
                bail!("the tau_k suite needs a non-empty k_schedule");
            };
            verify::tau_k_law(&config.noise, config.cutoff, level, config.horizon, run)?
        }
    };
    let file = out.join(format!("verdict_{}.json", suite.name()));
    io::write_json(&file, &json!({"config": config, "verdict": verdict}))?;
    println!(
        "{}",
        json!({"status": if verdict.passed { "pass" } else { "fail" }, "suite": suite.name(), "negative_control": broken})
    );
    Ok(verdict_outcome(&[&verdict]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, common, result) = match &cli.command {
        Command::Simulate(c) => ("simulate", c, simulate(c)),
        Command::Noise(c) => ("noise", c, noise(c)),
        Command::Ensemble(c) => ("ensemble", c, ensemble(c)),
        Command::Verify { common, suite, negative_control } => ("verify", common, run_suite(common, *suite, *negative_control)),
    };
    let code = match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(reason)) => {
            eprintln!("{}", json!({"status": "fail", "reason": reason}));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{}", json!({"status": "error", "reason": format!("{e:#}")}));
            return ExitCode::from(2);
        }
    };
    if let Ok((_, out)) = common.load() {
        let _ = sidecar(&out, name, started);
    }
    code
}
