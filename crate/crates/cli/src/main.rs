//! Command-line front door for the open-ended cooperative learning engine.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opencoop_core::engine::SolverFlag;
use opencoop_core::error::Error;
use opencoop_core::{analysis, config::RunConfig, csv, engine, monitor, seeds, solver};

const CONFIG_KEYS: &str = "Config file keys and defaults (TOML):
  seed = 0                     run seed (u64)
  generations = 60             generations to run
  pop_cap = 50                 population size cap
  evict_window = 10            eviction draws uniformly from this many oldest
  solver_flag = \"sv\"          sv (graphic Shapley value) | r (reward)
  [env]
  kind = \"two-stage\"          one-shot | two-stage
  conventions = [..]           REQUIRED: common payoff per matched convention
  off_payoff = 0.0             payoff for mismatched actions (< min convention)
  noise_std = 0.0              per-episode Gaussian evaluator noise
  episodes = 64                episodes per pair when noise_std > 0
  [oracle]
  alpha = 1.0                  weight of the individual (self-play) term
  ratio = \"1:3\"               individual : cooperative draws per round
  inner_updates = 10           ascent rounds per generation
  step_size = 0.1              projected-gradient step
  k = 3                        preference-rank acceptance threshold
  max_restarts = 3             perturbed retries when the rank test fails
  exact_one_shot_br = false    exact linear best response (one-shot, alpha 0)
  [solver]
  samples = max(1000, 200n)    Monte Carlo permutations (omit for default)
  damping = 0.85               pagerank damping factor
  tol = 1e-10                  pagerank fixed-point tolerance
  max_iter = 10000             pagerank iteration cap
  [sampler]
  c = 0.5                      exploration constant
  [init]
  size = 1                     initial population size
  style = \"stochastic\"        stochastic | deterministic | convention |
                               spectrum | spectrum-uniform-last
  uniform_first = true         seed member 0 as the uniform strategy
";

#[derive(Parser)]
#[command(
    name = "opencoop",
    about = "Open-ended cooperative meta-game learning engine",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment from a config file into a run directory.
    #[command(after_long_help = CONFIG_KEYS)]
    Run {
        /// TOML config file (see README for keys and defaults).
        #[arg(long)]
        config: PathBuf,
        /// Seed override; beats the config file value and is recorded in
        /// config.snapshot.
        #[arg(long)]
        seed: Option<u64>,
        /// Run directory to create (default `run`).
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Analyze a run directory into centrality-matrix, series and
    /// convergence reports.
    Analyze {
        /// Run directory produced by `run`.
        run_dir: PathBuf,
        /// Output directory for report files (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rank threshold for the incompatibility verdict (default: the
        /// run config's oracle.k).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Solve a standalone payoff matrix into `id,sigma_hat,sigma,shapley,phi`.
    Solve {
        /// Payoff CSV: `n=<count>` header then n rows of n values.
        payoff_csv: PathBuf,
        /// Solver flag: `sv` (graphic Shapley value) or `r` (reward).
        #[arg(long, default_value = "sv")]
        flag: String,
        /// Seed for the Monte Carlo permutation sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-play a population snapshot against a probe snapshot.
    Crossplay {
        /// Population snapshot CSV.
        population: PathBuf,
        /// Probe snapshot CSV.
        probes: PathBuf,
        /// Config file providing the environment (env.* keys).
        #[arg(long)]
        config: PathBuf,
        /// Seed for noisy evaluation (ignored when env.noise_std = 0).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Validation and usage problems exit 2; runtime failures exit 1.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidConfig { .. }
            | Error::Parse { .. }
            | Error::BadConvention { .. }
            | Error::BadDimensions { .. }
            | Error::EmptyMatrix
            | Error::ShapeMismatch { .. }
            | Error::NotAPermutation { .. },
        ) => 2,
        _ => 1,
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_run(config_path: &Path, seed: Option<u64>, out: &Path) -> anyhow::Result<()> {
    let mut config = RunConfig::from_file(config_path)?;
    config.override_seed(seed);
    let engine_cfg = config.resolve()?;
    let snapshot = config.snapshot_toml()?;
    let trace = engine::run_to_dir(engine_cfg, &snapshot, out)?;
    println!(
        "completed {} generations into {}",
        trace.records.len(),
        out.display()
    );
    Ok(())
}

fn cmd_analyze(run_dir: &Path, out: Option<&Path>, k: Option<usize>) -> anyhow::Result<()> {
    let k = match k {
        Some(k) => k,
        None => {
            let snapshot = RunConfig::from_file(&run_dir.join("config.snapshot"))?;
            snapshot.oracle.k
        }
    };
    let loaded = engine::read_run_dir(run_dir)?;
    for (t, reason) in &loaded.skipped {
        eprintln!("warning: skipping generation {t}: {reason}");
    }
    if loaded.total_records == 0 {
        anyhow::bail!(Error::Parse {
            line: 0,
            message: "trace.jsonl holds no records".into(),
        });
    }
    let skipped_fraction = loaded.skipped.len() as f64 / loaded.total_records as f64;

    let out_dir = out.unwrap_or(run_dir);
    std::fs::create_dir_all(out_dir)?;
    let matrix = analysis::centrality_matrix(&loaded.trace)?;
    std::fs::write(
        out_dir.join("centrality_matrix.csv"),
        csv::write_centrality_matrix_csv(&matrix),
    )?;
    let series = analysis::series(&loaded.trace);
    std::fs::write(out_dir.join("series.csv"), csv::write_series_csv(&series))?;

    let verdict = analysis::incompatibility_verdict(&loaded.trace, k)?;
    let mut verdict_text = format!("rank_within_k_fraction={}\nk={k}\n", csv::fmt_float(verdict));
    match monitor::convergence_monitor(&loaded.trace, k) {
        Ok(report) => {
            std::fs::write(
                out_dir.join("convergence_report.txt"),
                monitor::render_report(&report),
            )?;
            verdict_text.push_str(&format!("monotonic={}\n", report.monotonic));
        }
        Err(Error::TraceTooShort { got }) => {
            std::fs::write(
                out_dir.join("convergence_report.txt"),
                format!("insufficient_records={got}\n"),
            )?;
        }
        Err(e) => return Err(e.into()),
    }
    std::fs::write(out_dir.join("verdict.txt"), &verdict_text)?;
    print!("{verdict_text}");

    if skipped_fraction > 0.10 {
        anyhow::bail!(
            "skipped {:.0}% of generations ({} of {})",
            skipped_fraction * 100.0,
            loaded.skipped.len(),
            loaded.total_records
        );
    }
    Ok(())
}

fn cmd_solve(
    payoff_csv: &Path,
    flag: &str,
    seed: u64,
    out: &Option<PathBuf>,
) -> anyhow::Result<()> {
    let flag: SolverFlag = flag.parse()?;
    let text = std::fs::read_to_string(payoff_csv)?;
    let payoff = csv::read_payoff_csv(&text)?;
    if payoff.n() < 2 {
        anyhow::bail!(Error::InvalidConfig {
            field: "payoff_csv".into(),
            message: format!("solver needs at least 2 strategies, got {}", payoff.n()),
        });
    }
    let cfg = solver::SolverConfig::default();
    let report = match flag {
        SolverFlag::Sv => {
            let mut rng = seeds::stream(seed, seeds::tag::SOLVER, 0);
            solver::graphic_shapley_solver(&payoff, &cfg, &mut rng)?
        }
        SolverFlag::R => solver::reward_solver(&payoff, &cfg)?,
    };
    write_or_print(out, &csv::write_solver_csv(&report))
}

fn cmd_crossplay(
    population: &Path,
    probes: &Path,
    config: &Path,
    seed: u64,
    out: &Option<PathBuf>,
) -> anyhow::Result<()> {
    let run_config = RunConfig::from_file(config)?;
    let engine_cfg = run_config.resolve()?;
    let env = engine_cfg.env;
    let pop = csv::read_population_csv(&std::fs::read_to_string(population)?)?;
    let probe_set = csv::read_population_csv(&std::fs::read_to_string(probes)?)?;
    if probe_set.is_empty() {
        anyhow::bail!(Error::InvalidConfig {
            field: "probes".into(),
            message: "probe snapshot holds no strategies".into(),
        });
    }
    for s in pop.iter().chain(&probe_set) {
        s.params
            .validate(env.actions(), env.kind())
            .map_err(anyhow::Error::from)?;
    }
    let rows = analysis::crossplay(&pop, &probe_set, &env, seed)?;
    let probe_ids: Vec<_> = probe_set.iter().map(|s| s.id).collect();
    write_or_print(out, &csv::write_crossplay_csv(&probe_ids, &rows))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, out } => cmd_run(config, *seed, out),
        Command::Analyze { run_dir, out, k } => cmd_analyze(run_dir, out.as_deref(), *k),
        Command::Solve {
            payoff_csv,
            flag,
            seed,
            out,
        } => cmd_solve(payoff_csv, flag, *seed, out),
        Command::Crossplay {
            population,
            probes,
            config,
            seed,
            out,
        } => cmd_crossplay(population, probes, config, *seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
