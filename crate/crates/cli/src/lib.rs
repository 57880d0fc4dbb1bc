//! Command-line front end for riemflow: run scenarios from TOML configs,
//! validate configs, run the operator property suites, list the registry.

pub mod config;
pub mod error;
pub mod props;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use riemflow::experiments::{registry, run_scenario, RunOptions, ScenarioReport};
use riemflow::io::{read_checkpoint, write_json};

pub use config::RunConfig;
pub use error::CliError;

/// Environment variable overriding the output directory of `run`.
pub const OUTPUT_DIR_ENV: &str = "RIEMFLOW_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECKS_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "riemflow", version, about = "Level-set curvature flows on Riemannian surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        /// Continue from `checkpoint.rfld` in the output directory.
        #[arg(long)]
        resume: bool,
        /// Overrides both the config and the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Parse a config and resolve its scenario without running it.
    Validate { config: PathBuf },
    /// Run the operator property suites.
    Props {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Trials per manifold for translation invariance.
        #[arg(long, default_value_t = 200)]
        transport_trials: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the scenario registry.
    List,
}

/// Parse `args` (including the program name) and execute; returns the exit code.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, resume, output_dir } => cmd_run(&config, resume, output_dir),
        Command::Validate { config } => cmd_validate(&config),
        Command::Props { seed, trials, transport_trials, output } => {
            cmd_props(seed, trials, transport_trials, output.as_deref())
        }
        Command::List => {
            cmd_list();
            Ok(EXIT_OK)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn init_logging(level: log::LevelFilter) {
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().format_timestamp(None).try_init();
}

/// Flag > environment > config > `riemflow-out/<scenario>`.
pub fn resolve_output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("riemflow-out").join(&cfg.scenario.name))
}

fn cmd_run(path: &Path, resume: bool, flag: Option<PathBuf>) -> Result<i32, CliError> {
    let cfg = RunConfig::load(path)?;
    init_logging(cfg.log_level);
    cfg.scenario.validate()?;
    let out = resolve_output_dir(flag, &cfg);
    let resume = if resume {
        let cp_path = out.join(riemflow::experiments::CHECKPOINT_FILE);
        log::info!("resuming from {}", cp_path.display());
        Some(read_checkpoint(&cp_path)?)
    } else {
        None
    };
    let interrupt = Arc::new(AtomicBool::new(false));
    let flag = interrupt.clone();
    if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
        log::warn!("could not install the interrupt handler: {e}");
    }
    log::info!("running `{}` into {}", cfg.scenario.name, out.display());
    let opts = RunOptions {
        output_dir: Some(out.clone()),
        checkpoint_every: cfg.checkpoint_every,
        resume,
        interrupt: Some(interrupt),
    };
    let report = run_scenario(&cfg.scenario, &opts);
    print_report(&report);
    Ok(exit_code(&report, &out))
}

fn exit_code(report: &ScenarioReport, out: &Path) -> i32 {
    if report.interrupted {
        eprintln!(
            "interrupted at t = {}; checkpoint in {}, continue with --resume",
            report.final_time,
            out.display()
        );
        return EXIT_ERROR;
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    if report.passed {
        EXIT_OK
    } else {
        EXIT_CHECKS_FAILED
    }
}

fn print_report(report: &ScenarioReport) {
    println!(
        "{}: {} steps, dt = {:.3e}, t = {}",
        report.scenario, report.steps, report.dt, report.final_time
    );
    for c in &report.checks {
        let tag = if c.recorded_only {
            "INFO"
        } else if c.passed {
            "PASS"
        } else {
            "FAIL"
        };
        println!("  {tag} {}: {}", c.name, c.message);
    }
}

fn cmd_validate(path: &Path) -> Result<i32, CliError> {
    let cfg = RunConfig::load(path)?;
    cfg.scenario.validate()?;
    println!(
        "ok: `{}` on {} at {}x{}, {} check(s)",
        cfg.scenario.name,
        cfg.scenario.manifold.name(),
        cfg.scenario.resolution[0],
        cfg.scenario.resolution[1],
        cfg.scenario.checks.len()
    );
    Ok(EXIT_OK)
}

fn cmd_props(seed: u64, trials: usize, transport_trials: usize, output: Option<&Path>) -> Result<i32, CliError> {
    let report = props::run_props(seed, trials, transport_trials)?;
    match output {
        Some(p) => {
            write_json(p, &report)?;
            for s in &report.suites {
                println!(
                    "{} {} [{}]: {} trials, {} skipped, worst ratio {:.3e}",
                    if s.passed { "PASS" } else { "FAIL" },
                    s.check,
                    s.operator,
                    s.trials,
                    s.skipped,
                    s.worst_ratio
                );
            }
            for f in &report.f_class {
                println!(
                    "{} f_class [{}]: final {:.3e} (threshold {:.0e})",
                    if f.passed { "PASS" } else { "FAIL" },
                    f.operator,
                    f.final_value,
                    f.threshold
                );
            }
        }
        None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_CHECKS_FAILED })
}

fn cmd_list() {
    for sc in registry() {
        let checks: Vec<String> = sc.checks.iter().map(|c| c.name()).collect();
        println!(
            "{:<36} {:<12} {:<9} {}",
            sc.name,
            sc.manifold.name(),
            sc.operator.kind.to_string(),
            checks.join(",")
        );
    }
}
