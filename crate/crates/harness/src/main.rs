use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afba::momentum::check_momentum_condition;
use afba::MomentumSchedule;
use afba_harness::report::{self, crossing_label, iterations_to_accuracy};
use afba_harness::{ExperimentConfig, HarnessError, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afba-harness", version, about = "Run and compare accelerated forward-backward schedules")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// Directory that relative dataset paths are resolved against.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    max_iters: Option<u64>,
    /// Split seed for SVM data, generator seed for synthetic problems.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trace_every: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single schedule.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Schedule spec (`fba`, `fista`, `cd:ALPHA`, `gn:OMEGA,A,B`);
        /// defaults to the first one in the config.
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Run every configured schedule; write traces, summary and manifest.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Iterations needed to reach each accuracy threshold (per-iteration
    /// accuracy).
    Table {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scaled-rate diagnostics and momentum-condition reports.
    Rates {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the momentum condition for one schedule.
    CheckSchedule {
        schedule: String,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
    },
}

fn load(path: &Path, flags: &Flags) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(path)?;
    let overrides = Overrides {
        data_dir: flags.data_dir.clone(),
        out_dir: flags.out_dir.clone(),
        max_iters: flags.max_iters,
        seed: flags.seed,
        trace_every: flags.trace_every,
    };
    cfg.apply(&overrides)?;
    Ok(cfg)
}

fn print_summary(outcome: &afba_harness::CompareOutcome) {
    let cfg = &outcome.experiment.config;
    println!("L={} beta={} F_ref={}", outcome.experiment.problem().lipschitz(), outcome.beta, outcome.reference.f_ref);
    for run in &outcome.runs {
        let trace = &run.output.trace;
        let last = trace.last().expect("at least one row");
        let crossings: Vec<String> =
            iterations_to_accuracy(trace, &cfg.accuracy_thresholds).into_iter().map(crossing_label).collect();
        println!(
            "{:<28} k={:<7} fv={:.10e} nofv={} residual={:.3e}{}",
            trace.schedule_id,
            last.k,
            last.fv,
            last.nofv.map_or("-".into(), |v| format!("{v:.3e}")),
            run.residual,
            if crossings.is_empty() { String::new() } else { format!(" k_at=[{}]", crossings.join(",")) }
        );
    }
    println!("wrote {}", cfg.output_dir.display());
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Solve { config, schedule } => {
            let mut cfg = load(config, &cli.flags)?;
            let chosen = schedule.clone().unwrap_or_else(|| cfg.schedules[0].clone());
            cfg.schedules = vec![chosen];
            cfg.validate()?;
            print_summary(&afba_harness::run_compare(cfg)?);
        }
        Command::Compare { config } => print_summary(&afba_harness::run_compare(load(config, &cli.flags)?)?),
        Command::Table { config } => print_summary(&afba_harness::run_table(load(config, &cli.flags)?)?),
        Command::Rates { config } => {
            let (outcome, reports) = afba_harness::run_rates(load(config, &cli.flags)?)?;
            print_summary(&outcome);
            for rep in reports {
                println!();
                report::write_key_values(std::io::stdout().lock(), &rep.to_key_values())
                    .map_err(|source| HarnessError::Write { path: "<stdout>".into(), source })?;
            }
        }
        Command::CheckSchedule { schedule, horizon } => {
            let schedule: MomentumSchedule = schedule.parse()?;
            if *horizon < afba::momentum::MIN_HORIZON {
                return Err(HarnessError::Config(format!("horizon must be at least {}", afba::momentum::MIN_HORIZON)));
            }
            if !schedule.rate_theory_applies() {
                log::warn!("{schedule}: omega = 1 with a >= 1/2 lies outside the convergence theory");
            }
            let rep = check_momentum_condition(&schedule, *horizon);
            let mut entries = vec![("schedule".to_string(), schedule.id())];
            entries.extend(rep.to_key_values());
            report::write_key_values(std::io::stdout().lock(), &entries)
                .map_err(|source| HarnessError::Write { path: "<stdout>".into(), source })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
