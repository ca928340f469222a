use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use otsim_core::harness::{
    analytic_accuracy, emit_report, run_experiment, verify_identities, write_report,
    ExperimentConfig, OutputFormat,
};
use otsim_core::protocol::{Mode, ProtocolParams};
use otsim_core::{Beta, Error};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "sim", version, about = "Entanglement attack on cheat-sensitive quantum OT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Honest,
    Epr,
    Naive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Honest => Mode::HonestAlice,
            ModeArg::Epr => Mode::EprAlice,
            ModeArg::Naive => Mode::NaiveCheatAlice,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded Monte Carlo sessions and print a report.
    Run {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        beta: f64,
        /// Transmitted indices per session.
        #[arg(long)]
        n: usize,
        /// Per-index test probability.
        #[arg(long = "test-frac")]
        test_frac: f64,
        #[arg(long = "set-size")]
        set_size: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the reduced-state identity and the correction unitary.
    Verify {
        #[arg(long = "beta-grid", value_delimiter = ',')]
        beta_grid: Option<Vec<f64>>,
    },
    /// Print the exact attack accuracy.
    Oracle {
        #[arg(long)]
        beta: f64,
        #[arg(long = "set-size")]
        set_size: usize,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Invariant(_) | Error::Io(_) | Error::RetriesExhausted { .. } => EXIT_VIOLATION,
        _ => EXIT_USAGE,
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run {
            mode,
            beta,
            n,
            test_frac,
            set_size,
            trials,
            seed,
            format,
            out,
        } => {
            let output_format = match format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            };
            let config = ExperimentConfig {
                params: ProtocolParams {
                    beta: Beta::new(beta)?,
                    n_states: n,
                    test_fraction: test_frac,
                    set_size,
                    mode: mode.into(),
                    seed,
                },
                trials,
                output_format,
                output_path: out.clone(),
            };
            let stats = run_experiment(&config)?;
            if let Some(rate) = stats.test_pass_rate {
                eprintln!(
                    "tests passed: {}/{} ({:.6})",
                    rate.successes, rate.samples, rate.value
                );
            }
            let text = emit_report(&stats, output_format);
            match out {
                Some(path) => write_report(&text, &path)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Verify { beta_grid } => {
            let grid = match beta_grid {
                Some(values) => values
                    .into_iter()
                    .map(Beta::new)
                    .collect::<Result<Vec<_>, _>>()?,
                None => Beta::default_grid(),
            };
            let report = verify_identities(&grid)?;
            for check in &report.checks {
                println!(
                    "beta={:<6} reduced_distance={:.3e} fidelity_deficit={:.3e} ordering={}",
                    check.beta,
                    check.reduced_state_distance,
                    check.fidelity_deficit,
                    if check.ordering_holds { "ok" } else { "FAIL" }
                );
            }
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            if report.passed() {
                println!("all {} checks passed", report.checks.len());
                Ok(0)
            } else {
                Ok(EXIT_VIOLATION)
            }
        }
        Command::Oracle { beta, set_size } => {
            println!("{:.12}", analytic_accuracy(Beta::new(beta)?, set_size)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
