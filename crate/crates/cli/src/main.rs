use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use modegate::config::{OutputFormat, ParityChoice, RunConfig};
use modegate::verify::{VerifyOptions, DEFAULT_SEED};
use modegate::Error;

mod commands;
mod output;

use output::Artifact;

const PRESET_PAPER3ION: &str = include_str!("../presets/paper3ion.toml");

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_VERIFY: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "modegate",
    version,
    about = "Gate design for commensurate ion-chain modes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; the preset is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Preset::Paper3ion)]
    preset: Preset,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[arg(long, global = true, value_enum)]
    parity: Option<ParityArg>,

    /// Seed for the randomized verification instances.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Random instances per randomized verification check.
    #[arg(long, global = true)]
    instances: Option<usize>,

    /// Relative error added to closed-form chi during verification.
    #[arg(long, global = true, hide = true, default_value_t = 0.0)]
    inject_chi_error: f64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Mode frequencies, participation and Lamb-Dicke table.
    Modes,
    /// Harmonic selection, calibration and residuals per parity.
    Design,
    /// |chi / Omega^2 tau^2| versus harmonic l.
    Fig3,
    /// Odd and even pulse shapes over the gate.
    Fig4,
    /// Residual coupling versus a common mode shift, both parities.
    Fig5,
    /// Commensurate gate-time search inside the frequency windows.
    Engineer,
    /// Residual coupling versus a common mode shift.
    Sweep,
    /// Closed forms against quadrature; exits 4 on any failure.
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Preset {
    Paper3ion,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ParityArg {
    Odd,
    Even,
    Both,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn load(cli: &Cli) -> Result<RunConfig, (u8, String)> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| (EXIT_CONFIG, format!("cannot read {}: {e}", path.display())))?,
        None => match cli.preset {
            Preset::Paper3ion => PRESET_PAPER3ION.to_string(),
        },
    };
    let mut config = RunConfig::from_toml(&text).map_err(|e| (exit_code(&e), e.to_string()))?;
    if let Some(p) = cli.parity {
        config.gate.parity = match p {
            ParityArg::Odd => "odd",
            ParityArg::Even => "even",
            ParityArg::Both => "both",
        }
        .into();
    }
    if let Some(f) = cli.format {
        config.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    Ok(config)
}

fn emit(artifact: &Artifact, config: &RunConfig, out: &Option<PathBuf>) -> io::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match config.output.format {
        OutputFormat::Csv => artifact
            .table
            .write_csv(&mut sink, config.output.precision)
            .map_err(io::Error::other)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, &artifact.json)?;
            writeln!(sink)?;
        }
    }
    sink.flush()
}

fn run(cli: &Cli) -> Result<(), (u8, String)> {
    let config = load(cli)?;
    let solver = |e: Error| (exit_code(&e), e.to_string());
    let resolved = config.resolve().map_err(solver)?;
    let parity = ParityChoice::parse(&config.gate.parity).map_err(solver)?;
    let mut verify_failed = false;
    let artifact = match cli.command {
        Command::Modes => commands::modes(&resolved),
        Command::Design => commands::design(&resolved, parity),
        Command::Fig3 => commands::fig3(&resolved, parity),
        Command::Fig4 => commands::fig4(&resolved),
        Command::Fig5 => commands::fig5(&resolved),
        Command::Engineer => commands::engineer(&resolved),
        Command::Sweep => commands::sweep(&resolved, parity),
        Command::Verify => {
            let mut options = VerifyOptions {
                seed: cli.seed.unwrap_or(DEFAULT_SEED),
                chi_perturbation: cli.inject_chi_error,
                ..VerifyOptions::default()
            };
            if let Some(n) = cli.instances {
                options.instances = n;
            }
            commands::verify_run(&resolved, &options).map(|(artifact, report)| {
                verify_failed = !report.passed;
                artifact
            })
        }
    }
    .map_err(solver)?;
    emit(&artifact, &config, &cli.out).map_err(|e| (EXIT_IO, format!("write failed: {e}")))?;
    if verify_failed {
        return Err((EXIT_VERIFY, "verification failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("modegate: {msg}");
            ExitCode::from(code)
        }
    }
}
