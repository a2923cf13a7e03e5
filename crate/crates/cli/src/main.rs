use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use strainamp_cli::report::{summarize, RunFile};
use strainamp_cli::{run, sweep, CliError, Result, RunConfig, SweepConfig};
use strainamp_core::verify::{self, Faults, Level};

#[derive(Parser)]
#[command(
    name = "strainamp",
    version,
    about = "Strain dynamics simulator and verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a key = value config.
    Run { config: PathBuf },
    /// Run the self-check suite.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Inject a known defect to confirm the suite catches it.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Sweep amplitude and viscosity ranges, writing one CSV row per point.
    Sweep {
        config: PathBuf,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Summarize a JSON-lines run file.
    Report { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    ProjectionSign,
}

fn read_config(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("STRAINAMP_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "STRAINAMP_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot set thread count: {e}")))
}

fn execute(cli: Cli) -> Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::parse(&read_config(&config)?)?;
            Ok(run::cmd_run(&cfg)?.outcome.exit_code())
        }
        Command::Verify {
            level,
            inject_fault,
        } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let faults = Faults {
                flip_projection_sign: matches!(inject_fault, Some(FaultArg::ProjectionSign)),
            };
            let report = verify::run_suite(level, faults)?;
            println!("{report}");
            if report.all_passed() {
                Ok(0)
            } else {
                let names: Vec<_> = report.failures().map(|c| c.name).collect();
                eprintln!("failed: {}", names.join(", "));
                Ok(1)
            }
        }
        Command::Sweep { config, jobs } => {
            if jobs == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            let cfg = SweepConfig::parse(&read_config(&config)?)?;
            let rows = sweep::sweep(&cfg, jobs)?;
            let out = RunConfig::from_raw(&cfg.base)?.output_path;
            match out {
                Some(path) => {
                    let file =
                        fs::File::create(&path).map_err(|e| CliError::io(path.display(), e))?;
                    sweep::write_csv(&rows, BufWriter::new(file))?;
                }
                None => sweep::write_csv(&rows, io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Report { file } => {
            let summary = summarize(&RunFile::read(&file)?);
            let mut out = io::stdout().lock();
            writeln!(out, "{summary}").map_err(|e| CliError::io("stdout", e))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
