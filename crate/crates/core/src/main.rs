use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optoheat::config::{ExperimentConfig, Variant};
use optoheat::hybrid::hybridize;
use optoheat::runner::{self, Execution, Overrides};
use optoheat::steadystate::Backend;
use optoheat::validation;
use optoheat::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "optoheat", version, about = "Vibrational heating and heat transfer in driven plasmonic-photonic cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state at the config's base point.
    Steady(RunArgs),
    /// One steady state per value of the config's sweep block.
    Sweep(RunArgs),
    /// Power spectral densities on the config's psd grid.
    Psd(RunArgs),
    /// Hybrid-mode frequencies, couplings and decay rates.
    Hybridize(RunArgs),
    /// Runs the built-in self-checks.
    Validate {
        /// Skip the K = 5 and K = 6 checks.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Output file; defaults to the config's `output` entry, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Total-excitation cap K.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    backend: Option<Backend>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::UnknownMode(_)
            | Error::InvalidLayout(_)
            | Error::Hybridization(_) => EXIT_CONFIG,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    Overrides {
        cap: args.cap,
        variant: args.variant,
        backend: args.backend,
    }
    .apply(&mut cfg);
    cfg.validate()?;
    if let Some(n) = args.threads {
        set_threads(n)?;
    }
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure {
            code: EXIT_CONFIG,
            message: format!("cannot size thread pool: {e}"),
        })
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<(), Failure> {
    log::warn!("built without the `parallel` feature; --threads is ignored");
    Ok(())
}

fn output(args: &RunArgs, cfg: &ExperimentConfig) -> Result<Box<dyn Write>, Failure> {
    let path = args.out.as_ref().or(cfg.output.as_ref());
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(p) => open(p).map_err(|e| Failure {
            code: EXIT_SOLVER,
            message: format!("cannot write {}: {e}", p.display()),
        }),
    }
}

fn open(path: &Path) -> io::Result<Box<dyn Write>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Steady(args) => {
            let cfg = load(&args)?;
            let row = runner::steady(&cfg)?;
            runner::write_rows(&[row], output(&args, &cfg)?)?;
        }
        Command::Sweep(args) => {
            let cfg = load(&args)?;
            let rows = runner::sweep(&cfg, Execution::Parallel)?;
            runner::write_rows(&rows, output(&args, &cfg)?)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                return Err(Failure {
                    code: EXIT_SOLVER,
                    message: format!("{failed} of {} sweep points failed", rows.len()),
                });
            }
        }
        Command::Psd(args) => {
            let cfg = load(&args)?;
            let spectra = runner::psd_run(&cfg)?;
            runner::write_spectra(&spectra, output(&args, &cfg)?)?;
            let failed: usize = spectra.iter().map(|s| s.failures.len()).sum();
            if failed > 0 {
                return Err(Failure {
                    code: EXIT_SOLVER,
                    message: format!("{failed} spectrum points failed"),
                });
            }
        }
        Command::Hybridize(args) => {
            let cfg = load(&args)?;
            let (params, _) = hybridize(&cfg.setup()?.to_model()?)?;
            let mut w = csv::Writer::from_writer(output(&args, &cfg)?);
            w.write_record(["quantity", "value"]).map_err(Error::from)?;
            for (name, value) in params.table() {
                w.write_record([name, &value.to_string()]).map_err(Error::from)?;
            }
            w.flush().map_err(Error::from)?;
        }
        Command::Validate { quick } => {
            let checks = validation::run_suite(!quick);
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status}  {:width$}  {}", c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Failure {
                    code: EXIT_VALIDATION,
                    message: format!("{failed} of {} checks failed", checks.len()),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
