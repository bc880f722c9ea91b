use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fdcf_core::experiment::{drop_inputs, emit_outputs, run_experiment, ExperimentSpec, Scale};
use fdcf_core::validate::run_validation;
use fdcf_core::{fixture, Error};

const THREADS_ENV: &str = "FDCF_THREADS";

#[derive(Parser)]
#[command(name = "fdcf", version, about = "Full-duplex cell-free beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write the figure data.
    Run(ExperimentArgs),
    /// Run the desk-scale invariant suite.
    Validate,
    /// Write the channel realizations of each drop as text fixtures.
    DumpChannels(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Comma-separated scheme names, e.g. `proposed,separate_ota`.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; the FDCF_THREADS environment variable takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

impl ExperimentArgs {
    fn spec(&self) -> Result<ExperimentSpec, Error> {
        let scale = self.scale.map(Scale::from);
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path, scale)?,
            None => ExperimentSpec::new(scale.unwrap_or(Scale::Paper)),
        };
        let overrides = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("drops", self.drops.map(|v| v.to_string())),
            ("iters", self.iters.map(|v| v.to_string())),
            ("schemes", self.schemes.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                spec.set(key, &v)?;
            }
        }
        if let Ok(v) = std::env::var(THREADS_ENV) {
            spec.set("threads", &v)
                .map_err(|_| Error::Config { field: THREADS_ENV.into(), msg: format!("expected a thread count, got `{v}`") })?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn run(args: &ExperimentArgs) -> Result<(), Error> {
    let spec = args.spec()?;
    let result = run_experiment(&spec)?;
    let files = emit_outputs(&result, &spec)?;
    println!("drops: {} ok, {} failed", result.drops_ok, result.failures.len());
    for f in &result.failures {
        let scheme = f.scheme.map_or("channel generation".to_string(), |s| s.to_string());
        eprintln!("drop {} failed in {scheme}: {}", f.drop, f.message);
    }
    for s in &result.schemes {
        println!("{:<14} final sum rate {:8.3} ± {:.3} bits/s/Hz", s.scheme.to_string(), s.final_mean(), s.final_sem());
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    if result.drops_ok == 0 {
        return Err(Error::NonFinite { iteration: 0, what: "every drop failed".into() });
    }
    Ok(())
}

fn dump_channels(args: &ExperimentArgs) -> Result<(), Error> {
    let spec = args.spec()?;
    let dir = &spec.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for d in 0..spec.drops as u64 {
        let (chan, _, _) = drop_inputs(&spec.base, d)?;
        let path = dir.join(format!("channels_drop{d:04}.txt"));
        std::fs::write(&path, fixture::dump(&chan)).map_err(|e| Error::io(&path, e))?;
        println!("{} {}", chan.checksum(), path.display());
    }
    Ok(())
}

fn validate() -> bool {
    let checks = run_validation();
    let passed = checks.iter().filter(|c| c.passed).count();
    for c in &checks {
        println!("[{}] {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{passed}/{} checks passed", checks.len());
    passed == checks.len()
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_config() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::DumpChannels(args) => dump_channels(args),
        Command::Validate => {
            return if validate() { ExitCode::SUCCESS } else { ExitCode::from(2) };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
