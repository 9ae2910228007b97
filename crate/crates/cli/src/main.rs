mod commands;
mod manifest;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Output};
use manifest::{Artifact, Format, Manifest, Settings, SWEEP_PRESET};

#[derive(Parser, Debug)]
#[command(name = "engel-lab", version, about = "Build, verify and probe Engel structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run manifest; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    kappa: Option<f64>,
    /// Integration time.
    #[arg(short = 'T', long = "time", global = true)]
    t_total: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rank tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of sample points for verification.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Number of orbits used by the type estimator.
    #[arg(long, global = true)]
    orbits: Option<usize>,
    /// Directory receiving one file per artifact instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Check the Engel rank conditions and the Cauchy line.
    Verify,
    /// Estimate the global type of the characteristic action.
    Classify,
    /// Integrate one characteristic with its transport on E/W.
    Orbit,
    /// Holonomy of a closed characteristic.
    Holonomy,
    /// Random D-curves in the Darboux model and their endpoint regions.
    Rigidity,
    /// Curvature sweep (`--preset kappa-sweep`) or verification plus classification of a preset.
    Report,
    /// Produce every artifact listed in the manifest.
    Run,
}

impl Cli {
    fn flags(&self) -> Manifest {
        Manifest {
            preset: self.preset.clone(),
            kappa: self.kappa,
            t_total: self.t_total,
            dt: self.dt,
            tol: self.tol,
            seed: self.seed,
            trials: self.trials,
            samples: self.samples,
            orbits: self.orbits,
            out: self.out.clone(),
            format: self.format,
            artifacts: None,
        }
    }
}

fn artifacts(cmd: Command, m: &Manifest) -> Result<Vec<Artifact>, Failure> {
    Ok(match cmd {
        Command::Verify => vec![Artifact::Verification],
        Command::Classify => vec![Artifact::Classification],
        Command::Orbit => vec![Artifact::Orbits],
        Command::Holonomy => vec![Artifact::Holonomy],
        Command::Rigidity => vec![Artifact::Rigidity],
        Command::Report if m.preset.as_deref().is_none_or(|p| p == SWEEP_PRESET) => vec![Artifact::Sweep],
        Command::Report => vec![Artifact::Verification, Artifact::Classification],
        Command::Run => match &m.artifacts {
            Some(a) if !a.is_empty() => a.clone(),
            _ => return Err(Failure::Config("run needs a manifest with a non-empty `artifacts` list".into())),
        },
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("ENGEL_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("ENGEL_LAB_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn emit(out: &Output, dir: Option<&PathBuf>) -> Result<(), Failure> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| Failure::Config(format!("cannot create {}: {e}", d.display())))?;
            let path = d.join(format!("{}.{}", out.name, out.extension));
            std::fs::write(&path, &out.body).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
        }
        None => match std::io::stdout().write_all(out.body.as_bytes()) {
            // a closed pipe means the reader has seen enough
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Run(format!("cannot write to stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    configure_threads()?;
    let file = match &cli.config {
        Some(p) => Manifest::load(p).map_err(Failure::Config)?,
        None => Manifest::default(),
    };
    let m = file.overlay(cli.flags());
    let format = m.format.unwrap_or(Format::Json);
    let list = artifacts(cli.command, &m)?;
    let settings: Vec<Settings> = list.iter().map(|&a| Settings::resolve(&m, a)).collect::<Result<_, _>>().map_err(Failure::Config)?;
    let mut pass = true;
    for (&a, s) in list.iter().zip(&settings) {
        let out = commands::run(a, s, format)?;
        eprintln!("{}", out.summary);
        emit(&out, m.out.as_ref())?;
        pass &= out.pass;
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
