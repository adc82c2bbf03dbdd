//! Command-line front end: parses a study configuration, runs the matching
//! study, and writes its outputs.

use clap::{Args, Parser, Subcommand};
use nh::experiments::{dump_study_mesh, run_study, StudyConfig, StudyKind};
use nh::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nh",
    version,
    about = "Eigenvalue-correction studies on perturbed rectangles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-dimensional two-subspace cluster family
    Abstract(RunArgs),
    /// Mesh convergence on the unperturbed rectangle
    Rect(RunArgs),
    /// Boundary and volume corrections along a perturbation sweep
    Perturb(RunArgs),
    /// Oscillating-boundary sweep separating the two first-order forms
    Sharpness(RunArgs),
    /// Cell-problem refinement study
    Cell(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Study configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` from the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent sweep levels (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the study's most refined mesh to this path
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
}

impl Command {
    fn kind(&self) -> StudyKind {
        match self {
            Command::Abstract(_) => StudyKind::Abstract,
            Command::Rect(_) => StudyKind::Rect,
            Command::Perturb(_) => StudyKind::Perturb,
            Command::Sharpness(_) => StudyKind::Sharpness,
            Command::Cell(_) => StudyKind::Cell,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Abstract(a)
            | Command::Rect(a)
            | Command::Perturb(a)
            | Command::Sharpness(a)
            | Command::Cell(a) => a,
        }
    }
}

fn run(cli: &Cli) -> nh::Result<()> {
    let args = cli.command.args();
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let cfg = StudyConfig::read(&args.config)?;
    let expected = cli.command.kind();
    if cfg.kind() != expected {
        return Err(Error::Config(format!(
            "config declares a {} study but the {} subcommand was invoked",
            cfg.kind().name(),
            expected.name()
        )));
    }
    if let Some(path) = &args.dump_mesh {
        dump_study_mesh(&cfg, path)?;
        eprintln!("mesh written to {}", path.display());
    }
    let out = args.out.clone().or_else(|| cfg.out.clone()).ok_or_else(|| {
        Error::Config("no output directory: pass --out or set `out` in [study]".into())
    })?;
    let summary = run_study(&cfg, &out)?;
    print!("{summary}");
    eprintln!("outputs written to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
