use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qispline::studies::{run_dim_bound_check, run_h_study, run_mesh_report, run_p_study, StudyConfig, StudyReport};

#[derive(Parser)]
#[command(name = "qispline", version, about = "Quasi-interpolation convergence and mesh studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study and write its table as CSV.
    Study(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Dyadic h-refinement with fitted convergence order.
    H,
    /// Degree elevation on a fixed mesh with exponential fit.
    P,
    /// Mesh-regularity constants and bound checks.
    Mesh,
    /// Cardinality bounds of the generating system.
    Dim,
}

#[derive(clap::Args)]
struct StudyArgs {
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed given in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(args: &StudyArgs) -> qispline::Result<StudyReport> {
    let mut cfg = StudyConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    match args.kind {
        Kind::H => run_h_study(&cfg),
        Kind::P => run_p_study(&cfg),
        Kind::Mesh => run_mesh_report(&cfg),
        Kind::Dim => run_dim_bound_check(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Study(args) = cli.command;
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let report = match run(&args).and_then(|r| r.table.write(&args.out).map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for (name, value) in &report.summary {
        println!("{name} = {}", qispline::studies::format_g17(*value));
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
