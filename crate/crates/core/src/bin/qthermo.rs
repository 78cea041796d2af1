use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qthermo::cli::{self, Figure, RunConfig, Session};

#[derive(Parser)]
#[command(
    name = "qthermo",
    version,
    about = "Nonequilibrium qubit thermometry runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Also write SVG plots
    #[arg(long, global = true)]
    svg: bool,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Bath temperature
    #[arg(long, global = true)]
    temp: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Single trajectory to trajectory.csv
    Trajectory,
    /// Witness and QFI across the mixing parameter
    SweepAlpha,
    /// Fisher information across temperature
    SweepTemperature,
    /// Kernel table to kernels.csv
    DumpKernels,
    /// Data and plots of one figure (fig1, fig2, fig3)
    Reproduce { figure: Figure },
}

fn config(c: &Common) -> qthermo::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &c.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = c.workers {
        cfg.workers = v;
    }
    cfg.svg |= c.svg;
    cfg.alpha = c.alpha.unwrap_or(cfg.alpha);
    cfg.temperature = c.temp.unwrap_or(cfg.temperature);
    cfg.epsilon = c.epsilon.unwrap_or(cfg.epsilon);
    cfg.eta = c.eta.unwrap_or(cfg.eta);
    cfg.t_end = c.t_end.unwrap_or(cfg.t_end);
    cfg.dt = c.dt.unwrap_or(cfg.dt);
    Ok(cfg)
}

fn run(args: Cli) -> qthermo::Result<Vec<PathBuf>> {
    let cfg = config(&args.common)?;
    let workers = cfg.workers;
    let mut session = Session::new(cfg)?;
    cli::with_workers(workers, move || match args.command {
        Command::Trajectory => cli::run_trajectory(&mut session),
        Command::SweepAlpha => cli::run_sweep_alpha(&mut session),
        Command::SweepTemperature => cli::run_sweep_temperature(&mut session),
        Command::DumpKernels => cli::dump_kernels(&mut session),
        Command::Reproduce { figure } => cli::reproduce(&mut session, figure),
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            let mut out = std::io::stdout().lock();
            for p in paths {
                // a closed pipe is not an error of the run
                if writeln!(out, "{}", p.display()).is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qthermo: {e}");
            ExitCode::FAILURE
        }
    }
}
