use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ypq_cli::commands::{self, RunConfig};
use ypq_cli::{exit, json};

#[derive(Parser)]
#[command(name = "ypq", version, about = "Numerical checks on the Y^{p,q} Sasaki-Einstein spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every geometric and dynamical check and report residuals.
    Verify(Common),
    /// Integrate one geodesic and report the drift of the first integrals.
    Integrate(Common),
    /// Numeric rank of the Jacobian of the first integrals at random states.
    Rank(Common),
    /// Toric data and Legendre-duality residuals.
    Toric(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    q: u32,
    #[arg(long, default_value_t = commands::DEFAULT_SEED)]
    seed: u64,
    /// Sample points per suite (trajectory sample intervals for `integrate`).
    #[arg(long, default_value_t = commands::DEFAULT_SAMPLES)]
    samples: usize,
    /// Tolerance scale: checks use their nominal tolerance times tol/1e-7.
    #[arg(long, default_value_t = commands::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = commands::DEFAULT_RTOL)]
    rtol: f64,
    #[arg(long, default_value_t = commands::DEFAULT_ATOL)]
    atol: f64,
    #[arg(long = "t-end", default_value_t = commands::DEFAULT_T_END, allow_negative_numbers = true)]
    t_end: f64,
    #[arg(long, default_value_t = commands::DEFAULT_POINTS)]
    points: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Trajectory CSV (integrate only).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Initial state JSON `{"x": [...], "p": [...]}` or `{"x": [...], "xdot": [...]}`.
    #[arg(long)]
    init: Option<PathBuf>,
}

impl From<Common> for RunConfig {
    fn from(c: Common) -> Self {
        RunConfig {
            p: c.p,
            q: c.q,
            seed: c.seed,
            samples: c.samples,
            tol: c.tol,
            rtol: c.rtol,
            atol: c.atol,
            t_end: c.t_end,
            points: c.points,
            json: c.json,
            csv: c.csv,
            init: c.init,
        }
    }
}

fn emit<T: Serialize>(report: &T, path: &Option<PathBuf>) -> Result<(), String> {
    let text = json::to_string(report);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> Result<bool, String> {
    match cmd {
        Command::Verify(c) => {
            let cfg = RunConfig::from(c);
            let r = commands::verify(&cfg).map_err(|e| e.to_string())?;
            emit(&r, &cfg.json)?;
            Ok(r.pass)
        }
        Command::Toric(c) => {
            let cfg = RunConfig::from(c);
            let r = commands::toric(&cfg).map_err(|e| e.to_string())?;
            emit(&r, &cfg.json)?;
            Ok(r.pass)
        }
        Command::Rank(c) => {
            let cfg = RunConfig::from(c);
            let r = commands::rank(&cfg).map_err(|e| e.to_string())?;
            emit(&r, &cfg.json)?;
            Ok(r.pass)
        }
        Command::Integrate(c) => {
            let cfg = RunConfig::from(c);
            let (r, tr) = commands::integrate(&cfg).map_err(|e| e.to_string())?;
            if let Some(path) = &cfg.csv {
                let f = std::fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
                commands::write_csv(&tr, f).map_err(|e| e.to_string())?;
            }
            if let Some(exit) = &r.chart_exit {
                eprintln!("chart exit at t = {}: {} (x = {:?})", exit.t, exit.reason, exit.x);
            }
            emit(&r, &cfg.json)?;
            Ok(r.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG_ERROR as u8 } else { 0 });
        }
    };
    if let Err(e) = ypq_cli::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(exit::CONFIG_ERROR as u8);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::from(exit::PASS as u8),
        Ok(false) => ExitCode::from(exit::CHECK_FAILED as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::CONFIG_ERROR as u8)
        }
    }
}
