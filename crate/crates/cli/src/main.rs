use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use spectral_ball_cli::config::ProblemConfig;
use spectral_ball_cli::persistence::{read_points, read_solution};
use spectral_ball_cli::{catalog, quadcheck, study};

#[derive(Parser)]
#[command(
    name = "spectral-ball",
    version,
    about = "Spectral Galerkin solver on domains mapped from the unit disk or ball"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study described by a configuration file
    Solve {
        config: PathBuf,
        /// Directory that relative output paths are resolved against
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Tabulate a stored solution at the points of a file
    Eval {
        solution: PathBuf,
        points: PathBuf,
        /// Points are physical coordinates instead of ball coordinates
        #[arg(long)]
        physical: bool,
    },
    /// Report monomial exactness of the disk (d = 2) or ball (d = 3) rule
    Quadcheck { d: usize, q: usize },
    /// List the built-in problems
    Catalog,
}

fn solve(config: PathBuf, out: PathBuf) -> Result<bool> {
    let cfg = ProblemConfig::from_file(&config)?;
    let report = study::run_study(&cfg)?;
    let written = study::write_outputs(&report, &cfg, &out).context("writing outputs")?;
    print!("{}", study::format_table(&report));
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(report.failure.is_none())
}

fn eval(solution: PathBuf, points: PathBuf, physical: bool) -> Result<()> {
    let text = std::fs::read_to_string(&solution)
        .with_context(|| format!("reading {}", solution.display()))?;
    let stored = read_solution(&text)?;
    let sol = &stored.solution;
    let pts_text = std::fs::read_to_string(&points)
        .with_context(|| format!("reading {}", points.display()))?;
    let pts = read_points(&pts_text, sol.dim())?;
    if physical && !sol.map.has_inverse() {
        bail!(
            "map `{}` has no closed-form inverse; pass ball coordinates",
            sol.map.descriptor()
        );
    }
    for p in pts {
        let value = if physical {
            sol.eval_physical(&p).expect("inverse available")
        } else {
            if p.iter().map(|v| v * v).sum::<f64>() > 1.0 + 1e-12 {
                bail!("point {p:?} lies outside the unit ball");
            }
            sol.eval_ball(&p)
        };
        let coords: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
        println!("{} {value:e}", coords.join(" "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out } => solve(config, out),
        Command::Eval {
            solution,
            points,
            physical,
        } => eval(solution, points, physical).map(|_| true),
        Command::Quadcheck { d, q } => quadcheck::report(d, q, if d == 2 { 1e-12 } else { 1e-11 })
            .map_err(anyhow::Error::msg)
            .map(|(text, ok)| {
                print!("{text}");
                ok
            }),
        Command::Catalog => {
            for name in catalog::names() {
                println!("{name}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
