use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rbffd::bench::ErrorReport;
use rbffd::driver::{self, RunError};
use rbffd::stencil::UniformityStats;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

mod config;

/// Adaptive RBF-FD solver for elliptic Dirichlet problems.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and refine adaptively, writing CSV artifacts.
    Run(Common),
    /// Run the same configuration with both error indicators.
    IndicatorCompare(Common),
    /// Print stencil uniformity measures per refinement step as CSV, or
    /// per center dump when `--centers` is given.
    StencilStats {
        #[command(flatten)]
        common: Common,
        /// Center dumps to analyze instead of running the loop.
        #[arg(long, num_args = 1..)]
        centers: Vec<PathBuf>,
    },
    /// List the configuration keys.
    Keys,
}

#[derive(Args)]
struct Common {
    /// Problem id; overrides the config file.
    problem: Option<String>,
    /// File of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set max_steps=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<rbffd::RunConfig64> {
        let mut pairs = Vec::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            pairs = config::parse_pairs(&text).with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(p) = &self.problem {
            pairs.push(("problem".into(), p.clone()));
        }
        for s in &self.overrides {
            pairs.push(config::parse_pair(s)?);
        }
        let mut c = config::build(&pairs)?;
        if let Some(out) = &self.out {
            c.output = Some(out.clone());
        }
        Ok(c)
    }
}

fn print_reports(label: &str, reports: &[ErrorReport<f64>]) {
    println!("{label}{:>5} {:>9} {:>12} {:>12}", "step", "interior", "e_c", "e_g");
    for r in reports {
        println!("{label}{:>5} {:>9} {:>12.4e} {:>12.4e}", r.step, r.n_interior, r.e_c, r.e_g);
    }
}

/// Failing stage and the error chain.
fn fail(stage: &str, err: &anyhow::Error) -> ExitCode {
    eprintln!("error: stage {stage}: {err:#}");
    ExitCode::FAILURE
}

fn run_error(err: RunError) -> ExitCode {
    eprintln!("error: stage {}: {err}", err.stage());
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Keys => {
            for (k, d) in config::KEYS {
                println!("{k:<17} {d}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run(c) | Command::IndicatorCompare(c) | Command::StencilStats { common: c, .. } => c,
    };
    let config = match common.config() {
        Ok(c) => c,
        Err(e) => return fail("config", &e),
    };
    match &cli.command {
        Command::Run(_) => match driver::run(&config) {
            Ok(r) => print_reports("", &r),
            Err(e) => return run_error(e),
        },
        Command::IndicatorCompare(_) => match driver::indicator_compare(&config) {
            Ok(cmp) => {
                print_reports("eps0 ", &cmp.eps0);
                print_reports("eps1 ", &cmp.eps1);
            }
            Err(e) => return run_error(e),
        },
        Command::StencilStats { centers, .. } if centers.is_empty() => {
            match driver::run(&config) {
                Ok(reports) => {
                    println!("step,{STATS_HEADER}");
                    for r in &reports {
                        println!("{},{}", r.step, stats_row(r.n_interior, r.stats));
                    }
                }
                Err(e) => return run_error(e),
            }
        }
        Command::StencilStats { centers, .. } => {
            println!("file,{STATS_HEADER}");
            for path in centers {
                let set = match load_centers(&config, path) {
                    Ok(s) => s,
                    Err(e) => return fail("centers", &e),
                };
                match driver::stencil_stats(&config, Some(&set)) {
                    Ok((n, stats)) => println!("{},{}", path.display(), stats_row(n, stats)),
                    Err(e) => return run_error(e),
                }
            }
        }
        Command::Keys => unreachable!(),
    }
    ExitCode::SUCCESS
}

const STATS_HEADER: &str = "n_interior,v_max,v_aver,c_max,c_aver";

fn stats_row(n: usize, stats: Option<UniformityStats<f64>>) -> String {
    match stats {
        Some(s) => format!("{n},{},{},{},{}", s.v_max, s.v_aver, s.c_max, s.c_aver),
        None => format!("{n},,,,"),
    }
}

fn load_centers(config: &rbffd::RunConfig64, path: &PathBuf) -> Result<rbffd::CenterSet64> {
    let tp = config.test_problem()?;
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (set, _) = rbffd::io::read_centers(BufReader::new(file), &tp.domain).with_context(|| format!("reading {}", path.display()))?;
    Ok(set)
}
