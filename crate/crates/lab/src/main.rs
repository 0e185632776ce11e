use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parconc::predict;
use parconc::{run_scenario, run_suite, RunOptions};
use parconc_core::Exponent;

#[derive(Parser)]
#[command(
    name = "parconc",
    about = "Power concavity experiments for parabolic Dirichlet problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            out: self.out.clone(),
            tolerance_scale: self.tolerance_scale,
            write_files: true,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every *.toml scenario in a directory.
    Suite {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Print predicted exponents.
    Predict {
        /// Source exponents q ≥ 1, or "inf".
        #[arg(long, value_delimiter = ',', default_value = "inf,1")]
        q: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5")]
        gamma: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        n: Vec<usize>,
    },
    Version,
}

fn parse_exponent(s: &str) -> Result<Exponent, String> {
    match s.trim() {
        "inf" | "+inf" => Ok(Exponent::PosInf),
        "-inf" => Ok(Exponent::NegInf),
        v => v.parse::<f64>().map(Exponent::new).map_err(|e| format!("{s:?}: {e}")),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<i32, Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, common } => {
            let rec = run_scenario(&config, &common.options())?;
            for r in &rec.results {
                let expect = if r.sharpness { "fail" } else { "pass" };
                let seen = if r.observed_pass { "pass" } else { "fail" };
                println!(
                    "{:<18} expected {expect}, observed {seen}{}",
                    r.label.as_deref().unwrap_or(&r.kind),
                    if r.as_expected { "" } else { "  <- deviates" }
                );
            }
            println!(
                "{}: {} ({:.2} s)",
                rec.config.name,
                if rec.passed { "ok" } else { "DEVIATES" },
                rec.wall_time_s
            );
            Ok(rec.exit_code())
        }
        Command::Suite { dir, parallel, common } => {
            let report = run_suite(&dir, parallel, &common.options())?;
            print!("{}", report.table());
            Ok(report.exit_code())
        }
        Command::Predict { q, gamma, n } => {
            let qs = q.iter().map(|s| parse_exponent(s)).collect::<Result<Vec<_>, _>>()?;
            print!("{}", predict::render(&predict::table(&qs, &gamma, &n)?));
            Ok(0)
        }
        Command::Version => {
            println!("parconc {} (core {})", env!("CARGO_PKG_VERSION"), parconc_core::VERSION);
            Ok(0)
        }
    }
}
