mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sectoria::report::write_atomic;
use sectoria::Error;

use commands::SuiteReport;
use config::{CommonArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "sectoria", version, about = "Functional calculus and functional-model checks for sectorial matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify sectoriality and estimate the type angle
    Certify(CommonArgs),
    /// Compute f(A) and compare with the spectral oracle
    Calc {
        #[command(flatten)]
        common: CommonArgs,
        /// Registry symbol, e.g. z_pow:0.5, log, z_ipow:1
        #[arg(long)]
        symbol: Option<String>,
    },
    /// Square-function norms, McIntosh identity, log-gap and admissibility
    Sqnorm {
        #[command(flatten)]
        common: CommonArgs,
        /// Ψ-class generator for the Gram matrix
        #[arg(long)]
        symbol: Option<String>,
    },
    /// Functional-model identities
    Model(CommonArgs),
    /// CSV table across a family parameter or across θ
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Family parameter to vary, e.g. eps
        #[arg(long)]
        param: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<f64>>,
    },
}

fn init_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("SECTORIA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidParam(format!("SECTORIA_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParam(e.to_string()))?;
    }
    Ok(())
}

fn emit(out: Option<&std::path::Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn emit_suite(cfg: &RunConfig, suite: &SuiteReport) -> Result<bool, Error> {
    let mut bytes = serde_json::to_vec_pretty(suite)?;
    bytes.push(b'\n');
    emit(cfg.out.as_deref(), &bytes)?;
    let failed: Vec<&str> = suite.checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
    if failed.is_empty() {
        eprintln!("{}: {} checks passed", suite.command, suite.checks.len());
    } else {
        eprintln!("{}: failed checks: {}", suite.command, failed.join(", "));
    }
    Ok(suite.pass)
}

fn run(cli: Cli) -> Result<bool, Error> {
    init_threads()?;
    match cli.command {
        Command::Certify(common) => {
            let cfg = RunConfig::load(&common)?;
            emit_suite(&cfg, &commands::cmd_certify(&cfg)?)
        }
        Command::Calc { common, symbol } => {
            let cfg = RunConfig::load(&common)?;
            emit_suite(&cfg, &commands::cmd_calc(&cfg, symbol.as_deref())?)
        }
        Command::Sqnorm { common, symbol } => {
            let cfg = RunConfig::load(&common)?;
            emit_suite(&cfg, &commands::cmd_sqnorm(&cfg, symbol.as_deref())?)
        }
        Command::Model(common) => {
            let cfg = RunConfig::load(&common)?;
            emit_suite(&cfg, &commands::cmd_model(&cfg)?)
        }
        Command::Sweep {
            common,
            param,
            values,
            thetas,
        } => {
            let cfg = RunConfig::load(&common)?;
            let (csv, pass) = commands::cmd_sweep(&cfg, param, values, thetas)?;
            emit(cfg.out.as_deref(), csv.as_bytes())?;
            Ok(pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_invalid_input() { 2 } else { 1 })
        }
    }
}
