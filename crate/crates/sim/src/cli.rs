//! Command-line front end. Exit status 0 on success, 2 on usage or config
//! errors, 3 on runtime errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::SimError;
use crate::experiment::{compare, run_experiment};
use crate::output::comparison_csv;

#[derive(Debug, Parser)]
#[command(name = "vanet-sim", version, about = "Hierarchical VANET topology control experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm and write its step log and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all four algorithms on the same scenario.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and check a config file.
    ValidateConfig { path: PathBuf },
    /// Convert an FCD XML trace to trace CSV.
    ConvertTrace {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), SimError> {
    let say = |stdout: &mut dyn Write, text: &str| stdout.write_all(text.as_bytes()).map_err(|e| SimError::io("<stdout>", e));
    match command {
        Command::Run { config, algorithm, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(a) = algorithm {
                cfg.run.algorithm = a;
            }
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            let out = out.unwrap_or_else(|| cfg.run.out_dir.clone());
            let result = run_experiment(&cfg, Some(&out))?;
            say(stdout, &format!("{}: {} steps written to {}\n", result.algorithm, result.rows.len(), out.display()))
        }
        Command::Compare { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let runs = compare(&cfg, Some(&out))?;
            let table: Vec<_> = runs.iter().map(|r| (r.algorithm, &r.summary)).collect();
            say(stdout, &comparison_csv(&table))
        }
        Command::ValidateConfig { path } => {
            ExperimentConfig::load(&path)?;
            say(stdout, &format!("{}: ok\n", path.display()))
        }
        Command::ConvertTrace { input, out } => {
            let xml = std::fs::read_to_string(&input).map_err(|e| SimError::io(&input, e))?;
            let csv = crate::trace::convert_fcd(&xml)?;
            std::fs::write(&out, csv).map_err(|e| SimError::io(&out, e))
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
