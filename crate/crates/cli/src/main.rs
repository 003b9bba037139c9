use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pdca_cli::output::EXIT_CONFIG;
use pdca_cli::{exit_code, run, write_output, ExperimentConfig, RawConfig};

/// Runs one experiment and writes CSV tables and JSON run reports.
///
/// Every flag may also appear in the config file as `key = value` (underscores
/// or hyphens); flags override the file. List-valued keys take comma lists.
#[derive(Parser, Debug)]
#[command(name = "pdca", version, allow_negative_numbers = true)]
struct Args {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// toy-compare, ksparse, ksparse-compare or kmedians.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Sparsity levels, or cluster counts for kmedians.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    /// knorm or capped.
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    alpha0: Option<String>,
    /// Ratio of the geometric schedule.
    #[arg(long)]
    rho: Option<String>,
    /// Scale alpha0 by 1 + ‖x0‖.
    #[arg(long)]
    alpha_relative: Option<String>,
    /// harmonic or geometric.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Instances per table row.
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    noise_std: Option<String>,
    /// Start of the 1-D comparison.
    #[arg(long)]
    x0: Option<String>,
    /// CSV path(s), comma separated.
    #[arg(long)]
    dataset: Option<String>,
    /// none, last or a zero-based index.
    #[arg(long)]
    label_column: Option<String>,
    /// Zero-based columns to ignore, comma separated.
    #[arg(long)]
    skip_columns: Option<String>,
    #[arg(long)]
    header: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    /// Enumeration cap for active pieces.
    #[arg(long)]
    cap: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    record_iterates: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv, json or csv,json.
    #[arg(long)]
    format: Option<String>,
}

impl Args {
    fn raw(&self) -> Result<RawConfig, pdca_cli::ConfigError> {
        let mut raw = RawConfig::default();
        let pairs = [
            ("experiment", &self.experiment),
            ("m", &self.m),
            ("n", &self.n),
            ("k", &self.k),
            ("lambda", &self.lambda),
            ("theta", &self.theta),
            ("penalty", &self.penalty),
            ("tau", &self.tau),
            ("sigma", &self.sigma),
            ("epsilon", &self.epsilon),
            ("alpha0", &self.alpha0),
            ("rho", &self.rho),
            ("alpha_relative", &self.alpha_relative),
            ("schedule", &self.schedule),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("noise_std", &self.noise_std),
            ("x0", &self.x0),
            ("dataset", &self.dataset),
            ("label_column", &self.label_column),
            ("skip_columns", &self.skip_columns),
            ("header", &self.header),
            ("replicates", &self.replicates),
            ("cap", &self.cap),
            ("max_iter", &self.max_iter),
            ("record_iterates", &self.record_iterates),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                raw.set("command line", key, v.as_str())?;
            }
        }
        Ok(raw)
    }
}

fn main() -> ExitCode {
    // Usage errors share the configuration exit code; help and version exit 0.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let config = (|| {
        let mut raw = match &args.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        raw.merge(&args.raw()?);
        ExperimentConfig::from_raw(&raw)
    })();
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    for table in &output.tables {
        eprint!("{}:\n{}", table.file, table.to_csv());
    }
    match write_output(&config.out, config.formats, &output) {
        Ok(paths) => eprintln!("wrote {} files to {}", paths.len(), config.out.display()),
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", config.out.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    ExitCode::from(exit_code(output.terminations()) as u8)
}
