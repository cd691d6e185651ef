use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hitlab_cli::config::Config;
use hitlab_cli::error::CliError;
use hitlab_cli::{catalog, report, run, selftest};
use serde_json::json;

// Writes to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "hitlab", version, about = "Hitting-time experiments on exactly iterated systems")]
struct Cli {
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true, env = "HITLAB_WORKERS")]
    workers: Option<usize>,
    /// Fixed-point precision; overrides the config's `precision-bits`.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List systems, observables, maps and test functions.
    Catalog,
    /// Run one experiment config and write `<output>.json` and `<output>.csv`.
    Run { config: PathBuf },
    /// Summarise result files as a markdown table.
    Report {
        results: Vec<PathBuf>,
        /// Write the table here, plus a CSV companion.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in quick checks.
    Selftest,
}

fn default_output(config: &Path, cfg: &Config) -> PathBuf {
    let dir = config.parent().unwrap_or(Path::new(""));
    match &cfg.output {
        Some(o) => dir.join(o),
        None => {
            let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            dir.join(format!("{stem}.result"))
        }
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers.filter(|&w| w > 0) {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Usage(format!("cannot start workers: {e}")))
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Catalog => {
            say!("{}", serde_json::to_string_pretty(&catalog::catalog()).expect("serializable"));
            Ok(true)
        }
        Command::Run { config } => {
            let mut cfg = Config::load(&config)?;
            if cli.seed.is_some() {
                cfg.seed = cli.seed;
            }
            if let Some(b) = cli.precision_bits {
                cfg.precision_bits = b;
            }
            let result = pool(cli.workers)?.install(|| run::run_config(&cfg))?;
            let (json_path, csv_path) = result.persist(&default_output(&config, &cfg))?;
            let out = json!({
                "kind": result.kind,
                "json": json_path,
                "csv": csv_path,
                "wall_time_seconds": result.wall_time_seconds,
                "summary": result.summary,
            });
            say!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(true)
        }
        Command::Report { results, out } => {
            let r = report::build(&results)?;
            say!("{}", r.markdown.trim_end());
            if let Some(out) = out {
                report::write(&r, &out)?;
            }
            Ok(true)
        }
        Command::Selftest => {
            let cases = pool(cli.workers)?.install(selftest::run);
            for c in &cases {
                if c.passed {
                    say!("PASS {}", c.name);
                } else {
                    say!("FAIL {}: {}", c.name, c.detail);
                }
            }
            let failed = cases.iter().filter(|c| !c.passed).count();
            say!("{} passed, {failed} failed", cases.len() - failed);
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("{}", e.to_json());
            match e {
                CliError::ConfigInvalid { .. } | CliError::Usage(_) | CliError::SchemaMismatch(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
