use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use tdgl_core::experiments::{run_scenario, write_bundle, write_failure, ExperimentConfig};

#[derive(Parser)]
#[command(name = "tdgl", version, about = "Run Ginzburg-Landau/Schrodinger experiments and check their certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every `*.cfg` file in a directory.
    Suite {
        directory: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory (falls back to the config's [output] dir, then TDGL_OUT_DIR, then `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Only report errors.
    #[arg(long)]
    quiet: bool,
}

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn output_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &common.out {
        return dir.clone();
    }
    if let Some(dir) = &cfg.output_dir {
        return PathBuf::from(dir);
    }
    std::env::var_os("TDGL_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs one config and returns its exit code and report lines.
fn run_one(path: &Path, common: &Common) -> (u8, Vec<String>) {
    let mut lines = Vec::new();
    let mut cfg = match ExperimentConfig::from_file(path) {
        Ok(c) => c,
        Err(e) => return (EXIT_ERROR, vec![format!("error: {}: {e}", path.display())]),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let dir = output_dir(common, &cfg);
    match run_scenario(&cfg) {
        Ok(bundle) => {
            lines.push(format!(
                "{} ({}) {:.2}s",
                cfg.name, cfg.scenario, bundle.wall_clock_seconds
            ));
            lines.extend(bundle.certificates.iter().map(|c| format!("  {}", c.summary_line())));
            match write_bundle(&bundle, &dir) {
                Ok(paths) => lines.extend(paths.iter().map(|p| format!("  wrote {}", p.display()))),
                Err(e) => {
                    lines.push(format!("error: writing results for {}: {e}", cfg.name));
                    return (EXIT_ERROR, lines);
                }
            }
            let code = if bundle.passed() { EXIT_OK } else { EXIT_FAILED };
            (code, lines)
        }
        Err(e) => {
            lines.push(format!("error: {} ({}): {e}", cfg.name, cfg.scenario));
            if let Err(w) = write_failure(&cfg, &e, &dir) {
                lines.push(format!("error: writing failure summary: {w}"));
            }
            (EXIT_ERROR, lines)
        }
    }
}

fn report(lines: &[String], quiet: bool) {
    for line in lines {
        if line.starts_with("error:") {
            eprintln!("{line}");
        } else if !quiet {
            println!("{line}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, common } => {
            let (code, lines) = run_one(&config, &common);
            report(&lines, common.quiet);
            ExitCode::from(code)
        }
        Command::Suite { directory, common } => {
            let mut configs: Vec<PathBuf> = match std::fs::read_dir(&directory) {
                Ok(entries) => entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
                    .collect(),
                Err(e) => {
                    eprintln!("error: {}: {e}", directory.display());
                    return ExitCode::from(EXIT_ERROR);
                }
            };
            configs.sort();
            if configs.is_empty() {
                eprintln!("error: no .cfg files in {}", directory.display());
                return ExitCode::from(EXIT_ERROR);
            }
            let results: Vec<(u8, Vec<String>)> = configs.par_iter().map(|p| run_one(p, &common)).collect();
            let mut worst = EXIT_OK;
            for (code, lines) in &results {
                report(lines, common.quiet);
                worst = worst.max(*code);
            }
            if !common.quiet {
                let passed = results.iter().filter(|(c, _)| *c == EXIT_OK).count();
                println!("{passed}/{} configurations passed", results.len());
            }
            ExitCode::from(worst)
        }
    }
}
