mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{Failure, Output};
use config::{Cli, FileConfig, RunConfig};

fn load(cli: Cli) -> Result<RunConfig, Failure> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Failure::Config(format!("config file {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    RunConfig::resolve(cli, file).map_err(Failure::Config)
}

fn write_all(config: &RunConfig, output: &Output) -> Result<Vec<PathBuf>, Failure> {
    let paths: Vec<PathBuf> = output.files.iter().map(|(p, _)| config.out.join(p)).collect();
    if !config.force {
        let existing: Vec<String> = paths.iter().filter(|p| p.exists()).map(|p| p.display().to_string()).collect();
        if !existing.is_empty() {
            return Err(Failure::Config(format!(
                "refusing to overwrite {} (use --force)",
                existing.join(", ")
            )));
        }
    }
    for (path, (_, contents)) in paths.iter().zip(&output.files) {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Failure::Config(format!("creating {}: {e}", parent.display())))?;
        }
        fs::write(path, contents).map_err(|e| Failure::Config(format!("writing {}: {e}", path.display())))?;
    }
    Ok(paths)
}

fn run(cli: Cli) -> Result<Option<Failure>, Failure> {
    let config = load(cli)?;
    if let Some(jobs) = config.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    let output = commands::run(&config)?;
    let paths = write_all(&config, &output)?;
    for line in &output.summary {
        eprintln!("{line}");
    }
    let files: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    let echo = serde_json::json!({"command": config.command.name(), "files": files});
    println!("{echo}");
    Ok(output.deferred)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let failure = match run(cli) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(f)) | Err(f) => f,
    };
    eprintln!("error: {}", failure.message());
    ExitCode::from(failure.exit_code() as u8)
}
