use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riscf_bench::output::write_results;
use riscf_bench::{run_experiment, BenchError, ExperimentSpec, Preset};

#[derive(Parser)]
#[command(
    name = "riscf",
    version,
    about = "Monte-Carlo NMSE benchmarks for RIS channel estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML file or a built-in preset.
    Run {
        /// Experiment description (TOML).
        config: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for the CSV and plot; the file name comes from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Built-in experiment instead of a config file.
        #[arg(long, value_parser = ["fig4", "fig5", "ci"])]
        preset: Option<String>,
    },
}

fn run(cmd: Command) -> Result<PathBuf, BenchError> {
    let Command::Run {
        config,
        seed,
        threads,
        out,
        preset,
    } = cmd;
    let mut spec = match (config, preset) {
        (Some(path), None) => ExperimentSpec::from_file(&path)?,
        (None, Some(name)) => Preset::parse(&name)?.spec(),
        (Some(_), Some(_)) => {
            return Err(BenchError::Config(
                "give either a config file or --preset, not both".into(),
            ))
        }
        (None, None) => return Err(BenchError::Config("a config file or --preset is required".into())),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(dir) = out {
        let file = spec
            .output_path
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.name)));
        spec.output_path = dir.join(file);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(match threads {
            Some(0) => return Err(BenchError::Config("--threads must be at least 1".into())),
            Some(n) => n,
            None => 0,
        })
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let rows = pool.install(|| run_experiment(&spec))?;
    write_results(&rows, &spec.output_path, spec.plot, &spec.name)?;
    Ok(spec.output_path)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(path) => {
            println!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("riscf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
