use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use persistbench::harness::{
    annotate_run, generate_sequences, replay, run_to_file, score_record, MockScript, ModelSpec,
    RunConfig, RunRecord,
};
use persistbench::{Error, Result};

#[derive(Parser)]
#[command(
    name = "persistbench",
    version,
    about = "Temporal degradation benchmark for vision-language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of concurrent episodes.
    #[arg(long)]
    workers: Option<usize>,
    /// Replaces the configured model with a mock: echo, inertia,
    /// wrong_on_corrupted or fixed:<answer>.
    #[arg(long)]
    mock: Option<MockScript>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        if let Some(mock) = &self.mock {
            config.model = ModelSpec::Mock(mock.clone());
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Writes corrupted frames and their questions to disk, without a model.
    Generate {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the benchmark and writes a JSON-lines record.
    Run {
        #[command(flatten)]
        run: RunArgs,
        /// Record path; defaults to the config's `output`, then `run.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recomputes metrics from a record and checks them against its summary.
    Score {
        /// Record to score.
        record: PathBuf,
    },
    /// Produces pseudo-labels for every generated question.
    UirAnnotate {
        #[command(flatten)]
        run: RunArgs,
        /// Labels JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-executes a record's config snapshot and diffs the output.
    Replay {
        /// Record to replay.
        record: PathBuf,
    },
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Generate { run, out } => {
            let episodes = generate_sequences(&run.load()?, &out)?;
            let frames: usize = episodes.iter().map(|e| e.frames.len()).sum();
            println!(
                "wrote {frames} frames in {} episodes to {}",
                episodes.len(),
                out.display()
            );
            Ok(true)
        }
        Command::Run { run, out } => {
            let config = run.load()?;
            let out = out
                .or_else(|| config.output.clone())
                .unwrap_or_else(|| PathBuf::from("run.jsonl"));
            let record = run_to_file(&config, &out)?;
            for ep in record.episodes.iter().filter(|e| !e.summary.complete) {
                eprintln!(
                    "episode {} incomplete: {}",
                    ep.summary.episode,
                    ep.summary.error.as_deref().unwrap_or("unknown error")
                );
            }
            println!("record={}", out.display());
            print!("{}", record.aggregate);
            Ok(record.episodes.iter().all(|e| e.summary.complete))
        }
        Command::Score { record } => {
            let record = RunRecord::load(&record)?;
            let scored = score_record(&record)?;
            print!("{}", scored.aggregate);
            println!("summary_matches={}", scored.matches_summary);
            println!("lambda_replays={}", scored.lambda_replays);
            Ok(scored.matches_summary && scored.lambda_replays)
        }
        Command::UirAnnotate { run, out } => {
            let summaries = annotate_run(&run.load()?)?;
            write_json(&out, &summaries)?;
            let labels: usize = summaries.iter().map(|s| s.labels.len()).sum();
            let retained: usize = summaries.iter().map(|s| s.retained).sum();
            println!("labels={labels}");
            println!("retained={retained}");
            println!("output={}", out.display());
            Ok(true)
        }
        Command::Replay { record } => {
            let text = std::fs::read_to_string(&record).map_err(|e| Error::io(&record, e))?;
            let diff = replay(&text)?;
            if diff.is_identical() {
                println!("identical ({} lines)", diff.stored_lines);
            } else {
                println!(
                    "differs: stored {} lines, replayed {} lines, differing lines {:?}",
                    diff.stored_lines, diff.replayed_lines, diff.differing_lines
                );
            }
            Ok(diff.is_identical())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
