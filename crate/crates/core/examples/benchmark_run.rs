//! Runs a small benchmark from a TOML config, writes the JSON-lines record,
//! then re-scores and replays it.

use persistbench::harness::{replay, run_to_file, score_record, RunConfig};

const CONFIG: &str = r#"
master_seed = 2024
episodes = 6
workers = 3

[sequence]
source = "synthetic"
random_objects = 3

[schedule]
length = 8
regime = "intermittent"
period = 4
duty = 1

[tasks]
requery_frames = [3, 7]

[uir]
tau = 0.15

[model]
kind = "mock"
behavior = "inertia"
uir_outlier_rate = 0.1
"#;

fn main() -> persistbench::Result<()> {
    let config = RunConfig::from_toml_str(CONFIG)?;
    let dir = tempfile::tempdir().map_err(|e| persistbench::Error::io(std::env::temp_dir(), e))?;
    let path = dir.path().join("run.jsonl");
    let record = run_to_file(&config, &path)?;

    for ep in &record.episodes {
        let m = &ep.summary.metrics;
        let uir = ep.summary.uir.as_ref().map_or(0.0, |u| u.retention);
        println!(
            "episode {}: H={:?} R={:?} TC={:?} uir retention {:.2}",
            ep.summary.episode, m.hallucination_rate, m.recovery_rate, m.temporal_consistency, uir
        );
    }
    println!("-- aggregate\n{}", record.aggregate);

    let scored = score_record(&record)?;
    println!("rescored matches summary: {}", scored.matches_summary);
    println!("lambda trace replays: {}", scored.lambda_replays);
    let text = std::fs::read_to_string(&path).map_err(|e| persistbench::Error::io(&path, e))?;
    println!("replay identical: {}", replay(&text)?.is_identical());
    Ok(())
}
