//! A mock model that stays wrong after corrupted frames until it is asked
//! again. Prints the per-frame transcript and the episode metrics.

use persistbench::degrade::DegradationSchedule;
use persistbench::harness::{
    run_episode, MockBehavior, MockScript, RunConfig, SceneSpec, SequenceSource,
};

fn main() -> persistbench::Result<()> {
    let schedule = DegradationSchedule::early(8, 3)?;
    let mut config = RunConfig::synthetic(7, schedule, MockScript::new(MockBehavior::Inertia));
    config.sequence = SequenceSource::Synthetic(SceneSpec::static_object("car", "red"));
    config.tasks.requery_frames = vec![5];

    let record = run_episode(&config, 0)?;
    for line in &record.turns {
        let task = line
            .task
            .as_ref()
            .expect("static scene always yields a question");
        println!(
            "t={} corrupted={:<5} requery={:<5} lambda={:.2} q={:?} key={:?} answer={:?} valid={}",
            line.t,
            line.corrupted,
            line.requery,
            line.lambda,
            task.query,
            task.answer_key,
            line.answer.as_deref().unwrap_or(""),
            line.valid.unwrap_or(false),
        );
    }
    println!("{}", record.summary.metrics);
    Ok(())
}
