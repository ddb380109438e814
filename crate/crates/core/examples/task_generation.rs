//! Generates questions over a synthetic scene and shows how focus on a
//! weak aspect shifts what gets asked.

use std::collections::BTreeSet;

use persistbench::harness::{generate_scene, SceneSpec};
use persistbench::tasks::{candidate_tasks, generate_query, GeneratorSettings, MemoryBuffer};

fn main() -> persistbench::Result<()> {
    let spec = SceneSpec {
        random_objects: 3,
        recolor_prob: 0.3,
        ..Default::default()
    };
    let (_, timeline) = generate_scene(&spec, 8, 17)?;
    let settings = GeneratorSettings::default();
    let mut memory = MemoryBuffer::new(8)?;
    let focus: BTreeSet<String> = ["color".to_string()].into();

    for frame in &timeline {
        let options = candidate_tasks(&memory, frame, &settings)?.len();
        let focused = frame.t >= 4;
        let task = generate_query(
            &mut memory,
            frame,
            1000 + frame.t as u64,
            focused.then_some(&focus),
            &settings,
        )?;
        match task {
            Some(task) => println!(
                "t={} [{} of {options}, H={:.3}{}] {} -> {}",
                frame.t,
                task.kind,
                task.entropy,
                if focused { ", focus=color" } else { "" },
                task.query,
                task.answer_key
            ),
            None => println!("t={} no question applies", frame.t),
        }
    }
    Ok(())
}
