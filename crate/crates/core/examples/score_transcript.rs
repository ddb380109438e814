//! Scores a hand-written dialogue: a wrong color persists for two turns and is
//! fixed when the question is asked again.

use persistbench::eval::{score, AliasTable, ConstraintKind, TemporalConstraint, Transcript, Turn};

fn turn(frame: usize, fact: &str, key: &str, answer: &str, aliases: &AliasTable) -> Turn {
    Turn {
        frame,
        query: format!("question about {fact}"),
        answer_key: key.into(),
        fact: fact.into(),
        model_answer: answer.into(),
        valid: persistbench::eval::judge(answer, key, aliases),
        error_id: None,
        correction_of: None,
    }
}

fn main() -> persistbench::Result<()> {
    let aliases = AliasTable::default();
    let mut turns = vec![
        turn(0, "vehicle", "red car", "Red automobile.", &aliases),
        turn(1, "vehicle", "red car", "blue truck", &aliases),
        turn(2, "vehicle", "red car", "blue truck", &aliases),
        turn(3, "person", "yes", "Yes, on the left.", &aliases),
        turn(4, "vehicle", "red car", "red car", &aliases),
    ];
    turns[2].error_id = Some(2);
    turns[4].correction_of = Some(2);
    let transcript = Transcript::new(turns)?;
    let constraints = vec![
        TemporalConstraint::new(
            "vehicle-stable",
            ConstraintKind::UnchangedBetween {
                fact: "vehicle".into(),
                start: 0,
                end: 4,
            },
        ),
        TemporalConstraint::new(
            "person-after-car",
            ConstraintKind::After {
                event: 3,
                reference: 0,
            },
        ),
    ];
    print!("{}", score(&transcript, &constraints, &aliases)?);
    Ok(())
}
