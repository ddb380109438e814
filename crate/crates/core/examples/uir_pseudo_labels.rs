//! Pseudo-labels a set of questions with a synthetic model that is reliable
//! on some items and guesses on others, then compares filtered labels with
//! the unfiltered first answers.

use persistbench::imaging::Image;
use persistbench::uir::mock::PlantedTruthModel;
use persistbench::uir::{refine_loop, EnsembleConfig};

fn main() -> persistbench::Result<()> {
    let vocabulary: Vec<String> = ["car", "truck", "bus", "bike"].map(String::from).to_vec();
    let mut model = PlantedTruthModel::new(vocabulary.clone(), 9);
    let mut items = Vec::new();
    for i in 0..200 {
        let query = format!("Which vehicle is in clip {i}?");
        let truth = vocabulary[i % vocabulary.len()].clone();
        model.insert(query.clone(), truth.clone(), i % 3 == 0);
        items.push((query, truth));
    }

    let config = EnsembleConfig::default();
    let image = Image::filled(16, 16, 3, 0.5)?;
    let (mut kept, mut kept_ok, mut first_ok, mut rounds) = (0, 0, 0, 0);
    for (i, (query, truth)) in items.iter().enumerate() {
        let label = refine_loop(&mut model, &image, query, &config, i as u64)?;
        rounds += label.rounds_used;
        first_ok += usize::from(label.baseline == *truth);
        if label.retained {
            kept += 1;
            kept_ok += usize::from(label.answer == *truth);
        }
    }
    let n = items.len() as f64;
    println!(
        "retained {kept} of {} labels, {:.2} rounds on average",
        items.len(),
        rounds as f64 / n
    );
    println!("unfiltered accuracy {:.1}%", 100.0 * first_ok as f64 / n);
    println!(
        "retained accuracy   {:.1}%",
        100.0 * kept_ok as f64 / kept.max(1) as f64
    );
    Ok(())
}
