//! Acceptance gate. Each test prints one `criterion N: PASS|FAIL` line with
//! its measurement and runtime, then asserts.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use persistbench::calibrate::{map_to_params, next_lambda, CalibratorConfig, PerformanceFeedback};
use persistbench::degrade::{
    apply_compression, apply_motion_blur, apply_sensor_noise, render_psf, CompressionLevel,
    DegradationSchedule, MotionTrajectory, NoiseParams,
};
use persistbench::eval::{
    hallucination_rate, recovery_rate, temporal_consistency, AliasTable, ConstraintKind,
    TemporalConstraint, Transcript, Turn,
};
use persistbench::harness::{
    generate_scene, replay, run_benchmark, run_episode, MockBehavior, MockScript, RunConfig,
    SceneSpec, SequenceSource,
};
use persistbench::imaging::{psnr, Image};
use persistbench::uir::mock::PlantedTruthModel;
use persistbench::uir::{
    default_tau_grid, hl_estimate, js_divergence, refine_loop, tune_threshold, EnsembleConfig,
};

fn report(n: u8, name: &str, start: Instant, limit: Duration, ok: bool, detail: String) {
    let elapsed = start.elapsed();
    let pass = ok && elapsed < limit;
    println!(
        "criterion {n}: {} {name} ({detail}; {:.3}s, limit {}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(
        elapsed < limit,
        "criterion {n} exceeded its runtime: {elapsed:?}"
    );
}

#[test]
fn criterion_1_sensor_noise_moments() {
    let start = Instant::now();
    let image = Image::filled(400, 250, 1, 0.25).unwrap();
    let params = NoiseParams {
        gain: 100.0,
        read_sigma: 0.02,
        seed: 20240601,
    };
    let noisy = apply_sensor_noise(&image, &params).unwrap();
    let n = noisy.len() as f64;
    let mean = noisy.data().iter().sum::<f64>() / n;
    let var = noisy.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let target = 0.25 / 100.0 + 0.02f64.powi(2);
    let ok = (mean - 0.25).abs() <= 0.005 && (var - target).abs() <= 0.05 * target;
    report(
        1,
        "sensor noise moments",
        start,
        Duration::from_secs(5),
        ok,
        format!("mean {mean:.5}, variance {var:.6} vs {target:.6}"),
    );
}

#[test]
fn criterion_2_psf_conservation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_sum = 0.0f64;
    let mut negative = 0;
    let mut worst_fixed = 0.0f64;
    let flat = Image::filled(24, 18, 3, 0.42).unwrap();
    for i in 0..1000 {
        let side = 2 * rng.random_range(1..12) + 1;
        let depth = rng.random_range(0.5..4.0);
        let reach = side as f64 / 2.0;
        let count = rng.random_range(1..40);
        let samples: Vec<[f64; 6]> = (0..count)
            .map(|_| {
                [
                    rng.random_range(-reach..reach) * depth * 0.5,
                    rng.random_range(-reach..reach) * depth * 0.5,
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.002..0.002),
                    rng.random_range(-0.002..0.002),
                    rng.random_range(-0.1..0.1),
                ]
            })
            .collect();
        let trajectory = MotionTrajectory::new(samples).unwrap();
        let psf = render_psf(&trajectory, side, depth).unwrap();
        let weights = psf.kernel().weights();
        negative += weights.iter().filter(|w| **w < 0.0).count();
        worst_sum = worst_sum.max((weights.iter().sum::<f64>() - 1.0).abs());
        if i % 20 == 0 {
            let out = apply_motion_blur(&flat, &psf, 0.0, i).unwrap();
            let dev = out
                .data()
                .iter()
                .map(|v| (v - 0.42).abs())
                .fold(0.0, f64::max);
            worst_fixed = worst_fixed.max(dev);
        }
    }
    let ok = negative == 0 && worst_sum <= 1e-9 && worst_fixed <= 1e-12;
    report(
        2,
        "PSF conservation",
        start,
        Duration::from_secs(10),
        ok,
        format!("negative weights {negative}, max |sum-1| {worst_sum:.2e}, max fixed-point drift {worst_fixed:.2e}"),
    );
}

fn corpus() -> Vec<Image> {
    let (w, h) = (64, 48);
    let mut images = vec![
        Image::from_fn(w, h, 3, |x, _, c| {
            (x as f64 / w as f64 + 0.2 * c as f64).fract()
        })
        .unwrap(),
        Image::from_fn(
            w,
            h,
            1,
            |x, y, _| if (x / 6 + y / 6) % 2 == 0 { 0.9 } else { 0.1 },
        )
        .unwrap(),
        Image::from_fn(w, h, 3, |x, y, c| {
            0.5 + 0.4 * ((x as f64 * 0.3 + c as f64).sin() * (y as f64 * 0.2).cos())
        })
        .unwrap(),
        Image::from_fn(w, h, 1, |x, y, _| {
            let (dx, dy) = (x as f64 - 32.0, y as f64 - 24.0);
            (0.5 + 0.5 * ((dx * dx + dy * dy).sqrt() * 0.5).sin()).clamp(0.0, 1.0)
        })
        .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise: Vec<f64> = (0..w * h * 3).map(|_| rng.random_range(0.2..0.8)).collect();
    images.push(Image::new(w, h, 3, noise).unwrap());
    images.push(
        Image::from_fn(w, h, 3, |x, y, c| {
            ((x * 7 + y * 13 + c * 50) % 97) as f64 / 96.0
        })
        .unwrap(),
    );
    for seed in 0..4 {
        let (frames, _) = generate_scene(&SceneSpec::default(), 1, seed).unwrap();
        images.extend(frames);
    }
    images
}

#[test]
fn criterion_3_codec_monotonicity() {
    let start = Instant::now();
    let images = corpus();
    assert_eq!(images.len(), 10);
    let mut ok = true;
    let mut min_gain = f64::INFINITY;
    for image in &images {
        let curve: Vec<f64> = (1..=5)
            .map(|b| {
                psnr(
                    image,
                    &apply_compression(image, &CompressionLevel::surrogate(b)).unwrap(),
                )
                .unwrap()
            })
            .collect();
        ok &= curve.windows(2).all(|p| p[1] >= p[0]);
        let gain = curve[4] - curve[0];
        min_gain = min_gain.min(gain);
        ok &= gain >= 3.0;
    }
    report(
        3,
        "codec monotonicity",
        start,
        Duration::from_secs(30),
        ok,
        format!("10 images, smallest PSNR(B=5)-PSNR(B=1) {min_gain:.2} dB"),
    );
}

#[test]
fn criterion_4_calibrator_law() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let config = CalibratorConfig {
            alpha: rng.random_range(0.0..2.0),
            beta: rng.random_range(0.0..2.0),
            ..Default::default()
        };
        let (epi, hr) = (rng.random::<f64>(), rng.random::<f64>());
        let fb = PerformanceFeedback::new(epi, hr).unwrap();
        let expected = (config.alpha * epi + config.beta * hr).clamp(0.0, 1.0);
        if next_lambda(&config, &fb).to_bits() != expected.to_bits() {
            mismatches += 1;
        }
    }
    let config = CalibratorConfig::default();
    let sweep: Vec<_> = (0..=100)
        .map(|i| map_to_params(&config, i as f64 / 100.0))
        .collect();
    let monotone = sweep.windows(2).all(|p| {
        p[1].motion_sigma >= p[0].motion_sigma
            && p[1].gain >= p[0].gain
            && p[1].bitrate <= p[0].bitrate
    });
    let ends = sweep[0].bitrate == 5
        && sweep[100].bitrate == 1
        && sweep[100].motion_sigma > sweep[0].motion_sigma;
    report(
        4,
        "calibrator law",
        start,
        Duration::from_secs(1),
        mismatches == 0 && monotone && ends,
        format!("{mismatches} of 10000 mismatched, transfer functions monotone: {monotone}"),
    );
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.15) {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    let s: f64 = raw.iter().sum();
    if s == 0.0 {
        let mut one = vec![0.0; n];
        one[0] = 1.0;
        return one;
    }
    raw.iter().map(|v| v / s).collect()
}

fn js_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        let m = (p[i] + q[i]) / 2.0;
        if p[i] > 0.0 {
            total += 0.5 * p[i] * (p[i] / m).ln();
        }
        if q[i] > 0.0 {
            total += 0.5 * q[i] * (q[i] / m).ln();
        }
    }
    total
}

fn hl_oracle(vectors: &[Vec<f64>]) -> Vec<f64> {
    let d = vectors[0].len();
    (0..d)
        .map(|c| {
            let mut mids = Vec::new();
            for (i, a) in vectors.iter().enumerate() {
                for b in &vectors[i + 1..] {
                    mids.push((a[c] + b[c]) / 2.0);
                }
            }
            mids.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = mids.len();
            if n % 2 == 1 {
                mids[n / 2]
            } else {
                (mids[n / 2 - 1] + mids[n / 2]) / 2.0
            }
        })
        .collect()
}

#[test]
fn criterion_5_uir_estimators() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut js_err = 0.0f64;
    let mut js_max = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..12);
        let (p, q) = (random_dist(&mut rng, n), random_dist(&mut rng, n));
        let js = js_divergence(&p, &q).unwrap();
        js_err = js_err.max((js - js_oracle(&p, &q)).abs());
        js_max = js_max.max(js);
    }
    let mut hl_mismatch = 0;
    for _ in 0..500 {
        let k = rng.random_range(2..=10);
        let d = rng.random_range(1..=16);
        let vectors: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
        if hl_estimate(&refs).unwrap() != hl_oracle(&vectors) {
            hl_mismatch += 1;
        }
    }
    let mut sample: Vec<[f64; 1]> = (0..9).map(|i| [(i as f64 - 4.0) * 0.01]).collect();
    sample.push([1000.0]);
    let refs: Vec<&[f64]> = sample.iter().map(|v| v.as_slice()).collect();
    let hl = hl_estimate(&refs).unwrap()[0];
    let mean = sample.iter().map(|v| v[0]).sum::<f64>() / 10.0;
    let robust = hl.abs() < mean.abs();
    let ok = js_err <= 1e-9 && js_max <= std::f64::consts::LN_2 && hl_mismatch == 0 && robust;
    report(
        5,
        "UIR estimators",
        start,
        Duration::from_secs(10),
        ok,
        format!(
            "max JS error {js_err:.1e}, max JS {js_max:.4}, HL mismatches {hl_mismatch}, outlier HL {hl:.4} vs mean {mean:.2}"
        ),
    );
}

fn planted(
    seed: u64,
    items: usize,
    vocab: &[String],
) -> (PlantedTruthModel, Vec<(String, String)>) {
    let mut model = PlantedTruthModel::new(vocab.to_vec(), seed);
    model.easy_accuracy = 0.8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut truth = Vec::new();
    for i in 0..items {
        let query = format!("set {seed} item {i}: what is the vehicle?");
        let answer = vocab[rng.random_range(0..vocab.len())].clone();
        model.insert(query.clone(), answer.clone(), i % 2 == 1);
        truth.push((query, answer));
    }
    (model, truth)
}

#[test]
fn criterion_6_uir_directional_improvement() {
    let start = Instant::now();
    let vocab: Vec<String> = ["car", "truck", "bus", "van"].map(String::from).to_vec();
    let image = Image::filled(8, 8, 3, 0.5).unwrap();

    // Threshold chosen on a held-out planted set.
    let (mut held_model, held) = planted(61, 200, &vocab);
    let probe = EnsembleConfig {
        max_rounds: 1,
        tau: 0.0,
        ..Default::default()
    };
    let samples: Vec<(f64, bool)> = held
        .iter()
        .enumerate()
        .map(|(i, (q, truth))| {
            let label = refine_loop(&mut held_model, &image, q, &probe, i as u64).unwrap();
            (label.report.js, label.answer != *truth)
        })
        .collect();
    let tau = tune_threshold(&samples, &default_tau_grid()).unwrap().tau;

    let (mut model, items) = planted(62, 400, &vocab);
    let config = EnsembleConfig {
        tau,
        ..Default::default()
    };
    let (mut baseline_ok, mut retained, mut retained_ok) = (0usize, 0usize, 0usize);
    for (i, (q, truth)) in items.iter().enumerate() {
        let label = refine_loop(&mut model, &image, q, &config, 1000 + i as u64).unwrap();
        baseline_ok += usize::from(label.baseline == *truth);
        if label.retained {
            retained += 1;
            retained_ok += usize::from(label.answer == *truth);
        }
    }
    let baseline = 100.0 * baseline_ok as f64 / items.len() as f64;
    let kept = 100.0 * retained_ok as f64 / retained.max(1) as f64;
    let ok = retained > 0 && kept - baseline >= 10.0;
    report(
        6,
        "UIR directional improvement",
        start,
        Duration::from_secs(30),
        ok,
        format!(
            "tau {tau:.3}, retained {retained}/400, retained accuracy {kept:.1}% vs unfiltered {baseline:.1}% (+{:.1} pp)",
            kept - baseline
        ),
    );
}

const ANSWERS: [&str; 7] = [
    "yes",
    "Yes.",
    "no",
    "red car",
    "Red automobile!",
    "blue truck",
    "blue  lorry",
];

fn oracle_canonical(answer: &str) -> &'static str {
    match answer {
        "yes" | "Yes." => "yes",
        "no" => "no",
        "red car" | "Red automobile!" => "red car",
        "blue truck" | "blue  lorry" => "blue truck",
        other => panic!("unexpected answer {other}"),
    }
}

fn random_transcript(rng: &mut ChaCha8Rng) -> Transcript {
    let n = rng.random_range(1..25);
    let mut frame = 0;
    let mut turns: Vec<Turn> = Vec::new();
    for i in 0..n {
        frame += rng.random_range(0..2);
        let fact = format!("fact{}", rng.random_range(0..4));
        let answer = ANSWERS[rng.random_range(0..ANSWERS.len())].to_string();
        let valid = rng.random_bool(0.6);
        let open: Vec<u64> = turns.iter().filter_map(|t| t.error_id).collect();
        let (mut error_id, mut correction_of) = (None, None);
        if !valid && rng.random_bool(0.5) {
            error_id = Some(100 + i as u64);
        } else if !open.is_empty() && rng.random_bool(0.4) {
            correction_of = Some(open[rng.random_range(0..open.len())]);
        }
        turns.push(Turn {
            frame,
            query: format!("q{i}"),
            answer_key: "yes".into(),
            fact,
            model_answer: answer,
            valid,
            error_id,
            correction_of,
        });
    }
    Transcript::new(turns).unwrap()
}

fn recovery_oracle(t: &Transcript) -> Option<f64> {
    let mut errors = 0;
    let mut fixed = 0;
    for (i, turn) in t.turns.iter().enumerate() {
        let Some(id) = turn.error_id else { continue };
        errors += 1;
        let mut last = None;
        for later in &t.turns[i + 1..] {
            if later.correction_of == Some(id) {
                last = Some(later);
            }
        }
        if last.is_none() {
            for later in &t.turns[i + 1..] {
                if later.fact == turn.fact {
                    last = Some(later);
                }
            }
        }
        if last.unwrap_or(turn).valid {
            fixed += 1;
        }
    }
    if errors == 0 {
        None
    } else {
        Some(fixed as f64 * 100.0 / errors as f64)
    }
}

fn random_constraints(rng: &mut ChaCha8Rng, t: &Transcript) -> Vec<TemporalConstraint> {
    let n = t.turns.len();
    (0..rng.random_range(1..8))
        .map(|j| {
            let kind = match rng.random_range(0..3) {
                0 => ConstraintKind::Before {
                    earlier: rng.random_range(0..n),
                    later: rng.random_range(0..n),
                },
                1 => ConstraintKind::After {
                    event: rng.random_range(0..n),
                    reference: rng.random_range(0..n),
                },
                _ => {
                    let anchor = &t.turns[rng.random_range(0..n)];
                    let start = anchor.frame.saturating_sub(rng.random_range(0..3));
                    ConstraintKind::UnchangedBetween {
                        fact: anchor.fact.clone(),
                        start,
                        end: anchor.frame + rng.random_range(0..3),
                    }
                }
            };
            TemporalConstraint::new(format!("c{j}"), kind)
        })
        .collect()
}

fn constraint_oracle(t: &Transcript, c: &TemporalConstraint) -> bool {
    let turns = &t.turns;
    match &c.kind {
        ConstraintKind::Before { earlier, later } => {
            turns[*earlier].valid
                && turns[*later].valid
                && turns[*earlier].frame < turns[*later].frame
        }
        ConstraintKind::After { event, reference } => {
            turns[*event].valid
                && turns[*reference].valid
                && turns[*event].frame > turns[*reference].frame
        }
        ConstraintKind::UnchangedBetween { fact, start, end } => {
            let seen: Vec<&str> = turns
                .iter()
                .filter(|x| x.fact == *fact && x.frame >= *start && x.frame <= *end)
                .map(|x| oracle_canonical(&x.model_answer))
                .collect();
            seen.iter().all(|a| *a == seen[0])
        }
    }
}

#[test]
fn criterion_7_metric_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let aliases = AliasTable::default();
    let mut mismatches = Vec::new();
    for case in 0..100 {
        let t = random_transcript(&mut rng);
        let valid = t.turns.iter().filter(|x| x.valid).count();
        let h = 100.0 * (t.turns.len() - valid) as f64 / t.turns.len() as f64;
        if (hallucination_rate(&t).unwrap() - h).abs() > 1e-9 {
            mismatches.push(format!("case {case}: hallucination"));
        }
        if recovery_rate(&t) != recovery_oracle(&t) {
            mismatches.push(format!("case {case}: recovery"));
        }
        let constraints = random_constraints(&mut rng, &t);
        let satisfied = constraints
            .iter()
            .filter(|c| constraint_oracle(&t, c))
            .count();
        let expected = 100.0 * satisfied as f64 / constraints.len() as f64;
        let got = temporal_consistency(&t, &constraints, &aliases)
            .unwrap()
            .unwrap();
        if (got - expected).abs() > 1e-9 {
            mismatches.push(format!("case {case}: consistency {got} vs {expected}"));
        }
    }
    let table: Vec<Turn> = (0..1000)
        .map(|i| Turn {
            frame: i,
            query: "q".into(),
            answer_key: "yes".into(),
            fact: "f".into(),
            model_answer: if i < 833 { "yes" } else { "no" }.into(),
            valid: i < 833,
            error_id: None,
            correction_of: None,
        })
        .collect();
    let h = hallucination_rate(&Transcript::new(table).unwrap()).unwrap();
    let table_ok = format!("{h:.1}") == "16.7";
    report(
        7,
        "metric oracles",
        start,
        Duration::from_secs(5),
        mismatches.is_empty() && table_ok,
        format!("100 transcripts, mismatches {mismatches:?}, 833/1000 valid gives {h:.1}%"),
    );
}

fn inertia_config() -> RunConfig {
    let schedule = DegradationSchedule::early(8, 3).unwrap();
    let mut config = RunConfig::synthetic(88, schedule, MockScript::new(MockBehavior::Inertia));
    config.sequence = SequenceSource::Synthetic(SceneSpec::static_object("car", "red"));
    config.tasks.requery_frames = vec![5];
    config
}

#[test]
fn criterion_8_closed_loop_persistence() {
    let start = Instant::now();
    let config = inertia_config();
    // Script: frames 0-2 corrupted, so frames 0-4 answer "no" to a present car;
    // frame 5 re-asks frame 4's question and the answer snaps back to "yes".
    let episode = run_episode(&config, 0).unwrap();
    let m = &episode.summary.metrics;
    let verdicts: Vec<bool> = episode.turns.iter().map(|l| l.valid.unwrap()).collect();
    let script_ok = verdicts == [false, false, false, false, false, true, true, true]
        && episode.turns[4].error_id == Some(4)
        && episode.turns[5].correction_of == Some(4);
    let metrics_ok = m.hallucination_rate == Some(62.5)
        && (m.errors, m.corrected) == (1, 1)
        && m.recovery_rate == Some(100.0)
        && (m.constraints, m.satisfied) == (7, 6)
        && m.temporal_consistency == Some(600.0 / 7.0);
    let text = run_benchmark(&config).unwrap().render().unwrap();
    let diff = replay(&text).unwrap();
    report(
        8,
        "closed-loop persistence",
        start,
        Duration::from_secs(10),
        script_ok && metrics_ok && diff.is_identical(),
        format!(
            "H {:?}, R {:?}, TC {:?}, replay identical: {}",
            m.hallucination_rate,
            m.recovery_rate,
            m.temporal_consistency,
            diff.is_identical()
        ),
    );
}

#[test]
fn criterion_9_end_to_end_determinism() {
    let start = Instant::now();
    let schedule = DegradationSchedule::intermittent(8, 4, 2).unwrap();
    let mut config = RunConfig::synthetic(2026, schedule, MockScript::new(MockBehavior::Inertia));
    config.episodes = 20;
    config.workers = 4;
    config.tasks.requery_frames = vec![3, 7];
    config.uir = Some(EnsembleConfig::default());
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.jsonl"), dir.path().join("b.jsonl")];
    for p in &paths {
        run_benchmark(&config).unwrap().write(p).unwrap();
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    let turn_lines = String::from_utf8_lossy(&a)
        .matches("\"type\":\"turn\"")
        .count();
    report(
        9,
        "end-to-end determinism",
        start,
        Duration::from_secs(60),
        a == b && turn_lines == 160,
        format!(
            "{} bytes and {turn_lines} turn lines per run file, identical: {}",
            a.len(),
            a == b
        ),
    );
}
