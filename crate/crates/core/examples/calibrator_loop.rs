//! Drives the difficulty controller with a scripted sequence of judgments and
//! prints the severity and operator parameters chosen for each frame.

use persistbench::calibrate::{
    replay_audit, step, CalibratorConfig, CalibratorState, EpiPolarity, FeedbackWindow,
};

fn main() {
    let judgments = [
        true, true, false, false, true, false, true, true, true, false,
    ];
    for polarity in [EpiPolarity::AsWritten, EpiPolarity::Inverted] {
        let config = CalibratorConfig {
            window: 3,
            epi_polarity: polarity,
            ..Default::default()
        };
        let mut state = CalibratorState::initial(&config);
        let mut window = FeedbackWindow::new(config.window);
        let mut feedback = None;
        println!("{polarity:?}");
        for (t, valid) in judgments.iter().enumerate() {
            let (lambda, params) = step(&config, &mut state, feedback);
            println!(
                "  t={t} lambda={lambda:.3} blur={:.2}px gain={:.2}x bitrate={} answer {}",
                params.motion_sigma,
                params.gain,
                params.bitrate,
                if *valid { "valid" } else { "invalid" }
            );
            feedback = Some(window.push(*valid));
        }
        println!("  audit replays: {}", replay_audit(&config, &state.audit));
    }
}
