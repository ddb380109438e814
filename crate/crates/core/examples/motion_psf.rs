//! Renders a motion blur kernel from a camera trajectory and blurs an image
//! with it.

use persistbench::degrade::{apply_motion_blur, render_psf, MotionTrajectory};
use persistbench::imaging::Image;

fn main() -> persistbench::Result<()> {
    // tx ty tz rx ry rz per line; a diagonal sweep with a small yaw.
    let trace = "\
0 0 0 0 0 0
1 0.5 0 0 0.0005 0
2 1 0 0 0.001 0
3 1.5 0 0 0.0015 0
4 2 0 0 0.002 0
";
    let trajectory = MotionTrajectory::parse_trace(trace)?;
    let psf = render_psf(&trajectory, 15, 1.0)?;
    println!(
        "{}x{} kernel, sum {:.12}",
        psf.side(),
        psf.side(),
        psf.kernel().sum()
    );
    for y in 0..psf.side() {
        let row: String = (0..psf.side())
            .map(|x| match psf.weight(x, y) {
                w if w > 0.1 => '#',
                w if w > 0.02 => '+',
                w if w > 0.0 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{row}|");
    }

    let bar = Image::from_fn(
        32,
        16,
        1,
        |x, _, _| if (12..16).contains(&x) { 1.0 } else { 0.0 },
    )?;
    let blurred = apply_motion_blur(&bar, &psf, 0.0, 0)?;
    let profile: Vec<String> = (8..22)
        .map(|x| format!("{:.2}", blurred.get(x, 8, 0)))
        .collect();
    println!("row 8 after blur: {}", profile.join(" "));
    Ok(())
}
