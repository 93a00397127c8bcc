//! Samples a two-sided Wiener path, checks the shift identity and prints the
//! noise factor along a few times.
//!
//! cargo run --example wiener_paths -- 11

use fhn_attractor::paths::{lil_statistic, noise_factor, sample_path, WienerPath};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(7);
    let w = sample_path(seed, -50.0, 50.0, 1e-3)?;
    println!(
        "seed {seed}: {} nodes on [{}, {}], omega(0) = {}",
        w.len(),
        w.t_min(),
        w.t_max(),
        w.eval(0.0)?
    );

    let (a, b) = (1.3, -4.2);
    let composed = w.shift(a)?.shift(b)?;
    let direct = w.shift(a + b)?;
    let gap = (-10..=10)
        .map(|k| k as f64)
        .map(|t| (composed.eval(t).unwrap() - direct.eval(t).unwrap()).abs())
        .fold(0.0, f64::max);
    println!("max |theta_b theta_a w - theta_(a+b) w| on [-10, 10]: {gap:e}");

    for t in [-40.0, -10.0, -1.0, 0.0, 1.0, 10.0, 40.0] {
        println!(
            "t = {t:>6}: omega = {:>9.5}, z_0.2 = {:.5}",
            w.eval(t)?,
            noise_factor(&w, 0.2, t)?
        );
    }
    println!(
        "sup |omega(t)/t| over |t| >= 25: {:.4}",
        lil_statistic(&w, 25.0)?
    );

    let text = w.to_csv_string();
    let back = WienerPath::from_csv_str(&text)?;
    println!("csv round trip exact: {}", back.values().eq(w.values()));
    Ok(())
}
