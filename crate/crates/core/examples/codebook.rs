//! Synthesizes the sector codebook and reports how well it separates angles.
//!
//! ```text
//! cargo run --release --example codebook
//! ```

use radar_acquisition::codebook::{beamspace_vector, build_codebook, covering_beam};
use radar_acquisition::scene::PhysicalConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> radar_acquisition::Result<()> {
    let cfg = PhysicalConfig::default();
    let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad)?;
    println!("{} beams for a {}-element array", cb.num_beams(), cb.num_antennas());
    println!("largest |F^H F| off-diagonal: {:.2e}", cb.max_gram_off_diagonal());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 2000;
    let mut ratios = Vec::with_capacity(draws);
    for _ in 0..draws {
        let phi = rng.random_range(cfg.aoa_range_rad.0..cfg.aoa_range_rad.1);
        let q = beamspace_vector(&cb, phi);
        let own = q[covering_beam(&cb, phi)?];
        let runner_up = q.iter().copied().filter(|&v| v < own).fold(0.0, f64::max);
        ratios.push(runner_up / own);
    }
    ratios.sort_by(f64::total_cmp);
    let pct = |p: f64| ratios[((draws - 1) as f64 * p) as usize];
    println!("second-largest / covering beam gain over {draws} random angles:");
    println!("  median {:.3}  90th {:.3}  99th {:.3}", pct(0.5), pct(0.9), pct(0.99));
    let share = ratios.iter().filter(|&&r| r <= 0.1).count() as f64 / draws as f64;
    println!("  {:.1}% of angles see less than 10% leakage into the next beam", 100.0 * share);
    Ok(())
}
