//! Compares the two probing strategies on one scene: which beams get energy,
//! and how strong each target's echo is compared with the noise.
//!
//! ```text
//! cargo run --release --example probing
//! ```

use radar_acquisition::codebook::{build_codebook, covering_beam};
use radar_acquisition::numerics::norm_sqr;
use radar_acquisition::scene::{sample_geometry, sample_realization, PhysicalConfig};
use radar_acquisition::signal::{make_schedule, noise_variance, observe, radar_response, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> radar_acquisition::Result<()> {
    let cfg = PhysicalConfig::default();
    let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scene = sample_realization(&sample_geometry(&cfg, 0, &mut rng)?, 0, &mut rng);
    let response = radar_response(&scene, &cb, cfg.num_subcarriers, cfg.symbol_duration_s())?;
    let nv = noise_variance(&cfg);
    println!("per-sample noise power {nv:.3e} W");
    for t in &scene.targets {
        println!(
            "target at {:5.1} m, {:6.1} deg, beam {:2}, |h|^2 = {:.2e}",
            t.distance_m,
            t.aoa_rad.to_degrees(),
            covering_beam(&cb, t.aoa_rad)?,
            t.gain.unwrap().norm_sqr()
        );
    }

    for strategy in Strategy::ALL {
        for slots in [6, 18, 36] {
            let schedule = make_schedule(strategy, cfg.num_beams, slots, &mut rng);
            let obs = observe(&response, &schedule, nv, cfg.tx_power_w, &mut rng)?;
            let probed = (0..cfg.num_beams).filter(|&i| (0..slots).any(|l| schedule.weight(i, l) > 0.0)).count();
            let clean = obs.noiseless();
            let snr = norm_sqr(clean.as_slice()) / (nv * clean.as_slice().len() as f64);
            println!("{strategy:>6} L = {slots:2}: {probed:2} beams probed, mean echo SNR {:5.1} dB", 10.0 * snr.log10());
        }
    }
    Ok(())
}
