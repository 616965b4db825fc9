//! Estimates target delays with MUSIC and writes the pseudo-spectrum.
//!
//! ```text
//! cargo run --release --example music_delays -- [out_dir]
//! ```

use std::path::PathBuf;

use radar_acquisition::codebook::build_codebook;
use radar_acquisition::music::{estimate_delays_or_fallback, DEFAULT_GRID_OVERSAMPLING};
use radar_acquisition::scene::{circular_distance, sample_geometry, sample_realization, PhysicalConfig};
use radar_acquisition::signal::{make_schedule, noise_variance, observe, radar_response, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> radar_acquisition::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let cfg = PhysicalConfig::default();
    let ts = cfg.symbol_duration_s();
    let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scene = sample_realization(&sample_geometry(&cfg, 0, &mut rng)?, 0, &mut rng);
    let response = radar_response(&scene, &cb, cfg.num_subcarriers, ts)?;

    let grid_step = ts / (DEFAULT_GRID_OVERSAMPLING * cfg.num_subcarriers) as f64;
    println!("delay grid step {:.3} ns", grid_step * 1e9);
    for strategy in Strategy::ALL {
        let schedule = make_schedule(strategy, cfg.num_beams, 12, &mut rng);
        let obs = observe(&response, &schedule, noise_variance(&cfg), cfg.tx_power_w, &mut rng)?;
        let est = estimate_delays_or_fallback(&obs.r, cfg.num_targets, ts, DEFAULT_GRID_OVERSAMPLING)?;
        println!("{strategy}: eigenvalues of R R^H (largest four)");
        for l in est.eigenvalues.iter().take(4) {
            println!("  {l:.3e}");
        }
        for t in scene.delays() {
            let err = est.delays_s.iter().map(|&d| circular_distance(d, t, ts)).fold(f64::INFINITY, f64::min);
            println!("  true delay {:7.2} ns, nearest estimate off by {:.3} ns", t * 1e9, err * 1e9);
        }
        let path = out.join(format!("pseudo_spectrum_{strategy}.csv"));
        est.write_pseudo_spectrum(&path)?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}
