//! Runs the full two-stage estimator on a handful of scenes and compares it
//! with the genie that knows the delays.
//!
//! ```text
//! cargo run --release --example two_stage_pipeline
//! ```

use radar_acquisition::codebook::build_codebook;
use radar_acquisition::harness::{rng, run_trial, TrialKnobs};
use radar_acquisition::scene::{sample_geometry, sample_realization, PhysicalConfig};
use radar_acquisition::signal::Strategy;

fn main() -> radar_acquisition::Result<()> {
    let cfg = PhysicalConfig::default();
    let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad)?;
    let seed = 42;
    let (geometries, realizations) = (4u64, 5u64);
    println!("strategy  L   two-stage P_MD  genie P_MD");
    for strategy in Strategy::ALL {
        for slots in [6, 18, 36] {
            let mut md = [0.0; 2];
            for g in 0..geometries {
                let geo = sample_geometry(&cfg, g as usize, &mut rng::stream(seed, rng::GEOMETRY, &[g]))?;
                for r in 0..realizations {
                    let scene = sample_realization(&geo, r as usize, &mut rng::stream(seed, rng::REALIZATION, &[g, r]));
                    for (k, genie) in [false, true].into_iter().enumerate() {
                        let knobs = TrialKnobs { genie_delays: genie, ..Default::default() };
                        let out = run_trial(
                            &cfg,
                            &scene,
                            &cb,
                            strategy,
                            slots,
                            &knobs,
                            &mut rng::stream(seed, rng::SCHEDULE, &[g, r]),
                            &mut rng::stream(seed, rng::NOISE, &[g, r]),
                        )?;
                        md[k] += out.p_md;
                    }
                }
            }
            let n = (geometries * realizations) as f64;
            println!("{:<8} {slots:>3}   {:>13.3}  {:>10.3}", strategy.to_string(), md[0] / n, md[1] / n);
        }
    }
    Ok(())
}
