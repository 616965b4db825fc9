//! Squared beamspace difference matrices for one scene: how many wrong
//! hypotheses each schedule can tell apart, and how the bound falls with SNR.
//!
//! ```text
//! cargo run --release --example pep_analysis
//! ```

use radar_acquisition::codebook::{beamspace_vector, build_codebook};
use radar_acquisition::pep::{enumerate_distortions, pep_report, PepInstance, VarianceConvention, DEFAULT_RANK_REL_TOL};
use radar_acquisition::scene::{sample_geometry, PhysicalConfig};
use radar_acquisition::signal::{make_schedule, noise_variance, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> radar_acquisition::Result<()> {
    let cfg = PhysicalConfig::default();
    let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let scene = sample_geometry(&cfg, 0, &mut rng)?;
    let q_true: Vec<Vec<f64>> = scene.targets.iter().map(|t| beamspace_vector(&cb, t.aoa_rad)).collect();
    let distortions = enumerate_distortions(&q_true);
    let n0 = noise_variance(&cfg) / cfg.tx_power_w;
    println!("{} single-target distortions", distortions.len());

    for strategy in Strategy::ALL {
        let full = make_schedule(strategy, cfg.num_beams, 36, &mut rng);
        for slots in [6, 18, 36] {
            let mut inst = PepInstance {
                delays_s: scene.delays(),
                num_subcarriers: cfg.num_subcarriers,
                symbol_duration_s: cfg.symbol_duration_s(),
                schedule: full.prefix(slots),
                gain_variances: scene.gain_variances(),
                q_true: q_true.clone(),
                q_hat: Vec::new(),
            };
            let (mut detectable, mut log_gm, mut worst) = (0, 0.0, 0.0f64);
            for d in &distortions {
                inst.q_hat.clone_from(&d.q_hat);
                let rep = pep_report(&inst, n0, DEFAULT_RANK_REL_TOL, VarianceConvention::default())?;
                if let Some(gm) = rep.geomean_nonzero {
                    detectable += 1;
                    log_gm += gm.ln();
                }
                worst = worst.max(rep.bound_product);
            }
            let gm = if detectable > 0 { (log_gm / detectable as f64).exp() } else { f64::NAN };
            println!(
                "{:<6} L = {slots:2}: {detectable:3} detectable, typical eigenvalue {gm:.2e}, worst bound {worst:.2e}",
                strategy.to_string()
            );
        }
    }

    // the bound for one detectable distortion as the noise level changes
    let mut inst = PepInstance {
        delays_s: scene.delays(),
        num_subcarriers: cfg.num_subcarriers,
        symbol_duration_s: cfg.symbol_duration_s(),
        schedule: make_schedule(Strategy::Sweep, cfg.num_beams, 36, &mut rng),
        gain_variances: scene.gain_variances(),
        q_true: q_true.clone(),
        q_hat: distortions[0].q_hat.clone(),
    };
    println!("noise scale  bound (2N0)  bound (4N0)");
    for scale in [1e4, 1e5, 1e6, 1e7] {
        let a = pep_report(&inst, n0 * scale, DEFAULT_RANK_REL_TOL, VarianceConvention::RayleighPdf)?;
        let b = pep_report(&inst, n0 * scale, DEFAULT_RANK_REL_TOL, VarianceConvention::UnitPower)?;
        println!("{scale:10.0e}  {:.3e}    {:.3e}", a.bound_product, b.bound_product);
    }
    inst.q_hat = q_true;
    println!("identical hypotheses: bound {}", pep_report(&inst, n0, DEFAULT_RANK_REL_TOL, VarianceConvention::default())?.bound_product);
    Ok(())
}
