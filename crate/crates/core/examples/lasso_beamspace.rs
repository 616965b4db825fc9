//! Recovers the beamspace matrix from one observation with known delays and
//! shows how the support grows along the regularization path.
//!
//! ```text
//! cargo run --release --example lasso_beamspace
//! ```

use radar_acquisition::codebook::{build_codebook, covering_beam};
use radar_acquisition::lasso::{build_problem, solve_path, solve_path_points, LassoSettings};
use radar_acquisition::numerics::ComplexMatrix;
use radar_acquisition::scene::{delay_steering_vector, sample_geometry, sample_realization, PhysicalConfig};
use radar_acquisition::signal::{make_schedule, noise_variance, observe, radar_response, Strategy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> radar_acquisition::Result<()> {
    let cfg = PhysicalConfig::default();
    let ts = cfg.symbol_duration_s();
    let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scene = sample_realization(&sample_geometry(&cfg, 0, &mut rng)?, 0, &mut rng);
    let truth = scene.targets.iter().map(|t| covering_beam(&cb, t.aoa_rad)).collect::<Result<Vec<_>, _>>()?;

    let schedule = make_schedule(Strategy::Random, cfg.num_beams, 12, &mut rng);
    let response = radar_response(&scene, &cb, cfg.num_subcarriers, ts)?;
    let obs = observe(&response, &schedule, noise_variance(&cfg), cfg.tx_power_w, &mut rng)?;
    let cols: Vec<_> = scene.delays().iter().map(|&d| delay_steering_vector(d, cfg.num_subcarriers, ts)).collect();
    let b_hat = ComplexMatrix::from_columns(cfg.num_subcarriers, &cols)?;
    let problem = build_problem(&obs.r, &b_hat, &schedule.to_matrix(), &LassoSettings::default())?;

    println!("beta        support  residual    converged");
    for p in solve_path_points(&problem)?.iter().step_by(3) {
        println!("{:.3e}  {:7}  {:.3e}  {}", p.beta, p.support.len(), p.residual, p.converged);
    }
    let est = solve_path(&problem, cfg.num_targets)?;
    println!("chosen beta {:.3e}, support {}, debiased residual {:.3e}", est.chosen_beta, est.sparsity, est.debiased_residual);
    for (p, (&t, &e)) in truth.iter().zip(&est.beam_indices).enumerate() {
        // response.g holds the true h_p q_p
        println!(
            "target {p}: true beam {t:2}, estimated {e:2}, |g| {:.3e} against the true {:.3e}",
            est.g_hat[(p, e)].norm(),
            response.g[(e, p)].norm()
        );
    }
    Ok(())
}
