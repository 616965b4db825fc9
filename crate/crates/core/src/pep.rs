//! Pairwise error probability analysis of a probing schedule.
//!
//! Stacking the slots of `R` gives `vec(R) = D(q) h + z`, where column `p` of
//! `D(q)` is `(q_pᵀ w_l) b(τ_p)` over all slots `l`. Two beamspace hypotheses
//! `q` and `q̂` are told apart through the squared beamspace difference matrix
//! `Λ_h^{1/2} (D(q) − D(q̂))ᴴ (D(q) − D(q̂)) Λ_h^{1/2}`. Its rank sets the error
//! exponent and the geometric mean of its nonzero eigenvalues sets the SNR gain.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{argmax, beamspace_vector, Codebook};
use crate::error::{Error, Result};
use crate::harness::rng;
use crate::numerics::{hermitian_eig, ComplexMatrix, C64};
use crate::output::{csv_writer, finish_csv};
use crate::scene::{delay_steering_vector, sample_geometry, PhysicalConfig};
use crate::signal::{make_schedule, noise_variance, BeamSchedule, Strategy};

/// Eigenvalues below this fraction of the largest count as zero.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PepInstance {
    pub delays_s: Vec<f64>,
    pub num_subcarriers: usize,
    pub symbol_duration_s: f64,
    pub schedule: BeamSchedule,
    /// Diagonal of `Λ_h`.
    pub gain_variances: Vec<f64>,
    pub q_true: Vec<Vec<f64>>,
    pub q_hat: Vec<Vec<f64>>,
}

impl PepInstance {
    pub fn validate(&self) -> Result<()> {
        let p = self.delays_s.len();
        if self.gain_variances.len() != p || self.q_true.len() != p || self.q_hat.len() != p {
            return Err(Error::ShapeMismatch(format!(
                "{p} delays, {} gain variances, {} true and {} distorted beamspace vectors",
                self.gain_variances.len(),
                self.q_true.len(),
                self.q_hat.len()
            )));
        }
        if let Some(v) = self.gain_variances.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::InvalidConfig(format!("gain variance {v} is not positive")));
        }
        Ok(())
    }
}

/// How the normalized fading amplitude is scaled when averaging the
/// conditional bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceConvention {
    /// Rayleigh pdf `|h| e^{−|h|²/2}`, so `E|h|² = 2`; the bound reads
    /// `∏ 1/(λ_p/(2N_0) + 1)`.
    #[default]
    RayleighPdf,
    /// `E|h|² = 1`, giving `∏ 1/(λ_p/(4N_0) + 1)`.
    UnitPower,
}

impl VarianceConvention {
    /// `E|h̃|²` under this convention.
    pub fn amplitude_power(self) -> f64 {
        match self {
            Self::RayleighPdf => 2.0,
            Self::UnitPower => 1.0,
        }
    }

    /// The `c` in `λ / (c N_0)`.
    fn noise_factor(self) -> f64 {
        4.0 / self.amplitude_power()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PepReport {
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    /// Absent when the rank is zero.
    pub geomean_nonzero: Option<f64>,
    pub bound_product: f64,
    /// High-SNR form `∏ (λ_p/(c N_0))^{-1}` over the nonzero eigenvalues.
    pub bound_exponent: f64,
}

/// Stacked dictionary `D(q)`, `(L N_s) x P`.
pub fn stack_dictionary(
    delays_s: &[f64],
    num_subcarriers: usize,
    symbol_duration_s: f64,
    schedule: &BeamSchedule,
    q: &[Vec<f64>],
) -> Result<ComplexMatrix> {
    if delays_s.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("{} delays for {} beamspace vectors", delays_s.len(), q.len())));
    }
    if let Some(bad) = q.iter().find(|v| v.len() != schedule.num_beams()) {
        return Err(Error::ShapeMismatch(format!(
            "beamspace vector of length {} against {} beams",
            bad.len(),
            schedule.num_beams()
        )));
    }
    let (ns, l) = (num_subcarriers, schedule.num_slots());
    let mut d = ComplexMatrix::zeros(ns * l, q.len());
    for (p, (&tau, qp)) in delays_s.iter().zip(q).enumerate() {
        let b = delay_steering_vector(tau, ns, symbol_duration_s);
        let col = d.col_mut(p);
        for slot in 0..l {
            let gain: f64 = qp.iter().zip(schedule.column(slot)).map(|(a, w)| a * w).sum();
            col[slot * ns..(slot + 1) * ns].iter_mut().zip(&b).for_each(|(c, bk)| *c = bk * gain);
        }
    }
    Ok(d)
}

/// `Λ_h^{1/2} D̃ᴴ D̃ Λ_h^{1/2}` with `D̃ = D(q) − D(q̂)`.
pub fn squared_difference_matrix(instance: &PepInstance) -> Result<ComplexMatrix> {
    instance.validate()?;
    let stack = |q: &[Vec<f64>]| {
        stack_dictionary(&instance.delays_s, instance.num_subcarriers, instance.symbol_duration_s, &instance.schedule, q)
    };
    let diff = stack(&instance.q_true)?.sub(&stack(&instance.q_hat)?)?;
    let sd: Vec<f64> = instance.gain_variances.iter().map(|v| v.sqrt()).collect();
    let g = diff.gram();
    let mut out = ComplexMatrix::from_fn(g.rows(), g.cols(), |a, b| g[(a, b)] * (sd[a] * sd[b]));
    // exact Hermitian symmetry for the eigen-solver
    for a in 0..out.rows() {
        out[(a, a)] = C64::new(out[(a, a)].re, 0.0);
    }
    Ok(out)
}

/// Rank, geometric mean and the two bound forms for noise level `n0`.
pub fn pep_report(instance: &PepInstance, n0: f64, rank_rel_tol: f64, convention: VarianceConvention) -> Result<PepReport> {
    if !(n0 > 0.0) {
        return Err(Error::InvalidConfig(format!("N_0 must be positive, got {n0}")));
    }
    let m = squared_difference_matrix(instance)?;
    let eigenvalues: Vec<f64> = hermitian_eig(&m)?.eigenvalues.into_iter().map(|l| l.max(0.0)).collect();
    Ok(report_from_eigenvalues(eigenvalues, n0, rank_rel_tol, convention))
}

fn report_from_eigenvalues(eigenvalues: Vec<f64>, n0: f64, rank_rel_tol: f64, convention: VarianceConvention) -> PepReport {
    let lmax = eigenvalues.first().copied().unwrap_or(0.0);
    let nonzero: Vec<f64> = if lmax > 0.0 { eigenvalues.iter().copied().filter(|&l| l > rank_rel_tol * lmax).collect() } else { Vec::new() };
    let rank = nonzero.len();
    let geomean_nonzero = (rank > 0).then(|| (nonzero.iter().map(|l| l.ln()).sum::<f64>() / rank as f64).exp());
    let scale = convention.noise_factor() * n0;
    let bound_product = nonzero.iter().map(|l| 1.0 / (l / scale + 1.0)).product();
    let bound_exponent = nonzero.iter().map(|l| scale / l).product();
    PepReport { eigenvalues, rank, geomean_nonzero, bound_product, bound_exponent }
}

/// One wrong hypothesis: `target`'s dominant entry swapped into `beam`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    pub target: usize,
    pub beam: usize,
    pub q_hat: Vec<Vec<f64>>,
}

/// Every single-target substitution of the dominant beam, `P (N_b − 1)` in all.
/// The dominant and substituted entries trade places, so magnitudes are kept.
pub fn enumerate_distortions(q_true: &[Vec<f64>]) -> Vec<Distortion> {
    let mut out = Vec::new();
    for (p, qp) in q_true.iter().enumerate() {
        let Some(dominant) = argmax(qp) else { continue };
        for beam in (0..qp.len()).filter(|&j| j != dominant) {
            let mut q_hat = q_true.to_vec();
            q_hat[p].swap(dominant, beam);
            out.push(Distortion { target: p, beam, q_hat });
        }
    }
    out
}

/// One row of `pep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PepRow {
    pub strategy: Strategy,
    pub slots: usize,
    pub instance: usize,
    pub distortion: usize,
    pub rank: usize,
    pub geomean: Option<f64>,
    pub bound_product: f64,
}

#[derive(Debug, Clone)]
pub struct PepCampaign {
    pub config: PhysicalConfig,
    pub strategy: Strategy,
    pub slots: Vec<usize>,
    pub num_instances: usize,
    pub master_seed: u64,
    pub rank_rel_tol: f64,
    pub convention: VarianceConvention,
}

/// Rank and geometric mean of every distortion on `num_instances` geometries.
///
/// Instance `k` uses the same geometry as geometry `k` of a detection campaign
/// with that seed. Schedules for different `L` are prefixes of one draw, so
/// ranks are nested in `L`. `N_0` is the per-sample noise power divided by the
/// transmit power. Rows come back in (L, instance, distortion) order.
pub fn rank_geomean_campaign(campaign: &PepCampaign, codebook: &Codebook) -> Result<Vec<PepRow>> {
    let cfg = &campaign.config;
    let n0 = noise_variance(cfg) / cfg.tx_power_w;
    let max_slots = campaign.slots.iter().copied().max().unwrap_or(0);
    let per_instance = (0..campaign.num_instances)
        .into_par_iter()
        .map(|k| -> Result<Vec<PepRow>> {
            let id = k as u64;
            let scene = sample_geometry(cfg, k, &mut rng::stream(campaign.master_seed, rng::GEOMETRY, &[id]))?;
            let full = make_schedule(
                campaign.strategy,
                cfg.num_beams,
                max_slots,
                &mut rng::stream(campaign.master_seed, rng::PEP_SCHEDULE, &[id]),
            );
            let q_true: Vec<Vec<f64>> = scene.targets.iter().map(|t| beamspace_vector(codebook, t.aoa_rad)).collect();
            let distortions = enumerate_distortions(&q_true);
            let mut rows = Vec::new();
            for &l in &campaign.slots {
                let mut instance = PepInstance {
                    delays_s: scene.delays(),
                    num_subcarriers: cfg.num_subcarriers,
                    symbol_duration_s: cfg.symbol_duration_s(),
                    schedule: full.prefix(l),
                    gain_variances: scene.gain_variances(),
                    q_true: q_true.clone(),
                    q_hat: Vec::new(),
                };
                for (j, d) in distortions.iter().enumerate() {
                    instance.q_hat.clone_from(&d.q_hat);
                    let rep = pep_report(&instance, n0, campaign.rank_rel_tol, campaign.convention)?;
                    rows.push(PepRow {
                        strategy: campaign.strategy,
                        slots: l,
                        instance: k,
                        distortion: j,
                        rank: rep.rank,
                        geomean: rep.geomean_nonzero,
                        bound_product: rep.bound_product,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;

    // regroup from instance-major to L-major order
    let mut rows = Vec::new();
    for l in &campaign.slots {
        for inst in &per_instance {
            rows.extend(inst.iter().filter(|r| r.slots == *l).cloned());
        }
    }
    Ok(rows)
}

pub const PEP_CSV_HEADER: [&str; 7] = ["strategy", "L", "instance", "distortion", "rank", "geomean", "bound_product"];

/// Writes `pep.csv`; an absent geometric mean is an empty field.
pub fn write_pep_csv(path: &Path, rows: &[PepRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    w.write_record(PEP_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.strategy.to_string(),
            r.slots.to_string(),
            r.instance.to_string(),
            r.distortion.to_string(),
            r.rank.to_string(),
            r.geomean.map(|g| format!("{g:e}")).unwrap_or_default(),
            format!("{:e}", r.bound_product),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_codebook;
    use crate::numerics::testutil::randn;
    use crate::scene::{sample_realization, Scene};
    use crate::signal::{radar_response, Strategy};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TS: f64 = 225e-9;

    fn random_q<R: Rng>(rng: &mut R, p: usize, nb: usize) -> Vec<Vec<f64>> {
        (0..p).map(|_| (0..nb).map(|_| rng.random_range(0.0..1.0)).collect()).collect()
    }

    fn random_instance<R: Rng>(rng: &mut R, p: usize, nb: usize, ns: usize, l: usize) -> PepInstance {
        PepInstance {
            delays_s: (0..p).map(|_| rng.random_range(0.0..TS)).collect(),
            num_subcarriers: ns,
            symbol_duration_s: TS,
            schedule: make_schedule(Strategy::Random, nb, l, rng),
            gain_variances: (0..p).map(|_| rng.random_range(0.5..2.0)).collect(),
            q_true: random_q(rng, p, nb),
            q_hat: random_q(rng, p, nb),
        }
    }

    #[test]
    fn one_hot_slot_selects_beam_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sched = make_schedule(Strategy::Sweep, 5, 3, &mut rng).prefix(1);
        let q = random_q(&mut rng, 2, 5);
        let delays = [10e-9, 80e-9];
        let d = stack_dictionary(&delays, 6, TS, &sched, &q).unwrap();
        assert_eq!(d.shape(), (6, 2));
        for p in 0..2 {
            let b = delay_steering_vector(delays[p], 6, TS);
            for k in 0..6 {
                assert!((d[(k, p)] - b[k] * q[p][0]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn stacked_model_matches_signal_module() {
        let cfg = PhysicalConfig::default();
        let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let geo = sample_geometry(&cfg, 0, &mut rng).unwrap();
            let scene: Scene = sample_realization(&geo, 0, &mut rng);
            let sched = make_schedule(Strategy::Random, cfg.num_beams, 7, &mut rng);
            let q: Vec<Vec<f64>> = scene.targets.iter().map(|t| beamspace_vector(&cb, t.aoa_rad)).collect();
            let d = stack_dictionary(&scene.delays(), cfg.num_subcarriers, cfg.symbol_duration_s(), &sched, &q).unwrap();
            let lhs = d.matvec(&scene.gains().unwrap());
            let resp = radar_response(&scene, &cb, cfg.num_subcarriers, cfg.symbol_duration_s()).unwrap();
            let rhs = resp.b.matmul(&resp.g.transpose()).unwrap().matmul(&sched.to_matrix()).unwrap();
            let scale = rhs.max_abs();
            for (a, b) in lhs.iter().zip(rhs.as_slice()) {
                assert!((a - b).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn identical_hypotheses_give_zero_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut inst = random_instance(&mut rng, 3, 8, 6, 4);
        inst.q_hat = inst.q_true.clone();
        assert_eq!(squared_difference_matrix(&inst).unwrap().max_abs(), 0.0);
        let rep = pep_report(&inst, 1.0, DEFAULT_RANK_REL_TOL, VarianceConvention::default()).unwrap();
        assert_eq!(rep.rank, 0);
        assert_eq!(rep.bound_product, 1.0);
        assert_eq!(rep.geomean_nonzero, None);
    }

    #[test]
    fn single_target_error_has_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut inst = random_instance(&mut rng, 3, 8, 6, 5);
        inst.q_hat = inst.q_true.clone();
        inst.q_hat[1] = random_q(&mut rng, 1, 8).remove(0);
        let rep = pep_report(&inst, 1.0, DEFAULT_RANK_REL_TOL, VarianceConvention::default()).unwrap();
        assert_eq!(rep.rank, 1);
    }

    #[test]
    fn trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let inst = random_instance(&mut rng, 3, 6, 5, 4);
            let m = squared_difference_matrix(&inst).unwrap();
            let stack = |q: &[Vec<f64>]| stack_dictionary(&inst.delays_s, 5, TS, &inst.schedule, q).unwrap();
            let (a, b) = (stack(&inst.q_true), stack(&inst.q_hat));
            let expect: f64 = (0..3)
                .map(|p| {
                    let col: f64 = a.col(p).iter().zip(b.col(p)).map(|(x, y)| (x - y).norm_sqr()).sum();
                    inst.gain_variances[p] * col
                })
                .sum();
            assert!((m.trace().re - expect).abs() <= 1e-12 * expect);
            assert!(m.hermitian_asymmetry() < 1e-14);
        }
    }

    #[test]
    fn closed_form_substitution() {
        let n0 = 0.3;
        let rep = report_from_eigenvalues(vec![2.0 * n0], n0, DEFAULT_RANK_REL_TOL, VarianceConvention::RayleighPdf);
        assert!((rep.bound_product - 0.5).abs() < 1e-15);
        assert!((rep.bound_exponent - 1.0).abs() < 1e-15);
        let rep = report_from_eigenvalues(vec![4.0 * n0], n0, DEFAULT_RANK_REL_TOL, VarianceConvention::UnitPower);
        assert!((rep.bound_product - 0.5).abs() < 1e-15);
        let rep = report_from_eigenvalues(vec![8.0, 2.0, 1e-12], 1.0, DEFAULT_RANK_REL_TOL, VarianceConvention::RayleighPdf);
        assert_eq!(rep.rank, 2);
        assert!((rep.geomean_nonzero.unwrap() - 4.0).abs() < 1e-12);
        assert!((rep.bound_product - 1.0 / (5.0 * 2.0)).abs() < 1e-15);
        assert!((rep.bound_exponent - 0.25).abs() < 1e-15);
    }

    /// Sample mean of `exp(−Σ λ_p |h̃_p|² / (4 N_0))` with `E|h̃|² = power`.
    fn monte_carlo_bound<R: Rng>(rng: &mut R, eigenvalues: &[f64], n0: f64, power: f64, draws: usize) -> f64 {
        // randn has unit-variance real and imaginary parts, E|z|² = 2
        let sd = (power / 2.0).sqrt();
        let sum: f64 = (0..draws)
            .map(|_| {
                let e: f64 = eigenvalues.iter().map(|l| l * (randn(rng) * sd).norm_sqr()).sum();
                (-e / (4.0 * n0)).exp()
            })
            .sum();
        sum / draws as f64
    }

    #[test]
    fn bound_matches_monte_carlo_under_both_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..4 {
            let mut inst = random_instance(&mut rng, 3, 8, 6, 5);
            inst.q_hat = inst.q_true.iter().map(|q| q.iter().map(|v| v * rng.random_range(0.3..1.7)).collect()).collect();
            let lmax = hermitian_eig(&squared_difference_matrix(&inst).unwrap()).unwrap().eigenvalues[0];
            let n0 = lmax / 6.0;
            for conv in [VarianceConvention::RayleighPdf, VarianceConvention::UnitPower] {
                let rep = pep_report(&inst, n0, DEFAULT_RANK_REL_TOL, conv).unwrap();
                assert!(rep.rank > 1);
                let mc = monte_carlo_bound(&mut rng, &rep.eigenvalues, n0, conv.amplitude_power(), 40_000);
                assert!((mc - rep.bound_product).abs() <= 0.03 * rep.bound_product, "{conv:?}: {mc} vs {}", rep.bound_product);
            }
        }
    }

    #[test]
    fn distortion_counts_and_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(enumerate_distortions(&random_q(&mut rng, 1, 3)).len(), 2);
        let q = random_q(&mut rng, 3, 36);
        let ds = enumerate_distortions(&q);
        assert_eq!(ds.len(), 105);
        for d in &ds {
            let changed: Vec<usize> = (0..3).filter(|&p| d.q_hat[p] != q[p]).collect();
            assert_eq!(changed, vec![d.target]);
            assert_eq!(argmax(&d.q_hat[d.target]), Some(d.beam));
            let mut a = d.q_hat[d.target].clone();
            let mut b = q[d.target].clone();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    fn small_campaign(strategy: Strategy, slots: Vec<usize>) -> Vec<PepRow> {
        let cfg = PhysicalConfig::default();
        let cb = build_codebook(cfg.num_antennas, cfg.num_beams, cfg.aoa_range_rad).unwrap();
        let campaign = PepCampaign {
            config: cfg,
            strategy,
            slots,
            num_instances: 3,
            master_seed: 11,
            rank_rel_tol: DEFAULT_RANK_REL_TOL,
            convention: VarianceConvention::default(),
        };
        rank_geomean_campaign(&campaign, &cb).unwrap()
    }

    #[test]
    fn full_sweep_detects_every_distortion() {
        let rows = small_campaign(Strategy::Sweep, vec![36]);
        assert_eq!(rows.len(), 3 * 105);
        assert!(rows.iter().all(|r| r.rank >= 1));
    }

    #[test]
    fn short_sweep_misses_unprobed_pairs_and_rank_is_nested() {
        let rows = small_campaign(Strategy::Sweep, vec![6, 18]);
        let zero = |l| rows.iter().filter(|r| r.slots == l && r.rank == 0).count();
        assert!(zero(6) > zero(18));
        for r6 in rows.iter().filter(|r| r.slots == 6) {
            let r18 = rows.iter().find(|r| r.slots == 18 && r.instance == r6.instance && r.distortion == r6.distortion).unwrap();
            assert!(r18.rank >= r6.rank);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rank_scale_invariance_and_monotone_bound(seed in any::<u64>(), c in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = random_instance(&mut rng, 3, 6, 4, 3);
            let mut scaled = inst.clone();
            scaled.gain_variances.iter_mut().for_each(|v| *v *= c);
            let conv = VarianceConvention::default();
            let a = pep_report(&inst, 1.0, DEFAULT_RANK_REL_TOL, conv).unwrap();
            let b = pep_report(&scaled, 1.0, DEFAULT_RANK_REL_TOL, conv).unwrap();
            prop_assert_eq!(a.rank, b.rank);
            if let (Some(ga), Some(gb)) = (a.geomean_nonzero, b.geomean_nonzero) {
                prop_assert!((gb - c * ga).abs() <= 1e-9 * gb);
            }
            prop_assert!(a.bound_product > 0.0 && a.bound_product <= 1.0);
            let quieter = pep_report(&inst, 0.5, DEFAULT_RANK_REL_TOL, conv).unwrap();
            prop_assert!(quieter.bound_product <= a.bound_product);
            prop_assert!(a.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
