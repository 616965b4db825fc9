//! Target geometry, radar-equation gains and steering vectors.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::C64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const MAX_GEOMETRY_ATTEMPTS: usize = 1000;

/// dBm (or dBm/Hz) to W (or W/Hz).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// dB to linear power ratio (dBsm to m²).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Physical system parameters, all in linear SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConfig {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    pub num_antennas: usize,
    pub num_beams: usize,
    pub num_targets: usize,
    pub noise_psd_w_per_hz: f64,
    pub tx_power_w: f64,
    pub distance_range_m: (f64, f64),
    pub rcs_sqm: f64,
    pub aoa_range_rad: (f64, f64),
}

impl Default for PhysicalConfig {
    /// 128 antennas, 3 targets, 160 MHz at 10 GHz, 36 subcarriers and beams,
    /// -174 dBm/Hz noise, 20 dBsm targets between 10 m and 50 m.
    fn default() -> Self {
        Self {
            carrier_freq_hz: 10e9,
            bandwidth_hz: 160e6,
            num_subcarriers: 36,
            num_antennas: 128,
            num_beams: 36,
            num_targets: 3,
            noise_psd_w_per_hz: dbm_to_watts(-174.0),
            tx_power_w: 1.0,
            distance_range_m: (10.0, 50.0),
            rcs_sqm: db_to_linear(20.0),
            aoa_range_rad: (-PI / 2.0, PI / 2.0),
        }
    }
}

impl PhysicalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let positive = [
            self.carrier_freq_hz,
            self.bandwidth_hz,
            self.noise_psd_w_per_hz,
            self.rcs_sqm,
            self.distance_range_m.0,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("frequencies, noise PSD, RCS and distances must be positive");
        }
        if !(self.tx_power_w.is_finite() && self.tx_power_w >= 0.0) {
            return bad("tx_power_w must be non-negative");
        }
        if self.num_subcarriers == 0 || self.num_antennas == 0 || self.num_beams == 0 {
            return bad("counts must be at least 1");
        }
        if self.num_beams > self.num_antennas {
            return bad("num_beams must not exceed num_antennas");
        }
        if !(self.distance_range_m.0 < self.distance_range_m.1) {
            return bad("distance range must satisfy low < high");
        }
        let (lo, hi) = self.aoa_range_rad;
        if !(lo < hi && lo >= -PI / 2.0 && hi <= PI / 2.0) {
            return bad("aoa range must be an interval inside [-pi/2, pi/2]");
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.num_subcarriers as f64
    }

    /// OFDM symbol duration `T = N_s / BW`.
    pub fn symbol_duration_s(&self) -> f64 {
        self.num_subcarriers as f64 / self.bandwidth_hz
    }

    /// Width of one codebook sector in sin-angle space.
    pub fn sector_width(&self) -> f64 {
        (self.aoa_range_rad.1.sin() - self.aoa_range_rad.0.sin()) / self.num_beams as f64
    }
}

/// A point target.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub distance_m: f64,
    pub aoa_rad: f64,
    /// Round-trip delay `2 d / c`.
    pub delay_s: f64,
    pub gain_variance: f64,
    /// Complex channel gain, present once a realization has been drawn.
    pub gain: Option<C64>,
}

impl Target {
    pub fn new(config: &PhysicalConfig, distance_m: f64, aoa_rad: f64) -> Self {
        Self {
            distance_m,
            aoa_rad,
            delay_s: 2.0 * distance_m / SPEED_OF_LIGHT,
            gain_variance: gain_variance(config, distance_m),
            gain: None,
        }
    }

    pub fn with_gain(mut self, gain: C64) -> Self {
        self.gain = Some(gain);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub targets: Vec<Target>,
    pub geometry_id: usize,
    pub realization_id: Option<usize>,
}

impl Scene {
    pub fn delays(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.delay_s).collect()
    }

    pub fn gain_variances(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.gain_variance).collect()
    }

    /// Channel gains, or `None` if no realization has been drawn.
    pub fn gains(&self) -> Option<Vec<C64>> {
        self.targets.iter().map(|t| t.gain).collect()
    }

    /// Checks the separability rule: distinct codebook sectors in sin-angle
    /// space and at least one delay bin `T/N_s` apart modulo `T`.
    pub fn is_separable(&self, config: &PhysicalConfig) -> bool {
        let min_sin = config.sector_width();
        let period = config.symbol_duration_s();
        let min_delay = period / config.num_subcarriers as f64;
        for (i, a) in self.targets.iter().enumerate() {
            for b in &self.targets[i + 1..] {
                if (a.aoa_rad.sin() - b.aoa_rad.sin()).abs() < min_sin {
                    return false;
                }
                if circular_distance(a.delay_s, b.delay_s, period) < min_delay {
                    return false;
                }
            }
        }
        true
    }
}

/// `|a - b|` on the circle of circumference `period`.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Radar-equation variance `λ² σ / ((4π)³ d⁴)` of the two-way channel gain.
pub fn gain_variance(config: &PhysicalConfig, distance_m: f64) -> f64 {
    let lambda = config.wavelength_m();
    lambda * lambda * config.rcs_sqm / ((4.0 * PI).powi(3) * distance_m.powi(4))
}

/// Draws distances and angles uniformly, resampling until the scene is separable.
pub fn sample_geometry<R: Rng + ?Sized>(
    config: &PhysicalConfig,
    geometry_id: usize,
    rng: &mut R,
) -> Result<Scene> {
    let (dlo, dhi) = config.distance_range_m;
    let (alo, ahi) = config.aoa_range_rad;
    for _ in 0..MAX_GEOMETRY_ATTEMPTS {
        let targets = (0..config.num_targets)
            .map(|_| {
                let d = rng.random_range(dlo..=dhi);
                let phi = rng.random_range(alo..=ahi);
                Target::new(config, d, phi)
            })
            .collect();
        let scene = Scene { targets, geometry_id, realization_id: None };
        if scene.is_separable(config) {
            return Ok(scene);
        }
    }
    Err(Error::SeparabilityFailure { attempts: MAX_GEOMETRY_ATTEMPTS })
}

/// Draws `h_p ~ CN(0, C_{h_p})` independently for every target.
pub fn sample_realization<R: Rng + ?Sized>(scene: &Scene, realization_id: usize, rng: &mut R) -> Scene {
    let targets = scene
        .targets
        .iter()
        .map(|t| {
            let sd = (t.gain_variance / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            t.clone().with_gain(C64::new(re * sd, im * sd))
        })
        .collect();
    Scene { targets, geometry_id: scene.geometry_id, realization_id: Some(realization_id) }
}

/// ULA response `[a(φ)]_i = exp(jπ i sin φ)`, `i = 0..M`.
pub fn steering_vector(aoa_rad: f64, num_antennas: usize) -> Vec<C64> {
    steering_vector_sin(aoa_rad.sin(), num_antennas)
}

/// [`steering_vector`] parameterized by `u = sin φ`.
pub fn steering_vector_sin(u: f64, num_antennas: usize) -> Vec<C64> {
    (0..num_antennas).map(|i| C64::from_polar(1.0, PI * i as f64 * u)).collect()
}

/// `b(τ) = [1, e^{-j2πτ/T}, …, e^{-j2π(N_s-1)τ/T}]`.
pub fn delay_steering_vector(delay_s: f64, num_subcarriers: usize, symbol_duration_s: f64) -> Vec<C64> {
    let step = -2.0 * PI * delay_s / symbol_duration_s;
    (0..num_subcarriers).map(|k| C64::from_polar(1.0, step * k as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wavelength_and_symbol_duration() {
        let cfg = PhysicalConfig::default();
        assert!((cfg.wavelength_m() - 0.029_979_245_8).abs() < 1e-12);
        assert!((cfg.symbol_duration_s() - 225e-9).abs() < 1e-18);
        cfg.validate().unwrap();
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(-174.0) / 3.981_071_705_534_97e-21 - 1.0).abs() < 1e-12);
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn gain_variance_at_30m() {
        // λ = 0.03 m exactly here, matching the hand evaluation
        let cfg = PhysicalConfig { carrier_freq_hz: SPEED_OF_LIGHT / 0.03, ..Default::default() };
        let ch = gain_variance(&cfg, 30.0);
        // 0.03² · 100 / (1984.4017 · 30⁴)
        let expect = 0.09 / (1984.401_707_539_754 * 810_000.0);
        assert!((ch / expect - 1.0).abs() < 1e-12);
        assert!((ch - 5.599e-11).abs() < 1e-14);
        assert!((gain_variance(&cfg, 60.0) * 16.0 / ch - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometry_ranges() {
        let cfg = PhysicalConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for g in 0..200 {
            let s = sample_geometry(&cfg, g, &mut rng).unwrap();
            assert!(s.is_separable(&cfg));
            for t in &s.targets {
                assert!((10.0..=50.0).contains(&t.distance_m));
                assert!(t.delay_s >= 66.71e-9 && t.delay_s <= 333.57e-9);
                assert_eq!(t.delay_s, 2.0 * t.distance_m / SPEED_OF_LIGHT);
                assert!(t.gain.is_none());
            }
        }
    }

    #[test]
    fn mean_distance_matches_uniform_moments() {
        let cfg = PhysicalConfig { num_targets: 1, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|g| sample_geometry(&cfg, g, &mut rng).unwrap().targets[0].distance_m)
            .sum::<f64>()
            / n as f64;
        let sd = 40.0 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 30.0).abs() < 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn impossible_separation_fails() {
        // 40 targets cannot occupy distinct sectors of a 36-beam codebook
        let cfg = PhysicalConfig { num_targets: 40, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(matches!(
            sample_geometry(&cfg, 0, &mut rng),
            Err(Error::SeparabilityFailure { attempts: 1000 })
        ));
    }

    #[test]
    fn realization_moments() {
        let cfg = PhysicalConfig { num_targets: 1, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let geo = sample_geometry(&cfg, 0, &mut rng).unwrap();
        let ch = geo.targets[0].gain_variance;
        let n = 10_000;
        let (mut p, mut vr, mut vi) = (0.0, 0.0, 0.0);
        for r in 0..n {
            let h = sample_realization(&geo, r, &mut rng).targets[0].gain.unwrap();
            p += h.norm_sqr();
            vr += h.re * h.re;
            vi += h.im * h.im;
        }
        let n = n as f64;
        assert!((p / n / ch - 1.0).abs() < 0.05);
        assert!((vr / n / (ch / 2.0) - 1.0).abs() < 0.05);
        assert!((vi / n / (ch / 2.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn steering_vector_examples() {
        assert!(steering_vector(0.0, 8).iter().all(|z| (z - 1.0).norm() < 1e-15));
        let a = steering_vector(PI / 2.0, 4);
        for (z, e) in a.iter().zip([1.0, -1.0, 1.0, -1.0]) {
            assert!((z - e).norm() < 1e-12);
        }
        assert_eq!(a[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn delay_steering_examples() {
        let t = 225e-9;
        assert!(delay_steering_vector(0.0, 36, t).iter().all(|z| (z - 1.0).norm() < 1e-15));
        assert!(delay_steering_vector(t, 36, t).iter().all(|z| (z - 1.0).norm() < 1e-12));
        let cfg = PhysicalConfig::default();
        assert!((cfg.symbol_duration_s() - 36.0 / 160e6).abs() < 1e-20);
    }

    proptest! {
        #[test]
        fn steering_unit_modulus_and_conjugate_symmetry(phi in -1.5..1.5f64, m in 1usize..64) {
            let a = steering_vector(phi, m);
            let b = steering_vector(-phi, m);
            let energy: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((energy - m as f64).abs() < 1e-9);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.conj() - y).norm() < 1e-12);
            }
        }

        #[test]
        fn delay_steering_is_geometric(tau in 0.0..1e-6f64, ns in 2usize..64) {
            let t = 225e-9;
            let b = delay_steering_vector(tau, ns, t);
            let ratio = C64::from_polar(1.0, -2.0 * PI * tau / t);
            for w in b.windows(2) {
                prop_assert!((w[1] - w[0] * ratio).norm() < 1e-9);
                prop_assert!((w[1].norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn gain_variance_decreasing(d1 in 1.0..100.0f64, d2 in 1.0..100.0f64) {
            let cfg = PhysicalConfig::default();
            if d1 < d2 {
                prop_assert!(gain_variance(&cfg, d1) > gain_variance(&cfg, d2));
            }
            let t1 = Target::new(&cfg, d1, 0.0);
            let t2 = Target::new(&cfg, d2, 0.0);
            prop_assert_eq!(t1.delay_s < t2.delay_s, d1 < d2);
        }
    }
}
