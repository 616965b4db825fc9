//! Probing schedules, the radar response matrix and noisy observations.
//!
//! The observation model is `R = √P_tx · T·W + Z` with `T = B·Gᵀ`, where the
//! columns of `B` are delay steering vectors and column `p` of `G` is
//! `h_p q_p`. Noise is circular complex Gaussian with per-sample power
//! `N_0 · BW / N_s`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::{beamspace_vector, Codebook};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};
use crate::scene::{delay_steering_vector, PhysicalConfig, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// One codebook beam per slot, cycling through the codebook.
    Sweep,
    /// Every beam in every slot with weight `x²/N_b`, `x ~ N(0, 1)`.
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Sweep, Strategy::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Sweep => "sweep",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sweep" => Ok(Strategy::Sweep),
            "random" | "random-multibeam" | "multibeam" => Ok(Strategy::Random),
            other => Err(Error::InvalidConfig(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Nonnegative `N_b x L` power weights, column `l` holding `|w_{l,i}|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSchedule {
    pub strategy: Strategy,
    num_beams: usize,
    /// Column-major.
    weights: Vec<f64>,
}

impl BeamSchedule {
    pub fn num_beams(&self) -> usize {
        self.num_beams
    }

    pub fn num_slots(&self) -> usize {
        self.weights.len() / self.num_beams
    }

    pub fn column(&self, l: usize) -> &[f64] {
        &self.weights[l * self.num_beams..(l + 1) * self.num_beams]
    }

    pub fn weight(&self, beam: usize, slot: usize) -> f64 {
        self.weights[slot * self.num_beams + beam]
    }

    /// The first `slots` columns.
    pub fn prefix(&self, slots: usize) -> Self {
        let n = slots.min(self.num_slots()) * self.num_beams;
        Self { strategy: self.strategy, num_beams: self.num_beams, weights: self.weights[..n].to_vec() }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_fn(self.num_beams, self.num_slots(), |i, l| self.weight(i, l))
    }
}

/// Draws a schedule of `slots` columns. Random columns are drawn in slot order, so
/// a shorter schedule from the same stream is a prefix of a longer one.
pub fn make_schedule<R: Rng + ?Sized>(strategy: Strategy, num_beams: usize, slots: usize, rng: &mut R) -> BeamSchedule {
    let mut weights = vec![0.0; num_beams * slots];
    match strategy {
        Strategy::Sweep => {
            for l in 0..slots {
                weights[l * num_beams + l % num_beams] = 1.0;
            }
        }
        Strategy::Random => {
            let scale = 1.0 / num_beams as f64;
            for w in weights.iter_mut() {
                let x: f64 = rng.sample(StandardNormal);
                *w = scale * x * x;
            }
        }
    }
    BeamSchedule { strategy, num_beams, weights }
}

/// Factored radar response `T = B·Gᵀ`.
#[derive(Debug, Clone)]
pub struct RadarResponse {
    /// `N_s x P` delay steering columns.
    pub b: ComplexMatrix,
    /// `N_b x P`, column `p` is `h_p q_p`.
    pub g: ComplexMatrix,
    /// `N_s x N_b`.
    pub t: ComplexMatrix,
}

pub fn radar_response(scene: &Scene, codebook: &Codebook, num_subcarriers: usize, symbol_duration_s: f64) -> Result<RadarResponse> {
    let gains = scene.gains().ok_or_else(|| Error::InvalidConfig("scene has no sampled gains".into()))?;
    let b_cols: Vec<Vec<C64>> = scene
        .targets
        .iter()
        .map(|t| delay_steering_vector(t.delay_s.rem_euclid(symbol_duration_s), num_subcarriers, symbol_duration_s))
        .collect();
    let g_cols: Vec<Vec<C64>> = scene
        .targets
        .iter()
        .zip(&gains)
        .map(|(t, &h)| beamspace_vector(codebook, t.aoa_rad).into_iter().map(|q| h * q).collect())
        .collect();
    let b = ComplexMatrix::from_columns(num_subcarriers, &b_cols)?;
    let g = ComplexMatrix::from_columns(codebook.num_beams(), &g_cols)?;
    let t = b.matmul(&g.transpose())?;
    Ok(RadarResponse { b, g, t })
}

/// Per-subcarrier complex noise power `N_0 · BW / N_s`.
pub fn noise_variance(config: &PhysicalConfig) -> f64 {
    config.noise_psd_w_per_hz * config.subcarrier_spacing_hz()
}

#[derive(Debug, Clone)]
pub struct ObservationBlock {
    /// `N_s x L`.
    pub r: ComplexMatrix,
    pub noise_variance: f64,
    pub tx_power_w: f64,
    pub schedule: BeamSchedule,
    pub response: RadarResponse,
}

impl ObservationBlock {
    /// `√P_tx · T·W`, the observation without noise.
    pub fn noiseless(&self) -> ComplexMatrix {
        noiseless_observation(&self.response, &self.schedule, self.tx_power_w)
    }
}

fn noiseless_observation(response: &RadarResponse, schedule: &BeamSchedule, tx_power_w: f64) -> ComplexMatrix {
    let amp = tx_power_w.sqrt();
    let t = &response.t;
    ComplexMatrix::from_fn(t.rows(), schedule.num_slots(), |k, l| {
        let w = schedule.column(l);
        (0..t.cols()).map(|i| t[(k, i)] * w[i]).sum::<C64>() * amp
    })
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * sd, im * sd)
}

fn check_schedule(response: &RadarResponse, schedule: &BeamSchedule) -> Result<()> {
    if response.t.cols() != schedule.num_beams() {
        return Err(Error::ShapeMismatch(format!(
            "response has {} beams, schedule has {}",
            response.t.cols(),
            schedule.num_beams()
        )));
    }
    Ok(())
}

/// `R = √P_tx · T·W + Z`, noise drawn column by column.
pub fn observe<R: Rng + ?Sized>(
    response: &RadarResponse,
    schedule: &BeamSchedule,
    noise_variance: f64,
    tx_power_w: f64,
    rng: &mut R,
) -> Result<ObservationBlock> {
    check_schedule(response, schedule)?;
    let mut r = noiseless_observation(response, schedule, tx_power_w);
    if noise_variance > 0.0 {
        let sd = (noise_variance / 2.0).sqrt();
        for l in 0..r.cols() {
            for z in r.col_mut(l) {
                *z += complex_gaussian(rng, sd);
            }
        }
    }
    Ok(ObservationBlock { r, noise_variance, tx_power_w, schedule: schedule.clone(), response: response.clone() })
}

/// Same model through the pilot path: transmit unit-modulus QPSK symbols
/// `x_l[k]`, receive `y = x·(√P_tx T w_l)[k] + n`, and divide by the pilot.
pub fn observe_via_pilots<R: Rng + ?Sized>(
    response: &RadarResponse,
    schedule: &BeamSchedule,
    noise_variance: f64,
    tx_power_w: f64,
    rng: &mut R,
) -> Result<ObservationBlock> {
    check_schedule(response, schedule)?;
    let clean = noiseless_observation(response, schedule, tx_power_w);
    let sd = (noise_variance / 2.0).sqrt();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut r = ComplexMatrix::zeros(clean.rows(), clean.cols());
    for l in 0..clean.cols() {
        for k in 0..clean.rows() {
            let x = C64::new(
                if rng.random::<bool>() { inv_sqrt2 } else { -inv_sqrt2 },
                if rng.random::<bool>() { inv_sqrt2 } else { -inv_sqrt2 },
            );
            let n = if noise_variance > 0.0 { complex_gaussian(rng, sd) } else { C64::new(0.0, 0.0) };
            let y = x * clean[(k, l)] + n;
            r[(k, l)] = y / x;
        }
    }
    Ok(ObservationBlock { r, noise_variance, tx_power_w, schedule: schedule.clone(), response: response.clone() })
}
