//! Campaign configuration files.
//!
//! The file is TOML. Every key is optional and falls back to the default
//! setup. Quantities usually quoted in decibels may be given either linearly
//! or with a unit-suffixed key, never both:
//!
//! ```toml
//! master_seed = 7
//! strategies = ["sweep", "random"]
//! L = [6, 18, 36, 48]
//! num_geometries = 20
//! num_realizations = 50
//! genie_delays = true
//! output_dir = "out"
//!
//! [physical]
//! noise_psd_dbm_per_hz = -174.0
//! rcs_dbsm = 20.0
//! aoa_range_deg = [-90.0, 90.0]
//!
//! [solver]
//! path_len = 30
//! grid_oversampling = 16
//!
//! [pep]
//! num_instances = 50
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lasso::LassoSettings;
use crate::music::DEFAULT_GRID_OVERSAMPLING;
use crate::pep::{VarianceConvention, DEFAULT_RANK_REL_TOL};
use crate::scene::{db_to_linear, dbm_to_watts, PhysicalConfig};
use crate::signal::Strategy;

use super::trial::TrialKnobs;

/// `L ∈ {6, 12, …, 48}`.
pub const DEFAULT_SLOTS: [usize; 8] = [6, 12, 18, 24, 30, 36, 42, 48];

#[derive(Debug, Clone, PartialEq)]
pub struct PepSettings {
    pub num_instances: usize,
    pub rank_rel_tol: f64,
    pub convention: VarianceConvention,
}

impl Default for PepSettings {
    fn default() -> Self {
        Self { num_instances: 50, rank_rel_tol: DEFAULT_RANK_REL_TOL, convention: VarianceConvention::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub physical: PhysicalConfig,
    pub strategies: Vec<Strategy>,
    pub slots: Vec<usize>,
    pub num_geometries: usize,
    pub num_realizations: usize,
    pub master_seed: u64,
    /// Also run every grid point with the true delays handed to LASSO.
    pub genie_delays: bool,
    pub output_dir: PathBuf,
    pub knobs: TrialKnobs,
    /// Rank and geometric-mean analysis, run alongside when present.
    pub pep: Option<PepSettings>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            physical: PhysicalConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            slots: DEFAULT_SLOTS.to_vec(),
            num_geometries: 50,
            num_realizations: 100,
            master_seed: 0,
            genie_delays: false,
            output_dir: PathBuf::from("out"),
            knobs: TrialKnobs::default(),
            pep: None,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        if self.num_geometries == 0 || self.num_realizations == 0 {
            return Err(Error::InvalidConfig("num_geometries and num_realizations must be at least 1".into()));
        }
        if self.slots.contains(&0) {
            return Err(Error::InvalidConfig("every L must be at least 1".into()));
        }
        if self.knobs.grid_oversampling == 0 {
            return Err(Error::InvalidConfig("grid_oversampling must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let cfg = file.resolve()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    master_seed: Option<u64>,
    strategies: Option<Vec<Strategy>>,
    #[serde(rename = "L")]
    slots: Option<Vec<usize>>,
    num_geometries: Option<usize>,
    num_realizations: Option<usize>,
    genie_delays: Option<bool>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    physical: PhysicalFile,
    #[serde(default)]
    solver: SolverFile,
    pep: Option<PepFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhysicalFile {
    carrier_freq_hz: Option<f64>,
    bandwidth_hz: Option<f64>,
    num_subcarriers: Option<usize>,
    num_antennas: Option<usize>,
    num_beams: Option<usize>,
    num_targets: Option<usize>,
    noise_psd_w_per_hz: Option<f64>,
    noise_psd_dbm_per_hz: Option<f64>,
    tx_power_w: Option<f64>,
    tx_power_dbm: Option<f64>,
    distance_range_m: Option<(f64, f64)>,
    rcs_sqm: Option<f64>,
    rcs_dbsm: Option<f64>,
    aoa_range_rad: Option<(f64, f64)>,
    aoa_range_deg: Option<(f64, f64)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverFile {
    path_len: Option<usize>,
    path_ratio: Option<f64>,
    max_iters: Option<usize>,
    kkt_tol: Option<f64>,
    support_eps: Option<f64>,
    normalize_columns: Option<bool>,
    grid_oversampling: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PepFile {
    num_instances: Option<usize>,
    rank_rel_tol: Option<f64>,
    convention: Option<VarianceConvention>,
}

/// The linear value, the converted decibel value, or `default`.
fn either(name: &str, linear: Option<f64>, db: Option<f64>, to_linear: fn(f64) -> f64, default: f64) -> Result<f64> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!("{name} is given both linearly and in decibels"))),
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(to_linear(v)),
        (None, None) => Ok(default),
    }
}

impl PhysicalFile {
    fn resolve(self) -> Result<PhysicalConfig> {
        let d = PhysicalConfig::default();
        let aoa_range_rad = match (self.aoa_range_rad, self.aoa_range_deg) {
            (Some(_), Some(_)) => return Err(Error::InvalidConfig("aoa range is given in both radians and degrees".into())),
            (Some(r), None) => r,
            (None, Some((lo, hi))) => (lo.to_radians(), hi.to_radians()),
            (None, None) => d.aoa_range_rad,
        };
        Ok(PhysicalConfig {
            carrier_freq_hz: self.carrier_freq_hz.unwrap_or(d.carrier_freq_hz),
            bandwidth_hz: self.bandwidth_hz.unwrap_or(d.bandwidth_hz),
            num_subcarriers: self.num_subcarriers.unwrap_or(d.num_subcarriers),
            num_antennas: self.num_antennas.unwrap_or(d.num_antennas),
            num_beams: self.num_beams.unwrap_or(d.num_beams),
            num_targets: self.num_targets.unwrap_or(d.num_targets),
            noise_psd_w_per_hz: either(
                "noise psd",
                self.noise_psd_w_per_hz,
                self.noise_psd_dbm_per_hz,
                dbm_to_watts,
                d.noise_psd_w_per_hz,
            )?,
            tx_power_w: either("tx power", self.tx_power_w, self.tx_power_dbm, dbm_to_watts, d.tx_power_w)?,
            distance_range_m: self.distance_range_m.unwrap_or(d.distance_range_m),
            rcs_sqm: either("rcs", self.rcs_sqm, self.rcs_dbsm, db_to_linear, d.rcs_sqm)?,
            aoa_range_rad,
        })
    }
}

impl FileConfig {
    fn resolve(self) -> Result<CampaignConfig> {
        let d = CampaignConfig::default();
        let ls = LassoSettings::default();
        let s = self.solver;
        let knobs = TrialKnobs {
            genie_delays: false,
            noiseless: false,
            grid_oversampling: s.grid_oversampling.unwrap_or(DEFAULT_GRID_OVERSAMPLING),
            lasso: LassoSettings {
                path_len: s.path_len.unwrap_or(ls.path_len),
                path_ratio: s.path_ratio.unwrap_or(ls.path_ratio),
                max_iters: s.max_iters.unwrap_or(ls.max_iters),
                kkt_tol: s.kkt_tol.unwrap_or(ls.kkt_tol),
                support_eps: s.support_eps.unwrap_or(ls.support_eps),
                normalize_columns: s.normalize_columns.unwrap_or(ls.normalize_columns),
            },
        };
        let pep = self.pep.map(|p| {
            let dp = PepSettings::default();
            PepSettings {
                num_instances: p.num_instances.unwrap_or(dp.num_instances),
                rank_rel_tol: p.rank_rel_tol.unwrap_or(dp.rank_rel_tol),
                convention: p.convention.unwrap_or(dp.convention),
            }
        });
        Ok(CampaignConfig {
            physical: self.physical.resolve()?,
            strategies: self.strategies.unwrap_or(d.strategies),
            slots: self.slots.unwrap_or(d.slots),
            num_geometries: self.num_geometries.unwrap_or(d.num_geometries),
            num_realizations: self.num_realizations.unwrap_or(d.num_realizations),
            master_seed: self.master_seed.unwrap_or(d.master_seed),
            genie_delays: self.genie_delays.unwrap_or(d.genie_delays),
            output_dir: self.output_dir.unwrap_or(d.output_dir),
            knobs,
            pep,
        })
    }
}
