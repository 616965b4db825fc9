//! Monte Carlo campaigns over geometries, realizations and slot budgets.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codebook::{build_codebook, Codebook};
use crate::error::{Error, Result};
use crate::output::{csv_writer, finish_csv};
use crate::pep::{rank_geomean_campaign, write_pep_csv, PepCampaign, PepRow};
use crate::scene::{sample_geometry, sample_realization, Scene};
use crate::signal::Strategy;

use super::config::CampaignConfig;
use super::rng;
use super::trial::{run_trial, TrialKnobs, TrialOutcome};

pub const MD_FA_HEADER: [&str; 9] =
    ["strategy", "L", "genie", "trials", "failures", "p_md_mean", "p_md_stderr", "p_fa_mean", "p_fa_stderr"];
pub const TRIALS_HEADER: [&str; 8] = ["strategy", "L", "genie", "geometry", "realization", "p_md", "p_fa", "delay_err_max_s"];

/// Aggregate over all trials of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct MdFaRow {
    pub strategy: Strategy,
    pub slots: usize,
    pub genie: bool,
    pub trials: usize,
    pub failures: usize,
    pub p_md_mean: f64,
    pub p_md_stderr: f64,
    pub p_fa_mean: f64,
    pub p_fa_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub md_fa: Vec<MdFaRow>,
    /// Grid-point major, then geometry, then realization.
    pub trials: Vec<TrialOutcome>,
    pub pep: Vec<PepRow>,
}

impl CampaignResult {
    pub fn row(&self, strategy: Strategy, slots: usize, genie: bool) -> Option<&MdFaRow> {
        self.md_fa.iter().find(|r| r.strategy == strategy && r.slots == slots && r.genie == genie)
    }
}

/// Mean and standard error of the mean (sample standard deviation over `√n`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn aggregate(strategy: Strategy, slots: usize, genie: bool, trials: &[TrialOutcome]) -> MdFaRow {
    let md: Vec<f64> = trials.iter().map(|t| t.p_md).collect();
    let fa: Vec<f64> = trials.iter().map(|t| t.p_fa).collect();
    let (p_md_mean, p_md_stderr) = mean_stderr(&md);
    let (p_fa_mean, p_fa_stderr) = mean_stderr(&fa);
    MdFaRow {
        strategy,
        slots,
        genie,
        trials: trials.len(),
        failures: trials.iter().filter(|t| t.failed).count(),
        p_md_mean,
        p_md_stderr,
        p_fa_mean,
        p_fa_stderr,
    }
}

/// Geometry `g` of a campaign seeded with `master_seed`.
pub fn campaign_geometry(config: &CampaignConfig, g: usize) -> Result<Scene> {
    sample_geometry(&config.physical, g, &mut rng::stream(config.master_seed, rng::GEOMETRY, &[g as u64]))
}

/// Realization `r` of `geometry`.
pub fn campaign_realization(config: &CampaignConfig, geometry: &Scene, r: usize) -> Scene {
    let ids = [geometry.geometry_id as u64, r as u64];
    sample_realization(geometry, r, &mut rng::stream(config.master_seed, rng::REALIZATION, &ids))
}

/// Runs every grid point in memory on the current rayon pool.
///
/// Each trial draws its schedule and noise from streams keyed by
/// `(geometry, realization)` only, so grid points with different `L` or genie
/// setting see the same scene, nested schedules and the same noise samples.
pub fn simulate(config: &CampaignConfig, codebook: &Codebook) -> Result<CampaignResult> {
    config.validate()?;
    let geometries = (0..config.num_geometries).map(|g| campaign_geometry(config, g)).collect::<Result<Vec<_>>>()?;
    let scenes: Vec<Scene> = geometries
        .iter()
        .flat_map(|geo| (0..config.num_realizations).map(move |r| (geo, r)))
        .map(|(geo, r)| campaign_realization(config, geo, r))
        .collect();

    let genie_flags: &[bool] = if config.genie_delays { &[false, true] } else { &[false] };
    let mut points = Vec::new();
    for &strategy in &config.strategies {
        for &slots in &config.slots {
            for &genie in genie_flags {
                points.push((strategy, slots, genie));
            }
        }
    }
    let jobs: Vec<(usize, &Scene)> = (0..points.len()).flat_map(|pi| scenes.iter().map(move |s| (pi, s))).collect();
    let trials = jobs
        .par_iter()
        .map(|&(pi, scene)| {
            let (strategy, slots, genie) = points[pi];
            let knobs = TrialKnobs { genie_delays: genie, ..config.knobs.clone() };
            let ids = [scene.geometry_id as u64, scene.realization_id.unwrap_or(0) as u64];
            let mut sched_rng = rng::stream(config.master_seed, rng::SCHEDULE, &ids);
            let mut noise_rng = rng::stream(config.master_seed, rng::NOISE, &ids);
            run_trial(&config.physical, scene, codebook, strategy, slots, &knobs, &mut sched_rng, &mut noise_rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let md_fa = points
        .iter()
        .zip(trials.chunks(scenes.len().max(1)))
        .map(|(&(s, l, g), chunk)| aggregate(s, l, g, chunk))
        .collect();

    let mut pep = Vec::new();
    if let Some(settings) = &config.pep {
        for &strategy in &config.strategies {
            let campaign = PepCampaign {
                config: config.physical.clone(),
                strategy,
                slots: config.slots.clone(),
                num_instances: settings.num_instances,
                master_seed: config.master_seed,
                rank_rel_tol: settings.rank_rel_tol,
                convention: settings.convention,
            };
            pep.extend(rank_geomean_campaign(&campaign, codebook)?);
        }
    }
    Ok(CampaignResult { md_fa, trials, pep })
}

/// Runs `f` on a pool of `jobs` workers; 0 picks the rayon default.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

pub fn write_md_fa_csv(path: &Path, rows: &[MdFaRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    w.write_record(MD_FA_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.strategy.to_string(),
            r.slots.to_string(),
            r.genie.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            format!("{:e}", r.p_md_mean),
            format!("{:e}", r.p_md_stderr),
            format!("{:e}", r.p_fa_mean),
            format!("{:e}", r.p_fa_stderr),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w, path)
}

pub fn write_trials_csv(path: &Path, trials: &[TrialOutcome]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    w.write_record(TRIALS_HEADER).map_err(csv_err)?;
    for t in trials {
        w.write_record([
            t.strategy.to_string(),
            t.slots.to_string(),
            t.genie_delays.to_string(),
            t.geometry_id.to_string(),
            t.realization_id.to_string(),
            format!("{:e}", t.p_md),
            format!("{:e}", t.p_fa),
            format!("{:e}", t.delay_err_max_s),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w, path)
}

/// Paths of the files a campaign wrote.
#[derive(Debug, Clone)]
pub struct CampaignFiles {
    pub md_fa: PathBuf,
    pub trials: PathBuf,
    pub pep: Option<PathBuf>,
}

/// Writes `md_fa.csv`, `trials.csv` and, when PEP was requested, `pep.csv`.
pub fn write_outputs(dir: &Path, result: &CampaignResult, with_pep: bool) -> Result<CampaignFiles> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let files = CampaignFiles {
        md_fa: dir.join("md_fa.csv"),
        trials: dir.join("trials.csv"),
        pep: with_pep.then(|| dir.join("pep.csv")),
    };
    write_md_fa_csv(&files.md_fa, &result.md_fa)?;
    write_trials_csv(&files.trials, &result.trials)?;
    if let Some(p) = &files.pep {
        write_pep_csv(p, &result.pep)?;
    }
    Ok(files)
}

/// Builds the codebook, simulates on `jobs` workers and writes the CSVs into
/// the configured output directory.
pub fn run_campaign(config: &CampaignConfig, jobs: usize) -> Result<(CampaignResult, CampaignFiles)> {
    config.validate()?;
    let p = &config.physical;
    let codebook = build_codebook(p.num_antennas, p.num_beams, p.aoa_range_rad)?;
    let result = with_jobs(jobs, || simulate(config, &codebook))??;
    let files = write_outputs(&config.output_dir, &result, config.pep.is_some())?;
    Ok((result, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_stderr_examples() {
        assert_eq!(mean_stderr(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_stderr(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(m, 0.5);
        // sample variance 1/3, over n = 4
        assert!((s - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!(mean_stderr(&[]).0.is_nan());
    }

    fn tiny() -> CampaignConfig {
        CampaignConfig {
            strategies: vec![Strategy::Sweep],
            slots: vec![36],
            num_geometries: 2,
            num_realizations: 2,
            master_seed: 3,
            genie_delays: true,
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn grid_layout_and_pairing() {
        let cfg = tiny();
        let p = &cfg.physical;
        let cb = build_codebook(p.num_antennas, p.num_beams, p.aoa_range_rad).unwrap();
        let res = simulate(&cfg, &cb).unwrap();
        assert_eq!(res.md_fa.len(), 2);
        assert_eq!(res.trials.len(), 8);
        assert!(!res.md_fa[0].genie && res.md_fa[1].genie);
        let ids: Vec<(usize, usize)> = res.trials[..4].iter().map(|t| (t.geometry_id, t.realization_id)).collect();
        assert_eq!(ids, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        // the genie run sees the same scene as the two-stage run
        for (a, b) in res.trials[..4].iter().zip(&res.trials[4..]) {
            assert_eq!(a.true_beam_indices, b.true_beam_indices);
        }
    }

    #[test]
    fn empty_slot_list_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = CampaignConfig { slots: Vec::new(), output_dir: dir.path().to_path_buf(), ..tiny() };
        let (res, files) = run_campaign(&cfg, 1).unwrap();
        assert!(res.md_fa.is_empty() && res.trials.is_empty());
        assert_eq!(std::fs::read_to_string(files.md_fa).unwrap().trim(), MD_FA_HEADER.join(","));
        assert_eq!(std::fs::read_to_string(files.trials).unwrap().trim(), TRIALS_HEADER.join(","));
    }
}
