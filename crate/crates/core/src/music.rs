//! MUSIC delay estimation.
//!
//! The sample covariance `R Rᴴ` is split into a `P`-dimensional signal subspace
//! and its complement `U_N`. Delays are the `P` deepest, mutually separated
//! local minima of `P_MU(τ) = ‖U_Nᴴ b(τ)‖²` over `[0, T)`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, ComplexMatrix, C64};
use crate::scene::{circular_distance, delay_steering_vector};

pub const DEFAULT_GRID_OVERSAMPLING: usize = 16;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone)]
pub struct DelayEstimate {
    /// Ascending, in `[0, T)`.
    pub delays_s: Vec<f64>,
    /// `(τ, P_MU(τ))` on the search grid.
    pub pseudo_spectrum: Vec<(f64, f64)>,
    pub noise_subspace_dim: usize,
    /// Covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Set when fewer than `P` separated local minima existed and the smallest
    /// grid values were used instead.
    pub degenerate: bool,
}

impl DelayEstimate {
    /// Writes the sampled pseudo-spectrum as `tau_s,p_mu`.
    pub fn write_pseudo_spectrum(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
        let f = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(["tau_s", "p_mu"]).map_err(csv_err)?;
        for &(tau, p) in &self.pseudo_spectrum {
            w.write_record([format!("{tau:e}"), format!("{p:e}")]).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

/// `R Rᴴ`, Hermitian by construction.
pub fn sample_covariance(r: &ComplexMatrix) -> ComplexMatrix {
    let n = r.rows();
    let mut c = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v: C64 = (0..r.cols()).map(|l| r[(i, l)] * r[(j, l)].conj()).sum();
            c[(i, j)] = v;
            c[(j, i)] = v.conj();
        }
        c[(j, j)] = C64::new(c[(j, j)].re, 0.0);
    }
    c
}

/// `‖U_Nᴴ b(τ)‖²` for an orthonormal noise basis with `N_s` rows.
pub fn pseudo_spectrum(noise_subspace: &ComplexMatrix, delay_s: f64, symbol_duration_s: f64) -> f64 {
    let b = delay_steering_vector(delay_s, noise_subspace.rows(), symbol_duration_s);
    noise_subspace.adjoint_matvec(&b).iter().map(|z| z.norm_sqr()).sum()
}

/// Eigenvectors `P+1 … N_s` of the sample covariance.
pub fn noise_subspace(r: &ComplexMatrix, num_targets: usize) -> Result<(ComplexMatrix, Vec<f64>)> {
    let ns = r.rows();
    let eig = hermitian_eig(&sample_covariance(r))?;
    let cols: Vec<Vec<C64>> = (num_targets.min(ns)..ns).map(|j| eig.eigenvectors.col(j).to_vec()).collect();
    let un = if cols.is_empty() { ComplexMatrix::zeros(ns, 0) } else { ComplexMatrix::from_columns(ns, &cols)? };
    Ok((un, eig.eigenvalues))
}

/// Estimates `P` delays. Fails with [`Error::SubspaceDegenerate`] when fewer
/// than `P` separated local minima exist.
pub fn estimate_delays(r: &ComplexMatrix, num_targets: usize, symbol_duration_s: f64, grid_oversampling: usize) -> Result<DelayEstimate> {
    let est = estimate_delays_or_fallback(r, num_targets, symbol_duration_s, grid_oversampling)?;
    if est.degenerate {
        let found = count_separated_minima(&est.pseudo_spectrum, symbol_duration_s, r.rows(), num_targets);
        return Err(Error::SubspaceDegenerate { found, needed: num_targets });
    }
    Ok(est)
}

/// Like [`estimate_delays`], but falls back to the smallest grid values and
/// flags the result instead of failing on a degenerate spectrum.
pub fn estimate_delays_or_fallback(
    r: &ComplexMatrix,
    num_targets: usize,
    symbol_duration_s: f64,
    grid_oversampling: usize,
) -> Result<DelayEstimate> {
    let ns = r.rows();
    let ts = symbol_duration_s;
    let (un, eigenvalues) = noise_subspace(r, num_targets)?;
    let n_grid = grid_oversampling.max(1) * ns;
    let step = ts / n_grid as f64;
    let spectrum: Vec<(f64, f64)> = (0..n_grid)
        .map(|g| {
            let tau = g as f64 * step;
            (tau, pseudo_spectrum(&un, tau, ts))
        })
        .collect();
    let values: Vec<f64> = spectrum.iter().map(|&(_, p)| p).collect();
    let min_sep = ts / ns as f64;

    let mut minima: Vec<usize> = (0..n_grid)
        .filter(|&g| {
            let prev = values[(g + n_grid - 1) % n_grid];
            let next = values[(g + 1) % n_grid];
            values[g] <= prev && values[g] < next
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut picked = pick_separated(&minima, num_targets, step, min_sep, ts);
    let degenerate = picked.len() < num_targets;
    if degenerate {
        let mut all: Vec<usize> = (0..n_grid).collect();
        all.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        for g in all {
            if picked.len() == num_targets {
                break;
            }
            if !picked.contains(&g) {
                picked.push(g);
            }
        }
    }

    let mut delays: Vec<f64> = picked
        .iter()
        .map(|&g| {
            let tau = if degenerate { g as f64 * step } else { refine_minimum(&un, &values, g, step, ts) };
            tau.rem_euclid(ts)
        })
        .collect();
    delays.sort_by(f64::total_cmp);
    Ok(DelayEstimate {
        delays_s: delays,
        pseudo_spectrum: spectrum,
        noise_subspace_dim: un.cols(),
        eigenvalues,
        degenerate,
    })
}

fn pick_separated(sorted: &[usize], want: usize, step: f64, min_sep: f64, period: f64) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::with_capacity(want);
    for &g in sorted {
        if picked.len() == want {
            break;
        }
        let tau = g as f64 * step;
        // a hair of slack so grid rounding cannot reject an exact one-bin gap
        if picked.iter().all(|&h| circular_distance(tau, h as f64 * step, period) >= min_sep - 1e-9 * step) {
            picked.push(g);
        }
    }
    picked
}

fn count_separated_minima(spectrum: &[(f64, f64)], period: f64, ns: usize, want: usize) -> usize {
    let n = spectrum.len();
    let step = period / n as f64;
    let mut minima: Vec<usize> = (0..n)
        .filter(|&g| spectrum[g].1 <= spectrum[(g + n - 1) % n].1 && spectrum[g].1 < spectrum[(g + 1) % n].1)
        .collect();
    minima.sort_by(|&a, &b| spectrum[a].1.total_cmp(&spectrum[b].1));
    pick_separated(&minima, want, step, period / ns as f64, period).len()
}

/// Sub-grid location of the minimum next to grid index `g`.
///
/// Candidates are the grid point, the vertex of the parabola through the three
/// log values, and the result of a golden-section search of `P_MU` on the
/// bracket `[τ_{g-1}, τ_{g+1}]`; the lowest wins. Near a deep minimum
/// `log P_MU` is far from quadratic, so the vertex alone is biased.
fn refine_minimum(un: &ComplexMatrix, values: &[f64], g: usize, step: f64, period: f64) -> f64 {
    let n = values.len();
    let tiny = f64::MIN_POSITIVE;
    let (lm, l0, lp) = (
        values[(g + n - 1) % n].max(tiny).ln(),
        values[g].max(tiny).ln(),
        values[(g + 1) % n].max(tiny).ln(),
    );
    let center = g as f64 * step;
    let denom = lm - 2.0 * l0 + lp;
    let vertex = if denom > 0.0 { (0.5 * (lm - lp) / denom).clamp(-1.0, 1.0) } else { 0.0 };
    let f = |x: f64| pseudo_spectrum(un, center + x * step, period);

    let mut best = (vertex, f(vertex));
    let f0 = values[g];
    if f0 < best.1 {
        best = (0.0, f0);
    }
    let (mut a, mut b) = (-1.0f64, 1.0f64);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fx < best.1 {
        best = (x, fx);
    }
    center + best.0 * step
}
