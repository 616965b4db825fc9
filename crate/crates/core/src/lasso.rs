//! Beamspace recovery by ℓ1-regularized least squares.
//!
//! With estimated delays `B̂`, the observation satisfies
//! `vec(R) ≈ (Wᵀ ⊗ B̂) vec(Gᵀ)`. `vec` stacks columns, so entry `i·P + p` of
//! `g = vec(Gᵀ)` is the gain of target `p` in beam `i`.
//!
//! The solver minimizes `‖A g − r‖² + β ‖g‖₁` with monotone FISTA. The
//! gradient uses the precomputed Gram matrix `AᴴA = (conj(W) Wᵀ) ⊗ (B̂ᴴB̂)`,
//! which is small (`P N_b` square) next to `A`.

use crate::codebook::argmax;
use crate::error::{Error, Result};
use crate::numerics::{dot_conj, hermitian_eig, kron, soft_threshold_complex, spectral_norm_sq_with, ComplexMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSettings {
    pub path_len: usize,
    /// Smallest β as a fraction of `β_max`.
    pub path_ratio: f64,
    pub max_iters: usize,
    pub kkt_tol: f64,
    /// Support gate relative to the largest magnitude.
    pub support_eps: f64,
    /// Solve with every probed beam's row of `W` scaled to unit norm, so the
    /// ℓ1 penalty does not favour beams that happened to get more energy.
    pub normalize_columns: bool,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self { path_len: 30, path_ratio: 1e-4, max_iters: 2000, kkt_tol: 1e-6, support_eps: 1e-3, normalize_columns: true }
    }
}

#[derive(Debug, Clone)]
pub struct LassoProblem {
    /// `A = Wᵀ ⊗ B̂`, `(L N_s) x (P N_b)`.
    pub dictionary: ComplexMatrix,
    /// `vec(R)`.
    pub observation: Vec<C64>,
    /// Descending.
    pub beta_path: Vec<f64>,
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub support_eps: f64,
    /// Rows of `Gᵀ` (targets); 1 for generic dictionaries.
    pub num_targets: usize,
    gram: Gram,
    /// `(B̂, W)` when `A = Wᵀ ⊗ B̂`.
    factors: Option<(ComplexMatrix, ComplexMatrix)>,
    /// Per beam factor taking a solution back to unnormalized `Gᵀ` units.
    beam_scale: Vec<f64>,
    correlation: Vec<C64>,
    lipschitz: f64,
}

/// `AᴴA`, kept factored when `A` is a Kronecker product.
#[derive(Debug, Clone)]
enum Gram {
    Dense(ComplexMatrix),
    /// `K1 ⊗ K2`, applied as `vec(K2 X K1ᵀ)`.
    /// `k1_real` marks a real `K1`, the case for nonnegative probing weights.
    Kron { k1: ComplexMatrix, k2: ComplexMatrix, k1_real: bool },
}

impl Gram {
    fn dim(&self) -> usize {
        match self {
            Gram::Dense(q) => q.cols(),
            Gram::Kron { k1, k2, .. } => k1.cols() * k2.cols(),
        }
    }

    fn entry(&self, a: usize, b: usize) -> C64 {
        match self {
            Gram::Dense(q) => q[(a, b)],
            Gram::Kron { k1, k2, .. } => {
                let p = k2.rows();
                k1[(a / p, b / p)] * k2[(a % p, b % p)]
            }
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Gram::Dense(q) => q.max_abs() == 0.0,
            Gram::Kron { k1, k2, .. } => k1.max_abs() == 0.0 || k2.max_abs() == 0.0,
        }
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        match self {
            Gram::Dense(q) => q.matvec(x),
            Gram::Kron { k1, k2, k1_real } => {
                let (p, nb) = (k2.rows(), k1.rows());
                // X is p x nb column-major; first Y = K2 X, then Y K1ᵀ
                let mut y = vec![C64::new(0.0, 0.0); p * nb];
                for (yc, xc) in y.chunks_exact_mut(p).zip(x.chunks_exact(p)) {
                    for (i, yi) in yc.iter_mut().enumerate() {
                        *yi = (0..p).map(|k| k2[(i, k)] * xc[k]).sum();
                    }
                }
                let mut out = vec![C64::new(0.0, 0.0); p * nb];
                let k1 = k1.as_slice();
                if *k1_real {
                    // K1 is real symmetric, so column j doubles as row j; each
                    // target row of Y becomes two real matrix-vector products
                    let mut re = vec![0.0; nb];
                    let mut im = vec![0.0; nb];
                    for i in 0..p {
                        for (m, yc) in y.chunks_exact(p).enumerate() {
                            re[m] = yc[i].re;
                            im[m] = yc[i].im;
                        }
                        for (j, kc) in k1.chunks_exact(nb).enumerate() {
                            let (mut sr, mut si) = (0.0, 0.0);
                            for ((c, a), b) in kc.iter().zip(&re).zip(&im) {
                                sr += c.re * a;
                                si += c.re * b;
                            }
                            out[j * p + i] = C64::new(sr, si);
                        }
                    }
                } else {
                    for (j, oc) in out.chunks_exact_mut(p).enumerate() {
                        for (m, yc) in y.chunks_exact(p).enumerate() {
                            // column-major storage: K1[j, m] sits at m * nb + j
                            let coef = k1[m * nb + j];
                            oc.iter_mut().zip(yc).for_each(|(o, v)| *o += coef * v);
                        }
                    }
                }
                out
            }
        }
    }
}

impl LassoProblem {
    /// Wraps an arbitrary dictionary with a default log-spaced β path.
    pub fn from_dictionary(dictionary: ComplexMatrix, observation: Vec<C64>, num_targets: usize, settings: &LassoSettings) -> Result<Self> {
        let gram = Gram::Dense(dictionary.gram());
        Self::assemble(dictionary, observation, num_targets, gram, settings)
    }

    fn assemble(
        dictionary: ComplexMatrix,
        observation: Vec<C64>,
        num_targets: usize,
        gram: Gram,
        settings: &LassoSettings,
    ) -> Result<Self> {
        if dictionary.rows() != observation.len() {
            return Err(Error::ShapeMismatch(format!(
                "dictionary has {} rows, observation has {} entries",
                dictionary.rows(),
                observation.len()
            )));
        }
        if num_targets == 0 || dictionary.cols() % num_targets != 0 {
            return Err(Error::ShapeMismatch(format!("{} columns do not split into {num_targets} targets", dictionary.cols())));
        }
        let correlation = dictionary.adjoint_matvec(&observation);
        debug_assert_eq!(gram.dim(), dictionary.cols());
        let lipschitz = if gram.is_zero() { 0.0 } else { spectral_norm_sq_with(gram.dim(), |x| gram.apply(x))? };
        let beta_max = beta_max_of(&correlation);
        let beta_path = log_path(beta_max, settings.path_len, settings.path_ratio);
        let beam_scale = vec![1.0; dictionary.cols() / num_targets];
        Ok(Self {
            dictionary,
            observation,
            beta_path,
            max_iters: settings.max_iters,
            kkt_tol: settings.kkt_tol,
            support_eps: settings.support_eps,
            num_targets,
            beam_scale,
            gram,
            factors: None,
            correlation,
            lipschitz,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.dictionary.cols()
    }

    pub fn num_beams(&self) -> usize {
        self.dictionary.cols() / self.num_targets
    }

    /// `λ_max(AᴴA)`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `Aᴴ r`.
    pub fn correlation(&self) -> &[C64] {
        &self.correlation
    }

    /// `2‖Aᴴr‖_∞`, the smallest β with the zero solution.
    pub fn beta_max(&self) -> f64 {
        beta_max_of(&self.correlation)
    }

    pub fn with_beta_path(mut self, path: Vec<f64>) -> Self {
        self.beta_path = path;
        self
    }

    /// `A g`, as `vec(B̂ Gᵀ W)` when the factors are known.
    pub fn apply_dictionary(&self, g: &[C64]) -> Vec<C64> {
        match &self.factors {
            Some((b_hat, w)) => {
                let gt = ComplexMatrix::new(self.num_targets, self.num_beams(), g.to_vec()).expect("finite iterate");
                let bg = b_hat.matmul(&gt).expect("conformable");
                bg.matmul(w).expect("conformable").into_vec()
            }
            None => self.dictionary.matvec(g),
        }
    }

    /// `‖A g − r‖²`.
    pub fn residual(&self, g: &[C64]) -> f64 {
        let ag = self.apply_dictionary(g);
        ag.iter().zip(&self.observation).map(|(a, r)| (a - r).norm_sqr()).sum()
    }

    /// `‖A g − r‖² + β ‖g‖₁`.
    pub fn objective(&self, g: &[C64], beta: f64) -> f64 {
        self.residual(g) + beta * l1(g)
    }

    /// `AᴴA x`.
    pub fn apply_gram(&self, x: &[C64]) -> Vec<C64> {
        self.gram.apply(x)
    }

    /// `Aᴴ(A g − r)`.
    pub fn gradient(&self, g: &[C64]) -> Vec<C64> {
        let mut q = self.gram.apply(g);
        q.iter_mut().zip(&self.correlation).for_each(|(a, c)| *a -= c);
        q
    }

    /// Largest violation of the optimality conditions, relative to β.
    pub fn kkt_violation(&self, g: &[C64], beta: f64) -> f64 {
        kkt_violation(&self.gradient(g), g, beta)
    }

    /// `(p, i)` pairs of `vec(Gᵀ)` index `k`.
    pub fn target_beam(&self, k: usize) -> (usize, usize) {
        (k % self.num_targets, k / self.num_targets)
    }
}

fn mag(z: C64) -> f64 {
    z.norm_sqr().sqrt()
}

fn l1(g: &[C64]) -> f64 {
    g.iter().map(|&z| mag(z)).sum()
}

fn beta_max_of(correlation: &[C64]) -> f64 {
    2.0 * correlation.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn log_path(beta_max: f64, len: usize, ratio: f64) -> Vec<f64> {
    match len {
        0 => Vec::new(),
        1 => vec![beta_max],
        n => (0..n).map(|k| beta_max * ratio.powf(k as f64 / (n - 1) as f64)).collect(),
    }
}

fn kkt_violation(grad: &[C64], g: &[C64], beta: f64) -> f64 {
    let half = 0.5 * beta;
    let mut worst = 0.0f64;
    for (d, z) in grad.iter().zip(g) {
        let v = if *z == C64::new(0.0, 0.0) {
            (mag(*d) - half).max(0.0) / half
        } else {
            mag(d + z / mag(*z) * half) / beta
        };
        worst = worst.max(v);
    }
    worst
}

/// `(Wᵀ ⊗ B̂)`, `vec(R)` and the default β path.
pub fn build_problem(r: &ComplexMatrix, b_hat: &ComplexMatrix, w: &ComplexMatrix, settings: &LassoSettings) -> Result<LassoProblem> {
    if b_hat.rows() != r.rows() || w.cols() != r.cols() {
        return Err(Error::ShapeMismatch(format!(
            "R is {:?}, B̂ is {:?}, W is {:?}",
            r.shape(),
            b_hat.shape(),
            w.shape()
        )));
    }
    let mut w = w.clone();
    let mut beam_scale = vec![1.0; w.rows()];
    if settings.normalize_columns {
        for (i, scale) in beam_scale.iter_mut().enumerate() {
            let norm = w.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                *scale = 1.0 / norm;
                (0..w.cols()).for_each(|j| w[(i, j)] *= *scale);
            }
        }
    }
    let wt = w.transpose();
    let dictionary = kron(&wt, b_hat);
    let k1 = wt.gram();
    let k1_real = k1.as_slice().iter().all(|z| z.im == 0.0);
    let gram = Gram::Kron { k1, k2: b_hat.gram(), k1_real };
    let mut problem = LassoProblem::assemble(dictionary, r.as_slice().to_vec(), b_hat.cols(), gram, settings)?;
    problem.factors = Some((b_hat.clone(), w));
    problem.beam_scale = beam_scale;
    Ok(problem)
}

#[derive(Debug, Clone)]
pub struct FistaOutcome {
    pub g: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective (up to the constant `‖r‖²`) after every iteration.
    pub objective_history: Vec<f64>,
}

/// Monotone FISTA from `start`, with a momentum restart whenever the
/// candidate step fails to decrease the objective.
pub fn fista_solve_from(problem: &LassoProblem, beta: f64, start: &[C64]) -> FistaOutcome {
    let n = problem.num_unknowns();
    let zero = C64::new(0.0, 0.0);
    if problem.lipschitz == 0.0 {
        return FistaOutcome { g: vec![zero; n], iterations: 0, converged: true, objective_history: Vec::new() };
    }
    let step = 1.0 / problem.lipschitz;
    let thresh = 0.5 * beta * step;
    let corr = &problem.correlation;

    let mut x = start.to_vec();
    let mut qx = problem.apply_gram(&x);
    // ½‖Ag−r‖² − ½‖r‖² + (β/2)‖g‖₁
    let mut fx = 0.5 * dot_conj(&x, &qx).re - dot_conj(&x, corr).re + 0.5 * beta * l1(&x);
    let mut y = x.clone();
    let mut qy = qx.clone();
    let mut t = 1.0f64;
    let mut history = Vec::new();
    let grad = |qg: &[C64]| -> Vec<C64> { qg.iter().zip(corr).map(|(a, c)| a - c).collect() };
    if kkt_violation(&grad(&qx), &x, beta) <= problem.kkt_tol {
        return FistaOutcome { g: x, iterations: 0, converged: true, objective_history: history };
    }

    for it in 1..=problem.max_iters {
        let z: Vec<C64> = (0..n).map(|k| soft_threshold_complex(y[k] - (qy[k] - corr[k]) * step, thresh)).collect();
        let qz = problem.apply_gram(&z);
        // objective change from the step itself; differencing two objective
        // values would lose it to rounding near the optimum
        let delta: f64 = (0..n)
            .map(|k| {
                let d = z[k] - x[k];
                (d.conj() * ((qz[k] + qx[k]) * 0.5 - corr[k])).re + 0.5 * beta * (mag(z[k]) - mag(x[k]))
            })
            .sum();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let accepted = delta <= 0.0;
        if accepted {
            let b = (t - 1.0) / t_next;
            // Q is linear, so Q y follows from Q x and Q z without another product
            for k in 0..n {
                y[k] = z[k] + (z[k] - x[k]) * b;
                qy[k] = qz[k] + (qz[k] - qx[k]) * b;
            }
            x = z;
            qx = qz;
            fx += delta;
            t = t_next;
        } else {
            // restart momentum from the current iterate
            y.copy_from_slice(&x);
            qy.copy_from_slice(&qx);
            t = 1.0;
        }
        history.push(fx);

        if kkt_violation(&grad(&qx), &x, beta) <= problem.kkt_tol {
            return FistaOutcome { g: x, iterations: it, converged: true, objective_history: history };
        }
    }
    FistaOutcome { g: x, iterations: problem.max_iters, converged: false, objective_history: history }
}

/// [`fista_solve_from`] started at zero.
pub fn fista_solve(problem: &LassoProblem, beta: f64) -> FistaOutcome {
    fista_solve_from(problem, beta, &vec![C64::new(0.0, 0.0); problem.num_unknowns()])
}

#[derive(Debug, Clone)]
pub struct PathPoint {
    pub beta: f64,
    pub g: Vec<C64>,
    pub support: Vec<usize>,
    pub residual: f64,
    pub converged: bool,
}

/// Solves every β of the path with warm starts.
pub fn solve_path_points(problem: &LassoProblem) -> Result<Vec<PathPoint>> {
    if problem.beta_path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let mut g = vec![C64::new(0.0, 0.0); problem.num_unknowns()];
    let mut out = Vec::with_capacity(problem.beta_path.len());
    for &beta in &problem.beta_path {
        let sol = fista_solve_from(problem, beta, &g);
        g = sol.g;
        let support = support_of(&g, problem.support_eps);
        out.push(PathPoint { beta, g: g.clone(), support, residual: problem.residual(&g), converged: sol.converged });
    }
    Ok(out)
}

fn support_of(g: &[C64], eps: f64) -> Vec<usize> {
    let gmax = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if gmax == 0.0 {
        return Vec::new();
    }
    (0..g.len()).filter(|&k| g[k].norm() > eps * gmax).collect()
}

#[derive(Debug, Clone)]
pub struct BeamspaceEstimate {
    /// `P x N_b`, row `p` pairs with delay `p` of `B̂`.
    pub g_hat: ComplexMatrix,
    pub beam_indices: Vec<usize>,
    pub chosen_beta: f64,
    /// `‖A g − r‖²` of the selected (pre-debiasing) path solution.
    pub residual: f64,
    /// `‖A g − r‖²` after least-squares debiasing on the support.
    pub debiased_residual: f64,
    pub sparsity: usize,
    /// Whether FISTA met the KKT tolerance at the chosen β.
    pub converged: bool,
    /// Rows outside the selected support, filled for beam assignment only.
    pub filled_rows: Vec<usize>,
}

/// Runs the β path and selects a `P`-sparse solution.
///
/// Solutions leaving some target row without support are only used when no
/// path point covers every row. Among the rest, exactly `P`-sparse solutions
/// win by smallest residual; otherwise the support size closest to `P` wins,
/// ties going to the smaller support and then the smaller residual. The chosen
/// solution is debiased by least squares on its support.
///
/// Fails with [`Error::EmptySupport`] only when the observation carries no
/// signal for some target at all.
pub fn solve_path(problem: &LassoProblem, num_targets: usize) -> Result<BeamspaceEstimate> {
    let points = solve_path_points(problem)?;
    let mut candidates: Vec<&PathPoint> = points.iter().filter(|p| !p.support.is_empty()).collect();
    if candidates.is_empty() {
        return Err(Error::EmptySupport { row: 0 });
    }
    let covers = |p: &PathPoint| {
        let mut rows = vec![false; problem.num_targets];
        p.support.iter().for_each(|&k| rows[problem.target_beam(k).0] = true);
        rows.iter().all(|&r| r)
    };
    if candidates.iter().any(|p| covers(p)) {
        candidates.retain(|p| covers(p));
    }
    let size_gap = |p: &PathPoint| (p.support.len() as i64 - num_targets as i64).unsigned_abs();
    let chosen = candidates
        .iter()
        .min_by(|a, b| {
            size_gap(a)
                .cmp(&size_gap(b))
                .then(a.support.len().cmp(&b.support.len()))
                .then(a.residual.total_cmp(&b.residual))
        })
        .expect("non-empty");

    let g = debias(problem, &chosen.support)?;
    let debiased_residual = problem.residual(&g);
    let (pt, nb) = (problem.num_targets, problem.num_beams());
    let scale = &problem.beam_scale;
    let mut g_hat = ComplexMatrix::from_fn(pt, nb, |p, i| g[i * pt + p] * scale[i]);

    // Every target is assigned a beam. A row the selected support misses is
    // read from the least regularized path point, then from Aᴴr.
    let least_regularized = &points.last().expect("non-empty path").g;
    let mut filled_rows = Vec::new();
    for p in 0..pt {
        if (0..nb).any(|i| g_hat[(p, i)] != C64::new(0.0, 0.0)) {
            continue;
        }
        for (source, rescale) in [(least_regularized.as_slice(), true), (problem.correlation.as_slice(), false)] {
            if (0..nb).any(|i| source[i * pt + p] != C64::new(0.0, 0.0)) {
                (0..nb).for_each(|i| g_hat[(p, i)] = source[i * pt + p] * if rescale { scale[i] } else { 1.0 });
                filled_rows.push(p);
                break;
            }
        }
    }
    let beam_indices = extract_beam_indices(&g_hat)?;
    Ok(BeamspaceEstimate {
        g_hat,
        beam_indices,
        chosen_beta: chosen.beta,
        residual: chosen.residual,
        debiased_residual,
        sparsity: chosen.support.len(),
        converged: chosen.converged,
        filled_rows,
    })
}

/// Least squares restricted to `support`, via the pseudo-inverse of the
/// support Gram block.
fn debias(problem: &LassoProblem, support: &[usize]) -> Result<Vec<C64>> {
    let s = support.len();
    let gram_s = ComplexMatrix::from_fn(s, s, |a, b| problem.gram.entry(support[a], support[b]));
    let rhs: Vec<C64> = support.iter().map(|&k| problem.correlation[k]).collect();
    let eig = hermitian_eig(&gram_s)?;
    let floor = 1e-12 * eig.eigenvalues[0].max(0.0);
    let u = &eig.eigenvectors;
    let mut x = vec![C64::new(0.0, 0.0); s];
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l > floor {
            let coef = dot_conj(u.col(j), &rhs) / l;
            x.iter_mut().zip(u.col(j)).for_each(|(xi, uj)| *xi += uj * coef);
        }
    }
    let mut g = vec![C64::new(0.0, 0.0); problem.num_unknowns()];
    support.iter().zip(&x).for_each(|(&k, &v)| g[k] = v);
    Ok(g)
}

/// Row-wise `argmax_i |Ĝ[p, i]|²`, ties to the lowest index.
pub fn extract_beam_indices(g_hat: &ComplexMatrix) -> Result<Vec<usize>> {
    (0..g_hat.rows())
        .map(|p| {
            let mags: Vec<f64> = g_hat.row(p).iter().map(|z| z.norm_sqr()).collect();
            if mags.iter().all(|&m| m == 0.0) {
                return Err(Error::EmptySupport { row: p });
            }
            Ok(argmax(&mags).expect("non-empty row"))
        })
        .collect()
}
