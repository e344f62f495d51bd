//! Maximum-likelihood parameter extraction by fixed-step gradient descent.
//!
//! All three models share the same structure: the observed path loss is
//! Gaussian around a mean that is linear in the model parameters, so the
//! negative log-likelihood is
//!
//! ```text
//! NLL(theta, sigma) = Z ln(sigma sqrt(2 pi)) + sum_z (l_z - mu_z)^2 / (2 sigma^2)
//! ```
//!
//! with `mu_z = theta . phi_z` over a per-model feature row `phi_z`:
//!
//! * AMPLE: `phi = (1, D_1..D_M, p, 10 log10 f)` for `(A, n_1..n_M, X, gamma)`
//! * CI:    `phi = (10 log10(d/d0))` for `(n)`, target `l - fspl(f, d0)`
//! * ABG:   `phi = (10 log10 d, 1, 10 log10 f)` for `(alpha, beta, gamma)`
//!
//! [`nll_ample`]/[`grad_ample`] and friends accumulate the textbook per-point
//! sums in fixed row order. The descent loop itself evaluates the identical
//! algebra through cached sufficient statistics (`G = sum phi phi'`,
//! `c = sum phi l`, `sum l^2`), which makes an iteration O(k^2) instead of
//! O(Z k); the two routes are cross-checked against each other in tests.
//! Sigma is clamped at `sigma_floor` from below after every step, and the
//! best iterate by NLL is what a fit returns (plain fixed-step descent
//! oscillates near an optimum, and on noise-free data sigma walks to the
//! floor where theta updates become unstable).

use thiserror::Error;

use crate::models::{
    collapse_line, fspl, AbgParams, AmpleParams, CiParams, ModelError, ModelParams, SamplePoint,
};
use crate::regionmap::{GeometryError, LineMatrix, RegionMap};

/// Cholesky pivots below this fraction of the largest Gram diagonal mark the
/// design as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("NLL became non-finite at iteration {iter}")]
    Diverged { iter: u64 },
    #[error("degenerate design: every point sits at the reference distance")]
    DegenerateDesign,
    #[error("initial parameters are {got} but the dataset is for {expected}")]
    ModelMismatch { expected: &'static str, got: &'static str },
    #[error("initial parameters have {got} region exponents, dataset has {expected}")]
    RegionCountMismatch { expected: usize, got: usize },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

fn row_err(row: usize, err: impl std::fmt::Display) -> FitError {
    FitError::Row { row, msg: err.to_string() }
}

/// Gradient descent configuration.
///
/// Defaults: step 2e-6, at most 2,000,000 iterations, stop when the
/// infinity norm of the gradient falls below 1e-4, sigma floored at 1e-3.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub step_size: f64,
    pub max_iters: u64,
    pub grad_tol: f64,
    pub sigma_floor: f64,
    pub init: ModelParams,
}

impl FitConfig {
    pub fn new(init: ModelParams) -> FitConfig {
        FitConfig {
            step_size: 2e-6,
            max_iters: 2_000_000,
            grad_tol: 1e-4,
            sigma_floor: 1e-3,
            init,
        }
    }

    /// Default CI starting point: n = 2, sigma = 5.
    pub fn ci_default(d0: f64) -> FitConfig {
        FitConfig::new(ModelParams::Ci(CiParams { n: 2.0, sigma: 5.0, d0 }))
    }

    /// Default ABG starting point: alpha = 3, beta = 20, gamma = 2, sigma = 5.
    pub fn abg_default() -> FitConfig {
        FitConfig::new(ModelParams::Abg(AbgParams {
            alpha: 3.0,
            beta: 20.0,
            gamma: 2.0,
            sigma: 5.0,
        }))
    }
}

/// Outcome of a gradient-descent fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    /// NLL at the returned (best-seen) parameters.
    pub final_nll: f64,
    /// Number of update steps performed.
    pub iters: u64,
    /// True iff the gradient at the returned parameters meets `grad_tol`.
    pub converged: bool,
    /// Infinity norm of the gradient at the returned parameters.
    pub grad_norm: f64,
    /// True iff the feature Gram matrix is numerically singular (some
    /// parameter direction is not identifiable from this dataset).
    pub rank_deficient: bool,
    /// `(iteration, NLL)` snapshots every 10,000 steps, for run logs.
    pub nll_trace: Vec<(u64, f64)>,
}

// ---------------------------------------------------------------------------
// Feature datasets
// ---------------------------------------------------------------------------

/// Per-point feature rows plus their cached sufficient statistics.
#[derive(Debug, Clone)]
struct LinearDesign {
    k: usize,
    rows: Vec<f64>, // z * k, row-major
    y: Vec<f64>,
    gram: Vec<f64>, // k * k
    xty: Vec<f64>,  // k
    yty: f64,
}

impl LinearDesign {
    fn new(k: usize, rows: Vec<f64>, y: Vec<f64>) -> Result<LinearDesign, FitError> {
        if y.is_empty() {
            return Err(FitError::EmptyDataset);
        }
        debug_assert_eq!(rows.len(), y.len() * k);
        for (i, row) in rows.chunks(k).enumerate() {
            if row.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
                return Err(row_err(i, "non-finite feature or target"));
            }
        }
        // Sufficient statistics, accumulated in fixed row order.
        let mut gram = vec![0.0; k * k];
        let mut xty = vec![0.0; k];
        let mut yty = 0.0;
        for (row, &t) in rows.chunks(k).zip(&y) {
            for i in 0..k {
                for j in 0..k {
                    gram[i * k + j] += row[i] * row[j];
                }
                xty[i] += row[i] * t;
            }
            yty += t * t;
        }
        Ok(LinearDesign { k, rows, y, gram, xty, yty })
    }

    fn z(&self) -> usize {
        self.y.len()
    }

    /// Per-point NLL, the textbook sum in row order.
    fn nll_pointwise(&self, theta: &[f64], sigma: f64) -> Result<f64, FitError> {
        if !(sigma > 0.0) {
            return Err(FitError::NonPositiveSigma(sigma));
        }
        let z = self.z() as f64;
        let mut ssr = 0.0;
        for (row, &t) in self.rows.chunks(self.k).zip(&self.y) {
            let mu: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
            ssr += (t - mu) * (t - mu);
        }
        Ok(z * (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln() + ssr / (2.0 * sigma * sigma))
    }

    /// Per-point gradient `(d/d theta_0, .., d/d theta_{k-1}, d/d sigma)`,
    /// accumulated in row order exactly as the partial-derivative sums read.
    fn grad_pointwise(&self, theta: &[f64], sigma: f64) -> Result<Vec<f64>, FitError> {
        if !(sigma > 0.0) {
            return Err(FitError::NonPositiveSigma(sigma));
        }
        let s2 = sigma * sigma;
        let mut g = vec![0.0; self.k + 1];
        for (row, &t) in self.rows.chunks(self.k).zip(&self.y) {
            let mu: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
            let r = mu - t;
            for i in 0..self.k {
                g[i] += r * row[i] / s2;
            }
            g[self.k] += 1.0 / sigma - r * r / (s2 * sigma);
        }
        Ok(g)
    }

    /// Same NLL and gradient through the cached sufficient statistics:
    /// `grad_theta = (G theta - c) / sigma^2`, `SSR = theta'G theta - 2 c'theta + y'y`.
    fn eval_fast(&self, theta: &[f64], sigma: f64, grad: &mut [f64]) -> f64 {
        let k = self.k;
        let s2 = sigma * sigma;
        let mut ssr = self.yty;
        for i in 0..k {
            let gti: f64 = self.gram[i * k..(i + 1) * k]
                .iter()
                .zip(theta)
                .map(|(g, t)| g * t)
                .sum();
            ssr += theta[i] * (gti - 2.0 * self.xty[i]);
            grad[i] = (gti - self.xty[i]) / s2;
        }
        let z = self.z() as f64;
        grad[k] = z / sigma - ssr / (s2 * sigma);
        z * (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln() + ssr / (2.0 * s2)
    }

    /// Cholesky with a relative pivot tolerance; true when the Gram matrix is
    /// numerically singular.
    fn rank_deficient(&self) -> bool {
        let k = self.k;
        let mut a = self.gram.clone();
        let max_diag = (0..k).map(|i| self.gram[i * k + i]).fold(0.0f64, f64::max);
        if max_diag <= 0.0 {
            return true;
        }
        for c in 0..k {
            let mut d = a[c * k + c];
            for j in 0..c {
                d -= a[c * k + j] * a[c * k + j];
            }
            if d < RANK_TOL * max_diag {
                return true;
            }
            let d_sqrt = d.sqrt();
            a[c * k + c] = d_sqrt;
            for r in (c + 1)..k {
                let mut v = a[r * k + c];
                for j in 0..c {
                    v -= a[r * k + j] * a[c * k + j];
                }
                a[r * k + c] = v / d_sqrt;
            }
        }
        false
    }
}

/// AMPLE fit features: one `(1, D_1..D_M, p, 10 log10 f)` row per link.
#[derive(Debug, Clone)]
pub struct AmpleFitData {
    design: LinearDesign,
    m: usize,
}

impl AmpleFitData {
    /// Build rows from already-traced lines.
    pub fn from_lines<'a, I>(lines: I, m: usize) -> Result<AmpleFitData, FitError>
    where
        I: IntoIterator<Item = (&'a LineMatrix, f64, f64)>, // (line, freq_ghz, path_loss)
    {
        let k = m + 3;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (i, (line, freq, loss)) in lines.into_iter().enumerate() {
            let d = collapse_line(line, m).map_err(|e| row_err(i, e))?;
            rows.push(1.0);
            rows.extend_from_slice(&d);
            rows.push(f64::from(line.penetrations));
            rows.push(10.0 * freq.log10());
            y.push(loss);
        }
        Ok(AmpleFitData { design: LinearDesign::new(k, rows, y)?, m })
    }

    /// Trace any missing line matrices against `map`, then build rows.
    pub fn from_samples(
        map: &RegionMap,
        samples: &[SamplePoint],
        d0: f64,
    ) -> Result<AmpleFitData, FitError> {
        let m = map.region_count();
        let lines: Vec<LineMatrix> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| match &s.line {
                Some(line) => Ok(line.clone()),
                None => map.trace_line(s.tx, s.rx, d0).map_err(|e: GeometryError| row_err(i, e)),
            })
            .collect::<Result<_, _>>()?;
        AmpleFitData::from_lines(
            lines
                .iter()
                .zip(samples)
                .map(|(line, s)| (line, s.freq_ghz, s.path_loss_db)),
            m,
        )
    }

    pub fn region_count(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.design.z()
    }

    pub fn is_empty(&self) -> bool {
        self.design.z() == 0
    }
}

/// CI fit features: `10 log10(d/d0)` against the FSPL-referenced excess loss.
#[derive(Debug, Clone)]
pub struct CiFitData {
    design: LinearDesign,
    d0: f64,
}

impl CiFitData {
    pub fn from_observations<I>(obs: I, d0: f64) -> Result<CiFitData, FitError>
    where
        I: IntoIterator<Item = (f64, f64, f64)>, // (freq_ghz, distance_m, path_loss_db)
    {
        assert!(d0 > 0.0, "reference distance must be positive");
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (i, (freq, d, loss)) in obs.into_iter().enumerate() {
            if d < d0 {
                return Err(row_err(i, ModelError::DistanceBelowReference { d, d0 }));
            }
            rows.push(10.0 * (d / d0).log10());
            y.push(loss - fspl(freq, d0));
        }
        Ok(CiFitData { design: LinearDesign::new(1, rows, y)?, d0 })
    }

    pub fn from_samples(samples: &[SamplePoint], d0: f64) -> Result<CiFitData, FitError> {
        CiFitData::from_observations(
            samples.iter().map(|s| (s.freq_ghz, s.distance3d, s.path_loss_db)),
            d0,
        )
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn len(&self) -> usize {
        self.design.z()
    }

    pub fn is_empty(&self) -> bool {
        self.design.z() == 0
    }
}

/// ABG fit features: `(10 log10 d, 1, 10 log10 f)` rows.
#[derive(Debug, Clone)]
pub struct AbgFitData {
    design: LinearDesign,
}

impl AbgFitData {
    pub fn from_observations<I>(obs: I) -> Result<AbgFitData, FitError>
    where
        I: IntoIterator<Item = (f64, f64, f64)>, // (freq_ghz, distance_m, path_loss_db)
    {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (i, (freq, d, loss)) in obs.into_iter().enumerate() {
            if !(d > 0.0) || !(freq > 0.0) {
                return Err(row_err(i, "distance and frequency must be positive"));
            }
            rows.push(10.0 * d.log10());
            rows.push(1.0);
            rows.push(10.0 * freq.log10());
            y.push(loss);
        }
        Ok(AbgFitData { design: LinearDesign::new(3, rows, y)? })
    }

    pub fn from_samples(samples: &[SamplePoint]) -> Result<AbgFitData, FitError> {
        AbgFitData::from_observations(
            samples.iter().map(|s| (s.freq_ghz, s.distance3d, s.path_loss_db)),
        )
    }

    pub fn len(&self) -> usize {
        self.design.z()
    }

    pub fn is_empty(&self) -> bool {
        self.design.z() == 0
    }
}

// ---------------------------------------------------------------------------
// NLL and gradients (per-point sums)
// ---------------------------------------------------------------------------

pub fn nll_ample(params: &AmpleParams, data: &AmpleFitData) -> Result<f64, FitError> {
    check_ample(params, data)?;
    data.design.nll_pointwise(&ample_theta(params), params.sigma)
}

/// Gradient of [`nll_ample`], laid out as `(A, n_1..n_M, X, gamma, sigma)`.
pub fn grad_ample(params: &AmpleParams, data: &AmpleFitData) -> Result<Vec<f64>, FitError> {
    check_ample(params, data)?;
    data.design.grad_pointwise(&ample_theta(params), params.sigma)
}

pub fn nll_ci(params: &CiParams, data: &CiFitData) -> Result<f64, FitError> {
    data.design.nll_pointwise(&[params.n], params.sigma)
}

/// Gradient of [`nll_ci`], laid out as `(n, sigma)`.
pub fn grad_ci(params: &CiParams, data: &CiFitData) -> Result<Vec<f64>, FitError> {
    data.design.grad_pointwise(&[params.n], params.sigma)
}

pub fn nll_abg(params: &AbgParams, data: &AbgFitData) -> Result<f64, FitError> {
    data.design
        .nll_pointwise(&[params.alpha, params.beta, params.gamma], params.sigma)
}

/// Gradient of [`nll_abg`], laid out as `(alpha, beta, gamma, sigma)`.
pub fn grad_abg(params: &AbgParams, data: &AbgFitData) -> Result<Vec<f64>, FitError> {
    data.design
        .grad_pointwise(&[params.alpha, params.beta, params.gamma], params.sigma)
}

fn ample_theta(params: &AmpleParams) -> Vec<f64> {
    let mut theta = Vec::with_capacity(params.n.len() + 3);
    theta.push(params.a);
    theta.extend_from_slice(&params.n);
    theta.push(params.x);
    theta.push(params.gamma);
    theta
}

fn check_ample(params: &AmpleParams, data: &AmpleFitData) -> Result<(), FitError> {
    if params.n.len() != data.m {
        return Err(FitError::RegionCountMismatch { expected: data.m, got: params.n.len() });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Descent loop
// ---------------------------------------------------------------------------

struct Descent {
    theta: Vec<f64>,
    sigma: f64,
    nll: f64,
    iters: u64,
    converged: bool,
    grad_norm: f64,
    trace: Vec<(u64, f64)>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Fixed-step descent on `(theta, sigma)`, returning the best iterate by NLL.
fn descend(design: &LinearDesign, theta0: Vec<f64>, sigma0: f64, cfg: &FitConfig) -> Result<Descent, FitError> {
    let k = design.k;
    let mut theta = theta0;
    let mut sigma = sigma0.max(cfg.sigma_floor);
    let mut grad = vec![0.0; k + 1];
    let mut trace = Vec::new();

    let nll0 = design.eval_fast(&theta, sigma, &mut grad);
    if !nll0.is_finite() {
        return Err(FitError::Diverged { iter: 0 });
    }
    let mut best_theta = theta.clone();
    let mut best_sigma = sigma;
    let mut best_nll = nll0;

    let mut iters = 0u64;
    let mut fired: Option<(f64, f64)> = None; // (nll, grad_norm) at the firing iterate
    for it in 0..cfg.max_iters {
        let nll = design.eval_fast(&theta, sigma, &mut grad);
        if !nll.is_finite() {
            return Err(FitError::Diverged { iter: it });
        }
        if nll < best_nll {
            best_nll = nll;
            best_theta.copy_from_slice(&theta);
            best_sigma = sigma;
        }
        if it % 10_000 == 0 {
            trace.push((it, nll));
        }
        let gn = inf_norm(&grad);
        if gn <= cfg.grad_tol {
            fired = Some((nll, gn));
            break;
        }
        for j in 0..k {
            theta[j] -= cfg.step_size * grad[j];
        }
        sigma = (sigma - cfg.step_size * grad[k]).max(cfg.sigma_floor);
        iters = it + 1;
    }

    // When the tolerance fires, the firing iterate sits within rounding of
    // the running best and is the one point whose gradient is known small;
    // return it unless an earlier iterate was genuinely better. Without a
    // firing iterate the running best is the result, with its own gradient.
    let out = match fired {
        Some((nll, gn)) if nll <= best_nll + 1e-9 * (1.0 + best_nll.abs()) => Descent {
            theta,
            sigma,
            nll,
            iters,
            converged: true,
            grad_norm: gn,
            trace,
        },
        _ => {
            let final_nll = design.eval_fast(&best_theta, best_sigma, &mut grad);
            let grad_norm = inf_norm(&grad);
            Descent {
                theta: best_theta,
                sigma: best_sigma,
                nll: final_nll,
                iters,
                converged: cfg.max_iters > 0 && grad_norm <= cfg.grad_tol,
                grad_norm,
                trace,
            }
        }
    };
    let mut out = out;
    out.trace.push((out.iters, out.nll));
    Ok(out)
}

/// Fit the AMPLE parameters `(A, n_1..n_M, X, gamma, sigma)`.
pub fn fit_ample(data: &AmpleFitData, cfg: &FitConfig) -> Result<FitResult, FitError> {
    let init = match &cfg.init {
        ModelParams::Ample(p) => p,
        other => {
            return Err(FitError::ModelMismatch { expected: "ample", got: other.kind().as_str() })
        }
    };
    check_ample(init, data)?;
    let out = descend(&data.design, ample_theta(init), init.sigma, cfg)?;
    let m = data.m;
    let params = AmpleParams {
        a: out.theta[0],
        n: out.theta[1..=m].to_vec(),
        x: out.theta[m + 1],
        gamma: out.theta[m + 2],
        sigma: out.sigma,
    };
    Ok(FitResult {
        params: ModelParams::Ample(params),
        final_nll: out.nll,
        iters: out.iters,
        converged: out.converged,
        grad_norm: out.grad_norm,
        rank_deficient: data.design.rank_deficient(),
        nll_trace: out.trace,
    })
}

/// Fit the CI parameters `(n, sigma)`.
pub fn fit_ci(data: &CiFitData, cfg: &FitConfig) -> Result<FitResult, FitError> {
    let init = match &cfg.init {
        ModelParams::Ci(p) => *p,
        other => return Err(FitError::ModelMismatch { expected: "ci", got: other.kind().as_str() }),
    };
    let out = descend(&data.design, vec![init.n], init.sigma, cfg)?;
    let params = CiParams { n: out.theta[0], sigma: out.sigma, d0: data.d0 };
    Ok(FitResult {
        params: ModelParams::Ci(params),
        final_nll: out.nll,
        iters: out.iters,
        converged: out.converged,
        grad_norm: out.grad_norm,
        rank_deficient: data.design.rank_deficient(),
        nll_trace: out.trace,
    })
}

/// Closed-form CI maximum likelihood, the independent cross-check for
/// [`fit_ci`]: the zero-gradient system solves to a least-squares slope
/// `n = sum(a b) / sum(b^2)` over `a = l - fspl(f, d0)`, `b = 10 log10(d/d0)`,
/// with sigma the RMS residual. Computed directly from the raw rows.
pub fn fit_ci_closed_form(data: &CiFitData) -> Result<CiParams, FitError> {
    let rows = &data.design.rows;
    let y = &data.design.y;
    let mut sum_ab = 0.0;
    let mut sum_b2 = 0.0;
    for (b, a) in rows.iter().zip(y) {
        sum_ab += a * b;
        sum_b2 += b * b;
    }
    if sum_b2 == 0.0 {
        return Err(FitError::DegenerateDesign);
    }
    let n = sum_ab / sum_b2;
    let mut ssr = 0.0;
    for (b, a) in rows.iter().zip(y) {
        let r = a - n * b;
        ssr += r * r;
    }
    let sigma = (ssr / y.len() as f64).sqrt();
    Ok(CiParams { n, sigma, d0: data.d0 })
}

/// Fit the ABG parameters `(alpha, beta, gamma, sigma)`.
///
/// Single-frequency datasets leave `beta` and `gamma` jointly unidentifiable;
/// the result is flagged `rank_deficient` rather than rejected.
pub fn fit_abg(data: &AbgFitData, cfg: &FitConfig) -> Result<FitResult, FitError> {
    let init = match &cfg.init {
        ModelParams::Abg(p) => *p,
        other => {
            return Err(FitError::ModelMismatch { expected: "abg", got: other.kind().as_str() })
        }
    };
    let out = descend(&data.design, vec![init.alpha, init.beta, init.gamma], init.sigma, cfg)?;
    let params = AbgParams {
        alpha: out.theta[0],
        beta: out.theta[1],
        gamma: out.theta[2],
        sigma: out.sigma,
    };
    Ok(FitResult {
        params: ModelParams::Abg(params),
        final_nll: out.nll,
        iters: out.iters,
        converged: out.converged,
        grad_norm: out.grad_norm,
        rank_deficient: data.design.rank_deficient(),
        nll_trace: out.trace,
    })
}
