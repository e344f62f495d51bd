//! Candidate distribution fitting and AIC model selection.
//!
//! Seven families are fitted by maximum likelihood to a sample and ranked by
//! `AIC = 2k - 2 ln L`. Normal, lognormal and Rayleigh have closed-form MLEs;
//! gamma and chi-square reduce to one digamma equation; Weibull solves its
//! profile shape equation by Newton; the Ricean MLE lies exactly on the
//! second-moment curve `nu^2 + 2 sigma^2 = m2` (set the two score equations
//! to zero and eliminate), so it is a 1-D golden-section search along that
//! curve. Families whose support excludes the data are skipped with a notice,
//! and numerical failures demote a family rather than abort selection.

use statrs::function::gamma::{digamma, inv_digamma, ln_gamma};
use thiserror::Error;

use super::special::ln_i0;

/// Minimum sample size for distribution fitting.
pub const MIN_POINTS: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("need at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("no candidate distribution could be fitted")]
    AllFamiliesFailed,
}

/// Candidate families, in the fixed selection order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    LogNormal,
    Gamma,
    Weibull,
    Rayleigh,
    Ricean,
    ChiSquare,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Normal,
        Family::LogNormal,
        Family::Gamma,
        Family::Weibull,
        Family::Rayleigh,
        Family::Ricean,
        Family::ChiSquare,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::Rayleigh => "rayleigh",
            Family::Ricean => "ricean",
            Family::ChiSquare => "chisquare",
        }
    }

    /// Number of free parameters (the k of the AIC penalty).
    pub fn param_count(self) -> usize {
        match self {
            Family::Rayleigh | Family::ChiSquare => 1,
            _ => 2,
        }
    }

    /// Support restricted to positive reals?
    fn positive_support(self) -> bool {
        !matches!(self, Family::Normal)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Fitted parameters, by family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParams {
    Normal { mean: f64, std: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    Rayleigh { sigma: f64 },
    Ricean { nu: f64, sigma: f64 },
    ChiSquare { dof: f64 },
}

/// One fitted candidate: family, parameters, log-likelihood and AIC.
#[derive(Debug, Clone, PartialEq)]
pub struct DistFit {
    pub family: Family,
    pub params: FamilyParams,
    pub loglik: f64,
    pub aic: f64,
}

impl DistFit {
    /// Probability density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        match self.params {
            FamilyParams::Normal { mean, std } => {
                let zsc = (x - mean) / std;
                (-0.5 * zsc * zsc).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
            }
            FamilyParams::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let zsc = (x.ln() - mu) / sigma;
                (-0.5 * zsc * zsc).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            FamilyParams::Gamma { shape, scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                ((shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()).exp()
            }
            FamilyParams::Weibull { shape, scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let t = x / scale;
                (shape / scale) * t.powf(shape - 1.0) * (-t.powf(shape)).exp()
            }
            FamilyParams::Rayleigh { sigma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let s2 = sigma * sigma;
                (x / s2) * (-x * x / (2.0 * s2)).exp()
            }
            FamilyParams::Ricean { nu, sigma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let s2 = sigma * sigma;
                (x.ln() - s2.ln() - (x * x + nu * nu) / (2.0 * s2) + ln_i0(x * nu / s2)).exp()
            }
            FamilyParams::ChiSquare { dof } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let h = dof / 2.0;
                ((h - 1.0) * x.ln() - x / 2.0 - h * 2.0f64.ln() - ln_gamma(h)).exp()
            }
        }
    }
}

/// Shared one-pass statistics over the sample.
struct Stats<'a> {
    data: &'a [f64],
    z: f64,
    mean: f64,
    /// MLE variance (divide by Z).
    var: f64,
    sum_sq: f64,
    /// ln(x) sums, present only when every value is positive.
    logs: Option<LogStats>,
}

struct LogStats {
    values: Vec<f64>,
    sum: f64,
    mean: f64,
    var: f64,
}

impl<'a> Stats<'a> {
    fn new(data: &'a [f64]) -> Stats<'a> {
        let z = data.len() as f64;
        let mean = data.iter().sum::<f64>() / z;
        let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / z;
        let min = data.iter().copied().fold(f64::INFINITY, f64::min);
        let sum_sq = data.iter().map(|x| x * x).sum::<f64>();
        // ln(x) caches exist only for all-positive samples.
        let logs = if min > 0.0 {
            let values: Vec<f64> = data.iter().map(|x| x.ln()).collect();
            let sum = values.iter().sum::<f64>();
            let lmean = sum / z;
            let lvar = values.iter().map(|x| (x - lmean) * (x - lmean)).sum::<f64>() / z;
            Some(LogStats { values, sum, mean: lmean, var: lvar })
        } else {
            None
        };
        Stats { data, z, mean, var, sum_sq, logs }
    }
}

/// Fit every candidate family and return the one with minimal AIC.
///
/// Ties break toward fewer parameters, then the fixed family order, so
/// selection is deterministic for a given sample.
pub fn fit_best_distribution(data: &[f64]) -> Result<DistFit, DistError> {
    if data.len() < MIN_POINTS {
        return Err(DistError::TooFewPoints(data.len()));
    }
    let stats = Stats::new(data);
    if !(stats.var > 0.0) {
        return Err(DistError::AllFamiliesFailed);
    }

    let mut best: Option<(usize, DistFit)> = None;
    for (order, family) in Family::ALL.into_iter().enumerate() {
        if family.positive_support() && stats.logs.is_none() {
            log::debug!("skipping {family}: sample contains non-positive values");
            continue;
        }
        let Some(fit) = fit_family(family, &stats) else {
            log::debug!("demoting {family}: fit failed");
            continue;
        };
        if !fit.loglik.is_finite() {
            log::debug!("demoting {family}: non-finite likelihood");
            continue;
        }
        let better = match &best {
            None => true,
            Some((border, b)) => {
                fit.aic < b.aic
                    || (fit.aic == b.aic
                        && (fit.family.param_count(), order)
                            < (b.family.param_count(), *border))
            }
        };
        if better {
            best = Some((order, fit));
        }
    }
    best.map(|(_, fit)| fit).ok_or(DistError::AllFamiliesFailed)
}

fn fit_family(family: Family, stats: &Stats) -> Option<DistFit> {
    let fit = match family {
        Family::Normal => fit_normal(stats)?,
        Family::LogNormal => fit_lognormal(stats)?,
        Family::Gamma => fit_gamma(stats)?,
        Family::Weibull => fit_weibull(stats)?,
        Family::Rayleigh => fit_rayleigh(stats)?,
        Family::Ricean => fit_ricean(stats)?,
        Family::ChiSquare => fit_chisquare(stats)?,
    };
    Some(fit)
}

fn finish(family: Family, params: FamilyParams, loglik: f64) -> DistFit {
    let aic = 2.0 * family.param_count() as f64 - 2.0 * loglik;
    DistFit { family, params, loglik, aic }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

fn fit_normal(stats: &Stats) -> Option<DistFit> {
    let std = stats.var.sqrt();
    if !(std > 0.0) {
        return None;
    }
    let loglik = -stats.z * (std.ln() + LN_SQRT_2PI + 0.5);
    Some(finish(
        Family::Normal,
        FamilyParams::Normal { mean: stats.mean, std },
        loglik,
    ))
}

fn fit_lognormal(stats: &Stats) -> Option<DistFit> {
    let logs = stats.logs.as_ref()?;
    let sigma = logs.var.sqrt();
    if !(sigma > 0.0) {
        return None;
    }
    let loglik = -logs.sum - stats.z * (sigma.ln() + LN_SQRT_2PI + 0.5);
    Some(finish(
        Family::LogNormal,
        FamilyParams::LogNormal { mu: logs.mean, sigma },
        loglik,
    ))
}

fn fit_gamma(stats: &Stats) -> Option<DistFit> {
    let logs = stats.logs.as_ref()?;
    // Shape solves ln(k) - digamma(k) = ln(mean) - mean(ln x); the left side
    // is strictly decreasing to 0, the right side positive by Jensen.
    let s = stats.mean.ln() - logs.mean;
    if !(s > 0.0) {
        return None;
    }
    let f = |k: f64| k.ln() - digamma(k) - s;
    let mut lo = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
    let mut hi = lo;
    for _ in 0..200 {
        if f(lo) > 0.0 {
            break;
        }
        lo /= 2.0;
    }
    for _ in 0..200 {
        if f(hi) < 0.0 {
            break;
        }
        hi *= 2.0;
    }
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-12 * hi {
            break;
        }
    }
    let shape = 0.5 * (lo + hi);
    let scale = stats.mean / shape;
    let sum: f64 = stats.data.iter().sum();
    let loglik = (shape - 1.0) * logs.sum - sum / scale
        - stats.z * (ln_gamma(shape) + shape * scale.ln());
    Some(finish(Family::Gamma, FamilyParams::Gamma { shape, scale }, loglik))
}

fn fit_weibull(stats: &Stats) -> Option<DistFit> {
    let logs = stats.logs.as_ref()?;
    if !(logs.var > 0.0) {
        return None;
    }
    // Newton on the profile shape equation
    //   g(c) = sum(x^c ln x)/sum(x^c) - 1/c - mean(ln x) = 0,
    // with x^c computed as exp(c ln x) from the cached logs.
    let mut c = 1.282_550 / logs.var.sqrt();
    if !c.is_finite() || c <= 0.0 {
        return None;
    }
    let mut converged = false;
    for _ in 0..100 {
        let mut b = 0.0; // sum x^c
        let mut a = 0.0; // sum x^c ln x
        let mut q = 0.0; // sum x^c (ln x)^2
        for &lx in &logs.values {
            let w = (c * lx).exp();
            b += w;
            a += w * lx;
            q += w * lx * lx;
        }
        if !(b > 0.0) || !b.is_finite() {
            return None;
        }
        let g = a / b - 1.0 / c - logs.mean;
        let gp = (q * b - a * a) / (b * b) + 1.0 / (c * c);
        let step = g / gp;
        let next = c - step;
        if !(next > 0.0) || !next.is_finite() {
            return None;
        }
        c = next;
        if step.abs() < 1e-10 * c.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let b: f64 = logs.values.iter().map(|&lx| (c * lx).exp()).sum();
    let scale = (b / stats.z).powf(1.0 / c).max(f64::MIN_POSITIVE);
    // sum((x/scale)^c) = Z exactly at the scale MLE.
    let loglik = stats.z * (c.ln() - c * scale.ln() - 1.0) + (c - 1.0) * logs.sum;
    Some(finish(
        Family::Weibull,
        FamilyParams::Weibull { shape: c, scale },
        loglik,
    ))
}

fn fit_rayleigh(stats: &Stats) -> Option<DistFit> {
    let logs = stats.logs.as_ref()?;
    let s2 = stats.sum_sq / (2.0 * stats.z);
    if !(s2 > 0.0) {
        return None;
    }
    let loglik = logs.sum - stats.z * (s2.ln() + 1.0);
    Some(finish(
        Family::Rayleigh,
        FamilyParams::Rayleigh { sigma: s2.sqrt() },
        loglik,
    ))
}

fn fit_ricean(stats: &Stats) -> Option<DistFit> {
    let logs = stats.logs.as_ref()?;
    let m2 = stats.sum_sq / stats.z;
    if !(m2 > 0.0) {
        return None;
    }
    // Profile log-likelihood along nu^2 + 2 sigma^2 = m2 (exact at the MLE):
    //   L(nu) = sum(ln x) - Z ln(sigma^2) - Z (m2 + nu^2)/(2 sigma^2)
    //           + sum ln I0(x nu / sigma^2).
    let profile = |nu: f64| -> f64 {
        let s2 = (m2 - nu * nu) / 2.0;
        if !(s2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        let mut bess = 0.0;
        for &x in stats.data {
            bess += ln_i0(x * nu / s2);
        }
        logs.sum - stats.z * s2.ln() - stats.z * (m2 + nu * nu) / (2.0 * s2) + bess
    };

    // Golden-section maximization over nu in [0, sqrt(m2)).
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut lo = 0.0_f64;
    let mut hi = m2.sqrt() * (1.0 - 1e-9);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let mut f1 = profile(x1);
    let mut f2 = profile(x2);
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = profile(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = profile(x1);
        }
    }
    let nu = 0.5 * (lo + hi);
    let loglik = profile(nu);
    if !loglik.is_finite() {
        return None;
    }
    let sigma = ((m2 - nu * nu) / 2.0).sqrt();
    Some(finish(Family::Ricean, FamilyParams::Ricean { nu, sigma }, loglik))
}

fn fit_chisquare(stats: &Stats) -> Option<DistFit> {
    let logs = stats.logs.as_ref()?;
    // digamma(k/2) = mean(ln x) - ln 2 at the MLE.
    let dof = 2.0 * inv_digamma(logs.mean - 2.0f64.ln());
    if !(dof > 0.0) || !dof.is_finite() {
        return None;
    }
    let h = dof / 2.0;
    let sum: f64 = stats.data.iter().sum();
    let loglik = (h - 1.0) * logs.sum - sum / 2.0 - stats.z * (h * 2.0f64.ln() + ln_gamma(h));
    Some(finish(Family::ChiSquare, FamilyParams::ChiSquare { dof }, loglik))
}
