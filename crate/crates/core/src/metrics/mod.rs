//! Model evaluation metrics: RMSE, MAE, threshold hit-rate error (AHRE),
//! distribution-level prediction error (PMDE), and mean simulation time per
//! data point.

use std::time::Instant;

use thiserror::Error;

pub mod dist;
mod special;

pub use dist::{fit_best_distribution, DistError, DistFit, Family, FamilyParams};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("prediction and reference lists differ in length ({pred} vs {reference})")]
    LengthMismatch { pred: usize, reference: usize },
    #[error("empty input")]
    Empty,
    #[error("invalid threshold range: {0}")]
    InvalidRange(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

fn paired<'a>(
    pred: &'a [f64],
    reference: &'a [f64],
) -> Result<impl Iterator<Item = (f64, f64)> + 'a, MetricError> {
    if pred.len() != reference.len() {
        return Err(MetricError::LengthMismatch { pred: pred.len(), reference: reference.len() });
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(pred.iter().copied().zip(reference.iter().copied()))
}

/// Root mean square error in dB.
pub fn rmse(pred: &[f64], reference: &[f64]) -> Result<f64, MetricError> {
    let it = paired(pred, reference)?;
    let sum: f64 = it.map(|(p, r)| (p - r) * (p - r)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// Mean absolute error in dB.
pub fn mae(pred: &[f64], reference: &[f64]) -> Result<f64, MetricError> {
    let it = paired(pred, reference)?;
    let sum: f64 = it.map(|(p, r)| (p - r).abs()).sum();
    Ok(sum / pred.len() as f64)
}

/// Total hit rate at threshold `lt`, in percent.
///
/// A point counts as a hit when prediction and reference fall on the same
/// side of the threshold (both above, both below, or both exactly on it).
pub fn thr(pred: &[f64], reference: &[f64], lt: f64) -> Result<f64, MetricError> {
    let it = paired(pred, reference)?;
    let side = |v: f64| (v > lt) as i8 - (v < lt) as i8;
    let hits = it.filter(|&(p, r)| side(p) == side(r)).count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

/// Threshold sweep for [`ahre`]: `lt_min ..= lt_max` in steps of `step` dB.
///
/// The quoted operating ranges are 80–100 dB for LOS and 100–120 dB for NLOS
/// environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrRange {
    pub lt_min: f64,
    pub lt_max: f64,
    pub step: f64,
}

impl ThrRange {
    pub fn new(lt_min: f64, lt_max: f64, step: f64) -> Result<ThrRange, MetricError> {
        if !(lt_min <= lt_max) {
            return Err(MetricError::InvalidRange(format!("{lt_min} > {lt_max}")));
        }
        if !(step > 0.0) {
            return Err(MetricError::InvalidRange(format!("step {step} must be positive")));
        }
        Ok(ThrRange { lt_min, lt_max, step })
    }

    pub fn los_default() -> ThrRange {
        ThrRange { lt_min: 80.0, lt_max: 100.0, step: 1.0 }
    }

    pub fn nlos_default() -> ThrRange {
        ThrRange { lt_min: 100.0, lt_max: 120.0, step: 1.0 }
    }

    /// Threshold grid, both endpoints included.
    pub fn thresholds(&self) -> Vec<f64> {
        let count = ((self.lt_max - self.lt_min) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lt_min + i as f64 * self.step).collect()
    }
}

/// Average hit-rate error in percent: the mean deviation from a 100 % THR
/// across the threshold grid.
pub fn ahre(pred: &[f64], reference: &[f64], range: &ThrRange) -> Result<f64, MetricError> {
    let thresholds = range.thresholds();
    let mut acc = 0.0;
    for lt in &thresholds {
        acc += 100.0 - thr(pred, reference, *lt)?;
    }
    Ok(acc / thresholds.len() as f64)
}

/// PMDE plus the two distribution fits behind it.
#[derive(Debug, Clone)]
pub struct PmdeResult {
    pub value: f64,
    pub pred_fit: DistFit,
    pub ref_fit: DistFit,
}

/// Number of trapezoid nodes for the PMDE integral.
const PMDE_NODES: usize = 20_001;

/// Prediction-measurement distribution error: the integral of the absolute
/// difference between the best-fit PDFs of the two samples, in [0, 2].
///
/// Integration runs over `[min(mean) - 8 sigma_max, max(mean) + 8 sigma_max]`
/// (sample moments of the two lists) with a 20,001-node composite trapezoid.
pub fn pmde(pred: &[f64], reference: &[f64]) -> Result<PmdeResult, MetricError> {
    if pred.is_empty() || reference.is_empty() {
        return Err(MetricError::Empty);
    }
    let pred_fit = fit_best_distribution(pred)?;
    let ref_fit = fit_best_distribution(reference)?;

    let moments = |data: &[f64]| {
        let z = data.len() as f64;
        let mean = data.iter().sum::<f64>() / z;
        let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / z;
        (mean, var.sqrt())
    };
    let (mp, sp) = moments(pred);
    let (mr, sr) = moments(reference);
    let sigma_max = sp.max(sr);
    let lo = mp.min(mr) - 8.0 * sigma_max;
    let hi = mp.max(mr) + 8.0 * sigma_max;

    let h = (hi - lo) / (PMDE_NODES - 1) as f64;
    let mut acc = 0.0;
    for i in 0..PMDE_NODES {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i == PMDE_NODES - 1 { 0.5 } else { 1.0 };
        acc += w * (pred_fit.pdf(x) - ref_fit.pdf(x)).abs();
    }
    let value = (acc * h).clamp(0.0, 2.0);
    Ok(PmdeResult { value, pred_fit, ref_fit })
}

/// Mean wall-clock time per model evaluation, in nanoseconds.
///
/// Runs `predict(0..z)` for `rounds` full passes under a monotonic clock and
/// divides by `rounds * z`. Callers pass a closure over pre-built inputs so
/// that only the per-point model arithmetic is timed; run it on a single
/// thread to keep scheduler noise out of the figure.
pub fn mean_sim_time<F>(mut predict: F, z: usize, rounds: u32) -> Result<f64, MetricError>
where
    F: FnMut(usize) -> f64,
{
    assert!(rounds >= 1, "at least one round");
    if z == 0 {
        return Err(MetricError::Empty);
    }
    let start = Instant::now();
    let mut acc = 0.0;
    for _ in 0..rounds {
        for i in 0..z {
            acc += predict(i);
        }
    }
    let elapsed = start.elapsed();
    std::hint::black_box(acc);
    Ok(elapsed.as_nanos() as f64 / (rounds as f64 * z as f64))
}

/// Full metric suite for one model on one dataset.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub rmse_db: f64,
    pub mae_db: f64,
    pub ahre_pct: f64,
    pub pmde: f64,
    pub pred_fit: DistFit,
    pub ref_fit: DistFit,
    /// Mean simulation time per point; present only when timing was run.
    pub t_p_ns: Option<f64>,
}

impl MetricsReport {
    /// Compute every deterministic metric; timing is attached separately.
    pub fn compute(
        pred: &[f64],
        reference: &[f64],
        range: &ThrRange,
    ) -> Result<MetricsReport, MetricError> {
        let rmse_db = rmse(pred, reference)?;
        let mae_db = mae(pred, reference)?;
        let ahre_pct = ahre(pred, reference, range)?;
        let p = pmde(pred, reference)?;
        Ok(MetricsReport {
            rmse_db,
            mae_db,
            ahre_pct,
            pmde: p.value,
            pred_fit: p.pred_fit,
            ref_fit: p.ref_fit,
            t_p_ns: None,
        })
    }
}
