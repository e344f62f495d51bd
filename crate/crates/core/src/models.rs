//! Deterministic path loss predictors and their parameter sets.
//!
//! Three model families share the same dB-scale Gaussian shadowing structure:
//!
//! * AMPLE — per-region path loss exponents weighted by the link's line
//!   matrix, plus building penetration and a frequency term.
//! * CI — free-space loss at a close-in reference distance plus a single
//!   log-distance slope.
//! * ABG — log-distance slope, floating intercept, log-frequency slope.
//!
//! Frequencies are in GHz and distances in meters everywhere.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::regionmap::{GeoPoint, LineMatrix, Los};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("line references region index {index} but the model has {m} region exponents")]
    RegionCountMismatch { index: u8, m: usize },
    #[error("distance {d} m is below the reference distance {d0} m")]
    DistanceBelowReference { d: f64, d0: f64 },
    #[error("invalid line matrix: {0}")]
    InvalidLine(String),
}

/// AMPLE parameter set.
///
/// `n[m-1]` is the path loss exponent of region code `m`; the CI region
/// (index 0) has no exponent by convention. `x` is the per-face penetration
/// loss in dB and `gamma` the frequency coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpleParams {
    pub a: f64,
    pub n: Vec<f64>,
    pub x: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl AmpleParams {
    pub fn validate(&self, region_count: usize) -> Result<(), String> {
        if self.n.len() != region_count {
            return Err(format!(
                "expected {} region exponents, got {}",
                region_count,
                self.n.len()
            ));
        }
        if self.sigma < 0.0 {
            return Err(format!("sigma must be >= 0, got {}", self.sigma));
        }
        Ok(())
    }
}

/// Close-in reference distance parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiParams {
    pub n: f64,
    pub sigma: f64,
    pub d0: f64,
}

/// Alpha-beta-gamma parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbgParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
}

/// Tagged union over the three model families.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Ample(AmpleParams),
    Ci(CiParams),
    Abg(AbgParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Ample(_) => ModelKind::Ample,
            ModelParams::Ci(_) => ModelKind::Ci,
            ModelParams::Abg(_) => ModelKind::Abg,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            ModelParams::Ample(p) => p.sigma,
            ModelParams::Ci(p) => p.sigma,
            ModelParams::Abg(p) => p.sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Ample,
    Ci,
    Abg,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ample => "ample",
            ModelKind::Ci => "ci",
            ModelKind::Abg => "abg",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ample" => Ok(ModelKind::Ample),
            "ci" => Ok(ModelKind::Ci),
            "abg" => Ok(ModelKind::Abg),
            other => Err(format!("unknown model `{other}` (expected ample, ci or abg)")),
        }
    }
}

/// One T-R link observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub tx: GeoPoint,
    pub rx: GeoPoint,
    /// 3D T-R separation in meters.
    pub distance3d: f64,
    /// Carrier frequency in GHz.
    pub freq_ghz: f64,
    /// Observed path loss in dB.
    pub path_loss_db: f64,
    /// LOS/NLOS class; `None` until classified against a region map.
    pub los: Option<Los>,
    /// Cached line matrix; filled on demand from the region map.
    pub line: Option<LineMatrix>,
}

/// Free-space path loss in dB at `d0` meters and `freq_ghz` GHz.
pub fn fspl(freq_ghz: f64, d0: f64) -> f64 {
    assert!(freq_ghz > 0.0, "frequency must be positive");
    assert!(d0 > 0.0, "reference distance must be positive");
    20.0 * (4.0 * std::f64::consts::PI * freq_ghz * 1e9 * d0 / SPEED_OF_LIGHT).log10()
}

/// Collapse a line matrix into the M per-region dB weights.
///
/// `D[m-1]` sums `10 log10(cum_r / cum_{r-1})` over the segments of region
/// code `m`, where `cum_r` is the cumulative length through segment `r`
/// (the CI segment seeds `cum_0 = d0`). The weights telescope:
/// `sum(D) = 10 log10(total / d0)`.
pub fn collapse_line(line: &LineMatrix, m: usize) -> Result<Vec<f64>, ModelError> {
    let first = line
        .segments
        .first()
        .ok_or_else(|| ModelError::InvalidLine("no segments".into()))?;
    if first.region != 0 {
        return Err(ModelError::InvalidLine(format!(
            "first segment must be the CI region, got index {}",
            first.region
        )));
    }
    if !(first.length > 0.0) {
        return Err(ModelError::InvalidLine("CI segment length must be positive".into()));
    }
    let mut d = vec![0.0; m];
    let mut cum = first.length;
    for seg in &line.segments[1..] {
        if !(seg.length > 0.0) {
            return Err(ModelError::InvalidLine(format!(
                "segment length must be positive, got {}",
                seg.length
            )));
        }
        if seg.region == 0 || seg.region as usize > m {
            return Err(ModelError::RegionCountMismatch { index: seg.region, m });
        }
        let next = cum + seg.length;
        d[seg.region as usize - 1] += 10.0 * (next / cum).log10();
        cum = next;
    }
    Ok(d)
}

/// Mean AMPLE path loss (shadowing excluded) for a traced link.
pub fn predict_ample(
    params: &AmpleParams,
    line: &LineMatrix,
    freq_ghz: f64,
) -> Result<f64, ModelError> {
    assert!(freq_ghz > 0.0, "frequency must be positive");
    let d = collapse_line(line, params.n.len())?;
    let weighted: f64 = d.iter().zip(&params.n).map(|(dm, nm)| dm * nm).sum();
    Ok(params.a
        + weighted
        + f64::from(line.penetrations) * params.x
        + 10.0 * params.gamma * freq_ghz.log10())
}

/// Mean CI path loss at 3D distance `d` meters.
pub fn predict_ci(params: &CiParams, freq_ghz: f64, d: f64) -> Result<f64, ModelError> {
    if d < params.d0 {
        return Err(ModelError::DistanceBelowReference { d, d0: params.d0 });
    }
    Ok(fspl(freq_ghz, params.d0) + 10.0 * params.n * (d / params.d0).log10())
}

/// Mean ABG path loss at 3D distance `d` meters.
pub fn predict_abg(params: &AbgParams, freq_ghz: f64, d: f64) -> f64 {
    assert!(d > 0.0, "distance must be positive");
    assert!(freq_ghz > 0.0, "frequency must be positive");
    10.0 * params.alpha * d.log10() + params.beta + 10.0 * params.gamma * freq_ghz.log10()
}

/// One draw of the dB-scale shadowing term, `N(0, sigma^2)`.
///
/// Deterministic under a seeded generator; `sigma == 0` yields exactly 0.
pub fn sample_shadowing<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    assert!(sigma >= 0.0, "sigma must be non-negative");
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("valid normal").sample(rng)
}

pub mod presets;
