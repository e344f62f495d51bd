//! Parameter preset files: flat `key value` text, one parameter per line.
//!
//! Every preset names its `model` (`ample`, `ci` or `abg`) and may carry
//! `scenario`/`environment` labels; the remaining keys are the model's named
//! parameters. Unknown keys are rejected. The built-in UMa/UMi presets ship
//! with the crate and are parsed through the same loader.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{AbgParams, AmpleParams, CiParams, ModelKind, ModelParams};
use crate::regionmap::Los;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("preset error: {0}")]
    Parse(String),
}

/// A parameter set plus its scenario/environment labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPreset {
    pub scenario: Option<String>,
    pub environment: Option<String>,
    pub params: ModelParams,
}

/// Scenario type of the built-in presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Uma,
    Umi,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Uma => "uma",
            Scenario::Umi => "umi",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uma" => Ok(Scenario::Uma),
            "umi" => Ok(Scenario::Umi),
            other => Err(format!("unknown scenario `{other}` (expected uma or umi)")),
        }
    }
}

const AMPLE_UMA_LOS: &str = include_str!("../../presets/ample_uma_los.params");
const AMPLE_UMA_NLOS: &str = include_str!("../../presets/ample_uma_nlos.params");
const AMPLE_UMI_LOS: &str = include_str!("../../presets/ample_umi_los.params");
const AMPLE_UMI_NLOS: &str = include_str!("../../presets/ample_umi_nlos.params");
const CI_UMA_LOS_SIM: &str = include_str!("../../presets/ci_uma_los_sim.params");
const CI_UMA_NLOS_SIM: &str = include_str!("../../presets/ci_uma_nlos_sim.params");
const CI_UMI_NLOS_SIM: &str = include_str!("../../presets/ci_umi_nlos_sim.params");

/// Built-in AMPLE characterization for a scenario/environment pair.
pub fn builtin_ample(scenario: Scenario, environment: Los) -> AmpleParams {
    let text = match (scenario, environment) {
        (Scenario::Uma, Los::Los) => AMPLE_UMA_LOS,
        (Scenario::Uma, Los::Nlos) => AMPLE_UMA_NLOS,
        (Scenario::Umi, Los::Los) => AMPLE_UMI_LOS,
        (Scenario::Umi, Los::Nlos) => AMPLE_UMI_NLOS,
    };
    match parse_preset(text).expect("built-in preset parses").params {
        ModelParams::Ample(p) => p,
        _ => unreachable!("built-in ample preset has ample params"),
    }
}

/// Built-in simulation-extracted CI fixture, where one exists.
pub fn builtin_ci_sim(scenario: Scenario, environment: Los) -> Option<CiParams> {
    let text = match (scenario, environment) {
        (Scenario::Uma, Los::Los) => CI_UMA_LOS_SIM,
        (Scenario::Uma, Los::Nlos) => CI_UMA_NLOS_SIM,
        (Scenario::Umi, Los::Nlos) => CI_UMI_NLOS_SIM,
        (Scenario::Umi, Los::Los) => return None,
    };
    match parse_preset(text).expect("built-in preset parses").params {
        ModelParams::Ci(p) => Some(p),
        _ => unreachable!("built-in ci preset has ci params"),
    }
}

/// Split `key value` lines (with `#` comments) into a map, rejecting
/// duplicates. Shared by presets and the synth recipe format.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, PresetError> {
    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| {
            PresetError::Parse(format!("line {}: expected `key value`, got `{line}`", idx + 1))
        })?;
        if keys.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(PresetError::Parse(format!("line {}: duplicate key `{key}`", idx + 1)));
        }
    }
    Ok(keys)
}

pub fn parse_preset(text: &str) -> Result<ParamPreset, PresetError> {
    parse_preset_map(parse_key_values(text)?)
}

/// Parse preset keys out of an already-split key/value map. Consumes every
/// key; leftovers are unknown-key errors.
pub fn parse_preset_map(mut keys: BTreeMap<String, String>) -> Result<ParamPreset, PresetError> {
    let model_str = keys
        .remove("model")
        .ok_or_else(|| PresetError::Parse("missing key `model`".into()))?;
    let kind: ModelKind = model_str.parse().map_err(PresetError::Parse)?;
    let scenario = keys.remove("scenario");
    let environment = keys.remove("environment");

    let mut take_num = |key: &str| -> Result<f64, PresetError> {
        let v = keys
            .remove(key)
            .ok_or_else(|| PresetError::Parse(format!("missing key `{key}`")))?;
        v.parse::<f64>()
            .map_err(|e| PresetError::Parse(format!("bad value for `{key}`: {e}")))
    };

    let params = match kind {
        ModelKind::Ample => {
            let a = take_num("a")?;
            let x = take_num("x")?;
            let gamma = take_num("gamma")?;
            let sigma = take_num("sigma")?;
            let mut n = Vec::new();
            loop {
                let key = format!("n{}", n.len() + 1);
                match keys.remove(&key) {
                    Some(v) => n.push(v.parse::<f64>().map_err(|e| {
                        PresetError::Parse(format!("bad value for `{key}`: {e}"))
                    })?),
                    None => break,
                }
            }
            if n.is_empty() {
                return Err(PresetError::Parse("ample preset needs n1, n2, ... exponents".into()));
            }
            ModelParams::Ample(AmpleParams { a, n, x, gamma, sigma })
        }
        ModelKind::Ci => {
            let n = take_num("n")?;
            let sigma = take_num("sigma")?;
            let d0 = take_num("d0_m")?;
            if !(d0 > 0.0) {
                return Err(PresetError::Parse(format!("d0_m must be positive, got {d0}")));
            }
            ModelParams::Ci(CiParams { n, sigma, d0 })
        }
        ModelKind::Abg => {
            let alpha = take_num("alpha")?;
            let beta = take_num("beta")?;
            let gamma = take_num("gamma")?;
            let sigma = take_num("sigma")?;
            ModelParams::Abg(AbgParams { alpha, beta, gamma, sigma })
        }
    };

    if let Some(key) = keys.keys().next() {
        return Err(PresetError::Parse(format!("unknown key `{key}`")));
    }
    if params.sigma() < 0.0 {
        return Err(PresetError::Parse(format!(
            "sigma must be >= 0, got {}",
            params.sigma()
        )));
    }
    warn_if_unphysical(&params);

    Ok(ParamPreset { scenario, environment, params })
}

/// Unphysical-but-representable parameter sets load with a warning;
/// predictions are never clamped.
fn warn_if_unphysical(params: &ModelParams) {
    match params {
        ModelParams::Ample(p) => {
            if p.n.iter().any(|v| *v < 0.0) || p.x < 0.0 || p.a < 0.0 {
                log::warn!("ample preset has negative exponent/penetration/intercept values");
            }
        }
        ModelParams::Ci(p) => {
            if p.n < 0.0 {
                log::warn!("ci preset has a negative path loss exponent");
            }
        }
        ModelParams::Abg(p) => {
            if p.alpha < 0.0 {
                log::warn!("abg preset has a negative path loss exponent");
            }
        }
    }
}

pub fn write_preset(preset: &ParamPreset) -> String {
    let mut out = String::new();
    out.push_str(&format!("model {}\n", preset.params.kind()));
    if let Some(s) = &preset.scenario {
        out.push_str(&format!("scenario {s}\n"));
    }
    if let Some(e) = &preset.environment {
        out.push_str(&format!("environment {e}\n"));
    }
    match &preset.params {
        ModelParams::Ample(p) => {
            out.push_str(&format!("a {}\n", p.a));
            for (i, n) in p.n.iter().enumerate() {
                out.push_str(&format!("n{} {}\n", i + 1, n));
            }
            out.push_str(&format!("x {}\n", p.x));
            out.push_str(&format!("gamma {}\n", p.gamma));
            out.push_str(&format!("sigma {}\n", p.sigma));
        }
        ModelParams::Ci(p) => {
            out.push_str(&format!("n {}\n", p.n));
            out.push_str(&format!("sigma {}\n", p.sigma));
            out.push_str(&format!("d0_m {}\n", p.d0));
        }
        ModelParams::Abg(p) => {
            out.push_str(&format!("alpha {}\n", p.alpha));
            out.push_str(&format!("beta {}\n", p.beta));
            out.push_str(&format!("gamma {}\n", p.gamma));
            out.push_str(&format!("sigma {}\n", p.sigma));
        }
    }
    out
}

pub fn load_preset(path: &Path) -> Result<ParamPreset, PresetError> {
    parse_preset(&fs::read_to_string(path)?)
}

pub fn save_preset(preset: &ParamPreset, path: &Path) -> Result<(), PresetError> {
    fs::write(path, write_preset(preset))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_ample_values_spot_check() {
        let uma_los = builtin_ample(Scenario::Uma, Los::Los);
        assert_eq!(uma_los.a, 59.86);
        assert_eq!(uma_los.n, vec![1.35, 1.14, 2.59, 1.79]);
        assert_eq!(uma_los.x, 0.09);
        assert_eq!(uma_los.gamma, 0.92);
        assert_eq!(uma_los.sigma, 5.40);

        let umi_nlos = builtin_ample(Scenario::Umi, Los::Nlos);
        assert_eq!(umi_nlos.a, 55.20);
        assert_eq!(umi_nlos.sigma, 8.00);
    }

    #[test]
    fn builtin_ci_fixture_rows() {
        let uma_los = builtin_ci_sim(Scenario::Uma, Los::Los).unwrap();
        assert_eq!((uma_los.n, uma_los.sigma, uma_los.d0), (2.26, 5.06, 1.0));
        let umi_nlos = builtin_ci_sim(Scenario::Umi, Los::Nlos).unwrap();
        assert_eq!((umi_nlos.n, umi_nlos.sigma), (2.62, 10.31));
        assert!(builtin_ci_sim(Scenario::Umi, Los::Los).is_none());
    }

    #[test]
    fn preset_round_trip() {
        let preset = ParamPreset {
            scenario: Some("uma".into()),
            environment: Some("nlos".into()),
            params: ModelParams::Abg(AbgParams {
                alpha: 3.53,
                beta: 22.4,
                gamma: 2.03,
                sigma: 7.82,
            }),
        };
        let text = write_preset(&preset);
        let back = parse_preset(&text).unwrap();
        assert_eq!(preset, back);
        assert_eq!(write_preset(&back), text);
    }

    #[test]
    fn preset_rejects_unknown_key() {
        let text = "model ci\nn 2.0\nsigma 5.0\nd0_m 1\nbogus 3\n";
        let err = parse_preset(text).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn preset_rejects_negative_sigma_and_missing_model() {
        assert!(parse_preset("model ci\nn 2.0\nsigma -1\nd0_m 1\n").is_err());
        assert!(parse_preset("n 2.0\nsigma 1\nd0_m 1\n").is_err());
    }
}
