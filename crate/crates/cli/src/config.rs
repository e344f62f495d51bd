//! Config-file and flag resolution. Precedence: flags > config file >
//! built-in defaults. Environment variables are deliberately not consulted,
//! so a command line plus its files fully determines a run.

use std::collections::BTreeMap;
use std::path::Path;

use ample_core::dataio::{BinningMode, FilterSpec};
use ample_core::models::presets::parse_key_values;

use crate::{CliError, FilterFlags};

const KNOWN_KEYS: [&str; 11] = [
    "max_path_loss",
    "min_distance_m",
    "max_distance_m",
    "distance_bin_m",
    "freqs_ghz",
    "bin_average",
    "thr_min",
    "thr_max",
    "thr_step",
    "rounds",
    "d0_m",
];

/// A parsed config file (possibly empty when none was given).
#[derive(Debug, Default)]
pub struct FileConfig {
    keys: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        let keys = parse_key_values(&text)?;
        for key in keys.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown config key `{key}` (known: {})",
                    KNOWN_KEYS.join(", ")
                )));
            }
        }
        Ok(FileConfig { keys })
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.keys.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
        }
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.keys.get(key).map(String::as_str) {
            None => Ok(None),
            Some("0") | Some("false") => Ok(Some(false)),
            Some("1") | Some("true") => Ok(Some(true)),
            Some(other) => Err(CliError::Usage(format!(
                "config key `{key}` must be 0/1/true/false, got `{other}`"
            ))),
        }
    }

    pub fn freq_list(&self) -> Result<Option<Vec<f64>>, CliError> {
        match self.keys.get("freqs_ghz") {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Usage(format!("config freqs_ghz: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

/// Resolve the effective filter from flags, config and defaults.
pub fn resolve_filter(flags: &FilterFlags, cfg: &FileConfig) -> Result<FilterSpec, CliError> {
    let defaults = FilterSpec::default();
    let spec = FilterSpec {
        max_path_loss: flags
            .max_path_loss
            .or(cfg.num("max_path_loss")?)
            .unwrap_or(defaults.max_path_loss),
        distance_range: (
            flags
                .min_distance
                .or(cfg.num("min_distance_m")?)
                .unwrap_or(defaults.distance_range.0),
            flags
                .max_distance
                .or(cfg.num("max_distance_m")?)
                .unwrap_or(defaults.distance_range.1),
        ),
        distance_bin: flags
            .distance_bin
            .or(cfg.num("distance_bin_m")?)
            .unwrap_or(defaults.distance_bin),
        frequency_whitelist: flags
            .freqs
            .clone()
            .or(cfg.freq_list()?)
            .unwrap_or_default(),
        binning: if flags.bin_average || cfg.flag("bin_average")?.unwrap_or(false) {
            BinningMode::Average
        } else {
            BinningMode::Label
        },
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

/// Resolve `--d0`-style value with a config fallback.
pub fn resolve_d0(flag: Option<f64>, cfg: &FileConfig) -> Result<f64, CliError> {
    let d0 = flag.or(cfg.num("d0_m")?).unwrap_or(1.0);
    if !(d0 > 0.0) {
        return Err(CliError::Usage(format!("d0 must be positive, got {d0}")));
    }
    Ok(d0)
}
