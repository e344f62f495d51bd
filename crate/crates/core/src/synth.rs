//! Synthetic ground truth: procedural city-block region maps and datasets
//! generated from a chosen model, so fitting and metric claims are testable
//! without external simulator data.
//!
//! Everything is seeded. The shadowing draw of link `i` comes from stream `i`
//! of a counter-based generator, so the emitted data does not depend on
//! evaluation order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataio::RawDataset;
use crate::models::presets::{parse_key_values, parse_preset_map, PresetError};
use crate::models::{
    predict_abg, predict_ample, predict_ci, sample_shadowing, ModelParams, SamplePoint,
};
use crate::regionmap::{GeoPoint, MapError, RegionCode, RegionMap, DEGENERATE_LINK_EPS_M};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("transmitter: {0}")]
    TxOutOfBounds(crate::regionmap::GeometryError),
}

/// Procedural city-block map recipe.
///
/// Square building blocks of `block_cells` per side sit on a street grid
/// `street_cells` wide. Blocks are turned into buildings in seeded-shuffled
/// order until the requested fill fraction of the whole map is reached (the
/// last block partially, so the achieved fraction is exact to within one
/// cell). Foliage and water patches are small rectangles stamped onto
/// whatever open space they land on.
#[derive(Debug, Clone, PartialEq)]
pub struct MapRecipe {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub origin: GeoPoint,
    pub block_cells: usize,
    pub street_cells: usize,
    pub building_fill: f64,
    pub foliage_patches: usize,
    pub water_patches: usize,
}

impl MapRecipe {
    fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::InvalidRecipe("map dimensions must be positive".into()));
        }
        if self.block_cells == 0 {
            return Err(SynthError::InvalidRecipe("block_cells must be at least 1".into()));
        }
        if self.street_cells == 0 {
            return Err(SynthError::InvalidRecipe(
                "street_cells must be at least 1 (streets keep open space present)".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.building_fill) {
            return Err(SynthError::InvalidRecipe(format!(
                "building_fill must be in [0, 1), got {}",
                self.building_fill
            )));
        }
        Ok(())
    }
}

/// Deterministic city-block map for a recipe and seed.
pub fn generate_map(recipe: &MapRecipe, seed: u64) -> Result<RegionMap, SynthError> {
    recipe.validate()?;
    let mut map = RegionMap::filled(
        recipe.width,
        recipe.height,
        recipe.cell_size,
        recipe.origin,
        RegionCode::OpenSpace,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Enumerate blocks (clipped at the edges): streets first, so the map
    // border is open space.
    let period = recipe.block_cells + recipe.street_cells;
    let mut blocks: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut block_cell_total = 0usize;
    let mut by = recipe.street_cells;
    while by < recipe.height {
        let mut bx = recipe.street_cells;
        while bx < recipe.width {
            let mut cells = Vec::new();
            for y in by..(by + recipe.block_cells).min(recipe.height) {
                for x in bx..(bx + recipe.block_cells).min(recipe.width) {
                    cells.push((x, y));
                }
            }
            block_cell_total += cells.len();
            blocks.push(cells);
            bx += period;
        }
        by += period;
    }

    let total = recipe.width * recipe.height;
    let target = (recipe.building_fill * total as f64).round() as usize;
    if target > block_cell_total {
        return Err(SynthError::InvalidRecipe(format!(
            "building_fill {} needs {} cells but the block grid only has {} \
             (shrink streets or grow blocks)",
            recipe.building_fill, target, block_cell_total
        )));
    }
    blocks.shuffle(&mut rng);
    let mut placed = 0usize;
    'fill: for block in &blocks {
        for &(x, y) in block {
            if placed == target {
                break 'fill;
            }
            map.set_code(x, y, RegionCode::Building);
            placed += 1;
        }
    }

    stamp_patches(&mut map, &mut rng, RegionCode::Foliage, recipe.foliage_patches, recipe);
    stamp_patches(&mut map, &mut rng, RegionCode::Water, recipe.water_patches, recipe);
    Ok(map)
}

/// Stamp `count` rectangular patches of `code` onto open space. A patch that
/// lands entirely on non-open cells is retried; as a last resort the first
/// open cell found row-major is converted, so requested regions exist.
fn stamp_patches(
    map: &mut RegionMap,
    rng: &mut ChaCha8Rng,
    code: RegionCode,
    count: usize,
    recipe: &MapRecipe,
) {
    use rand::Rng;
    // Half a block per side keeps patches numerous and small, so different
    // seeds of the same recipe expose statistically similar region mixes.
    let max_side = (recipe.block_cells / 2).max(2);
    for _ in 0..count {
        let mut stamped = 0;
        for _attempt in 0..50 {
            let w = rng.gen_range(2..=max_side);
            let h = rng.gen_range(2..=max_side);
            let x0 = rng.gen_range(0..recipe.width);
            let y0 = rng.gen_range(0..recipe.height);
            stamped = 0;
            for y in y0..(y0 + h).min(recipe.height) {
                for x in x0..(x0 + w).min(recipe.width) {
                    if map.code_at(x, y) == RegionCode::OpenSpace {
                        map.set_code(x, y, code);
                        stamped += 1;
                    }
                }
            }
            if stamped > 0 {
                break;
            }
        }
        if stamped == 0 {
            'scan: for y in 0..recipe.height {
                for x in 0..recipe.width {
                    if map.code_at(x, y) == RegionCode::OpenSpace {
                        map.set_code(x, y, code);
                        break 'scan;
                    }
                }
            }
        }
    }
}

/// Where the map of a synthetic dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    Recipe(MapRecipe),
    File(PathBuf),
    Map(RegionMap),
}

/// Full synthetic dataset specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub map: MapSource,
    pub tx: GeoPoint,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    /// Receiver lattice pitch in meters (cell-centered at half a pitch).
    pub rx_resolution_m: f64,
    pub freqs_ghz: Vec<f64>,
    pub true_params: ModelParams,
    pub seed: u64,
    pub d0: f64,
    /// Provenance tag written to the dataset's `city` column.
    pub city: String,
}

/// Links skipped during generation, by reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SkipReport {
    pub grid_points: usize,
    pub frequencies: usize,
    pub emitted: usize,
    pub degenerate: usize,
    pub ci_exceeds: usize,
    pub rx_in_building: usize,
}

impl SkipReport {
    pub fn skipped(&self) -> usize {
        self.degenerate + self.ci_exceeds + self.rx_in_building
    }
}

/// Generate a dataset: for every lattice receiver and frequency, trace the
/// link, evaluate the model mean, add one seeded shadowing draw, and emit a
/// sample with its recomputed LOS flag and cached line matrix. Receivers on
/// building cells are skipped (the data this stands in for is outdoor-only),
/// as are degenerate links and links shorter than the CI distance.
pub fn generate_dataset(spec: &SynthSpec) -> Result<(RegionMap, RawDataset, SkipReport), SynthError> {
    let map = match &spec.map {
        MapSource::Recipe(recipe) => generate_map(recipe, spec.seed)?,
        MapSource::File(path) => RegionMap::load(path)?,
        MapSource::Map(m) => m.clone(),
    };
    if !(spec.rx_resolution_m > 0.0) {
        return Err(SynthError::InvalidRecipe("rx_resolution_m must be positive".into()));
    }
    if spec.freqs_ghz.is_empty() {
        return Err(SynthError::InvalidRecipe("freqs_ghz must not be empty".into()));
    }
    if !(spec.d0 > 0.0) {
        return Err(SynthError::InvalidRecipe("d0_m must be positive".into()));
    }
    let (tx_x, tx_y) = map.geo_to_grid(spec.tx).map_err(SynthError::TxOutOfBounds)?;

    let res = spec.rx_resolution_m;
    let nx = (map.extent_x() / res).floor() as usize;
    let ny = (map.extent_y() / res).floor() as usize;
    let dh = spec.tx_height_m - spec.rx_height_m;

    let mut report = SkipReport {
        grid_points: nx * ny,
        frequencies: spec.freqs_ghz.len(),
        ..SkipReport::default()
    };
    let mut points = Vec::new();
    let mut link_index = 0u64;
    let cell = map.cell_size();

    for iy in 0..ny {
        for ix in 0..nx {
            // The emitted position is the lat/lon, so run every check on the
            // round-tripped planar coordinates; consumers recomputing the
            // geometry from the dataset then land in the same cells even
            // when a lattice point sits exactly on a cell corner.
            let rx_geo = map.grid_to_geo((ix as f64 + 0.5) * res, (iy as f64 + 0.5) * res);
            let (x, y) = map.geo_to_grid(rx_geo).expect("lattice point in bounds");
            let cx = ((x / cell).floor() as usize).min(map.width() - 1);
            let cy = ((y / cell).floor() as usize).min(map.height() - 1);
            let rx_indoor = map.code_at(cx, cy) == RegionCode::Building;
            let ground = (x - tx_x).hypot(y - tx_y);

            for &freq in &spec.freqs_ghz {
                let stream = link_index;
                link_index += 1;
                if rx_indoor {
                    report.rx_in_building += 1;
                    continue;
                }
                if ground < DEGENERATE_LINK_EPS_M {
                    report.degenerate += 1;
                    continue;
                }
                if spec.d0 >= ground {
                    report.ci_exceeds += 1;
                    continue;
                }
                let line = map
                    .trace_line(spec.tx, rx_geo, spec.d0)
                    .expect("preconditions checked above");
                let los = map.classify_los(spec.tx, rx_geo).expect("points in bounds");
                let distance3d = ground.hypot(dh);
                let mean = match &spec.true_params {
                    ModelParams::Ample(p) => match predict_ample(p, &line, freq) {
                        Ok(v) => v,
                        Err(_) => {
                            report.ci_exceeds += 1;
                            continue;
                        }
                    },
                    ModelParams::Ci(p) => match predict_ci(p, freq, distance3d) {
                        Ok(v) => v,
                        Err(_) => {
                            report.ci_exceeds += 1;
                            continue;
                        }
                    },
                    ModelParams::Abg(p) => predict_abg(p, freq, distance3d),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(stream);
                let shadow = sample_shadowing(spec.true_params.sigma(), &mut rng);
                points.push(SamplePoint {
                    tx: spec.tx,
                    rx: rx_geo,
                    distance3d,
                    freq_ghz: freq,
                    path_loss_db: mean + shadow,
                    los: Some(los),
                    line: Some(line),
                });
                report.emitted += 1;
            }
        }
    }
    let dataset = RawDataset::with_uniform_tag(points, &spec.city);
    Ok((map, dataset, report))
}

// ---------------------------------------------------------------------------
// Recipe file
// ---------------------------------------------------------------------------

impl SynthSpec {
    /// Parse the `key value` recipe format. Map keys are either the
    /// procedural set (`map_width`, `map_height`, `cell_size_m`,
    /// `origin_lat`, `origin_lon`, `block_cells`, `street_cells`,
    /// `building_fill`, `foliage_patches`, `water_patches`) or a single
    /// `map_file` resolved against `base_dir`. Link keys: `tx_lat`, `tx_lon`,
    /// `tx_height_m`, `rx_height_m`, `rx_resolution_m`, `freqs_ghz`
    /// (comma-separated), `seed`, `d0_m`, `city`. All remaining keys are the
    /// generating model's preset (`model`, parameters, optional labels).
    pub fn from_text(text: &str, base_dir: &Path) -> Result<SynthSpec, SynthError> {
        let mut keys = parse_key_values(text)?;
        let mut take = |key: &str| keys.remove(key);
        let mut take_num = |key: &str| -> Result<Option<f64>, SynthError> {
            match take(key) {
                None => Ok(None),
                Some(v) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|e| SynthError::InvalidRecipe(format!("bad `{key}`: {e}"))),
            }
        };

        let req = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| SynthError::InvalidRecipe(format!("missing key `{key}`")))
        };

        let tx_lat = req(take_num("tx_lat")?, "tx_lat")?;
        let tx_lon = req(take_num("tx_lon")?, "tx_lon")?;
        let tx_height_m = take_num("tx_height_m")?.unwrap_or(30.0);
        let rx_height_m = take_num("rx_height_m")?.unwrap_or(1.5);
        let rx_resolution_m = req(take_num("rx_resolution_m")?, "rx_resolution_m")?;
        let seed = take_num("seed")?.unwrap_or(0.0) as u64;
        let d0 = take_num("d0_m")?.unwrap_or(1.0);

        let freqs_raw = keys
            .remove("freqs_ghz")
            .ok_or_else(|| SynthError::InvalidRecipe("missing key `freqs_ghz`".into()))?;
        let freqs_ghz: Vec<f64> = freqs_raw
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| SynthError::InvalidRecipe(format!("bad frequency `{tok}`: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if freqs_ghz.iter().any(|f| !(*f > 0.0)) {
            return Err(SynthError::InvalidRecipe("frequencies must be positive".into()));
        }
        let city = keys.remove("city").unwrap_or_else(|| "synth".to_string());

        let map = match keys.remove("map_file") {
            Some(path) => MapSource::File(base_dir.join(path)),
            None => {
                let mut take_num = |key: &str| -> Result<f64, SynthError> {
                    keys.remove(key)
                        .ok_or_else(|| SynthError::InvalidRecipe(format!("missing key `{key}`")))?
                        .parse::<f64>()
                        .map_err(|e| SynthError::InvalidRecipe(format!("bad `{key}`: {e}")))
                };
                MapSource::Recipe(MapRecipe {
                    width: take_num("map_width")? as usize,
                    height: take_num("map_height")? as usize,
                    cell_size: take_num("cell_size_m")?,
                    origin: GeoPoint::new(take_num("origin_lat")?, take_num("origin_lon")?),
                    block_cells: take_num("block_cells")? as usize,
                    street_cells: take_num("street_cells")? as usize,
                    building_fill: take_num("building_fill")?,
                    foliage_patches: take_num("foliage_patches")? as usize,
                    water_patches: take_num("water_patches")? as usize,
                })
            }
        };

        // The recipe's d0 doubles as the CI model's reference distance.
        if keys.get("model").map(String::as_str) == Some("ci") && !keys.contains_key("d0_m") {
            keys.insert("d0_m".into(), d0.to_string());
        }
        let preset = parse_preset_map(keys)?;
        Ok(SynthSpec {
            map,
            tx: GeoPoint::new(tx_lat, tx_lon),
            tx_height_m,
            rx_height_m,
            rx_resolution_m,
            freqs_ghz,
            true_params: preset.params,
            seed,
            d0,
            city,
        })
    }

    pub fn load(path: &Path) -> Result<SynthSpec, SynthError> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        SynthSpec::from_text(&text, base)
    }
}

/// Reference key/value lines describing a spec, for manifests.
pub fn describe_spec(spec: &SynthSpec, map: &RegionMap, report: &SkipReport) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    out.insert("seed".into(), spec.seed.to_string());
    out.insert("city".into(), spec.city.clone());
    out.insert("model".into(), spec.true_params.kind().to_string());
    out.insert("map_cells".into(), format!("{}x{}", map.width(), map.height()));
    out.insert("grid_points".into(), report.grid_points.to_string());
    out.insert("frequencies".into(), report.frequencies.to_string());
    out.insert("emitted".into(), report.emitted.to_string());
    out.insert("skipped".into(), report.skipped().to_string());
    out.insert("skipped_rx_in_building".into(), report.rx_in_building.to_string());
    out.insert("skipped_ci_exceeds".into(), report.ci_exceeds.to_string());
    out.insert("skipped_degenerate".into(), report.degenerate.to_string());
    out
}
