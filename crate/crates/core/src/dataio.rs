//! Dataset ingestion, filtering, distance binning and extraction/validation
//! splitting.
//!
//! Datasets are CSV with a required header:
//!
//! ```text
//! tx_lat,tx_lon,rx_lat,rx_lon,distance3d_m,freq_ghz,path_loss_db[,los][,city]
//! ```
//!
//! `los` (values `LOS`/`NLOS`) and `city` are optional. The LOS flag is never
//! trusted for computation — [`classify_dataset`] recomputes it from the map
//! and warns about mismatching file values. `city` is the provenance tag used
//! to split extraction from validation sets; rows without one inherit a tag
//! from the file name.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::models::SamplePoint;
use crate::regionmap::{GeoPoint, GeometryError, Los, RegionCode, RegionMap};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("unknown provenance tag `{0}`")]
    UnknownTag(String),
    #[error("row {row}: {source}")]
    Geometry { row: usize, source: GeometryError },
}

/// A loaded dataset: sample points plus per-point provenance tags.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    points: Vec<SamplePoint>,
    tags: Vec<String>,
    /// Where this dataset came from (file stem or generator name).
    pub source: String,
}

impl RawDataset {
    pub fn new(points: Vec<SamplePoint>, tags: Vec<String>, source: String) -> RawDataset {
        assert_eq!(points.len(), tags.len(), "one tag per point");
        RawDataset { points, tags, source }
    }

    /// All points tagged alike.
    pub fn with_uniform_tag(points: Vec<SamplePoint>, tag: &str) -> RawDataset {
        let tags = vec![tag.to_string(); points.len()];
        RawDataset { points, tags, source: tag.to_string() }
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [SamplePoint] {
        &mut self.points
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Concatenate another dataset onto this one.
    pub fn merge(&mut self, other: RawDataset) {
        self.points.extend(other.points);
        self.tags.extend(other.tags);
    }

    pub fn path_losses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.path_loss_db).collect()
    }
}

/// Filtering and binning policy.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    /// Points above this path loss are interference and dropped (dB).
    pub max_path_loss: f64,
    /// Keep points with `min <= distance3d <= max` (meters).
    pub distance_range: (f64, f64),
    /// Distance bin width in meters (labeling, or averaging when set).
    pub distance_bin: f64,
    /// Keep only these carrier frequencies; empty means all.
    pub frequency_whitelist: Vec<f64>,
    pub binning: BinningMode,
}

/// What distance binning does to the filtered points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinningMode {
    /// Bins are labels for stratified reporting; every point is kept.
    Label,
    /// Collapse each (tag, frequency, bin) cell to one averaged point.
    Average,
}

impl Default for FilterSpec {
    fn default() -> FilterSpec {
        FilterSpec {
            max_path_loss: 150.0,
            distance_range: (0.0, f64::INFINITY),
            distance_bin: 5.0,
            frequency_whitelist: Vec::new(),
            binning: BinningMode::Label,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(self.max_path_loss > 0.0) {
            return Err(DatasetError::Schema("max_path_loss must be positive".into()));
        }
        if !(self.distance_range.0 < self.distance_range.1) {
            return Err(DatasetError::Schema("distance range must have min < max".into()));
        }
        if !(self.distance_bin > 0.0) {
            return Err(DatasetError::Schema("distance_bin must be positive".into()));
        }
        Ok(())
    }

    fn keeps(&self, p: &SamplePoint) -> bool {
        if p.path_loss_db > self.max_path_loss {
            return false;
        }
        if p.distance3d < self.distance_range.0 || p.distance3d > self.distance_range.1 {
            return false;
        }
        if !self.frequency_whitelist.is_empty() {
            let hit = self
                .frequency_whitelist
                .iter()
                .any(|f| (p.freq_ghz - f).abs() <= 1e-9 * f.abs().max(1.0));
            if !hit {
                return false;
            }
        }
        true
    }

    /// Bin label of a distance, anchored at zero.
    pub fn bin_index(&self, distance: f64) -> u64 {
        (distance / self.distance_bin).floor() as u64
    }
}

// ---------------------------------------------------------------------------
// CSV load/save
// ---------------------------------------------------------------------------

const REQUIRED_COLUMNS: [&str; 7] = [
    "tx_lat",
    "tx_lon",
    "rx_lat",
    "rx_lon",
    "distance3d_m",
    "freq_ghz",
    "path_loss_db",
];

pub fn load_dataset(path: &Path) -> Result<RawDataset, DatasetError> {
    let text = fs::read_to_string(path)?;
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_dataset(&text, &source)
}

pub fn parse_dataset(text: &str, source: &str) -> Result<RawDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Schema(format!("missing header row: {e}")))?
        .clone();
    if headers.len() < REQUIRED_COLUMNS.len() {
        return Err(DatasetError::Schema(format!(
            "expected at least {} columns, got {}",
            REQUIRED_COLUMNS.len(),
            headers.len()
        )));
    }
    for (i, want) in REQUIRED_COLUMNS.iter().enumerate() {
        if &headers[i] != *want {
            return Err(DatasetError::Schema(format!(
                "column {} must be `{want}`, got `{}`",
                i + 1,
                &headers[i]
            )));
        }
    }
    let mut los_col = None;
    let mut city_col = None;
    for i in REQUIRED_COLUMNS.len()..headers.len() {
        match &headers[i] {
            "los" => los_col = Some(i),
            "city" => city_col = Some(i),
            other => {
                return Err(DatasetError::Schema(format!("unknown column `{other}`")));
            }
        }
    }

    let mut points = Vec::new();
    let mut tags = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| DatasetError::Parse { row, msg: e.to_string() })?;
        let num = |i: usize| -> Result<f64, DatasetError> {
            record
                .get(i)
                .ok_or_else(|| DatasetError::Parse { row, msg: format!("missing column {i}") })?
                .parse::<f64>()
                .map_err(|e| DatasetError::Parse {
                    row,
                    msg: format!("bad `{}`: {e}", REQUIRED_COLUMNS.get(i).unwrap_or(&"value")),
                })
        };
        let tx = GeoPoint::new(num(0)?, num(1)?);
        let rx = GeoPoint::new(num(2)?, num(3)?);
        let distance3d = num(4)?;
        let freq_ghz = num(5)?;
        let path_loss_db = num(6)?;
        if !(distance3d > 0.0) {
            return Err(DatasetError::Parse { row, msg: format!("distance3d_m must be positive, got {distance3d}") });
        }
        if !(freq_ghz > 0.0) {
            return Err(DatasetError::Parse { row, msg: format!("freq_ghz must be positive, got {freq_ghz}") });
        }
        if !path_loss_db.is_finite() {
            return Err(DatasetError::Parse { row, msg: "path_loss_db must be finite".into() });
        }
        let los = match los_col {
            None => None,
            Some(i) => match record.get(i).unwrap_or("") {
                "LOS" => Some(Los::Los),
                "NLOS" => Some(Los::Nlos),
                other => {
                    return Err(DatasetError::Parse { row, msg: format!("bad los value `{other}`") })
                }
            },
        };
        let tag = match city_col {
            None => source.to_string(),
            Some(i) => {
                let v = record.get(i).unwrap_or("");
                if v.is_empty() {
                    return Err(DatasetError::Parse { row, msg: "empty city tag".into() });
                }
                v.to_string()
            }
        };
        points.push(SamplePoint { tx, rx, distance3d, freq_ghz, path_loss_db, los, line: None });
        tags.push(tag);
    }
    if points.is_empty() {
        return Err(DatasetError::Schema("dataset has no data rows".into()));
    }
    Ok(RawDataset { points, tags, source: source.to_string() })
}

/// Serialize a dataset; the inverse of [`parse_dataset`] for finite values.
pub fn write_dataset(data: &RawDataset) -> String {
    let with_los = data.points.iter().all(|p| p.los.is_some());
    let mut out = String::new();
    out.push_str("tx_lat,tx_lon,rx_lat,rx_lon,distance3d_m,freq_ghz,path_loss_db");
    if with_los {
        out.push_str(",los");
    }
    out.push_str(",city\n");
    for (p, tag) in data.points.iter().zip(&data.tags) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            p.tx.lat, p.tx.lon, p.rx.lat, p.rx.lon, p.distance3d, p.freq_ghz, p.path_loss_db
        ));
        if with_los {
            out.push_str(&format!(",{}", p.los.expect("all flags present")));
        }
        out.push_str(&format!(",{tag}\n"));
    }
    out
}

pub fn save_dataset(data: &RawDataset, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, write_dataset(data))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Filtering, binning, splitting, classification
// ---------------------------------------------------------------------------

/// Apply path loss / distance / frequency filters, then the binning mode.
pub fn filter_dataset(data: &RawDataset, spec: &FilterSpec) -> Result<RawDataset, DatasetError> {
    spec.validate()?;
    let mut points = Vec::new();
    let mut tags = Vec::new();
    for (p, tag) in data.points.iter().zip(&data.tags) {
        if spec.keeps(p) {
            points.push(p.clone());
            tags.push(tag.clone());
        }
    }
    let filtered = RawDataset { points, tags, source: data.source.clone() };
    match spec.binning {
        BinningMode::Label => Ok(filtered),
        BinningMode::Average => Ok(average_bins(filtered, spec)),
    }
}

/// Collapse each (tag, frequency, distance-bin) cell into one point carrying
/// the cell's mean distance and mean path loss. Geometry and LOS flags come
/// from the cell's first point, in first-seen cell order.
fn average_bins(data: RawDataset, spec: &FilterSpec) -> RawDataset {
    #[derive(PartialEq, Eq, Hash, Clone)]
    struct Key {
        tag: String,
        freq_bits: u64,
        bin: u64,
    }
    let mut order: Vec<Key> = Vec::new();
    let mut cells: std::collections::HashMap<Key, (SamplePoint, String, f64, f64, usize)> =
        std::collections::HashMap::new();
    for (p, tag) in data.points.iter().zip(&data.tags) {
        let key = Key {
            tag: tag.clone(),
            freq_bits: p.freq_ghz.to_bits(),
            bin: spec.bin_index(p.distance3d),
        };
        match cells.get_mut(&key) {
            None => {
                order.push(key.clone());
                cells.insert(key, (p.clone(), tag.clone(), p.distance3d, p.path_loss_db, 1));
            }
            Some((_, _, d_sum, l_sum, count)) => {
                *d_sum += p.distance3d;
                *l_sum += p.path_loss_db;
                *count += 1;
            }
        }
    }
    let mut points = Vec::new();
    let mut tags = Vec::new();
    for key in order {
        let (mut p, tag, d_sum, l_sum, count) = cells.remove(&key).expect("cell recorded");
        p.distance3d = d_sum / count as f64;
        p.path_loss_db = l_sum / count as f64;
        p.line = None; // geometry no longer matches the averaged distance
        points.push(p);
        tags.push(tag);
    }
    RawDataset { points, tags, source: data.source }
}

/// Histogram of point counts per distance bin, for stratified reporting.
pub fn bin_histogram(data: &RawDataset, spec: &FilterSpec) -> Vec<(u64, usize)> {
    let mut counts: std::collections::BTreeMap<u64, usize> = std::collections::BTreeMap::new();
    for p in &data.points {
        *counts.entry(spec.bin_index(p.distance3d)).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

/// Partition by provenance tag: points tagged `extraction_tag` versus the
/// rest. Never a random split — extraction and validation are distinct
/// cities. Both sides must be non-empty.
pub fn split_extraction_validation(
    data: &RawDataset,
    extraction_tag: &str,
) -> Result<(RawDataset, RawDataset), DatasetError> {
    let mut ex_points = Vec::new();
    let mut ex_tags = Vec::new();
    let mut va_points = Vec::new();
    let mut va_tags = Vec::new();
    for (p, tag) in data.points.iter().zip(&data.tags) {
        if tag == extraction_tag {
            ex_points.push(p.clone());
            ex_tags.push(tag.clone());
        } else {
            va_points.push(p.clone());
            va_tags.push(tag.clone());
        }
    }
    if ex_points.is_empty() {
        return Err(DatasetError::UnknownTag(extraction_tag.to_string()));
    }
    if va_points.is_empty() {
        return Err(DatasetError::UnknownTag(format!(
            "no points outside `{extraction_tag}` to validate on"
        )));
    }
    Ok((
        RawDataset { points: ex_points, tags: ex_tags, source: data.source.clone() },
        RawDataset { points: va_points, tags: va_tags, source: data.source.clone() },
    ))
}

/// Outcome of [`classify_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassifyReport {
    pub classified: usize,
    /// Points whose file-provided flag disagreed with the map.
    pub mismatches: usize,
}

/// Recompute every LOS flag from the map. File flags are never trusted;
/// disagreements are counted and logged.
pub fn classify_dataset(
    data: &mut RawDataset,
    map: &RegionMap,
) -> Result<ClassifyReport, DatasetError> {
    let mut report = ClassifyReport::default();
    for (i, p) in data.points.iter_mut().enumerate() {
        let los = map
            .classify_los(p.tx, p.rx)
            .map_err(|source| DatasetError::Geometry { row: i + 1, source })?;
        if let Some(prev) = p.los {
            if prev != los {
                report.mismatches += 1;
            }
        }
        p.los = Some(los);
        report.classified += 1;
    }
    if report.mismatches > 0 {
        log::warn!(
            "{} of {} LOS flags in the file disagree with the map and were replaced",
            report.mismatches,
            report.classified
        );
    }
    Ok(report)
}

/// Outcome of [`attach_lines`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttachReport {
    pub traced: usize,
    /// Links whose receiver sits on a building cell (indoor receivers are
    /// outside the model's intended data; flagged, not rejected).
    pub rx_in_building: usize,
}

/// Trace and cache the line matrix of every point against `map`.
pub fn attach_lines(
    data: &mut RawDataset,
    map: &RegionMap,
    d0: f64,
) -> Result<AttachReport, DatasetError> {
    let mut report = AttachReport::default();
    for (i, p) in data.points.iter_mut().enumerate() {
        let line = map
            .trace_line(p.tx, p.rx, d0)
            .map_err(|source| DatasetError::Geometry { row: i + 1, source })?;
        let (rx_x, rx_y) = map
            .geo_to_grid(p.rx)
            .map_err(|source| DatasetError::Geometry { row: i + 1, source })?;
        let cell = map.cell_size();
        let ix = ((rx_x / cell).floor() as usize).min(map.width() - 1);
        let iy = ((rx_y / cell).floor() as usize).min(map.height() - 1);
        if map.code_at(ix, iy) == RegionCode::Building {
            report.rx_in_building += 1;
        }
        p.line = Some(line);
        report.traced += 1;
    }
    if report.rx_in_building > 0 {
        log::warn!(
            "{} of {} receivers sit on building cells; treating them as outdoor links",
            report.rx_in_building,
            report.traced
        );
    }
    Ok(report)
}
