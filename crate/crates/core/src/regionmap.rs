//! Geo-referenced region grids and per-link geometry.
//!
//! A [`RegionMap`] is a row-major grid of [`RegionCode`]s anchored to a
//! south-west corner in latitude/longitude. Links are straight 2D segments
//! between a transmitter and a receiver; this module computes the ordered
//! record of regions a link crosses (the [`LineMatrix`]), the building
//! penetration count, and the LOS/NLOS class.

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Mean Earth radius in meters, used by the equirectangular projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Two links closer than this (meters) are considered degenerate.
pub const DEGENERATE_LINK_EPS_M: f64 = 1e-9;

/// Segment lengths below this (meters) are dropped when building a line matrix.
const SEGMENT_EPS_M: f64 = 1e-9;

/// Errors from link geometry operations.
#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point ({lat}, {lon}) lies outside the map bounds")]
    OutOfBounds { lat: f64, lon: f64 },
    #[error("transmitter and receiver coincide (separation below {DEGENERATE_LINK_EPS_M} m)")]
    DegenerateLink,
    #[error("CI distance {d0} m is not below the link ground distance {ground} m")]
    CiExceedsLink { d0: f64, ground: f64 },
    #[error("CI distance must be positive, got {0} m")]
    NonPositiveCiDistance(f64),
}

/// Errors from map construction and the map file format.
#[derive(Debug, Error)]
pub enum MapError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("map format error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid map: {0}")]
    Invalid(String),
}

/// Region type of one grid cell. Codes are dense `1..=REGION_COUNT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum RegionCode {
    Building = 1,
    OpenSpace = 2,
    Foliage = 3,
    Water = 4,
}

/// Number of region types in the legend.
pub const REGION_COUNT: usize = 4;

impl RegionCode {
    /// All codes in legend order.
    pub const ALL: [RegionCode; REGION_COUNT] = [
        RegionCode::Building,
        RegionCode::OpenSpace,
        RegionCode::Foliage,
        RegionCode::Water,
    ];

    pub fn from_u8(v: u8) -> Option<RegionCode> {
        match v {
            1 => Some(RegionCode::Building),
            2 => Some(RegionCode::OpenSpace),
            3 => Some(RegionCode::Foliage),
            4 => Some(RegionCode::Water),
            _ => None,
        }
    }

    /// 1-based region index used by segment records and PLE vectors.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            RegionCode::Building => "building",
            RegionCode::OpenSpace => "open_space",
            RegionCode::Foliage => "foliage",
            RegionCode::Water => "water",
        }
    }
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A position in degrees latitude/longitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint { lat, lon }
    }
}

/// Line-of-sight class of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Los {
    Los,
    Nlos,
}

impl fmt::Display for Los {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Los::Los => "LOS",
            Los::Nlos => "NLOS",
        })
    }
}

/// One entry of a line matrix: a region index and the length crossed.
///
/// `region` 0 is the CI region (the first `d0` meters of the link);
/// `1..=REGION_COUNT` are real region codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub region: u8,
    pub length: f64,
}

/// Ordered per-link record of crossed regions and the penetration count.
///
/// The first segment is always the CI region (index 0, length `d0`). Segment
/// lengths sum to the 2D ground distance of the link. `penetrations` counts
/// crossed building faces along the full line: an interior building run
/// contributes an entry and an exit face, a run cut by a link endpoint
/// contributes only the face actually crossed.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMatrix {
    pub segments: Vec<Segment>,
    pub penetrations: u32,
    pub total_length: f64,
}

impl LineMatrix {
    /// Assemble a line matrix from raw segments, validating the invariants.
    pub fn new(segments: Vec<Segment>, penetrations: u32) -> Result<LineMatrix, String> {
        match segments.first() {
            None => return Err("line matrix has no segments".into()),
            Some(s) if s.region != 0 => {
                return Err(format!("first segment must be the CI region, got {}", s.region))
            }
            Some(s) if s.length <= 0.0 => return Err("CI segment length must be positive".into()),
            _ => {}
        }
        if segments.iter().skip(1).any(|s| s.region == 0) {
            return Err("region index 0 is only valid for the leading CI segment".into());
        }
        if segments.iter().any(|s| !(s.length > 0.0)) {
            return Err("segment lengths must be positive".into());
        }
        let total_length = segments.iter().map(|s| s.length).sum();
        Ok(LineMatrix {
            segments,
            penetrations,
            total_length,
        })
    }

    /// CI distance d0 of this link.
    pub fn d0(&self) -> f64 {
        self.segments[0].length
    }
}

/// A geo-referenced grid of region codes.
///
/// Cells are squares of `cell_size` meters. Cell `(0, 0)` touches the
/// south-west origin; x grows east, y grows north. `cells` is row-major with
/// index `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: GeoPoint,
    cells: Vec<RegionCode>,
}

impl RegionMap {
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        origin: GeoPoint,
        cells: Vec<RegionCode>,
    ) -> Result<RegionMap, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::Invalid("width and height must be positive".into()));
        }
        if !(cell_size > 0.0) {
            return Err(MapError::Invalid(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if !(origin.lat > -90.0 && origin.lat < 90.0) {
            return Err(MapError::Invalid(format!(
                "origin latitude {} outside (-90, 90)",
                origin.lat
            )));
        }
        if !(origin.lon >= -180.0 && origin.lon < 180.0) {
            return Err(MapError::Invalid(format!(
                "origin longitude {} outside [-180, 180)",
                origin.lon
            )));
        }
        if cells.len() != width * height {
            return Err(MapError::Invalid(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(RegionMap {
            width,
            height,
            cell_size,
            origin,
            cells,
        })
    }

    /// Uniform map of a single region code, for tests and fixtures.
    pub fn filled(
        width: usize,
        height: usize,
        cell_size: f64,
        origin: GeoPoint,
        code: RegionCode,
    ) -> Result<RegionMap, MapError> {
        RegionMap::new(width, height, cell_size, origin, vec![code; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    /// Number of region types in the legend (the M of the PLE vector).
    pub fn region_count(&self) -> usize {
        REGION_COUNT
    }

    /// East-west extent in meters.
    pub fn extent_x(&self) -> f64 {
        self.width as f64 * self.cell_size
    }

    /// South-north extent in meters.
    pub fn extent_y(&self) -> f64 {
        self.height as f64 * self.cell_size
    }

    pub fn code_at(&self, x: usize, y: usize) -> RegionCode {
        debug_assert!(x < self.width && y < self.height);
        self.cells[y * self.width + x]
    }

    pub fn set_code(&mut self, x: usize, y: usize, code: RegionCode) {
        debug_assert!(x < self.width && y < self.height);
        self.cells[y * self.width + x] = code;
    }

    pub fn cells(&self) -> &[RegionCode] {
        &self.cells
    }

    /// Project a geographic point to local planar meters from the SW origin.
    ///
    /// Equirectangular about the origin: `x = R cos(lat0) dlon`, `y = R dlat`
    /// with the deltas in radians. Good to well under 0.1 % over city extents.
    pub fn geo_to_grid(&self, p: GeoPoint) -> Result<(f64, f64), GeometryError> {
        let x = EARTH_RADIUS_M * (p.lon - self.origin.lon).to_radians() * self.origin.lat.to_radians().cos();
        let y = EARTH_RADIUS_M * (p.lat - self.origin.lat).to_radians();
        if x < 0.0 || y < 0.0 || x > self.extent_x() || y > self.extent_y() {
            return Err(GeometryError::OutOfBounds { lat: p.lat, lon: p.lon });
        }
        Ok((x, y))
    }

    /// Inverse of [`geo_to_grid`](Self::geo_to_grid); accepts any planar point.
    pub fn grid_to_geo(&self, x: f64, y: f64) -> GeoPoint {
        let lat = self.origin.lat + (y / EARTH_RADIUS_M).to_degrees();
        let lon =
            self.origin.lon + (x / (EARTH_RADIUS_M * self.origin.lat.to_radians().cos())).to_degrees();
        GeoPoint { lat, lon }
    }

    /// Cell coordinates containing a planar point, clamped so the closed
    /// upper map boundary maps to the last cell.
    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let ix = ((x / self.cell_size).floor() as isize).clamp(0, self.width as isize - 1) as usize;
        let iy = ((y / self.cell_size).floor() as isize).clamp(0, self.height as isize - 1) as usize;
        (ix, iy)
    }

    /// Walk the planar segment a -> b, yielding `(ix, iy, length_m)` per
    /// crossed cell in order. Steps exactly to the nearest x- or y-gridline
    /// each iteration; on a corner tie x steps before y, which leaves a
    /// zero-length run that callers drop when merging.
    fn walk_cells(&self, a: (f64, f64), b: (f64, f64)) -> Vec<(usize, usize, f64)> {
        let (x0, y0) = a;
        let (x1, y1) = b;
        let dx = x1 - x0;
        let dy = y1 - y0;
        let length = dx.hypot(dy);
        let c = self.cell_size;
        let (mut ix, mut iy) = self.cell_of(x0, y0);

        // Parametric positions (in t of [0,1]) of the next gridline crossings.
        let (step_x, mut t_next_x, dt_x) = if dx > 0.0 {
            (1isize, ((ix as f64 + 1.0) * c - x0) / dx, c / dx)
        } else if dx < 0.0 {
            (-1isize, (ix as f64 * c - x0) / dx, -c / dx)
        } else {
            (0isize, f64::INFINITY, f64::INFINITY)
        };
        let (step_y, mut t_next_y, dt_y) = if dy > 0.0 {
            (1isize, ((iy as f64 + 1.0) * c - y0) / dy, c / dy)
        } else if dy < 0.0 {
            (-1isize, (iy as f64 * c - y0) / dy, -c / dy)
        } else {
            (0isize, f64::INFINITY, f64::INFINITY)
        };

        let mut out = Vec::new();
        let mut t = 0.0_f64;
        let max_steps = self.width + self.height + 4;
        for _ in 0..=max_steps {
            let t_exit = t_next_x.min(t_next_y).min(1.0);
            out.push((ix, iy, (t_exit - t).max(0.0) * length));
            if t_exit >= 1.0 {
                break;
            }
            if t_next_x <= t_next_y {
                t = t_next_x;
                t_next_x += dt_x;
                let next = ix as isize + step_x;
                if next < 0 || next >= self.width as isize {
                    break;
                }
                ix = next as usize;
            } else {
                t = t_next_y;
                t_next_y += dt_y;
                let next = iy as isize + step_y;
                if next < 0 || next >= self.height as isize {
                    break;
                }
                iy = next as usize;
            }
        }
        out
    }

    /// Region runs (merged consecutive equal codes) along the planar segment.
    fn region_runs(&self, a: (f64, f64), b: (f64, f64)) -> Vec<(RegionCode, f64)> {
        let mut runs: Vec<(RegionCode, f64)> = Vec::new();
        for (ix, iy, len) in self.walk_cells(a, b) {
            if len <= 0.0 {
                continue;
            }
            let code = self.code_at(ix, iy);
            match runs.last_mut() {
                Some((last, acc)) if *last == code => *acc += len,
                _ => runs.push((code, len)),
            }
        }
        runs
    }

    /// Trace the straight T-R line and build its [`LineMatrix`].
    ///
    /// The first `d0` meters form the CI segment (region index 0) regardless
    /// of the regions beneath; the rest is region runs in crossing order.
    /// Penetration faces are counted on the full line, before the CI cut.
    pub fn trace_line(
        &self,
        tx: GeoPoint,
        rx: GeoPoint,
        d0: f64,
    ) -> Result<LineMatrix, GeometryError> {
        let a = self.geo_to_grid(tx)?;
        let b = self.geo_to_grid(rx)?;
        let ground = (b.0 - a.0).hypot(b.1 - a.1);
        if ground < DEGENERATE_LINK_EPS_M {
            return Err(GeometryError::DegenerateLink);
        }
        if !(d0 > 0.0) {
            return Err(GeometryError::NonPositiveCiDistance(d0));
        }
        if d0 >= ground {
            return Err(GeometryError::CiExceedsLink { d0, ground });
        }

        let runs = self.region_runs(a, b);

        // Face count: two per building run, minus the faces that fall on a
        // link endpoint instead of a wall crossing.
        let mut penetrations = 0u32;
        let last = runs.len() - 1;
        for (i, (code, _)) in runs.iter().enumerate() {
            if *code == RegionCode::Building {
                let mut faces = 2u32;
                if i == 0 {
                    faces -= 1;
                }
                if i == last {
                    faces -= 1;
                }
                penetrations += faces;
            }
        }

        // Cut the first d0 meters into the single CI segment.
        let mut segments = vec![Segment { region: 0, length: d0 }];
        let mut remaining = d0;
        for (code, len) in runs {
            if remaining >= len {
                remaining -= len;
                continue;
            }
            let part = len - remaining;
            remaining = 0.0;
            if part > SEGMENT_EPS_M {
                segments.push(Segment { region: code.index(), length: part });
            }
        }
        // The cut can leave a sub-epsilon tail run; it is already dropped above.
        Ok(LineMatrix {
            segments,
            penetrations,
            total_length: ground,
        })
    }

    /// LOS iff the straight line crosses no building cell other than the
    /// cell directly beneath the transmitter.
    pub fn classify_los(&self, tx: GeoPoint, rx: GeoPoint) -> Result<Los, GeometryError> {
        let a = self.geo_to_grid(tx)?;
        let b = self.geo_to_grid(rx)?;
        let tx_cell = self.cell_of(a.0, a.1);
        for (ix, iy, len) in self.walk_cells(a, b) {
            if len <= 0.0 || (ix, iy) == tx_cell {
                continue;
            }
            if self.code_at(ix, iy) == RegionCode::Building {
                return Ok(Los::Nlos);
            }
        }
        Ok(Los::Los)
    }

    // --- map file format ---------------------------------------------------

    /// Parse the text map format: `width`, `height`, `cell_size_m`,
    /// `origin_lat`, `origin_lon`, `legend` header lines followed by
    /// `height` rows of `width` integer codes, north row first.
    pub fn from_text(text: &str) -> Result<RegionMap, MapError> {
        let mut width: Option<usize> = None;
        let mut height: Option<usize> = None;
        let mut cell_size: Option<f64> = None;
        let mut lat: Option<f64> = None;
        let mut lon: Option<f64> = None;
        let mut legend_seen = false;
        let mut codes: Vec<RegionCode> = Vec::new();

        let parse_err = |line: usize, msg: String| MapError::Parse { line, msg };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if !legend_seen {
                let (key, value) = line
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| parse_err(line_no, format!("expected `key value`, got `{line}`")))?;
                let value = value.trim();
                let set_num = |slot: &mut Option<f64>| -> Result<(), MapError> {
                    let v = value
                        .parse::<f64>()
                        .map_err(|e| parse_err(line_no, format!("bad number `{value}`: {e}")))?;
                    if slot.replace(v).is_some() {
                        return Err(parse_err(line_no, format!("duplicate key `{key}`")));
                    }
                    Ok(())
                };
                match key {
                    "width" => {
                        let v = value
                            .parse::<usize>()
                            .map_err(|e| parse_err(line_no, format!("bad width `{value}`: {e}")))?;
                        if width.replace(v).is_some() {
                            return Err(parse_err(line_no, "duplicate key `width`".into()));
                        }
                    }
                    "height" => {
                        let v = value
                            .parse::<usize>()
                            .map_err(|e| parse_err(line_no, format!("bad height `{value}`: {e}")))?;
                        if height.replace(v).is_some() {
                            return Err(parse_err(line_no, "duplicate key `height`".into()));
                        }
                    }
                    "cell_size_m" => set_num(&mut cell_size)?,
                    "origin_lat" => set_num(&mut lat)?,
                    "origin_lon" => set_num(&mut lon)?,
                    "legend" => {
                        let expected = RegionMap::legend_string();
                        if value != expected {
                            return Err(parse_err(
                                line_no,
                                format!("legend must be `{expected}`, got `{value}`"),
                            ));
                        }
                        legend_seen = true;
                    }
                    other => {
                        return Err(parse_err(line_no, format!("unknown header key `{other}`")))
                    }
                }
            } else {
                for tok in line.split_whitespace() {
                    let v = tok
                        .parse::<u8>()
                        .map_err(|_| parse_err(line_no, format!("bad region code `{tok}`")))?;
                    let code = RegionCode::from_u8(v)
                        .ok_or_else(|| parse_err(line_no, format!("unknown region code {v}")))?;
                    codes.push(code);
                }
            }
        }

        let width = width.ok_or_else(|| MapError::Invalid("missing header key `width`".into()))?;
        let height = height.ok_or_else(|| MapError::Invalid("missing header key `height`".into()))?;
        let cell_size =
            cell_size.ok_or_else(|| MapError::Invalid("missing header key `cell_size_m`".into()))?;
        let lat = lat.ok_or_else(|| MapError::Invalid("missing header key `origin_lat`".into()))?;
        let lon = lon.ok_or_else(|| MapError::Invalid("missing header key `origin_lon`".into()))?;
        if !legend_seen {
            return Err(MapError::Invalid("missing header key `legend`".into()));
        }
        if codes.len() != width * height {
            return Err(MapError::Invalid(format!(
                "expected {} region codes, got {}",
                width * height,
                codes.len()
            )));
        }

        // File rows run north to south; storage rows run south to north.
        let mut cells = vec![RegionCode::OpenSpace; width * height];
        for (file_row, chunk) in codes.chunks(width).enumerate() {
            let y = height - 1 - file_row;
            cells[y * width..(y + 1) * width].copy_from_slice(chunk);
        }
        RegionMap::new(width, height, cell_size, GeoPoint::new(lat, lon), cells)
    }

    fn legend_string() -> String {
        RegionCode::ALL
            .iter()
            .map(|c| format!("{}={}", c.index(), c.label()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Serialize to the text map format (inverse of [`from_text`](Self::from_text)).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("width {}\n", self.width));
        out.push_str(&format!("height {}\n", self.height));
        out.push_str(&format!("cell_size_m {}\n", self.cell_size));
        out.push_str(&format!("origin_lat {}\n", self.origin.lat));
        out.push_str(&format!("origin_lon {}\n", self.origin.lon));
        out.push_str(&format!("legend {}\n", RegionMap::legend_string()));
        for y in (0..self.height).rev() {
            let row: Vec<String> = (0..self.width)
                .map(|x| self.code_at(x, y).index().to_string())
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<RegionMap, MapError> {
        RegionMap::from_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), MapError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}
