//! Shared fixtures and the brute-force geometry oracle.
//!
//! The oracle deliberately avoids the library's traversal code: it projects
//! the endpoints once, then samples region codes every centimeter along the
//! planar segment and run-length encodes them.

// Not every test target uses every helper.
#![allow(dead_code)]

use ample_core::regionmap::{GeoPoint, RegionCode, RegionMap};
use ample_core::synth::{generate_map, MapRecipe};

pub const SAMPLE_STEP_M: f64 = 0.01;

/// A seeded procedural map with all four region types.
pub fn random_map(seed: u64, fill: f64) -> RegionMap {
    let recipe = MapRecipe {
        width: 160,
        height: 140,
        cell_size: 5.0,
        origin: GeoPoint::new(53.37, -1.50),
        block_cells: 8,
        street_cells: 3,
        building_fill: fill,
        foliage_patches: 8,
        water_patches: 3,
    };
    generate_map(&recipe, seed).expect("valid recipe")
}

fn code_at_planar(map: &RegionMap, x: f64, y: f64) -> RegionCode {
    let c = map.cell_size();
    let ix = ((x / c).floor() as isize).clamp(0, map.width() as isize - 1) as usize;
    let iy = ((y / c).floor() as isize).clamp(0, map.height() as isize - 1) as usize;
    map.code_at(ix, iy)
}

/// Centimeter-sampled run-length encoding of the region codes along the
/// full planar segment between two geographic points.
pub fn rle_oracle(map: &RegionMap, tx: GeoPoint, rx: GeoPoint) -> Vec<(RegionCode, f64)> {
    let (x0, y0) = map.geo_to_grid(tx).expect("tx in bounds");
    let (x1, y1) = map.geo_to_grid(rx).expect("rx in bounds");
    let len = (x1 - x0).hypot(y1 - y0);
    let n = (len / SAMPLE_STEP_M).ceil().max(1.0) as usize;
    let slice = len / n as f64;
    let mut runs: Vec<(RegionCode, f64)> = Vec::new();
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let code = code_at_planar(map, x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        match runs.last_mut() {
            Some((last, acc)) if *last == code => *acc += slice,
            _ => runs.push((code, slice)),
        }
    }
    runs
}

/// Apply the CI cut to an oracle run list: drop the first `d0` meters.
pub fn cut_runs(runs: &[(RegionCode, f64)], d0: f64) -> Vec<(RegionCode, f64)> {
    let mut out = Vec::new();
    let mut remaining = d0;
    for &(code, len) in runs {
        if remaining >= len {
            remaining -= len;
            continue;
        }
        let part = len - remaining;
        remaining = 0.0;
        out.push((code, part));
    }
    out
}

/// Penetration faces implied by a full-line run list: two per building run,
/// less the faces that coincide with a link endpoint.
pub fn penetrations_from_runs(runs: &[(RegionCode, f64)], min_len: f64) -> u32 {
    let kept: Vec<&(RegionCode, f64)> = runs.iter().filter(|(_, l)| *l >= min_len).collect();
    let mut p = 0u32;
    for (i, (code, _)) in kept.iter().enumerate() {
        if *code == RegionCode::Building {
            let mut faces = 2u32;
            if i == 0 {
                faces -= 1;
            }
            if i + 1 == kept.len() {
                faces -= 1;
            }
            p += faces;
        }
    }
    p
}

/// Fold runs shorter than `min_len` into their predecessor (successor for a
/// leading run), then merge equal-code neighbors. Makes centimeter-sampled
/// and exact run lists comparable at a common resolution.
pub fn normalize_runs(runs: &[(u8, f64)], min_len: f64) -> Vec<(u8, f64)> {
    let mut kept: Vec<(u8, f64)> = Vec::new();
    let mut leading_slack = 0.0;
    for &(code, len) in runs {
        if len < min_len {
            match kept.last_mut() {
                Some((_, acc)) => *acc += len,
                None => leading_slack += len,
            }
            continue;
        }
        match kept.last_mut() {
            Some((last, acc)) if *last == code => *acc += len,
            _ => kept.push((code, len + std::mem::take(&mut leading_slack))),
        }
    }
    // Re-merge in case folding created equal neighbors.
    let mut out: Vec<(u8, f64)> = Vec::new();
    for (code, len) in kept {
        match out.last_mut() {
            Some((last, acc)) if *last == code => *acc += len,
            _ => out.push((code, len)),
        }
    }
    out
}

/// Compare two normalized run lists: equal code sequences, each length
/// within `tol` meters.
pub fn compare_runs(a: &[(u8, f64)], b: &[(u8, f64)], tol: f64) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("run counts differ: {} vs {} ({a:?} vs {b:?})", a.len(), b.len()));
    }
    for (i, ((ca, la), (cb, lb))) in a.iter().zip(b).enumerate() {
        if ca != cb {
            return Err(format!("run {i}: code {ca} vs {cb}"));
        }
        if (la - lb).abs() > tol {
            return Err(format!("run {i}: length {la} vs {lb} (tol {tol})"));
        }
    }
    Ok(())
}
