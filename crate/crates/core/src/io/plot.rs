//! Heatmaps as binary PPM images and production curves as CSV.
//!
//! One cell is one pixel. Row `r` of the image is `j = r`, column `c` is
//! `i = c`. Values map linearly from the slice minimum (dark blue) to the
//! maximum (yellow); a constant slice is drawn entirely in the minimum colour.
//! The sidecar `<image>.json` records the range.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::wells::{write_production_csv, ProductionRow};

const LOW: [f64; 3] = [68.0, 1.0, 84.0];
const HIGH: [f64; 3] = [253.0, 231.0, 37.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapInfo {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
    pub quantity: String,
    pub units: String,
}

/// Renders a `height x width` row-major slice.
pub fn render_ppm(values: &[f64], width: usize, height: usize) -> Result<(Vec<u8>, f64, f64)> {
    if values.len() != width * height || values.is_empty() {
        return Err(Error::Shape(format!("{} values for a {width}x{height} image", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("heatmap values must be finite".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for &v in values {
        let t = if max > min { (v - min) / (max - min) } else { 0.0 };
        for ch in 0..3 {
            out.push((LOW[ch] + t * (HIGH[ch] - LOW[ch])).round() as u8);
        }
    }
    Ok((out, min, max))
}

pub fn emit_heatmap(
    values: &[f64],
    width: usize,
    height: usize,
    quantity: &str,
    units: &str,
    path: &Path,
) -> Result<HeatmapInfo> {
    let (bytes, min, max) = render_ppm(values, width, height)?;
    let info = HeatmapInfo {
        width,
        height,
        min,
        max,
        quantity: quantity.into(),
        units: units.into(),
    };
    write_atomic(path, &bytes)?;
    let json = serde_json::to_vec_pretty(&info).map_err(|e| Error::format(path, e.to_string()))?;
    write_atomic(&path.with_extension("json"), &json)?;
    Ok(info)
}

/// Writes curve rows in the production CSV layout.
pub fn emit_curves(rows: &[ProductionRow], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_production_csv(rows, &mut buf)?;
    write_atomic(path, &buf)
}
