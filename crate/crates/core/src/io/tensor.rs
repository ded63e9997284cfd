//! Raw tensor files with a JSON sidecar.
//!
//! `name.bin` holds little-endian IEEE-754 doubles, nothing else. `name.json`
//! describes it:
//!
//! ```json
//! {
//!   "format": "darcyflow-tensor",
//!   "version": 1,
//!   "dtype": "f64-le",
//!   "axes": ["t", "k", "j", "i"],
//!   "dims": [22, 20, 40, 40],
//!   "quantity": "pressure",
//!   "units": "Pa",
//!   "provenance": { ... }
//! }
//! ```
//!
//! Allowed axis lists are `[t, k, j, i]` for time series, `[k, j, i]` for
//! static fields and `[t]` for time stamps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_file, write_atomic};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rock::RockField;
use crate::state::FieldSeries;

pub const FORMAT: &str = "darcyflow-tensor";
pub const VERSION: u32 = 1;
pub const DTYPE: &str = "f64-le";

const SERIES_AXES: [&str; 4] = ["t", "k", "j", "i"];
const STATIC_AXES: [&str; 3] = ["k", "j", "i"];
const TIME_AXES: [&str; 1] = ["t"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub format: String,
    pub version: u32,
    pub dtype: String,
    pub axes: Vec<String>,
    pub dims: Vec<usize>,
    pub quantity: String,
    pub units: String,
    #[serde(default)]
    pub provenance: Value,
}

impl TensorHeader {
    fn new(axes: &[&str], dims: Vec<usize>, quantity: &str, units: &str, provenance: Value) -> Self {
        TensorHeader {
            format: FORMAT.into(),
            version: VERSION,
            dtype: DTYPE.into(),
            axes: axes.iter().map(|s| s.to_string()).collect(),
            dims,
            quantity: quantity.into(),
            units: units.into(),
            provenance,
        }
    }

    pub fn series(dims: [usize; 4], quantity: &str, units: &str, provenance: Value) -> Self {
        Self::new(&SERIES_AXES, dims.to_vec(), quantity, units, provenance)
    }

    pub fn field(shape: [usize; 3], quantity: &str, units: &str, provenance: Value) -> Self {
        Self::new(&STATIC_AXES, shape.to_vec(), quantity, units, provenance)
    }

    pub fn times(n: usize, provenance: Value) -> Self {
        Self::new(&TIME_AXES, vec![n], "time", "s", provenance)
    }

    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }

    fn check(&self, path: &Path) -> Result<()> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::format(path, format!("unsupported format {} v{}", self.format, self.version)));
        }
        if self.dtype != DTYPE {
            return Err(Error::format(path, format!("unsupported dtype {}", self.dtype)));
        }
        let axes: Vec<&str> = self.axes.iter().map(String::as_str).collect();
        if axes != SERIES_AXES && axes != STATIC_AXES && axes != TIME_AXES {
            return Err(Error::format(
                path,
                format!("axis order {axes:?} is not canonical; expected [t, k, j, i], [k, j, i] or [t]"),
            ));
        }
        if self.dims.len() != axes.len() {
            return Err(Error::format(
                path,
                format!("{} dims for {} axes", self.dims.len(), axes.len()),
            ));
        }
        Ok(())
    }
}

/// Sidecar path belonging to payload `path`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_tensor(path: &Path, data: &[f64], header: &TensorHeader) -> Result<()> {
    header.check(path)?;
    if sidecar_path(path) == path {
        return Err(Error::InvalidArgument(format!("payload path {} collides with its sidecar", path.display())));
    }
    if data.len() != header.element_count() {
        return Err(Error::Shape(format!(
            "header dims {:?} need {} values, got {}",
            header.dims,
            header.element_count(),
            data.len()
        )));
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite value at flat index {pos}")));
    }
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let json = serde_json::to_vec_pretty(header).map_err(|e| Error::format(path, e.to_string()))?;
    write_atomic(path, &bytes)?;
    write_atomic(&sidecar_path(path), &json)?;
    Ok(())
}

pub fn read_header(path: &Path) -> Result<TensorHeader> {
    let side = sidecar_path(path);
    let text = read_file(&side)?;
    let header: TensorHeader = serde_json::from_slice(&text).map_err(|e| Error::format(&side, e.to_string()))?;
    header.check(&side)?;
    Ok(header)
}

pub fn read_tensor(path: &Path) -> Result<(Vec<f64>, TensorHeader)> {
    let header = read_header(path)?;
    let bytes = read_file(path)?;
    let expected = header.element_count() * 8;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("payload length mismatch: expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok((data, header))
}

/// File names used for a series directory.
pub const PRESSURE_FILE: &str = "pressure.bin";
pub const SATURATION_FILE: &str = "sat_w.bin";
pub const TIMES_FILE: &str = "times.bin";
pub const PERM_FILE: &str = "perm.bin";
pub const PORO_FILE: &str = "poro.bin";

pub fn write_series(dir: &Path, series: &FieldSeries, provenance: &Value) -> Result<()> {
    series.validate()?;
    let [nz, ny, nx] = series.shape;
    let dims = [series.n_slices(), nz, ny, nx];
    write_tensor(
        &dir.join(PRESSURE_FILE),
        &series.pressure,
        &TensorHeader::series(dims, "pressure", "Pa", provenance.clone()),
    )?;
    write_tensor(
        &dir.join(SATURATION_FILE),
        &series.sat_w,
        &TensorHeader::series(dims, "water_saturation", "1", provenance.clone()),
    )?;
    write_tensor(&dir.join(TIMES_FILE), &series.times, &TensorHeader::times(series.n_slices(), provenance.clone()))
}

pub fn read_series(dir: &Path) -> Result<FieldSeries> {
    let (pressure, hp) = read_tensor(&dir.join(PRESSURE_FILE))?;
    let (sat_w, hs) = read_tensor(&dir.join(SATURATION_FILE))?;
    let (times, ht) = read_tensor(&dir.join(TIMES_FILE))?;
    for (h, name) in [(&hp, PRESSURE_FILE), (&hs, SATURATION_FILE)] {
        if h.axes.len() != 4 {
            return Err(Error::format(dir.join(name), "expected a [t, k, j, i] series"));
        }
    }
    if hp.dims != hs.dims || ht.dims != [hp.dims[0]] {
        return Err(Error::format(
            dir,
            format!("inconsistent dims: pressure {:?}, saturation {:?}, times {:?}", hp.dims, hs.dims, ht.dims),
        ));
    }
    FieldSeries::new([hp.dims[1], hp.dims[2], hp.dims[3]], times, pressure, sat_w)
}

pub fn write_rock(dir: &Path, grid: &Grid, rock: &RockField, provenance: &Value) -> Result<()> {
    write_tensor(&dir.join(PERM_FILE), &rock.perm, &TensorHeader::field(grid.shape(), "permeability", "m2", provenance.clone()))?;
    write_tensor(&dir.join(PORO_FILE), &rock.poro, &TensorHeader::field(grid.shape(), "porosity", "1", provenance.clone()))
}

/// Reads a permeability/porosity pair and checks it against `grid`.
pub fn read_rock_files(perm_path: &Path, poro_path: &Path, grid: &Grid) -> Result<RockField> {
    let (perm, hk) = read_tensor(perm_path)?;
    let (poro, hp) = read_tensor(poro_path)?;
    for (h, p) in [(&hk, perm_path), (&hp, poro_path)] {
        if h.dims != grid.shape() {
            return Err(Error::format(p, format!("dims {:?} do not match grid {:?}", h.dims, grid.shape())));
        }
    }
    if hk.units != "m2" {
        return Err(Error::format(perm_path, format!("permeability units must be m2, found {}", hk.units)));
    }
    RockField::new(grid, perm, poro)
}

pub fn read_rock(dir: &Path, grid: &Grid) -> Result<RockField> {
    read_rock_files(&dir.join(PERM_FILE), &dir.join(PORO_FILE), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;
    use std::fs;

    #[test]
    fn series_roundtrip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let series = FieldSeries::new(
            [2, 1, 3],
            vec![0.0, 4.32e6],
            (0..12).map(|i| 3.5e7 + (i as f64).sqrt()).collect(),
            (0..12).map(|i| 0.1 + 0.0123 * i as f64).collect(),
        )
        .unwrap();
        write_series(dir.path(), &series, &json!({"seed": 1})).unwrap();
        let back = read_series(dir.path()).unwrap();
        assert_eq!(back, series);
        for (a, b) in back.pressure.iter().zip(&series.pressure) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let h = read_header(&dir.path().join(PRESSURE_FILE)).unwrap();
        assert_eq!(h.provenance["seed"], 1);
        assert_eq!(h.units, "Pa");
    }

    #[test]
    fn truncated_payload_reports_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        write_tensor(&path, &[1.0; 6], &TensorHeader::field([1, 2, 3], "porosity", "1", Value::Null)).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..40]).unwrap();
        let err = read_tensor(&path).unwrap_err().to_string();
        assert!(err.contains("expected 48 bytes") && err.contains("found 40"), "{err}");
    }

    #[test]
    fn non_canonical_axes_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        write_tensor(&path, &[1.0; 6], &TensorHeader::field([1, 2, 3], "porosity", "1", Value::Null)).unwrap();
        let side = sidecar_path(&path);
        let text = fs::read_to_string(&side).unwrap().replace("\"k\"", "\"q\"");
        fs::write(&side, text).unwrap();
        let err = read_tensor(&path).unwrap_err().to_string();
        assert!(err.contains("not canonical"), "{err}");

        let mut h = TensorHeader::field([1, 2, 3], "porosity", "1", Value::Null);
        h.axes = vec!["i".into(), "j".into(), "k".into()];
        assert!(write_tensor(&path, &[1.0; 6], &h).is_err());
    }

    #[test]
    fn writer_rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let h = TensorHeader::field([1, 1, 2], "porosity", "1", Value::Null);
        assert!(write_tensor(&path, &[1.0], &h).is_err());
        assert!(write_tensor(&path, &[1.0, f64::NAN], &h).is_err());
        assert!(read_tensor(&dir.path().join("missing.bin")).is_err());
    }

    #[test]
    fn rock_roundtrip_and_grid_check() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(2, 2, 1, 1.0, 1.0, 1.0).unwrap();
        let rock = RockField::new(&grid, vec![1e-12, 2e-14, 1e-12, 2e-14], vec![0.25, 0.1, 0.25, 0.1]).unwrap();
        write_rock(dir.path(), &grid, &rock, &Value::Null).unwrap();
        assert_eq!(read_rock(dir.path(), &grid).unwrap(), rock);
        let other = Grid::new(4, 1, 1, 1.0, 1.0, 1.0).unwrap();
        assert!(read_rock(dir.path(), &other).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn arbitrary_finite_values_roundtrip(values in proptest::collection::vec(-1e300f64..1e300, 1..64)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("v.bin");
            let n = values.len();
            write_tensor(&path, &values, &TensorHeader::field([1, 1, n], "x", "1", Value::Null)).unwrap();
            let (back, _) = read_tensor(&path).unwrap();
            prop_assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}
