//! Binary sand/mud realizations.
//!
//! A realization is produced in three steps:
//!
//! 1. white noise `u(seed, cell)` in `[0, 1)` from a counter-based hash
//!    (SplitMix64 finaliser applied to the seed and the linear cell index);
//! 2. a separable moving average along x, y, then z, with a half-width of
//!    `round(corr_len / spacing)` cells per axis, truncated at the domain
//!    boundary;
//! 3. thresholding at the empirical quantile so that the `round(f N)` largest
//!    smoothed values become sand. Values tied with the threshold become mud.
//!
//! The same seed and parameters give the same field on every platform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rock::RockField;
use crate::units::M2_PER_MD;

pub const SAND_PERM_MD: f64 = 2000.0;
pub const MUD_PERM_MD: f64 = 20.0;
pub const SAND_PORO: f64 = 0.25;
pub const MUD_PORO: f64 = 0.1;

pub fn sand_perm() -> f64 {
    SAND_PERM_MD * M2_PER_MD
}

pub fn mud_perm() -> f64 {
    MUD_PERM_MD * M2_PER_MD
}

/// Correlation length per axis, metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrLen {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for CorrLen {
    /// Four 20 m cells laterally, two 2 m cells vertically.
    fn default() -> Self {
        CorrLen { x: 80.0, y: 80.0, z: 4.0 }
    }
}

impl CorrLen {
    /// Moving-average half-widths in cells along x, y, z.
    pub fn radii(&self, grid: &Grid) -> [usize; 3] {
        [
            (self.x / grid.dx).round() as usize,
            (self.y / grid.dy).round() as usize,
            (self.z / grid.dz).round() as usize,
        ]
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform deviate in `[0, 1)` for `(seed, counter)`.
#[inline]
pub fn noise(seed: u64, counter: u64) -> f64 {
    let bits = splitmix64(splitmix64(seed) ^ counter.wrapping_mul(0xD1B5_4A32_D192_ED03));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn smooth_axis(values: &mut [f64], scratch: &mut Vec<f64>, stride: usize, len: usize, radius: usize) {
    if radius == 0 || len == 1 {
        return;
    }
    scratch.clear();
    scratch.extend_from_slice(values);
    for (idx, out) in values.iter_mut().enumerate() {
        let pos = (idx / stride) % len;
        let lo = pos.saturating_sub(radius);
        let hi = (pos + radius).min(len - 1);
        let base = idx - pos * stride;
        let mut sum = 0.0;
        for q in lo..=hi {
            sum += scratch[base + q * stride];
        }
        *out = sum / (hi - lo + 1) as f64;
    }
}

/// Smoothed noise field before thresholding.
pub fn smoothed_noise(seed: u64, grid: &Grid, corr_len: &CorrLen) -> Vec<f64> {
    let n = grid.cell_count();
    let mut values: Vec<f64> = (0..n as u64).map(|c| noise(seed, c)).collect();
    let mut scratch = Vec::with_capacity(n);
    let [rx, ry, rz] = corr_len.radii(grid);
    smooth_axis(&mut values, &mut scratch, 1, grid.nx, rx);
    smooth_axis(&mut values, &mut scratch, grid.nx, grid.ny, ry);
    smooth_axis(&mut values, &mut scratch, grid.nx * grid.ny, grid.nz, rz);
    values
}

/// Sand indicator from thresholding `values` so that a fraction `sand_fraction`
/// of cells (rounded) is sand; ties at the threshold go to mud.
pub fn threshold(values: &[f64], sand_fraction: f64) -> Vec<bool> {
    let n = values.len();
    let n_sand = ((sand_fraction * n as f64).round() as usize).min(n);
    if n_sand == 0 {
        return vec![false; n];
    }
    if n_sand == n {
        return vec![true; n];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // Largest value that must stay mud.
    let cut = sorted[n_sand];
    values.iter().map(|&v| v > cut).collect()
}

fn check_params(grid: &Grid, corr_len: &CorrLen, sand_fraction: f64) -> Result<()> {
    if !grid.problems().is_empty() {
        return Err(Error::InvalidArgument("degenerate grid".into()));
    }
    if !(sand_fraction > 0.0 && sand_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("sand fraction must be in (0, 1), got {sand_fraction}")));
    }
    for v in [corr_len.x, corr_len.y, corr_len.z] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("correlation length must be positive, got {v}")));
        }
    }
    Ok(())
}

pub fn generate_facies(seed: u64, grid: &Grid, corr_len: &CorrLen, sand_fraction: f64) -> Result<RockField> {
    check_params(grid, corr_len, sand_fraction)?;
    let sand = threshold(&smoothed_noise(seed, grid, corr_len), sand_fraction);
    let (ks, km) = (sand_perm(), mud_perm());
    Ok(RockField {
        perm: sand.iter().map(|&s| if s { ks } else { km }).collect(),
        poro: sand.iter().map(|&s| if s { SAND_PORO } else { MUD_PORO }).collect(),
    })
}

/// Realizations for seeds `seed0 .. seed0 + count`, generated lazily.
pub fn generate_dataset(
    seed0: u64,
    count: usize,
    grid: Grid,
    corr_len: CorrLen,
    sand_fraction: f64,
) -> Result<impl Iterator<Item = (u64, RockField)>> {
    if count == 0 {
        return Err(Error::InvalidArgument("dataset count must be at least 1".into()));
    }
    check_params(&grid, &corr_len, sand_fraction)?;
    Ok((0..count as u64).map(move |m| {
        let seed = seed0.wrapping_add(m);
        let rock = generate_facies(seed, &grid, &corr_len, sand_fraction).expect("parameters checked above");
        (seed, rock)
    }))
}

/// Fraction of cells carrying sand permeability.
pub fn sand_fraction_of(rock: &RockField) -> f64 {
    let ks = sand_perm();
    rock.perm.iter().filter(|&&k| k == ks).count() as f64 / rock.perm.len() as f64
}
