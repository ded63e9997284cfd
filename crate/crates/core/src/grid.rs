use serde::{Deserialize, Serialize};

use crate::config::Violation;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Structured block grid. Cells are addressed either by `(i, j, k)` or by the
/// linear index `(k * ny + j) * nx + i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cell edge lengths in metres.
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize, dx: f64, dy: f64, dz: f64) -> Result<Self> {
        let grid = Grid { nx, ny, nz, dx, dy, dz };
        let problems = grid.problems();
        if problems.is_empty() {
            Ok(grid)
        } else {
            let msgs: Vec<String> = problems.iter().map(|v| v.to_string()).collect();
            Err(Error::Config(msgs.join("; ")))
        }
    }

    pub(crate) fn problems(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, n) in [("grid.nx", self.nx), ("grid.ny", self.ny), ("grid.nz", self.nz)] {
            if n == 0 {
                out.push(Violation::new(name, "must be at least 1"));
            }
        }
        for (name, d) in [("grid.dx", self.dx), ("grid.dy", self.dy), ("grid.dz", self.dz)] {
            if !(d > 0.0 && d.is_finite()) {
                out.push(Violation::new(name, format!("must be positive, got {d}")));
            }
        }
        let fits = self
            .nx
            .checked_mul(self.ny)
            .and_then(|n| n.checked_mul(self.nz))
            .and_then(|n| n.checked_mul(std::mem::size_of::<f64>()))
            .is_some_and(|bytes| bytes <= isize::MAX as usize);
        if !fits {
            out.push(Violation::new("grid", "cell count overflows field storage"));
        }
        out
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Shape in canonical storage order `(nz, ny, nx)`.
    pub fn shape(&self) -> [usize; 3] {
        [self.nz, self.ny, self.nx]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        [i, j, k]
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        i < self.nx && j < self.ny && k < self.nz
    }

    pub fn checked_index(&self, i: usize, j: usize, k: usize) -> Result<usize> {
        if self.contains(i, j, k) {
            Ok(self.index(i, j, k))
        } else {
            Err(Error::OutOfRange(format!(
                "cell ({i}, {j}, {k}) outside grid {}x{}x{}",
                self.nx, self.ny, self.nz
            )))
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dx,
            Axis::Y => self.dy,
            Axis::Z => self.dz,
        }
    }

    fn extent(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
            Axis::Z => self.nz,
        }
    }

    fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => 1,
            Axis::Y => self.nx,
            Axis::Z => self.nx * self.ny,
        }
    }

    /// Linear index of the neighbour of `idx` one cell along `axis`, in the
    /// positive direction when `forward` is set. `None` on the domain boundary.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: Axis, forward: bool) -> Option<usize> {
        let pos = self.ijk(idx)[axis.index()];
        if forward {
            (pos + 1 < self.extent(axis)).then(|| idx + self.stride(axis))
        } else {
            (pos > 0).then(|| idx - self.stride(axis))
        }
    }

    /// Cell index mirrored across the x mid-plane.
    pub fn mirror_x(&self, idx: usize) -> usize {
        let [i, j, k] = self.ijk(idx);
        self.index(self.nx - 1 - i, j, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(3, 4, 5, 1.0, 1.0, 1.0).unwrap();
        for idx in 0..g.cell_count() {
            let [i, j, k] = g.ijk(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 12);
    }

    #[test]
    fn neighbors_respect_boundaries() {
        let g = Grid::new(2, 2, 2, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(g.neighbor(0, Axis::X, false), None);
        assert_eq!(g.neighbor(0, Axis::X, true), Some(1));
        assert_eq!(g.neighbor(1, Axis::X, true), None);
        assert_eq!(g.neighbor(0, Axis::Z, true), Some(4));
        assert_eq!(g.neighbor(4, Axis::Z, false), Some(0));
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(Grid::new(0, 1, 1, 1.0, 1.0, 1.0).is_err());
        assert!(Grid::new(1, 1, 1, 0.0, 1.0, 1.0).is_err());
        assert!(Grid::new(1, 1, 1, 1.0, -2.0, 1.0).is_err());
        assert!(Grid::new(usize::MAX, 2, 1, 1.0, 1.0, 1.0).is_err());
    }
}
