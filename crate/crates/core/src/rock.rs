use crate::config::Violation;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Per-cell permeability (m2) and porosity, canonical `[k][j][i]` order.
#[derive(Clone, Debug, PartialEq)]
pub struct RockField {
    pub perm: Vec<f64>,
    pub poro: Vec<f64>,
}

impl RockField {
    pub fn new(grid: &Grid, perm: Vec<f64>, poro: Vec<f64>) -> Result<Self> {
        let rock = RockField { perm, poro };
        let problems = rock.problems(grid);
        match problems.first() {
            None => Ok(rock),
            Some(first) => Err(Error::Config(format!(
                "{first}{}",
                if problems.len() > 1 {
                    format!(" (and {} more)", problems.len() - 1)
                } else {
                    String::new()
                }
            ))),
        }
    }

    pub fn uniform(grid: &Grid, perm: f64, poro: f64) -> Result<Self> {
        let n = grid.cell_count();
        Self::new(grid, vec![perm; n], vec![poro; n])
    }

    pub(crate) fn problems(&self, grid: &Grid) -> Vec<Violation> {
        let n = grid.cell_count();
        let mut out = Vec::new();
        if self.perm.len() != n || self.poro.len() != n {
            out.push(Violation::new(
                "rock",
                format!(
                    "arrays hold {} perm / {} poro values, grid has {n} cells",
                    self.perm.len(),
                    self.poro.len()
                ),
            ));
            return out;
        }
        for idx in 0..n {
            let (k, phi) = (self.perm[idx], self.poro[idx]);
            if !(k > 0.0 && k.is_finite()) {
                out.push(Violation::new("rock.perm", format!("must be positive, got {k}")).at(grid.ijk(idx)));
            }
            if !(phi > 0.0 && phi < 1.0) {
                out.push(Violation::new("rock.poro", format!("must be in (0, 1), got {phi}")).at(grid.ijk(idx)));
            }
        }
        out
    }

    /// The field reflected across the x mid-plane.
    pub fn mirrored_x(&self, grid: &Grid) -> RockField {
        let n = grid.cell_count();
        RockField {
            perm: (0..n).map(|c| self.perm[grid.mirror_x(c)]).collect(),
            poro: (0..n).map(|c| self.poro[grid.mirror_x(c)]).collect(),
        }
    }
}
