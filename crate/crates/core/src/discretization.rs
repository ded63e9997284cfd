//! Discrete two-phase residual on a structured grid.
//!
//! For phase `l` and cell `(i, j, k)`, with `T_f = rho_l * K_f * kr_l(S_up) / mu_l / h^2`
//! the coefficient of face `f` (harmonic-mean permeability `K_f`, upstream
//! relative permeability), the residual is
//!
//! ```text
//! N = T_{i+1/2} (P_{i+1} - P_i) - T_{i-1/2} (P_i - P_{i-1})
//!   + T_{j+1/2} (P_{j+1} - P_j) - T_{j-1/2} (P_j - P_{j-1})
//!   + T_{k+1/2} (P_{k+1} - P_k) - T_{k-1/2} (P_k - P_{k-1})
//!   + q_l - phi C_l S_l^n rho_l (P^{n+1} - P^n) / dt - phi rho_l (S_l^{n+1} - S_l^n) / dt
//! ```
//!
//! Pressures and upstream saturations are taken at the new level `n + 1`.
//! `S_o = 1 - S_w`. Faces on the domain boundary carry no flow. `q_l` is the
//! well mass rate into the cell divided by the cell volume. The upstream cell
//! of a face is the one with the higher new pressure; on a tie it is the cell
//! with the lower linear index.
//!
//! The terms are summed left to right in the order written above, and every
//! face coefficient is evaluated as `((rho * K_f) * kr / mu) / h^2`, so a
//! straightforward transcription reproduces the result bit for bit.
//!
//! # Scaled residual
//!
//! Residuals have units kg/(m3 s). Convergence checks and [`physics_loss`] use
//! the dimensionless *scaled residual* `N * (dt / rho_l)`: the mass imbalance
//! of one step expressed as a volume fraction of the cell.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::fluid::Phase;
use crate::grid::{Axis, Grid};
use crate::relperm;
use crate::state::{FieldSeries, Snapshot};
use crate::wells;

/// Harmonic mean `2 ka kb / (ka + kb)`, zero when both arguments are zero.
pub fn harmonic_mean(ka: f64, kb: f64) -> Result<f64> {
    if !(ka >= 0.0 && kb >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "harmonic mean needs non-negative arguments, got {ka} and {kb}"
        )));
    }
    Ok(harmonic(ka, kb))
}

#[inline]
pub(crate) fn harmonic(ka: f64, kb: f64) -> f64 {
    let sum = ka + kb;
    if sum == 0.0 {
        0.0
    } else {
        2.0 * (ka * kb) / sum
    }
}

/// Per-cell residuals of one phase at one step, `[k][j][i]`, kg/(m3 s).
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualField {
    pub shape: [usize; 3],
    pub values: Vec<f64>,
}

impl ResidualField {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let [_, ny, nx] = self.shape;
        self.values[(k * ny + j) * nx + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The individual terms of one cell residual.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ResidualTerms {
    /// `T_{+1/2} (P_{+1} - P)` per axis.
    pub flux_plus: [f64; 3],
    /// `T_{-1/2} (P - P_{-1})` per axis; enters the residual with a minus sign.
    pub flux_minus: [f64; 3],
    /// Well source `q_l`.
    pub source: f64,
    /// `phi C_l S_l^n rho_l (P^{n+1} - P^n) / dt`; subtracted.
    pub compressibility: f64,
    /// `phi rho_l (S_l^{n+1} - S_l^n) / dt`; subtracted.
    pub accumulation: f64,
}

impl ResidualTerms {
    #[inline]
    pub fn total(&self) -> f64 {
        self.flux_plus[0] - self.flux_minus[0] + self.flux_plus[1] - self.flux_minus[1] + self.flux_plus[2]
            - self.flux_minus[2]
            + self.source
            - self.compressibility
            - self.accumulation
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Connection {
    pub well: usize,
    /// Peaceman connection factor, m3.
    pub wi: f64,
}

/// Precomputed geometry for evaluating residuals of one configuration.
pub struct Discretization<'a> {
    pub(crate) cfg: &'a SimConfig,
    /// Harmonic permeability of the +x, +y, +z face of each cell; 0 on the boundary.
    pub(crate) face_perm: Vec<[f64; 3]>,
    pub(crate) h2: [f64; 3],
    pub(crate) connections: Vec<Vec<Connection>>,
    pub(crate) volume: f64,
}

impl<'a> Discretization<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        let grid = &cfg.grid;
        let n = grid.cell_count();
        if cfg.rock.perm.len() != n || cfg.rock.poro.len() != n {
            return Err(Error::Shape(format!(
                "rock arrays hold {} / {} values, grid has {n} cells",
                cfg.rock.perm.len(),
                cfg.rock.poro.len()
            )));
        }
        let mut face_perm = vec![[0.0; 3]; n];
        for (c, faces) in face_perm.iter_mut().enumerate() {
            for axis in Axis::ALL {
                if let Some(nb) = grid.neighbor(c, axis, true) {
                    faces[axis.index()] = harmonic(cfg.rock.perm[c], cfg.rock.perm[nb]);
                }
            }
        }
        let h2 = [grid.dx * grid.dx, grid.dy * grid.dy, grid.dz * grid.dz];
        let r0 = wells::equivalent_radius(grid.dx, grid.dy)?;
        let mut connections = vec![Vec::new(); n];
        for (w, spec) in cfg.wells.iter().enumerate() {
            for &[i, j, k] in &spec.cells {
                let c = grid.checked_index(i, j, k)?;
                connections[c].push(Connection {
                    well: w,
                    wi: wells::well_index(cfg.rock.perm[c], grid.dz, r0, spec.rw),
                });
            }
        }
        Ok(Discretization {
            cfg,
            face_perm,
            h2,
            connections,
            volume: grid.cell_volume(),
        })
    }

    pub fn config(&self) -> &'a SimConfig {
        self.cfg
    }

    pub fn grid(&self) -> &Grid {
        &self.cfg.grid
    }

    /// Factor turning a residual of `phase` into the scaled residual.
    #[inline]
    pub fn residual_scale(&self, phase: Phase, dt: f64) -> f64 {
        dt / self.cfg.fluids.get(phase).rho
    }

    /// `rho * K_f / mu / h^2` without the relative permeability, for the face
    /// with harmonic permeability `kh` normal to `axis`.
    #[inline]
    pub(crate) fn coefficient(&self, phase: Phase, kh: f64, sw_up: f64, axis: usize) -> f64 {
        let f = self.cfg.fluids.get(phase);
        f.rho * kh * relperm::kr(phase, sw_up, &f.corey) / f.mu / self.h2[axis]
    }

    /// Face coefficient between cell `a` and its neighbour `b` along `axis`,
    /// with relative permeability evaluated at `sw_upwind`. A neighbour outside
    /// the grid is a no-flow boundary and gives 0.
    pub fn face_coefficient(
        &self,
        phase: Phase,
        a: [usize; 3],
        b: [i64; 3],
        sw_upwind: f64,
        axis: Axis,
    ) -> Result<f64> {
        let grid = self.grid();
        let ia = grid.checked_index(a[0], a[1], a[2])?;
        if !(0.0..=1.0).contains(&sw_upwind) {
            return Err(Error::InvalidArgument(format!("upwind saturation {sw_upwind} outside [0, 1]")));
        }
        let ax = axis.index();
        let adjacent = (0..3).all(|d| {
            let diff = b[d] - a[d] as i64;
            if d == ax {
                diff.abs() == 1
            } else {
                diff == 0
            }
        });
        if !adjacent {
            return Err(Error::InvalidArgument(format!(
                "cells {a:?} and {b:?} are not adjacent along {axis:?}"
            )));
        }
        let forward = b[ax] > a[ax] as i64;
        let Some(ib) = grid.neighbor(ia, axis, forward) else {
            return Ok(0.0);
        };
        let lo = ia.min(ib);
        Ok(self.coefficient(phase, self.face_perm[lo][ax], sw_upwind, ax))
    }

    /// Decomposed residual of `phase` at linear cell index `c`. No bounds or
    /// shape checks.
    #[inline]
    pub(crate) fn terms_at(&self, phase: Phase, c: usize, old: Snapshot<'_>, new: Snapshot<'_>, dt: f64) -> ResidualTerms {
        let grid = &self.cfg.grid;
        let p = new.pressure;
        let s = new.sat_w;
        let pc = p[c];
        let mut t = ResidualTerms::default();
        for axis in Axis::ALL {
            let ax = axis.index();
            if let Some(nb) = grid.neighbor(c, axis, true) {
                let up = if pc >= p[nb] { c } else { nb };
                t.flux_plus[ax] = self.coefficient(phase, self.face_perm[c][ax], s[up], ax) * (p[nb] - pc);
            }
            if let Some(nb) = grid.neighbor(c, axis, false) {
                let up = if p[nb] >= pc { nb } else { c };
                t.flux_minus[ax] = self.coefficient(phase, self.face_perm[nb][ax], s[up], ax) * (pc - p[nb]);
            }
        }
        let conns = &self.connections[c];
        if !conns.is_empty() {
            let mut rate = 0.0;
            for conn in conns {
                let spec = &self.cfg.wells[conn.well];
                rate += wells::connection_rate(spec.kind, phase, pc, s[c], conn.wi, spec.bhp, &self.cfg.fluids);
            }
            t.source = -rate / self.volume;
        }
        let f = self.cfg.fluids.get(phase);
        let phi = self.cfg.rock.poro[c];
        let s_old = phase.saturation(old.sat_w[c]);
        t.compressibility = phi * f.c * s_old * f.rho * (pc - old.pressure[c]) / dt;
        t.accumulation = phi * f.rho * (phase.saturation(s[c]) - s_old) / dt;
        t
    }

    fn check_inputs(&self, old: Snapshot<'_>, new: Snapshot<'_>, dt: f64) -> Result<()> {
        old.check_shape(self.grid(), "state at level n")?;
        new.check_shape(self.grid(), "state at level n+1")?;
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(())
    }

    /// The seven residual terms at `(i, j, k)`, for term-wise inspection.
    pub fn residual_terms(
        &self,
        phase: Phase,
        [i, j, k]: [usize; 3],
        old: Snapshot<'_>,
        new: Snapshot<'_>,
        dt: f64,
    ) -> Result<ResidualTerms> {
        let c = self.grid().checked_index(i, j, k)?;
        self.check_inputs(old, new, dt)?;
        Ok(self.terms_at(phase, c, old, new, dt))
    }

    pub fn residual_cell(
        &self,
        phase: Phase,
        cell: [usize; 3],
        old: Snapshot<'_>,
        new: Snapshot<'_>,
        dt: f64,
    ) -> Result<f64> {
        Ok(self.residual_terms(phase, cell, old, new, dt)?.total())
    }

    pub fn residual_field(&self, phase: Phase, old: Snapshot<'_>, new: Snapshot<'_>, dt: f64) -> Result<ResidualField> {
        self.check_inputs(old, new, dt)?;
        let n = self.grid().cell_count();
        let values = (0..n).map(|c| self.terms_at(phase, c, old, new, dt).total()).collect();
        Ok(ResidualField {
            shape: self.grid().shape(),
            values,
        })
    }

    /// Scaled residuals of both phases, interleaved `(water, oil)` per cell.
    pub(crate) fn scaled_residuals(&self, old: Snapshot<'_>, new: Snapshot<'_>, dt: f64, out: &mut [f64]) {
        let sw = self.residual_scale(Phase::Water, dt);
        let so = self.residual_scale(Phase::Oil, dt);
        for (c, pair) in out.chunks_exact_mut(2).enumerate() {
            pair[0] = self.terms_at(Phase::Water, c, old, new, dt).total() * sw;
            pair[1] = self.terms_at(Phase::Oil, c, old, new, dt).total() * so;
        }
    }
}

/// Residual of `phase` at `cell` for the transition `old -> new` over `dt`.
pub fn residual_cell(
    phase: Phase,
    cell: [usize; 3],
    old: Snapshot<'_>,
    new: Snapshot<'_>,
    dt: f64,
    cfg: &SimConfig,
) -> Result<f64> {
    Discretization::new(cfg)?.residual_cell(phase, cell, old, new, dt)
}

pub fn residual_field(phase: Phase, old: Snapshot<'_>, new: Snapshot<'_>, dt: f64, cfg: &SimConfig) -> Result<ResidualField> {
    Discretization::new(cfg)?.residual_field(phase, old, new, dt)
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        values.iter().fold(0.0, |a, v| a + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Residual statistics of one transition `m -> m + 1`, in scaled units.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepResidual {
    pub step: usize,
    pub water_max_abs: f64,
    pub oil_max_abs: f64,
    pub water_rms: f64,
    pub oil_rms: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    pub physics_loss: f64,
    pub steps: Vec<StepResidual>,
}

/// Per-step residual fields of a whole series, `[step][phase]`, kg/(m3 s).
pub fn residual_history(series: &FieldSeries, cfg: &SimConfig) -> Result<Vec<[ResidualField; 2]>> {
    check_series(series, cfg)?;
    let disc = Discretization::new(cfg)?;
    (0..series.n_slices() - 1)
        .map(|m| {
            let dt = series.times[m + 1] - series.times[m];
            let (old, new) = (series.slice(m), series.slice(m + 1));
            Ok([
                disc.residual_field(Phase::Water, old, new, dt)?,
                disc.residual_field(Phase::Oil, old, new, dt)?,
            ])
        })
        .collect()
}

fn check_series(series: &FieldSeries, cfg: &SimConfig) -> Result<()> {
    series.validate()?;
    series.matches_grid(&cfg.grid)?;
    if series.n_slices() < 2 {
        return Err(Error::InvalidArgument(format!(
            "physics loss needs at least 2 time slices, got {}",
            series.n_slices()
        )));
    }
    Ok(())
}

/// Physics loss with per-step statistics.
pub fn residual_report(series: &FieldSeries, cfg: &SimConfig) -> Result<ResidualReport> {
    check_series(series, cfg)?;
    let disc = Discretization::new(cfg)?;
    let n = cfg.grid.cell_count();
    let mut squares = Vec::with_capacity(2 * n * (series.n_slices() - 1));
    let mut steps = Vec::new();
    for m in 0..series.n_slices() - 1 {
        let dt = series.times[m + 1] - series.times[m];
        let (old, new) = (series.slice(m), series.slice(m + 1));
        let mut stats = [(0.0f64, 0.0f64); 2];
        for (p, phase) in Phase::BOTH.into_iter().enumerate() {
            let scale = disc.residual_scale(phase, dt);
            let start = squares.len();
            for c in 0..n {
                let r = disc.terms_at(phase, c, old, new, dt).total() * scale;
                stats[p].0 = stats[p].0.max(r.abs());
                squares.push(r * r);
            }
            stats[p].1 = (pairwise_sum(&squares[start..]) / n as f64).sqrt();
        }
        steps.push(StepResidual {
            step: m + 1,
            water_max_abs: stats[0].0,
            oil_max_abs: stats[1].0,
            water_rms: stats[0].1,
            oil_rms: stats[1].1,
        });
    }
    let physics_loss = pairwise_sum(&squares) / squares.len() as f64;
    Ok(ResidualReport { physics_loss, steps })
}

/// Mean over both phases, all transitions and all cells of the squared
/// scaled residual.
pub fn physics_loss(series: &FieldSeries, cfg: &SimConfig) -> Result<f64> {
    Ok(residual_report(series, cfg)?.physics_loss)
}
