//! Peaceman well model.
//!
//! A well perforating cell `c` exchanges mass with it at
//!
//! ```text
//! rate = 2 pi K dz / ln(r0 / rw) * (kr rho / mu) * (P - bhp),   r0 = 0.14 sqrt(dx^2 + dy^2)
//! ```
//!
//! with positive rates leaving the reservoir. Column wells sum the
//! single-cell formula over their perforations with one shared `bhp`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, Violation};
use crate::error::{Error, Result};
use crate::fluid::{Fluids, Phase};
use crate::grid::Grid;
use crate::relperm;
use crate::state::FieldSeries;
use crate::units;

/// Producer bottom-hole pressure used by the default layout, bar.
pub const DEFAULT_PRODUCER_BHP_BAR: f64 = 310.0;
/// Injector bottom-hole pressure used by the default layout, bar.
pub const DEFAULT_INJECTOR_BHP_BAR: f64 = 330.0;
/// Wellbore radius, m.
pub const DEFAULT_RW: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellKind {
    Producer,
    WaterInjector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellSpec {
    pub name: String,
    pub kind: WellKind,
    /// Perforated cells as `(i, j, k)`.
    pub cells: Vec<[usize; 3]>,
    /// Bottom-hole pressure, Pa.
    pub bhp: f64,
    /// Wellbore radius, m.
    pub rw: f64,
}

impl WellSpec {
    /// A vertical well perforating every layer of column `(i, j)`.
    pub fn column(name: &str, kind: WellKind, i: usize, j: usize, grid: &Grid, bhp: f64, rw: f64) -> Self {
        WellSpec {
            name: name.to_string(),
            kind,
            cells: (0..grid.nz).map(|k| [i, j, k]).collect(),
            bhp,
            rw,
        }
    }

    pub(crate) fn problems(&self, grid: &Grid) -> Vec<Violation> {
        let mut out = Vec::new();
        let tag = format!("wells[{}]", self.name);
        if self.cells.is_empty() {
            out.push(Violation::new(format!("{tag}.cells"), "must not be empty"));
        }
        for c in &self.cells {
            if !grid.contains(c[0], c[1], c[2]) {
                out.push(Violation::new(format!("{tag}.cells"), format!("entry {c:?} lies outside the grid")));
            }
        }
        if !(self.bhp > 0.0 && self.bhp.is_finite()) {
            out.push(Violation::new(format!("{tag}.bhp"), format!("must be positive, got {}", self.bhp)));
        }
        match equivalent_radius(grid.dx, grid.dy) {
            Ok(r0) if !(self.rw > 0.0 && self.rw < r0) => {
                out.push(Violation::new(format!("{tag}.rw"), format!("must be in (0, r0 = {r0}), got {}", self.rw)));
            }
            _ => {}
        }
        out
    }

    pub fn perforates(&self, cell: [usize; 3]) -> bool {
        self.cells.contains(&cell)
    }
}

/// Four corner producers and one central water injector, all perforating
/// every layer.
pub fn default_layout(grid: &Grid) -> Vec<WellSpec> {
    let p_bhp = units::bar_to_pa(DEFAULT_PRODUCER_BHP_BAR);
    let i_bhp = units::bar_to_pa(DEFAULT_INJECTOR_BHP_BAR);
    let (xe, ye) = (grid.nx - 1, grid.ny - 1);
    vec![
        WellSpec::column("P1", WellKind::Producer, 0, 0, grid, p_bhp, DEFAULT_RW),
        WellSpec::column("P2", WellKind::Producer, xe, 0, grid, p_bhp, DEFAULT_RW),
        WellSpec::column("P3", WellKind::Producer, 0, ye, grid, p_bhp, DEFAULT_RW),
        WellSpec::column("P4", WellKind::Producer, xe, ye, grid, p_bhp, DEFAULT_RW),
        WellSpec::column("I1", WellKind::WaterInjector, grid.nx / 2, grid.ny / 2, grid, i_bhp, DEFAULT_RW),
    ]
}

/// Peaceman equivalent radius `0.14 sqrt(dx^2 + dy^2)`.
pub fn equivalent_radius(dx: f64, dy: f64) -> Result<f64> {
    if !(dx > 0.0 && dy > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cell spacings must be positive, got dx={dx}, dy={dy}"
        )));
    }
    Ok(0.14 * (dx * dx + dy * dy).sqrt())
}

/// Connection factor `2 pi K dz / ln(r0 / rw)`, m3.
#[inline]
pub fn well_index(perm: f64, dz: f64, r0: f64, rw: f64) -> f64 {
    2.0 * PI * perm * dz / (r0 / rw).ln()
}

/// Relative permeability seen by a well connection.
#[inline]
pub(crate) fn connection_kr(kind: WellKind, phase: Phase, sw: f64, fluids: &Fluids) -> f64 {
    match (kind, phase) {
        (WellKind::Producer, _) => relperm::kr(phase, sw, &fluids.get(phase).corey),
        (WellKind::WaterInjector, Phase::Water) => {
            let c = &fluids.water.corey;
            relperm::krw_unchecked(1.0 - c.s_c, c)
        }
        (WellKind::WaterInjector, Phase::Oil) => 0.0,
    }
}

/// Mass rate of one connection, positive out of the reservoir.
#[inline]
pub(crate) fn connection_rate(
    kind: WellKind,
    phase: Phase,
    p: f64,
    sw: f64,
    wi: f64,
    bhp: f64,
    fluids: &Fluids,
) -> f64 {
    let f = fluids.get(phase);
    let kr = connection_kr(kind, phase, sw, fluids);
    wi * (kr * f.rho / f.mu) * (p - bhp)
}

/// Reservoir state seen by one perforation.
#[derive(Clone, Copy, Debug)]
pub struct CellState {
    pub cell: [usize; 3],
    /// Pa.
    pub p: f64,
    pub sw: f64,
    /// m2.
    pub perm: f64,
}

/// Mass rate (kg/s, positive = production) of `phase` through the
/// perforation of `spec` at `state.cell`.
pub fn well_rate(phase: Phase, state: &CellState, spec: &WellSpec, grid: &Grid, fluids: &Fluids) -> Result<f64> {
    if !spec.perforates(state.cell) {
        return Err(Error::InvalidArgument(format!(
            "well {} does not perforate cell {:?}",
            spec.name, state.cell
        )));
    }
    if !(0.0..=1.0).contains(&state.sw) {
        return Err(Error::InvalidArgument(format!("water saturation {} outside [0, 1]", state.sw)));
    }
    let r0 = equivalent_radius(grid.dx, grid.dy)?;
    let wi = well_index(state.perm, grid.dz, r0, spec.rw);
    Ok(connection_rate(spec.kind, phase, state.p, state.sw, wi, spec.bhp, fluids))
}

/// Rate and cumulative history of one well and phase.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductionCurve {
    pub well: String,
    pub phase: Phase,
    /// kg/s at every slice of the series.
    pub rates: Vec<f64>,
    /// kg produced since slice 0.
    pub cumulative: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductionTable {
    /// Seconds.
    pub times: Vec<f64>,
    pub curves: Vec<ProductionCurve>,
}

impl ProductionTable {
    pub fn curve(&self, well: &str, phase: Phase) -> Option<&ProductionCurve> {
        self.curves.iter().find(|c| c.well == well && c.phase == phase)
    }

    /// Net mass (kg) leaving through all wells between slice 0 and `m`.
    pub fn net_cumulative(&self, phase: Phase, m: usize) -> f64 {
        self.curves
            .iter()
            .filter(|c| c.phase == phase)
            .map(|c| c.cumulative[m])
            .sum()
    }
}

/// Per-well, per-phase rates at every slice plus cumulatives.
///
/// Cumulatives integrate with the right endpoint of each interval, the same
/// quadrature the implicit time stepper applies, so they balance the change
/// in fluid in place.
pub fn production_series(series: &FieldSeries, cfg: &SimConfig) -> Result<ProductionTable> {
    series.validate()?;
    series.matches_grid(&cfg.grid)?;
    let grid = &cfg.grid;
    let r0 = equivalent_radius(grid.dx, grid.dy)?;
    let mut curves = Vec::with_capacity(cfg.wells.len() * 2);
    for spec in &cfg.wells {
        for phase in Phase::BOTH {
            let mut rates = Vec::with_capacity(series.n_slices());
            for m in 0..series.n_slices() {
                let snap = series.slice(m);
                let mut rate = 0.0;
                for &[i, j, k] in &spec.cells {
                    let c = grid.checked_index(i, j, k)?;
                    let wi = well_index(cfg.rock.perm[c], grid.dz, r0, spec.rw);
                    rate += connection_rate(spec.kind, phase, snap.pressure[c], snap.sat_w[c], wi, spec.bhp, &cfg.fluids);
                }
                rates.push(rate);
            }
            let mut cumulative = Vec::with_capacity(rates.len());
            let mut total = 0.0;
            cumulative.push(total);
            for m in 1..rates.len() {
                total += rates[m] * (series.times[m] - series.times[m - 1]);
                cumulative.push(total);
            }
            curves.push(ProductionCurve {
                well: spec.name.clone(),
                phase,
                rates,
                cumulative,
            });
        }
    }
    Ok(ProductionTable {
        times: series.times.clone(),
        curves,
    })
}

/// One line of the production CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductionRow {
    pub well: String,
    pub phase: Phase,
    pub step: usize,
    pub time_days: f64,
    pub rate_kg_per_s: f64,
    pub cumulative_kg: f64,
}

impl ProductionTable {
    pub fn rows(&self) -> Vec<ProductionRow> {
        let mut rows = Vec::new();
        for c in &self.curves {
            for (m, (&rate, &cum)) in c.rates.iter().zip(&c.cumulative).enumerate() {
                rows.push(ProductionRow {
                    well: c.well.clone(),
                    phase: c.phase,
                    step: m,
                    time_days: units::s_to_days(self.times[m]),
                    rate_kg_per_s: rate,
                    cumulative_kg: cum,
                });
            }
        }
        rows
    }
}

/// Header: `well,phase,step,time_days,rate_kg_per_s,cumulative_kg`.
pub fn write_production_csv<W: Write>(rows: &[ProductionRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record(["well", "phase", "step", "time_days", "rate_kg_per_s", "cumulative_kg"])
            .map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_production_csv(path: &Path) -> Result<Vec<ProductionRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let expected = ["well", "phase", "step", "time_days", "rate_kg_per_s", "cumulative_kg"];
    let headers = r.headers().map_err(|e| Error::format(path, e.to_string()))?;
    if headers.iter().ne(expected) {
        return Err(Error::format(path, format!("unexpected header {headers:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(3, 3, 2, 20.0, 20.0, 2.0).unwrap()
    }

    fn producer() -> WellSpec {
        WellSpec::column("P", WellKind::Producer, 1, 1, &grid(), units::bar_to_pa(310.0), 0.1)
    }

    #[test]
    fn equivalent_radius_examples() {
        let r = equivalent_radius(20.0, 20.0).unwrap();
        assert!((r - 3.959797974644666).abs() <= 1e-12 * r);
        let r1 = equivalent_radius(1.0, 1.0).unwrap();
        assert!((r1 - 0.19798989873223333).abs() <= 1e-12);
        let scaled = equivalent_radius(7.0 * 3.0, 7.0 * 5.0).unwrap();
        assert!((scaled - 7.0 * equivalent_radius(3.0, 5.0).unwrap()).abs() <= 1e-12 * scaled);
        assert!(equivalent_radius(0.0, 1.0).is_err());
        assert!(equivalent_radius(1.0, -1.0).is_err());
    }

    #[test]
    fn zero_drawdown_gives_zero_rate() {
        let spec = producer();
        let st = CellState { cell: [1, 1, 0], p: spec.bhp, sw: 0.5, perm: 1e-12 };
        for phase in Phase::BOTH {
            assert_eq!(well_rate(phase, &st, &spec, &grid(), &Fluids::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_evaluated_water_rate() {
        // 2 pi * 1.9738466e-12 * 2 / ln(3.9598/0.1) * (0.8 * 1838 / 3.1e-4) * 1e6
        let spec = producer();
        let perm = units::md_to_m2(2000.0).unwrap();
        let st = CellState { cell: [1, 1, 0], p: spec.bhp + units::bar_to_pa(10.0), sw: 0.9, perm };
        let rate = well_rate(Phase::Water, &st, &spec, &grid(), &Fluids::default()).unwrap();
        let wi = 2.0 * PI * perm * 2.0 / (3.959797974644666f64 / 0.1).ln();
        let expected = wi * (0.8 * 1838.0 / 3.1e-4) * 1e6;
        assert!((rate - expected).abs() <= 1e-12 * expected);
        assert!((rate - 32.0).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn rate_linear_in_drawdown() {
        let spec = producer();
        let f = Fluids::default();
        let at = |dp: f64| {
            let st = CellState { cell: [1, 1, 1], p: spec.bhp + dp, sw: 0.4, perm: 1e-12 };
            well_rate(Phase::Oil, &st, &spec, &grid(), &f).unwrap()
        };
        let (r1, r2) = (at(1e5), at(2e5));
        assert!((r2 - 2.0 * r1).abs() <= 1e-12 * r2);
    }

    #[test]
    fn producer_rate_increases_with_pressure() {
        let spec = producer();
        let f = Fluids::default();
        let mut last = f64::NEG_INFINITY;
        for m in 0..50 {
            let st = CellState { cell: [1, 1, 0], p: 2.5e7 + 2e5 * m as f64, sw: 0.3, perm: 1e-13 };
            let r = well_rate(Phase::Oil, &st, &spec, &grid(), &f).unwrap();
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn connate_water_producer_makes_only_oil() {
        let spec = producer();
        let f = Fluids::default();
        let st = CellState { cell: [1, 1, 0], p: spec.bhp + 1e6, sw: 0.1, perm: 1e-12 };
        assert_eq!(well_rate(Phase::Water, &st, &spec, &grid(), &f).unwrap(), 0.0);
        assert!(well_rate(Phase::Oil, &st, &spec, &grid(), &f).unwrap() > 0.0);
    }

    #[test]
    fn injector_uses_endpoint_mobility_and_injects_water_only() {
        let g = grid();
        let spec = WellSpec::column("I", WellKind::WaterInjector, 0, 0, &g, units::bar_to_pa(400.0), 0.1);
        let f = Fluids::default();
        let lo = CellState { cell: [0, 0, 0], p: units::bar_to_pa(350.0), sw: 0.1, perm: 1e-12 };
        let hi = CellState { sw: 0.7, ..lo };
        let w_lo = well_rate(Phase::Water, &lo, &spec, &g, &f).unwrap();
        assert!(w_lo < 0.0);
        assert_eq!(w_lo, well_rate(Phase::Water, &hi, &spec, &g, &f).unwrap());
        assert_eq!(well_rate(Phase::Oil, &lo, &spec, &g, &f).unwrap(), 0.0);
    }

    #[test]
    fn unperforated_cell_rejected() {
        let st = CellState { cell: [0, 0, 0], p: 3e7, sw: 0.5, perm: 1e-12 };
        assert!(well_rate(Phase::Oil, &st, &producer(), &grid(), &Fluids::default()).is_err());
    }

    #[test]
    fn spec_validation() {
        let g = grid();
        let mut w = producer();
        assert!(w.problems(&g).is_empty());
        w.rw = 10.0;
        assert_eq!(w.problems(&g).len(), 1);
        w.cells.push([5, 0, 0]);
        w.bhp = 0.0;
        assert_eq!(w.problems(&g).len(), 3);
        w.cells.clear();
        assert!(w.problems(&g).iter().any(|p| p.message.contains("empty")));
    }

    #[test]
    fn csv_roundtrip_keeps_header() {
        let rows = vec![ProductionRow {
            well: "P1".into(),
            phase: Phase::Oil,
            step: 3,
            time_days: 150.0,
            rate_kg_per_s: 1.25,
            cumulative_kg: 1e7,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prod.csv");
        write_production_csv(&rows, std::fs::File::create(&path).unwrap()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("well,phase,step,time_days,rate_kg_per_s,cumulative_kg\n"));
        assert_eq!(read_production_csv(&path).unwrap(), rows);
    }
}
