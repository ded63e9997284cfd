//! Newton Jacobian of the scaled residual with respect to `(P / P_REF, S_w)`
//! per cell, cell-major with the two unknowns interleaved. Row pair `c` holds
//! the water and oil equations of cell `c`.

use super::linear::BlockMatrix;
use crate::discretization::Discretization;
use crate::fluid::Phase;
use crate::grid::Axis;
use crate::relperm;
use crate::state::Snapshot;
use crate::wells::{self, WellKind};

/// Pressure unit of the Newton unknowns, Pa. Keeps the pressure and
/// saturation columns of comparable size.
pub(crate) const P_REF: f64 = 1e5;

pub(crate) fn assemble_analytic(d: &Discretization<'_>, old: Snapshot<'_>, new: Snapshot<'_>, dt: f64, jac: &mut BlockMatrix) {
    jac.clear();
    let grid = d.grid();
    let cfg = d.config();
    let p = new.pressure;
    let s = new.sat_w;
    for c in 0..grid.cell_count() {
        let dpos = jac.diag[c];
        for (row, phase) in Phase::BOTH.into_iter().enumerate() {
            let f = cfg.fluids.get(phase);
            let scale = d.residual_scale(phase, dt);
            let mut dp_c = 0.0;
            let mut ds_c = 0.0;
            for axis in Axis::ALL {
                let ax = axis.index();
                for forward in [false, true] {
                    let Some(nb) = grid.neighbor(c, axis, forward) else {
                        continue;
                    };
                    let (lo, hi) = if forward { (c, nb) } else { (nb, c) };
                    let up = if p[lo] >= p[hi] { lo } else { hi };
                    let kh = d.face_perm[lo][ax];
                    let t = d.coefficient(phase, kh, s[up], ax);
                    let dt_ds = f.rho * kh * relperm::dkr(phase, s[up], &f.corey) / f.mu / d.h2[ax];
                    let dp = p[nb] - p[c];
                    dp_c -= t;
                    let npos = jac.position(c, nb);
                    jac.vals[npos][2 * row] += scale * t * P_REF;
                    if up == c {
                        ds_c += dt_ds * dp;
                    } else {
                        jac.vals[npos][2 * row + 1] += scale * dt_ds * dp;
                    }
                }
            }
            for conn in &d.connections[c] {
                let spec = &cfg.wells[conn.well];
                let kr = wells::connection_kr(spec.kind, phase, s[c], &cfg.fluids);
                dp_c -= conn.wi * (kr * f.rho / f.mu) / d.volume;
                if spec.kind == WellKind::Producer {
                    let dkr = relperm::dkr(phase, s[c], &f.corey);
                    ds_c -= conn.wi * (dkr * f.rho / f.mu) * (p[c] - spec.bhp) / d.volume;
                }
            }
            let phi = cfg.rock.poro[c];
            dp_c -= phi * f.c * phase.saturation(old.sat_w[c]) * f.rho / dt;
            ds_c += match phase {
                Phase::Water => -phi * f.rho / dt,
                Phase::Oil => phi * f.rho / dt,
            };
            jac.vals[dpos][2 * row] += scale * dp_c * P_REF;
            jac.vals[dpos][2 * row + 1] += scale * ds_c;
        }
    }
}

/// Forward-difference Jacobian, for verification.
pub(crate) fn assemble_finite_difference(
    d: &Discretization<'_>,
    old: Snapshot<'_>,
    new: Snapshot<'_>,
    dt: f64,
    jac: &mut BlockMatrix,
) {
    jac.clear();
    let grid = d.grid();
    let mut p = new.pressure.to_vec();
    let mut s = new.sat_w.to_vec();
    let scales = [d.residual_scale(Phase::Water, dt), d.residual_scale(Phase::Oil, dt)];
    let eval = |p: &[f64], s: &[f64], c: usize| -> [f64; 2] {
        let snap = Snapshot { pressure: p, sat_w: s };
        [
            d.terms_at(Phase::Water, c, old, snap, dt).total() * scales[0],
            d.terms_at(Phase::Oil, c, old, snap, dt).total() * scales[1],
        ]
    };
    for c in 0..grid.cell_count() {
        let mut affected = vec![c];
        for axis in Axis::ALL {
            for forward in [false, true] {
                if let Some(nb) = grid.neighbor(c, axis, forward) {
                    affected.push(nb);
                }
            }
        }
        let base: Vec<[f64; 2]> = affected.iter().map(|&r| eval(&p, &s, r)).collect();
        for var in 0..2 {
            let (h, unit) = if var == 0 {
                (1e-7 * p[c].abs().max(P_REF), P_REF)
            } else {
                (if s[c] + 1e-7 <= 1.0 { 1e-7 } else { -1e-7 }, 1.0)
            };
            if var == 0 {
                p[c] += h;
            } else {
                s[c] += h;
            }
            for (&r, b) in affected.iter().zip(&base) {
                let pert = eval(&p, &s, r);
                let pos = jac.position(r, c);
                for row in 0..2 {
                    jac.vals[pos][2 * row + var] = (pert[row] - b[row]) / h * unit;
                }
            }
            if var == 0 {
                p[c] = new.pressure[c];
            } else {
                s[c] = new.sat_w[c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::grid::Grid;
    use crate::rock::RockField;
    use crate::state::State;
    use crate::wells::WellSpec;

    #[test]
    fn analytic_matches_finite_differences() {
        let grid = Grid::new(4, 3, 3, 20.0, 20.0, 2.0).unwrap();
        let n = grid.cell_count();
        let perm: Vec<f64> = (0..n).map(|c| if (c * 5) % 3 == 0 { 2e-12 } else { 2e-14 }).collect();
        let poro: Vec<f64> = (0..n).map(|c| if (c * 5) % 3 == 0 { 0.25 } else { 0.1 }).collect();
        let rock = RockField::new(&grid, perm, poro).unwrap();
        let mut cfg = SimConfig::with_defaults(grid, rock);
        cfg.wells = vec![
            WellSpec::column("P", WellKind::Producer, 0, 0, &grid, 3.1e7, 0.1),
            WellSpec::column("I", WellKind::WaterInjector, 3, 2, &grid, 3.6e7, 0.1),
        ];
        let d = Discretization::new(&cfg).unwrap();
        // Distinct pressures (no upwind ties) and interior saturations.
        let old = State {
            pressure: (0..n).map(|c| 3.4e7 + 1.3e4 * c as f64).collect(),
            sat_w: (0..n).map(|c| 0.15 + 0.6 * ((c * 7) % 13) as f64 / 13.0).collect(),
        };
        let new = State {
            pressure: (0..n).map(|c| 3.3e7 + 2.9e4 * ((c * 11) % 17) as f64 + 17.0 * c as f64).collect(),
            sat_w: (0..n).map(|c| 0.2 + 0.5 * ((c * 5) % 11) as f64 / 11.0).collect(),
        };
        let mut a = BlockMatrix::stencil(&grid);
        let mut b = BlockMatrix::stencil(&grid);
        assemble_analytic(&d, old.view(), new.view(), cfg.dt, &mut a);
        assemble_finite_difference(&d, old.view(), new.view(), cfg.dt, &mut b);
        let max = a.vals.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.vals.iter().flatten().zip(b.vals.iter().flatten()) {
            assert!(
                (x - y).abs() <= 1e-5 * x.abs().max(1e-6 * max),
                "analytic {x} vs finite difference {y}"
            );
        }
    }
}
