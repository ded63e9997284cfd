mod common;

use common::*;
use darcyflow::config::{JacobianMode, LinearSolverKind};
use darcyflow::simulator::Stepper;
use darcyflow::{physics_loss, simulate, step, Error, Grid, SimConfig, State};

fn reference() -> SimConfig {
    let grid = Grid::new(10, 10, 4, 20.0, 20.0, 2.0).unwrap();
    let mut cfg = small_config(10, 10, 4, 11, two_wells(&grid, 310.0, 330.0));
    cfg.n_steps = 4;
    cfg
}

#[test]
fn runs_are_bit_deterministic() {
    let cfg = reference();
    let (a, ra) = simulate(&cfg).unwrap();
    let (b, rb) = simulate(&cfg).unwrap();
    assert_eq!(ra, rb);
    assert!(a.pressure.iter().zip(&b.pressure).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a.sat_w.iter().zip(&b.sat_w).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn saturations_stay_in_mobile_range() {
    let mut cfg = reference();
    cfg.wells = darcyflow::wells::default_layout(&cfg.grid);
    let (series, _) = simulate(&cfg).unwrap();
    let (lo, hi) = (cfg.fluids.water.corey.s_c, 1.0 - cfg.fluids.oil.corey.s_c);
    let slack = 1e-6;
    for &s in &series.sat_w {
        assert!((0.0..=1.0).contains(&s));
        assert!(s >= lo - slack && s <= hi + slack, "saturation {s}");
    }
}

#[test]
fn equilibrium_needs_one_evaluation() {
    let grid = Grid::new(4, 3, 2, 20.0, 20.0, 2.0).unwrap();
    let mut cfg = SimConfig::with_defaults(grid, uniform_rock(&grid, 100.0, 0.2));
    cfg.wells.clear();
    let s = State::uniform(&grid, cfg.p_init, cfg.sw_init);
    let (next, report) = step(&s, cfg.dt, &cfg).unwrap();
    assert_eq!(next, s);
    assert_eq!(report.newton_iters, 1);
    assert!(report.converged);
    assert_eq!(report.final_residual_inf_norm, 0.0);
}

fn worst_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(1.0)).fold(0.0, f64::max)
}

#[test]
fn linear_solvers_agree() {
    let base = reference();
    let (direct, _) = simulate(&SimConfig { linear_solver: LinearSolverKind::Direct, ..base.clone() }).unwrap();
    let (iterative, _) = simulate(&SimConfig { linear_solver: LinearSolverKind::Iterative, ..base.clone() }).unwrap();
    assert!(worst_gap(&direct.pressure, &iterative.pressure) <= 1e-7);
    assert!(worst_gap(&direct.sat_w, &iterative.sat_w) <= 1e-5);
}

#[test]
fn finite_difference_jacobian_reaches_the_same_step() {
    let base = SimConfig { dt: DAY, n_steps: 2, ..reference() };
    let (analytic, ra) = simulate(&base).unwrap();
    let (fd, rf) = simulate(&SimConfig { jacobian: JacobianMode::FiniteDifference, ..base.clone() }).unwrap();
    assert!(ra.iter().chain(&rf).all(|r| r.dt_used == base.dt), "no step may be subdivided");
    let (gp, gs) = (worst_gap(&analytic.pressure, &fd.pressure), worst_gap(&analytic.sat_w, &fd.sat_w));
    assert!(gp <= 1e-6 && gs <= 1e-4, "gap P {gp:e} S {gs:e}");
    assert!(physics_loss(&fd, &base).unwrap() <= 1e-12);
}

#[test]
fn hard_step_is_subdivided() {
    let mut cfg = reference();
    cfg.newton_max_iter = 8;
    let s = State::uniform(&cfg.grid, cfg.p_init, cfg.sw_init);
    let mut stepper = Stepper::new(&cfg).unwrap();
    let (_, report) = stepper.advance(&s, cfg.dt).unwrap();
    assert!(report.converged);
    assert!(report.dt_used < cfg.dt, "dt_used {}", report.dt_used);
}

#[test]
fn hopeless_step_reports_non_convergence() {
    let mut cfg = reference();
    cfg.newton_max_iter = 1;
    match simulate(&cfg) {
        Err(Error::NonConvergence { step, report }) => {
            assert_eq!(step, 1);
            assert!(!report.converged);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn water_balance_closes_per_step_when_incompressible() {
    let mut cfg = reference();
    cfg.fluids.water.c = 0.0;
    cfg.fluids.oil.c = 0.0;
    let (series, _) = simulate(&cfg).unwrap();
    let table = darcyflow::wells::production_series(&series, &cfg).unwrap();
    let v = cfg.grid.cell_volume();
    let rho = cfg.fluids.water.rho;
    let mass = |m: usize| -> f64 { (0..series.cells()).map(|c| cfg.rock.poro[c] * rho * series.slice(m).sat_w[c] * v).sum() };
    for m in 1..series.n_slices() {
        let produced = table.net_cumulative(darcyflow::Phase::Water, m) - table.net_cumulative(darcyflow::Phase::Water, m - 1);
        let err = (mass(m) - mass(m - 1) + produced).abs() / mass(m - 1);
        assert!(err <= 1e-8, "step {m}: {err:e}");
    }
}
