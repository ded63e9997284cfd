//! Fully implicit time stepping.
//!
//! Each step solves `N(P^{n+1}, S^{n+1}) = 0` for both phases with Newton's
//! method. Unknowns are `(P, S_w)` per cell, cell-major and interleaved.
//! Convergence is declared when the largest scaled residual of either phase
//! is at most `newton_tol` and, for each phase, the summed scaled residual
//! divided by the summed `phi * S` is at most `mass_balance_tol`. Updates are limited so that no saturation moves by
//! more than `max_sat_change`, then halved (up to five times) while the
//! residual 2-norm fails to decrease. Saturation iterates are clamped to
//! `[0, 1]`.
//!
//! A step that fails to converge is retried as two half steps, recursively,
//! down to `dt / 16`.

mod jacobian;
pub(crate) mod linear;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{validate_config, JacobianMode, LinearSolverKind, SimConfig, DIRECT_SOLVER_CELL_LIMIT};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::state::{FieldSeries, State};
use jacobian::P_REF;
use linear::{Bilu0, BlockMatrix, Krylov};

const MAX_HALVINGS: usize = 5;
const MAX_SUBDIVISION_DEPTH: usize = 4;
const MAX_LINEAR_ITERS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// Residual evaluations that ended a Newton iteration; a state that is
    /// already converged counts as one.
    pub newton_iters: usize,
    /// Largest scaled residual over cells and phases at exit.
    pub final_residual_inf_norm: f64,
    /// Largest relative global imbalance over both phases at exit.
    pub mass_balance_error: f64,
    pub converged: bool,
    /// Smallest sub-step used, s.
    pub dt_used: f64,
    pub linear_iters: usize,
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} Newton iterations, residual {:.3e}, dt {:.4e} s, {}",
            self.newton_iters,
            self.final_residual_inf_norm,
            self.dt_used,
            if self.converged { "converged" } else { "not converged" }
        )
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative global imbalance of the interleaved scaled residual `r` at state `x`.
fn mass_balance(r: &[f64], x: &State, poro: &[f64]) -> f64 {
    let mut net = [0.0f64; 2];
    let mut in_place = [0.0f64; 2];
    for (c, pair) in r.chunks_exact(2).enumerate() {
        net[0] += pair[0];
        net[1] += pair[1];
        in_place[0] += poro[c] * x.sat_w[c];
        in_place[1] += poro[c] * (1.0 - x.sat_w[c]);
    }
    (0..2)
        .map(|l| if in_place[l] > 0.0 { net[l].abs() / in_place[l] } else { net[l].abs() })
        .fold(0.0, f64::max)
}

/// Reusable Newton machinery for one configuration.
pub struct Stepper<'a> {
    disc: Discretization<'a>,
    jac: BlockMatrix,
    ilu: Bilu0,
    krylov: Krylov,
    residual: Vec<f64>,
    trial_residual: Vec<f64>,
    rhs: Vec<f64>,
    update: Vec<f64>,
    use_direct: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        let disc = Discretization::new(cfg)?;
        let n = cfg.grid.cell_count();
        let use_direct = match cfg.linear_solver {
            LinearSolverKind::Direct => true,
            LinearSolverKind::Iterative => false,
            LinearSolverKind::Auto => n < DIRECT_SOLVER_CELL_LIMIT,
        };
        Ok(Stepper {
            jac: BlockMatrix::stencil(&cfg.grid),
            disc,
            ilu: Bilu0::new(),
            krylov: Krylov::default(),
            residual: vec![0.0; 2 * n],
            trial_residual: vec![0.0; 2 * n],
            rhs: vec![0.0; 2 * n],
            update: vec![0.0; 2 * n],
            use_direct,
        })
    }

    fn cfg(&self) -> &SimConfig {
        self.disc.config()
    }

    /// Advances `old` by `dt`, subdividing on failure.
    pub fn advance(&mut self, old: &State, dt: f64) -> Result<(State, StepReport), StepReport> {
        self.advance_at_depth(old, dt, 0)
    }

    fn advance_at_depth(&mut self, old: &State, dt: f64, depth: usize) -> Result<(State, StepReport), StepReport> {
        let (state, report) = self.newton(old, dt);
        if report.converged {
            return Ok((state, report));
        }
        if depth >= MAX_SUBDIVISION_DEPTH {
            return Err(report);
        }
        let (mid, first) = self.advance_at_depth(old, dt / 2.0, depth + 1)?;
        let (end, second) = self.advance_at_depth(&mid, dt / 2.0, depth + 1)?;
        Ok((
            end,
            StepReport {
                newton_iters: report.newton_iters + first.newton_iters + second.newton_iters,
                final_residual_inf_norm: second.final_residual_inf_norm,
                mass_balance_error: first.mass_balance_error.max(second.mass_balance_error),
                converged: true,
                dt_used: first.dt_used.min(second.dt_used),
                linear_iters: report.linear_iters + first.linear_iters + second.linear_iters,
            },
        ))
    }

    fn solve_linear(&mut self) -> Result<usize> {
        if self.use_direct {
            linear::direct_solve(&self.jac, &self.rhs, &mut self.update)?;
            Ok(1)
        } else {
            self.ilu.factor(&self.jac)?;
            let tol = self.cfg().lin_tol;
            self.krylov
                .bicgstab(&self.jac, &self.ilu, &self.rhs, &mut self.update, tol, MAX_LINEAR_ITERS)
        }
    }

    /// One Newton solve over `dt` starting from `old`, without subdivision.
    pub fn newton(&mut self, old: &State, dt: f64) -> (State, StepReport) {
        let cfg = NewtonParams::of(self.cfg());
        let mut x = old.clone();
        self.disc.scaled_residuals(old.view(), x.view(), dt, &mut self.residual);
        let mut norm_inf = inf_norm(&self.residual);
        let mut norm_2 = l2_norm(&self.residual);
        let poro = &self.disc.config().rock.poro;
        let mut mb = mass_balance(&self.residual, &x, poro);
        let mut iters = 1;
        let mut linear_iters = 0;
        let report = |iters, norm, mb, converged, linear_iters| StepReport {
            newton_iters: iters,
            final_residual_inf_norm: norm,
            mass_balance_error: mb,
            converged,
            dt_used: dt,
            linear_iters,
        };
        loop {
            if norm_inf <= cfg.newton_tol && mb <= cfg.mass_balance_tol {
                return (x, report(iters, norm_inf, mb, true, linear_iters));
            }
            if iters >= cfg.newton_max_iter || !norm_inf.is_finite() {
                return (x, report(iters, norm_inf, mb, false, linear_iters));
            }
            match cfg.jacobian {
                JacobianMode::Analytic => jacobian::assemble_analytic(&self.disc, old.view(), x.view(), dt, &mut self.jac),
                JacobianMode::FiniteDifference => {
                    jacobian::assemble_finite_difference(&self.disc, old.view(), x.view(), dt, &mut self.jac)
                }
            }
            for (r, v) in self.rhs.iter_mut().zip(&self.residual) {
                *r = -v;
            }
            match self.solve_linear() {
                Ok(its) => linear_iters += its,
                Err(_) => return (x, report(iters, norm_inf, mb, false, linear_iters)),
            }
            let max_ds = self.update.chunks_exact(2).fold(0.0f64, |m, u| m.max(u[1].abs()));
            let mut lambda = if max_ds > cfg.max_sat_change { cfg.max_sat_change / max_ds } else { 1.0 };
            let mut trial = x.clone();
            for halving in 0..=MAX_HALVINGS {
                for (c, u) in self.update.chunks_exact(2).enumerate() {
                    trial.pressure[c] = x.pressure[c] + lambda * P_REF * u[0];
                    trial.sat_w[c] = (x.sat_w[c] + lambda * u[1]).clamp(0.0, 1.0);
                }
                self.disc.scaled_residuals(old.view(), trial.view(), dt, &mut self.trial_residual);
                let trial_norm = l2_norm(&self.trial_residual);
                let admissible = trial.pressure.iter().all(|&p| p > 0.0) && trial_norm.is_finite();
                if (admissible && trial_norm < norm_2) || (admissible && halving == MAX_HALVINGS) {
                    break;
                }
                if halving == MAX_HALVINGS {
                    return (x, report(iters, norm_inf, mb, false, linear_iters));
                }
                lambda *= 0.5;
            }
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut self.residual, &mut self.trial_residual);
            norm_inf = inf_norm(&self.residual);
            norm_2 = l2_norm(&self.residual);
            mb = mass_balance(&self.residual, &x, poro);
            iters += 1;
        }
    }
}

/// The scalar settings `newton` needs, copied out so the configuration borrow
/// does not overlap the mutable solver state.
struct NewtonParams {
    newton_tol: f64,
    newton_max_iter: usize,
    max_sat_change: f64,
    mass_balance_tol: f64,
    jacobian: JacobianMode,
}

impl NewtonParams {
    fn of(cfg: &SimConfig) -> Self {
        NewtonParams {
            newton_tol: cfg.newton_tol,
            newton_max_iter: cfg.newton_max_iter,
            max_sat_change: cfg.max_sat_change,
            mass_balance_tol: cfg.mass_balance_tol,
            jacobian: cfg.jacobian,
        }
    }
}

/// One implicit step of length `dt` from `old`.
pub fn step(old: &State, dt: f64, cfg: &SimConfig) -> Result<(State, StepReport)> {
    validate_config(cfg).into_result()?;
    let grid = &cfg.grid;
    old.view().check_shape(grid, "initial state")?;
    if old.sat_w.iter().any(|s| !(0.0..=1.0).contains(s)) || old.pressure.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidArgument("state needs saturations in [0, 1] and positive pressures".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    Stepper::new(cfg)?
        .advance(old, dt)
        .map_err(|report| Error::NonConvergence { step: 1, report })
}

/// Runs `cfg.n_steps` steps from the uniform initial state.
pub fn simulate(cfg: &SimConfig) -> Result<(FieldSeries, Vec<StepReport>)> {
    simulate_observed(cfg, |_, _| {})
}

/// As [`simulate`], calling `observe(step, report)` after every step.
pub fn simulate_observed(
    cfg: &SimConfig,
    mut observe: impl FnMut(usize, &StepReport),
) -> Result<(FieldSeries, Vec<StepReport>)> {
    validate_config(cfg).into_result()?;
    let mut stepper = Stepper::new(cfg)?;
    let mut state = State::uniform(&cfg.grid, cfg.p_init, cfg.sw_init);
    let mut series = FieldSeries::starting_at(&cfg.grid, &state);
    let mut reports = Vec::with_capacity(cfg.n_steps);
    for m in 1..=cfg.n_steps {
        let (next, report) = stepper
            .advance(&state, cfg.dt)
            .map_err(|report| Error::NonConvergence { step: m, report })?;
        observe(m, &report);
        series.push(m as f64 * cfg.dt, &next);
        reports.push(report);
        state = next;
    }
    Ok((series, reports))
}
