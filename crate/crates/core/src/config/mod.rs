//! Simulation configuration (SI units) and its validation.

mod file;

use serde::{Deserialize, Serialize};

pub use file::{load_config, ConfigFile, LoadedConfig, RockSource, WellEntry};

use crate::fluid::Fluids;
use crate::grid::Grid;
use crate::rock::RockField;
use crate::units;
use crate::wells::{self, WellSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolverKind {
    /// Direct factorisation below [`DIRECT_SOLVER_CELL_LIMIT`] cells, iterative above.
    #[default]
    Auto,
    Direct,
    Iterative,
}

/// Grids with fewer cells than this use the direct sparse solver under
/// [`LinearSolverKind::Auto`].
pub const DIRECT_SOLVER_CELL_LIMIT: usize = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    #[default]
    Analytic,
    /// One-sided finite differences; for verification only.
    FiniteDifference,
}

/// Everything needed to run or score a simulation, in SI units.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub rock: RockField,
    pub fluids: Fluids,
    pub wells: Vec<WellSpec>,
    /// Time step, s.
    pub dt: f64,
    pub n_steps: usize,
    /// Initial pressure, Pa.
    pub p_init: f64,
    pub sw_init: f64,
    /// Convergence bound on the scaled residual (see [`crate::discretization`]).
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Relative tolerance of the iterative linear solver.
    pub lin_tol: f64,
    pub linear_solver: LinearSolverKind,
    pub jacobian: JacobianMode,
    /// Largest saturation change a single Newton update may apply.
    pub max_sat_change: f64,
    /// Bound on the global imbalance per phase: the summed scaled residual
    /// over the pore-volume fraction of that phase in place.
    pub mass_balance_tol: f64,
}

impl SimConfig {
    /// Reference fluids and schedule (50-day steps, 21 steps, 350 bar,
    /// connate water) with the default well layout.
    pub fn with_defaults(grid: Grid, rock: RockField) -> Self {
        let wells = wells::default_layout(&grid);
        let fluids = Fluids::default();
        SimConfig {
            grid,
            rock,
            fluids,
            wells,
            dt: units::days_to_s(50.0),
            n_steps: 21,
            p_init: units::bar_to_pa(350.0),
            sw_init: fluids.water.corey.s_c,
            newton_tol: 1e-6,
            newton_max_iter: 30,
            lin_tol: 1e-9,
            linear_solver: LinearSolverKind::Auto,
            jacobian: JacobianMode::Analytic,
            max_sat_change: 0.2,
            mass_balance_tol: 1e-10,
        }
    }

    /// Mirror image of this configuration across the x mid-plane.
    pub fn mirrored_x(&self) -> SimConfig {
        let mut out = self.clone();
        out.rock = self.rock.mirrored_x(&self.grid);
        for w in &mut out.wells {
            for c in &mut w.cells {
                c[0] = self.grid.nx - 1 - c[0];
            }
        }
        out
    }
}

/// One failed invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Dotted field path, e.g. `rock.poro` or `water.mu`.
    pub field: String,
    /// Offending cell `(i, j, k)` for per-cell fields.
    pub cell: Option<[usize; 3]>,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            cell: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, cell: [usize; 3]) -> Self {
        self.cell = Some(cell);
        self
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.cell {
            Some(c) => write!(f, "{} at cell {:?}: {}", self.field, c, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.passed() {
            return Ok(());
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        Err(crate::Error::Config(msgs.join("; ")))
    }
}

/// Checks every invariant of `cfg`. A passing report means every downstream
/// operation accepts the configuration.
pub fn validate_config(cfg: &SimConfig) -> ValidationReport {
    let mut v = cfg.grid.problems();
    if v.is_empty() {
        v.extend(cfg.rock.problems(&cfg.grid));
        for w in &cfg.wells {
            v.extend(w.problems(&cfg.grid));
        }
    }
    v.extend(cfg.fluids.water.problems("water"));
    v.extend(cfg.fluids.oil.problems("oil"));

    let mut check = |ok: bool, field: &str, msg: String| {
        if !ok {
            v.push(Violation::new(field, msg));
        }
    };
    check(cfg.dt > 0.0 && cfg.dt.is_finite(), "dt", format!("must be positive, got {}", cfg.dt));
    check(cfg.n_steps >= 1, "n_steps", "must be at least 1".into());
    check(cfg.p_init > 0.0 && cfg.p_init.is_finite(), "p_init", format!("must be positive, got {}", cfg.p_init));
    let (lo, hi) = (cfg.fluids.water.corey.s_c, 1.0 - cfg.fluids.oil.corey.s_c);
    check(
        cfg.sw_init >= lo && cfg.sw_init <= hi,
        "sw_init",
        format!("must be in [{lo}, {hi}], got {}", cfg.sw_init),
    );
    check(cfg.newton_tol > 0.0, "newton_tol", format!("must be positive, got {}", cfg.newton_tol));
    check(cfg.newton_max_iter >= 1, "newton_max_iter", "must be at least 1".into());
    check(cfg.lin_tol > 0.0 && cfg.lin_tol < 1.0, "lin_tol", format!("must be in (0, 1), got {}", cfg.lin_tol));
    check(
        cfg.max_sat_change > 0.0 && cfg.max_sat_change <= 1.0,
        "max_sat_change",
        format!("must be in (0, 1], got {}", cfg.max_sat_change),
    );
    check(
        cfg.mass_balance_tol > 0.0,
        "mass_balance_tol",
        format!("must be positive, got {}", cfg.mass_balance_tol),
    );
    ValidationReport { violations: v }
}
