//! Two-phase (oil/water) Darcy flow on structured 3-D grids.
//!
//! The crate is organised around a single discrete residual operator
//! ([`discretization`]). The implicit [`simulator`] drives that residual to
//! zero to produce pressure/saturation histories, and the same operator
//! scores externally produced fields through [`discretization::physics_loss`].
//!
//! All internal quantities are SI (m, s, Pa, kg). Field units (md, cp, bar,
//! days) only appear in [`units`] and the configuration loader.
//!
//! Arrays use one canonical layout: `[t][k][j][i]` with `i` (x) fastest.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod discretization;
pub mod error;
pub mod facies;
pub mod fluid;
pub mod grid;
pub mod io;
pub mod relperm;
pub mod rock;
pub mod simulator;
pub mod state;
pub mod units;
pub mod wells;

pub use config::{validate_config, SimConfig, ValidationReport, Violation};
pub use discretization::{physics_loss, Discretization, ResidualField, ResidualTerms};
pub use error::{Error, Result};
pub use fluid::{CoreyParams, FluidPhase, Fluids, Phase};
pub use grid::{Axis, Grid};
pub use rock::RockField;
pub use simulator::{simulate, step, StepReport};
pub use state::{FieldSeries, Snapshot, State};
pub use wells::{WellKind, WellSpec};
