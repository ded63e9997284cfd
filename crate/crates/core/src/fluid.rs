use serde::{Deserialize, Serialize};

use crate::config::Violation;
use crate::units;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Water,
    Oil,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Water, Phase::Oil];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Water => "water",
            Phase::Oil => "oil",
        }
    }

    /// Saturation of this phase given the water saturation.
    #[inline]
    pub fn saturation(self, sw: f64) -> f64 {
        match self {
            Phase::Water => sw,
            Phase::Oil => 1.0 - sw,
        }
    }
}

/// Corey power-law parameters for one phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreyParams {
    /// Endpoint relative permeability.
    pub k_end: f64,
    /// Critical saturation; the same value bounds both ends of the mobile range.
    pub s_c: f64,
    /// Corey exponent.
    pub a: f64,
}

impl CoreyParams {
    pub(crate) fn problems(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.k_end > 0.0 && self.k_end <= 1.0) {
            out.push(Violation::new(format!("{prefix}.k_end"), format!("must be in (0, 1], got {}", self.k_end)));
        }
        if !(self.s_c >= 0.0 && self.s_c < 0.5) {
            out.push(Violation::new(format!("{prefix}.s_c"), format!("must be in [0, 0.5), got {}", self.s_c)));
        }
        if !(self.a >= 1.0 && self.a.is_finite()) {
            out.push(Violation::new(format!("{prefix}.a"), format!("must be at least 1, got {}", self.a)));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidPhase {
    /// Density, kg/m3.
    pub rho: f64,
    /// Viscosity, Pa s.
    pub mu: f64,
    /// Compressibility, 1/Pa.
    pub c: f64,
    pub corey: CoreyParams,
}

impl FluidPhase {
    pub(crate) fn problems(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            out.push(Violation::new(format!("{prefix}.rho"), format!("must be positive, got {}", self.rho)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            out.push(Violation::new(format!("{prefix}.mu"), format!("must be positive, got {}", self.mu)));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            out.push(Violation::new(format!("{prefix}.c"), format!("must be non-negative, got {}", self.c)));
        }
        out.extend(self.corey.problems(&format!("{prefix}.corey")));
        out
    }

    /// Reference water: 1838 kg/m3, 0.31 cp, c = 9e-5 1/bar, Corey (0.8, 0.1, 2).
    pub fn reference_water() -> Self {
        FluidPhase {
            rho: 1838.0,
            mu: units::cp_to_pa_s(0.31),
            c: units::per_bar_to_per_pa(9e-5),
            corey: CoreyParams { k_end: 0.8, s_c: 0.1, a: 2.0 },
        }
    }

    /// Reference oil: 787 kg/m3, 1.14 cp, c = 9e-5 1/bar, Corey (1.0, 0.1, 2).
    pub fn reference_oil() -> Self {
        FluidPhase {
            rho: 787.0,
            mu: units::cp_to_pa_s(1.14),
            c: units::per_bar_to_per_pa(9e-5),
            corey: CoreyParams { k_end: 1.0, s_c: 0.1, a: 2.0 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fluids {
    pub water: FluidPhase,
    pub oil: FluidPhase,
}

impl Fluids {
    #[inline]
    pub fn get(&self, phase: Phase) -> &FluidPhase {
        match phase {
            Phase::Water => &self.water,
            Phase::Oil => &self.oil,
        }
    }
}

impl Default for Fluids {
    fn default() -> Self {
        Fluids {
            water: FluidPhase::reference_water(),
            oil: FluidPhase::reference_oil(),
        }
    }
}
