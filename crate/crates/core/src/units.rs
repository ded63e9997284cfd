//! Conversions between field units and the SI units used internally.
//!
//! Every conversion is a single multiplication (or division for the inverse)
//! by an exact constant, so `to_si(from_si(x))` is within one ulp of `x`.

use crate::error::{Error, Result};

/// Square metres per millidarcy.
pub const M2_PER_MD: f64 = 9.869233e-16;
/// Pascal-seconds per centipoise.
pub const PA_S_PER_CP: f64 = 1e-3;
/// Pascals per bar.
pub const PA_PER_BAR: f64 = 1e5;
/// Seconds per day.
pub const S_PER_DAY: f64 = 86400.0;

pub fn md_to_m2(k_md: f64) -> Result<f64> {
    if !(k_md >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "permeability must be non-negative, got {k_md} md"
        )));
    }
    Ok(k_md * M2_PER_MD)
}

pub fn m2_to_md(k_m2: f64) -> Result<f64> {
    if !(k_m2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "permeability must be non-negative, got {k_m2} m2"
        )));
    }
    Ok(k_m2 / M2_PER_MD)
}

pub fn cp_to_pa_s(mu_cp: f64) -> f64 {
    mu_cp * PA_S_PER_CP
}

pub fn pa_s_to_cp(mu: f64) -> f64 {
    mu / PA_S_PER_CP
}

pub fn bar_to_pa(p_bar: f64) -> f64 {
    p_bar * PA_PER_BAR
}

pub fn pa_to_bar(p: f64) -> f64 {
    p / PA_PER_BAR
}

/// Compressibility quoted per bar to per pascal.
pub fn per_bar_to_per_pa(c: f64) -> f64 {
    c / PA_PER_BAR
}

pub fn per_pa_to_per_bar(c: f64) -> f64 {
    c * PA_PER_BAR
}

pub fn days_to_s(days: f64) -> f64 {
    days * S_PER_DAY
}

pub fn s_to_days(s: f64) -> f64 {
    s / S_PER_DAY
}
