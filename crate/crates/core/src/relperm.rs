//! Corey relative permeability as a function of water saturation.
//!
//! Saturations are clamped to the mobile range `[s_c, 1 - s_c]` before the
//! power law is evaluated; the derivative keeps its one-sided interior value
//! at the two clamp points and is zero strictly outside.

use crate::error::{Error, Result};
use crate::fluid::{CoreyParams, Phase};

fn check_sw(sw: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sw) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("water saturation {sw} outside [0, 1]")))
    }
}

#[inline]
fn power(base: f64, a: f64) -> f64 {
    if a == 2.0 {
        base * base
    } else if a == 1.0 {
        base
    } else {
        base.powf(a)
    }
}

#[inline]
pub(crate) fn krw_unchecked(sw: f64, p: &CoreyParams) -> f64 {
    let s = sw.clamp(p.s_c, 1.0 - p.s_c);
    p.k_end * power((s - p.s_c) / (1.0 - 2.0 * p.s_c), p.a)
}

#[inline]
pub(crate) fn kro_unchecked(sw: f64, p: &CoreyParams) -> f64 {
    let so = (1.0 - sw).clamp(p.s_c, 1.0 - p.s_c);
    p.k_end * power((so - p.s_c) / (1.0 - 2.0 * p.s_c), p.a)
}

#[inline]
pub(crate) fn dkrw_unchecked(sw: f64, p: &CoreyParams) -> f64 {
    if sw < p.s_c || sw > 1.0 - p.s_c {
        return 0.0;
    }
    let d = 1.0 - 2.0 * p.s_c;
    p.k_end * p.a * power((sw - p.s_c) / d, p.a - 1.0) / d
}

#[inline]
pub(crate) fn dkro_unchecked(sw: f64, p: &CoreyParams) -> f64 {
    let so = 1.0 - sw;
    if so < p.s_c || so > 1.0 - p.s_c {
        return 0.0;
    }
    let d = 1.0 - 2.0 * p.s_c;
    -p.k_end * p.a * power((so - p.s_c) / d, p.a - 1.0) / d
}

/// Water relative permeability `k_w ((S_w - S_c) / (1 - 2 S_c))^a`.
pub fn krw(sw: f64, p: &CoreyParams) -> Result<f64> {
    check_sw(sw)?;
    Ok(krw_unchecked(sw, p))
}

/// Oil relative permeability `k_o ((S_o - S_c) / (1 - 2 S_c))^a` with `S_o = 1 - S_w`.
pub fn kro(sw: f64, p: &CoreyParams) -> Result<f64> {
    check_sw(sw)?;
    Ok(kro_unchecked(sw, p))
}

pub fn dkrw_dsw(sw: f64, p: &CoreyParams) -> Result<f64> {
    check_sw(sw)?;
    Ok(dkrw_unchecked(sw, p))
}

pub fn dkro_dsw(sw: f64, p: &CoreyParams) -> Result<f64> {
    check_sw(sw)?;
    Ok(dkro_unchecked(sw, p))
}

/// Relative permeability of `phase` at water saturation `sw`, unchecked.
#[inline]
pub(crate) fn kr(phase: Phase, sw: f64, p: &CoreyParams) -> f64 {
    match phase {
        Phase::Water => krw_unchecked(sw, p),
        Phase::Oil => kro_unchecked(sw, p),
    }
}

/// d(kr)/d(S_w) of `phase`, unchecked.
#[inline]
pub(crate) fn dkr(phase: Phase, sw: f64, p: &CoreyParams) -> f64 {
    match phase {
        Phase::Water => dkrw_unchecked(sw, p),
        Phase::Oil => dkro_unchecked(sw, p),
    }
}
