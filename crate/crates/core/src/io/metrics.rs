use serde::{Deserialize, Serialize};

use crate::discretization::pairwise_sum;
use crate::error::{Error, Result};
use crate::state::FieldSeries;

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{} values vs {} values", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Shape("empty arrays".into()));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    Ok(pairwise_sum(&d) / d.len() as f64)
}

/// Mean squared error.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    check(a, b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    Ok(pairwise_sum(&d) / d.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub mae: f64,
    pub mse: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetrics {
    /// Pa and Pa^2.
    pub pressure: ErrorPair,
    pub sat_w: ErrorPair,
}

pub fn compare_series(a: &FieldSeries, b: &FieldSeries) -> Result<SeriesMetrics> {
    if a.shape != b.shape || a.n_slices() != b.n_slices() {
        return Err(Error::Shape(format!(
            "series {:?} x {} vs {:?} x {}",
            a.shape,
            a.n_slices(),
            b.shape,
            b.n_slices()
        )));
    }
    Ok(SeriesMetrics {
        pressure: ErrorPair {
            mae: mae(&a.pressure, &b.pressure)?,
            mse: mse(&a.pressure, &b.pressure)?,
        },
        sat_w: ErrorPair {
            mae: mae(&a.sat_w, &b.sat_w)?,
            mse: mse(&a.sat_w, &b.sat_w)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_inputs() {
        let a = [1.0, -2.0, 3.5];
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn unit_offset() {
        let a = [1.0, -2.0, 3.5, 10.0];
        let b: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        assert_eq!(mae(&a, &b).unwrap(), 1.0);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn constant_offset_closed_form(a in proptest::collection::vec(-100.0f64..100.0, 1..50), c in -10.0f64..10.0) {
            let b: Vec<f64> = a.iter().map(|x| x + c).collect();
            prop_assert!((mae(&a, &b).unwrap() - c.abs()).abs() <= 1e-12 * (1.0 + c.abs()) * 100.0);
            prop_assert!((mse(&a, &b).unwrap() - c * c).abs() <= 1e-10 * (1.0 + c * c) * 100.0);
        }

        #[test]
        fn symmetric(a in proptest::collection::vec(-1e3f64..1e3, 1..40), seed in 0u64..1000) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 0.5 + ((i as u64 * 31 + seed) % 17) as f64).collect();
            prop_assert_eq!(mae(&a, &b).unwrap(), mae(&b, &a).unwrap());
            prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        }
    }
}
