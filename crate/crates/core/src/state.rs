use crate::error::{Error, Result};
use crate::grid::Grid;

/// Borrowed pressure/saturation snapshot at one time level.
#[derive(Clone, Copy, Debug)]
pub struct Snapshot<'a> {
    pub pressure: &'a [f64],
    pub sat_w: &'a [f64],
}

impl Snapshot<'_> {
    pub fn len(&self) -> usize {
        self.pressure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pressure.is_empty()
    }

    pub(crate) fn check_shape(&self, grid: &Grid, what: &str) -> Result<()> {
        let n = grid.cell_count();
        if self.pressure.len() != n || self.sat_w.len() != n {
            return Err(Error::Shape(format!(
                "{what}: expected {n} cells, got {} pressure / {} saturation values",
                self.pressure.len(),
                self.sat_w.len()
            )));
        }
        Ok(())
    }
}

/// Owned snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    /// Pa.
    pub pressure: Vec<f64>,
    /// Water saturation.
    pub sat_w: Vec<f64>,
}

impl State {
    pub fn uniform(grid: &Grid, p: f64, sw: f64) -> Self {
        let n = grid.cell_count();
        State {
            pressure: vec![p; n],
            sat_w: vec![sw; n],
        }
    }

    pub fn view(&self) -> Snapshot<'_> {
        Snapshot {
            pressure: &self.pressure,
            sat_w: &self.sat_w,
        }
    }

    pub fn mirrored_x(&self, grid: &Grid) -> State {
        let n = grid.cell_count();
        State {
            pressure: (0..n).map(|c| self.pressure[grid.mirror_x(c)]).collect(),
            sat_w: (0..n).map(|c| self.sat_w[grid.mirror_x(c)]).collect(),
        }
    }
}

/// Pressure and water saturation over `nt + 1` time levels, stored
/// `[t][k][j][i]`. Slice 0 is the initial condition.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSeries {
    /// `(nz, ny, nx)`.
    pub shape: [usize; 3],
    /// Seconds, strictly increasing from 0.
    pub times: Vec<f64>,
    pub pressure: Vec<f64>,
    pub sat_w: Vec<f64>,
}

impl FieldSeries {
    pub fn new(shape: [usize; 3], times: Vec<f64>, pressure: Vec<f64>, sat_w: Vec<f64>) -> Result<Self> {
        let series = FieldSeries { shape, times, pressure, sat_w };
        series.validate()?;
        Ok(series)
    }

    /// A series holding only `initial` at time 0.
    pub fn starting_at(grid: &Grid, initial: &State) -> Self {
        FieldSeries {
            shape: grid.shape(),
            times: vec![0.0],
            pressure: initial.pressure.clone(),
            sat_w: initial.sat_w.clone(),
        }
    }

    pub fn cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn n_slices(&self) -> usize {
        self.times.len()
    }

    pub fn slice(&self, m: usize) -> Snapshot<'_> {
        let n = self.cells();
        Snapshot {
            pressure: &self.pressure[m * n..(m + 1) * n],
            sat_w: &self.sat_w[m * n..(m + 1) * n],
        }
    }

    pub fn push(&mut self, time: f64, state: &State) {
        self.times.push(time);
        self.pressure.extend_from_slice(&state.pressure);
        self.sat_w.extend_from_slice(&state.sat_w);
    }

    pub fn matches_grid(&self, grid: &Grid) -> Result<()> {
        if self.shape != grid.shape() {
            return Err(Error::Shape(format!(
                "series shape {:?} does not match grid {:?}",
                self.shape,
                grid.shape()
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cells();
        let nt = self.times.len();
        if nt == 0 {
            return Err(Error::Shape("series has no time slices".into()));
        }
        if self.pressure.len() != nt * n || self.sat_w.len() != nt * n {
            return Err(Error::Shape(format!(
                "series with {nt} slices of {n} cells needs {} values, got {} pressure / {} saturation",
                nt * n,
                self.pressure.len(),
                self.sat_w.len()
            )));
        }
        if self.times[0] != 0.0 {
            return Err(Error::InvalidArgument(format!("times[0] must be 0, got {}", self.times[0])));
        }
        if let Some(w) = self.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "times must be strictly increasing (slice {} -> {})",
                w,
                w + 1
            )));
        }
        if let Some(pos) = self.sat_w.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidArgument(format!(
                "saturation {} at flat index {pos} outside [0, 1]",
                self.sat_w[pos]
            )));
        }
        if let Some(pos) = self.pressure.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "pressure {} at flat index {pos} is not positive",
                self.pressure[pos]
            )));
        }
        Ok(())
    }
}
