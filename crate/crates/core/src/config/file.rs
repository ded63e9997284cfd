//! TOML run configuration in field units.
//!
//! ```toml
//! [grid]
//! nx = 40
//! ny = 40
//! nz = 20
//! dx_m = 20.0
//! dy_m = 20.0
//! dz_m = 2.0
//!
//! [rock]
//! source = "facies"        # or "uniform" / "files"
//! seed = 7
//! sand_fraction = 0.5
//!
//! [schedule]
//! dt_days = 50.0
//! n_steps = 21
//!
//! [[wells]]
//! name = "INJ"
//! kind = "water_injector"
//! column = [20, 20]
//! bhp_bar = 330.0
//! ```
//!
//! Every key is optional. Omitting `wells` gives the default layout; an empty
//! list gives none. Relative file paths resolve against the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{validate_config, JacobianMode, LinearSolverKind, SimConfig};
use crate::error::{Error, Result};
use crate::facies::{self, CorrLen};
use crate::fluid::{CoreyParams, FluidPhase, Fluids};
use crate::grid::Grid;
use crate::io::tensor;
use crate::rock::RockField;
use crate::units;
use crate::wells::{self, WellKind, WellSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx_m: f64,
    pub dy_m: f64,
    pub dz_m: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { nx: 40, ny: 40, nz: 20, dx_m: 20.0, dy_m: 20.0, dz_m: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RockSource {
    #[default]
    Facies,
    Uniform,
    Files,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RockSection {
    pub source: RockSource,
    pub seed: u64,
    pub sand_fraction: f64,
    pub corr_len_m: [f64; 3],
    pub perm_md: f64,
    pub poro: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perm_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poro_path: Option<PathBuf>,
}

impl Default for RockSection {
    fn default() -> Self {
        let c = CorrLen::default();
        RockSection {
            source: RockSource::Facies,
            seed: 0,
            sand_fraction: 0.5,
            corr_len_m: [c.x, c.y, c.z],
            perm_md: facies::SAND_PERM_MD,
            poro: facies::SAND_PORO,
            perm_path: None,
            poro_path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub rho_kg_m3: f64,
    pub mu_cp: f64,
    pub c_per_bar: f64,
    pub k_end: f64,
    pub s_c: f64,
    pub corey_exponent: f64,
}

impl PhaseSection {
    fn from_phase(p: &FluidPhase) -> Self {
        PhaseSection {
            rho_kg_m3: p.rho,
            mu_cp: units::pa_s_to_cp(p.mu),
            c_per_bar: units::per_pa_to_per_bar(p.c),
            k_end: p.corey.k_end,
            s_c: p.corey.s_c,
            corey_exponent: p.corey.a,
        }
    }

    fn to_phase(&self) -> FluidPhase {
        FluidPhase {
            rho: self.rho_kg_m3,
            mu: units::cp_to_pa_s(self.mu_cp),
            c: units::per_bar_to_per_pa(self.c_per_bar),
            corey: CoreyParams { k_end: self.k_end, s_c: self.s_c, a: self.corey_exponent },
        }
    }
}

/// Partial phase overrides; missing keys fall back to the reference fluid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseOverrides {
    pub rho_kg_m3: Option<f64>,
    pub mu_cp: Option<f64>,
    pub c_per_bar: Option<f64>,
    pub k_end: Option<f64>,
    pub s_c: Option<f64>,
    pub corey_exponent: Option<f64>,
}

impl PhaseOverrides {
    fn apply(&self, base: PhaseSection) -> PhaseSection {
        PhaseSection {
            rho_kg_m3: self.rho_kg_m3.unwrap_or(base.rho_kg_m3),
            mu_cp: self.mu_cp.unwrap_or(base.mu_cp),
            c_per_bar: self.c_per_bar.unwrap_or(base.c_per_bar),
            k_end: self.k_end.unwrap_or(base.k_end),
            s_c: self.s_c.unwrap_or(base.s_c),
            corey_exponent: self.corey_exponent.unwrap_or(base.corey_exponent),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub dt_days: f64,
    pub n_steps: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection { dt_days: 50.0, n_steps: 21 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub p_bar: Option<f64>,
    /// Defaults to the water connate saturation.
    pub sw: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub lin_tol: f64,
    pub linear_solver: LinearSolverKind,
    pub jacobian: JacobianMode,
    pub max_sat_change: f64,
    pub mass_balance_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            newton_tol: 1e-6,
            newton_max_iter: 30,
            lin_tol: 1e-9,
            linear_solver: LinearSolverKind::Auto,
            jacobian: JacobianMode::Analytic,
            max_sat_change: 0.2,
            mass_balance_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellEntry {
    pub name: String,
    pub kind: WellKind,
    /// Explicit perforations `(i, j, k)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<[usize; 3]>>,
    /// Vertical well through every layer of `(i, j)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<[usize; 2]>,
    pub bhp_bar: f64,
    #[serde(default = "default_rw")]
    pub rw_m: f64,
}

fn default_rw() -> f64 {
    wells::DEFAULT_RW
}

impl WellEntry {
    fn from_spec(w: &WellSpec) -> Self {
        WellEntry {
            name: w.name.clone(),
            kind: w.kind,
            cells: Some(w.cells.clone()),
            column: None,
            bhp_bar: units::pa_to_bar(w.bhp),
            rw_m: w.rw,
        }
    }

    fn to_spec(&self, grid: &Grid) -> Result<WellSpec> {
        let cells = match (&self.cells, self.column) {
            (Some(c), None) => c.clone(),
            (None, Some([i, j])) => (0..grid.nz).map(|k| [i, j, k]).collect(),
            _ => {
                return Err(Error::Config(format!(
                    "well {}: give exactly one of `cells` or `column`",
                    self.name
                )))
            }
        };
        Ok(WellSpec {
            name: self.name.clone(),
            kind: self.kind,
            cells,
            bhp: units::bar_to_pa(self.bhp_bar),
            rw: self.rw_m,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub rock: RockSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub water: Option<PhaseOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oil: Option<PhaseOverrides>,
    pub schedule: ScheduleSection,
    pub initial: InitialSection,
    pub solver: SolverSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wells: Option<Vec<WellEntry>>,
}

/// A configuration after defaults and file references are resolved.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub sim: SimConfig,
    /// The input with every default written out.
    pub file: ConfigFile,
    /// SI echo of the scalar parameters, for provenance blocks.
    pub echo: Value,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().replace('\n', " ")))
    }

    /// The configuration as TOML text.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.nx, g.ny, g.nz, g.dx_m, g.dy_m, g.dz_m)
    }

    fn build_rock(&self, grid: &Grid, base: &Path) -> Result<RockField> {
        let r = &self.rock;
        match r.source {
            RockSource::Facies => {
                let c = CorrLen { x: r.corr_len_m[0], y: r.corr_len_m[1], z: r.corr_len_m[2] };
                facies::generate_facies(r.seed, grid, &c, r.sand_fraction)
            }
            RockSource::Uniform => RockField::uniform(grid, units::md_to_m2(r.perm_md)?, r.poro),
            RockSource::Files => {
                let (Some(k), Some(p)) = (&r.perm_path, &r.poro_path) else {
                    return Err(Error::Config("rock.source = \"files\" needs perm_path and poro_path".into()));
                };
                tensor::read_rock_files(&base.join(k), &base.join(p), grid)
            }
        }
    }

    /// Builds and validates the simulation; `base` anchors relative paths.
    pub fn resolve(mut self, base: &Path) -> Result<LoadedConfig> {
        let grid = self.build_grid()?;
        let rock = self.build_rock(&grid, base)?;
        let reference = Fluids::default();
        let water = self.water.clone().unwrap_or_default().apply(PhaseSection::from_phase(&reference.water));
        let oil = self.oil.clone().unwrap_or_default().apply(PhaseSection::from_phase(&reference.oil));
        let fluids = Fluids { water: water.to_phase(), oil: oil.to_phase() };

        let wells = match &self.wells {
            None => wells::default_layout(&grid),
            Some(list) => list.iter().map(|w| w.to_spec(&grid)).collect::<Result<_>>()?,
        };

        let mut sim = SimConfig::with_defaults(grid, rock);
        sim.fluids = fluids;
        sim.wells = wells;
        sim.dt = units::days_to_s(self.schedule.dt_days);
        sim.n_steps = self.schedule.n_steps;
        sim.p_init = units::bar_to_pa(self.initial.p_bar.unwrap_or(350.0));
        sim.sw_init = self.initial.sw.unwrap_or(fluids.water.corey.s_c);
        let s = &self.solver;
        sim.newton_tol = s.newton_tol;
        sim.newton_max_iter = s.newton_max_iter;
        sim.lin_tol = s.lin_tol;
        sim.linear_solver = s.linear_solver;
        sim.jacobian = s.jacobian;
        sim.max_sat_change = s.max_sat_change;
        sim.mass_balance_tol = s.mass_balance_tol;
        validate_config(&sim).into_result()?;

        self.water = Some(PhaseOverrides {
            rho_kg_m3: Some(water.rho_kg_m3),
            mu_cp: Some(water.mu_cp),
            c_per_bar: Some(water.c_per_bar),
            k_end: Some(water.k_end),
            s_c: Some(water.s_c),
            corey_exponent: Some(water.corey_exponent),
        });
        self.oil = Some(PhaseOverrides {
            rho_kg_m3: Some(oil.rho_kg_m3),
            mu_cp: Some(oil.mu_cp),
            c_per_bar: Some(oil.c_per_bar),
            k_end: Some(oil.k_end),
            s_c: Some(oil.s_c),
            corey_exponent: Some(oil.corey_exponent),
        });
        if let Some(k) = &self.rock.perm_path {
            self.rock.perm_path = Some(absolute(&base.join(k)));
        }
        if let Some(p) = &self.rock.poro_path {
            self.rock.poro_path = Some(absolute(&base.join(p)));
        }
        self.initial = InitialSection { p_bar: Some(units::pa_to_bar(sim.p_init)), sw: Some(sim.sw_init) };
        self.wells = Some(sim.wells.iter().map(WellEntry::from_spec).collect());
        let echo = echo(&sim);
        Ok(LoadedConfig { sim, file: self, echo })
    }
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

fn echo(sim: &SimConfig) -> Value {
    let phase = |p: &FluidPhase| {
        json!({
            "rho_kg_m3": p.rho,
            "mu_pa_s": p.mu,
            "c_per_pa": p.c,
            "k_end": p.corey.k_end,
            "s_c": p.corey.s_c,
            "corey_exponent": p.corey.a,
        })
    };
    let g = &sim.grid;
    json!({
        "grid": { "nx": g.nx, "ny": g.ny, "nz": g.nz, "dx_m": g.dx, "dy_m": g.dy, "dz_m": g.dz },
        "water": phase(&sim.fluids.water),
        "oil": phase(&sim.fluids.oil),
        "dt_s": sim.dt,
        "n_steps": sim.n_steps,
        "p_init_pa": sim.p_init,
        "sw_init": sim.sw_init,
        "newton_tol": sim.newton_tol,
        "newton_max_iter": sim.newton_max_iter,
        "lin_tol": sim.lin_tol,
        "linear_solver": sim.linear_solver,
        "jacobian": sim.jacobian,
        "max_sat_change": sim.max_sat_change,
        "mass_balance_tol": sim.mass_balance_tol,
        "wells": sim.wells,
    })
}

/// Reads `path`, optionally replacing the facies seed.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<LoadedConfig> {
    let text = fs::read_to_string(path).map_err(|e| crate::io::with_path(path, e))?;
    let mut file = ConfigFile::parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::format(path, msg),
        other => other,
    })?;
    if let Some(s) = seed {
        file.rock.seed = s;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    file.resolve(base)
}
