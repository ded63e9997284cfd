//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use darcyflow::{Grid, RockField, SimConfig, State, WellKind, WellSpec};

pub const MD: f64 = 9.869233e-16;
pub const BAR: f64 = 1e5;
pub const DAY: f64 = 86400.0;

fn corey(s: f64, k_end: f64, s_c: f64, a: f64) -> f64 {
    let s = s.max(s_c).min(1.0 - s_c);
    let x = (s - s_c) / (1.0 - 2.0 * s_c);
    let p = if a.fract() == 0.0 { x.powi(a as i32) } else { x.powf(a) };
    k_end * p
}

pub fn naive_krw(sw: f64, cfg: &SimConfig) -> f64 {
    let c = cfg.fluids.water.corey;
    corey(sw, c.k_end, c.s_c, c.a)
}

pub fn naive_kro(sw: f64, cfg: &SimConfig) -> f64 {
    let c = cfg.fluids.oil.corey;
    corey(1.0 - sw, c.k_end, c.s_c, c.a)
}

pub fn naive_harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * (a * b) / (a + b)
    }
}

/// Triple-loop residual of one phase (`water = true` for water), straight
/// from the discrete balance with no shared code.
pub fn naive_residual(water: bool, old: &State, new: &State, dt: f64, cfg: &SimConfig) -> Vec<f64> {
    let g = &cfg.grid;
    let (nx, ny, nz) = (g.nx, g.ny, g.nz);
    let id = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    let f = if water { &cfg.fluids.water } else { &cfg.fluids.oil };
    let kr = |sw: f64| if water { naive_krw(sw, cfg) } else { naive_kro(sw, cfg) };
    let sat = |sw: f64| if water { sw } else { 1.0 - sw };
    let perm = &cfg.rock.perm;
    let p = &new.pressure;
    let s = &new.sat_w;
    let r0 = 0.14 * (g.dx * g.dx + g.dy * g.dy).sqrt();

    // Coefficient and flux of the face between a and b; `b` must be the
    // neighbour, sign convention (P_b - P_a).
    let face = |a: usize, b: usize, h: f64| -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let up = if p[lo] >= p[hi] { lo } else { hi };
        f.rho * naive_harmonic(perm[a], perm[b]) * kr(s[up]) / f.mu / (h * h)
    };

    let mut out = vec![0.0; g.cell_count()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let c = id(i, j, k);
                let xp = if i + 1 < nx { face(c, id(i + 1, j, k), g.dx) * (p[id(i + 1, j, k)] - p[c]) } else { 0.0 };
                let xm = if i > 0 { face(c, id(i - 1, j, k), g.dx) * (p[c] - p[id(i - 1, j, k)]) } else { 0.0 };
                let yp = if j + 1 < ny { face(c, id(i, j + 1, k), g.dy) * (p[id(i, j + 1, k)] - p[c]) } else { 0.0 };
                let ym = if j > 0 { face(c, id(i, j - 1, k), g.dy) * (p[c] - p[id(i, j - 1, k)]) } else { 0.0 };
                let zp = if k + 1 < nz { face(c, id(i, j, k + 1), g.dz) * (p[id(i, j, k + 1)] - p[c]) } else { 0.0 };
                let zm = if k > 0 { face(c, id(i, j, k - 1), g.dz) * (p[c] - p[id(i, j, k - 1)]) } else { 0.0 };

                let mut q = 0.0;
                let mut has_well = false;
                for w in &cfg.wells {
                    for &cell in &w.cells {
                        if cell == [i, j, k] {
                            has_well = true;
                            let wi = 2.0 * std::f64::consts::PI * perm[c] * g.dz / (r0 / w.rw).ln();
                            let krc = match w.kind {
                                WellKind::Producer => kr(s[c]),
                                WellKind::WaterInjector if water => naive_krw(1.0 - cfg.fluids.water.corey.s_c, cfg),
                                WellKind::WaterInjector => 0.0,
                            };
                            q += wi * (krc * f.rho / f.mu) * (p[c] - w.bhp);
                        }
                    }
                }
                let source = if has_well { -q / (g.dx * g.dy * g.dz) } else { 0.0 };
                let phi = cfg.rock.poro[c];
                let s_old = sat(old.sat_w[c]);
                let comp = phi * f.c * s_old * f.rho * (p[c] - old.pressure[c]) / dt;
                let acc = phi * f.rho * (sat(s[c]) - s_old) / dt;
                out[c] = xp - xm + yp - ym + zp - zm + source - comp - acc;
            }
        }
    }
    out
}

/// A configuration with reference fluids, uniform-ish facies rock and the
/// given wells.
pub fn small_config(nx: usize, ny: usize, nz: usize, seed: u64, wells: Vec<WellSpec>) -> SimConfig {
    let grid = Grid::new(nx, ny, nz, 20.0, 20.0, 2.0).unwrap();
    let rock = darcyflow::facies::generate_facies(seed, &grid, &Default::default(), 0.5).unwrap();
    let mut cfg = SimConfig::with_defaults(grid, rock);
    cfg.wells = wells;
    cfg
}

/// One producer at `(0, 0)` and one injector at the far corner.
pub fn two_wells(grid: &Grid, producer_bhp_bar: f64, injector_bhp_bar: f64) -> Vec<WellSpec> {
    vec![
        WellSpec::column("P", WellKind::Producer, 0, 0, grid, producer_bhp_bar * BAR, 0.1),
        WellSpec::column("I", WellKind::WaterInjector, grid.nx - 1, grid.ny - 1, grid, injector_bhp_bar * BAR, 0.1),
    ]
}

pub fn uniform_rock(grid: &Grid, perm_md: f64, poro: f64) -> RockField {
    RockField::uniform(grid, perm_md * MD, poro).unwrap()
}

/// SplitMix-style generator so random states do not depend on the library.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// A random state with pressures in `[p_lo, p_hi]` bar and saturations in `[0, 1]`.
pub fn random_state(grid: &Grid, rng: &mut Lcg, p_lo: f64, p_hi: f64) -> State {
    let n = grid.cell_count();
    State {
        pressure: (0..n).map(|_| rng.range(p_lo, p_hi) * BAR).collect(),
        sat_w: (0..n).map(|_| rng.next_f64()).collect(),
    }
}
