//! Sparse linear algebra for the Newton systems: a 2x2 block CSR matrix on
//! the seven-point stencil, block ILU(0), right-preconditioned BiCGSTAB, and
//! a direct sparse LU.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};

/// Row-major 2x2 block `[a00, a01, a10, a11]`.
pub(crate) type Block = [f64; 4];

#[inline]
fn mul(a: &Block, b: &Block) -> Block {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

#[inline]
fn mul_vec(a: &Block, x: &[f64]) -> [f64; 2] {
    [a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]]
}

fn inverse(a: &Block) -> Option<Block> {
    let det = a[0] * a[3] - a[1] * a[2];
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(det.abs() > 1e-300 && det.abs() > f64::EPSILON * 1e-6 * scale * scale) {
        return None;
    }
    Some([a[3] / det, -a[1] / det, -a[2] / det, a[0] / det])
}

/// Block CSR matrix with 2x2 blocks on the seven-point stencil of a grid.
#[derive(Clone, Debug)]
pub(crate) struct BlockMatrix {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub diag: Vec<usize>,
    pub vals: Vec<Block>,
}

impl BlockMatrix {
    pub fn stencil(grid: &Grid) -> Self {
        let n = grid.cell_count();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(7 * n);
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for c in 0..n {
            let mut row: Vec<usize> = Vec::with_capacity(7);
            row.push(c);
            for axis in Axis::ALL {
                for forward in [false, true] {
                    if let Some(nb) = grid.neighbor(c, axis, forward) {
                        row.push(nb);
                    }
                }
            }
            row.sort_unstable();
            diag.push(cols.len() + row.iter().position(|&x| x == c).unwrap());
            cols.extend(row);
            row_ptr.push(cols.len());
        }
        let vals = vec![[0.0; 4]; cols.len()];
        BlockMatrix { row_ptr, cols, diag, vals }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|b| *b = [0.0; 4]);
    }

    #[inline]
    pub fn position(&self, row: usize, col: usize) -> usize {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        range.clone().find(|&p| self.cols[p] == col).expect("entry outside stencil")
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n() {
            let mut acc = [0.0; 2];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[p];
                let v = mul_vec(&self.vals[p], &x[2 * c..2 * c + 2]);
                acc[0] += v[0];
                acc[1] += v[1];
            }
            y[2 * r] = acc[0];
            y[2 * r + 1] = acc[1];
        }
    }

    fn triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let mut t = Vec::with_capacity(4 * self.vals.len());
        for r in 0..self.n() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[p];
                let b = &self.vals[p];
                for (q, &v) in b.iter().enumerate() {
                    if v != 0.0 || (r == c && q % 3 == 0) {
                        t.push(Triplet::new(2 * r + q / 2, 2 * c + q % 2, v));
                    }
                }
            }
        }
        t
    }
}

/// Block incomplete LU with the sparsity of the matrix itself.
pub(crate) struct Bilu0 {
    lu: Vec<Block>,
    inv_diag: Vec<Block>,
}

impl Bilu0 {
    pub fn new() -> Self {
        Bilu0 { lu: Vec::new(), inv_diag: Vec::new() }
    }

    pub fn factor(&mut self, a: &BlockMatrix) -> Result<()> {
        let n = a.n();
        self.lu.clear();
        self.lu.extend_from_slice(&a.vals);
        self.inv_diag.clear();
        self.inv_diag.resize(n, [0.0; 4]);
        for i in 0..n {
            let row_end = a.row_ptr[i + 1];
            for p in a.row_ptr[i]..a.diag[i] {
                let k = a.cols[p];
                let l = mul(&self.lu[p], &self.inv_diag[k]);
                self.lu[p] = l;
                let mut scan = p + 1;
                for q in a.diag[k] + 1..a.row_ptr[k + 1] {
                    let j = a.cols[q];
                    while scan < row_end && a.cols[scan] < j {
                        scan += 1;
                    }
                    if scan < row_end && a.cols[scan] == j {
                        let u = self.lu[q];
                        let prod = mul(&l, &u);
                        let target = &mut self.lu[scan];
                        for m in 0..4 {
                            target[m] -= prod[m];
                        }
                    }
                }
            }
            self.inv_diag[i] = inverse(&self.lu[a.diag[i]])
                .ok_or_else(|| Error::LinearSolve(format!("singular pivot block at cell {i}")))?;
        }
        Ok(())
    }

    pub fn apply(&self, a: &BlockMatrix, r: &[f64], z: &mut [f64]) {
        let n = a.n();
        for i in 0..n {
            let mut y = [r[2 * i], r[2 * i + 1]];
            for p in a.row_ptr[i]..a.diag[i] {
                let k = a.cols[p];
                let v = mul_vec(&self.lu[p], &z[2 * k..2 * k + 2]);
                y[0] -= v[0];
                y[1] -= v[1];
            }
            z[2 * i] = y[0];
            z[2 * i + 1] = y[1];
        }
        for i in (0..n).rev() {
            let mut y = [z[2 * i], z[2 * i + 1]];
            for p in a.diag[i] + 1..a.row_ptr[i + 1] {
                let j = a.cols[p];
                let v = mul_vec(&self.lu[p], &z[2 * j..2 * j + 2]);
                y[0] -= v[0];
                y[1] -= v[1];
            }
            let x = mul_vec(&self.inv_diag[i], &y);
            z[2 * i] = x[0];
            z[2 * i + 1] = x[1];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Work vectors for BiCGSTAB, reused between solves.
#[derive(Default)]
pub(crate) struct Krylov {
    r: Vec<f64>,
    r_hat: Vec<f64>,
    p: Vec<f64>,
    v: Vec<f64>,
    s: Vec<f64>,
    t: Vec<f64>,
    p_hat: Vec<f64>,
    s_hat: Vec<f64>,
}

impl Krylov {
    /// Solves `a x = b` to `||b - a x|| <= tol ||b||`. Returns the iteration count.
    pub fn bicgstab(
        &mut self,
        a: &BlockMatrix,
        pc: &Bilu0,
        b: &[f64],
        x: &mut [f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<usize> {
        let m = b.len();
        for v in [
            &mut self.r,
            &mut self.r_hat,
            &mut self.p,
            &mut self.v,
            &mut self.s,
            &mut self.t,
            &mut self.p_hat,
            &mut self.s_hat,
        ] {
            v.clear();
            v.resize(m, 0.0);
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Ok(0);
        }
        self.r.copy_from_slice(b);
        self.r_hat.copy_from_slice(b);
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let target = tol * b_norm;
        for it in 1..=max_iter {
            let rho_new = dot(&self.r_hat, &self.r);
            if rho_new == 0.0 || !rho_new.is_finite() {
                return Err(Error::LinearSolve(format!("BiCGSTAB breakdown (rho) at iteration {it}")));
            }
            let beta = (rho_new / rho) * (alpha / omega);
            for q in 0..m {
                self.p[q] = self.r[q] + beta * (self.p[q] - omega * self.v[q]);
            }
            pc.apply(a, &self.p, &mut self.p_hat);
            a.matvec(&self.p_hat, &mut self.v);
            let denom = dot(&self.r_hat, &self.v);
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::LinearSolve(format!("BiCGSTAB breakdown (alpha) at iteration {it}")));
            }
            alpha = rho_new / denom;
            for q in 0..m {
                self.s[q] = self.r[q] - alpha * self.v[q];
            }
            if norm(&self.s) <= target {
                for q in 0..m {
                    x[q] += alpha * self.p_hat[q];
                }
                return Ok(it);
            }
            pc.apply(a, &self.s, &mut self.s_hat);
            a.matvec(&self.s_hat, &mut self.t);
            let tt = dot(&self.t, &self.t);
            if tt == 0.0 {
                return Err(Error::LinearSolve(format!("BiCGSTAB breakdown (omega) at iteration {it}")));
            }
            omega = dot(&self.t, &self.s) / tt;
            for q in 0..m {
                x[q] += alpha * self.p_hat[q] + omega * self.s_hat[q];
                self.r[q] = self.s[q] - omega * self.t[q];
            }
            if norm(&self.r) <= target {
                return Ok(it);
            }
            if omega == 0.0 {
                return Err(Error::LinearSolve(format!("BiCGSTAB stagnated at iteration {it}")));
            }
            rho = rho_new;
        }
        Err(Error::LinearSolve(format!(
            "BiCGSTAB reached {max_iter} iterations, residual {:.3e} of {:.3e}",
            norm(&self.r),
            b_norm
        )))
    }
}

/// Solves `a x = b` with a sparse LU factorisation.
pub(crate) fn direct_solve(a: &BlockMatrix, b: &[f64], x: &mut [f64]) -> Result<()> {
    let m = 2 * a.n();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &a.triplets())
        .map_err(|e| Error::LinearSolve(format!("matrix assembly: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::LinearSolve(format!("sparse LU: {e:?}")))?;
    let mut rhs = Mat::<f64>::from_fn(m, 1, |i, _| b[i]);
    faer::linalg::solvers::SolveCore::solve_in_place_with_conj(&lu, faer::Conj::No, rhs.as_mut());
    for (i, v) in x.iter_mut().enumerate() {
        *v = rhs[(i, 0)];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::LinearSolve("sparse LU produced non-finite values".into()))
    }
}
