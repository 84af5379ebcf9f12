//! Sparse matrices and the iterative solvers used by the spectrum and
//! perturbation modules.

use nalgebra::DVector;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets. Duplicates are summed and
    /// explicit zeros are kept only on the diagonal.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yr = s;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                trip.push((c, r, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    /// Largest |A_ij - A_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                scale = scale.max(v.abs());
                worst = worst.max((v - t.get(r, c)).abs());
            }
        }
        if scale == 0.0 { 0.0 } else { worst / scale }
    }

    /// Gershgorin lower bound on the spectrum (meaningful when symmetric).
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.nrows)
            .map(|r| {
                let mut d = 0.0;
                let mut off = 0.0;
                for (c, v) in self.row(r) {
                    if c == r { d += v } else { off += v.abs() }
                }
                d - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Returns A + s I.
    pub fn shifted(&self, s: f64) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() + self.nrows);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                trip.push((r, c, v));
            }
            trip.push((r, r, s));
        }
        Self::from_triplets(self.nrows, self.ncols, trip)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Incomplete LU factorisation with zero fill.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Self {
        let mut lu = a.clone();
        let n = a.nrows;
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for k in lu.row_ptr[r]..lu.row_ptr[r + 1] {
                if lu.col_idx[k] == r {
                    diag[r] = k;
                }
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.col_idx[k]] = k;
            }
            for k in start..end {
                let j = lu.col_idx[k];
                if j >= i {
                    break;
                }
                let dj = lu.values[diag[j]];
                let lij = if dj != 0.0 { lu.values[k] / dj } else { 0.0 };
                lu.values[k] = lij;
                for kk in (diag[j] + 1)..lu.row_ptr[j + 1] {
                    let c = lu.col_idx[kk];
                    let p = pos[c];
                    if p != usize::MAX {
                        lu.values[p] -= lij * lu.values[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.col_idx[k]] = usize::MAX;
            }
            if diag[i] == usize::MAX || lu.values[diag[i]].abs() < 1e-300 {
                // keep the factorisation usable; the Krylov solve absorbs the error
                if diag[i] != usize::MAX {
                    lu.values[diag[i]] = 1.0;
                }
            }
        }
        Ilu0 { lu, diag }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in self.lu.row_ptr[i]..self.lu.row_ptr[i + 1] {
                let j = self.lu.col_idx[k];
                if j >= i {
                    break;
                }
                s -= self.lu.values[k] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            let d = self.diag[i];
            if d == usize::MAX {
                continue;
            }
            for k in (d + 1)..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[k] * y[self.lu.col_idx[k]];
            }
            y[i] = s / self.lu.values[d];
        }
        y
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with right ILU(0) preconditioning.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, SolveInfo) {
    let n = b.len();
    let pre = Ilu0::new(a);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], SolveInfo { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let mut total = 0usize;
    while total < max_iter {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= rtol {
            return (x, SolveInfo { iterations: total, relative_residual: rel, converged: true });
        }
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let z = pre.solve(&v[k]);
            let mut w = a.mul_vec(&z);
            // modified Gram-Schmidt with one reorthogonalisation pass
            for _ in 0..2 {
                for (j, vj) in v.iter().enumerate() {
                    let hjk = dot(&w, vj);
                    h[j][k] += hjk;
                    axpy(-hjk, vj, &mut w);
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() / bnorm <= rtol || wn <= 1e-300 {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        let mut upd = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut upd);
        }
        let upd = pre.solve(&upd);
        axpy(1.0, &upd, &mut x);
    }
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rel = norm2(&r) / bnorm;
    (x, SolveInfo { iterations: total, relative_residual: rel, converged: rel <= rtol })
}

/// Conjugate gradients with Jacobi preconditioning for symmetric positive
/// definite systems.
pub fn cg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, rtol: f64, max_iter: usize) -> (Vec<f64>, SolveInfo) {
    let n = b.len();
    let dinv: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.get(i, i);
            if d.abs() > 0.0 { 1.0 / d } else { 1.0 }
        })
        .collect();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], SolveInfo { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rel = norm2(&r) / bnorm;
        if rel <= rtol {
            return (x, SolveInfo { iterations: it, relative_residual: rel, converged: true });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return (x, SolveInfo { iterations: it, relative_residual: rel, converged: false });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm2(&r) / bnorm;
    (x, SolveInfo { iterations: max_iter, relative_residual: rel, converged: rel <= rtol })
}

/// Orthonormalises `v` against the orthonormal set `basis`, two passes.
/// Returns the residual norm before normalisation.
pub fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = v.dot(b);
            v.axpy(-c, b, 1.0);
        }
    }
    let nrm = v.norm();
    if nrm > 0.0 {
        *v /= nrm;
    }
    nrm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn gmres_and_cg_solve_tridiagonal() {
        let a = laplace_1d(200);
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.mul_vec(&xs);
        let (x, info) = gmres(&a, &b, None, 1e-12, 50, 2000);
        assert!(info.converged);
        assert!(x.iter().zip(&xs).all(|(p, q)| (p - q).abs() < 1e-8));
        let (x, info) = cg(&a, &b, None, 1e-12, 2000);
        assert!(info.converged);
        assert!(x.iter().zip(&xs).all(|(p, q)| (p - q).abs() < 1e-8));
    }

    #[test]
    fn gmres_nonsymmetric() {
        let n = 100;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i > 0 {
                t.push((i, i - 1, -1.5));
            }
            if i + 1 < n {
                t.push((i, i + 1, -0.5));
            }
            t.push((i, (i * 7 + 3) % n, 0.2));
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let xs: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let b = a.mul_vec(&xs);
        let (x, info) = gmres(&a, &b, None, 1e-12, 30, 1000);
        assert!(info.converged, "{info:?}");
        assert!(x.iter().zip(&xs).all(|(p, q)| (p - q).abs() < 1e-9));
    }

    #[test]
    fn gershgorin_bounds_spectrum() {
        let a = laplace_1d(10);
        assert!(a.gershgorin_lower() <= 0.0 + 1e-15);
        assert!(a.asymmetry() == 0.0);
    }
}
