//! Minimal sparse symmetric matrix support: CSR storage and a
//! Jacobi-preconditioned conjugate-gradient solver.

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-sparse-row form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from unordered triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0f64; triplets.len()];
        let mut cursor = counts.clone();
        for &(i, j, v) in triplets {
            let p = cursor[i];
            cols[p] = j;
            vals[p] = v;
            cursor[i] += 1;
        }
        // sort each row by column and merge duplicates
        let mut row_ptr = vec![0usize; n + 1];
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            for p in counts[i]..counts[i + 1] {
                scratch.push((cols[p], vals[p]));
            }
            scratch.sort_unstable_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let (c, mut v) = scratch[k];
                let mut k2 = k + 1;
                while k2 < scratch.len() && scratch[k2].0 == c {
                    v += scratch[k2].1;
                    k2 += 1;
                }
                out_cols.push(c);
                out_vals.push(v);
                k = k2;
            }
            row_ptr[i + 1] = out_cols.len();
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx: out_cols,
            values: out_vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry lookup; zero for positions outside the sparsity pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `max_ij |A_ij - A_ji|`, used by symmetry checks.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                worst = worst.max((self.values[p] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Row sums, used to check that constants lie in the kernel.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }

    /// Extracts the principal submatrix on `keep` (indices must be sorted).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut inv = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            inv[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for p in self.row_ptr[old_i]..self.row_ptr[old_i + 1] {
                let old_j = self.col_idx[p];
                if inv[old_j] != usize::MAX {
                    triplets.push((new_i, inv[old_j], self.values[p]));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), &triplets)
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` with
/// Jacobi-preconditioned CG. Converges when `||b - Ax|| <= rel_tol * ||b||`.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgReport)> {
    let n = a.n();
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        let r_norm = dot(&r, &r).sqrt();
        if r_norm <= rel_tol * b_norm {
            return Ok((
                x,
                CgReport {
                    iterations: it,
                    relative_residual: r_norm / b_norm,
                },
            ));
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverFailure {
                residual: r_norm / b_norm,
                iterations: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let mut res = vec![0.0; n];
    a.matvec(&x, &mut res);
    for i in 0..n {
        res[i] = b[i] - res[i];
    }
    let final_rel = dot(&res, &res).sqrt() / b_norm;
    if final_rel <= rel_tol {
        Ok((
            x,
            CgReport {
                iterations: max_iter,
                relative_residual: final_rel,
            },
        ))
    } else {
        Err(Error::SolverFailure {
            residual: final_rel,
            iterations: max_iter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0), (0, 1, -1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn cg_solves_spd_system() {
        // 1-D Laplacian with Dirichlet ends
        let n = 50;
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
        let a = CsrMatrix::from_triplets(n, &t);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 / 7.0).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let (x, rep) = cg_solve(&a, &b, None, 1e-12, 10_000).unwrap();
        let err: f64 = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-8, "err {err} rep {rep:?}");
    }
}
