//! Householder QR with column pivoting.

use crate::scalar::Real;

/// Diagonal entries of R smaller than this fraction of |R_00| count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix<T> {
    pub rows: usize,
    pub cols: Vec<Vec<T>>,
}

impl<T: Real> ColMatrix<T> {
    pub fn from_columns(rows: usize, cols: Vec<Vec<T>>) -> Self {
        debug_assert!(cols.iter().all(|c| c.len() == rows));
        Self { rows, cols }
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn mul_vec(&self, beta: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        for (col, &b) in self.cols.iter().zip(beta) {
            for (o, &x) in out.iter_mut().zip(col) {
                *o = *o + x * b;
            }
        }
        out
    }

    /// `X' v`
    pub fn t_mul_vec(&self, v: &[T]) -> Vec<T> {
        self.cols.iter().map(|c| dot(c, v)).collect()
    }

    /// Rows scaled by `w[i]`.
    pub fn scale_rows(&self, w: &[T]) -> Self {
        Self {
            rows: self.rows,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().zip(w).map(|(&x, &s)| x * s).collect())
                .collect(),
        }
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `A P = Q R` with Householder reflectors kept in factored form.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    rows: usize,
    /// Householder vectors, one per eliminated column, each of length `rows - j`.
    reflectors: Vec<Vec<T>>,
    /// Upper-triangular R, stored by column (column j has j + 1 entries).
    r: Vec<Vec<T>>,
    /// `perm[j]` is the original index of the j-th pivoted column.
    perm: Vec<usize>,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(a: &ColMatrix<T>) -> Self {
        let n = a.rows;
        let k = a.ncols();
        let mut work = a.cols.clone();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut reflectors = Vec::with_capacity(k.min(n));
        let steps = k.min(n);
        for j in 0..steps {
            // pivot: largest remaining column norm
            let norms: Vec<T> = work[j..].iter().map(|c| dot(&c[j..], &c[j..])).collect();
            let mut best = 0;
            for (i, v) in norms.iter().enumerate() {
                if *v > norms[best] {
                    best = i;
                }
            }
            work.swap(j, j + best);
            perm.swap(j, j + best);

            let x = &work[j][j..];
            let norm = dot(x, x).sqrt();
            let mut v = x.to_vec();
            if norm == T::zero() {
                reflectors.push(v);
                continue;
            }
            let alpha = if x[0] >= T::zero() { -norm } else { norm };
            v[0] = v[0] - alpha;
            let vv = dot(&v, &v);
            if vv > T::zero() {
                for col in work[j..].iter_mut() {
                    let tail = &mut col[j..];
                    let f = T::lit(2.0) * dot(&v, tail) / vv;
                    for (t, &vi) in tail.iter_mut().zip(&v) {
                        *t = *t - f * vi;
                    }
                }
            }
            reflectors.push(v);
        }
        let r = (0..k)
            .map(|j| work[j][..=j.min(n.saturating_sub(1))].to_vec())
            .collect();
        Self {
            rows: n,
            reflectors,
            r,
            perm,
        }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn r_diag(&self, j: usize) -> T {
        self.r[j].get(j).copied().unwrap_or_else(T::zero)
    }

    /// Numerical rank, and the original index of the first dependent column.
    pub fn rank(&self, rel_tol: T) -> (usize, Option<usize>) {
        let k = self.perm.len();
        if k == 0 {
            return (0, None);
        }
        let lead = self.r_diag(0).abs();
        for j in 0..k {
            let d = self.r_diag(j).abs();
            if j >= self.rows || d <= rel_tol * lead || d == T::zero() {
                return (j, Some(self.perm[j]));
            }
        }
        (k, None)
    }

    /// `Q' y`
    pub fn qt_mul(&self, y: &[T]) -> Vec<T> {
        let mut out = y.to_vec();
        for (j, v) in self.reflectors.iter().enumerate() {
            let vv = dot(v, v);
            if vv == T::zero() {
                continue;
            }
            let tail = &mut out[j..];
            let f = T::lit(2.0) * dot(v, tail) / vv;
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t = *t - f * vi;
            }
        }
        out
    }

    /// Least-squares solution in original column order (requires full rank).
    pub fn solve(&self, y: &[T]) -> Vec<T> {
        let k = self.perm.len();
        let qty = self.qt_mul(y);
        let mut z = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = qty[i];
            for j in (i + 1)..k {
                s = s - self.r[j][i] * z[j];
            }
            z[i] = s / self.r[i][i];
        }
        let mut beta = vec![T::zero(); k];
        for (j, &p) in self.perm.iter().enumerate() {
            beta[p] = z[j];
        }
        beta
    }

    /// `(A'A)^{-1}` in original column order (requires full rank).
    pub fn xtx_inverse(&self) -> Vec<Vec<T>> {
        let k = self.perm.len();
        // R^{-1}, upper triangular, by back substitution on unit vectors
        let mut rinv = vec![vec![T::zero(); k]; k];
        for c in 0..k {
            for i in (0..=c).rev() {
                let mut s = if i == c { T::one() } else { T::zero() };
                for j in (i + 1)..=c {
                    s = s - self.r[j][i] * rinv[j][c];
                }
                rinv[i][c] = s / self.r[i][i];
            }
        }
        // (R'R)^{-1} = R^{-1} R^{-T}
        let mut inv = vec![vec![T::zero(); k]; k];
        for a in 0..k {
            for b in 0..k {
                let s: T = (a.max(b)..k).map(|m| rinv[a][m] * rinv[b][m]).sum();
                inv[self.perm[a]][self.perm[b]] = s;
            }
        }
        inv
    }
}

/// `B M B` for a symmetric k x k bread `B`.
pub fn sandwich<T: Real>(bread: &[Vec<T>], meat: &[Vec<T>]) -> Vec<Vec<T>> {
    let k = bread.len();
    let mut tmp = vec![vec![T::zero(); k]; k];
    for i in 0..k {
        for j in 0..k {
            tmp[i][j] = (0..k).map(|m| bread[i][m] * meat[m][j]).sum();
        }
    }
    let mut out = vec![vec![T::zero(); k]; k];
    for i in 0..k {
        for j in 0..k {
            out[i][j] = (0..k).map(|m| tmp[i][m] * bread[m][j]).sum();
        }
    }
    out
}
