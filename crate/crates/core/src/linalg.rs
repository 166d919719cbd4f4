//! Small dense linear algebra: fixed 3×3 matrices plus the least-squares and
//! symmetric-eigenvalue kernels used by the atom fit.

use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub type Vec3<T> = [T; 3];

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Mat3<T> {
    pub fn zeros() -> Self {
        Mat3([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag([T::one(); 3])
    }

    pub fn diag(d: Vec3<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn from_cols(c: [Vec3<T>; 3]) -> Self {
        let mut m = Self::zeros();
        for j in 0..3 {
            for i in 0..3 {
                m.0[i][j] = c[j][i];
            }
        }
        m
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[j][i] = self.0[i][j];
            }
        }
        m
    }

    pub fn det(&self) -> T {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Inverse by the adjugate; `None` when the determinant is not usable
    /// relative to the matrix scale.
    pub fn inverse(&self) -> Option<Self> {
        let a = &self.0;
        let det = self.det();
        let scale = self.max_abs();
        if !det.is_finite() || scale == T::zero() || det.abs() <= T::epsilon() * scale * scale * scale {
            return None;
        }
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
        let inv_det = T::one() / det;
        let mut m = Self::zeros();
        m.0[0][0] = cof(1, 2, 1, 2) * inv_det;
        m.0[0][1] = -cof(0, 2, 1, 2) * inv_det;
        m.0[0][2] = cof(0, 1, 1, 2) * inv_det;
        m.0[1][0] = -cof(1, 2, 0, 2) * inv_det;
        m.0[1][1] = cof(0, 2, 0, 2) * inv_det;
        m.0[1][2] = -cof(0, 1, 0, 2) * inv_det;
        m.0[2][0] = cof(1, 2, 0, 1) * inv_det;
        m.0[2][1] = -cof(0, 2, 0, 1) * inv_det;
        m.0[2][2] = cof(0, 1, 0, 1) * inv_det;
        Some(m)
    }

    /// Lower Cholesky factor, `None` unless strictly positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let a = &self.0;
        let mut l = Self::zeros();
        for j in 0..3 {
            let mut d = a[j][j];
            for k in 0..j {
                d = d - l.0[j][k] * l.0[j][k];
            }
            if !(d > T::zero()) {
                return None;
            }
            let ljj = d.sqrt();
            l.0[j][j] = ljj;
            for i in (j + 1)..3 {
                let mut s = a[i][j];
                for k in 0..j {
                    s = s - l.0[i][k] * l.0[j][k];
                }
                l.0[i][j] = s / ljj;
            }
        }
        Some(l)
    }

    /// Solves `L x = b` for lower-triangular `self`.
    pub fn solve_lower(&self, b: Vec3<T>) -> Vec3<T> {
        let l = &self.0;
        let mut x = [T::zero(); 3];
        for i in 0..3 {
            let mut s = b[i];
            for k in 0..i {
                s = s - l[i][k] * x[k];
            }
            x[i] = s / l[i][i];
        }
        x
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let mut out = [T::zero(); 3];
        for i in 0..3 {
            out[i] = self.0[i][0] * v[0] + self.0[i][1] * v[1] + self.0[i][2] * v[2];
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] - o.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: T) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        m
    }

    pub fn frobenius(&self) -> T {
        let mut s = T::zero();
        for row in &self.0 {
            for &v in row {
                s = s + v * v;
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> T {
        let mut s = T::zero();
        for row in &self.0 {
            for &v in row {
                s = s.max(v.abs());
            }
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Mat3<U> {
        let mut m = Mat3::<U>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = U::lit(self.0[i][j].as_f64());
            }
        }
        m
    }
}

impl<T: Scalar> Mul for Mat3<T> {
    type Output = Mat3<T>;

    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = T::zero();
                for k in 0..3 {
                    s = s + self.0[i][k] * rhs.0[k][j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }
}

impl<T> Index<(usize, usize)> for Mat3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.0[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.0[i][j]
    }
}

pub fn dot3<T: Scalar>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Dense least squares `min ‖A x − y‖₂` by Householder QR.
///
/// `a` is column-major: `a[j]` is column `j` with `y.len()` rows. Returns the
/// solution and the residual sum of squares, or `None` if `A` is rank deficient
/// at working precision.
pub fn least_squares<T: Scalar>(a: &[Vec<T>], y: &[T]) -> Option<(Vec<T>, T)> {
    let n = y.len();
    let k = a.len();
    if k == 0 {
        let rss = y.iter().fold(T::zero(), |s, &v| s + v * v);
        return Some((Vec::new(), rss));
    }
    if n < k || a.iter().any(|c| c.len() != n) {
        return None;
    }
    let mut q: Vec<Vec<T>> = a.to_vec();
    let mut rhs = y.to_vec();
    let mut col_norm0 = T::zero();
    for c in &q {
        col_norm0 = col_norm0.max(c.iter().fold(T::zero(), |s, &v| s + v * v).sqrt());
    }
    for j in 0..k {
        let norm = q[j][j..].iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm <= T::epsilon() * T::lit(16.0) * col_norm0 {
            return None;
        }
        let alpha = if q[j][j] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = q[j][j..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, &x| s + x * x);
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for col in q.iter_mut().skip(j) {
                let proj = v.iter().zip(&col[j..]).fold(T::zero(), |s, (&vi, &ci)| s + vi * ci);
                let f = two * proj / vnorm2;
                for (ci, &vi) in col[j..].iter_mut().zip(&v) {
                    *ci = *ci - f * vi;
                }
            }
            let proj = v.iter().zip(&rhs[j..]).fold(T::zero(), |s, (&vi, &ci)| s + vi * ci);
            let f = two * proj / vnorm2;
            for (ci, &vi) in rhs[j..].iter_mut().zip(&v) {
                *ci = *ci - f * vi;
            }
        }
    }
    let mut x = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..k {
            s = s - q[j][i] * x[j];
        }
        x[i] = s / q[i][i];
    }
    // Residual recomputed directly so it is accurate near zero.
    let mut rss = T::zero();
    for r in 0..n {
        let mut fit = T::zero();
        for j in 0..k {
            fit = fit + a[j][r] * x[j];
        }
        let e = y[r] - fit;
        rss = rss + e * e;
    }
    Some((x, rss))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(m: &[Vec<T>]) -> Vec<T> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[i][i] * a[i][i];
            for j in (i + 1)..n {
                off = off + a[i][j] * a[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_cholesky_agree_with_hand_values() {
        let a = Mat3([[4.0, 2.0, 0.0], [2.0, 5.0, 1.0], [0.0, 1.0, 3.0]]);
        let inv = a.inverse().unwrap();
        let prod = a * inv;
        assert!(prod.sub(&Mat3::identity()).max_abs() < 1e-15);
        let l = a.cholesky().unwrap();
        assert!((l * l.transpose()).sub(&a).max_abs() < 1e-14);
        assert_eq!(l.0[0][0], 2.0);
        assert_eq!(l.0[1][0], 1.0);
        assert!(Mat3::diag([1.0, 1.0, -1.0]).cholesky().is_none());
    }

    #[test]
    fn least_squares_recovers_exact_coefficients() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let cols = vec![vec![1.0; 20], xs.clone(), xs.iter().map(|x| x * x).collect()];
        let y: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let (c, rss) = least_squares(&cols, &y).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-12 && (c[2] - 0.5).abs() < 1e-12);
        assert!(rss < 1e-24);
        let dup = vec![xs.clone(), xs.clone()];
        assert!(least_squares(&dup, &y).is_none());
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let ev = symmetric_eigenvalues::<f64>(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }
}
