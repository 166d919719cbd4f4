//! Covariance matrices, standard square roots and cone sections.
//!
//! A covariance `Σ` is *admissible* when it is symmetric positive definite and
//! `Σ⁻¹𝟏 > 0`. For such matrices there is a root `N` (`NNᵗ = Σ`) with
//! `N e₁ = κ⁻¹𝟏`, `κ = √(𝟏ᵗΣ⁻¹𝟏)`. The directions `N⁻¹eᵢ` cut the plane
//! `w₁ = 1` in a triangle that encloses the origin; that triangle together with
//! `κ` determines `Σ` up to a simultaneous permutation of rows and columns.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Triangle2D};
use crate::linalg::{dot3, Mat3, Vec3};
use crate::scalar::Scalar;

/// Minimal normalized first coordinate of a cone direction.
pub const EPS_DIR: f64 = 1e-9;

/// Relative asymmetry tolerated before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix3<T> {
    pub entries: Mat3<T>,
}

/// Outcome of [`validate_admissible`]. Never an error: rejected inputs carry a reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport<T> {
    pub finite: bool,
    pub symmetric: bool,
    pub positive_definite: bool,
    /// `Σ⁻¹𝟏`, present once the matrix is known to be positive definite.
    pub inverse_row_sums: Option<Vec3<T>>,
    pub admissible: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardRoot<T> {
    pub matrix: Mat3<T>,
    pub kappa: T,
}

/// Section of the positive cone of a standard root by the plane `w₁ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionTriangle<T> {
    pub triangle: Triangle2D<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PermutationReport<T> {
    /// `b ≈ a[p[i]][p[j]]`.
    pub permutation: [usize; 3],
    pub distance: T,
}

/// The six permutations of `{0,1,2}` in lexicographic order.
pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

impl<T: Scalar> CovarianceMatrix3<T> {
    pub fn new(rows: [[T; 3]; 3]) -> Self {
        CovarianceMatrix3 { entries: Mat3(rows) }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::<T>::identity().0)
    }

    pub fn diagonal(d: [T; 3]) -> Self {
        Self::new(Mat3::diag(d).0)
    }

    /// Unit variances with common correlation `rho`.
    pub fn equicorrelated(rho: T) -> Self {
        let o = T::one();
        Self::new([[o, rho, rho], [rho, o, rho], [rho, rho, o]])
    }

    pub fn rows(&self) -> [[T; 3]; 3] {
        self.entries.0
    }

    pub fn scaled(&self, s: T) -> Self {
        CovarianceMatrix3 { entries: self.entries.scale(s) }
    }

    /// `PᵗΣP` with `(PᵗΣP)[i][j] = Σ[p[i]][p[j]]`.
    pub fn permuted(&self, p: [usize; 3]) -> Self {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.entries.0[p[i]][p[j]];
            }
        }
        CovarianceMatrix3 { entries: m }
    }

    fn symmetrized(&self) -> Mat3<T> {
        let t = self.entries.transpose();
        let mut m = self.entries;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = (self.entries.0[i][j] + t.0[i][j]) / T::lit(2.0);
            }
        }
        m
    }

    /// Cholesky factor of the symmetrized matrix, with admissibility enforced.
    pub fn admissible_cholesky(&self) -> Result<Mat3<T>> {
        let report = validate_admissible(self);
        if !report.admissible {
            return Err(Error::NotAdmissible(report.reason.unwrap_or_default()));
        }
        self.symmetrized().cholesky().ok_or_else(|| Error::NotAdmissible("not positive definite".into()))
    }
}

pub fn validate_admissible<T: Scalar>(sigma: &CovarianceMatrix3<T>) -> AdmissibilityReport<T> {
    let mut report = AdmissibilityReport {
        finite: sigma.entries.is_finite(),
        symmetric: false,
        positive_definite: false,
        inverse_row_sums: None,
        admissible: false,
        reason: None,
    };
    if !report.finite {
        report.reason = Some("non-finite entry".into());
        return report;
    }
    let asym = sigma.entries.sub(&sigma.entries.transpose()).max_abs();
    report.symmetric = asym <= T::lit(SYMMETRY_TOL) * sigma.entries.max_abs();
    if !report.symmetric {
        report.reason = Some(format!("not symmetric (max asymmetry {:e})", asym.as_f64()));
        return report;
    }
    let Some(l) = sigma.symmetrized().cholesky() else {
        report.reason = Some("not positive definite".into());
        return report;
    };
    report.positive_definite = true;
    let z = l.solve_lower([T::one(); 3]);
    let w = l.transpose();
    // back substitution with the upper factor Lᵗ
    let mut x = [T::zero(); 3];
    for i in (0..3).rev() {
        let mut s = z[i];
        for k in (i + 1)..3 {
            s = s - w.0[i][k] * x[k];
        }
        x[i] = s / w.0[i][i];
    }
    report.inverse_row_sums = Some(x);
    report.admissible = x.iter().all(|&v| v > T::zero());
    if !report.admissible {
        report.reason = Some(format!(
            "inverse row sums not all positive: [{:e}, {:e}, {:e}]",
            x[0].as_f64(),
            x[1].as_f64(),
            x[2].as_f64()
        ));
    }
    report
}

/// `κ = √(𝟏ᵗΣ⁻¹𝟏)`.
pub fn kappa<T: Scalar>(sigma: &CovarianceMatrix3<T>) -> Result<T> {
    let l = sigma.admissible_cholesky()?;
    let z = l.solve_lower([T::one(); 3]);
    Ok(dot3(z, z).sqrt())
}

/// Cholesky factor rotated so that its first column is `κ⁻¹𝟏`.
pub fn standard_square_root<T: Scalar>(sigma: &CovarianceMatrix3<T>) -> Result<StandardRoot<T>> {
    let l = sigma.admissible_cholesky()?;
    let z = l.solve_lower([T::one(); 3]);
    let kappa = dot3(z, z).sqrt();
    let u = z.map(|v| v / kappa);
    // Householder reflection exchanging e₁ and u, then a sign flip of the last
    // axis so the orthogonal factor is a rotation.
    let v = [T::one() - u[0], -u[1], -u[2]];
    let vv = dot3(v, v);
    let o = if vv > T::zero() {
        let two = T::lit(2.0);
        let mut h = Mat3::identity();
        for i in 0..3 {
            for j in 0..3 {
                h.0[i][j] = h.0[i][j] - two * v[i] * v[j] / vv;
            }
        }
        h * Mat3::diag([T::one(), T::one(), -T::one()])
    } else {
        Mat3::identity()
    };
    Ok(StandardRoot { matrix: l * o, kappa })
}

pub fn section_triangle<T: Scalar>(root: &StandardRoot<T>) -> Result<SectionTriangle<T>> {
    let inv = root
        .matrix
        .inverse()
        .ok_or_else(|| Error::NotAdmissible("standard root is singular".into()))?;
    let mut pts = [Point2::default(); 3];
    for (i, pt) in pts.iter_mut().enumerate() {
        let d = inv.col(i);
        let norm = dot3(d, d).sqrt();
        if !(d[0] / norm > T::lit(EPS_DIR)) {
            return Err(Error::NotAdmissible(format!(
                "cone direction {} has normalized first coordinate {:e}",
                i + 1,
                (d[0] / norm).as_f64()
            )));
        }
        *pt = Point2::new(d[1] / d[0], d[2] / d[0]);
    }
    let triangle = Triangle2D::new(pts)?;
    if !triangle.is_enclosing() {
        return Err(Error::NotAdmissible("section does not enclose the origin".into()));
    }
    Ok(SectionTriangle { triangle })
}

/// Rebuilds `Σ` from a section triangle and `κ`, with the permutation fixed to
/// the vertex order.
pub fn sigma_from_section<T: Scalar>(section: &SectionTriangle<T>, kappa: T) -> Result<CovarianceMatrix3<T>> {
    if !(kappa > T::zero()) || !kappa.is_finite() {
        return Err(Error::InconsistentInput(format!("kappa must be positive, got {}", kappa.as_f64())));
    }
    let v = section.triangle.vertices;
    let w = Mat3::from_cols([[T::one(), v[0].x, v[0].y], [T::one(), v[1].x, v[1].y], [T::one(), v[2].x, v[2].y]]);
    let w_inv = w
        .inverse()
        .ok_or_else(|| Error::DegenerateTriangle("vertex matrix is singular".into()))?;
    let mu = [w_inv.0[0][0] * kappa, w_inv.0[1][0] * kappa, w_inv.0[2][0] * kappa];
    if mu.iter().any(|&m| !(m > T::zero())) {
        return Err(Error::InconsistentInput(
            "origin is not interior to the section (non-positive barycentric weight)".into(),
        ));
    }
    let a = Mat3::diag(mu.map(|m| T::one() / m)) * w_inv;
    let s = a * a.transpose();
    Ok(CovarianceMatrix3 { entries: s.symmetrize_exact() })
}

impl<T: Scalar> Mat3<T> {
    fn symmetrize_exact(mut self) -> Self {
        for i in 0..3 {
            for j in (i + 1)..3 {
                let m = (self.0[i][j] + self.0[j][i]) / T::lit(2.0);
                self.0[i][j] = m;
                self.0[j][i] = m;
            }
        }
        self
    }
}

/// `min_P ‖PᵗaP − b‖_F`; ties keep the lexicographically first permutation.
pub fn permutation_distance<T: Scalar>(a: &CovarianceMatrix3<T>, b: &CovarianceMatrix3<T>) -> PermutationReport<T> {
    let mut best = PermutationReport { permutation: PERMUTATIONS[0], distance: T::infinity() };
    for p in PERMUTATIONS {
        let d = a.permuted(p).entries.sub(&b.entries).frobenius();
        if d < best.distance {
            best = PermutationReport { permutation: p, distance: d };
        }
    }
    best
}

/// Random admissible covariance for fixtures: standard deviations uniform on
/// `[0.5, 2]`, correlations uniform on `(-1, 1)`, rejected until admissible and
/// until `min(Σ⁻¹𝟏) ≥ margin · max(Σ⁻¹𝟏)`. `margin = 0` is plain rejection.
pub fn random_admissible<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> CovarianceMatrix3<f64> {
    loop {
        let sd: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..2.0));
        let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let r = [[1.0, c[0], c[1]], [c[0], 1.0, c[2]], [c[1], c[2], 1.0]];
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = r[i][j] * sd[i] * sd[j];
            }
        }
        let sigma = CovarianceMatrix3::new(s);
        let rep = validate_admissible(&sigma);
        if !rep.admissible {
            continue;
        }
        let x = rep.inverse_row_sums.unwrap();
        let (lo, hi) = (x[0].min(x[1]).min(x[2]), x[0].max(x[1]).max(x[2]));
        if lo >= margin * hi {
            return sigma;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::orthogonal_2x2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: Gauss–Jordan inverse applied to 𝟏.
    fn inverse_row_sums_oracle(m: [[f64; 3]; 3]) -> [f64; 3] {
        let mut a = [[0.0; 6]; 3];
        for i in 0..3 {
            a[i][..3].copy_from_slice(&m[i]);
            a[i][3 + i] = 1.0;
        }
        for c in 0..3 {
            let p = (c..3).max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap()).unwrap();
            a.swap(c, p);
            let d = a[c][c];
            for v in a[c].iter_mut() {
                *v /= d;
            }
            for r in 0..3 {
                if r != c {
                    let f = a[r][c];
                    for k in 0..6 {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        std::array::from_fn(|i| a[i][3] + a[i][4] + a[i][5])
    }

    fn check_root(sigma: &CovarianceMatrix3<f64>) -> StandardRoot<f64> {
        let root = standard_square_root(sigma).unwrap();
        let nnt = root.matrix * root.matrix.transpose();
        let rel = nnt.sub(&sigma.entries).frobenius() / sigma.entries.frobenius();
        assert!(rel < 1e-10, "NNᵗ mismatch {rel}");
        for i in 0..3 {
            assert!((root.matrix.0[i][0] - 1.0 / root.kappa).abs() < 1e-10);
        }
        assert!(root.matrix.det() > 0.0);
        root
    }

    #[test]
    fn admissibility_examples() {
        let id = validate_admissible(&CovarianceMatrix3::<f64>::identity());
        assert!(id.admissible);
        assert_eq!(id.inverse_row_sums.unwrap(), [1.0, 1.0, 1.0]);

        let eq = CovarianceMatrix3::equicorrelated(-0.25);
        let rep = validate_admissible(&eq);
        assert!(rep.admissible);
        let oracle = inverse_row_sums_oracle(eq.rows());
        for (x, o) in rep.inverse_row_sums.unwrap().iter().zip(oracle) {
            assert!((x - 2.0).abs() < 1e-14 && (o - 2.0).abs() < 1e-14);
        }

        let bad = validate_admissible(&CovarianceMatrix3::diagonal([1.0, 1.0, -1.0]));
        assert!(!bad.positive_definite && !bad.admissible);

        let asym = CovarianceMatrix3::new([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(!validate_admissible(&asym).symmetric);
        let nan = CovarianceMatrix3::new([[f64::NAN, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(!validate_admissible(&nan).finite);

        // strongly positive correlations push Σ⁻¹𝟏 out of the positive orthant
        let pos = CovarianceMatrix3::new([[1.0, 0.9, 0.9], [0.9, 1.0, 0.1], [0.9, 0.1, 1.0]]);
        let rep = validate_admissible(&pos);
        if rep.positive_definite {
            assert!(!rep.admissible);
        }
        assert!(kappa(&pos).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert!((kappa(&CovarianceMatrix3::<f64>::identity()).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((kappa(&CovarianceMatrix3::<f64>::identity().scaled(4.0)).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((kappa(&CovarianceMatrix3::equicorrelated(-0.25f64)).unwrap() - 6f64.sqrt()).abs() < 1e-14);
        let f32_k = kappa(&CovarianceMatrix3::<f32>::identity()).unwrap();
        assert!((f32_k - 3f32.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn standard_roots_satisfy_postconditions() {
        check_root(&CovarianceMatrix3::identity());
        let r = check_root(&CovarianceMatrix3::diagonal([1.0, 4.0, 9.0]));
        assert!((r.kappa - (1.0 + 0.25 + 1.0 / 9.0f64).sqrt()).abs() < 1e-15);
        let r = check_root(&CovarianceMatrix3::equicorrelated(-0.25));
        assert!((r.matrix.0[0][0] - 1.0 / 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn identity_section_is_equilateral() {
        let root = standard_square_root(&CovarianceMatrix3::<f64>::identity()).unwrap();
        let tri = section_triangle(&root).unwrap().triangle;
        for (i, p) in tri.vertices.iter().enumerate() {
            assert!((p.norm() - 2f64.sqrt()).abs() < 1e-14);
            let q = tri.vertices[(i + 1) % 3];
            assert!((p.dot(q) + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rotating_the_root_rotates_the_section() {
        let sigma = CovarianceMatrix3::diagonal([1.0, 4.0, 9.0]);
        let root = standard_square_root(&sigma).unwrap();
        let base = section_triangle(&root).unwrap().triangle;
        assert!(base.is_enclosing());
        for reflect in [false, true] {
            let o2 = orthogonal_2x2(0.7f64, reflect);
            let mut o = Mat3::identity();
            for i in 0..2 {
                for j in 0..2 {
                    o.0[i + 1][j + 1] = o2[i][j];
                }
            }
            let rotated = StandardRoot { matrix: root.matrix * o, kappa: root.kappa };
            let tri = section_triangle(&rotated).unwrap().triangle;
            // N·diag(1,O₂) has inverse diag(1,O₂ᵗ)N⁻¹, so vertices map by O₂ᵗ
            let o2t = [[o2[0][0], o2[1][0]], [o2[0][1], o2[1][1]]];
            for (p, q) in tri.vertices.iter().zip(base.vertices) {
                let m = q.map(&o2t);
                assert!((p.x - m.x).abs() < 1e-12 && (p.y - m.y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sigma_from_section_examples() {
        let id = CovarianceMatrix3::<f64>::identity();
        let tri = section_triangle(&standard_square_root(&id).unwrap()).unwrap();
        let back = sigma_from_section(&tri, 3f64.sqrt()).unwrap();
        assert!(permutation_distance(&back, &id).distance < 1e-13);

        let d = CovarianceMatrix3::diagonal([1.0, 4.0, 9.0]);
        let root = standard_square_root(&d).unwrap();
        let tri = section_triangle(&root).unwrap();
        let back = sigma_from_section(&tri, root.kappa).unwrap();
        assert!(permutation_distance(&back, &d).distance < 1e-12);

        let s = 1.7;
        let scaled = sigma_from_section(&tri, root.kappa * s).unwrap();
        assert!(permutation_distance(&scaled, &d.scaled(1.0 / (s * s))).distance < 1e-12);

        assert!(matches!(sigma_from_section(&tri, -1.0), Err(Error::InconsistentInput(_))));
        let outside = SectionTriangle {
            triangle: Triangle2D::from_arrays([[1.0, 1.0], [2.0, 1.0], [1.0, 2.0]]).unwrap(),
        };
        assert!(matches!(sigma_from_section(&outside, 1.0), Err(Error::InconsistentInput(_))));
    }

    #[test]
    fn permutation_distance_examples() {
        let s = CovarianceMatrix3::new([[2.0, 0.3, -0.1], [0.3, 1.0, 0.2], [-0.1, 0.2, 3.0]]);
        let r = permutation_distance(&s, &s);
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.permutation, [0, 1, 2]);
        let swapped = s.permuted([1, 0, 2]);
        assert_eq!(permutation_distance(&s, &swapped).distance, 0.0);

        // brute force over all six permutations, written out independently
        let a = CovarianceMatrix3::<f64>::identity();
        let b = CovarianceMatrix3::diagonal([1.0, 1.0, 4.0]);
        let mut brute = f64::INFINITY;
        for p in PERMUTATIONS {
            let mut acc = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    let pa: f64 = if p[i] == p[j] { 1.0 } else { 0.0 };
                    acc += (pa - b.rows()[i][j]).powi(2);
                }
            }
            brute = brute.min(acc.sqrt());
        }
        assert_eq!(brute, 3.0);
        assert_eq!(permutation_distance(&a, &b).distance, 3.0);
    }

    #[test]
    fn homogeneity_of_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let s = random_admissible(&mut rng, 0.0);
            let r1 = standard_square_root(&s).unwrap();
            let r2 = standard_square_root(&s.scaled(2.25)).unwrap();
            let t1 = section_triangle(&r1).unwrap().triangle;
            let t2 = section_triangle(&r2).unwrap().triangle;
            assert!((r2.kappa - r1.kappa / 1.5).abs() < 1e-12 * r1.kappa);
            for (p, q) in t1.vertices.iter().zip(t2.vertices) {
                assert!(p.sub(q).norm() < 1e-9 * (1.0 + p.norm()));
            }
        }
    }

    #[test]
    fn cone_positivity_and_interiority() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = random_admissible(&mut rng, 0.0);
            let root = standard_square_root(&s).unwrap();
            let tri = section_triangle(&root).unwrap().triangle;
            assert!(tri.barycentric(Point2::default()).iter().all(|&w| w > 0.0));
            for _ in 0..100 {
                let mut w: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>());
                let tot: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= tot);
                let mut u = [0.0; 3];
                for (k, p) in tri.vertices.iter().enumerate() {
                    u[0] += w[k];
                    u[1] += w[k] * p.x;
                    u[2] += w[k] * p.y;
                }
                let nu = root.matrix.mul_vec(u);
                let scale = nu.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
                assert!(nu.iter().all(|&v| v >= -1e-10 * scale));
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let s = CovarianceMatrix3::<f32>::diagonal([1.0, 4.0, 9.0]);
        let root = standard_square_root(&s).unwrap();
        let tri = section_triangle(&root).unwrap();
        let back = sigma_from_section(&tri, root.kappa).unwrap();
        assert!(permutation_distance(&back, &s).distance < 1e-4);
    }
}
