//! Exact circular transform by circle/edge intersection.

use crate::geometry::{Point2, Triangle2D};
use crate::scalar::Scalar;

/// Angular measure of `{θ : ρ(cos θ, sin θ) ∈ t}`. Works for any triangle,
/// enclosing the origin or not.
pub fn radon_exact<T: Scalar>(t: &Triangle2D<T>, rho: T) -> T {
    let two_pi = T::two_pi();
    if !(rho > T::zero()) {
        return if t.contains(Point2::default()) { two_pi } else { T::zero() };
    }
    let mut angles: [T; 6] = [T::zero(); 6];
    let mut n = 0;
    let r2 = rho * rho;
    for k in 0..3 {
        let p = t.vertices[k];
        let d = t.vertices[(k + 1) % 3].sub(p);
        // |p + u d|² = ρ², u ∈ [0, 1]
        let a = d.dot(d);
        let b = p.dot(d);
        let c = p.dot(p) - r2;
        let disc = b * b - a * c;
        if disc < T::zero() {
            continue;
        }
        let sq = disc.sqrt();
        // numerically stable pair of roots
        let q = -(b + b.signum() * sq);
        let roots = if q == T::zero() { [-b / a, -b / a] } else { [q / a, c / q] };
        for u in roots {
            if u >= T::zero() && u <= T::one() {
                let pt = p.add(d.scale(u));
                let mut th = pt.y.atan2(pt.x);
                if th < T::zero() {
                    th = th + two_pi;
                }
                angles[n] = th;
                n += 1;
            }
        }
    }
    if n == 0 {
        return if t.contains(Point2::new(rho, T::zero())) { two_pi } else { T::zero() };
    }
    let angles = &mut angles[..n];
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let half = T::lit(0.5);
    let mut total = T::zero();
    for i in 0..n {
        let a0 = angles[i];
        let a1 = if i + 1 < n { angles[i + 1] } else { angles[0] + two_pi };
        let w = a1 - a0;
        if w <= T::zero() {
            continue;
        }
        let mid = a0 + w * half;
        if t.contains(Point2::polar(rho, mid)) {
            total = total + w;
        }
    }
    total
}

/// Isosceles triangles with the origin at the midpoint of the base: both are
/// two mirrored copies of the 3-4-5 right triangle with its right angle at the
/// origin, so their transforms agree, yet their sides are 5,5,6 and 5,5,8.
pub fn counterexample_pair() -> (Triangle2D<f64>, Triangle2D<f64>) {
    (
        Triangle2D::from_arrays([[-3.0, 0.0], [3.0, 0.0], [0.0, 4.0]]).expect("fixed triangle"),
        Triangle2D::from_arrays([[-4.0, 0.0], [4.0, 0.0], [0.0, 3.0]]).expect("fixed triangle"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn equilateral() -> Triangle2D<f64> {
        let r = 2f64.sqrt();
        Triangle2D::new([0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0].map(|t| Point2::polar(r, t))).unwrap()
    }

    /// Oracle: fraction of uniformly spaced angles landing inside.
    fn angular_oracle(t: &Triangle2D<f64>, rho: f64) -> f64 {
        let n = 1_000_000;
        let hits = (0..n).filter(|&k| t.contains(Point2::polar(rho, (k as f64 + 0.5) / n as f64 * 2.0 * PI))).count();
        hits as f64 / n as f64 * 2.0 * PI
    }

    #[test]
    fn examples() {
        assert!((radon_exact(&equilateral(), 0.3) - 2.0 * PI).abs() < 1e-15);
        let right = Triangle2D::<f64>::from_arrays([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert!((radon_exact(&right, 2.0) - PI / 2.0).abs() < 1e-14);
        assert!((angular_oracle(&right, 2.0) - PI / 2.0).abs() < 1e-5);
        assert_eq!(radon_exact(&right, 4.5), 0.0);
        assert_eq!(radon_exact(&equilateral(), 1.5), 0.0);
    }

    #[test]
    fn matches_sampling_oracle_on_crossing_radii() {
        let t = Triangle2D::<f64>::from_arrays([[1.0, 0.0], [1.5, -2.0], [-1.0, 1.0]]).unwrap();
        for rho in [0.2, 0.5, 0.9, 1.2, 1.9, 2.4] {
            let e = radon_exact(&t, rho);
            assert!((e - angular_oracle(&t, rho)).abs() < 2e-5, "rho {rho}");
        }
        let off = Triangle2D::<f64>::from_arrays([[0.5, 0.5], [2.0, 0.1], [1.0, 2.0]]).unwrap();
        for rho in [0.6, 1.0, 1.5, 2.1] {
            assert!((radon_exact(&off, rho) - angular_oracle(&off, rho)).abs() < 2e-5);
        }
    }

    #[test]
    fn tangent_circle_is_inside() {
        // inscribed distance of the equilateral triangle is √2/2
        let v = radon_exact(&equilateral(), 2f64.sqrt() / 2.0);
        assert!((v - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn isosceles_pair_shares_its_transform() {
        let (a, b) = counterexample_pair();
        for k in 0..=600 {
            let r = k as f64 * 0.01;
            assert!((radon_exact(&a, r) - radon_exact(&b, r)).abs() < 1e-12, "rho = {r}");
        }
        let (mut sa, mut sb) = (a.side_lengths(), b.side_lengths());
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        assert!((sa[2] - sb[2]).abs() > 1.0);
    }
}
