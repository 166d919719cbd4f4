//! Planar points and triangles.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Strict-interior threshold on the origin's barycentric coordinates.
pub const TAU_INTERIOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    pub fn polar(r: T, theta: T) -> Self {
        Point2 { x: r * theta.cos(), y: r * theta.sin() }
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn sub(self, o: Self) -> Self {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Self) -> Self {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: T) -> Self {
        Point2::new(self.x * s, self.y * s)
    }

    /// Applies the row-major 2×2 matrix `m`.
    pub fn map(self, m: &[[T; 2]; 2]) -> Self {
        Point2::new(m[0][0] * self.x + m[0][1] * self.y, m[1][0] * self.x + m[1][1] * self.y)
    }
}

/// Triangle with vertices `x, y, z` in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle2D<T> {
    pub vertices: [Point2<T>; 3],
}

impl<T: Scalar> Triangle2D<T> {
    /// Rejects triangles whose area is negligible relative to their size.
    pub fn new(vertices: [Point2<T>; 3]) -> Result<Self> {
        let t = Triangle2D { vertices };
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegenerateTriangle("non-finite vertex".into()));
        }
        let scale = {
            let [a, b, c] = vertices;
            b.sub(a).norm().max(c.sub(a).norm()).max(c.sub(b).norm())
        };
        if !(t.signed_area().abs() > T::lit(1e-14) * scale * scale) {
            return Err(Error::DegenerateTriangle("zero signed area".into()));
        }
        Ok(t)
    }

    pub fn from_arrays(v: [[T; 2]; 3]) -> Result<Self> {
        Self::new([Point2::new(v[0][0], v[0][1]), Point2::new(v[1][0], v[1][1]), Point2::new(v[2][0], v[2][1])])
    }

    pub fn to_arrays(&self) -> [[T; 2]; 3] {
        self.vertices.map(|p| [p.x, p.y])
    }

    pub fn signed_area(&self) -> T {
        let [a, b, c] = self.vertices;
        b.sub(a).cross(c.sub(a)) / T::lit(2.0)
    }

    pub fn area(&self) -> T {
        self.signed_area().abs()
    }

    /// Barycentric coordinates of `p` (they sum to one).
    pub fn barycentric(&self, p: Point2<T>) -> [T; 3] {
        let [a, b, c] = self.vertices;
        let total = b.sub(a).cross(c.sub(a));
        [
            b.sub(p).cross(c.sub(p)) / total,
            c.sub(p).cross(a.sub(p)) / total,
            a.sub(p).cross(b.sub(p)) / total,
        ]
    }

    /// True iff the origin is strictly interior.
    pub fn is_enclosing(&self) -> bool {
        let tau = T::lit(TAU_INTERIOR);
        self.barycentric(Point2::default()).iter().all(|&w| w > tau)
    }

    /// Closed point-in-triangle test.
    pub fn contains(&self, p: Point2<T>) -> bool {
        let [a, b, c] = self.vertices;
        let d1 = b.sub(a).cross(p.sub(a));
        let d2 = c.sub(b).cross(p.sub(b));
        let d3 = a.sub(c).cross(p.sub(c));
        let z = T::zero();
        let has_neg = d1 < z || d2 < z || d3 < z;
        let has_pos = d1 > z || d2 > z || d3 > z;
        !(has_neg && has_pos)
    }

    pub fn vertex_distances(&self) -> [T; 3] {
        self.vertices.map(|p| p.norm())
    }

    pub fn max_vertex_distance(&self) -> T {
        let d = self.vertex_distances();
        d[0].max(d[1]).max(d[2])
    }

    pub fn map(&self, m: &[[T; 2]; 2]) -> Self {
        Triangle2D { vertices: self.vertices.map(|p| p.map(m)) }
    }

    /// Same point set with the opposite vertex order.
    pub fn reversed(&self) -> Self {
        let [a, b, c] = self.vertices;
        Triangle2D { vertices: [a, c, b] }
    }

    pub fn side_lengths(&self) -> [T; 3] {
        let [a, b, c] = self.vertices;
        [b.sub(a).norm(), c.sub(b).norm(), a.sub(c).norm()]
    }
}

/// Rotation by `theta` composed with an optional reflection across the x axis.
pub fn orthogonal_2x2<T: Scalar>(theta: T, reflect: bool) -> [[T; 2]; 2] {
    let (s, c) = theta.sin_cos();
    if reflect {
        [[c, s], [s, -c]]
    } else {
        [[c, -s], [s, c]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_and_enclosure() {
        let t = Triangle2D::<f64>::from_arrays([[1.0, 0.0], [-0.5, 1.0], [-0.5, -1.0]]).unwrap();
        assert!((t.area() - 1.5).abs() < 1e-15);
        assert!(t.is_enclosing());
        let b = t.barycentric(Point2::default());
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let off = Triangle2D::from_arrays([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert!(!off.is_enclosing());
        assert!(off.contains(Point2::new(1.0, 1.0)));
        assert!(!off.contains(Point2::new(-0.1, 1.0)));
        assert!(Triangle2D::from_arrays([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
    }
}
