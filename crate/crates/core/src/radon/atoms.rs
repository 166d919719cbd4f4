//! Basis atoms `Φ_{a,b}` and the signed six-subtriangle decomposition.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Triangle2D};
use crate::scalar::Scalar;

/// Tolerance on the foot parameter `s` for a foot sitting on a vertex.
pub const TAU_CASE: f64 = 1e-9;

/// Sides as vertex index pairs `(p, q)`: `xy`, `yz`, `xz`.
pub const SIDES: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

/// Transform of the right triangle `T(a, b)` at radius `rho`.
pub fn phi<T: Scalar>(a: T, b: T, rho: T) -> Result<T> {
    if !(a > T::zero()) || !(b >= a) || !b.is_finite() {
        return Err(Error::Domain(format!("phi needs 0 < a <= b, got a = {}, b = {}", a.as_f64(), b.as_f64())));
    }
    if !(rho >= T::zero()) {
        return Err(Error::Domain(format!("phi needs rho >= 0, got {}", rho.as_f64())));
    }
    Ok(phi_unchecked(a, b, rho))
}

#[inline]
pub(crate) fn phi_unchecked<T: Scalar>(a: T, b: T, rho: T) -> T {
    if rho >= b {
        T::zero()
    } else if rho <= a {
        (a / b).min(T::one()).acos()
    } else {
        (a / b).min(T::one()).acos() - (a / rho).acos()
    }
}

/// `conv((0,0), (a,0), (a, √(b²−a²)))`.
pub fn basic_triangle<T: Scalar>(a: T, b: T) -> Result<Triangle2D<T>> {
    if !(a > T::zero()) || !(b >= a) {
        return Err(Error::Domain(format!("basic triangle needs 0 < a <= b, got ({}, {})", a.as_f64(), b.as_f64())));
    }
    Triangle2D::new([Point2::new(T::zero(), T::zero()), Point2::new(a, T::zero()), Point2::new(a, (b * b - a * a).sqrt())])
}

/// Orthogonal projection of the origin onto a side's supporting line:
/// `point = s·p + (1−s)·q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Foot<T> {
    pub point: Point2<T>,
    pub s: T,
    pub distance: T,
}

/// Feet on the lines `xy`, `yz`, `xz`.
pub fn heights<T: Scalar>(t: &Triangle2D<T>) -> [Foot<T>; 3] {
    SIDES.map(|(i, j)| {
        let (p, q) = (t.vertices[i], t.vertices[j]);
        let d = p.sub(q);
        let s = -q.dot(d) / d.dot(d);
        let point = q.add(d.scale(s));
        Foot { point, s, distance: point.norm() }
    })
}

/// Position of the perpendicular feet relative to their sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "case", content = "side")]
pub enum TriangleCase {
    /// All feet strictly inside their sides.
    I,
    /// The foot of `side` lies outside it.
    II(usize),
    /// The foot of `side` coincides with a vertex.
    III(usize),
}

impl TriangleCase {
    pub fn label(&self) -> &'static str {
        match self {
            TriangleCase::I => "I",
            TriangleCase::II(_) => "II",
            TriangleCase::III(_) => "III",
        }
    }

    pub fn side(&self) -> Option<usize> {
        match *self {
            TriangleCase::I => None,
            TriangleCase::II(s) | TriangleCase::III(s) => Some(s),
        }
    }
}

enum FootKind {
    Interior,
    AtP,
    AtQ,
    BeyondP,
    BeyondQ,
}

fn foot_kind<T: Scalar>(s: T) -> FootKind {
    let tau = T::lit(TAU_CASE);
    if s.abs() <= tau {
        FootKind::AtQ
    } else if (T::one() - s).abs() <= tau {
        FootKind::AtP
    } else if s > T::one() {
        FootKind::BeyondP
    } else if s < T::zero() {
        FootKind::BeyondQ
    } else {
        FootKind::Interior
    }
}

fn require_enclosing<T: Scalar>(t: &Triangle2D<T>) -> Result<()> {
    if t.is_enclosing() {
        Ok(())
    } else {
        Err(Error::Domain("triangle does not strictly enclose the origin".into()))
    }
}

pub fn classify_case<T: Scalar>(t: &Triangle2D<T>) -> Result<TriangleCase> {
    require_enclosing(t)?;
    let feet = heights(t);
    let mut outside = None;
    for (k, f) in feet.iter().enumerate() {
        match foot_kind(f.s) {
            FootKind::AtP | FootKind::AtQ => return Ok(TriangleCase::III(k)),
            FootKind::BeyondP | FootKind::BeyondQ => outside = outside.or(Some(k)),
            FootKind::Interior => {}
        }
    }
    Ok(outside.map_or(TriangleCase::I, TriangleCase::II))
}

/// Signed atom `c·Φ_{a,b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom<T> {
    pub a: T,
    pub b: T,
    pub c: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomSet<T> {
    pub atoms: Vec<Atom<T>>,
}

impl<T: Scalar> AtomSet<T> {
    pub fn coefficient_sum(&self) -> i32 {
        self.atoms.iter().map(|a| a.c as i32).sum()
    }

    /// Case implied by the coefficient sum (6, 4 or 5).
    pub fn case_label(&self) -> Option<&'static str> {
        match self.coefficient_sum() {
            6 => Some("I"),
            4 => Some("II"),
            5 => Some("III"),
            _ => None,
        }
    }

    pub fn max_b(&self) -> T {
        self.atoms.iter().fold(T::zero(), |m, a| m.max(a.b))
    }

    pub fn eval(&self, rho: T) -> T {
        radon_from_atoms(self, rho)
    }
}

/// Atoms in the order `(η₁,r_x),(η₁,r_y),(η₂,r_y),(η₂,r_z),(η₃,r_x),(η₃,r_z)`,
/// with the degenerate atom of a case-III side left out.
pub fn decompose_atoms<T: Scalar>(t: &Triangle2D<T>) -> Result<AtomSet<T>> {
    require_enclosing(t)?;
    let r = t.vertex_distances();
    let feet = heights(t);
    let mut atoms = Vec::with_capacity(6);
    for (k, &(i, j)) in SIDES.iter().enumerate() {
        let eta = feet[k].distance;
        let (cp, cq): (Option<i8>, Option<i8>) = match foot_kind(feet[k].s) {
            FootKind::Interior => (Some(1), Some(1)),
            FootKind::AtP => (None, Some(1)),
            FootKind::AtQ => (Some(1), None),
            FootKind::BeyondP => (Some(-1), Some(1)),
            FootKind::BeyondQ => (Some(1), Some(-1)),
        };
        if let Some(c) = cp {
            atoms.push(Atom { a: eta.min(r[i]), b: r[i], c });
        }
        if let Some(c) = cq {
            atoms.push(Atom { a: eta.min(r[j]), b: r[j], c });
        }
    }
    Ok(AtomSet { atoms })
}

pub fn radon_from_atoms<T: Scalar>(atoms: &AtomSet<T>, rho: T) -> T {
    atoms
        .atoms
        .iter()
        .fold(T::zero(), |s, at| s + T::lit(at.c as f64) * phi_unchecked(at.a, at.b, rho))
}
