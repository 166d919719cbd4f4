//! Parametric form `(r_x, η₁, r_y, η₂, r_z, η₃)`: alternating vertex and
//! foot distances around the triangle, with side `i` joining vertices `i` and
//! `i+1 (mod 3)` and carrying height `ηᵢ₊₁`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Triangle2D};
use crate::radon::atoms::{classify_case, heights, Atom, AtomSet, TriangleCase};
use crate::scalar::Scalar;

/// Closure tolerance on the sum of central angles.
pub const TAU_CLOSE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParametricForm<T> {
    pub values: [T; 6],
    /// Side indices follow the sextuple (side `i` between entries `2i` and `2i+2`).
    pub case: TriangleCase,
}

impl<T: Scalar> ParametricForm<T> {
    pub fn vertices(&self) -> [T; 3] {
        [self.values[0], self.values[2], self.values[4]]
    }

    pub fn heights(&self) -> [T; 3] {
        [self.values[1], self.values[3], self.values[5]]
    }

    /// The six relabelings by rotation and reflection of the vertex cycle.
    pub fn dihedral_images(&self) -> [[T; 6]; 6] {
        let v = self.values;
        let rot = |s: [T; 6]| [s[2], s[3], s[4], s[5], s[0], s[1]];
        let refl = [v[0], v[5], v[4], v[3], v[2], v[1]];
        let r1 = rot(v);
        let r2 = rot(r1);
        let f1 = rot(refl);
        let f2 = rot(f1);
        [v, r1, r2, refl, f1, f2]
    }

    /// Sup-norm distance minimized over relabelings.
    pub fn distance(&self, other: &Self) -> T {
        other
            .dihedral_images()
            .iter()
            .map(|img| self.values.iter().zip(img).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
            .fold(T::infinity(), |m, d| m.min(d))
    }
}

/// Parametric form read off the geometry of an enclosing triangle.
pub fn parametric_form<T: Scalar>(t: &Triangle2D<T>) -> Result<ParametricForm<T>> {
    // side xz of the triangle is the closing side zx of the sextuple
    let case = classify_case(t)?;
    let r = t.vertex_distances();
    let f = heights(t);
    Ok(ParametricForm {
        values: [r[0], f[0].distance.min(r[0]).min(r[1]), r[1], f[1].distance.min(r[1]).min(r[2]), r[2], f[2].distance.min(r[0]).min(r[2])],
        case,
    })
}

fn group_ids<T: Scalar>(vals: &[T], tol: T) -> (Vec<usize>, Vec<T>) {
    let mut reps: Vec<T> = Vec::new();
    let mut ids = Vec::with_capacity(vals.len());
    for &v in vals {
        match reps.iter().position(|&r| (r - v).abs() <= tol) {
            Some(i) => ids.push(i),
            None => {
                reps.push(v);
                ids.push(reps.len() - 1);
            }
        }
    }
    (ids, reps)
}

fn permutations3() -> [[usize; 3]; 6] {
    crate::covariance::PERMUTATIONS
}

/// Arranges a valid atom set into its parametric form.
pub fn pairs_to_parametric<T: Scalar>(atoms: &AtomSet<T>) -> Result<ParametricForm<T>> {
    let n = atoms.atoms.len();
    if !(n == 5 || n == 6) {
        return Err(Error::MalformedAtoms(format!("expected 5 or 6 atoms, got {n}")));
    }
    let scale = atoms.max_b();
    if !(scale > T::zero()) {
        return Err(Error::MalformedAtoms("atoms have no positive vertex distance".into()));
    }
    let tol = T::lit(1e-9) * scale;
    let mut list: Vec<Atom<T>> = atoms.atoms.clone();
    if list.iter().any(|a| !(a.a > T::zero()) || a.a > a.b + tol || !(a.c == 1 || a.c == -1)) {
        return Err(Error::MalformedAtoms("atoms need 0 < a <= b and c = ±1".into()));
    }
    let negatives = list.iter().filter(|a| a.c == -1).count();
    if negatives > 1 || (n == 5 && negatives > 0) {
        return Err(Error::MalformedAtoms("coefficient pattern is not 6, 4 or 5".into()));
    }
    let all_a: Vec<T> = list.iter().map(|a| a.a).collect();
    let all_b: Vec<T> = list.iter().map(|a| a.b).collect();
    let (_, a_reps) = group_ids(&all_a, tol);
    let (_, b_reps) = group_ids(&all_b, tol);
    let count = |reps: &[T], vals: &[T], i: usize| vals.iter().filter(|&&v| (v - reps[i]).abs() <= tol).count();
    if n == 5 {
        // restore the degenerate pair: the odd-multiplicity height equals the
        // odd-multiplicity vertex distance
        let odd_a: Vec<usize> = (0..a_reps.len()).filter(|&i| count(&a_reps, &all_a, i) % 2 == 1).collect();
        let odd_b: Vec<usize> = (0..b_reps.len()).filter(|&i| count(&b_reps, &all_b, i) % 2 == 1).collect();
        if odd_a.len() != 1 || odd_b.len() != 1 {
            return Err(Error::MalformedAtoms("five atoms without a single missing degenerate pair".into()));
        }
        let (va, vb) = (a_reps[odd_a[0]], b_reps[odd_b[0]]);
        if (va - vb).abs() > tol {
            return Err(Error::MalformedAtoms("missing pair is not degenerate".into()));
        }
        list.push(Atom { a: vb, b: vb, c: 0 });
    }
    let all_a: Vec<T> = list.iter().map(|a| a.a).collect();
    let all_b: Vec<T> = list.iter().map(|a| a.b).collect();
    let (a_ids, a_reps) = group_ids(&all_a, tol);
    let (b_ids, b_reps) = group_ids(&all_b, tol);

    // each height and each vertex distance appears on exactly two atoms
    let mut heights_list = Vec::new();
    for i in 0..a_reps.len() {
        let c = a_ids.iter().filter(|&&x| x == i).count();
        if c % 2 == 1 {
            return Err(Error::MalformedAtoms("a height value appears an odd number of times".into()));
        }
        heights_list.extend(std::iter::repeat_n(i, c / 2));
    }
    let mut verts_list = Vec::new();
    for i in 0..b_reps.len() {
        let c = b_ids.iter().filter(|&&x| x == i).count();
        if c % 2 == 1 {
            return Err(Error::MalformedAtoms("a vertex value appears an odd number of times".into()));
        }
        verts_list.extend(std::iter::repeat_n(i, c / 2));
    }
    if heights_list.len() != 3 || verts_list.len() != 3 {
        return Err(Error::MalformedAtoms("pairing is not a 6-cycle".into()));
    }
    let mut target: Vec<(usize, usize)> = a_ids.iter().zip(&b_ids).map(|(&a, &b)| (a, b)).collect();
    target.sort_unstable();
    let special = list
        .iter()
        .position(|a| a.c != 1)
        .map(|k| (a_ids[k], b_ids[k], list[k].c));

    let mut best: Option<ParametricForm<T>> = None;
    for pv in permutations3() {
        for ph in permutations3() {
            let v = [verts_list[pv[0]], verts_list[pv[1]], verts_list[pv[2]]];
            let h = [heights_list[ph[0]], heights_list[ph[1]], heights_list[ph[2]]];
            let mut pairs = Vec::with_capacity(6);
            for i in 0..3 {
                pairs.push((h[i], v[i]));
                pairs.push((h[i], v[(i + 1) % 3]));
            }
            let mut sorted = pairs.clone();
            sorted.sort_unstable();
            if sorted != target {
                continue;
            }
            let values = [
                b_reps[v[0]],
                a_reps[h[0]],
                b_reps[v[1]],
                a_reps[h[1]],
                b_reps[v[2]],
                a_reps[h[2]],
            ];
            let case = match special {
                None => TriangleCase::I,
                Some((sa, sb, c)) => {
                    let side = (0..3)
                        .find(|&i| (h[i], v[i]) == (sa, sb) || (h[i], v[(i + 1) % 3]) == (sa, sb))
                        .expect("special atom is part of the matched cycle");
                    if c == -1 {
                        TriangleCase::II(side)
                    } else {
                        TriangleCase::III(side)
                    }
                }
            };
            let cand = ParametricForm { values, case };
            let better = match &best {
                None => true,
                Some(b) => lex_less(&cand.values, &b.values),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best.ok_or_else(|| Error::MalformedAtoms("pairing is not a single 6-cycle".into()))
}

fn lex_less<T: Scalar>(a: &[T; 6], b: &[T; 6]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

fn central_half_angle<T: Scalar>(eta: T, r: T) -> T {
    (eta / r).min(T::one()).acos()
}

/// Counterclockwise triangle with vertex `x` on the positive horizontal axis.
pub fn triangle_from_parametric<T: Scalar>(pf: &ParametricForm<T>) -> Result<Triangle2D<T>> {
    let v = pf.vertices();
    let h = pf.heights();
    let slack = T::one() + T::lit(1e-12);
    if pf.values.iter().any(|x| !(x.is_finite() && *x > T::zero())) {
        return Err(Error::InconsistentParametricForm("entries must be finite and positive".into()));
    }
    for i in 0..3 {
        if h[i] > v[i].min(v[(i + 1) % 3]) * slack {
            return Err(Error::InconsistentParametricForm(format!(
                "height {} exceeds an adjacent vertex distance",
                i + 1
            )));
        }
    }
    let halves: [(T, T); 3] = std::array::from_fn(|i| (central_half_angle(h[i], v[i]), central_half_angle(h[i], v[(i + 1) % 3])));
    let gaps_for = |diff_side: Option<usize>| -> [T; 3] {
        std::array::from_fn(|i| {
            let (a, b) = halves[i];
            if diff_side == Some(i) {
                (a - b).abs()
            } else {
                a + b
            }
        })
    };
    let preferred = match pf.case {
        TriangleCase::II(s) => Some(s),
        _ => None,
    };
    let mut patterns = vec![preferred];
    for p in [None, Some(0), Some(1), Some(2)] {
        if !patterns.contains(&p) {
            patterns.push(p);
        }
    }
    let tau = T::lit(TAU_CLOSE);
    for p in patterns {
        let g = gaps_for(p);
        let total = g[0] + g[1] + g[2];
        if (total - T::two_pi()).abs() <= tau && g.iter().all(|&x| x < T::PI()) {
            let verts = [
                Point2::new(v[0], T::zero()),
                Point2::polar(v[1], g[0]),
                Point2::polar(v[2], g[0] + g[1]),
            ];
            return Triangle2D::new(verts);
        }
    }
    Err(Error::InconsistentParametricForm("no sign pattern closes the central angles to 2π".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radon::atoms::decompose_atoms;
    use std::f64::consts::PI;

    fn equilateral() -> Triangle2D<f64> {
        let r = 2f64.sqrt();
        Triangle2D::new([0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0].map(|t| Point2::polar(r, t))).unwrap()
    }

    #[test]
    fn equilateral_round_trip() {
        let atoms = decompose_atoms(&equilateral()).unwrap();
        let pf = pairs_to_parametric(&atoms).unwrap();
        let (r, h) = (2f64.sqrt(), 2f64.sqrt() / 2.0);
        let expect = [r, h, r, h, r, h];
        for (a, b) in pf.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let t = triangle_from_parametric(&pf).unwrap();
        let ang: Vec<f64> = t.vertices.iter().map(|p| p.y.atan2(p.x).rem_euclid(2.0 * PI)).collect();
        assert!(ang[0].abs() < 1e-14 && (ang[1] - 2.0 * PI / 3.0).abs() < 1e-12 && (ang[2] - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!(t.vertices.iter().all(|p| (p.norm() - r).abs() < 1e-14));
    }

    #[test]
    fn scalene_atoms_give_geometric_form() {
        let t = Triangle2D::<f64>::from_arrays([[0.1, 0.9], [0.1, -2.0], [-1.0, 0.3]]).unwrap();
        let geo = parametric_form(&t).unwrap();
        let pf = pairs_to_parametric(&decompose_atoms(&t).unwrap()).unwrap();
        assert!(geo.distance(&pf) < 1e-14);
        let back = triangle_from_parametric(&pf).unwrap();
        let again = parametric_form(&back).unwrap();
        assert!(again.distance(&geo) < 1e-8);
        // congruence: sorted side lengths agree
        let mut s1 = t.side_lengths();
        let mut s2 = back.side_lengths();
        s1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s2.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in s1.iter().zip(s2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn case_two_and_three_round_trip() {
        for arr in [[[1.0, 0.0], [1.5, -2.0], [-1.0, 1.0]], [[1.0, 0.0], [1.0, -2.0], [-1.0, 1.0]]] {
            let t = Triangle2D::<f64>::from_arrays(arr).unwrap();
            let geo = parametric_form(&t).unwrap();
            let atoms = decompose_atoms(&t).unwrap();
            let pf = pairs_to_parametric(&atoms).unwrap();
            assert_eq!(pf.case.label(), geo.case.label());
            assert!(geo.distance(&pf) < 1e-12, "{:?} vs {:?}", geo, pf);
            let back = triangle_from_parametric(&pf).unwrap();
            assert!(parametric_form(&back).unwrap().distance(&geo) < 1e-8);
        }
        let t = Triangle2D::<f64>::from_arrays([[1.0, 0.0], [1.0, -2.0], [-1.0, 1.0]]).unwrap();
        let pf = pairs_to_parametric(&decompose_atoms(&t).unwrap()).unwrap();
        // the restored degenerate pair sits next to a vertex distance of 1
        assert!(matches!(pf.case, TriangleCase::III(_)));
        let side = pf.case.side().unwrap();
        let hv = pf.heights()[side];
        assert!((hv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_forms_are_rejected() {
        let pf = ParametricForm { values: [1.0, 1.5, 1.0, 0.5, 1.0, 0.5], case: TriangleCase::I };
        assert!(matches!(triangle_from_parametric(&pf), Err(Error::InconsistentParametricForm(_))));
        let pf = ParametricForm { values: [1.0, 0.1, 1.0, 0.1, 1.0, 0.1], case: TriangleCase::I };
        assert!(triangle_from_parametric(&pf).is_err());
        let bad = AtomSet { atoms: vec![Atom { a: 1.0, b: 2.0, c: 1 }; 4] };
        assert!(pairs_to_parametric(&bad).is_err());
    }

    #[test]
    fn dihedral_distance_is_relabeling_invariant() {
        let t = Triangle2D::<f64>::from_arrays([[0.1, 0.9], [0.1, -2.0], [-1.0, 0.3]]).unwrap();
        let a = parametric_form(&t).unwrap();
        let [x, y, z] = t.vertices;
        let b = parametric_form(&Triangle2D::new([y, z, x]).unwrap()).unwrap();
        let c = parametric_form(&Triangle2D::new([x, z, y]).unwrap()).unwrap();
        assert!(a.distance(&b) < 1e-15 && a.distance(&c) < 1e-15);
    }
}
