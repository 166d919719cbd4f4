//! Fitting a sampled profile by signed atoms whose parameters are the
//! detected breakpoints.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, symmetric_eigenvalues};
use crate::radon::atoms::{phi_unchecked, Atom, AtomSet};
use crate::radon::breakpoints::detect_breakpoints;
use crate::radon::profile::RadonProfile;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions<T> {
    /// Accepted residual sum of squares per grid point.
    pub eps_fit_per_point: T,
    /// Largest distance of a fitted coefficient from its integer value.
    pub coefficient_tolerance: T,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        FitOptions { eps_fit_per_point: T::lit(1e-6), coefficient_tolerance: T::lit(0.1) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomFit<T> {
    pub atoms: AtomSet<T>,
    /// Residual sum of squares on the grid.
    pub residual: T,
    pub breakpoints: Vec<T>,
    /// Distinct pairings tried.
    pub candidates: usize,
    /// Another pairing fits within 1e-12 of the optimum.
    pub ambiguous: bool,
    /// Condition number of the fitted design matrix.
    pub condition_number: T,
}

pub fn fit_atoms<T: Scalar>(profile: &RadonProfile<T>) -> Result<AtomFit<T>> {
    let bps = detect_breakpoints(profile)?;
    fit_atoms_with(profile, &bps, &FitOptions::default())
}

/// Sextuple of breakpoint indices `(b₀, a₀, b₁, a₁, b₂, a₂)`; side `i` pairs
/// `aᵢ` with `bᵢ` and `bᵢ₊₁`.
type Sextuple = [usize; 6];

fn pairs_of(s: &Sextuple) -> [(usize, usize); 6] {
    let (b, a) = ([s[0], s[2], s[4]], [s[1], s[3], s[5]]);
    [(a[0], b[0]), (a[0], b[1]), (a[1], b[1]), (a[1], b[2]), (a[2], b[2]), (a[2], b[0])]
}

fn admissible_sextuples(k: usize) -> Vec<Sextuple> {
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
    let total = k.pow(6);
    for code in 0..total {
        let mut s = [0usize; 6];
        let mut c = code;
        for slot in s.iter_mut() {
            *slot = c % k;
            c /= k;
        }
        let mut used = vec![false; k];
        s.iter().for_each(|&i| used[i] = true);
        if used.iter().any(|u| !u) {
            continue;
        }
        let pairs = pairs_of(&s);
        if pairs.iter().any(|&(a, b)| a > b) {
            continue;
        }
        if pairs.iter().filter(|&&(a, b)| a == b).count() > 1 {
            continue;
        }
        let mut key = pairs.to_vec();
        key.sort_unstable();
        if seen.insert(key) {
            out.push(s);
        }
    }
    out
}

/// Sextuples over `k` visible breakpoints plus a hidden height with index
/// `k`. The hidden height belongs to a side whose foot lies outside it: the
/// square-root singularities of its two atoms cancel, so it is no kink.
fn hidden_sextuples(k: usize) -> Vec<(Sextuple, usize)> {
    let n = k + 1;
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
    for code in 0..n.pow(6) {
        let mut s = [0usize; 6];
        let mut c = code;
        for slot in s.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        if [s[0], s[2], s[4]].contains(&k) || [s[1], s[3], s[5]].iter().filter(|&&i| i == k).count() != 1 {
            continue;
        }
        let mut used = vec![false; n];
        s.iter().for_each(|&i| used[i] = true);
        if used.iter().any(|u| !u) {
            continue;
        }
        let pairs = pairs_of(&s);
        if pairs.iter().any(|&(a, b)| a != k && a >= b) {
            continue;
        }
        let side = [s[1], s[3], s[5]].iter().position(|&i| i == k).unwrap();
        if pairs[2 * side].1 == pairs[2 * side + 1].1 {
            continue;
        }
        let mut key = pairs.to_vec();
        key.sort_unstable();
        if seen.insert(key) {
            out.push((s, side));
        }
    }
    out
}

/// Hidden height on `side` fixed by the angles around the origin summing to 2π.
fn closure_height<T: Scalar>(values: &[T], s: &Sextuple, side: usize) -> Option<T> {
    let pairs = pairs_of(s);
    let mut other = T::zero();
    for i in (0..3).filter(|&i| i != side) {
        let (a, b0) = pairs[2 * i];
        let b1 = pairs[2 * i + 1].1;
        other = other + (values[a] / values[b0]).min(T::one()).acos() + (values[a] / values[b1]).min(T::one()).acos();
    }
    let target = T::two_pi() - other;
    let (u, v) = (values[pairs[2 * side].1], values[pairs[2 * side + 1].1]);
    let (rp, rq) = if u < v { (u, v) } else { (v, u) };
    let gap = |h: T| (h / rq).acos() - (h / rp).min(T::one()).acos();
    if !(target > T::zero() && target < gap(rp)) {
        return None;
    }
    let (mut lo, mut hi) = (T::zero(), rp);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = (lo + hi) * T::lit(0.5);
    // a height at a vertex distance is the degenerate pair, fitted without hiding
    (h < rp * (T::one() - T::lit(1e-9))).then_some(h)
}

/// Pairs with multiplicity, degenerate pairs dropped.
fn distinct_pairs(pairs: &[(usize, usize)]) -> Vec<((usize, usize), usize)> {
    let mut distinct: Vec<((usize, usize), usize)> = Vec::new();
    for &(a, b) in pairs.iter().filter(|&&(a, b)| a != b) {
        match distinct.iter_mut().find(|(p, _)| *p == (a, b)) {
            Some((_, m)) => *m += 1,
            None => distinct.push(((a, b), 1)),
        }
    }
    distinct
}

/// Integer coefficient pattern, if the fitted values allow one.
fn integer_pattern<T: Scalar>(
    distinct: &[((usize, usize), usize)],
    coef: &[T],
    has_degenerate: bool,
    tol: T,
) -> Option<Vec<(usize, usize, i32)>> {
    let mut negatives = 0;
    let mut out = Vec::with_capacity(distinct.len());
    for (&((a, b), mult), &c) in distinct.iter().zip(coef) {
        let r = c.round();
        if (c - r).abs() > tol {
            return None;
        }
        let r = r.to_i32()?;
        let m = mult as i32;
        if r == m - 2 {
            negatives += 1;
        } else if r != m {
            return None;
        }
        out.push((a, b, r));
    }
    if negatives > 1 || (has_degenerate && negatives > 0) {
        return None;
    }
    Some(out)
}

struct Candidate<T> {
    residual: T,
    atoms: Vec<Atom<T>>,
}

/// Expands a fitted pattern to atoms in sextuple order; a pair fitted with
/// coefficient `m − 2` gets its first copy negative.
fn expand<T: Scalar>(pairs: &[(usize, usize); 6], pattern: &[(usize, usize, i32)], values: &[T], negative: Option<(usize, usize)>) -> Vec<Atom<T>> {
    let mut lowered: Vec<(usize, usize)> = pattern
        .iter()
        .filter(|&&(a, b, r)| r == pairs.iter().filter(|&&p| p == (a, b)).count() as i32 - 2)
        .map(|&(a, b, _)| (a, b))
        .chain(negative)
        .collect();
    let mut atoms = Vec::with_capacity(6);
    for &(a, b) in pairs {
        if a == b {
            continue;
        }
        let c = match lowered.iter().position(|&p| p == (a, b)) {
            Some(pos) => {
                lowered.remove(pos);
                -1
            }
            None => 1,
        };
        atoms.push(Atom { a: values[a], b: values[b], c });
    }
    atoms
}

pub fn fit_atoms_with<T: Scalar>(profile: &RadonProfile<T>, breakpoints: &[T], opts: &FitOptions<T>) -> Result<AtomFit<T>> {
    let k = breakpoints.len();
    if !(2..=6).contains(&k) {
        return Err(Error::NotATriangleTransform { best_residual: f64::INFINITY });
    }
    let rho = &profile.rho;
    let y = &profile.values;
    let mut cache: HashMap<(usize, usize), Vec<T>> = HashMap::new();
    let mut column = |a: usize, b: usize| -> Vec<T> {
        cache
            .entry((a, b))
            .or_insert_with(|| rho.iter().map(|&r| phi_unchecked(breakpoints[a], breakpoints[b], r)).collect())
            .clone()
    };

    let mut best: Option<Candidate<T>> = None;
    let mut runner_up = T::infinity();
    let mut best_any = T::infinity();
    let mut offer = |cand: Candidate<T>, best: &mut Option<Candidate<T>>| match best {
        Some(b) if !(cand.residual < b.residual) => runner_up = runner_up.min(cand.residual),
        _ => {
            if let Some(b) = best.as_ref() {
                runner_up = runner_up.min(b.residual);
            }
            *best = Some(cand);
        }
    };

    let sextuples = admissible_sextuples(k);
    for s in &sextuples {
        let pairs = pairs_of(s);
        let has_degenerate = pairs.iter().any(|&(a, b)| a == b);
        let distinct = distinct_pairs(&pairs);
        let cols: Vec<Vec<T>> = distinct.iter().map(|&((a, b), _)| column(a, b)).collect();
        let Some((coef, rss)) = least_squares(&cols, y) else { continue };
        best_any = best_any.min(rss);
        let Some(pattern) = integer_pattern(&distinct, &coef, has_degenerate, opts.coefficient_tolerance) else {
            continue;
        };
        offer(Candidate { residual: rss, atoms: expand(&pairs, &pattern, breakpoints, None) }, &mut best);
    }

    let hidden = if k <= 5 { hidden_sextuples(k) } else { Vec::new() };
    for (s, side) in &hidden {
        let mut values = breakpoints.to_vec();
        values.push(T::zero());
        let Some(h) = closure_height(&values, s, *side) else { continue };
        values[k] = h;
        let pairs = pairs_of(s);
        let (p0, p1) = (pairs[2 * side], pairs[2 * side + 1]);
        let (neg, pos) = if values[p0.1] < values[p1.1] { (p0, p1) } else { (p1, p0) };
        let target: Vec<T> = rho
            .iter()
            .zip(y)
            .map(|(&r, &v)| v + phi_unchecked(h, values[neg.1], r) - phi_unchecked(h, values[pos.1], r))
            .collect();
        let rest: Vec<(usize, usize)> = pairs.iter().copied().filter(|&(a, _)| a != k).collect();
        let distinct = distinct_pairs(&rest);
        let cols: Vec<Vec<T>> = distinct.iter().map(|&((a, b), _)| column(a, b)).collect();
        let Some((coef, rss)) = least_squares(&cols, &target) else { continue };
        best_any = best_any.min(rss);
        // exactly one negative atom, already placed on the hidden side
        let Some(pattern) = integer_pattern(&distinct, &coef, true, opts.coefficient_tolerance) else { continue };
        offer(Candidate { residual: rss, atoms: expand(&pairs, &pattern, &values, Some(neg)) }, &mut best);
    }

    let n = T::from_usize(rho.len()).unwrap();
    let Some(best) = best else {
        return Err(Error::NotATriangleTransform { best_residual: best_any.as_f64() });
    };
    if !(best.residual <= opts.eps_fit_per_point * n) {
        return Err(Error::NotATriangleTransform { best_residual: best.residual.as_f64() });
    }

    let mut distinct: Vec<(T, T)> = Vec::new();
    for a in &best.atoms {
        if !distinct.contains(&(a.a, a.b)) {
            distinct.push((a.a, a.b));
        }
    }
    let cols: Vec<Vec<T>> = distinct.iter().map(|&(a, b)| rho.iter().map(|&r| phi_unchecked(a, b, r)).collect()).collect();
    let gram: Vec<Vec<T>> = cols
        .iter()
        .map(|ci| cols.iter().map(|cj| ci.iter().zip(cj).fold(T::zero(), |s, (&x, &y)| s + x * y)).collect())
        .collect();
    let ev = symmetric_eigenvalues(&gram);
    let condition_number = if ev[0] > T::zero() { (ev[ev.len() - 1] / ev[0]).sqrt() } else { T::infinity() };

    Ok(AtomFit {
        atoms: AtomSet { atoms: best.atoms },
        residual: best.residual,
        breakpoints: breakpoints.to_vec(),
        candidates: sextuples.len() + hidden.len(),
        ambiguous: runner_up - best.residual <= T::lit(1e-12),
        condition_number,
    })
}
