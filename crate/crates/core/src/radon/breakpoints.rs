//! Location of the radii where a transform profile loses smoothness.
//!
//! Grid slopes are differenced twice; a kink shows up as a spike in
//! `K_k = |D_k − (D_{k−1} + D_{k+1})/2|` where `D_k` is the jump in grid slope
//! at `ρ_k`. With an exact evaluator each spike is zoomed into until the
//! window reaches rounding level, then confirmed by comparing slope jumps at
//! two scales (a kink keeps its jump, a smooth point loses it linearly).

use crate::error::{Error, Result};
use crate::radon::profile::RadonProfile;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct BreakpointOptions<T> {
    /// Refine with the exact evaluator when the profile carries one.
    pub use_exact: bool,
    /// Absolute noise level of profile values; defaults to the attached error
    /// estimate, else to rounding level.
    pub noise: Option<T>,
    /// Grid-only mode: spikes weaker than this fraction of the strongest are ignored.
    pub min_relative_spike: T,
    /// Required separation between distinct breakpoints, in grid steps.
    pub min_separation_steps: T,
}

impl<T: Scalar> Default for BreakpointOptions<T> {
    fn default() -> Self {
        BreakpointOptions {
            use_exact: true,
            noise: None,
            min_relative_spike: T::zero(),
            min_separation_steps: T::lit(3.0),
        }
    }
}

pub fn detect_breakpoints<T: Scalar>(profile: &RadonProfile<T>) -> Result<Vec<T>> {
    detect_breakpoints_with(profile, &BreakpointOptions::default())
}

fn value_noise<T: Scalar>(profile: &RadonProfile<T>, opts: &BreakpointOptions<T>) -> T {
    if let Some(n) = opts.noise {
        return n;
    }
    let vmax = profile.values.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let rounding = T::lit(16.0) * T::epsilon() * vmax;
    match &profile.errors {
        Some(e) => e.iter().fold(rounding, |m, v| m.max(v.abs())),
        None => rounding,
    }
}

/// Slope jumps `D` at interior nodes and their kink indicator `K`.
fn kink_indicator<T: Scalar>(x: &[T], v: &[T]) -> (Vec<T>, Vec<T>) {
    let n = x.len();
    let slopes: Vec<T> = (0..n - 1).map(|k| (v[k + 1] - v[k]) / (x[k + 1] - x[k])).collect();
    let mut d = vec![T::zero(); n];
    for k in 1..n - 1 {
        d[k] = slopes[k] - slopes[k - 1];
    }
    let mut kk = vec![T::zero(); n];
    let half = T::lit(0.5);
    for k in 2..n.saturating_sub(2) {
        kk[k] = (d[k] - (d[k - 1] + d[k + 1]) * half).abs();
    }
    (d, kk)
}

fn argmax<T: Scalar>(v: &[T], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for j in lo..hi {
        if v[j] > v[best] {
            best = j;
        }
    }
    best
}

/// Shrinks `[lo, hi]` around the strongest kink signal.
fn zoom<T: Scalar>(f: &dyn Fn(T) -> T, mut lo: T, mut hi: T, eps_v: T, scale: T) -> T {
    const M: usize = 17;
    let sixteen = T::lit(16.0);
    for _ in 0..80 {
        let s = (hi - lo) / sixteen;
        let xs: Vec<T> = (0..M).map(|j| if j == M - 1 { hi } else { lo + s * T::from_usize(j).unwrap() }).collect();
        let fs: Vec<T> = xs.iter().map(|&x| f(x)).collect();
        let (_, kk) = kink_indicator(&xs, &fs);
        let j = argmax(&kk, 2, M - 2);
        let noise = T::lit(8.0) * eps_v / s;
        if kk[j] < T::lit(10.0) * noise {
            break;
        }
        lo = xs[j - 2];
        hi = xs[j + 2];
        if hi - lo <= T::lit(1e-14) * scale {
            break;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Slope jump across `x` at step `delta`.
fn slope_jump<T: Scalar>(f: &dyn Fn(T) -> T, x: T, delta: T) -> T {
    let fx = f(x);
    ((f(x + delta) - fx) / delta - (fx - f(x - delta)) / delta).abs()
}

fn confirmed_kink<T: Scalar>(f: &dyn Fn(T) -> T, x: T, scale: T, eps_v: T) -> bool {
    let delta = T::lit(1e-5) * scale;
    let fine = delta / T::lit(10.0);
    let j_coarse = slope_jump(f, x, delta);
    let j_fine = slope_jump(f, x, fine);
    let noise = T::lit(4.0) * eps_v / fine;
    j_fine > T::lit(100.0) * noise && j_fine >= T::lit(0.5) * j_coarse
}

pub fn detect_breakpoints_with<T: Scalar>(profile: &RadonProfile<T>, opts: &BreakpointOptions<T>) -> Result<Vec<T>> {
    let x = &profile.rho;
    let v = &profile.values;
    let n = x.len();
    if n < 8 {
        return Err(Error::Resolution { min_step: 0.0 });
    }
    let eps_v = value_noise(profile, opts);
    let h_min = x.windows(2).fold(T::infinity(), |m, w| m.min(w[1] - w[0]));
    let scale = x[n - 1].abs().max(T::one());
    let (d, kk) = kink_indicator(x, v);
    let kmax = kk.iter().fold(T::zero(), |m, &k| m.max(k));
    let floor = (T::lit(80.0) * eps_v / h_min).max(opts.min_relative_spike * kmax);
    let peaks: Vec<usize> = (2..n - 2)
        .filter(|&k| kk[k] > floor && kk[k] >= kk[k - 1] && kk[k] >= kk[k + 1])
        .collect();

    let mut found: Vec<T> = Vec::new();
    match (&profile.exact, opts.use_exact) {
        (Some(f), true) => {
            let f: &dyn Fn(T) -> T = f.as_ref();
            let mut cells: Vec<usize> = peaks
                .iter()
                .flat_map(|&k| [k.saturating_sub(2), k.saturating_sub(1), k, k + 1])
                .filter(|&j| j >= 1 && j + 2 < n)
                .collect();
            cells.sort_unstable();
            cells.dedup();
            for j in cells {
                let p = zoom(f, x[j - 1], x[j + 2], eps_v, scale);
                let slack = T::lit(1e-12) * scale;
                if p < x[j] - slack || p > x[j + 1] + slack {
                    continue;
                }
                if confirmed_kink(f, p, scale, eps_v) {
                    found.push(p);
                }
            }
        }
        _ => {
            let mut order = peaks.clone();
            order.sort_by(|&a, &b| kk[b].partial_cmp(&kk[a]).unwrap_or(std::cmp::Ordering::Equal));
            let mut taken: Vec<usize> = Vec::new();
            for k in order {
                if taken.iter().any(|&t| t.abs_diff(k) <= 2) {
                    continue;
                }
                taken.push(k);
                let j = if d[k + 1].abs() >= d[k - 1].abs() { k } else { k - 1 };
                let (dj, dj1) = (d[j], d[j + 1]);
                let theta = if (dj + dj1).abs() > T::zero() { (dj1 / (dj + dj1)).max(T::zero()).min(T::one()) } else { T::lit(0.5) };
                found.push(x[j] + theta * (x[j + 1] - x[j]));
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let merge_tol = T::lit(1e-9) * scale;
    let mut merged: Vec<T> = Vec::new();
    for p in found {
        match merged.last_mut() {
            Some(last) if p - *last <= merge_tol => {}
            _ => merged.push(p),
        }
    }
    let step = profile.max_step();
    let need = opts.min_separation_steps * step;
    for w in merged.windows(2) {
        let gap = w[1] - w[0];
        if gap < need {
            return Err(Error::Resolution { min_step: (gap / opts.min_separation_steps).as_f64() });
        }
    }
    Ok(merged)
}
