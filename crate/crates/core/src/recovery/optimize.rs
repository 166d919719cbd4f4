//! Small dense local optimizers.

use crate::linalg::least_squares;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when every vertex is within this of the best one (max norm).
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_evaluations: 2000, f_tol: 1e-30, x_tol: 1e-10, initial_step: 0.2 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead with dimension-adapted coefficients.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut converged = false;
    while evals.get() < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.f_tol || spread <= opts.x_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j])).collect() };
        let xr = along(-alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-alpha * gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let x = along(-alpha * rho);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(rho);
                let v = eval(&x);
                (x, v)
            };
            if fc < fr.min(worst) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = (0..n).map(|j| x0[j] + sigma * (vertex.0[j] - x0[j])).collect();
                    let v = eval(&x);
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum { x, f: fx, evaluations: evals.get(), converged }
}

#[derive(Debug, Clone, Copy)]
pub struct LevenbergOptions {
    pub max_iterations: usize,
    /// Relative step of the central-difference Jacobian.
    pub fd_step: f64,
}

impl Default for LevenbergOptions {
    fn default() -> Self {
        LevenbergOptions { max_iterations: 60, fd_step: 1e-5 }
    }
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Levenberg–Marquardt with geodesic acceleration, a central-difference
/// Jacobian and Nielsen's damping update. Residual functions return `None` outside their
/// domain.
pub fn levenberg_marquardt(r: &dyn Fn(&[f64]) -> Option<Vec<f64>>, x0: &[f64], opts: &LevenbergOptions) -> Minimum {
    let n = x0.len();
    let mut evals = 1;
    let mut x = x0.to_vec();
    let Some(mut res) = r(&x) else {
        return Minimum { x, f: f64::INFINITY, evaluations: evals, converged: false };
    };
    let mut fx = sse(&res);
    let mut lambda: f64 = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    'outer: for _ in 0..opts.max_iterations {
        if fx == 0.0 {
            converged = true;
            break;
        }
        let mut jac: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(1.0);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            evals += 2;
            let (Some(rp), Some(rm)) = (r(&xp), r(&xm)) else {
                break 'outer;
            };
            jac.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
        }
        let scale: Vec<f64> = jac.iter().map(|c| sse(c).sqrt().max(1e-300)).collect();
        let m = res.len();
        loop {
            if lambda > 1e16 {
                converged = true;
                break 'outer;
            }
            // [J; √λ D] δ = [−r; 0]
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    let mut c = jac[j].clone();
                    c.extend((0..n).map(|i| if i == j { lambda.sqrt() * scale[j] } else { 0.0 }));
                    c
                })
                .collect();
            let mut rhs: Vec<f64> = res.iter().map(|v| -v).collect();
            rhs.resize(m + n, 0.0);
            let Some((delta, _)) = least_squares(&cols, &rhs) else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            // geodesic acceleration: second directional derivative along δ
            let hd = 0.1;
            let xd: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + hd * d).collect();
            evals += 1;
            let Some(rd) = r(&xd) else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let jd: Vec<f64> = (0..m).map(|i| (0..n).map(|j| jac[j][i] * delta[j]).sum::<f64>()).collect();
            let rdd: Vec<f64> = (0..m).map(|i| 2.0 / hd * ((rd[i] - res[i]) / hd - jd[i])).collect();
            let mut rhs2: Vec<f64> = rdd.iter().map(|v| -v).collect();
            rhs2.resize(m + n, 0.0);
            let accel = least_squares(&cols, &rhs2).map(|(a, _)| a).unwrap_or_else(|| vec![0.0; n]);
            let dn = delta.iter().zip(&scale).map(|(d, s)| (d * s).powi(2)).sum::<f64>().sqrt();
            let an = accel.iter().zip(&scale).map(|(d, s)| (d * s).powi(2)).sum::<f64>().sqrt();
            if 2.0 * an > 0.75 * dn {
                lambda *= nu;
                nu *= 2.0;
                continue;
            }
            let step: Vec<f64> = delta.iter().zip(&accel).map(|(d, a)| d + 0.5 * a).collect();
            let linear: Vec<f64> = (0..m).map(|i| res[i] + jd[i]).collect();
            let predicted = fx - sse(&linear);
            let xn: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + d).collect();
            evals += 1;
            let fnew = r(&xn).map(|rn| (sse(&rn), rn));
            match fnew {
                Some((fnew, rn)) if fnew < fx && predicted > 0.0 => {
                    let gain = (fx - fnew) / predicted;
                    let small = (fx - fnew) <= 1e-15 * fx;
                    x = xn;
                    res = rn;
                    fx = fnew;
                    lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * gain - 1.0).powi(3));
                    lambda = lambda.max(1e-15);
                    nu = 2.0;
                    if small {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
                _ => {
                    lambda *= nu;
                    nu *= 2.0;
                }
            }
        }
    }
    Minimum { x, f: fx, evaluations: evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_by_simplex() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(&f, &[-1.2, 1.0], &NelderMeadOptions { max_evaluations: 5000, ..Default::default() });
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn exponential_fit_by_levenberg() {
        let ts: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let data: Vec<f64> = ts.iter().map(|t| 2.0 * (-1.3 * t).exp() + 0.5).collect();
        let r = |p: &[f64]| Some(ts.iter().zip(&data).map(|(t, d)| p[0] * (-p[1] * t).exp() + p[2] - d).collect());
        let m = levenberg_marquardt(&r, &[1.0, 0.5, 0.0], &LevenbergOptions::default());
        assert!(m.f < 1e-20, "{m:?}");
        assert!((m.x[1] - 1.3).abs() < 1e-8);
    }
}
