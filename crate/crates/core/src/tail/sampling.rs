use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariance::CovarianceMatrix3;
use crate::error::{Error, Result};
use crate::tail::{MinSampleSet, TailGrid, TailSource};

/// Samples per random stream; chunk `k` always uses stream `k` of the seed.
const CHUNK: usize = 1 << 16;

/// `n` draws of `min(X)` for `X ~ N(0, Σ)`, deterministic in `seed` regardless
/// of thread scheduling.
pub fn sample_xmin(sigma: &CovarianceMatrix3<f64>, n: usize, seed: u64) -> Result<MinSampleSet> {
    if n == 0 {
        return Err(Error::InconsistentInput("sample count must be positive".into()));
    }
    let l = sigma.admissible_cholesky()?.0;
    let mut values = vec![0.0; n];
    values.par_chunks_mut(CHUNK).enumerate().for_each(|(k, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        for v in chunk.iter_mut() {
            let u: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let x0 = l[0][0] * u[0];
            let x1 = l[1][0] * u[0] + l[1][1] * u[1];
            let x2 = l[2][0] * u[0] + l[2][1] * u[1] + l[2][2] * u[2];
            *v = x0.min(x1).min(x2);
        }
    });
    Ok(MinSampleSet { values, seed, sigma: Some(*sigma) })
}

/// Fraction of samples `≥ t` with binomial standard errors.
pub fn empirical_tail(samples: &MinSampleSet, t: &[f64]) -> Result<TailGrid> {
    let n = samples.values.len();
    if n == 0 {
        return Err(Error::Data("no samples".into()));
    }
    if samples.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite sample".into()));
    }
    let mut sorted = samples.values.clone();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let m: Vec<f64> = t
        .iter()
        .map(|&x| (n - sorted.partition_point(|&v| v < x)) as f64 / nf)
        .collect();
    let se = m.iter().map(|&p| (p * (1.0 - p) / nf).sqrt()).collect();
    TailGrid::new(t.to_vec(), m, TailSource::Empirical)?.with_stderr(se, n)
}
