//! Deterministic parallel replication.
//!
//! Work is cut into fixed-size batches; batch `b` always draws from the stream
//! `(seed, child_id(tag, b))`, so the output is identical for any thread count.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{child_id, RngStream};

pub const BATCH: usize = 1024;

/// Runs `f` `count` times and returns the results in replication order.
pub fn replicate<T, F>(count: usize, seed: u64, tag: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    let batches = count.div_ceil(BATCH);
    let chunks: Vec<Result<Vec<T>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, child_id(tag, b as u64));
            let len = BATCH.min(count - b * BATCH);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Runs `f(i, rng)` for `i < count` where replication `i` always owns the
/// stream `(seed, child_id(tag, i))`. Running the same `(seed, tag)` under
/// different model parameters therefore couples the replications pathwise.
pub fn replicate_coupled<T, F>(count: usize, seed: u64, tag: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut RngStream) -> Result<T> + Sync,
{
    let batches = count.div_ceil(BATCH);
    let chunks: Vec<Result<Vec<T>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * BATCH;
            let end = count.min(start + BATCH);
            (start..end)
                .map(|i| {
                    let mut rng = RngStream::new(seed, child_id(tag, i as u64));
                    f(i, &mut rng)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// A Monte Carlo estimate with its standard error and sample size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (value, std_error) = mean_se(xs);
        Estimate { value, std_error, samples: xs.len() }
    }

    /// Mean of 0/1 outcomes with a Wilson-score standard error (95% interval
    /// half-width over 1.96), which stays positive at 0 and 1.
    pub fn proportion(hits: usize, samples: usize) -> Self {
        let n = samples as f64;
        let p = hits as f64 / n;
        let z = 1.96f64;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / (1.0 + z * z / n);
        Estimate { value: p, std_error: half / z, samples }
    }

    /// True if `|value - target| <= k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Mean of complex samples with the standard error of its modulus-free error,
/// `sqrt(E|Z - mean|^2 / n)`.
pub fn complex_mean_se(zs: &[num_complex::Complex64]) -> (num_complex::Complex64, f64) {
    let n = zs.len() as f64;
    let m = zs.iter().sum::<num_complex::Complex64>() / n;
    let v = zs.iter().map(|z| (z - m).norm_sqr()).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}
