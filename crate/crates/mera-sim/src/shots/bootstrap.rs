//! Multinomial bootstrap within basis groups.

use super::{multinomial, ShotDataset};
use crate::error::{Error, Result};
use crate::par::*;
use crate::rng::{stream, Rng};

/// Resample every group's outcomes with replacement, keeping group sizes.
pub fn resample(ds: &ShotDataset, rng: &mut Rng) -> ShotDataset {
    let mut out = ds.clone();
    for g in &mut out.groups {
        let n = g.total();
        let p: Vec<f64> = g.counts.iter().map(|&c| c as f64 / n as f64).collect();
        g.counts = multinomial(n, &p, rng);
    }
    out
}

/// Percentile interval of `estimator` over `n_resamples` bootstrap datasets.
/// Resample k uses stream (seed, k), so the interval does not depend on the
/// thread count.
pub fn bootstrap_ci<F>(ds: &ShotDataset, estimator: F, n_resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&ShotDataset) -> f64 + Sync + Send,
{
    if n_resamples < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 resamples, got {n_resamples}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("level must lie in (0, 1), got {level}")));
    }
    ds.validate()?;
    let mut vals: Vec<f64> =
        (0..n_resamples).into_par_iter().map(|k| estimator(&resample(ds, &mut stream(seed, k as u64)))).collect();
    vals.sort_by(f64::total_cmp);
    Ok((quantile(&vals, (1.0 - level) / 2.0), quantile(&vals, (1.0 + level) / 2.0)))
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
