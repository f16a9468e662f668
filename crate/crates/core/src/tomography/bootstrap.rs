//! Nonparametric bootstrap that resamples within each phase group.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::group_by_theta;
use crate::error::{Error, Result};
use crate::homodyne::QuadratureSample;
use crate::rng;
use crate::stats;

pub const MIN_RESAMPLES: usize = 100;
const BOOTSTRAP_LABEL: u64 = 0xB007;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    /// Statistic on the original data.
    pub estimate: f64,
    /// Standard deviation of the resampled statistic.
    pub se: f64,
    /// 2.5 % and 97.5 % percentiles of the resampled statistic.
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

pub fn bootstrap<F>(samples: &[QuadratureSample], resamples: usize, seed: u64, statistic: F) -> Result<BootstrapEstimate>
where
    F: Fn(&[QuadratureSample]) -> Result<f64> + Sync,
{
    Ok(bootstrap_many(samples, resamples, seed, |s| Ok(vec![statistic(s)?]))?[0])
}

/// Bootstrap of a vector-valued statistic. Replicate `b` draws from its own
/// random stream, so the result does not depend on scheduling.
pub fn bootstrap_many<F>(
    samples: &[QuadratureSample],
    resamples: usize,
    seed: u64,
    statistic: F,
) -> Result<Vec<BootstrapEstimate>>
where
    F: Fn(&[QuadratureSample]) -> Result<Vec<f64>> + Sync,
{
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!("bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}")));
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("bootstrap needs samples"));
    }
    let point = statistic(samples)?;
    let groups = group_by_theta(samples);
    let boot_seed = rng::derive_seed(seed, BOOTSTRAP_LABEL);
    let replicates: Vec<Vec<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(boot_seed, b as u64);
            let mut drawn = Vec::with_capacity(samples.len());
            for (_, g) in &groups {
                for _ in 0..g.len() {
                    drawn.push(g[r.random_range(0..g.len())]);
                }
            }
            statistic(&drawn)
        })
        .collect::<Result<_>>()?;
    Ok((0..point.len())
        .map(|k| {
            let mut v: Vec<f64> = replicates.iter().map(|r| r[k]).collect();
            let se = stats::variance(&v).unwrap_or(0.0).sqrt();
            v.sort_by(f64::total_cmp);
            BootstrapEstimate {
                estimate: point[k],
                se,
                ci_low: stats::percentile_sorted(&v, 0.025),
                ci_high: stats::percentile_sorted(&v, 0.975),
                resamples,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_statistic_has_zero_error() {
        let s: Vec<_> = (0..10).map(|i| QuadratureSample::new(0.0, i as f64, 0.0)).collect();
        let e = bootstrap(&s, 100, 1, |_| Ok(3.0)).unwrap();
        assert_eq!((e.estimate, e.se, e.ci_low, e.ci_high), (3.0, 0.0, 3.0, 3.0));
    }

    #[test]
    fn rejects_few_resamples() {
        let s = vec![QuadratureSample::new(0.0, 0.0, 0.0)];
        assert!(bootstrap(&s, 99, 1, |_| Ok(0.0)).is_err());
    }

    #[test]
    fn group_sizes_preserved() {
        let mut s: Vec<_> = (0..7).map(|i| QuadratureSample::new(0.0, i as f64, 0.0)).collect();
        s.extend((0..3).map(|i| QuadratureSample::new(1.0, i as f64, 0.0)));
        let e = bootstrap(&s, 100, 5, |d| Ok(d.iter().filter(|q| q.theta == 1.0).count() as f64)).unwrap();
        assert_eq!(e.se, 0.0);
        assert_eq!(e.estimate, 3.0);
    }
}
