//! Pairs-bootstrap percentile intervals for `ᾱ̂` and a coverage harness.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{fit, FitConfig};
use crate::seed;
use crate::simulate::{generate, replication_dgp, DgpConfig};
use crate::stats;

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    /// Draw a fresh three-way split inside every replicate. When false every
    /// replicate reuses the split seed of the point fit.
    pub resplit: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            level: 0.95,
            seed: 0,
            resplit: true,
        }
    }
}

impl BootstrapConfig {
    pub fn new(replicates: usize, level: f64, seed: u64) -> Self {
        Self {
            replicates,
            level,
            seed,
            resplit: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 50 {
            return Err(Error::InvalidArgument(format!("B must be at least 50, got {}", self.replicates)));
        }
        if !(self.level > 0.5 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0.5, 1), got {}", self.level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point: f64,
    pub boot_mean: f64,
    pub boot_se: f64,
    pub ci: (f64, f64),
    #[serde(rename = "B")]
    pub b: usize,
    pub level: f64,
    pub failures: usize,
    /// Successful replicate estimates in replicate order.
    pub replicates: Vec<f64>,
}

/// `n` row indices drawn uniformly with replacement.
pub fn resample_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Percentile interval at `level` from replicate estimates.
pub fn percentile_ci(replicates: &[f64], level: f64) -> (f64, f64) {
    let mut v = replicates.to_vec();
    v.sort_by(f64::total_cmp);
    (
        stats::quantile_sorted(&v, (1.0 - level) / 2.0),
        stats::quantile_sorted(&v, (1.0 + level) / 2.0),
    )
}

fn replicate(data: &Dataset, cfg: &FitConfig, bcfg: &BootstrapConfig, index: usize) -> Option<f64> {
    let attempt = |rs: u64| -> Result<f64> {
        let rows = resample_indices(data.n(), rs);
        let split_seed = if bcfg.resplit { seed::sub_seed(rs, 1) } else { cfg.seed };
        fit(&data.select(&rows), &FitConfig { seed: split_seed, ..*cfg }).map(|f| f.alpha_bar)
    };
    let rs = seed::sub_seed(bcfg.seed, index as u64);
    match attempt(rs) {
        Ok(a) => Some(a),
        Err(Error::SingularDesign { .. }) => attempt(seed::sub_seed(rs, 2)).ok(),
        Err(_) => None,
    }
}

/// Point fit plus `B` pairs-bootstrap refits. Replicates run in parallel;
/// results do not depend on the thread count.
pub fn bootstrap_ci(data: &Dataset, cfg: &FitConfig, bcfg: &BootstrapConfig) -> Result<BootstrapResult> {
    bcfg.validate()?;
    let point = fit(data, cfg)?.alpha_bar;
    let draws: Vec<Option<f64>> = (0..bcfg.replicates)
        .into_par_iter()
        .map(|b| replicate(data, cfg, bcfg, b))
        .collect();
    let failures = draws.iter().filter(|d| d.is_none()).count();
    if failures as f64 > MAX_FAILURE_RATE * bcfg.replicates as f64 {
        return Err(Error::BootstrapFailure {
            failed: failures,
            total: bcfg.replicates,
        });
    }
    let replicates: Vec<f64> = draws.into_iter().flatten().collect();
    Ok(BootstrapResult {
        point,
        boot_mean: stats::mean(&replicates),
        boot_se: stats::sd(&replicates),
        ci: percentile_ci(&replicates, bcfg.level),
        b: bcfg.replicates,
        level: bcfg.level,
        failures,
        replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub coverage: f64,
    pub covered: usize,
    pub completed: usize,
    pub failures: usize,
    /// Interval from each completed replication, in order.
    pub intervals: Vec<(f64, f64)>,
}

/// Fraction of `R` simulated datasets whose bootstrap interval covers `α₀`.
/// Replication `r` uses data seed `sub_seed(dgp.seed, r)`, split seed
/// `sub_seed(cfg.seed, r)` and bootstrap seed `sub_seed(bcfg.seed, r)`.
/// Replications that fail outright are excluded and counted.
pub fn coverage_check(dgp: &DgpConfig, cfg: &FitConfig, replications: usize, bcfg: &BootstrapConfig) -> Result<Coverage> {
    if replications < 50 {
        return Err(Error::InvalidArgument(format!("need R >= 50, got {replications}")));
    }
    bcfg.validate()?;
    dgp.validate()?;
    let cis: Vec<Option<(f64, f64)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let data = generate(&replication_dgp(dgp, r)).ok()?;
            let c = FitConfig {
                seed: seed::sub_seed(cfg.seed, r as u64),
                ..*cfg
            };
            let b = BootstrapConfig {
                seed: seed::sub_seed(bcfg.seed, r as u64),
                ..*bcfg
            };
            bootstrap_ci(&data, &c, &b).ok().map(|res| res.ci)
        })
        .collect();
    let failures = cis.iter().filter(|c| c.is_none()).count();
    let intervals: Vec<(f64, f64)> = cis.into_iter().flatten().collect();
    let covered = intervals.iter().filter(|(lo, hi)| *lo <= dgp.alpha0 && dgp.alpha0 <= *hi).count();
    let completed = intervals.len();
    Ok(Coverage {
        coverage: if completed == 0 { 0.0 } else { covered as f64 / completed as f64 },
        covered,
        completed,
        failures,
        intervals,
    })
}
