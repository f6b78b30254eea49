//! Synthetic data-generating processes and Monte Carlo summaries.
//!
//! `Q = Zᵀγ₀ + η` with `η ~ N(0, 1)`, `Y = α₀·1{Q ≥ 0} + Xᵀβ₀ + b(η) + ε` and
//! `ε = σ(η)·σ_ε·ξ` with `ξ ~ N(0, 1)` independent of everything else.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{fit, FitConfig};
use crate::numerics;
use crate::seed;
use crate::stats;

/// Shape of the conditional mean `b(η) = E[ν | η]`.
///
/// `Sine` and `QuadraticCentered` are multiplied by the endogeneity scale
/// `κ = ρσ_ε/√(1 − ρ²)`; `Linear(c)` is taken literally as `b(η) = cη`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BKind {
    Zero,
    Linear(f64),
    Sine,
    QuadraticCentered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub alpha0: f64,
    pub beta0: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub b_kind: BKind,
    pub rho: f64,
    pub sigma_eps: f64,
    pub heteroskedastic: bool,
    /// When set, the first `min(p1, p2)` columns of `Z` are copies of `X`.
    pub overlap: bool,
    /// `(s_β, s_γ)`; informational for sparse designs.
    pub sparsity: (usize, usize),
    pub seed: u64,
}

/// Slope `κ` for which `b(η) = κη` gives `corr(ν, η) = ρ` under unit-variance noise.
pub fn endogeneity_scale(rho: f64, sigma_eps: f64) -> f64 {
    rho * sigma_eps / (1.0 - rho * rho).sqrt()
}

impl DgpConfig {
    /// `p1 = p2 = 2`, overlapping covariates, `α₀ = 1`, `β₀ = (1, −1)`,
    /// `γ₀ = (1, 0.5)`, sine `b`, `ρ = 0.5`, `σ_ε = 1`.
    pub fn reference(n: usize, seed: u64) -> Self {
        Self {
            n,
            p1: 2,
            p2: 2,
            alpha0: 1.0,
            beta0: vec![1.0, -1.0],
            gamma0: vec![1.0, 0.5],
            b_kind: BKind::Sine,
            rho: 0.5,
            sigma_eps: 1.0,
            heteroskedastic: false,
            overlap: true,
            sparsity: (2, 2),
            seed,
        }
    }

    /// Reference design with linear `b` whose slope gives `corr(ν, η) = ρ`.
    pub fn endogenous(n: usize, rho: f64, seed: u64) -> Self {
        let mut c = Self::reference(n, seed);
        c.rho = rho;
        c.b_kind = BKind::Linear(endogeneity_scale(rho, c.sigma_eps));
        c
    }

    /// Reference design with `ρ = 0` and `b ≡ 0`.
    pub fn exogenous(n: usize, seed: u64) -> Self {
        let mut c = Self::reference(n, seed);
        c.rho = 0.0;
        c.b_kind = BKind::Zero;
        c
    }

    /// Reference design with `σ(η) = 1 + η²`.
    pub fn heteroskedastic(n: usize, seed: u64) -> Self {
        let mut c = Self::reference(n, seed);
        c.heteroskedastic = true;
        c
    }

    /// Sparse design: the first `s` entries of `β₀` and `γ₀` equal one, the
    /// rest zero; `X` and `Z` drawn independently.
    pub fn high_dim(n: usize, p1: usize, p2: usize, s: usize, seed: u64) -> Self {
        let mut beta0 = vec![0.0; p1];
        let mut gamma0 = vec![0.0; p2];
        beta0.iter_mut().take(s).for_each(|b| *b = 1.0);
        gamma0.iter_mut().take(s).for_each(|g| *g = 1.0);
        Self {
            n,
            p1,
            p2,
            alpha0: 1.0,
            beta0,
            gamma0,
            b_kind: BKind::Sine,
            rho: 0.5,
            sigma_eps: 1.0,
            heteroskedastic: false,
            overlap: false,
            sparsity: (s.min(p1), s.min(p2)),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta0.len() != self.p1 || self.gamma0.len() != self.p2 {
            return Err(Error::InvalidArgument(format!(
                "coefficient lengths ({}, {}) do not match (p1, p2) = ({}, {})",
                self.beta0.len(),
                self.gamma0.len(),
                self.p1,
                self.p2
            )));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("|rho| must be below 1, got {}", self.rho)));
        }
        if !(self.sigma_eps > 0.0) {
            return Err(Error::InvalidArgument("sigma_eps must be positive".into()));
        }
        if self.p2 == 0 {
            return Err(Error::InvalidArgument("p2 must be at least 1".into()));
        }
        Ok(())
    }

    /// `b(η)`.
    pub fn b(&self, eta: f64) -> f64 {
        let kappa = endogeneity_scale(self.rho, self.sigma_eps);
        match self.b_kind {
            BKind::Zero => 0.0,
            BKind::Linear(c) => c * eta,
            BKind::Sine => kappa * eta.sin(),
            BKind::QuadraticCentered => kappa * (eta * eta - 1.0),
        }
    }

    pub fn sigma(&self, eta: f64) -> f64 {
        if self.heteroskedastic {
            1.0 + eta * eta
        } else {
            1.0
        }
    }
}

/// Draw with the latent errors kept, for oracle checks.
#[derive(Debug, Clone)]
pub struct Draw {
    pub data: Dataset,
    pub eta: DVector<f64>,
    pub nu: DVector<f64>,
}

pub fn generate_with_latent(cfg: &DgpConfig) -> Result<Draw> {
    cfg.validate()?;
    let (n, p1, p2) = (cfg.n, cfg.p1, cfg.p2);
    let mut rng = seed::rng(cfg.seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let x = DMatrix::from_fn(n, p1, |_, _| normal());
    let shared = if cfg.overlap { p1.min(p2) } else { 0 };
    let mut z = DMatrix::zeros(n, p2);
    for j in 0..p2 {
        for i in 0..n {
            z[(i, j)] = if j < shared { x[(i, j)] } else { normal() };
        }
    }
    let eta = DVector::from_fn(n, |_, _| normal());
    let xi = DVector::from_fn(n, |_, _| normal());
    let beta0 = DVector::from_column_slice(&cfg.beta0);
    let gamma0 = DVector::from_column_slice(&cfg.gamma0);
    let q = &z * &gamma0 + &eta;
    let nu = DVector::from_fn(n, |i, _| cfg.b(eta[i]) + cfg.sigma(eta[i]) * cfg.sigma_eps * xi[i]);
    let xb = &x * &beta0;
    let y = DVector::from_fn(n, |i, _| {
        let s = if q[i] >= 0.0 { 1.0 } else { 0.0 };
        cfg.alpha0 * s + xb[i] + nu[i]
    });
    Ok(Draw {
        data: Dataset::new(y, q, x, z)?,
        eta,
        nu,
    })
}

/// A dataset from the model; deterministic in `cfg.seed`.
pub fn generate(cfg: &DgpConfig) -> Result<Dataset> {
    generate_with_latent(cfg).map(|d| d.data)
}

/// Coefficient on `S` from OLS of `Y` on `(1, S, X)`.
pub fn naive_ols(data: &Dataset) -> f64 {
    let n = data.n();
    let s = data.treatment();
    let mut design = DMatrix::zeros(n, 2 + data.p1());
    design.column_mut(0).fill(1.0);
    design.column_mut(1).copy_from(&s);
    design.view_mut((0, 2), (n, data.p1())).copy_from(&data.x);
    numerics::ols(&design, &data.y)[1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub replications: usize,
    pub failures: usize,
    pub alpha0: f64,
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
    /// KS distance of `(α̂ − α₀)/sd` against the standard normal.
    pub ks_stat: f64,
    pub naive_bias: f64,
    pub naive_sd: f64,
    /// Successful estimates in replication order.
    pub estimates: Vec<f64>,
    pub naive_estimates: Vec<f64>,
}

impl MonteCarloSummary {
    /// Standard error of the Monte Carlo bias.
    pub fn bias_se(&self) -> f64 {
        self.sd / (self.estimates.len() as f64).sqrt()
    }

    pub fn ks_critical_1pct(&self) -> f64 {
        stats::ks_critical_1pct(self.estimates.len())
    }
}

/// Replication `r` draws data with `sub_seed(dgp.seed, r)`.
pub fn replication_dgp(dgp: &DgpConfig, r: usize) -> DgpConfig {
    dgp.with_seed(seed::sub_seed(dgp.seed, r as u64))
}

/// Runs `estimator` on `R` independent datasets in parallel. The closure
/// receives the replication index and the dataset. Failed replications are
/// dropped; more than 10% failures is an error.
pub fn monte_carlo_with<F>(dgp: &DgpConfig, replications: usize, estimator: F) -> Result<MonteCarloSummary>
where
    F: Fn(usize, &Dataset) -> Result<f64> + Sync,
{
    if replications < 2 {
        return Err(Error::InvalidArgument("need at least two replications".into()));
    }
    dgp.validate()?;
    let results: Vec<Option<(f64, f64)>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let data = generate(&replication_dgp(dgp, r)).ok()?;
            let est = estimator(r, &data).ok()?;
            est.is_finite().then(|| (est, naive_ols(&data)))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    if failures * 10 > replications {
        return Err(Error::Harness {
            failed: failures,
            total: replications,
        });
    }
    let (estimates, naive_estimates): (Vec<f64>, Vec<f64>) = results.into_iter().flatten().unzip();
    Ok(summarize(dgp.alpha0, replications, failures, estimates, naive_estimates))
}

fn summarize(alpha0: f64, replications: usize, failures: usize, estimates: Vec<f64>, naive: Vec<f64>) -> MonteCarloSummary {
    let errors: Vec<f64> = estimates.iter().map(|a| a - alpha0).collect();
    let bias = stats::mean(&errors);
    let sd = stats::sd(&estimates);
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let rmse = stats::mean(&sq).sqrt();
    let z: Vec<f64> = errors.iter().map(|e| e / sd).collect();
    let ks_stat = stats::ks_normal(&z);
    let naive_err: Vec<f64> = naive.iter().map(|a| a - alpha0).collect();
    MonteCarloSummary {
        replications,
        failures,
        alpha0,
        bias,
        sd,
        rmse,
        ks_stat,
        naive_bias: stats::mean(&naive_err),
        naive_sd: stats::sd(&naive),
        estimates,
        naive_estimates: naive,
    }
}

/// Monte Carlo study of the fixed-dimension estimator. Replication `r` fits
/// with split seed `sub_seed(cfg.seed, r)`.
pub fn monte_carlo(dgp: &DgpConfig, cfg: &FitConfig, replications: usize) -> Result<MonteCarloSummary> {
    if replications < 20 {
        return Err(Error::InvalidArgument(format!("need R >= 20, got {replications}")));
    }
    monte_carlo_with(dgp, replications, |r, data| {
        let c = FitConfig {
            seed: seed::sub_seed(cfg.seed, r as u64),
            ..*cfg
        };
        fit(data, &c).map(|f| f.alpha_bar)
    })
}
