//! High-dimensional pipeline: LASSO nuisances and a debiased ratio estimator.
//!
//! One split, no rotation. On the masked third part, with `W̆ = (S, X, b̂′(η̂)Z)`
//! and `⊥` the projection onto the orthocomplement of `Ñ(η̂)`:
//!
//! ```text
//! ŝ = S⊥ − W̆⊥₋₁θ̂_S,    r̂ = Y⊥ − W̆⊥₋₁θ̂_Y,    α̂ = r̂ᵀŝ / ŝᵀŝ
//! ```
//!
//! where `θ̂_S`, `θ̂_Y` are LASSO fits of `S⊥` and `Y⊥` on `W̆⊥₋₁`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{residualize, split_three, Intervals, SplitScheme, Tau, MIN_ROWS};
use crate::numerics::{self, LambdaMode, LassoConfig, LassoFit};
use crate::spline::SplineBasis;

/// Smoothness order used in the high-dimensional `K` rule.
const SMOOTHNESS: f64 = 3.0;
pub const MIN_SIGMA2: f64 = 1e-8;
pub const Z_975: f64 = 1.959_963_984_540_054;

/// Penalty rule per LASSO sub-problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageModes {
    pub gamma: LambdaMode,
    pub beta: LambdaMode,
    pub y: LambdaMode,
    pub s: LambdaMode,
}

impl StageModes {
    pub fn uniform(mode: LambdaMode) -> Self {
        Self {
            gamma: mode,
            beta: mode,
            y: mode,
            s: mode,
        }
    }
}

impl Default for StageModes {
    fn default() -> Self {
        Self::uniform(LambdaMode::Theory)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdConfig {
    pub lambda_mode: StageModes,
    pub tau: Tau,
    pub k: Intervals,
    pub seed: u64,
    pub split: SplitScheme,
    /// Solver settings shared by every LASSO; `lambda` is overwritten.
    pub lasso: LassoConfig,
    /// Refit `γ̂` by OLS on the LASSO support to remove shrinkage.
    pub refit_gamma: bool,
    /// Refit `θ̂_S` and `θ̂_Y` by OLS on their LASSO supports.
    pub refit_theta: bool,
}

impl Default for HdConfig {
    fn default() -> Self {
        Self {
            lambda_mode: StageModes::uniform(LambdaMode::Theory),
            tau: Tau::Auto,
            k: Intervals::Auto,
            seed: 0,
            split: SplitScheme::Shuffle,
            lasso: LassoConfig {
                standardize: true,
                tol: 1e-9,
                ..LassoConfig::default()
            },
            refit_gamma: true,
            refit_theta: true,
        }
    }
}

impl HdConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn fit_cfg(&self) -> crate::estimator::FitConfig {
        crate::estimator::FitConfig {
            tau: self.tau,
            k: self.k,
            seed: self.seed,
            wls: false,
            split: self.split,
        }
    }
}

/// Penalty levels actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    /// First-stage `γ` LASSO.
    pub gamma: f64,
    /// `β` LASSO of the `b′` stage.
    pub beta: f64,
    /// `λ₀`, the `Y⊥` regression.
    pub y: f64,
    /// `λ₁`, the `S⊥` regression.
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HighDimFit {
    pub gamma_hat: DVector<f64>,
    pub beta_hat: DVector<f64>,
    pub omega_b_hat: DVector<f64>,
    pub theta_s: DVector<f64>,
    pub theta_y: DVector<f64>,
    pub alpha_hat: f64,
    pub sigma1_hat: f64,
    pub sigma2_hat: f64,
    pub ci95: (f64, f64),
    pub lambdas: Lambdas,
    pub n3: usize,
    pub tau: f64,
    pub intervals: usize,
}

impl HighDimFit {
    /// Standard error `σ̂₁ / (σ̂₂² √n₃)`.
    pub fn se(&self) -> f64 {
        self.sigma1_hat / (self.sigma2_hat * self.sigma2_hat * (self.n3 as f64).sqrt())
    }

    /// `(σ̂₂²/σ̂₁) √n₃ (α̂ − α₀)`.
    pub fn z_score(&self, alpha0: f64) -> f64 {
        (self.alpha_hat - alpha0) / self.se()
    }
}

fn run_lasso(x: &DMatrix<f64>, y: &DVector<f64>, mode: LambdaMode, base: &LassoConfig) -> Result<LassoFit> {
    let lambda = numerics::choose_lambda(x, y, mode, base)?;
    numerics::lasso(x, y, &LassoConfig { lambda, ..*base })
}

/// LASSO of `Q` on `Z`.
pub fn estimate_gamma_hd(d1: &Dataset, mode: LambdaMode, cfg: &LassoConfig) -> Result<LassoFit> {
    run_lasso(&d1.z, &d1.q, mode, cfg)
}

/// OLS of `y` on the columns of `x` selected by `fit`; coefficients off the
/// support stay zero. Left unchanged when the support is empty or not
/// smaller than the sample.
pub fn refit_on_support(x: &DMatrix<f64>, y: &DVector<f64>, fit: &LassoFit) -> DVector<f64> {
    let support = fit.support();
    if support.is_empty() || support.len() >= x.nrows() {
        return fit.coef.clone();
    }
    let xs = x.select_columns(&support);
    let coef = numerics::ols(&xs, y);
    let mut out = DVector::zeros(x.ncols());
    for (k, &j) in support.iter().enumerate() {
        out[j] = coef[k];
    }
    out
}

#[derive(Debug, Clone)]
pub struct BprimeHd {
    pub omega: DVector<f64>,
    pub beta: LassoFit,
    pub masked: usize,
}

/// `β̂` = LASSO of `Ñ⊥Y` on `Ñ⊥X`; `ω̂_b` = OLS of `Y − Xβ̂` on `Ñ`.
pub fn estimate_bprime_hd(
    d2: &Dataset,
    gamma_hat: &DVector<f64>,
    basis: &SplineBasis,
    mode: LambdaMode,
    cfg: &LassoConfig,
) -> Result<BprimeHd> {
    let res = residualize(d2, gamma_hat, Tau::Fixed(basis.tau()))?;
    let rows = res.masked_rows();
    if rows.len() <= basis.dim() {
        return Err(Error::InsufficientData(format!(
            "b' estimation needs more than {} masked rows, got {}",
            basis.dim(),
            rows.len()
        )));
    }
    let eta: Vec<f64> = rows.iter().map(|&i| res.eta_hat[i]).collect();
    let nmat = basis.design_matrix(&eta);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| d2.y[i]));
    let x = d2.x.select_rows(&rows);
    let q = numerics::column_space(&nmat);
    let x_perp = numerics::project_out_basis(&x, &q);
    let y_perp = numerics::project_out_vec(&y, &q);
    let beta = run_lasso(&x_perp, &y_perp, mode, cfg)?;
    let partial = &y - &x * &beta.coef;
    Ok(BprimeHd {
        omega: numerics::ols(&nmat, &partial),
        beta,
        masked: rows.len(),
    })
}

/// `K = (n / (s_β² s_γ log p))^{1/7}` rounded and clipped to `[4, 50]`.
pub fn hd_intervals(n: usize, s_beta: usize, s_gamma: usize, p: usize) -> usize {
    let sb = s_beta.max(1) as f64;
    let sg = s_gamma.max(1) as f64;
    let lp = (p.max(3) as f64).ln();
    let k = (n as f64 / (sb * sb * sg * lp)).powf(1.0 / (2.0 * SMOOTHNESS + 1.0));
    (k.round() as usize).clamp(4, 50)
}

/// Output of the debiasing step on projected data.
#[derive(Debug, Clone)]
pub struct Debiased {
    pub alpha: f64,
    pub theta_y: DVector<f64>,
    pub theta_s: DVector<f64>,
    pub lambda_y: f64,
    pub lambda_s: f64,
    /// `ŝ = S⊥ − W̆⊥θ̂_S`.
    pub s_hat: DVector<f64>,
    /// `r̂ = Y⊥ − W̆⊥θ̂_Y`.
    pub r_hat: DVector<f64>,
    /// `ε̂ = r̂ − α̂ŝ`.
    pub eps_hat: DVector<f64>,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// Ratio estimator from the two LASSO regressions on `W̆⊥`, with the plug-in
/// `σ̂₂² = ‖ŝ‖²/n` and `σ̂₁² = mean(ε̂²ŝ²)`.
pub fn debias(w_perp: &DMatrix<f64>, y_perp: &DVector<f64>, s_perp: &DVector<f64>, cfg: &HdConfig) -> Result<Debiased> {
    let base = cfg.lasso;
    let mut theta_y = run_lasso(w_perp, y_perp, cfg.lambda_mode.y, &base)?;
    let mut theta_s = run_lasso(w_perp, s_perp, cfg.lambda_mode.s, &base)?;
    if cfg.refit_theta {
        theta_y.coef = refit_on_support(w_perp, y_perp, &theta_y);
        theta_s.coef = refit_on_support(w_perp, s_perp, &theta_s);
    }
    let s_hat = s_perp - w_perp * &theta_s.coef;
    let r_hat = y_perp - w_perp * &theta_y.coef;
    let nf = s_hat.len().max(1) as f64;
    let sigma2_sq = s_hat.norm_squared() / nf;
    let sigma2 = sigma2_sq.sqrt();
    if !(sigma2 >= MIN_SIGMA2) {
        return Err(Error::DegenerateVariance(format!(
            "treatment residual variance {sigma2_sq:.3e} is numerically zero"
        )));
    }
    let alpha = r_hat.dot(&s_hat) / s_hat.norm_squared();
    let eps_hat = &r_hat - &s_hat * alpha;
    let sigma1 = (eps_hat.iter().zip(s_hat.iter()).map(|(e, s)| (e * s).powi(2)).sum::<f64>() / nf).sqrt();
    Ok(Debiased {
        alpha,
        theta_y: theta_y.coef,
        theta_s: theta_s.coef,
        lambda_y: theta_y.lambda,
        lambda_s: theta_s.lambda,
        s_hat,
        r_hat,
        eps_hat,
        sigma1,
        sigma2,
    })
}

/// Runs the pipeline on already-centered parts.
pub fn fit_hd_parts(d1: &Dataset, d2: &Dataset, d3: &Dataset, cfg: &HdConfig) -> Result<HighDimFit> {
    let base = cfg.lasso;
    let modes = cfg.lambda_mode;
    let mut gamma = estimate_gamma_hd(d1, modes.gamma, &base)?;
    if cfg.refit_gamma {
        gamma.coef = refit_on_support(&d1.z, &d1.q, &gamma);
    }
    let res2 = residualize(d2, &gamma.coef, cfg.tau)?;
    let tau = res2.tau;
    let p = d1.p1() + d1.p2();
    let s_gamma = gamma.support().len();

    let (basis, bprime) = match cfg.k {
        Intervals::Fixed(k) => {
            let basis = SplineBasis::new(tau, k)?;
            let b = estimate_bprime_hd(d2, &gamma.coef, &basis, modes.beta, &base)?;
            (basis, b)
        }
        Intervals::Auto => {
            let m = res2.masked_count();
            let k0 = hd_intervals(m, 1, s_gamma, p);
            let basis = SplineBasis::new(tau, k0)?;
            let b = estimate_bprime_hd(d2, &gamma.coef, &basis, modes.beta, &base)?;
            let k1 = hd_intervals(m, b.beta.support().len(), s_gamma, p);
            if k1 == k0 {
                (basis, b)
            } else {
                let basis = SplineBasis::new(tau, k1)?;
                let b = estimate_bprime_hd(d2, &gamma.coef, &basis, modes.beta, &base)?;
                (basis, b)
            }
        }
    };

    let res3 = residualize(d3, &gamma.coef, Tau::Fixed(tau))?;
    let rows = res3.masked_rows();
    let n3 = rows.len();
    let (p1, p2) = (d3.p1(), d3.p2());
    if n3 <= basis.dim() + 1 {
        return Err(Error::InsufficientData(format!(
            "alpha stage needs more than {} masked rows, got {n3}",
            basis.dim() + 1
        )));
    }
    let s_all = d3.treatment();
    let eta: Vec<f64> = rows.iter().map(|&i| res3.eta_hat[i]).collect();
    let nmat = basis.design_matrix(&eta);
    let mut w = DMatrix::zeros(n3, p1 + p2);
    for (r, &i) in rows.iter().enumerate() {
        let slope = basis.deriv_combination(eta[r], &bprime.omega);
        for j in 0..p1 {
            w[(r, j)] = d3.x[(i, j)];
        }
        for j in 0..p2 {
            w[(r, p1 + j)] = slope * d3.z[(i, j)];
        }
    }
    let y = DVector::from_iterator(n3, rows.iter().map(|&i| d3.y[i]));
    let s = DVector::from_iterator(n3, rows.iter().map(|&i| s_all[i]));
    let q = numerics::column_space(&nmat);
    let w_perp = numerics::project_out_basis(&w, &q);
    let y_perp = numerics::project_out_vec(&y, &q);
    let s_perp = numerics::project_out_vec(&s, &q);

    let deb = debias(&w_perp, &y_perp, &s_perp, cfg)?;
    let half = Z_975 * deb.sigma1 / (deb.sigma2 * deb.sigma2 * (n3 as f64).sqrt());

    Ok(HighDimFit {
        gamma_hat: gamma.coef,
        beta_hat: bprime.beta.coef.clone(),
        omega_b_hat: bprime.omega,
        theta_s: deb.theta_s,
        theta_y: deb.theta_y,
        alpha_hat: deb.alpha,
        sigma1_hat: deb.sigma1,
        sigma2_hat: deb.sigma2,
        ci95: (deb.alpha - half, deb.alpha + half),
        lambdas: Lambdas {
            gamma: gamma.lambda,
            beta: bprime.beta.lambda,
            y: deb.lambda_y,
            s: deb.lambda_s,
        },
        n3,
        tau,
        intervals: basis.intervals(),
    })
}

/// The debiased estimator. Parts are centered column-wise before use.
pub fn fit_hd(data: &Dataset, cfg: &HdConfig) -> Result<HighDimFit> {
    if data.n() < MIN_ROWS {
        return Err(Error::InsufficientData(format!("need at least {MIN_ROWS} rows, got {}", data.n())));
    }
    cfg.lasso.validate()?;
    let fc = cfg.fit_cfg();
    fc.validate()?;
    let [d1, d2, d3] = split_three(data, &fc)?;
    let (d1, _) = d1.centered();
    let (d2, _) = d2.centered();
    let (d3, _) = d3.centered();
    fit_hd_parts(&d1, &d2, &d3, cfg)
}
