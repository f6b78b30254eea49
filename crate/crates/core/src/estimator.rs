//! Fixed-dimension pipeline.
//!
//! The sample is split into three parts. Within one rotation:
//!
//! 1. `γ̂` is the OLS fit of `Q` on `Z` in the first part;
//! 2. `b̂′` comes from a spline partial-linear regression on the second part,
//!    restricted to rows with `|η̂| ≤ τ`;
//! 3. `α̂` is the first coordinate of the projected least-squares solution of
//!    the stacked system on the third part:
//!
//! ```text
//! ⎡ Y       ⎤   ⎡ S  X  b̂′(η̂)Z   Ñ(η̂) ⎤ ⎡ α      ⎤
//! ⎣ Q − Zγ̂  ⎦ = ⎣ 0  0  −Z        0     ⎦ ⎢ β      ⎥ + error
//!                                         ⎢ γ̂ − γ  ⎥
//!                                         ⎣ ω      ⎦
//! ```
//!
//! The upper block uses masked rows only; the lower block uses every row of
//! the part. The three cyclic role assignments are averaged.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Centering, Dataset};
use crate::error::{Error, Result};
use crate::numerics::{self, PivotedQr};
use crate::seed;
use crate::spline::{self, SplineBasis};
use crate::stats;

/// Quantile of `|η̂|` used when `τ` is chosen automatically.
pub const AUTO_TAU_QUANTILE: f64 = 0.9;
/// Condition number of `Wᵀ proj⊥ W` above which the solve is refused.
pub const MAX_CONDITION: f64 = 1e12;
pub const MIN_ROWS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Tau {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Intervals {
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitScheme {
    #[default]
    Shuffle,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub tau: Tau,
    pub k: Intervals,
    pub seed: u64,
    pub wls: bool,
    pub split: SplitScheme,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tau: Tau::Auto,
            k: Intervals::Auto,
            seed: 0,
            wls: false,
            split: SplitScheme::Shuffle,
        }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Tau::Fixed(t) = self.tau {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("tau must be positive, got {t}")));
            }
        }
        if let Intervals::Fixed(k) = self.k {
            if k < 4 {
                return Err(Error::InvalidArgument(format!("K must be at least 4, got {k}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FitWarning {
    /// Every `|t|`-ratio of `γ̂` is below one in some rotation; the treatment
    /// effect is weakly identified.
    WeakIdentification { rotation: usize, max_abs_t: f64 },
}

/// Diagnostics of one rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationDiagnostics {
    pub gamma_part: usize,
    pub bprime_part: usize,
    pub alpha_part: usize,
    pub alpha: f64,
    pub tau: f64,
    pub intervals: usize,
    pub masked_bprime: usize,
    pub masked_alpha: usize,
    pub rows_alpha: usize,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedFit {
    pub alpha_bar: f64,
    /// `alpha_per_rotation[k]` is estimated on split part `k`.
    pub alpha_per_rotation: [f64; 3],
    /// `(α̂, β̂, γ̂ − γ)` from the last rotation.
    pub theta: DVector<f64>,
    pub gamma_hat: DVector<f64>,
    /// Plug-in `Ω̂_τ = 3 · Wᵀ proj⊥ W / n` from the last rotation.
    pub omega_tau_hat: DMatrix<f64>,
    pub n_used: usize,
    pub warnings: Vec<FitWarning>,
    pub rotations: Vec<RotationDiagnostics>,
    /// Column means removed from each split part.
    pub centering: Vec<Centering>,
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// Row indices of the three parts. Sizes differ by at most one with the
/// remainder going to the earliest parts.
pub fn split_indices(n: usize, cfg: &FitConfig) -> Result<[Vec<usize>; 3]> {
    if n < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_ROWS} rows to split in three, got {n}"
        )));
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    match cfg.split {
        SplitScheme::RoundRobin => {
            for i in 0..n {
                parts[i % 3].push(i);
            }
        }
        SplitScheme::Shuffle => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut seed::rng(cfg.seed));
            let mut start = 0;
            for (k, part) in parts.iter_mut().enumerate() {
                let size = n / 3 + usize::from(k < n % 3);
                part.extend_from_slice(&order[start..start + size]);
                part.sort_unstable();
                start += size;
            }
        }
    }
    Ok(parts)
}

pub fn split_three(data: &Dataset, cfg: &FitConfig) -> Result<[Dataset; 3]> {
    let idx = split_indices(data.n(), cfg)?;
    Ok([data.select(&idx[0]), data.select(&idx[1]), data.select(&idx[2])])
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GammaFit {
    pub coef: DVector<f64>,
    pub t_ratios: DVector<f64>,
}

/// OLS of `Q` on `Z`.
pub fn estimate_gamma(d1: &Dataset) -> Result<GammaFit> {
    let (n, p2) = (d1.n(), d1.p2());
    let ls = numerics::least_squares(&d1.z, &d1.q);
    if ls.rank < p2 {
        return Err(Error::SingularDesign {
            context: "estimate_gamma: Z is rank deficient".into(),
            condition: f64::INFINITY,
            columns: ls.deficient_columns,
        });
    }
    let resid = &d1.q - &d1.z * &ls.coef;
    let dof = n.saturating_sub(p2).max(1) as f64;
    let sigma2 = resid.norm_squared() / dof;
    let gram = d1.z.transpose() * &d1.z;
    let t_ratios = match gram.cholesky() {
        Some(ch) => {
            let inv = ch.inverse();
            DVector::from_fn(p2, |j, _| {
                let se = (sigma2 * inv[(j, j)]).sqrt();
                if se > 0.0 {
                    ls.coef[j] / se
                } else {
                    f64::INFINITY * ls.coef[j].signum()
                }
            })
        }
        None => DVector::from_element(p2, 0.0),
    };
    Ok(GammaFit {
        coef: ls.coef,
        t_ratios,
    })
}

#[derive(Debug, Clone)]
pub struct Residualized {
    pub eta_hat: DVector<f64>,
    pub mask: Vec<bool>,
    pub tau: f64,
}

impl Residualized {
    pub fn masked_rows(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// `η̂ = Q − Zγ̂` and the mask `|η̂| ≤ τ`.
pub fn residualize(d: &Dataset, gamma_hat: &DVector<f64>, tau: Tau) -> Result<Residualized> {
    let eta_hat = &d.q - &d.z * gamma_hat;
    let tau = match tau {
        Tau::Fixed(t) => t,
        Tau::Auto => {
            let abs: Vec<f64> = eta_hat.iter().map(|e| e.abs()).collect();
            stats::quantile(&abs, AUTO_TAU_QUANTILE)
        }
    };
    let mask: Vec<bool> = eta_hat.iter().map(|e| e.abs() <= tau).collect();
    if !mask.iter().any(|m| *m) || !(tau > 0.0) {
        return Err(Error::EmptySupport { tau });
    }
    Ok(Residualized { eta_hat, mask, tau })
}

fn masked_block(d: &Dataset, rows: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let s = d.treatment();
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| d.y[i]));
    let mut sx = DMatrix::zeros(rows.len(), 1 + d.p1());
    for (r, &i) in rows.iter().enumerate() {
        sx[(r, 0)] = s[i];
        for j in 0..d.p1() {
            sx[(r, 1 + j)] = d.x[(i, j)];
        }
    }
    (y, sx)
}

/// Spline coefficients `ω̂` with `b̂′(x) = ∇Ñ(x)ᵀω̂`.
///
/// On the masked rows, `β̂` is the OLS fit of `Y` on `proj⊥_Ñ (S, X)` and `ω̂`
/// is the OLS fit of `Y − (S, X)β̂` on `Ñ`.
pub fn estimate_bprime(d2: &Dataset, gamma_hat: &DVector<f64>, basis: &SplineBasis) -> Result<DVector<f64>> {
    let res = residualize(d2, gamma_hat, Tau::Fixed(basis.tau()))?;
    let rows = res.masked_rows();
    let need = 1 + d2.p1() + basis.dim();
    if rows.len() <= need {
        return Err(Error::InsufficientData(format!(
            "b' estimation needs more than {need} masked rows, got {}",
            rows.len()
        )));
    }
    let eta: Vec<f64> = rows.iter().map(|&i| res.eta_hat[i]).collect();
    let nmat = basis.design_matrix(&eta);
    let (y, sx) = masked_block(d2, &rows);
    let q = numerics::column_space(&nmat);
    let sx_perp = numerics::project_out_basis(&sx, &q);
    let beta = numerics::ols(&sx_perp, &y);
    let partial = &y - &sx * &beta;
    Ok(numerics::ols(&nmat, &partial))
}

/// Stacked system `(W, Ñ_a, resp)` for one α-estimation part.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub w: DMatrix<f64>,
    pub n_a: DMatrix<f64>,
    pub resp: DVector<f64>,
    /// Number of upper-block (masked) rows.
    pub n_masked: usize,
    /// `η̂` of the masked rows, in upper-block order.
    pub eta_masked: Vec<f64>,
    /// `η̂` of every row of the part.
    pub eta_all: DVector<f64>,
}

pub fn assemble_system(
    d3: &Dataset,
    gamma_hat: &DVector<f64>,
    omega_hat: &DVector<f64>,
    basis: &SplineBasis,
) -> Result<StackedSystem> {
    let res = residualize(d3, gamma_hat, Tau::Fixed(basis.tau()))?;
    let rows = res.masked_rows();
    let (n3, n) = (rows.len(), d3.n());
    let (p1, p2) = (d3.p1(), d3.p2());
    let cols = 1 + p1 + p2;
    let s = d3.treatment();
    let mut w = DMatrix::zeros(n3 + n, cols);
    let mut n_a = DMatrix::zeros(n3 + n, basis.dim());
    let mut resp = DVector::zeros(n3 + n);
    let mut eta_masked = Vec::with_capacity(n3);
    for (r, &i) in rows.iter().enumerate() {
        let eta = res.eta_hat[i];
        let slope = basis.deriv_combination(eta, omega_hat);
        w[(r, 0)] = s[i];
        for j in 0..p1 {
            w[(r, 1 + j)] = d3.x[(i, j)];
        }
        for j in 0..p2 {
            w[(r, 1 + p1 + j)] = slope * d3.z[(i, j)];
        }
        n_a.row_mut(r).copy_from(&basis.eval(eta).transpose());
        resp[r] = d3.y[i];
        eta_masked.push(eta);
    }
    for i in 0..n {
        let r = n3 + i;
        for j in 0..p2 {
            w[(r, 1 + p1 + j)] = -d3.z[(i, j)];
        }
        resp[r] = res.eta_hat[i];
    }
    Ok(StackedSystem {
        w,
        n_a,
        resp,
        n_masked: n3,
        eta_masked,
        eta_all: res.eta_hat,
    })
}

#[derive(Debug, Clone)]
pub struct AlphaSolve {
    pub theta: DVector<f64>,
    pub alpha: f64,
    /// `Wᵀ proj⊥ W`.
    pub gram: DMatrix<f64>,
    pub condition: f64,
}

/// `θ̂ = (Wᵀ proj⊥ W)⁻¹ Wᵀ proj⊥ resp` with `proj⊥` the complement of the
/// column space of `Ñ_a`.
pub fn solve_alpha(w: &DMatrix<f64>, n_a: &DMatrix<f64>, resp: &DVector<f64>) -> Result<AlphaSolve> {
    let q = numerics::column_space(n_a);
    let w_perp = numerics::project_out_basis(w, &q);
    let r_perp = numerics::project_out_vec(resp, &q);
    let gram = w_perp.transpose() * &w_perp;
    let condition = numerics::condition_number_sym(&gram);
    if !(condition <= MAX_CONDITION) {
        let qr = PivotedQr::new(&w_perp);
        let mut columns = qr.deficient_columns();
        if columns.is_empty() {
            columns = qr.permutation().last().copied().into_iter().collect();
        }
        return Err(Error::SingularDesign {
            context: "solve_alpha: W' proj W is singular".into(),
            condition,
            columns,
        });
    }
    let theta = numerics::ols(&w_perp, &r_perp);
    Ok(AlphaSolve {
        alpha: theta[0],
        theta,
        gram,
        condition,
    })
}

/// Weighted variant: row `i` of every block is divided by `scales[i]`
/// (the square root of its error variance).
pub fn solve_alpha_weighted(
    w: &DMatrix<f64>,
    n_a: &DMatrix<f64>,
    resp: &DVector<f64>,
    scales: &[f64],
) -> Result<AlphaSolve> {
    assert_eq!(scales.len(), w.nrows(), "one scale per row");
    if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::DegenerateVariance("weights must be positive and finite".into()));
    }
    let mut w = w.clone();
    let mut n_a = n_a.clone();
    let mut resp = resp.clone();
    for (i, s) in scales.iter().enumerate() {
        let inv = 1.0 / s;
        w.row_mut(i).scale_mut(inv);
        n_a.row_mut(i).scale_mut(inv);
        resp[i] *= inv;
    }
    solve_alpha(&w, &n_a, &resp)
}

/// Per-row scales `σ̂` for the weighted solve: a spline fit of squared
/// preliminary residuals on the upper block, the SD of `η̂` on the lower one.
pub fn wls_scales(sys: &StackedSystem, basis: &SplineBasis) -> Result<Vec<f64>> {
    let joint = sys.w.clone().resize_horizontally(sys.w.ncols() + sys.n_a.ncols(), 0.0);
    let mut joint = joint;
    joint
        .view_mut((0, sys.w.ncols()), (sys.n_a.nrows(), sys.n_a.ncols()))
        .copy_from(&sys.n_a);
    let coef = numerics::ols(&joint, &sys.resp);
    let resid = &sys.resp - &joint * coef;
    let m = sys.n_masked;
    let sq = DVector::from_iterator(m, resid.iter().take(m).map(|e| e * e));
    let nmat = basis.design_matrix(&sys.eta_masked);
    let vcoef = numerics::ols(&nmat, &sq);
    let fitted = &nmat * vcoef;
    let mut upper: Vec<f64> = fitted.iter().map(|v| v.max(0.0).sqrt()).collect();
    let med = stats::median(&upper);
    if !(med > 0.0) {
        return Err(Error::DegenerateVariance("variance profile estimate is not positive".into()));
    }
    let floor = 1e-3 * med;
    for s in upper.iter_mut() {
        *s = s.max(floor);
    }
    let eta: Vec<f64> = sys.eta_all.iter().copied().collect();
    let sd_eta = stats::sd(&eta);
    if !(sd_eta > 0.0) {
        return Err(Error::DegenerateVariance("eta_hat has zero spread".into()));
    }
    upper.extend(std::iter::repeat_n(sd_eta, sys.eta_all.len()));
    Ok(upper)
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// One rotation given explicit roles.
#[derive(Debug, Clone)]
pub struct RotationFit {
    pub alpha: f64,
    pub theta: DVector<f64>,
    pub gamma: GammaFit,
    pub omega_hat: DVector<f64>,
    pub basis: SplineBasis,
    pub gram: DMatrix<f64>,
    pub condition: f64,
    pub masked_bprime: usize,
    pub masked_alpha: usize,
    pub rows_alpha: usize,
}

/// Runs one rotation on already-centered parts.
pub fn fit_rotation(
    gamma_part: &Dataset,
    bprime_part: &Dataset,
    alpha_part: &Dataset,
    cfg: &FitConfig,
) -> Result<RotationFit> {
    let gamma = estimate_gamma(gamma_part)?;
    let res2 = residualize(bprime_part, &gamma.coef, cfg.tau)?;
    let k = match cfg.k {
        Intervals::Fixed(k) => k,
        Intervals::Auto => spline::default_intervals(res2.masked_count()),
    };
    let basis = SplineBasis::new(res2.tau, k)?;
    let omega_hat = estimate_bprime(bprime_part, &gamma.coef, &basis)?;
    let sys = assemble_system(alpha_part, &gamma.coef, &omega_hat, &basis)?;
    let solved = if cfg.wls {
        let scales = wls_scales(&sys, &basis)?;
        solve_alpha_weighted(&sys.w, &sys.n_a, &sys.resp, &scales)?
    } else {
        solve_alpha(&sys.w, &sys.n_a, &sys.resp)?
    };
    Ok(RotationFit {
        alpha: solved.alpha,
        theta: solved.theta,
        gamma,
        omega_hat,
        basis,
        gram: solved.gram,
        condition: solved.condition,
        masked_bprime: res2.masked_count(),
        masked_alpha: sys.n_masked,
        rows_alpha: alpha_part.n(),
    })
}

/// Rotation `r` estimates `γ` on part `r`, `b′` on part `r+1` and `α` on
/// part `r+2` (indices mod 3).
pub const ROTATIONS: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Runs the three rotations on given (uncentered) parts.
pub fn fit_parts(parts: &[Dataset; 3], cfg: &FitConfig) -> Result<FixedFit> {
    cfg.validate()?;
    let n: usize = parts.iter().map(|p| p.n()).sum();
    let (centered, centering): (Vec<Dataset>, Vec<Centering>) = parts.iter().map(|p| p.centered()).unzip();
    let mut alpha_per_rotation = [0.0; 3];
    let mut warnings = Vec::new();
    let mut diags = Vec::with_capacity(3);
    let mut last = None;
    for (r, &(g, b, a)) in ROTATIONS.iter().enumerate() {
        let rot = fit_rotation(&centered[g], &centered[b], &centered[a], cfg)?;
        let max_t = rot.gamma.t_ratios.iter().map(|t| t.abs()).fold(0.0, f64::max);
        if max_t < 1.0 {
            warnings.push(FitWarning::WeakIdentification {
                rotation: r,
                max_abs_t: max_t,
            });
        }
        alpha_per_rotation[a] = rot.alpha;
        diags.push(RotationDiagnostics {
            gamma_part: g,
            bprime_part: b,
            alpha_part: a,
            alpha: rot.alpha,
            tau: rot.basis.tau(),
            intervals: rot.basis.intervals(),
            masked_bprime: rot.masked_bprime,
            masked_alpha: rot.masked_alpha,
            rows_alpha: rot.rows_alpha,
            condition: rot.condition,
        });
        last = Some(rot);
    }
    let last = last.expect("three rotations");
    let mut omega = last.gram.clone() * (3.0 / n as f64);
    omega = (&omega + omega.transpose()) * 0.5;
    Ok(FixedFit {
        alpha_bar: stats::mean(&alpha_per_rotation),
        alpha_per_rotation,
        theta: last.theta,
        gamma_hat: last.gamma.coef,
        omega_tau_hat: omega,
        n_used: last.masked_alpha,
        warnings,
        rotations: diags,
        centering,
    })
}

/// The fixed-dimension estimator `ᾱ̂`. Honors `cfg.wls`.
pub fn fit(data: &Dataset, cfg: &FitConfig) -> Result<FixedFit> {
    cfg.validate()?;
    let parts = split_three(data, cfg)?;
    fit_parts(&parts, cfg)
}

/// Weighted-least-squares variant for heteroskedastic errors.
pub fn fit_wls(data: &Dataset, cfg: &FitConfig) -> Result<FixedFit> {
    fit(data, &FitConfig { wls: true, ..*cfg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate, DgpConfig};

    #[test]
    fn split_sizes() {
        let cfg = FitConfig::with_seed(3);
        let p = split_indices(9, &cfg).unwrap();
        assert!(p.iter().all(|v| v.len() == 3));
        let p = split_indices(10, &cfg).unwrap();
        let mut sizes: Vec<usize> = p.iter().map(|v| v.len()).collect();
        assert_eq!(sizes[0], 4);
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        let mut all: Vec<usize> = p.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_indices(10, &cfg).unwrap(), p);
        assert!(matches!(split_indices(8, &cfg), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn round_robin_split() {
        let cfg = FitConfig {
            split: SplitScheme::RoundRobin,
            ..Default::default()
        };
        let p = split_indices(11, &cfg).unwrap();
        assert_eq!(p[0], vec![0, 3, 6, 9]);
        assert_eq!(p[2], vec![2, 5, 8]);
    }

    #[test]
    fn gamma_exact_and_singular() {
        let z = DMatrix::from_fn(12, 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + j as f64 * 0.1 * i as f64);
        let g0 = DVector::from_vec(vec![1.0, -0.5]);
        let q = &z * &g0;
        let d = Dataset::new(DVector::zeros(12), q.clone(), DMatrix::zeros(12, 1), z).unwrap();
        let g = estimate_gamma(&d).unwrap();
        assert!((g.coef - g0).amax() < 1e-10);

        let d0 = Dataset::new(DVector::zeros(12), q, DMatrix::zeros(12, 1), DMatrix::zeros(12, 1)).unwrap();
        match estimate_gamma(&d0) {
            Err(Error::SingularDesign { columns, .. }) => assert_eq!(columns, vec![0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn residualize_cases() {
        let d = Dataset::new(
            DVector::zeros(4),
            DVector::from_vec(vec![0.5, -2.0, 3.0, 0.1]),
            DMatrix::zeros(4, 1),
            DMatrix::from_element(4, 1, 1.0),
        )
        .unwrap();
        let r = residualize(&d, &DVector::zeros(1), Tau::Fixed(1e9)).unwrap();
        assert_eq!(r.eta_hat, d.q);
        assert!(r.mask.iter().all(|m| *m));
        let r = residualize(&d, &DVector::zeros(1), Tau::Fixed(1.0)).unwrap();
        assert_eq!(r.mask, vec![true, false, false, true]);
        assert!(matches!(
            residualize(&d, &DVector::zeros(1), Tau::Fixed(0.01)),
            Err(Error::EmptySupport { .. })
        ));
    }

    #[test]
    fn zero_slope_gives_zero_ztilde_block() {
        let data = generate(&DgpConfig::reference(90, 1)).unwrap();
        let (d, _) = data.centered();
        let basis = SplineBasis::new(1.0, 4).unwrap();
        let omega = DVector::zeros(basis.dim());
        let g = estimate_gamma(&d).unwrap();
        let sys = assemble_system(&d, &g.coef, &omega, &basis).unwrap();
        let p1 = d.p1();
        for r in 0..sys.n_masked {
            for j in 0..d.p2() {
                assert_eq!(sys.w[(r, 1 + p1 + j)], 0.0);
            }
        }
        assert_eq!(sys.w.nrows(), sys.n_masked + d.n());
    }

    #[test]
    fn constant_weights_match_unweighted() {
        let data = generate(&DgpConfig::reference(300, 2)).unwrap();
        let (d, _) = data.centered();
        let basis = SplineBasis::new(1.5, 5).unwrap();
        let g = estimate_gamma(&d).unwrap();
        let omega = estimate_bprime(&d, &g.coef, &basis).unwrap();
        let sys = assemble_system(&d, &g.coef, &omega, &basis).unwrap();
        let a = solve_alpha(&sys.w, &sys.n_a, &sys.resp).unwrap();
        let b = solve_alpha_weighted(&sys.w, &sys.n_a, &sys.resp, &vec![2.5; sys.w.nrows()]).unwrap();
        assert!((a.theta - b.theta).amax() < 1e-8);
    }

    #[test]
    fn invalid_config() {
        let data = generate(&DgpConfig::reference(90, 1)).unwrap();
        let cfg = FitConfig {
            k: Intervals::Fixed(2),
            ..Default::default()
        };
        assert!(matches!(fit(&data, &cfg), Err(Error::InvalidArgument(_))));
        let cfg = FitConfig {
            tau: Tau::Fixed(-1.0),
            ..Default::default()
        };
        assert!(matches!(fit(&data, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fit_is_deterministic_and_averages() {
        let data = generate(&DgpConfig::reference(600, 5)).unwrap();
        let cfg = FitConfig::with_seed(9);
        let a = fit(&data, &cfg).unwrap();
        let b = fit(&data, &cfg).unwrap();
        assert_eq!(a, b);
        let m = a.alpha_per_rotation.iter().sum::<f64>() / 3.0;
        assert!((a.alpha_bar - m).abs() < 1e-12);
        assert!((&a.omega_tau_hat - a.omega_tau_hat.transpose()).amax() < 1e-10);
        assert_eq!(a.rotations.len(), 3);
    }
}
