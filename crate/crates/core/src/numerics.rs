//! Dense least squares, projections onto orthogonal complements, and an
//! ℓ₁-penalized least-squares solver.
//!
//! Least squares goes through a Householder QR with column pivoting. Systems
//! whose numerical rank (relative threshold `1e-10` on the diagonal of `R`)
//! falls short of the column count are solved in the minimum-norm sense.
//!
//! The LASSO objective is `(1/2n)‖y − Xθ‖² + λ Σⱼ wⱼ|θⱼ|` where the weights
//! are `1`, or `‖xⱼ‖/√n` when `standardize` is set (equivalent to solving on
//! unit-norm columns and mapping back). It is minimized by cyclic coordinate
//! descent with an active-set inner loop. No intercept is fitted anywhere in
//! this module; callers center their columns.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold on `|R_kk| / |R_00|` below which a pivot is treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Householder QR with column pivoting, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// `R` in the upper triangle, Householder vectors below the diagonal.
    packed: DMatrix<f64>,
    betas: Vec<f64>,
    /// `perm[k]` is the original index of the k-th pivoted column.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (n, p) = a.shape();
        let mut m = a.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let steps = n.min(p);
        let mut betas = Vec::with_capacity(steps);
        let mut rank = 0;
        let mut r00 = 0.0;
        for k in 0..steps {
            // Pivot on the largest remaining column norm.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..p {
                let nrm = m.view((k, j), (n - k, 1)).norm_squared();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if best != k {
                m.swap_columns(k, best);
                perm.swap(k, best);
            }
            let alpha_norm = best_norm.max(0.0).sqrt();
            if k == 0 {
                r00 = alpha_norm;
            }
            if alpha_norm == 0.0 || alpha_norm <= RANK_TOL * r00 {
                break;
            }
            // Householder vector v with v[0] = 1 stored below the diagonal.
            let x0 = m[(k, k)];
            let sign = if x0 >= 0.0 { 1.0 } else { -1.0 };
            let diag = -sign * alpha_norm;
            let v0 = x0 - diag;
            for i in (k + 1)..n {
                m[(i, k)] /= v0;
            }
            let beta = -v0 / diag;
            m[(k, k)] = diag;
            for j in (k + 1)..p {
                let mut s = m[(k, j)];
                for i in (k + 1)..n {
                    s += m[(i, k)] * m[(i, j)];
                }
                s *= beta;
                m[(k, j)] -= s;
                for i in (k + 1)..n {
                    let vik = m[(i, k)];
                    m[(i, j)] -= s * vik;
                }
            }
            betas.push(beta);
            rank += 1;
        }
        Self {
            packed: m,
            betas,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Original indices of columns that did not make it into the numerical
    /// column space.
    pub fn deficient_columns(&self) -> Vec<usize> {
        let mut cols = self.perm[self.rank..].to_vec();
        cols.sort_unstable();
        cols
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.rank).map(|k| self.packed[(k, k)]).collect()
    }

    /// Applies `Qᵀ` in place to the columns of `b`.
    pub fn apply_qt(&self, b: &mut DMatrix<f64>) {
        let n = self.packed.nrows();
        for (k, &beta) in self.betas.iter().enumerate() {
            for c in 0..b.ncols() {
                let mut s = b[(k, c)];
                for i in (k + 1)..n {
                    s += self.packed[(i, k)] * b[(i, c)];
                }
                s *= beta;
                b[(k, c)] -= s;
                for i in (k + 1)..n {
                    b[(i, c)] -= s * self.packed[(i, k)];
                }
            }
        }
    }

    /// First `rank` columns of `Q`: an orthonormal basis of the numerical
    /// column space.
    pub fn thin_q(&self) -> DMatrix<f64> {
        let n = self.packed.nrows();
        let r = self.rank;
        let mut q = DMatrix::zeros(n, r);
        for j in 0..r {
            q[(j, j)] = 1.0;
        }
        for k in (0..r).rev() {
            let beta = self.betas[k];
            for c in 0..r {
                let mut s = q[(k, c)];
                for i in (k + 1)..n {
                    s += self.packed[(i, k)] * q[(i, c)];
                }
                s *= beta;
                q[(k, c)] -= s;
                for i in (k + 1)..n {
                    q[(i, c)] -= s * self.packed[(i, k)];
                }
            }
        }
        q
    }

    /// Least-squares solution of a full-column-rank system.
    fn solve_full_rank(&self, y: &DVector<f64>) -> DVector<f64> {
        let p = self.perm.len();
        let mut b = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
        self.apply_qt(&mut b);
        let mut z = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = b[(i, 0)];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                s -= self.packed[(i, j)] * zj;
            }
            z[i] = s / self.packed[(i, i)];
        }
        let mut theta = DVector::zeros(p);
        for (k, &orig) in self.perm.iter().enumerate() {
            theta[orig] = z[k];
        }
        theta
    }
}

/// Outcome of a least-squares solve together with rank diagnostics.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: DVector<f64>,
    pub rank: usize,
    pub deficient_columns: Vec<usize>,
}

/// Minimum-norm least squares with rank information.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    let p = x.ncols();
    if p == 0 {
        return LeastSquares {
            coef: DVector::zeros(0),
            rank: 0,
            deficient_columns: vec![],
        };
    }
    let qr = PivotedQr::new(x);
    if qr.rank() == p {
        return LeastSquares {
            coef: qr.solve_full_rank(y),
            rank: p,
            deficient_columns: vec![],
        };
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let coef = svd
        .solve(y, RANK_TOL * smax.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(p));
    LeastSquares {
        coef,
        rank: qr.rank(),
        deficient_columns: qr.deficient_columns(),
    }
}

/// Minimum-norm least-squares coefficients of `y` on the columns of `x`.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    least_squares(x, y).coef
}

/// Orthonormal basis of the numerical column space of `m`.
pub fn column_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    PivotedQr::new(m).thin_q()
}

/// `proj⊥_M A = A − M(MᵀM)⁻MᵀA`.
pub fn project_out(a: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), m.nrows(), "project_out: row mismatch");
    let q = column_space(m);
    project_out_basis(a, &q)
}

/// Projection complement given an orthonormal basis `q`.
pub fn project_out_basis(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    if q.ncols() == 0 {
        return a.clone();
    }
    let coef = q.transpose() * a;
    a - q * coef
}

pub fn project_out_vec(v: &DVector<f64>, q: &DMatrix<f64>) -> DVector<f64> {
    if q.ncols() == 0 {
        return v.clone();
    }
    let coef = q.transpose() * v;
    v - q * coef
}

/// Largest to smallest eigenvalue ratio of a symmetric positive
/// semi-definite matrix; infinite when the smallest is not positive.
pub fn condition_number_sym(g: &DMatrix<f64>) -> f64 {
    if g.nrows() == 0 {
        return 1.0;
    }
    let eig = g.clone().symmetric_eigen().eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo <= 0.0 || hi <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

// ---------------------------------------------------------------------------
// LASSO
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub lambda: f64,
    /// Cap on coordinate-descent sweeps (full and active-set).
    pub max_iters: usize,
    /// Convergence tolerance on the largest coefficient change, measured in
    /// column-norm units.
    pub tol: f64,
    pub standardize: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            max_iters: 100_000,
            tol: 1e-10,
            standardize: false,
        }
    }
}

impl LassoConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) || self.max_iters < 1 {
            return Err(Error::InvalidArgument("lasso needs tol > 0 and max_iters >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub lambda: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
    /// Objective value after every sweep.
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    pub fn support(&self) -> Vec<usize> {
        self.coef.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(j, _)| j).collect()
    }
}

fn penalty_weights(x: &DMatrix<f64>, standardize: bool) -> Vec<f64> {
    let n = x.nrows().max(1) as f64;
    x.column_iter()
        .map(|c| if standardize { (c.norm_squared() / n).sqrt() } else { 1.0 })
        .collect()
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `(1/2n)‖y − Xθ‖² + λ Σ wⱼ|θⱼ|`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>, lambda: f64, standardize: bool) -> f64 {
    let n = x.nrows().max(1) as f64;
    let w = penalty_weights(x, standardize);
    let r = y - x * theta;
    r.norm_squared() / (2.0 * n) + lambda * theta.iter().zip(&w).map(|(t, w)| w * t.abs()).sum::<f64>()
}

fn weighted_kkt(x: &DMatrix<f64>, r: &DVector<f64>, theta: &DVector<f64>, lambda: f64, w: &[f64]) -> f64 {
    let n = x.nrows().max(1) as f64;
    let mut worst: f64 = 0.0;
    for (j, col) in x.column_iter().enumerate() {
        let g = col.dot(r) / n;
        let lw = lambda * w[j];
        let v = if theta[j] != 0.0 {
            (g - lw * theta[j].signum()).abs()
        } else {
            (g.abs() - lw).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Largest violation of the unweighted LASSO optimality conditions:
/// `|Xⱼᵀr/n| ≤ λ` off the support and `Xⱼᵀr/n = λ·sign(θⱼ)` on it.
pub fn kkt_residual(x: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>, lambda: f64) -> f64 {
    let r = y - x * theta;
    weighted_kkt(x, &r, theta, lambda, &vec![1.0; x.ncols()])
}

/// KKT residual matching the penalty weighting implied by `standardize`.
pub fn kkt_residual_cfg(x: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>, cfg: &LassoConfig) -> f64 {
    let r = y - x * theta;
    weighted_kkt(x, &r, theta, cfg.lambda, &penalty_weights(x, cfg.standardize))
}

/// Smallest λ at which the LASSO solution is identically zero.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>, standardize: bool) -> f64 {
    let n = x.nrows().max(1) as f64;
    let w = penalty_weights(x, standardize);
    x.column_iter()
        .zip(&w)
        .filter(|(_, w)| **w > 0.0)
        .map(|(c, w)| (c.dot(y) / n).abs() / w)
        .fold(0.0, f64::max)
}

pub fn lasso(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Result<LassoFit> {
    lasso_warm(x, y, cfg, None)
}

/// Coordinate descent starting from `init` (zeros when absent).
pub fn lasso_warm(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig, init: Option<&DVector<f64>>) -> Result<LassoFit> {
    cfg.validate()?;
    let (n, p) = x.shape();
    assert_eq!(y.len(), n, "lasso: row mismatch");
    let nf = n.max(1) as f64;
    let w = penalty_weights(x, cfg.standardize);
    let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / nf).collect();
    let mut theta = match init {
        Some(t) => t.clone(),
        None => DVector::zeros(p),
    };
    for j in 0..p {
        if col_sq[j] == 0.0 {
            theta[j] = 0.0;
        }
    }
    let lambda = cfg.lambda;
    let objective = |r: &DVector<f64>, theta: &DVector<f64>| -> f64 {
        r.norm_squared() / (2.0 * nf) + lambda * theta.iter().zip(&w).map(|(t, w)| w * t.abs()).sum::<f64>()
    };

    let mut r: DVector<f64>;
    let mut trace = Vec::new();
    let mut sweeps = 0usize;

    let update = |j: usize, theta: &mut DVector<f64>, r: &mut DVector<f64>| -> f64 {
        let cj = col_sq[j];
        if cj == 0.0 {
            return 0.0;
        }
        let col = x.column(j);
        let old = theta[j];
        let z = col.dot(r) / nf + cj * old;
        let new = soft_threshold(z, lambda * w[j]) / cj;
        let delta = new - old;
        if delta != 0.0 {
            r.axpy(-delta, &col, 1.0);
            theta[j] = new;
        }
        delta.abs() * cj.sqrt()
    };

    loop {
        // Full sweep over every coordinate.
        r = y - x * &theta;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            max_change = max_change.max(update(j, &mut theta, &mut r));
        }
        sweeps += 1;
        trace.push(objective(&r, &theta));
        if max_change < cfg.tol {
            break;
        }
        if sweeps >= cfg.max_iters {
            return Err(Error::LassoNotConverged {
                kkt_residual: weighted_kkt(x, &r, &theta, lambda, &w),
                coef: theta.as_slice().to_vec(),
                iterations: sweeps,
            });
        }
        // Active-set sweeps until the support stabilizes.
        let active: Vec<usize> = (0..p).filter(|&j| theta[j] != 0.0).collect();
        loop {
            let mut change: f64 = 0.0;
            for &j in &active {
                change = change.max(update(j, &mut theta, &mut r));
            }
            sweeps += 1;
            trace.push(objective(&r, &theta));
            if change < cfg.tol {
                break;
            }
            if sweeps >= cfg.max_iters {
                return Err(Error::LassoNotConverged {
                    kkt_residual: weighted_kkt(x, &r, &theta, lambda, &w),
                    coef: theta.as_slice().to_vec(),
                    iterations: sweeps,
                });
            }
        }
    }

    let r = y - x * &theta;
    Ok(LassoFit {
        kkt_residual: weighted_kkt(x, &r, &theta, lambda, &w),
        coef: theta,
        lambda,
        sweeps,
        objective_trace: trace,
    })
}

/// Solutions along a decreasing λ sequence with warm starts.
pub fn lasso_path(x: &DMatrix<f64>, y: &DVector<f64>, lambdas: &[f64], cfg: &LassoConfig) -> Result<Vec<LassoFit>> {
    let mut out: Vec<LassoFit> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let c = LassoConfig { lambda, ..*cfg };
        let fit = lasso_warm(x, y, &c, out.last().map(|f| &f.coef))?;
        out.push(fit);
    }
    Ok(out)
}

/// Log-spaced grid from `lambda_max` down to `ratio · lambda_max`.
pub fn lambda_grid(lmax: f64, ratio: f64, count: usize) -> Vec<f64> {
    if count <= 1 || lmax <= 0.0 {
        return vec![lmax.max(0.0)];
    }
    (0..count)
        .map(|k| lmax * ratio.powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// How the penalty level of a LASSO sub-problem is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// K-fold cross-validation over a log grid.
    Cv { folds: usize },
    /// `1.1 · σ̂ · √(log p / n)` with `σ̂` from a ridge pilot fit.
    Theory,
    Fixed(f64),
}

impl Default for LambdaMode {
    fn default() -> Self {
        LambdaMode::Cv { folds: 5 }
    }
}

pub const THEORY_CONSTANT: f64 = 1.1;
const CV_GRID: usize = 40;

/// Residual standard deviation from a ridge pilot fit
/// `min (1/2n)‖y − Xθ‖² + (μ/2)‖θ‖²`, with `μ` the mean eigenvalue of
/// `XXᵀ/n` and degrees of freedom `tr(hat)`.
pub fn ridge_sigma(x: &DMatrix<f64>, y: &DVector<f64>, standardize: bool) -> f64 {
    let n = x.nrows();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mut xs = x.clone();
    if standardize {
        for (j, w) in penalty_weights(x, true).iter().enumerate() {
            if *w > 0.0 {
                xs.column_mut(j).scale_mut(1.0 / w);
            }
        }
    }
    let mu = xs.norm_squared() / (nf * nf);
    if mu <= 0.0 {
        return (y.norm_squared() / (nf - 1.0)).sqrt();
    }
    if xs.ncols() < n {
        let g = (xs.transpose() * &xs) / nf;
        let eig = g.clone().symmetric_eigen();
        let df: f64 = eig.eigenvalues.iter().map(|d| d.max(0.0) / (d.max(0.0) + mu)).sum();
        let mut a = g;
        for j in 0..a.ncols() {
            a[(j, j)] += mu;
        }
        let rhs = xs.transpose() * y / nf;
        let theta = a.cholesky().map(|c| c.solve(&rhs)).unwrap_or_else(|| DVector::zeros(xs.ncols()));
        let rss = (y - &xs * theta).norm_squared();
        return (rss / (nf - df).max(1.0)).sqrt();
    }
    let k = (&xs * xs.transpose()) / nf;
    let eig = k.symmetric_eigen();
    let uty = eig.eigenvectors.transpose() * y;
    let mut df = 0.0;
    let mut rss = 0.0;
    for (i, d) in eig.eigenvalues.iter().enumerate() {
        let d = d.max(0.0);
        let shrink = d / (d + mu);
        df += shrink;
        rss += ((1.0 - shrink) * uty[i]).powi(2);
    }
    (rss / (nf - df).max(1.0)).sqrt()
}

pub fn theory_lambda(x: &DMatrix<f64>, y: &DVector<f64>, standardize: bool) -> f64 {
    let (n, p) = x.shape();
    let sigma = ridge_sigma(x, y, standardize);
    THEORY_CONSTANT * sigma * ((p.max(2) as f64).ln() / n.max(1) as f64).sqrt()
}

/// Cross-validated λ; folds are `i mod k`, ties go to the larger λ.
pub fn cv_lambda(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig, folds: usize) -> Result<f64> {
    let (n, p) = x.shape();
    let folds = folds.clamp(2, n.max(2));
    let lmax = lambda_max(x, y, cfg.standardize);
    if lmax <= 0.0 {
        return Ok(0.0);
    }
    let ratio = if n < p { 1e-2 } else { 1e-4 };
    let grid = lambda_grid(lmax, ratio, CV_GRID);
    let errors: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..n).filter(|i| i % folds != f).collect();
            let test: Vec<usize> = (0..n).filter(|i| i % folds == f).collect();
            let xt = x.select_rows(&train);
            let yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
            let xv = x.select_rows(&test);
            let yv = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
            let path = lasso_path(&xt, &yt, &grid, cfg)?;
            Ok(path
                .iter()
                .map(|fit| (&yv - &xv * &fit.coef).norm_squared() / test.len().max(1) as f64)
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut best = (f64::INFINITY, grid[0]);
    for (k, &lambda) in grid.iter().enumerate() {
        let e = errors.iter().map(|v| v[k]).sum::<f64>() / folds as f64;
        if e < best.0 {
            best = (e, lambda);
        }
    }
    Ok(best.1)
}

/// Resolves the penalty level for `(x, y)` under `mode`.
pub fn choose_lambda(x: &DMatrix<f64>, y: &DVector<f64>, mode: LambdaMode, cfg: &LassoConfig) -> Result<f64> {
    match mode {
        LambdaMode::Fixed(l) => Ok(l),
        LambdaMode::Theory => Ok(theory_lambda(x, y, cfg.standardize)),
        LambdaMode::Cv { folds } => cv_lambda(x, y, cfg, folds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = crate::seed::rng(seed);
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    fn random_vector(n: usize, seed: u64) -> DVector<f64> {
        let mut rng = crate::seed::rng(seed);
        DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn ols_identity() {
        let x = DMatrix::identity(3, 3);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let b = ols(&x, &y);
        assert!((b - y).amax() < 1e-14);
    }

    #[test]
    fn ols_recovers_noiseless() {
        let x = random_matrix(25, 4, 1);
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let y = &x * &beta;
        assert!((ols(&x, &y) - beta).amax() < 1e-10);
    }

    #[test]
    fn ols_rank_deficient_is_min_norm() {
        // Duplicate column: min-norm solution splits the weight evenly.
        let mut x = random_matrix(10, 2, 5);
        let c = x.column(0).clone_owned();
        x = x.insert_column(2, 0.0);
        x.set_column(2, &c);
        let y = x.column(0) * 2.0;
        let ls = least_squares(&x, &y);
        assert_eq!(ls.rank, 2);
        assert_eq!(ls.deficient_columns.len(), 1);
        assert!((ls.coef[0] - 1.0).abs() < 1e-8);
        assert!((ls.coef[2] - 1.0).abs() < 1e-8);
        assert!(ls.coef[1].abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let x = DMatrix::zeros(5, 2);
        let ls = least_squares(&x, &DVector::from_element(5, 1.0));
        assert_eq!(ls.rank, 0);
        assert!(ls.coef.amax() == 0.0);
    }

    #[test]
    fn project_out_edge_cases() {
        let a = random_matrix(30, 4, 2);
        let zero = DMatrix::zeros(30, 2);
        assert!((project_out(&a, &zero) - &a).amax() < 1e-15);
        assert!(project_out(&a, &a).amax() < 1e-12);
    }

    #[test]
    fn thin_q_is_orthonormal() {
        let m = random_matrix(40, 6, 9);
        let q = column_space(&m);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn lasso_zero_above_threshold() {
        let x = random_matrix(30, 5, 3);
        let y = random_vector(30, 4);
        let lmax = lambda_max(&x, &y, false);
        let fit = lasso(&x, &y, &LassoConfig::with_lambda(lmax * 1.0001)).unwrap();
        assert!(fit.coef.iter().all(|c| *c == 0.0));
        assert!(kkt_residual(&x, &y, &fit.coef, lmax) < 1e-12);
    }

    #[test]
    fn lasso_unpenalized_matches_ols() {
        let x = random_matrix(20, 3, 6);
        let y = random_vector(20, 7);
        let fit = lasso(&x, &y, &LassoConfig::with_lambda(0.0)).unwrap();
        assert!((fit.coef - ols(&x, &y)).amax() < 1e-6);
    }

    #[test]
    fn lasso_non_convergence_is_reported() {
        let x = random_matrix(20, 10, 8);
        let y = random_vector(20, 9);
        let cfg = LassoConfig {
            lambda: 1e-4,
            max_iters: 1,
            tol: 1e-14,
            standardize: false,
        };
        match lasso(&x, &y, &cfg) {
            Err(Error::LassoNotConverged { coef, kkt_residual, .. }) => {
                assert_eq!(coef.len(), 10);
                assert!(kkt_residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn standardized_kkt_uses_weights() {
        let mut x = random_matrix(40, 4, 10);
        x.column_mut(1).scale_mut(10.0);
        let y = random_vector(40, 11);
        let cfg = LassoConfig {
            lambda: 0.05,
            standardize: true,
            ..Default::default()
        };
        let fit = lasso(&x, &y, &cfg).unwrap();
        assert!(kkt_residual_cfg(&x, &y, &fit.coef, &cfg) < 1e-6);
    }

    #[test]
    fn invalid_config_rejected() {
        let x = random_matrix(5, 2, 1);
        let y = random_vector(5, 1);
        assert!(lasso(&x, &y, &LassoConfig::with_lambda(-1.0)).is_err());
    }

    #[test]
    fn cv_and_theory_lambdas_are_in_range() {
        let x = random_matrix(80, 30, 12);
        let mut beta = DVector::zeros(30);
        beta[0] = 2.0;
        beta[3] = -1.5;
        let y = &x * &beta + random_vector(80, 13) * 0.5;
        let cfg = LassoConfig::default();
        let lmax = lambda_max(&x, &y, false);
        let l = cv_lambda(&x, &y, &cfg, 5).unwrap();
        assert!(l > 0.0 && l <= lmax);
        let t = theory_lambda(&x, &y, false);
        assert!(t > 0.0 && t < lmax);
        let sigma = ridge_sigma(&x, &y, false);
        assert!(sigma > 0.2 && sigma < 2.0, "{sigma}");
    }
}
