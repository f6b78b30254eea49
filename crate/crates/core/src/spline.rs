//! Scaled clamped cubic B-spline basis on `[-τ, τ]`.
//!
//! The support is cut into `K` equispaced intervals, giving `K + 3` basis
//! functions `N_j`. Each is multiplied by `√(K / 2τ)` so that the Gram matrix
//! `E[Ñ(X)Ñ(X)ᵀ]` under a density bounded away from zero has eigenvalues
//! bounded away from zero and infinity uniformly in `K`.
//!
//! Values come from the triangular Cox–de Boor recursion; derivatives use the
//! first-order identity
//!
//! ```text
//! N'_{j,p}(x) = p/(t_{j+p} - t_j) · N_{j,p-1}(x) - p/(t_{j+p+1} - t_{j+1}) · N_{j+1,p-1}(x)
//! ```
//!
//! Evaluation outside `[-τ, τ]` returns zeros.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    tau: f64,
    intervals: usize,
    knots: Vec<f64>,
    scale: f64,
}

impl SplineBasis {
    pub fn new(tau: f64, intervals: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spline half-width must be positive and finite, got {tau}"
            )));
        }
        if intervals < 1 {
            return Err(Error::InvalidArgument(
                "spline needs at least one interval".into(),
            ));
        }
        let h = 2.0 * tau / intervals as f64;
        let mut knots = Vec::with_capacity(intervals + 2 * DEGREE + 1);
        knots.extend(std::iter::repeat_n(-tau, DEGREE + 1));
        knots.extend((1..intervals).map(|i| -tau + i as f64 * h));
        knots.extend(std::iter::repeat_n(tau, DEGREE + 1));
        Ok(Self {
            tau,
            intervals,
            knots,
            scale: (intervals as f64 / (2.0 * tau)).sqrt(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of equispaced intervals `K`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn degree(&self) -> usize {
        DEGREE
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.knots[DEGREE + 1..DEGREE + self.intervals]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Number of basis functions, `K + 3`.
    pub fn dim(&self) -> usize {
        self.intervals + DEGREE
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= -self.tau && x <= self.tau
    }

    /// Index `s` of the knot span with `t_s <= x < t_{s+1}`; the right end
    /// belongs to the last non-degenerate span.
    fn span(&self, x: f64) -> usize {
        let last = self.dim() - 1;
        if x >= self.tau {
            return last;
        }
        let h = 2.0 * self.tau / self.intervals as f64;
        let mut s = DEGREE + (((x + self.tau) / h).floor() as usize).min(self.intervals - 1);
        // Guard against rounding at interior knots.
        while s > DEGREE && x < self.knots[s] {
            s -= 1;
        }
        while s < last && x >= self.knots[s + 1] {
            s += 1;
        }
        s
    }

    /// Nonzero unscaled basis values of degree `p` at `x`:
    /// `out[r] = N_{span-p+r, p}(x)` for `r = 0..=p`.
    fn nonzero(&self, span: usize, x: f64, p: usize, out: &mut [f64; DEGREE + 1]) {
        let t = &self.knots;
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { out[r] / denom } else { 0.0 };
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
    }

    /// Unscaled basis vector `N(x)`.
    pub fn eval_unscaled(&self, x: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        if !self.contains(x) {
            return v;
        }
        let s = self.span(x);
        let mut vals = [0.0; DEGREE + 1];
        self.nonzero(s, x, DEGREE, &mut vals);
        for (r, &val) in vals.iter().enumerate() {
            v[s - DEGREE + r] = val;
        }
        v
    }

    /// Scaled basis vector `Ñ(x) = √(K/2τ) · N(x)`.
    pub fn eval(&self, x: f64) -> DVector<f64> {
        self.eval_unscaled(x) * self.scale
    }

    /// Entrywise derivative of the unscaled basis.
    pub fn eval_deriv_unscaled(&self, x: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        if !self.contains(x) {
            return v;
        }
        let t = &self.knots;
        let s = self.span(x);
        let mut lower = [0.0; DEGREE + 1];
        self.nonzero(s, x, DEGREE - 1, &mut lower);
        // lower[r] = N_{s-2+r, 2}(x); anything outside that window vanishes.
        let n2 = |j: isize| -> f64 {
            let r = j - (s as isize - (DEGREE as isize - 1));
            if (0..DEGREE as isize).contains(&r) {
                lower[r as usize]
            } else {
                0.0
            }
        };
        let p = DEGREE as f64;
        for j in (s - DEGREE)..=s {
            let ji = j as isize;
            let mut d = 0.0;
            let a = t[j + DEGREE] - t[j];
            if a > 0.0 {
                d += p / a * n2(ji);
            }
            let b = t[j + DEGREE + 1] - t[j + 1];
            if b > 0.0 {
                d -= p / b * n2(ji + 1);
            }
            v[j] = d;
        }
        v
    }

    /// `∇Ñ(x)`, the entrywise derivative of the scaled basis.
    pub fn eval_deriv(&self, x: f64) -> DVector<f64> {
        self.eval_deriv_unscaled(x) * self.scale
    }

    /// Row `i` is `Ñ(xs[i])`.
    pub fn design_matrix(&self, xs: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(xs.len(), self.dim());
        for (i, &x) in xs.iter().enumerate() {
            m.row_mut(i).copy_from(&self.eval(x).transpose());
        }
        m
    }

    /// Row `i` is `∇Ñ(xs[i])`.
    pub fn deriv_matrix(&self, xs: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(xs.len(), self.dim());
        for (i, &x) in xs.iter().enumerate() {
            m.row_mut(i).copy_from(&self.eval_deriv(x).transpose());
        }
        m
    }

    /// `∇Ñ(x)ᵀ ω`.
    pub fn deriv_combination(&self, x: f64, coef: &DVector<f64>) -> f64 {
        self.eval_deriv(x).dot(coef)
    }

    /// `Ñ(x)ᵀ ω`.
    pub fn combination(&self, x: f64, coef: &DVector<f64>) -> f64 {
        self.eval(x).dot(coef)
    }
}

/// Default interval count `round(n^{1/4})`, clipped to `[4, 50]`.
pub fn default_intervals(n: usize) -> usize {
    ((n as f64).powf(0.25).round() as usize).clamp(4, 50)
}

pub mod checks {
    //! Property suite backing the `spline-check` command.

    use nalgebra::DMatrix;
    use rand::Rng;
    use serde::{Deserialize, Serialize};

    use super::SplineBasis;
    use crate::error::Result;
    use crate::seed;

    #[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
    pub struct CheckResult {
        pub name: String,
        pub passed: bool,
        pub value: f64,
        pub threshold: f64,
    }

    fn check(name: &str, value: f64, threshold: f64, passed: bool) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed,
            value,
            threshold,
        }
    }

    /// Smallest and largest eigenvalue of the Monte Carlo Gram matrix
    /// `(1/m) Σ Ñ(xᵢ)Ñ(xᵢ)ᵀ` with `xᵢ` uniform on `[-τ, τ]`.
    pub fn uniform_gram_eigen_range(basis: &SplineBasis, m: usize, seed: u64) -> (f64, f64) {
        let mut rng = seed::rng(seed);
        let tau = basis.tau();
        let dim = basis.dim();
        let mut g = DMatrix::<f64>::zeros(dim, dim);
        for _ in 0..m {
            let x = rng.random_range(-tau..=tau);
            let v = basis.eval(x);
            g.ger(1.0, &v, &v, 1.0);
        }
        g /= m as f64;
        let eig = g.symmetric_eigen().eigenvalues;
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// `sup_x ‖∇Ñ(x)‖ / (K√K)` over a dense grid.
    pub fn deriv_norm_ratio(basis: &SplineBasis, grid: usize) -> f64 {
        let tau = basis.tau();
        let k = basis.intervals() as f64;
        (0..=grid)
            .map(|i| -tau + 2.0 * tau * i as f64 / grid as f64)
            .map(|x| basis.eval_deriv(x).norm())
            .fold(0.0, f64::max)
            / (k * k.sqrt())
    }

    /// Runs the invariant suite for one `(τ, K)` and returns one row per
    /// property.
    pub fn run(tau: f64, intervals: usize, seed: u64) -> Result<Vec<CheckResult>> {
        let basis = SplineBasis::new(tau, intervals)?;
        let mut rng = seed::rng(seed);
        let mut out = Vec::new();

        let pts: Vec<f64> = (0..1000).map(|_| rng.random_range(-tau..=tau)).collect();
        let pou = pts
            .iter()
            .map(|&x| (basis.eval_unscaled(x).sum() - 1.0).abs())
            .fold(0.0, f64::max);
        out.push(check("partition_of_unity", pou, 1e-10, pou <= 1e-10));

        let support = pts
            .iter()
            .map(|&x| basis.eval(x).iter().filter(|v| **v != 0.0).count())
            .max()
            .unwrap_or(0) as f64;
        out.push(check("local_support", support, 4.0, support <= 4.0));

        let left = basis.eval_unscaled(-tau);
        let right = basis.eval_unscaled(tau);
        let dim = basis.dim();
        let mut end_err = (left[0] - 1.0).abs().max((right[dim - 1] - 1.0).abs());
        for j in 1..dim {
            end_err = end_err.max(left[j].abs()).max(right[dim - 1 - j].abs());
        }
        out.push(check("clamped_endpoints", end_err, 1e-12, end_err <= 1e-12));

        let step = 1e-6;
        let mut fd_err: f64 = 0.0;
        for _ in 0..100 {
            let x = rng.random_range((-tau + 2.0 * step)..(tau - 2.0 * step));
            let fd = (basis.eval(x + step) - basis.eval(x - step)) / (2.0 * step);
            let an = basis.eval_deriv(x);
            fd_err = fd_err.max((fd - an).amax() / basis.scale().max(1.0));
        }
        out.push(check("derivative_vs_finite_difference", fd_err, 1e-5, fd_err <= 1e-5));

        let dsum = pts
            .iter()
            .filter(|&&x| x > -tau && x < tau)
            .map(|&x| basis.eval_deriv_unscaled(x).sum().abs())
            .fold(0.0, f64::max);
        out.push(check("derivative_sums_to_zero", dsum, 1e-8, dsum <= 1e-8));

        // Ratio against K√K at K and 2K must stay bounded.
        let r1 = deriv_norm_ratio(&basis, 4000);
        let r2 = deriv_norm_ratio(&SplineBasis::new(tau, 2 * intervals)?, 4000);
        let growth = r2 / r1;
        out.push(check("derivative_norm_k_sqrt_k", growth, 1.5, growth <= 1.5));

        let f = 1.0 / (2.0 * tau);
        let (lo, hi) = uniform_gram_eigen_range(&basis, 50_000, seed ^ 0x5eed);
        out.push(check("gram_min_eigenvalue", lo, 0.005 * f, lo >= 0.005 * f));
        out.push(check("gram_max_eigenvalue", hi, f * 1.05, hi <= f * 1.05));
        Ok(out)
    }
}
