//! Debiased estimate with 500 outcome and 500 score covariates.

use scents::{fit_hd, generate, DgpConfig, HdConfig};

fn main() -> scents::Result<()> {
    let dgp = DgpConfig::high_dim(600, 500, 500, 3, 2);
    let data = generate(&dgp)?;
    let f = fit_hd(&data, &HdConfig::with_seed(5))?;
    let support = |v: &nalgebra::DVector<f64>| v.iter().filter(|c| **c != 0.0).count();

    println!("alpha_hat {:.4}  (true {})", f.alpha_hat, dgp.alpha0);
    println!("95% interval ({:.4}, {:.4}), se {:.4}", f.ci95.0, f.ci95.1, f.se());
    println!("n3 {}, tau {:.3}, K {}", f.n3, f.tau, f.intervals);
    println!("lambdas {:?}", f.lambdas);
    println!(
        "supports: gamma {}, beta {}, theta_y {}, theta_s {}",
        support(&f.gamma_hat),
        support(&f.beta_hat),
        support(&f.theta_y),
        support(&f.theta_s)
    );
    Ok(())
}
