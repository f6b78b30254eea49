//! Fixed-dimension estimate on a synthetic sample, compared with naive OLS.

use scents::simulate::naive_ols;
use scents::{fit, generate, DgpConfig, FitConfig};

fn main() -> scents::Result<()> {
    let dgp = DgpConfig::endogenous(3000, 0.6, 1);
    let data = generate(&dgp)?;
    let f = fit(&data, &FitConfig::with_seed(7))?;

    println!("true alpha       {}", dgp.alpha0);
    println!("estimate         {:.4}", f.alpha_bar);
    println!("per rotation     {:?}", f.alpha_per_rotation);
    println!("naive OLS        {:.4}", naive_ols(&data));
    println!("gamma_hat        {:?}", f.gamma_hat.as_slice());
    for r in &f.rotations {
        println!(
            "rotation gamma={} b'={} alpha={}: tau {:.3}, K {}, masked {}/{}, cond {:.1}",
            r.gamma_part, r.bprime_part, r.alpha_part, r.tau, r.intervals, r.masked_alpha, r.rows_alpha, r.condition
        );
    }
    if !f.warnings.is_empty() {
        println!("warnings: {:?}", f.warnings);
    }
    Ok(())
}
