//! Ordinary against weighted stacked least squares under `σ(η) = 1 + η²`.

use scents::{monte_carlo, DgpConfig, FitConfig};

fn main() -> scents::Result<()> {
    let dgp = DgpConfig::heteroskedastic(900, 4);
    let reps = 60;
    let ols = monte_carlo(&dgp, &FitConfig::with_seed(1), reps)?;
    let wls = monte_carlo(&dgp, &FitConfig { wls: true, ..FitConfig::with_seed(1) }, reps)?;
    println!("R = {reps}, n = {}", dgp.n);
    println!("OLS: bias {:+.4}  sd {:.4}", ols.bias, ols.sd);
    println!("WLS: bias {:+.4}  sd {:.4}", wls.bias, wls.sd);
    Ok(())
}
