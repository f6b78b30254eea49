//! Monte Carlo bias, spread and normality at two sample sizes.

use scents::{monte_carlo, DgpConfig, FitConfig};

fn main() -> scents::Result<()> {
    let reps = 100;
    for n in [900, 3600] {
        let s = monte_carlo(&DgpConfig::reference(n, 11), &FitConfig::with_seed(5), reps)?;
        println!(
            "n {n:5}: bias {:+.4} (se {:.4})  sd {:.4}  rmse {:.4}  KS {:.3} (1% crit {:.3})  naive bias {:+.4}",
            s.bias,
            s.bias_se(),
            s.sd,
            s.rmse,
            s.ks_stat,
            s.ks_critical_1pct(),
            s.naive_bias
        );
    }
    Ok(())
}
