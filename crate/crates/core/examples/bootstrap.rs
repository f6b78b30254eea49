//! Pairs-bootstrap percentile interval in the layout of a summary table.

use scents::cli::ci_label;
use scents::{bootstrap_ci, generate, BootstrapConfig, DgpConfig, FitConfig};

fn main() -> scents::Result<()> {
    let data = generate(&DgpConfig::reference(900, 3))?;
    let res = bootstrap_ci(&data, &FitConfig::with_seed(1), &BootstrapConfig::new(200, 0.95, 2))?;
    println!("{:<22}{:.7}", "Point Estimate", res.point);
    println!("{:<22}{:.7}", "Bootstrap mean.", res.boot_mean);
    println!("{:<22}{:.5}", "Bootstrap s.e.", res.boot_se);
    println!("{:<22}({:.7}, {:.7})", ci_label(res.level), res.ci.0, res.ci.1);
    println!("failed replicates: {} of {}", res.failures, res.b);
    Ok(())
}
