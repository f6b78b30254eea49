//! Evaluate the scaled cubic B-spline basis and run its property suite.

use scents::spline::checks;
use scents::SplineBasis;

fn main() -> scents::Result<()> {
    let basis = SplineBasis::new(1.0, 4)?;
    println!("dim = {}, scale = {:.4}", basis.dim(), basis.scale());
    println!("interior knots = {:?}", basis.interior_knots());

    for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
        let v = basis.eval_unscaled(x);
        let d = basis.eval_deriv(x);
        println!(
            "x = {x:5.2}  N = {:?}  sum = {:.3}  |dN| = {:.3}",
            v.iter().map(|e| (e * 1e3).round() / 1e3).collect::<Vec<_>>(),
            v.sum(),
            d.norm()
        );
    }

    for row in checks::run(1.0, 8, 0)? {
        println!(
            "{:<34} {:>10.3e}  (threshold {:.3e})  {}",
            row.name,
            row.value,
            row.threshold,
            if row.passed { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
