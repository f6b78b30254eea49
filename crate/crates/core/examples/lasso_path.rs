//! LASSO along a decreasing penalty path, with KKT residuals and the two
//! automatic penalty rules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use scents::numerics::{self, LambdaMode, LassoConfig};

fn main() -> scents::Result<()> {
    let (n, p) = (200, 40);
    let mut rng = scents::seed::rng(3);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut beta = DVector::zeros(p);
    beta[0] = 2.0;
    beta[3] = -1.5;
    beta[7] = 1.0;
    let y = &x * &beta + DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));

    let cfg = LassoConfig::default();
    let grid = numerics::lambda_grid(numerics::lambda_max(&x, &y, false), 1e-3, 8);
    for fit in numerics::lasso_path(&x, &y, &grid, &cfg)? {
        println!(
            "lambda {:8.4}  support {:?}  kkt {:.1e}",
            fit.lambda,
            fit.support(),
            fit.kkt_residual
        );
    }

    for mode in [LambdaMode::Theory, LambdaMode::Cv { folds: 5 }] {
        let lambda = numerics::choose_lambda(&x, &y, mode, &cfg)?;
        let fit = numerics::lasso(&x, &y, &LassoConfig { lambda, ..cfg })?;
        println!("{mode:?}: lambda {lambda:.4}, support {:?}", fit.support());
    }
    Ok(())
}
