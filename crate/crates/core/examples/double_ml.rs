//! Naive OLS against cross-fitted double machine learning when the
//! treatment shares confounders with the outcome.

use hidden_dissent::econ::{dml_effect, ols_robust, Design};
use hidden_dissent::seed;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

fn main() -> hidden_dissent::Result<()> {
    let mut rng = seed::stream(6, &[]);
    let (n, theta) = (1000, 0.5);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = DMatrix::from_fn(n, 10, |_, _| draw());
    let t: Vec<f64> = (0..n).map(|i| 5.0 * x[(i, 0)] + 5.0 * x[(i, 1)] + 10.0 * draw()).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| theta * t[i] + 5.0 * x[(i, 0)] + 5.0 * x[(i, 1)] + 3.0 * x[(i, 2)] + 10.0 * draw())
        .collect();

    let naive = ols_robust(&Design::with_intercept(y.clone(), &[("t", t.clone())])?)?;
    let (b, se) = naive.get("t").expect("t is a regressor");
    println!("truth {theta}");
    println!("naive OLS  {b:.4} ({se:.4})");
    let dml = dml_effect(&y, &t, &x, 5, 1.0, 6)?;
    println!("DML        {:.4} ({:.4}), {} folds, lasso lambda {}", dml.theta, dml.se, dml.folds, dml.lambda);
    Ok(())
}
