//! Principal components of correlated disagreement measures.

use hidden_dissent::covariates::pca;
use hidden_dissent::seed;
use nalgebra::DMatrix;
use rand::Rng;

fn main() -> hidden_dissent::Result<()> {
    let mut rng = seed::stream(8, &[]);
    let n = 60;
    let common: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let names: Vec<String> = ["gdp", "unemployment", "pce", "core_pce"].iter().map(|s| s.to_string()).collect();
    let data = DMatrix::from_fn(n, names.len(), |i, j| (j + 1) as f64 * common[i] + 0.3 * rng.random_range(0.0..1.0));
    let res = pca(&data, &names, 2)?;
    println!("eigenvalues {:.3?}", res.eigenvalues);
    println!("explained   {:.3?}", res.explained_variance_ratio);
    for (j, name) in res.columns.iter().enumerate() {
        println!("{name:<13} {:>7.3} {:>7.3}", res.loadings[(j, 0)], res.loadings[(j, 1)]);
    }
    Ok(())
}
