//! Beta and fractional-logit regressions on a simulated dissent share,
//! plus a random-intercept beta model with member clusters.

use hidden_dissent::econ::{beta_regression, fractional_logit, random_intercept, Design, Family, FitResult, MixedOptions};
use hidden_dissent::seed;
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};

fn show(fit: &FitResult) {
    println!("{}:", fit.model);
    for (i, name) in fit.names.iter().enumerate() {
        println!("  {name:<10} {:>8.4} ({:.4})", fit.coef[i], fit.se[i]);
    }
}

fn main() -> hidden_dissent::Result<()> {
    let mut rng = seed::stream(5, &[]);
    let (n, phi) = (400, 30.0);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|xi| {
            let mu = 1.0 / (1.0 + (-(-1.0 + 0.8 * xi)).exp());
            Beta::new(mu * phi, (1.0 - mu) * phi).expect("valid shape").sample(&mut rng)
        })
        .collect();
    println!("truth: const -1.0, x 0.8, phi {phi}");
    let d = Design::with_intercept(y, &[("x", x)])?;
    show(&beta_regression(&d)?);
    show(&fractional_logit(&d)?);

    // 30 members observed 8 times each
    let noise = Normal::new(0.0, 0.5).expect("valid sd");
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut ids = Vec::new();
    for m in 0..30 {
        let u = noise.sample(&mut rng);
        for _ in 0..8 {
            let xi: f64 = rng.random_range(-1.0..1.0);
            let mu = 1.0 / (1.0 + (-(-1.0 + 0.8 * xi + u)).exp());
            y.push(Beta::new(mu * phi, (1.0 - mu) * phi).expect("valid shape").sample(&mut rng));
            x.push(xi);
            ids.push(format!("m{m}"));
        }
    }
    let d = Design::with_intercept(y, &[("x", x)])?.with_clusters(&ids)?;
    show(&random_intercept(&d, Family::Beta, MixedOptions::default())?);
    Ok(())
}
