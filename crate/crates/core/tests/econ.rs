mod common;

use common::sim::*;
use common::*;
use common::checks;
use hidden_dissent::econ::{
    beta_regression, dml_effect, dml_with_folds, fractional_logit, lasso, ols_robust, pseudo_r2, random_intercept,
    Design, Family, MixedOptions, PseudoR2, SeKind,
};
use hidden_dissent::tensor::sigmoid;
use hidden_dissent::train::kfold_partition;
use hidden_dissent::Error;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

#[test]
fn beta_regression_recovers_simulated_coefficients() {
    let mut r = rng(1);
    let d = beta_design(2000, &mut r);
    let fit = beta_regression(&d).unwrap();
    assert!(within_3se(&fit, &[("const", -0.5), ("x", 1.0)]));
    let (lnphi, se) = fit.get("ln_phi").unwrap();
    assert!((lnphi - 20f64.ln()).abs() < 3.0 * se);
    assert_eq!(fit.se_kind, SeKind::Model);
}

#[test]
fn beta_intercept_only_matches_sample_mean() {
    let mut r = rng(2);
    let y: Vec<f64> = (0..3000).map(|_| beta_draw(0.3, 20.0, &mut r)).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let fit = beta_regression(&Design::with_intercept(y, &[]).unwrap()).unwrap();
    assert!((sigmoid(fit.coef[0]) - mean).abs() < 2e-3);
}

#[test]
fn duplicated_covariate_is_rank_deficient() {
    let mut r = rng(3);
    let x: Vec<f64> = (0..50).map(|_| normal(&mut r)).collect();
    let y: Vec<f64> = (0..50).map(|_| beta_draw(0.4, 10.0, &mut r)).collect();
    let d = Design::with_intercept(y, &[("x", x.clone()), ("x_again", x)]).unwrap();
    match beta_regression(&d) {
        Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec!["x_again".to_string()]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn beta_log_likelihood_is_invariant_to_column_scaling() {
    let mut r = rng(4);
    let d = beta_design(400, &mut r);
    let mut d2 = d.clone();
    d2.x.column_mut(1).scale_mut(2.0);
    let (a, b) = (beta_regression(&d).unwrap(), beta_regression(&d2).unwrap());
    assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-8);
    assert!((a.coef[1] - 2.0 * b.coef[1]).abs() < 1e-5);
}

#[test]
fn cluster_sandwich_is_symmetric_psd() {
    let mut r = rng(5);
    let d = mixed_beta_design(30, 8, 0.4, &mut r);
    let fit = beta_regression(&d).unwrap();
    assert_eq!(fit.se_kind, SeKind::Cluster);
    assert!((&fit.cov - fit.cov.transpose()).amax() < 1e-12);
    let eig = SymmetricEigen::new(fit.cov.clone());
    assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
}

#[test]
fn fractional_logit_with_constant_half() {
    let mut r = rng(6);
    let x: Vec<f64> = (0..100).map(|_| normal(&mut r)).collect();
    let d = Design::with_intercept(vec![0.5; 100], &[("x", x)]).unwrap();
    let fit = fractional_logit(&d).unwrap();
    assert!(fit.coef.amax() < 1e-10);
}

#[test]
fn fractional_logit_equals_plain_logit_on_binary_outcomes() {
    let mut r = rng(7);
    let n = 500;
    let x1: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let x2: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|i| f64::from(u8::from(r.random::<f64>() < sigmoid(0.2 + x1[i] - 0.5 * x2[i])))).collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0, x1[i], x2[i]]).collect();
    let oracle = newton_logit(&y, &rows);
    let fit = fractional_logit(&Design::with_intercept(y, &[("x1", x1), ("x2", x2)]).unwrap()).unwrap();
    for j in 0..3 {
        assert!((fit.coef[j] - oracle[j]).abs() < 1e-6, "{} vs {}", fit.coef[j], oracle[j]);
    }
}

#[test]
fn fractional_logit_recovers_coefficients() {
    let mut r = rng(8);
    let fit = fractional_logit(&fractional_design(1500, &mut r)).unwrap();
    assert_eq!(fit.se_kind, SeKind::Robust);
    assert!(within_3se(&fit, &[("const", 0.3), ("x", -0.7)]));
}

#[test]
fn ols_exact_line() {
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let fit = ols_robust(&Design::with_intercept(y, &[("x", x)]).unwrap()).unwrap();
    assert!((fit.coef[1] - 2.0).abs() < 1e-12);
    assert!((fit.r2.unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn hc1_close_to_classical_under_homoskedasticity() {
    let mut r = rng(9);
    let d = ols_design(3000, false, &mut r);
    let fit = ols_robust(&d).unwrap();
    let x = d.x.column(1);
    let xbar = x.mean();
    let sxx: f64 = x.iter().map(|v| (v - xbar).powi(2)).sum();
    let resid = &d.y - &d.x * &fit.coef;
    let s2 = resid.norm_squared() / (d.n() - 2) as f64;
    let classical = (s2 / sxx).sqrt();
    assert!((fit.se[1] / classical - 1.0).abs() < 0.1);
    let adj = 1.0 - (1.0 - fit.r2.unwrap()) * (d.n() as f64 - 1.0) / (d.n() as f64 - 2.0);
    assert!((fit.adj_r2.unwrap() - adj).abs() < 1e-14);
}

#[test]
fn ols_rank_error_names_column() {
    let d = Design::with_intercept(vec![1.0, 2.0, 3.0, 5.0], &[("z", vec![0.0; 4])]).unwrap();
    assert!(matches!(ols_robust(&d), Err(Error::RankDeficient { columns }) if columns == vec!["z".to_string()]));
}

#[test]
fn pseudo_r2_definitions() {
    let mut r = rng(10);
    let d = beta_design(300, &mut r);
    let fit = beta_regression(&d).unwrap();
    let null = beta_regression(&d.intercept_only()).unwrap();
    assert_eq!(pseudo_r2(&null, &null, PseudoR2::McFadden).unwrap(), 0.0);

    // brute-force log-likelihoods from the coefficients
    let ll = |f: &hidden_dissent::econ::FitResult, d: &Design| -> f64 {
        let phi = f.get("ln_phi").unwrap().0.exp();
        (0..d.n())
            .map(|i| {
                let eta: f64 = (0..d.p()).map(|j| d.x[(i, j)] * f.coef[j]).sum();
                let mu = 1.0 / (1.0 + (-eta).exp());
                let y = d.y[i];
                ln_gamma(phi) - ln_gamma(mu * phi) - ln_gamma((1.0 - mu) * phi)
                    + (mu * phi - 1.0) * y.ln()
                    + ((1.0 - mu) * phi - 1.0) * (1.0 - y).ln()
            })
            .sum()
    };
    let mcf = 1.0 - ll(&fit, &d) / ll(&null, &d.intercept_only());
    assert!((pseudo_r2(&fit, &null, PseudoR2::McFadden).unwrap() - mcf).abs() < 1e-10);
    let fitted: Vec<f64> = (0..d.n()).map(|i| sigmoid(fit.coef[0] + fit.coef[1] * d.x[(i, 1)])).collect();
    let y: Vec<f64> = d.y.iter().copied().collect();
    let (mf, my) = (mean(&fitted), mean(&y));
    let cov: f64 = fitted.iter().zip(&y).map(|(a, b)| (a - mf) * (b - my)).sum();
    let corr = cov / (sample_sd(&fitted) * sample_sd(&y) * (d.n() as f64 - 1.0));
    assert!((pseudo_r2(&fit, &null, PseudoR2::SquaredCorrelation).unwrap() - corr * corr).abs() < 1e-10);
}

#[test]
fn perfect_fractional_fit_has_unit_squared_correlation() {
    let x: Vec<f64> = (0..40).map(|i| i as f64 / 10.0 - 2.0).collect();
    let y: Vec<f64> = x.iter().map(|v| sigmoid(0.5 + 1.5 * v)).collect();
    let d = Design::with_intercept(y, &[("x", x)]).unwrap();
    let fit = fractional_logit(&d).unwrap();
    let null = fractional_logit(&d.intercept_only()).unwrap();
    assert!((pseudo_r2(&fit, &null, PseudoR2::SquaredCorrelation).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn mixed_beta_recovers_fixed_effects() {
    let mut r = rng(11);
    let d = mixed_beta_design(40, 10, 0.5, &mut r);
    let fit = random_intercept(&d, Family::Beta, MixedOptions::default()).unwrap();
    assert!(within_3se(&fit, &[("const", -0.5), ("x", 1.0)]), "{:?}", fit.coef);
    let s2 = fit.aux["sigma_u2"];
    assert!(s2 > 0.1 && s2 < 0.6, "sigma_u2 {s2}");
}

#[test]
fn mixed_probit_recovers_fixed_effects() {
    let mut r = rng(12);
    let d = mixed_probit_design(60, 10, 0.7, &mut r);
    let fit = random_intercept(&d, Family::Probit, MixedOptions::default()).unwrap();
    assert!(within_3se(&fit, &[("const", 0.3), ("x", -0.8)]), "{:?}", fit.coef);
}

#[test]
fn quadrature_refinement_is_stable() {
    let mut r = rng(13);
    let d = mixed_probit_design(40, 8, 0.8, &mut r);
    let a = random_intercept(&d, Family::Probit, MixedOptions { nodes: 15, ..MixedOptions::default() }).unwrap();
    let b = random_intercept(&d, Family::Probit, MixedOptions { nodes: 31, ..MixedOptions::default() }).unwrap();
    assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-4);
    let d = mixed_beta_design(30, 6, 0.5, &mut r);
    let a = random_intercept(&d, Family::Beta, MixedOptions { nodes: 15, ..MixedOptions::default() }).unwrap();
    let b = random_intercept(&d, Family::Beta, MixedOptions { nodes: 31, ..MixedOptions::default() }).unwrap();
    assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-4);
}

#[test]
fn zero_intercept_variance_matches_pooled() {
    let mut r = rng(14);
    let d = mixed_beta_design(40, 10, 0.0, &mut r);
    let fit = random_intercept(&d, Family::Beta, MixedOptions::default()).unwrap();
    let mut plain = d.clone();
    plain.cluster = None;
    let pooled = beta_regression(&plain).unwrap();
    assert!(fit.aux["sigma_u2"] < 0.01, "{}", fit.aux["sigma_u2"]);
    for j in 0..2 {
        assert!((fit.coef[j] - pooled.coef[j]).abs() < 0.05);
    }
}

#[test]
fn one_observation_per_cluster_falls_back_to_pooled() {
    let mut r = rng(15);
    let d = mixed_probit_design(80, 1, 0.5, &mut r);
    let fit = random_intercept(&d, Family::Probit, MixedOptions::default()).unwrap();
    assert_eq!(fit.aux["variance_unidentified"], 1.0);
    assert!(!fit.notes.is_empty());
}

#[test]
fn lasso_satisfies_kkt() {
    let mut r = rng(16);
    let (y, _, x) = dml_design(300, 0.5, 10.0, &mut r);
    let yv = DVector::from_vec(y);
    for lambda in [0.1, 1.0, 5.0] {
        let fit = lasso(&x, &yv, lambda).unwrap();
        let worst = checks::lasso_kkt_residual(&x, &yv, &fit);
        assert!(worst < 1e-8, "lambda {lambda}: KKT residual {worst}");
    }
}

#[test]
fn dml_recovers_effect_under_confounding() {
    let mut r = rng(17);
    let (y, t, x) = dml_design(1000, 0.5, 10.0, &mut r);
    let res = dml_effect(&y, &t, &x, 5, 1.0, 17).unwrap();
    assert!((res.theta - 0.5).abs() < 3.0 * res.se, "{} ± {}", res.theta, res.se);
    // naive regression is visibly biased
    let naive = ols_robust(&Design::with_intercept(y.clone(), &[("t", t.clone())]).unwrap()).unwrap();
    assert!((naive.coef[1] - 0.5).abs() > 5.0 * res.se);
}

#[test]
fn dml_null_effect() {
    let mut r = rng(18);
    let (y, t, x) = dml_design(1000, 0.0, 20.0, &mut r);
    let res = dml_effect(&y, &t, &x, 5, 1.0, 18).unwrap();
    assert!(res.theta.abs() < 3.0 * res.se);
}

#[test]
fn dml_infinite_penalty_is_fold_demeaned_ols() {
    let mut r = rng(19);
    let (y, t, x) = dml_design(200, 0.3, 10.0, &mut r);
    let res = dml_effect(&y, &t, &x, 5, f64::INFINITY, 3).unwrap();
    let folds = kfold_partition(200, 5, 3).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..200 {
        let others: Vec<usize> = (0..200).filter(|&j| folds[j] != folds[i]).collect();
        let my = others.iter().map(|&j| y[j]).sum::<f64>() / others.len() as f64;
        let mt = others.iter().map(|&j| t[j]).sum::<f64>() / others.len() as f64;
        num += (t[i] - mt) * (y[i] - my);
        den += (t[i] - mt).powi(2);
    }
    assert!((res.theta - num / den).abs() < 1e-12);
}

#[test]
fn dml_is_invariant_to_row_order() {
    let mut r = rng(20);
    let (y, t, x) = dml_design(150, 0.3, 10.0, &mut r);
    let folds = kfold_partition(150, 5, 9).unwrap();
    let base = dml_with_folds(&y, &t, &x, &folds, 1.0).unwrap();
    let perm: Vec<usize> = (0..150).rev().collect();
    let ys: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
    let ts: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
    let fs: Vec<usize> = perm.iter().map(|&i| folds[i]).collect();
    let xs = x.select_rows(&perm);
    let shuffled = dml_with_folds(&ys, &ts, &xs, &fs, 1.0).unwrap();
    assert!((base.theta - shuffled.theta).abs() < 1e-9);
}

#[test]
fn dml_without_treatment_variation_is_unidentified() {
    let x = DMatrix::from_fn(20, 2, |i, j| (i * (j + 1)) as f64);
    let y: Vec<f64> = (0..20).map(f64::from).collect();
    assert!(matches!(dml_effect(&y, &[1.0; 20], &x, 5, 1.0, 0), Err(Error::Unidentified(_))));
}
