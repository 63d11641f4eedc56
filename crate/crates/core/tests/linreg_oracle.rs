use catebench_core::linreg::{ols_fit, OlsError};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Least squares through the SVD pseudo-inverse of `[1 | X]`.
fn pinv_solution(design: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
    let n = design.len();
    let p = design[0].len();
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { design[i][j - 1] });
    let b = DVector::from_column_slice(targets);
    let pinv = a.pseudo_inverse(1e-14).unwrap();
    (pinv * b).iter().copied().collect()
}

fn residuals(design: &[Vec<f64>], targets: &[f64], intercept: f64, coef: &[f64]) -> Vec<f64> {
    design
        .iter()
        .zip(targets)
        .map(|(x, y)| y - intercept - x.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Largest |column · residual| relative to the column and target scale.
fn orthogonality_error(design: &[Vec<f64>], targets: &[f64], res: &[f64]) -> f64 {
    let p = design[0].len();
    let y_norm = targets.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut worst = res.iter().sum::<f64>().abs() / ((design.len() as f64).sqrt() * y_norm);
    for j in 0..p {
        let dot: f64 = design.iter().zip(res).map(|(x, r)| x[j] * r).sum();
        let col_norm = design.iter().map(|x| x[j] * x[j]).sum::<f64>().sqrt();
        worst = worst.max(dot.abs() / (col_norm * y_norm));
    }
    worst
}

#[test]
fn random_instance_matches_pseudo_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let design: Vec<Vec<f64>> = (0..50)
        .map(|_| {
            vec![
                rng.random_range(20.0..80.0),
                f64::from(rng.random_range(0..15u32)),
            ]
        })
        .collect();
    let targets: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..10.0)).collect();
    let fit = ols_fit(&design, &targets).unwrap();
    let want = pinv_solution(&design, &targets);
    assert!(
        (fit.intercept - want[0]).abs() < 1e-8,
        "{} vs {}",
        fit.intercept,
        want[0]
    );
    for j in 0..2 {
        assert!((fit.coefficients[j] - want[j + 1]).abs() < 1e-8);
    }
}

#[test]
fn constant_regressor_is_rank_deficient() {
    let design: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i), 0.0]).collect();
    let targets: Vec<f64> = (0..20).map(f64::from).collect();
    assert!(matches!(
        ols_fit(&design, &targets),
        Err(OlsError::RankDeficient { .. })
    ));
}

#[test]
fn collinear_regressors_are_rank_deficient() {
    let design: Vec<Vec<f64>> = (0..20)
        .map(|i| vec![f64::from(i), 2.0 * f64::from(i) + 1.0])
        .collect();
    let targets: Vec<f64> = (0..20).map(|i| f64::from(i * i)).collect();
    assert!(matches!(
        ols_fit(&design, &targets),
        Err(OlsError::RankDeficient { .. })
    ));
}

fn design_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=4, 8usize..=80).prop_flat_map(|(p, n)| {
        (
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, p), n),
            prop::collection::vec(-50.0f64..50.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn residuals_are_orthogonal((design, targets) in design_strategy()) {
        let fit = ols_fit(&design, &targets).unwrap();
        let res = residuals(&design, &targets, fit.intercept, &fit.coefficients);
        prop_assert!(orthogonality_error(&design, &targets, &res) < 1e-8);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fit.r_squared));
    }

    #[test]
    fn noiseless_targets_are_recovered(
        (design, _) in design_strategy(),
        beta in prop::collection::vec(-5.0f64..5.0, 5),
    ) {
        let p = design[0].len();
        let targets: Vec<f64> = design
            .iter()
            .map(|x| beta[0] + x.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let fit = ols_fit(&design, &targets).unwrap();
        prop_assert!((fit.intercept - beta[0]).abs() < 1e-8);
        for j in 0..p {
            prop_assert!((fit.coefficients[j] - beta[j + 1]).abs() < 1e-8);
        }
    }

    #[test]
    fn row_order_does_not_matter((design, targets) in design_strategy(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..design.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let d2: Vec<Vec<f64>> = order.iter().map(|&i| design[i].clone()).collect();
        let t2: Vec<f64> = order.iter().map(|&i| targets[i]).collect();
        let (a, b) = (ols_fit(&design, &targets).unwrap(), ols_fit(&d2, &t2).unwrap());
        prop_assert!((a.intercept - b.intercept).abs() < 1e-8 * (1.0 + a.intercept.abs()));
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()));
        }
    }
}
