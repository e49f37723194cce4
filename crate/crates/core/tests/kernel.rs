use gmcc_core::kernel::{gc_loss_gradient, gc_loss_hessian_diag, l_alpha_beta, parzen_density};
use gmcc_core::{correntropy_estimate, gc_loss, gcim, Error, GgdKernel, SampleVector};
use proptest::prelude::*;

fn sv(v: &[f64]) -> SampleVector {
    SampleVector::new(v.to_vec()).unwrap()
}

fn finite_vec(len: usize, half: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-half..half, len)
}

#[test]
fn density_examples() {
    let k = GgdKernel::from_beta(2.0, 2f64.sqrt()).unwrap();
    let expected = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((k.density(0.0) - expected).abs() < 1e-15);
    for (alpha, beta) in [(0.5, 0.3), (1.0, 2.0), (4.0, 1.7)] {
        let k = GgdKernel::from_beta(alpha, beta).unwrap();
        assert_eq!(k.density(0.0), k.gamma());
        let rel = (k.density(beta) - k.gamma() * (-1.0f64).exp()).abs() / k.gamma();
        assert!(rel < 1e-15);
        assert!((k.lambda() * beta.powf(alpha) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn correntropy_examples() {
    let k = GgdKernel::from_beta(3.0, 0.8).unwrap();
    let x = sv(&[0.3, -1.2, 2.0]);
    assert_eq!(correntropy_estimate(&x, &x, &k).unwrap(), k.gamma());
    assert_eq!(gc_loss(&x, &x, &k).unwrap(), 0.0);
    assert_eq!(gcim(&x, &x, &k).unwrap(), 0.0);
    let single = correntropy_estimate(&sv(&[0.8]), &sv(&[0.0]), &k).unwrap();
    assert!((single - k.gamma() * (-1.0f64).exp()).abs() < 1e-15);
    let loss = gc_loss(&sv(&[0.8]), &sv(&[0.0]), &k).unwrap();
    assert!((loss - k.gamma() * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
}

#[test]
fn brute_force_estimator() {
    let k = GgdKernel::from_lambda(1.5, 0.7).unwrap();
    let x = [0.1, -2.0, 3.3, 0.0, 1.0];
    let y = [1.1, 0.5, -0.3, 0.2, 1.0];
    let mut total = 0.0;
    for i in 0..5 {
        let e: f64 = x[i] - y[i];
        total += k.gamma() * (-0.7 * e.abs().powf(1.5)).exp();
    }
    let got = correntropy_estimate(&sv(&x), &sv(&y), &k).unwrap();
    assert!((got - total / 5.0).abs() < 1e-15);
}

#[test]
fn mismatched_lengths() {
    let k = GgdKernel::from_lambda(2.0, 1.0).unwrap();
    let err = gc_loss(&sv(&[1.0]), &sv(&[1.0, 2.0]), &k).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));
}

#[test]
fn gradient_at_zero() {
    let e = sv(&[0.0, 0.0]);
    let k2 = GgdKernel::from_lambda(2.0, 0.5).unwrap();
    assert_eq!(gc_loss_gradient(&e, &k2).unwrap().as_slice(), &[0.0, 0.0]);
    let k1 = GgdKernel::from_lambda(1.0, 0.5).unwrap();
    assert!(matches!(gc_loss_gradient(&e, &k1), Err(Error::Domain(_))));
    let k_half = GgdKernel::from_lambda(1.5, 0.5).unwrap();
    assert!(matches!(gc_loss_hessian_diag(&e, &k_half), Err(Error::Domain(_))));
}

#[test]
fn gradient_closed_form_at_alpha_two() {
    let k = GgdKernel::from_lambda(2.0, 0.4).unwrap();
    let e = [-1.3, 0.2, 2.5];
    let g = gc_loss_gradient(&sv(&e), &k).unwrap();
    for (gi, &ei) in g.as_slice().iter().zip(&e) {
        let expected = 0.4 * 2.0 * k.gamma() / 3.0 * (-0.4 * ei * ei).exp() * ei;
        assert!((gi - expected).abs() < 1e-15);
    }
}

#[test]
fn concave_for_small_shape() {
    let k = GgdKernel::from_lambda(0.5, 1.0).unwrap();
    let h = gc_loss_hessian_diag(&sv(&[-3.0, -0.01, 0.2, 5.0]), &k).unwrap();
    assert!(h.as_slice().iter().all(|&v| v <= 0.0));
    let k2 = GgdKernel::from_lambda(2.0, 0.5).unwrap();
    let h2 = gc_loss_hessian_diag(&sv(&[-1.0, 0.0, 0.3, 1.0]), &k2).unwrap();
    assert!(h2.as_slice().iter().all(|&v| v >= 0.0));
}

#[test]
fn l_alpha_beta_of_zero() {
    let k = GgdKernel::from_lambda(2.0, 1.0).unwrap();
    assert_eq!(l_alpha_beta(&SampleVector::zeros(4).unwrap(), &k), 0.0);
}

#[test]
fn gamma_of_gaussian_kernel() {
    for sigma in [0.1, 1.0, 7.0] {
        let k = GgdKernel::from_beta(2.0, 2f64.sqrt() * sigma).unwrap();
        let expected = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
        assert!((k.gamma() - expected).abs() / expected < 1e-12);
    }
}

#[test]
fn kernel_json_uses_lambda() {
    let k: GgdKernel = serde_json::from_str(r#"{"alpha": 4, "lambda": 0.03}"#).unwrap();
    assert_eq!(k.lambda(), 0.03);
    let from_beta: GgdKernel = serde_json::from_str(r#"{"alpha": 2, "beta": 2}"#).unwrap();
    assert!((from_beta.lambda() - 0.25).abs() < 1e-15);
    assert!(serde_json::from_str::<GgdKernel>(r#"{"alpha": -1, "lambda": 1}"#).is_err());
}

proptest! {
    #[test]
    fn symmetric_and_bounded(x in finite_vec(6, 5.0), y in finite_vec(6, 5.0), alpha in 0.3f64..6.0, lambda in 0.01f64..10.0) {
        let k = GgdKernel::from_lambda(alpha, lambda).unwrap();
        let (x, y) = (sv(&x), sv(&y));
        let xy = correntropy_estimate(&x, &y, &k).unwrap();
        let yx = correntropy_estimate(&y, &x, &k).unwrap();
        prop_assert_eq!(xy, yx);
        prop_assert!(xy >= 0.0 && xy <= k.gamma());
        let loss = gc_loss(&x, &y, &k).unwrap();
        prop_assert!((loss - (k.gamma() - xy)).abs() <= 1e-14 * k.gamma());
    }

    #[test]
    fn parzen_identity(e in finite_vec(8, 4.0), alpha in 0.5f64..4.0, lambda in 0.05f64..5.0) {
        let k = GgdKernel::from_lambda(alpha, lambda).unwrap();
        let zeros = SampleVector::zeros(8).unwrap();
        let errors = sv(&e);
        let c = correntropy_estimate(&errors, &zeros, &k).unwrap();
        prop_assert!((c - parzen_density(&errors, 0.0, &k)).abs() <= 1e-15 * k.gamma());
    }

    #[test]
    fn series_expansion_bound(x in finite_vec(5, 2.0), y in finite_vec(5, 2.0), alpha in 0.5f64..4.0, lambda in 1e-7f64..1e-4) {
        let k = GgdKernel::from_lambda(alpha, lambda).unwrap();
        let e: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).collect();
        let mean_pow = e.iter().map(|v| v.powf(alpha)).sum::<f64>() / 5.0;
        let max_pow = e.iter().fold(0.0f64, |m, v| m.max(v.powf(2.0 * alpha)));
        let c = correntropy_estimate(&sv(&x), &sv(&y), &k).unwrap();
        let first_order = k.gamma() * (1.0 - lambda * mean_pow);
        // plus rounding of the O(gamma) quantities themselves
        prop_assert!((c - first_order).abs() <= k.gamma() * lambda * lambda * max_pow + 4.0 * f64::EPSILON * k.gamma());
    }

    #[test]
    fn gcim_metric_for_shapes_up_to_two(
        x in finite_vec(3, 5.0), y in finite_vec(3, 5.0), z in finite_vec(3, 5.0),
        alpha in 0.2f64..=2.0, lambda in 0.05f64..5.0,
    ) {
        let k = GgdKernel::from_lambda(alpha, lambda).unwrap();
        let (x, y, z) = (sv(&x), sv(&y), sv(&z));
        let d = |a: &SampleVector, b: &SampleVector| gcim(a, b, &k).unwrap();
        prop_assert!(d(&x, &y) + d(&y, &z) - d(&x, &z) >= -1e-12);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
    }
}
