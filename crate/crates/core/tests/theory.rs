use gmcc_core::filters::gmcc_nonlinearity;
use gmcc_core::theory::{empirical_step_bound, f_double_prime, f_prime, zeta};
use gmcc_core::{steady_state_emse, Error, GgdKernel, NoiseModel, TheoryInputs, Validity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fig3_inputs(eta: f64) -> TheoryInputs {
    TheoryInputs {
        kernel: GgdKernel::from_lambda(4.0, 0.03).unwrap(),
        eta,
        trace_rxx: 20.0,
        noise: NoiseModel::uniform_with_variance(1.0).unwrap(),
    }
}

#[test]
fn composition_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2e7a);
    for _ in 0..1000 {
        let alpha = rng.random_range(1.0f64..=6.0).max(1.0 + 1e-9);
        let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
        let v: f64 = rng.random_range(0.05..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        if lambda * v.abs().powf(alpha) > 300.0 {
            // exp(-2 lambda|v|^alpha) is subnormal; no relative precision left
            continue;
        }
        let k = GgdKernel::from_lambda(alpha, lambda).unwrap();
        let f = gmcc_nonlinearity(v, &k);
        let (fp, fpp, z) = (f_prime(v, &k).unwrap(), f_double_prime(v, &k).unwrap(), zeta(v, &k).unwrap());
        let composed = f * fpp + fp * fp;
        let scale = (f * fpp).abs().max(fp * fp).max(z.abs());
        assert!((z - composed).abs() <= 1e-10 * scale, "alpha {alpha} lambda {lambda} v {v}: {z} vs {composed}");
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let k = GgdKernel::from_lambda(4.0, 0.3).unwrap();
    for v in [-2.1, -0.7, 0.4, 1.1, 1.9] {
        let h = 1e-5;
        let fd1 = (gmcc_nonlinearity(v + h, &k) - gmcc_nonlinearity(v - h, &k)) / (2.0 * h);
        let fp = f_prime(v, &k).unwrap();
        assert!((fp - fd1).abs() <= 1e-7 * fp.abs().max(1e-3), "f' at {v}");
        let h2 = 1e-4;
        let fd2 = (f_prime(v + h2, &k).unwrap() - f_prime(v - h2, &k).unwrap()) / (2.0 * h2);
        let fpp = f_double_prime(v, &k).unwrap();
        assert!((fpp - fd2).abs() <= 1e-5 * fpp.abs(), "f'' at {v}: {fpp} vs {fd2}");
    }
}

#[test]
fn formal_lms_limits() {
    let k = GgdKernel::from_lambda(2.0, 1e-12).unwrap();
    for v in [-3.0, 0.2, 5.0] {
        assert!((f_prime(v, &k).unwrap() - 1.0).abs() < 1e-9);
        assert!(f_double_prime(v, &k).unwrap().abs() < 1e-9);
        assert!((zeta(v, &k).unwrap() - 1.0).abs() < 1e-9);
    }
}

/// Expectations for the uniform-noise configuration, computed independently
/// by scipy's QUADPACK wrapper to five significant digits.
#[test]
fn uniform_noise_expectations() {
    let r = steady_state_emse(&fig3_inputs(1e-3)).unwrap();
    let d = r.diagnostics;
    assert!((d.e_f_squared - 2.7606).abs() / 2.7606 < 1e-4, "{}", d.e_f_squared);
    assert!((d.e_f_prime - 2.2901).abs() / 2.2901 < 1e-4, "{}", d.e_f_prime);
    assert!((d.e_zeta - 10.0699).abs() / 10.0699 < 1e-4, "{}", d.e_zeta);
    assert!((r.full - 0.012609).abs() / 0.012609 < 1e-4, "{}", r.full);
    assert!(r.full_valid());
}

#[test]
fn past_the_pole_is_flagged() {
    let r = steady_state_emse(&fig3_inputs(3e-2)).unwrap();
    assert_eq!(r.validity, Validity::NonPositiveDenominator);
    assert!(r.simplified_valid && r.simplified > 0.0);
}

#[test]
fn increasing_in_step_size() {
    let mut last = 0.0;
    for j in 0..20 {
        let eta = 1e-4 * 1.3f64.powi(j);
        let r = steady_state_emse(&fig3_inputs(eta)).unwrap();
        if !r.full_valid() {
            break;
        }
        assert!(r.full > last);
        assert!(r.simplified <= r.full);
        last = r.full;
    }
    assert!(last > 0.0);
}

#[test]
fn increasing_in_noise_scale() {
    let mut last = 0.0;
    for var in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let r = steady_state_emse(&TheoryInputs {
            noise: NoiseModel::uniform_with_variance(var).unwrap(),
            ..fig3_inputs(1e-3)
        })
        .unwrap();
        assert!(r.full_valid());
        assert!(r.full > last, "variance {var}");
        last = r.full;
    }
}

#[test]
fn singular_shapes_and_discrete_noise() {
    let base = TheoryInputs {
        kernel: GgdKernel::from_lambda(1.7, 0.5).unwrap(),
        eta: 1e-3,
        trace_rxx: 10.0,
        noise: NoiseModel::gaussian(0.0, 1.0).unwrap(),
    };
    let r = steady_state_emse(&base).unwrap();
    assert!(r.full_valid() && r.full > 0.0);

    let binary = TheoryInputs {
        noise: NoiseModel::binary(0.5).unwrap(),
        ..base.clone()
    };
    let b = steady_state_emse(&binary).unwrap();
    let k = &binary.kernel;
    let f = gmcc_nonlinearity(0.5, k);
    let expected = 1e-2 * f * f / (2.0 * f_prime(0.5, k).unwrap() - 1e-2 * zeta(0.5, k).unwrap());
    assert!(b.full_valid() && expected > 0.0);
    assert!((b.full - expected).abs() <= 1e-12 * expected, "{} vs {expected}", b.full);

    let sa = TheoryInputs {
        kernel: GgdKernel::from_lambda(1.0, 0.5).unwrap(),
        ..base
    };
    assert!(matches!(steady_state_emse(&sa), Err(Error::Unsupported(_))));
}

#[test]
fn step_bound_reduces_to_lms() {
    let k = GgdKernel::from_lambda(2.0, 1e-12).unwrap();
    let e = [0.5, -1.0, 2.0, 0.1];
    let bound = empirical_step_bound(&e, &e, &[4.0; 4], &k).unwrap();
    assert!((bound - 0.5).abs() < 1e-9);
    let zeros = [0.0; 4];
    assert!(matches!(
        empirical_step_bound(&zeros, &zeros, &[4.0; 4], &k),
        Err(Error::DegenerateTrace(_))
    ));
}
