//! Steady-state excess mean-square error (EMSE) of the GMCC filter.
//!
//! The predictor linearizes the error nonlinearity `f` around the noise
//! sample `v` and solves the steady-state energy balance for `S = E[e_a^2]`:
//!
//! ```text
//!            eta Tr(Rxx) E[f(v)^2]
//! S = ------------------------------------ ,   zeta = f f'' + (f')^2
//!     2 E[f'(v)] - eta Tr(Rxx) E[zeta(v)]
//! ```
//!
//! The simplified (small step size) form drops the `eta Tr E[zeta]` term.
//! Expectations are taken against the noise density by adaptive quadrature,
//! or exactly for point masses.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filters::gmcc_nonlinearity;
use crate::kernel::GgdKernel;
use crate::noise::NoiseModel;
use crate::quadrature::{integrate, integrate_graded_at_zero, QuadratureOptions};

/// Tail cut-off: infinite supports are truncated where the density drops
/// below this value.
pub const DENSITY_CUTOFF: f64 = 1e-14;

fn singular(what: &str, v: f64, alpha: f64) -> Error {
    Error::Domain(format!("{what} is singular at v = {v} for alpha = {alpha}"))
}

/// First derivative of the GMCC nonlinearity,
/// `exp(-lambda|v|^alpha) |v|^(alpha-2) ((alpha-1) - lambda alpha |v|^alpha)`.
pub fn f_prime(v: f64, k: &GgdKernel) -> Result<f64> {
    let (alpha, lambda) = (k.alpha(), k.lambda());
    if v == 0.0 && alpha < 2.0 {
        return Err(singular("f'", v, alpha));
    }
    Ok(f_prime_raw(v.abs(), alpha, lambda))
}

#[inline]
fn f_prime_raw(a: f64, alpha: f64, lambda: f64) -> f64 {
    let pa = a.powf(alpha);
    (-lambda * pa).exp() * a.powf(alpha - 2.0) * ((alpha - 1.0) - lambda * alpha * pa)
}

/// Second derivative of the GMCC nonlinearity, term by term:
///
/// `exp(-lambda|v|^alpha) sign(v) { -lambda alpha ((alpha-1)|v|^(2alpha-3) - lambda alpha |v|^(3alpha-3))
///   + ((alpha-1)(alpha-2)|v|^(alpha-3) - lambda alpha (2alpha-2) |v|^(2alpha-3)) }`
pub fn f_double_prime(v: f64, k: &GgdKernel) -> Result<f64> {
    let (alpha, lambda) = (k.alpha(), k.lambda());
    if v == 0.0 {
        return Err(singular("f''", v, alpha));
    }
    let a = v.abs();
    let first = -lambda * alpha * ((alpha - 1.0) * a.powf(2.0 * alpha - 3.0) - lambda * alpha * a.powf(3.0 * alpha - 3.0));
    let second = (alpha - 1.0) * (alpha - 2.0) * a.powf(alpha - 3.0)
        - lambda * alpha * (2.0 * alpha - 2.0) * a.powf(2.0 * alpha - 3.0);
    // odd function: the even magnitude expression times sign(v)
    Ok((-lambda * a.powf(alpha)).exp() * (first + second) * v.signum())
}

/// `zeta(v) = f(v) f''(v) + f'(v)^2` in closed form,
/// `exp(-2 lambda|v|^alpha) |v|^(2alpha-4) [(alpha-1)(2alpha-3) - 5 lambda alpha (alpha-1) |v|^alpha + 2 lambda^2 alpha^2 |v|^(2alpha)]`.
pub fn zeta(v: f64, k: &GgdKernel) -> Result<f64> {
    let alpha = k.alpha();
    if v == 0.0 && alpha < 2.0 {
        return Err(singular("zeta", v, alpha));
    }
    Ok(zeta_raw(v.abs(), alpha, k.lambda()))
}

#[inline]
fn zeta_raw(a: f64, alpha: f64, lambda: f64) -> f64 {
    let pa = a.powf(alpha);
    let bracket = (alpha - 1.0) * (2.0 * alpha - 3.0) - 5.0 * lambda * alpha * (alpha - 1.0) * pa
        + 2.0 * lambda * lambda * alpha * alpha * pa * pa;
    (-2.0 * lambda * pa).exp() * a.powf(2.0 * alpha - 4.0) * bracket
}

#[inline]
fn f_squared_raw(a: f64, alpha: f64, lambda: f64) -> f64 {
    (-2.0 * lambda * a.powf(alpha)).exp() * a.powf(2.0 * alpha - 2.0)
}

/// Symmetry of an integrand about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parity {
    #[default]
    None,
    Even,
    Odd,
}

/// What the caller knows about `g` in `E[g(v)]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrandHints {
    pub parity: Parity,
    /// `Some(s)` when `|g(v)| ~ |v|^(-s)` near 0 with `0 <= s < 1`.
    pub singular_at_zero: Option<f64>,
}

impl IntegrandHints {
    pub fn even() -> Self {
        Self {
            parity: Parity::Even,
            singular_at_zero: None,
        }
    }

    pub fn with_singularity(mut self, s: Option<f64>) -> Self {
        self.singular_at_zero = s;
        self
    }
}

/// `E[g(v)]` for `v ~ noise`.
///
/// Continuous models use adaptive quadrature (absolute tolerance 1e-10) over
/// the support truncated at density 1e-14, split at 0 and at the location
/// parameter; even integrands against symmetric noise are folded onto
/// `[0, inf)`. Binary noise is an exact two-point sum and mixtures are the
/// `c`-weighted sum of their components.
pub fn expect_over_noise<F: Fn(f64) -> f64>(g: F, noise: &NoiseModel, hints: IntegrandHints) -> Result<f64> {
    expect_with(&g, noise, hints, &QuadratureOptions::default())
}

fn expect_with(
    g: &dyn Fn(f64) -> f64,
    noise: &NoiseModel,
    hints: IntegrandHints,
    opts: &QuadratureOptions,
) -> Result<f64> {
    match noise {
        NoiseModel::BinarySymmetric { magnitude } => Ok(0.5 * g(*magnitude) + 0.5 * g(-*magnitude)),
        NoiseModel::Mixture { c, inner, outer } => {
            let mut total = 0.0;
            if *c < 1.0 {
                total += (1.0 - c) * expect_with(g, inner, hints, opts)?;
            }
            if *c > 0.0 {
                total += c * expect_with(g, outer, hints, opts)?;
            }
            Ok(total)
        }
        _ => expect_continuous(g, noise, hints, opts),
    }
}

fn support(noise: &NoiseModel) -> (f64, f64) {
    match *noise {
        NoiseModel::Gaussian { mean, variance } => {
            let sd = variance.sqrt();
            let arg = 1.0 / (DENSITY_CUTOFF * sd * (2.0 * std::f64::consts::PI).sqrt());
            let r = sd * (2.0 * arg.ln().max(1.0)).sqrt();
            (mean - r, mean + r)
        }
        NoiseModel::Laplace { mean, variance } => {
            let b = (variance / 2.0).sqrt();
            let r = b * (1.0 / (2.0 * b * DENSITY_CUTOFF)).ln().max(1.0);
            (mean - r, mean + r)
        }
        NoiseModel::Uniform { lo, hi } => (lo, hi),
        _ => unreachable!("discrete and mixture models are handled by the caller"),
    }
}

fn expect_continuous(
    g: &dyn Fn(f64) -> f64,
    noise: &NoiseModel,
    hints: IntegrandHints,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let density = |v: f64| noise.density(v).expect("continuous model");
    let (lo, hi) = support(noise);
    let symmetric = noise.is_symmetric_about_zero();
    match (hints.parity, symmetric) {
        (Parity::Odd, true) => return Ok(0.0),
        (Parity::Even, true) => {
            let half = integrate_side(&|v| g(v) * density(v), hi, hints.singular_at_zero, opts)?;
            return Ok(2.0 * half);
        }
        _ => {}
    }
    // break points: support ends, the origin, and the location parameter
    let mut cuts = vec![lo, hi];
    if lo < 0.0 && 0.0 < hi {
        cuts.push(0.0);
    }
    let loc = noise.mean();
    if lo < loc && loc < hi && loc != 0.0 {
        cuts.push(loc);
    }
    cuts.sort_by(f64::total_cmp);
    let panel_opts = QuadratureOptions {
        abs_tol: opts.abs_tol / (cuts.len() - 1) as f64,
        ..*opts
    };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let touches_zero = a == 0.0 || b == 0.0;
        total += match (hints.singular_at_zero, touches_zero) {
            (Some(s), true) if b == 0.0 => {
                integrate_graded_at_zero(|t| g(-t) * density(-t), -a, s, &panel_opts)?.value
            }
            (Some(s), true) => integrate_graded_at_zero(|t| g(t) * density(t), b, s, &panel_opts)?.value,
            _ => integrate(|v| g(v) * density(v), a, b, &panel_opts)?.value,
        };
    }
    Ok(total)
}

fn integrate_side(
    h: &dyn Fn(f64) -> f64,
    hi: f64,
    singular_at_zero: Option<f64>,
    opts: &QuadratureOptions,
) -> Result<f64> {
    Ok(match singular_at_zero {
        Some(s) => integrate_graded_at_zero(h, hi, s, opts)?.value,
        None => integrate(h, 0.0, hi, opts)?.value,
    })
}

/// Inputs to the EMSE predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryInputs {
    pub kernel: GgdKernel,
    pub eta: f64,
    /// `Tr(Rxx)`; `m * sigma_x^2` for white input.
    pub trace_rxx: f64,
    pub noise: NoiseModel,
}

/// Whether the full (second-order) prediction is usable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Valid,
    /// `2 E[f'] - eta Tr E[zeta] <= 0`: outside the region where the
    /// second-order expansion describes a finite steady state.
    NonPositiveDenominator,
    /// `E[zeta]` diverges (`1 < alpha < 1.5` with noise density positive at 0).
    DivergentCorrection,
}

/// The three expectations and the two denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmseDiagnostics {
    /// `E[f(v)^2] = E[exp(-2 lambda|v|^alpha) |v|^(2alpha-2)]`.
    pub e_f_squared: f64,
    /// `E[f'(v)]`.
    pub e_f_prime: f64,
    /// `E[zeta(v)]`; `-inf` when divergent.
    pub e_zeta: f64,
    pub denominator_full: f64,
    pub denominator_simplified: f64,
}

/// Full and simplified steady-state EMSE predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmseResult {
    /// Full prediction; only meaningful when `validity == Valid`.
    pub full: f64,
    pub simplified: f64,
    pub validity: Validity,
    /// `false` when `E[f'] <= 0`.
    pub simplified_valid: bool,
    pub diagnostics: EmseDiagnostics,
}

impl EmseResult {
    pub fn full_valid(&self) -> bool {
        self.validity == Validity::Valid
    }
}

fn has_density_at_zero(noise: &NoiseModel) -> bool {
    match noise {
        NoiseModel::Gaussian { .. } | NoiseModel::Laplace { .. } => true,
        NoiseModel::Uniform { lo, hi } => *lo <= 0.0 && 0.0 <= *hi,
        NoiseModel::BinarySymmetric { .. } => false,
        NoiseModel::Mixture { c, inner, outer } => {
            (*c < 1.0 && has_density_at_zero(inner)) || (*c > 0.0 && has_density_at_zero(outer))
        }
    }
}

/// Steady-state EMSE predictor (full and small-step forms).
///
/// Requires `alpha > 1` and zero-mean noise. Leaving the validity region is
/// reported through [`EmseResult::validity`], not as an error.
pub fn steady_state_emse(inputs: &TheoryInputs) -> Result<EmseResult> {
    let k = &inputs.kernel;
    let (alpha, lambda) = (k.alpha(), k.lambda());
    if alpha <= 1.0 {
        return Err(Error::Unsupported(format!(
            "steady-state EMSE needs alpha > 1 (E[|v|^(alpha-2)] diverges), got {alpha}"
        )));
    }
    if !(inputs.eta.is_finite() && inputs.eta >= 0.0) {
        return Err(invalid("eta", format!("must be finite and >= 0, got {}", inputs.eta)));
    }
    if !(inputs.trace_rxx.is_finite() && inputs.trace_rxx > 0.0) {
        return Err(invalid("trace_rxx", format!("must be finite and > 0, got {}", inputs.trace_rxx)));
    }
    if inputs.noise.mean() != 0.0 {
        return Err(Error::Unsupported("steady-state EMSE assumes zero-mean noise".into()));
    }
    let noise = &inputs.noise;
    let even = IntegrandHints::even();
    let sing = |s: f64| if s > 0.0 { Some(s) } else { None };

    let e_f_squared = expect_over_noise(|v| f_squared_raw(v.abs(), alpha, lambda), noise, even)?;
    let e_f_prime = expect_over_noise(
        |v| f_prime_raw(v.abs(), alpha, lambda),
        noise,
        even.with_singularity(sing(2.0 - alpha)),
    )?;
    let zeta_diverges = alpha < 1.5 && has_density_at_zero(noise);
    let e_zeta = if zeta_diverges {
        f64::NEG_INFINITY
    } else {
        expect_over_noise(
            |v| zeta_raw(v.abs(), alpha, lambda),
            noise,
            even.with_singularity(sing(4.0 - 2.0 * alpha)),
        )?
    };

    let load = inputs.eta * inputs.trace_rxx;
    let numerator = load * e_f_squared;
    let denominator_simplified = 2.0 * e_f_prime;
    let denominator_full = if zeta_diverges {
        f64::NAN
    } else {
        denominator_simplified - load * e_zeta
    };
    let validity = if zeta_diverges {
        Validity::DivergentCorrection
    } else if denominator_full > 0.0 {
        Validity::Valid
    } else {
        Validity::NonPositiveDenominator
    };
    Ok(EmseResult {
        full: numerator / denominator_full,
        simplified: numerator / denominator_simplified,
        validity,
        simplified_valid: denominator_simplified > 0.0,
        diagnostics: EmseDiagnostics {
            e_f_squared,
            e_f_prime,
            e_zeta,
            denominator_full,
            denominator_simplified,
        },
    })
}

/// Sample estimate of the step-size bound `2 E[e_a f(e)] / E[||X||^2 f(e)^2]`
/// from a simulation trace.
pub fn empirical_step_bound(ea: &[f64], e: &[f64], xnorm2: &[f64], k: &GgdKernel) -> Result<f64> {
    if ea.len() != e.len() || ea.len() != xnorm2.len() {
        return Err(Error::DimensionMismatch {
            expected: ea.len(),
            found: if ea.len() != e.len() { e.len() } else { xnorm2.len() },
        });
    }
    if ea.is_empty() {
        return Err(Error::Empty);
    }
    let n = ea.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for ((&a, &err), &x2) in ea.iter().zip(e).zip(xnorm2) {
        let f = gmcc_nonlinearity(err, k);
        num += a * f;
        den += x2 * f * f;
    }
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateTrace("E[||X||^2 f(e)^2] vanishes"));
    }
    Ok(2.0 * (num / n) / (den / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(alpha: f64, lambda: f64) -> GgdKernel {
        GgdKernel::from_lambda(alpha, lambda).unwrap()
    }

    #[test]
    fn derivative_examples() {
        let formal = k(2.0, 1e-12);
        assert!((f_prime(0.7, &formal).unwrap() - 1.0).abs() < 1e-11);
        assert!(f_double_prime(0.7, &formal).unwrap().abs() < 1e-11);
        assert!((zeta(0.7, &formal).unwrap() - 1.0).abs() < 1e-11);

        let g = k(2.0, 0.4);
        for &v in &[-1.5f64, 0.3, 2.2] {
            let expected = (-0.4 * v * v).exp() * (1.0 - 0.8 * v * v);
            assert!((f_prime(v, &g).unwrap() - expected).abs() < 1e-14);
            let z = (-0.8 * v * v).exp() * (1.0 - 4.0 * v * v + 8.0 * 0.16 * v.powi(4));
            assert!((zeta(v, &g).unwrap() - z).abs() < 1e-14);
        }

        let k4 = k(4.0, 0.03);
        let root = (3.0f64 / (0.03 * 4.0)).powf(0.25);
        assert!(f_prime(root, &k4).unwrap().abs() < 1e-12);
        assert_eq!(f_double_prime(-1.3, &k4).unwrap(), -f_double_prime(1.3, &k4).unwrap());
    }

    #[test]
    fn singular_points_are_rejected() {
        let k15 = k(1.5, 1.0);
        assert!(f_prime(0.0, &k15).is_err());
        assert!(zeta(0.0, &k15).is_err());
        assert!(f_double_prime(0.0, &k(4.0, 1.0)).is_err());
        assert_eq!(f_prime(0.0, &k(2.0, 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn expectation_examples() {
        let sigma2 = 2.5;
        let g = NoiseModel::gaussian(0.0, sigma2).unwrap();
        let m2 = expect_over_noise(|v| v * v, &g, IntegrandHints::even()).unwrap();
        assert!((m2 - sigma2).abs() < 1e-9);
        let u = NoiseModel::uniform_with_variance(1.0).unwrap();
        assert!((expect_over_noise(|v| v * v, &u, IntegrandHints::default()).unwrap() - 1.0).abs() < 1e-9);
        let l = NoiseModel::laplace(0.0, 1.0).unwrap();
        let abs = expect_over_noise(f64::abs, &l, IntegrandHints::default()).unwrap();
        assert!((abs - 0.5f64.sqrt()).abs() < 1e-9);
        let odd = expect_over_noise(|v| v * v * v, &g, IntegrandHints { parity: Parity::Odd, ..Default::default() });
        assert_eq!(odd.unwrap(), 0.0);
    }

    #[test]
    fn shifted_noise_moments() {
        let g = NoiseModel::gaussian(1.5, 0.5).unwrap();
        let m = expect_over_noise(|v| v, &g, IntegrandHints::default()).unwrap();
        assert!((m - 1.5).abs() < 1e-9);
        let l = NoiseModel::laplace(-0.7, 2.0).unwrap();
        let m2 = expect_over_noise(|v| v * v, &l, IntegrandHints::default()).unwrap();
        assert!((m2 - (2.0 + 0.49)).abs() < 1e-9);
    }

    #[test]
    fn binary_expectation_is_point_evaluation() {
        let b = NoiseModel::binary(1.3).unwrap();
        let g = |v: f64| (-0.2 * v.powi(4)).exp() * v * v;
        assert_eq!(expect_over_noise(g, &b, IntegrandHints::even()).unwrap(), g(1.3));
    }

    #[test]
    fn singular_expectation_matches_closed_form() {
        // E|v|^(-1/2) for v ~ U(-1, 1) is 2
        let u = NoiseModel::uniform(-1.0, 1.0).unwrap();
        let hints = IntegrandHints::even().with_singularity(Some(0.5));
        let m = expect_over_noise(|v: f64| v.abs().powf(-0.5), &u, hints).unwrap();
        assert!((m - 2.0).abs() < 1e-9);
        // same integral without the even hint goes through the split path
        let hints = IntegrandHints::default().with_singularity(Some(0.5));
        let m = expect_over_noise(|v: f64| v.abs().powf(-0.5), &u, hints).unwrap();
        assert!((m - 2.0).abs() < 1e-9);
    }

    #[test]
    fn emse_rejects_unsupported_inputs() {
        let noise = NoiseModel::gaussian(0.0, 1.0).unwrap();
        let base = TheoryInputs {
            kernel: k(1.0, 0.1),
            eta: 0.01,
            trace_rxx: 10.0,
            noise: noise.clone(),
        };
        assert!(matches!(steady_state_emse(&base), Err(Error::Unsupported(_))));
        let shifted = TheoryInputs {
            kernel: k(2.0, 0.1),
            noise: NoiseModel::gaussian(0.5, 1.0).unwrap(),
            ..base.clone()
        };
        assert!(matches!(steady_state_emse(&shifted), Err(Error::Unsupported(_))));
        let no_trace = TheoryInputs {
            kernel: k(2.0, 0.1),
            trace_rxx: 0.0,
            ..base
        };
        assert!(steady_state_emse(&no_trace).is_err());
    }

    #[test]
    fn emse_flags_divergent_correction() {
        let r = steady_state_emse(&TheoryInputs {
            kernel: k(1.3, 0.1),
            eta: 0.01,
            trace_rxx: 9.0,
            noise: NoiseModel::gaussian(0.0, 1.0).unwrap(),
        })
        .unwrap();
        assert_eq!(r.validity, Validity::DivergentCorrection);
        assert!(r.simplified_valid && r.simplified > 0.0);
        // point-mass noise keeps every expectation finite
        let r = steady_state_emse(&TheoryInputs {
            kernel: k(1.3, 0.1),
            eta: 0.01,
            trace_rxx: 9.0,
            noise: NoiseModel::binary(1.0).unwrap(),
        })
        .unwrap();
        assert!(r.full_valid());
    }

    #[test]
    fn emse_flags_nonpositive_denominator() {
        let r = steady_state_emse(&TheoryInputs {
            kernel: k(4.0, 0.03),
            eta: 3e-2,
            trace_rxx: 20.0,
            noise: NoiseModel::uniform_with_variance(1.0).unwrap(),
        })
        .unwrap();
        assert_eq!(r.validity, Validity::NonPositiveDenominator);
        assert!(r.diagnostics.denominator_full <= 0.0);
    }

    #[test]
    fn step_bound_examples() {
        let formal = k(2.0, 1e-12);
        let e = [0.5, -1.0, 2.0, -0.25];
        let x2 = [4.0; 4];
        let bound = empirical_step_bound(&e, &e, &x2, &formal).unwrap();
        assert!((bound - 0.5).abs() < 1e-9);
        let zeros = [0.0; 4];
        assert!(matches!(
            empirical_step_bound(&zeros, &zeros, &x2, &formal),
            Err(Error::DegenerateTrace(_))
        ));
        assert!(empirical_step_bound(&e, &e[..3], &x2, &formal).is_err());
    }
}
