//! Generalized Gaussian density (GGD) kernel and the correntropy family of
//! estimators built on it.
//!
//! The kernel is `G(e) = gamma * exp(-lambda * |e|^alpha)` with
//! `lambda = beta^(-alpha)` and `gamma = alpha / (2 beta Γ(1/alpha))`.
//! `alpha = 2` is the Gaussian kernel, `alpha = 1` the Laplacian one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::gamma;

/// GGD kernel with shape `alpha` and bandwidth `beta`.
///
/// `lambda` and `gamma` are derived at construction and kept alongside so that
/// hot loops never recompute them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelParams", into = "KernelParams")]
pub struct GgdKernel {
    alpha: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
}

/// Wire form of a kernel: `alpha` plus either `lambda` or `beta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelParams {
    alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

impl TryFrom<KernelParams> for GgdKernel {
    type Error = Error;

    fn try_from(p: KernelParams) -> Result<Self> {
        match (p.lambda, p.beta) {
            (Some(lambda), None) => GgdKernel::from_lambda(p.alpha, lambda),
            (None, Some(beta)) => GgdKernel::from_beta(p.alpha, beta),
            (Some(lambda), Some(beta)) => {
                let k = GgdKernel::from_lambda(p.alpha, lambda)?;
                if ((k.beta - beta) / beta).abs() > 1e-9 {
                    return Err(invalid("beta", "inconsistent with lambda = beta^(-alpha)"));
                }
                Ok(k)
            }
            (None, None) => Err(invalid("lambda", "one of `lambda` or `beta` is required")),
        }
    }
}

impl From<GgdKernel> for KernelParams {
    fn from(k: GgdKernel) -> Self {
        KernelParams {
            alpha: k.alpha,
            lambda: Some(k.lambda),
            beta: None,
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl GgdKernel {
    pub fn from_beta(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        let lambda = beta.powf(-alpha);
        check_positive("lambda", lambda)?;
        Ok(Self::assemble(alpha, beta, lambda))
    }

    pub fn from_lambda(alpha: f64, lambda: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("lambda", lambda)?;
        let beta = lambda.powf(-1.0 / alpha);
        check_positive("beta", beta)?;
        Ok(Self::assemble(alpha, beta, lambda))
    }

    fn assemble(alpha: f64, beta: f64, lambda: f64) -> Self {
        let gamma = alpha / (2.0 * beta * gamma(1.0 / alpha));
        Self {
            alpha,
            beta,
            lambda,
            gamma,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Normalization constant; also the kernel's peak value `G(0)`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `exp(-lambda |e|^alpha)`, the unnormalized kernel.
    #[inline]
    pub fn shape(&self, e: f64) -> f64 {
        (-self.lambda * e.abs().powf(self.alpha)).exp()
    }

    /// GGD density `gamma * exp(-lambda |e|^alpha)`.
    #[inline]
    pub fn density(&self, e: f64) -> f64 {
        self.gamma * self.shape(e)
    }

    /// `1 - exp(-lambda |e|^alpha)` without cancellation for small arguments.
    #[inline]
    fn loss_shape(&self, e: f64) -> f64 {
        -(-self.lambda * e.abs().powf(self.alpha)).exp_m1()
    }
}

/// Ordered, finite, non-empty sample vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for SampleVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SampleVector> for Vec<f64> {
    fn from(s: SampleVector) -> Self {
        s.0
    }
}

impl AsRef<[f64]> for SampleVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn paired<'a>(x: &'a SampleVector, y: &'a SampleVector) -> Result<impl Iterator<Item = f64> + 'a> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(x.0.iter().zip(&y.0).map(|(a, b)| a - b))
}

/// Sample estimator of generalized correntropy: `(1/N) Σ G(x_i - y_i)`.
pub fn correntropy_estimate(x: &SampleVector, y: &SampleVector, k: &GgdKernel) -> Result<f64> {
    let n = x.len() as f64;
    let sum: f64 = paired(x, y)?.map(|e| k.density(e)).sum();
    Ok(sum / n)
}

/// Parzen estimate of the error density at `at`, using the GGD kernel as the
/// window: `(1/N) Σ G(at - e_i)`.
pub fn parzen_density(errors: &SampleVector, at: f64, k: &GgdKernel) -> f64 {
    let n = errors.len() as f64;
    errors.0.iter().map(|&e| k.density(at - e)).sum::<f64>() / n
}

/// GC-loss `gamma - correntropy_estimate(x, y)`.
///
/// Evaluated as `gamma * mean(1 - exp(-lambda |e_i|^alpha))` through `exp_m1`,
/// which equals the subtraction form up to rounding but keeps full relative
/// precision when every `lambda |e_i|^alpha` is tiny.
pub fn gc_loss(x: &SampleVector, y: &SampleVector, k: &GgdKernel) -> Result<f64> {
    let n = x.len() as f64;
    let sum: f64 = paired(x, y)?.map(|e| k.loss_shape(e)).sum();
    Ok(k.gamma * sum / n)
}

/// Generalized correntropy induced metric, `sqrt(gc_loss)`.
///
/// A metric only for `0 < alpha <= 2`; larger shapes are accepted but the
/// triangle inequality may fail because the kernel is no longer positive
/// definite.
pub fn gcim(x: &SampleVector, y: &SampleVector, k: &GgdKernel) -> Result<f64> {
    gc_loss(x, y, k).map(f64::sqrt)
}

/// `L(x) = (N / (lambda gamma) * gc_loss(x, 0))^(1/alpha)`.
///
/// Tends to the l-alpha norm as `lambda -> 0` and ranks vectors like the l0
/// count as `lambda -> inf`.
pub fn l_alpha_beta(x: &SampleVector, k: &GgdKernel) -> f64 {
    let n = x.len() as f64;
    let zero = SampleVector(vec![0.0; x.len()]);
    let loss = gc_loss(x, &zero, k).expect("same length by construction");
    (n / (k.lambda * k.gamma) * loss).powf(1.0 / k.alpha)
}

/// Gradient of the GC-loss with respect to the error vector.
///
/// Component `i` is `(lambda alpha gamma / N) exp(-lambda|e_i|^alpha) |e_i|^(alpha-1) sign(e_i)`.
/// Zero components map to zero when `alpha > 1`; for `alpha <= 1` the
/// derivative does not exist there and a domain error is returned.
pub fn gc_loss_gradient(e: &SampleVector, k: &GgdKernel) -> Result<SampleVector> {
    let n = e.len() as f64;
    let scale = k.lambda * k.alpha * k.gamma / n;
    let grad = e
        .0
        .iter()
        .enumerate()
        .map(|(i, &ei)| {
            if ei == 0.0 {
                if k.alpha > 1.0 {
                    Ok(0.0)
                } else {
                    Err(Error::Domain(format!(
                        "GC-loss gradient undefined at e[{i}] = 0 for alpha = {} <= 1",
                        k.alpha
                    )))
                }
            } else {
                let a = ei.abs();
                Ok((scale * k.shape(a) * a.powf(k.alpha - 1.0)).copysign(ei))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleVector(grad))
}

/// Diagonal of the GC-loss Hessian (off-diagonal terms vanish identically).
///
/// Component `i` is `-(alpha lambda gamma / N) T(e_i) (alpha lambda |e_i|^alpha - (alpha - 1))`
/// with `T(x) = exp(-lambda|x|^alpha) |x|^(alpha-2)`.
pub fn gc_loss_hessian_diag(e: &SampleVector, k: &GgdKernel) -> Result<SampleVector> {
    let n = e.len() as f64;
    let (alpha, lambda) = (k.alpha, k.lambda);
    let scale = alpha * lambda * k.gamma / n;
    let diag = e
        .0
        .iter()
        .enumerate()
        .map(|(i, &ei)| {
            if ei == 0.0 && alpha < 2.0 {
                return Err(Error::Domain(format!(
                    "GC-loss Hessian singular at e[{i}] = 0 for alpha = {alpha} < 2"
                )));
            }
            let a = ei.abs();
            let pow_a = a.powf(alpha);
            let t = (-lambda * pow_a).exp() * a.powf(alpha - 2.0);
            Ok(-scale * t * (alpha * lambda * pow_a - (alpha - 1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleVector(diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI, SQRT_2};

    fn sv(v: &[f64]) -> SampleVector {
        SampleVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn derived_parameters_are_consistent() {
        for &(alpha, beta) in &[(0.1, 0.7), (0.5, 2.0), (2.0, 1.3), (4.0, 0.2), (20.0, 3.0)] {
            let k = GgdKernel::from_beta(alpha, beta).unwrap();
            assert!((k.lambda() * beta.powf(alpha) - 1.0).abs() < 1e-12);
            assert!(k.gamma() > 0.0);
            let back = GgdKernel::from_lambda(alpha, k.lambda()).unwrap();
            assert!(((back.beta() - beta) / beta).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_normalizer_matches_normal_density() {
        let sigma = 1.7;
        let k = GgdKernel::from_beta(2.0, SQRT_2 * sigma).unwrap();
        let expected = 1.0 / ((2.0 * PI).sqrt() * sigma);
        assert!(((k.gamma() - expected) / expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GgdKernel::from_beta(0.0, 1.0).is_err());
        assert!(GgdKernel::from_beta(2.0, -1.0).is_err());
        assert!(GgdKernel::from_lambda(2.0, 0.0).is_err());
        assert!(GgdKernel::from_lambda(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn density_examples() {
        let k = GgdKernel::from_beta(3.0, 0.8).unwrap();
        assert_eq!(k.density(0.0), k.gamma());
        assert!((k.density(0.8) - k.gamma() / E).abs() < 1e-15);
        let g = GgdKernel::from_beta(2.0, SQRT_2).unwrap();
        assert!((g.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn sample_vector_rejects_non_finite_and_empty() {
        assert_eq!(
            SampleVector::new(vec![1.0, f64::INFINITY]),
            Err(Error::NonFinite { index: 1 })
        );
        assert_eq!(SampleVector::new(vec![]), Err(Error::Empty));
    }

    #[test]
    fn estimator_examples() {
        let k = GgdKernel::from_beta(1.5, 0.9).unwrap();
        let x = sv(&[0.3, -1.2, 2.0]);
        assert_eq!(correntropy_estimate(&x, &x, &k).unwrap(), k.gamma());
        assert_eq!(gc_loss(&x, &x, &k).unwrap(), 0.0);
        assert_eq!(gcim(&x, &x, &k).unwrap(), 0.0);

        let v = correntropy_estimate(&sv(&[0.9]), &sv(&[0.0]), &k).unwrap();
        assert!((v - k.gamma() / E).abs() < 1e-15);
        let l = gc_loss(&sv(&[0.9]), &sv(&[0.0]), &k).unwrap();
        assert!((l - k.gamma() * (1.0 - 1.0 / E)).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let k = GgdKernel::from_lambda(2.0, 1.0).unwrap();
        let err = correntropy_estimate(&sv(&[1.0]), &sv(&[1.0, 2.0]), &k).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 1, found: 2 });
        assert!(gc_loss(&sv(&[1.0]), &sv(&[1.0, 2.0]), &k).is_err());
        assert!(gcim(&sv(&[1.0]), &sv(&[1.0, 2.0]), &k).is_err());
    }

    #[test]
    fn l_alpha_beta_of_zero_is_zero() {
        let k = GgdKernel::from_lambda(2.0, 0.5).unwrap();
        assert_eq!(l_alpha_beta(&SampleVector::zeros(4).unwrap(), &k), 0.0);
    }

    #[test]
    fn gradient_edge_cases() {
        let k2 = GgdKernel::from_lambda(2.0, 0.7).unwrap();
        let g = gc_loss_gradient(&SampleVector::zeros(3).unwrap(), &k2).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));

        let e = sv(&[0.4, -1.1, 2.5]);
        let g = gc_loss_gradient(&e, &k2).unwrap();
        for (gi, ei) in g.as_slice().iter().zip(e.as_slice()) {
            let expected = k2.lambda() * 2.0 * k2.gamma() / 3.0 * (-k2.lambda() * ei * ei).exp() * ei;
            assert!((gi - expected).abs() < 1e-15);
        }

        let k1 = GgdKernel::from_lambda(1.0, 0.7).unwrap();
        assert!(matches!(
            gc_loss_gradient(&sv(&[0.0, 1.0]), &k1),
            Err(Error::Domain(_))
        ));
        assert!(gc_loss_gradient(&sv(&[0.5, 1.0]), &k1).is_ok());
    }

    #[test]
    fn hessian_singularity_below_alpha_two() {
        let k = GgdKernel::from_lambda(1.5, 1.0).unwrap();
        assert!(matches!(
            gc_loss_hessian_diag(&sv(&[0.0]), &k),
            Err(Error::Domain(_))
        ));
        let k2 = GgdKernel::from_lambda(2.0, 1.0).unwrap();
        let h = gc_loss_hessian_diag(&sv(&[0.0]), &k2).unwrap();
        assert!(h.as_slice()[0] > 0.0);
    }

    #[test]
    fn kernel_json_accepts_lambda_or_beta() {
        let k: GgdKernel = serde_json::from_str(r#"{"alpha": 4, "lambda": 0.03}"#).unwrap();
        assert_eq!(k.lambda(), 0.03);
        let k: GgdKernel = serde_json::from_str(r#"{"alpha": 2, "beta": 2.0}"#).unwrap();
        assert!((k.lambda() - 0.25).abs() < 1e-15);
        assert!(serde_json::from_str::<GgdKernel>(r#"{"alpha": 2}"#).is_err());
        assert!(serde_json::from_str::<GgdKernel>(r#"{"alpha": -2, "lambda": 1}"#).is_err());
        let text = serde_json::to_string(&k).unwrap();
        let back: GgdKernel = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lambda(), k.lambda());
    }
}
