//! Online FIR adaptive filters under the GMCC and LMP criteria, plus a batch
//! fixed-point solver for the GMCC-optimal weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::GgdKernel;

/// Errors below this magnitude contribute nothing to an update when the
/// error nonlinearity is singular at the origin (`alpha <= 1` or `p <= 1`).
pub const ZERO_ERROR_CUTOFF: f64 = 1e-12;

/// Tap weights of a length-`m` FIR filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirFilterState {
    weights: Vec<f64>,
}

impl FirFilterState {
    /// Null initial weight vector.
    pub fn zeros(m: usize) -> Self {
        Self {
            weights: vec![0.0; m],
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n == self.weights.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: n,
            })
        }
    }

    /// Filter output `W^T X`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(dot(&self.weights, x))
    }

    /// One adaptation step, returning the new state and the a-posteriori-free
    /// error `e = d - W^T X` computed with the old weights.
    pub fn update(&self, spec: &AlgorithmSpec, sample: &Regressand) -> Result<(Self, f64)> {
        let mut next = self.clone();
        let e = next.update_in_place(spec, sample)?;
        Ok((next, e))
    }

    /// In-place form of [`FirFilterState::update`], used by the simulation loops.
    pub fn update_in_place(&mut self, spec: &AlgorithmSpec, sample: &Regressand) -> Result<f64> {
        self.check_dim(sample.input.len())?;
        Ok(self.adapt(spec, &sample.input, sample.desired))
    }

    /// Unchecked step; caller guarantees `x.len() == self.len()`.
    #[inline]
    pub(crate) fn adapt(&mut self, spec: &AlgorithmSpec, x: &[f64], desired: f64) -> f64 {
        let e = desired - dot(&self.weights, x);
        let gain = spec.eta * spec.rule.nonlinearity(e);
        if gain != 0.0 {
            for (w, xi) in self.weights.iter_mut().zip(x) {
                *w += gain * xi;
            }
        }
        e
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Input regressor `X(i)` and desired response `d(i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressand {
    pub input: Vec<f64>,
    pub desired: f64,
}

impl Regressand {
    pub fn new(input: Vec<f64>, desired: f64) -> Self {
        Self { input, desired }
    }
}

/// Which stochastic-gradient update to apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateRule {
    /// `f(e) = exp(-lambda|e|^alpha) |e|^(alpha-1) sign(e)`.
    Gmcc(GgdKernel),
    /// `f(e) = |e|^(p-1) sign(e)`; p = 1 sign algorithm, 2 LMS, 4 LMF.
    Lmp { p: f64 },
}

impl UpdateRule {
    /// Error nonlinearity `f(e)` of the rule.
    #[inline]
    pub fn nonlinearity(&self, e: f64) -> f64 {
        match self {
            UpdateRule::Gmcc(k) => gmcc_nonlinearity(e, k),
            UpdateRule::Lmp { p } => lmp_nonlinearity(e, *p),
        }
    }
}

/// Update rule together with its step size `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlgorithmRepr", into = "AlgorithmRepr")]
pub struct AlgorithmSpec {
    pub rule: UpdateRule,
    pub eta: f64,
}

impl AlgorithmSpec {
    pub fn new(rule: UpdateRule, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(invalid("eta", format!("must be finite and >= 0, got {eta}")));
        }
        if let UpdateRule::Lmp { p } = rule {
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid("p", format!("must be finite and > 0, got {p}")));
            }
        }
        Ok(Self { rule, eta })
    }

    pub fn gmcc(kernel: GgdKernel, eta: f64) -> Result<Self> {
        Self::new(UpdateRule::Gmcc(kernel), eta)
    }

    pub fn lmp(p: f64, eta: f64) -> Result<Self> {
        Self::new(UpdateRule::Lmp { p }, eta)
    }

    /// Same rule with a different step size.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.rule, eta)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmRepr {
    rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    eta: f64,
}

impl TryFrom<AlgorithmRepr> for AlgorithmSpec {
    type Error = Error;

    fn try_from(r: AlgorithmRepr) -> Result<Self> {
        let fixed_p = |p: f64| -> Result<UpdateRule> {
            if r.p.is_some_and(|given| given != p) {
                return Err(invalid("p", format!("rule `{}` fixes p = {p}", r.rule)));
            }
            if r.alpha.is_some() || r.lambda.is_some() || r.beta.is_some() {
                return Err(invalid("rule", format!("rule `{}` takes no kernel", r.rule)));
            }
            Ok(UpdateRule::Lmp { p })
        };
        let kernel = |alpha: f64| -> Result<GgdKernel> {
            match (r.lambda, r.beta) {
                (Some(l), None) => GgdKernel::from_lambda(alpha, l),
                (None, Some(b)) => GgdKernel::from_beta(alpha, b),
                (Some(_), Some(_)) => Err(invalid("beta", "give either `lambda` or `beta`, not both")),
                (None, None) => Err(invalid("lambda", "GMCC rules need `lambda` (or `beta`)")),
            }
        };
        let rule = match r.rule.as_str() {
            "gmcc" => {
                if r.p.is_some() {
                    return Err(invalid("p", "`p` is not a GMCC parameter"));
                }
                let alpha = r.alpha.ok_or_else(|| invalid("alpha", "GMCC rule needs `alpha`"))?;
                UpdateRule::Gmcc(kernel(alpha)?)
            }
            "mcc" => {
                if r.alpha.is_some_and(|a| a != 2.0) {
                    return Err(invalid("alpha", "rule `mcc` fixes alpha = 2"));
                }
                UpdateRule::Gmcc(kernel(2.0)?)
            }
            "lmp" => {
                if r.alpha.is_some() || r.lambda.is_some() || r.beta.is_some() {
                    return Err(invalid("rule", "rule `lmp` takes no kernel"));
                }
                UpdateRule::Lmp {
                    p: r.p.ok_or_else(|| invalid("p", "LMP rule needs `p`"))?,
                }
            }
            "sa" => fixed_p(1.0)?,
            "lms" => fixed_p(2.0)?,
            "lmf" => fixed_p(4.0)?,
            other => {
                return Err(invalid(
                    "rule",
                    format!("unknown rule `{other}` (expected gmcc, mcc, lmp, sa, lms, lmf)"),
                ))
            }
        };
        AlgorithmSpec::new(rule, r.eta)
    }
}

impl From<AlgorithmSpec> for AlgorithmRepr {
    fn from(s: AlgorithmSpec) -> Self {
        match s.rule {
            UpdateRule::Gmcc(k) => AlgorithmRepr {
                rule: "gmcc".into(),
                alpha: Some(k.alpha()),
                lambda: Some(k.lambda()),
                beta: None,
                p: None,
                eta: s.eta,
            },
            UpdateRule::Lmp { p } => AlgorithmRepr {
                rule: "lmp".into(),
                alpha: None,
                lambda: None,
                beta: None,
                p: Some(p),
                eta: s.eta,
            },
        }
    }
}

/// `|e|^(p-1) sign(e)` with `f(0) = 0` (and `|e| < 1e-12` mapped to 0 for `p <= 1`).
#[inline]
pub fn lmp_nonlinearity(e: f64, p: f64) -> f64 {
    let a = e.abs();
    if a == 0.0 || (p <= 1.0 && a < ZERO_ERROR_CUTOFF) {
        return 0.0;
    }
    a.powf(p - 1.0).copysign(e)
}

/// GMCC error nonlinearity `exp(-lambda|e|^alpha) |e|^(alpha-1) sign(e)`.
///
/// Odd and bounded for every `alpha > 0`. `f(0) = 0`; for `alpha <= 1` every
/// `|e| < 1e-12` also maps to zero since `|e|^(alpha-1)` blows up there.
#[inline]
pub fn gmcc_nonlinearity(e: f64, k: &GgdKernel) -> f64 {
    let a = e.abs();
    if a == 0.0 || (k.alpha() <= 1.0 && a < ZERO_ERROR_CUTOFF) {
        return 0.0;
    }
    (k.shape(a) * a.powf(k.alpha() - 1.0)).copysign(e)
}

/// Options for [`gmcc_fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Stop when `||W_new - W|| / ||W_new|| < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Floor on `|e|` inside `|e|^(alpha-2)`.
    pub eps_reg: f64,
    /// Step `W <- W + relaxation * (W_fp - W)`; `None` picks `1/(alpha-1)` for
    /// `alpha > 2` and `1` otherwise.
    pub relaxation: Option<f64>,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            eps_reg: 1e-8,
            relaxation: None,
        }
    }
}

/// Outcome of the fixed-point iteration. Non-convergence is reported through
/// `converged`, not as an error.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub state: FirFilterState,
    pub iterations: usize,
    pub converged: bool,
}

/// Error weighting `h(e) = exp(-lambda|e|^alpha) max(|e|, eps)^(alpha-2)`.
#[inline]
pub fn fixed_point_weight(e: f64, k: &GgdKernel, eps_reg: f64) -> f64 {
    let a = e.abs();
    k.shape(a) * a.max(eps_reg).powf(k.alpha() - 2.0)
}

/// GMCC-optimal weights from a batch of samples by the fixed-point iteration
/// `W = [Σ h(e_i) X_i X_i^T]^{-1} Σ h(e_i) d_i X_i`, starting from `W = 0`.
///
/// For `alpha > 2` the undamped map overshoots (it is the IRLS map for an
/// `alpha`-power loss, which oscillates once `alpha > 3`), so by default the
/// step is relaxed by `1/(alpha - 1)`: in the `lambda -> 0` limit this is
/// exactly the Newton step on `Σ |e_i|^alpha`. The fixed point is unchanged.
pub fn gmcc_fixed_point(
    samples: &[Regressand],
    k: &GgdKernel,
    opts: &FixedPointOptions,
) -> Result<FixedPointSolution> {
    let m = samples.first().ok_or(Error::Empty)?.input.len();
    if m == 0 {
        return Err(Error::Empty);
    }
    if samples.len() < m {
        return Err(invalid(
            "samples",
            format!("need at least m = {m} samples, got {}", samples.len()),
        ));
    }
    for s in samples {
        if s.input.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: s.input.len(),
            });
        }
    }
    if !(opts.tol > 0.0 && opts.eps_reg > 0.0) {
        return Err(invalid("tol", "tol and eps_reg must be > 0"));
    }
    let omega = opts
        .relaxation
        .unwrap_or(if k.alpha() > 2.0 { 1.0 / (k.alpha() - 1.0) } else { 1.0 });
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(invalid("relaxation", "must lie in (0, 1]"));
    }

    let mut w = DVector::<f64>::zeros(m);
    let mut r = DMatrix::<f64>::zeros(m, m);
    let mut p = DVector::<f64>::zeros(m);
    for iter in 1..=opts.max_iter {
        r.fill(0.0);
        p.fill(0.0);
        for s in samples {
            let e = s.desired - dot(w.as_slice(), &s.input);
            let h = fixed_point_weight(e, k, opts.eps_reg);
            for a in 0..m {
                let hx = h * s.input[a];
                p[a] += hx * s.desired;
                for b in a..m {
                    r[(a, b)] += hx * s.input[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                r[(a, b)] = r[(b, a)];
            }
        }
        let target = solve_pivoted(r.clone(), &p)?;
        let step = (&target - &w) * omega;
        let next = &w + &step;
        let scale = next.norm();
        let change = step.norm();
        w = next;
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular);
        }
        let rel = if scale > 0.0 { change / scale } else { change };
        if rel < opts.tol {
            return Ok(FixedPointSolution {
                state: FirFilterState { weights: w.as_slice().to_vec() },
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(FixedPointSolution {
        state: FirFilterState { weights: w.as_slice().to_vec() },
        iterations: opts.max_iter,
        converged: false,
    })
}

/// LU with partial pivoting; rejects numerically singular systems.
fn solve_pivoted(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let max_diag = a.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let lu = a.lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(max_diag > 0.0) || min_pivot <= max_diag * 1e-14 {
        return Err(Error::Singular);
    }
    lu.solve(b).ok_or(Error::Singular)
}
