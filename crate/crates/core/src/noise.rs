//! Noise and input distributions for the system-identification experiments,
//! with reproducible seeded sampling.
//!
//! Sampling uses ChaCha8 (`rand_chacha::ChaCha8Rng`). A [`SeededStream`]
//! selects the ChaCha stream id from its `stream_index`, and independent lanes
//! within a stream are reached by jumping the block counter, so a run's input
//! and noise sequences never overlap and do not depend on thread scheduling.
//!
//! Every draw consumes a fixed number of 64-bit words:
//!
//! | model     | words | method                                  |
//! |-----------|-------|-----------------------------------------|
//! | gaussian  | 2     | Box–Muller, cosine branch only          |
//! | uniform   | 1     | affine map of a 53-bit uniform          |
//! | laplace   | 1     | inverse CDF                             |
//! | binary    | 1     | sign of a uniform                       |
//! | mixture   | 1 + inner + outer | gate, then both components drawn |

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Identifies one reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub base_seed: u64,
    pub stream_index: u64,
}

/// Lanes start 2^64 32-bit words apart in the ChaCha counter space.
const LANE_WORDS: u128 = 1 << 64;

impl SeededStream {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        Self {
            base_seed,
            stream_index,
        }
    }

    /// Generator positioned at the start of lane 0.
    pub fn rng(&self) -> ChaCha8Rng {
        self.lane(0)
    }

    /// Generator positioned at the start of lane `lane`.
    pub fn lane(&self, lane: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_index);
        rng.set_word_pos(LANE_WORDS * lane as u128);
        rng
    }
}

/// Uniform in the open interval (0, 1) on the 2^-53 grid offset by half a step.
#[inline]
fn open01<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Supported noise/input distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseRepr", into = "NoiseRepr")]
pub enum NoiseModel {
    Gaussian { mean: f64, variance: f64 },
    Uniform { lo: f64, hi: f64 },
    Laplace { mean: f64, variance: f64 },
    /// `±magnitude` with probability 1/2 each.
    BinarySymmetric { magnitude: f64 },
    /// `(1 - a) A + a B` with `a ~ Bernoulli(c)`, `A ~ inner`, `B ~ outer`.
    Mixture {
        c: f64,
        inner: Box<NoiseModel>,
        outer: Box<NoiseModel>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NoiseRepr {
    Gaussian {
        #[serde(default)]
        mean: f64,
        variance: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Laplace {
        #[serde(default)]
        mean: f64,
        variance: f64,
    },
    Binary {
        magnitude: f64,
    },
    Mixture {
        c: f64,
        inner: Box<NoiseRepr>,
        outer: Box<NoiseRepr>,
    },
}

impl TryFrom<NoiseRepr> for NoiseModel {
    type Error = Error;

    fn try_from(r: NoiseRepr) -> Result<Self> {
        match r {
            NoiseRepr::Gaussian { mean, variance } => NoiseModel::gaussian(mean, variance),
            NoiseRepr::Uniform { lo, hi } => NoiseModel::uniform(lo, hi),
            NoiseRepr::Laplace { mean, variance } => NoiseModel::laplace(mean, variance),
            NoiseRepr::Binary { magnitude } => NoiseModel::binary(magnitude),
            NoiseRepr::Mixture { c, inner, outer } => {
                NoiseModel::mixture(c, NoiseModel::try_from(*inner)?, NoiseModel::try_from(*outer)?)
            }
        }
    }
}

impl From<NoiseModel> for NoiseRepr {
    fn from(m: NoiseModel) -> Self {
        match m {
            NoiseModel::Gaussian { mean, variance } => NoiseRepr::Gaussian { mean, variance },
            NoiseModel::Uniform { lo, hi } => NoiseRepr::Uniform { lo, hi },
            NoiseModel::Laplace { mean, variance } => NoiseRepr::Laplace { mean, variance },
            NoiseModel::BinarySymmetric { magnitude } => NoiseRepr::Binary { magnitude },
            NoiseModel::Mixture { c, inner, outer } => NoiseRepr::Mixture {
                c,
                inner: Box::new((*inner).into()),
                outer: Box::new((*outer).into()),
            },
        }
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

impl NoiseModel {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("variance", variance)?;
        Ok(NoiseModel::Gaussian { mean, variance })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        finite("lo", lo)?;
        finite("hi", hi)?;
        if lo >= hi {
            return Err(invalid("lo", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(NoiseModel::Uniform { lo, hi })
    }

    /// Zero-mean uniform with the given variance, i.e. `[-sqrt(3 var), sqrt(3 var)]`.
    pub fn uniform_with_variance(variance: f64) -> Result<Self> {
        positive("variance", variance)?;
        let half = (3.0 * variance).sqrt();
        Self::uniform(-half, half)
    }

    pub fn laplace(mean: f64, variance: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("variance", variance)?;
        Ok(NoiseModel::Laplace { mean, variance })
    }

    pub fn binary(magnitude: f64) -> Result<Self> {
        positive("magnitude", magnitude)?;
        Ok(NoiseModel::BinarySymmetric { magnitude })
    }

    pub fn mixture(c: f64, inner: NoiseModel, outer: NoiseModel) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(invalid("c", format!("must lie in [0, 1], got {c}")));
        }
        if matches!(inner, NoiseModel::Mixture { .. }) || matches!(outer, NoiseModel::Mixture { .. }) {
            return Err(invalid("mixture", "mixture components cannot be mixtures"));
        }
        Ok(NoiseModel::Mixture {
            c,
            inner: Box::new(inner),
            outer: Box::new(outer),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NoiseModel::Gaussian { .. } => "gaussian",
            NoiseModel::Uniform { .. } => "uniform",
            NoiseModel::Laplace { .. } => "laplace",
            NoiseModel::BinarySymmetric { .. } => "binary",
            NoiseModel::Mixture { .. } => "mixture",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { mean, .. } | NoiseModel::Laplace { mean, .. } => *mean,
            NoiseModel::Uniform { lo, hi } => 0.5 * (lo + hi),
            NoiseModel::BinarySymmetric { .. } => 0.0,
            NoiseModel::Mixture { c, inner, outer } => (1.0 - c) * inner.mean() + c * outer.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { variance, .. } | NoiseModel::Laplace { variance, .. } => *variance,
            NoiseModel::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            NoiseModel::BinarySymmetric { magnitude } => magnitude * magnitude,
            NoiseModel::Mixture { c, inner, outer } => {
                let mean = self.mean();
                let second = |m: &NoiseModel| m.variance() + m.mean().powi(2);
                (1.0 - c) * second(inner) + c * second(outer) - mean * mean
            }
        }
    }

    /// True when the distribution is symmetric about zero.
    pub fn is_symmetric_about_zero(&self) -> bool {
        match self {
            NoiseModel::Gaussian { mean, .. } | NoiseModel::Laplace { mean, .. } => *mean == 0.0,
            NoiseModel::Uniform { lo, hi } => *lo == -*hi,
            NoiseModel::BinarySymmetric { .. } => true,
            NoiseModel::Mixture { inner, outer, .. } => {
                inner.is_symmetric_about_zero() && outer.is_symmetric_about_zero()
            }
        }
    }

    pub fn is_continuous(&self) -> bool {
        match self {
            NoiseModel::BinarySymmetric { .. } => false,
            NoiseModel::Mixture { inner, outer, .. } => inner.is_continuous() && outer.is_continuous(),
            _ => true,
        }
    }

    /// Same family with the variance multiplied by `factor` (location kept).
    pub fn scale_variance(&self, factor: f64) -> Result<Self> {
        positive("factor", factor)?;
        let s = factor.sqrt();
        match self {
            NoiseModel::Gaussian { mean, variance } => Self::gaussian(*mean, variance * factor),
            NoiseModel::Laplace { mean, variance } => Self::laplace(*mean, variance * factor),
            NoiseModel::Uniform { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * s;
                Self::uniform(mid - half, mid + half)
            }
            NoiseModel::BinarySymmetric { magnitude } => Self::binary(magnitude * s),
            NoiseModel::Mixture { c, inner, outer } => {
                Self::mixture(*c, inner.scale_variance(factor)?, outer.scale_variance(factor)?)
            }
        }
    }

    /// Probability density at `v`. Discrete models (and mixtures containing
    /// one) have no density.
    pub fn density(&self, v: f64) -> Result<f64> {
        Ok(match self {
            NoiseModel::Gaussian { mean, variance } => {
                let z = v - mean;
                (-0.5 * z * z / variance).exp() / (2.0 * PI * variance).sqrt()
            }
            NoiseModel::Uniform { lo, hi } => {
                if (*lo..=*hi).contains(&v) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            NoiseModel::Laplace { mean, variance } => {
                let b = (variance / 2.0).sqrt();
                (-(v - mean).abs() / b).exp() / (2.0 * b)
            }
            NoiseModel::BinarySymmetric { .. } => return Err(Error::UnsupportedDensity("binary")),
            NoiseModel::Mixture { c, inner, outer } => {
                if !self.is_continuous() {
                    return Err(Error::UnsupportedDensity("mixture"));
                }
                (1.0 - c) * inner.density(v)? + c * outer.density(v)?
            }
        })
    }

    /// One draw; consumes the fixed word count listed in the module docs.
    pub fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian { mean, variance } => mean + variance.sqrt() * standard_normal(rng),
            NoiseModel::Uniform { lo, hi } => lo + (hi - lo) * open01(rng),
            NoiseModel::Laplace { mean, variance } => {
                let b = (variance / 2.0).sqrt();
                let u = open01(rng) - 0.5;
                mean - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            NoiseModel::BinarySymmetric { magnitude } => {
                if open01(rng) < 0.5 {
                    -magnitude
                } else {
                    *magnitude
                }
            }
            NoiseModel::Mixture { c, inner, outer } => {
                let gate = open01(rng) < *c;
                let a = inner.draw(rng);
                let b = outer.draw(rng);
                if gate {
                    b
                } else {
                    a
                }
            }
        }
    }

    /// Fills `out` with i.i.d. draws from `rng`.
    pub fn fill<R: RngCore>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out {
            *v = self.draw(rng);
        }
    }

    /// `n` i.i.d. draws from lane 0 of `stream`.
    pub fn sample(&self, n: usize, stream: SeededStream) -> Vec<f64> {
        let mut rng = stream.rng();
        let mut out = vec![0.0; n];
        self.fill(&mut rng, &mut out);
        out
    }
}

/// Standard normal via Box–Muller, using the cosine branch only so that each
/// variate costs exactly two words.
#[inline]
fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    let u1 = open01(rng);
    let u2 = open01(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
