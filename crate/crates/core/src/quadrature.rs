//! Adaptive Gauss–Kronrod (7/15-point) quadrature.
//!
//! Global adaptive bisection: the interval with the largest error estimate is
//! split until the summed error estimate drops below the absolute tolerance.
//! The error estimate of a panel is `|K15 - G7|`. Nodes never touch the panel
//! endpoints, so integrable endpoint singularities are safe to evaluate.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadratureOptions) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    let mut evaluations = 15;
    heap.push(first);
    loop {
        if !value.is_finite() {
            return Err(Error::Quadrature {
                estimate: value,
                error_estimate: error,
            });
        }
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            break;
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                estimate: value,
                error_estimate: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            return Err(Error::Quadrature {
                estimate: value,
                error_estimate: error,
            });
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed the drift of the incremental updates
    let (value, error_estimate) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(Integral {
        value,
        error_estimate,
        evaluations,
    })
}

/// Integrates `f` over `[0, b]` (`b > 0`) when `f` has an integrable power
/// singularity `~ x^(-s)`, `0 <= s < 1`, at the origin.
///
/// The interval is graded geometrically towards 0, `[b 2^-(j+1), b 2^-j]`,
/// until the neglected piece `[0, b 2^-J]` is below tolerance, estimated as
/// `|f(x_J)| x_J / (1 - s)` at `x_J = b 2^-J`.
pub fn integrate_graded_at_zero<F: Fn(f64) -> f64>(
    f: F,
    b: f64,
    singular_exponent: f64,
    opts: &QuadratureOptions,
) -> Result<Integral> {
    debug_assert!(b > 0.0);
    let s = singular_exponent.clamp(0.0, 1.0 - 1e-9);
    let mut total = Integral {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
    };
    // A panel budget per level keeps a stubborn level from starving the rest.
    let level_opts = QuadratureOptions {
        abs_tol: opts.abs_tol / 64.0,
        ..*opts
    };
    let mut hi = b;
    for _ in 0..1100 {
        let lo = 0.5 * hi;
        let piece = integrate(&f, lo, hi, &level_opts)?;
        total.value += piece.value;
        total.error_estimate += piece.error_estimate;
        total.evaluations += piece.evaluations;
        let tail = f(lo).abs() * lo / (1.0 - s);
        total.evaluations += 1;
        if tail < opts.abs_tol / 4.0 {
            total.error_estimate += tail;
            return Ok(total);
        }
        if lo < f64::MIN_POSITIVE * 1e4 {
            break;
        }
        hi = lo;
    }
    Err(Error::Quadrature {
        estimate: total.value,
        error_estimate: total.error_estimate,
    })
}
