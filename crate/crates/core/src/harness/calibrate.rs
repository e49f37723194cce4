//! Step-size matching and kernel-width selection for convergence comparisons.
//!
//! Step sizes are matched on initial convergence speed: each algorithm's `eta`
//! is tuned so that the run-averaged weight-error power at a fixed early
//! iteration hits a common target. The matching uses the nominal noise only
//! (the inner component of a mixture), so that rare outliers do not make the
//! target unreachable for the non-robust algorithms.

use serde::{Deserialize, Serialize};

use super::exec::{map_runs, CompensatedSum, Execution};
use super::{simulate, Signals, SystemIdSetup};
use crate::error::{invalid, Error, Result};
use crate::filters::AlgorithmSpec;
use crate::kernel::GgdKernel;
use crate::noise::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    /// Weight-error power to reach at `at_iteration`.
    pub target_wep: f64,
    /// 1-based iteration at which the target is measured.
    pub at_iteration: usize,
    /// Accepted relative deviation from the target.
    pub tolerance: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    /// Grid points per decade of the initial scan.
    pub points_per_decade: usize,
    pub max_bisections: usize,
    pub num_runs: usize,
    pub base_seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            target_wep: 0.3,
            at_iteration: 200,
            tolerance: 0.1,
            eta_min: 1e-4,
            eta_max: 1.0,
            points_per_decade: 10,
            max_bisections: 60,
            num_runs: 100,
            base_seed: 0x5eed_ca1b,
        }
    }
}

impl CalibrationOptions {
    fn validate(&self) -> Result<()> {
        if !(self.target_wep > 0.0) {
            return Err(invalid("target_wep", "must be > 0"));
        }
        if self.at_iteration == 0 || self.num_runs == 0 {
            return Err(invalid("at_iteration/num_runs", "must be >= 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(invalid("tolerance", "must lie in (0, 1)"));
        }
        if !(self.eta_min > 0.0 && self.eta_min < self.eta_max) || self.points_per_decade == 0 {
            return Err(invalid("eta_min/eta_max", "need 0 < eta_min < eta_max and a non-empty grid"));
        }
        Ok(())
    }
}

/// A matched step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCalibration {
    pub eta: f64,
    /// Mean weight-error power at the target iteration with `eta`.
    pub achieved_wep: f64,
    /// Step sizes tried.
    pub evaluations: usize,
}

fn nominal(noise: &NoiseModel) -> NoiseModel {
    match noise {
        NoiseModel::Mixture { inner, .. } => (**inner).clone(),
        other => other.clone(),
    }
}

/// Mean weight-error power after `opts.at_iteration` iterations; `+inf` when
/// any run blows up.
fn early_wep(spec: &AlgorithmSpec, setup: &SystemIdSetup, signals: &[Signals], exec: Execution) -> f64 {
    let finals = map_runs(signals.len(), exec, |r| {
        let out = simulate(setup, spec, &signals[r], |_, _| {});
        if out.halted_at.is_some() {
            f64::INFINITY
        } else {
            out.final_wep
        }
    });
    let mut s = CompensatedSum::default();
    for w in finals {
        s.add(w);
    }
    s.value() / signals.len() as f64
}

/// Finds `eta` such that the mean weight-error power at iteration
/// `opts.at_iteration` is within `opts.tolerance` of `opts.target_wep`.
///
/// Scans a log grid upwards from `eta_min` for the first step size at or below
/// the target, then bisects between it and its predecessor. Scanning from
/// below keeps the bracket inside the stable range; beyond it a larger step
/// makes convergence slower again.
pub fn calibrate_step_size(
    spec: &AlgorithmSpec,
    setup: &SystemIdSetup,
    opts: &CalibrationOptions,
    exec: Execution,
) -> Result<StepCalibration> {
    opts.validate()?;
    setup.validate()?;
    let nominal_setup = SystemIdSetup {
        noise: nominal(&setup.noise),
        ..setup.clone()
    };
    let signals: Vec<Signals> = (0..opts.num_runs)
        .map(|r| Signals::generate(&nominal_setup, opts.at_iteration, opts.base_seed, r))
        .collect();
    let target = opts.target_wep;
    let mut evaluations = 0;
    let mut measure = |eta: f64| -> Result<f64> {
        evaluations += 1;
        Ok(early_wep(&spec.with_eta(eta)?, &nominal_setup, &signals, exec))
    };
    let within = |w: f64| (w - target).abs() <= opts.tolerance * target;

    let decades = (opts.eta_max / opts.eta_min).log10();
    let steps = (decades * opts.points_per_decade as f64).ceil() as usize;
    let mut below = (0.0, setup.initial_wep());
    let mut bracket = None;
    for j in 0..=steps {
        let eta = (opts.eta_min * 10f64.powf(j as f64 / opts.points_per_decade as f64)).min(opts.eta_max);
        let w = measure(eta)?;
        if w <= target {
            bracket = Some((below, (eta, w)));
            break;
        }
        below = (eta, w);
    }
    let Some(((mut lo, mut w_lo), (mut hi, mut w_hi))) = bracket else {
        return Err(Error::Calibration(format!(
            "target weight-error power {target} not reached for eta in [{}, {}]",
            opts.eta_min, opts.eta_max
        )));
    };
    // aim at 1/10 of the tolerance so the frozen value is robust to reseeding
    let tight = |w: f64| (w - target).abs() <= 0.1 * opts.tolerance * target;
    for _ in 0..opts.max_bisections {
        if tight(w_hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let w = measure(mid)?;
        if w <= target {
            (hi, w_hi) = (mid, w);
        } else {
            (lo, w_lo) = (mid, w);
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    let (eta, achieved_wep) = if (w_lo - target).abs() < (w_hi - target).abs() && lo > 0.0 {
        (lo, w_lo)
    } else {
        (hi, w_hi)
    };
    if !within(achieved_wep) {
        return Err(Error::Calibration(format!(
            "closest step size {eta} gives {achieved_wep}, outside {}% of {target}",
            100.0 * opts.tolerance
        )));
    }
    Ok(StepCalibration {
        eta,
        achieved_wep,
        evaluations,
    })
}

/// Score of one candidate kernel width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    /// Matched step size; `None` when the target was unreachable.
    pub eta: Option<f64>,
    /// Mean final weight-error power on the evaluation runs (`+inf` when
    /// uncalibrated or when any run blew up).
    pub final_wep: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub eta: f64,
    pub scores: Vec<LambdaScore>,
}

/// Picks the kernel width from `grid` with the lowest mean final
/// weight-error power.
///
/// Each candidate is first step-size matched with `calibration`, then run for
/// `iterations` steps under the full noise of `setup` on `num_runs` runs of
/// the held-out `eval_seed`. Ties go to the earlier grid entry.
#[allow(clippy::too_many_arguments)]
pub fn select_lambda(
    alpha: f64,
    grid: &[f64],
    setup: &SystemIdSetup,
    calibration: &CalibrationOptions,
    iterations: usize,
    num_runs: usize,
    eval_seed: u64,
    exec: Execution,
) -> Result<LambdaSelection> {
    if grid.is_empty() || iterations == 0 || num_runs == 0 {
        return Err(invalid("grid/iterations/num_runs", "must be non-empty"));
    }
    let signals: Vec<Signals> = (0..num_runs)
        .map(|r| Signals::generate(setup, iterations, eval_seed, r))
        .collect();
    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let spec = AlgorithmSpec::gmcc(GgdKernel::from_lambda(alpha, lambda)?, 0.0)?;
        let score = match calibrate_step_size(&spec, setup, calibration, exec) {
            Ok(cal) => LambdaScore {
                lambda,
                eta: Some(cal.eta),
                final_wep: early_wep(&spec.with_eta(cal.eta)?, setup, &signals, exec),
            },
            Err(Error::Calibration(_)) => LambdaScore {
                lambda,
                eta: None,
                final_wep: f64::INFINITY,
            },
            Err(e) => return Err(e),
        };
        scores.push(score);
    }
    let best = scores
        .iter()
        .filter(|s| s.eta.is_some())
        .fold(None::<&LambdaScore>, |best, s| match best {
            Some(b) if b.final_wep <= s.final_wep => Some(b),
            _ => Some(s),
        })
        .ok_or_else(|| Error::Calibration("no kernel width in the grid could be step-size matched".into()))?;
    Ok(LambdaSelection {
        lambda: best.lambda,
        eta: best.eta.expect("filtered"),
        scores,
    })
}
