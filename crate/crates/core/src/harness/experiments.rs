use serde::{Deserialize, Serialize};

use super::exec::{for_each_run_ordered, CompensatedSum, Execution};
use super::{simulate, RunConfig, Signals};
use crate::error::{invalid, Result};
use crate::filters::{AlgorithmSpec, UpdateRule};
use crate::kernel::GgdKernel;
use crate::theory::{steady_state_emse, EmseDiagnostics, TheoryInputs, Validity};

/// Kernel width standing in for "no kernel" when an LMP rule is fed to the
/// EMSE predictor: `exp(-1e-12 |e|^p)` is 1 to within rounding for any error
/// a stable filter produces.
const LMP_THEORY_LAMBDA: f64 = 1e-12;

/// Divergence counts at one step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PodRow {
    pub eta: f64,
    pub diverged_count: usize,
    pub total_runs: usize,
    pub pod: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodReport {
    pub threshold: f64,
    pub rows: Vec<PodRow>,
}

/// Probability of divergence of `config.algorithm` at each step size in
/// `etas`. A run diverges when its final weight-error power exceeds
/// `threshold` or a weight becomes non-finite. Each run's signals are shared
/// by all step sizes.
pub fn pod_experiment(config: &RunConfig, etas: &[f64], threshold: f64, exec: Execution) -> Result<PodReport> {
    config.validate()?;
    if !(threshold > 0.0) {
        return Err(invalid("divergence_threshold", "must be > 0"));
    }
    let specs = etas
        .iter()
        .map(|&eta| config.algorithm.with_eta(eta))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0usize; specs.len()];
    for_each_run_ordered(
        config.num_runs,
        exec,
        |run| {
            let signals = Signals::generate(&config.setup, config.iterations, config.base_seed, run);
            specs
                .iter()
                .map(|spec| simulate(&config.setup, spec, &signals, |_, _| {}).diverged(threshold))
                .collect::<Vec<_>>()
        },
        |_, diverged| {
            for (c, d) in counts.iter_mut().zip(diverged) {
                *c += d as usize;
            }
        },
    );
    let rows = etas
        .iter()
        .zip(counts)
        .map(|(&eta, diverged_count)| PodRow {
            eta,
            diverged_count,
            total_runs: config.num_runs,
            pod: diverged_count as f64 / config.num_runs as f64,
        })
        .collect();
    Ok(PodReport { threshold, rows })
}

/// Inputs of the EMSE predictor matching a run configuration.
///
/// An LMP rule of power `p` is mapped to the kernel `alpha = p` with a
/// vanishing `lambda`, whose nonlinearity coincides with `|e|^(p-1) sign(e)`.
pub fn theory_inputs_for(config: &RunConfig) -> Result<TheoryInputs> {
    let kernel = match &config.algorithm.rule {
        UpdateRule::Gmcc(k) => *k,
        UpdateRule::Lmp { p } => GgdKernel::from_lambda(*p, LMP_THEORY_LAMBDA)?,
    };
    Ok(TheoryInputs {
        kernel,
        eta: config.algorithm.eta,
        trace_rxx: config.setup.trace_rxx(),
        noise: config.setup.noise.clone(),
    })
}

/// Simulated steady-state EMSE next to its prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmseReport {
    /// Mean over runs of the mean of `e_a^2` over the last `steady_window`
    /// iterations; `+inf` if any run blew up.
    pub simulated_emse: f64,
    /// Full prediction. Set to `+inf` when the prediction's denominator is
    /// non-positive (the step size is past the predictor's pole, whose
    /// left limit is `+inf`) or its correction term diverges; `NaN` when the
    /// predictor does not apply to the algorithm.
    pub theoretical_full: f64,
    /// Small-step prediction; `NaN` when it does not apply.
    pub theoretical_simplified: f64,
    pub validity: Option<Validity>,
    pub diagnostics: Option<EmseDiagnostics>,
    pub halted_runs: usize,
}

impl EmseReport {
    /// `|simulated - full| / full`; 1 when the prediction is `+inf` and the
    /// simulation finite.
    pub fn relative_gap(&self) -> f64 {
        if self.theoretical_full == f64::INFINITY && self.simulated_emse.is_finite() {
            1.0
        } else {
            (self.simulated_emse - self.theoretical_full).abs() / self.theoretical_full
        }
    }
}

/// Steady-state EMSE by simulation and by the predictor with
/// `Tr(Rxx) = m sigma_x^2`. Predictor failures other than parameter errors
/// (e.g. `alpha <= 1`) leave the theoretical fields `NaN`.
pub fn emse_experiment(config: &RunConfig, steady_window: usize, exec: Execution) -> Result<EmseReport> {
    config.validate()?;
    if steady_window == 0 || steady_window >= config.iterations {
        return Err(invalid("steady_window", "must satisfy 1 <= steady_window < iterations"));
    }
    let start = config.iterations - steady_window;
    let mut total = CompensatedSum::default();
    let mut halted_runs = 0;
    for_each_run_ordered(
        config.num_runs,
        exec,
        |run| {
            let signals = Signals::generate(&config.setup, config.iterations, config.base_seed, run);
            let mut window = CompensatedSum::default();
            let outcome = simulate(&config.setup, &config.algorithm, &signals, |i, r| {
                if i >= start {
                    window.add(r.ea * r.ea);
                }
            });
            match outcome.halted_at {
                Some(_) => None,
                None => Some(window.value() / steady_window as f64),
            }
        },
        |_, mean| match mean {
            Some(m) => total.add(m),
            None => halted_runs += 1,
        },
    );
    let simulated_emse = if halted_runs > 0 {
        f64::INFINITY
    } else {
        total.value() / config.num_runs as f64
    };

    let inputs = theory_inputs_for(config)?;
    let (theoretical_full, theoretical_simplified, validity, diagnostics) = match steady_state_emse(&inputs) {
        Ok(r) => {
            let full = if r.full_valid() { r.full } else { f64::INFINITY };
            let simplified = if r.simplified_valid { r.simplified } else { f64::NAN };
            (full, simplified, Some(r.validity), Some(r.diagnostics))
        }
        Err(e @ crate::Error::InvalidParameter { .. }) => return Err(e),
        Err(_) => (f64::NAN, f64::NAN, None, None),
    };
    Ok(EmseReport {
        simulated_emse,
        theoretical_full,
        theoretical_simplified,
        validity,
        diagnostics,
        halted_runs,
    })
}

/// Run-averaged weight-error power per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    /// `wep[i]` = mean over runs of `||W0 - W(i)||^2` after iteration `i`.
    /// A run that blew up contributes its last finite value from then on.
    pub wep: Vec<f64>,
    /// Final weight-error power of each run, in run order; `+inf` for runs
    /// that blew up.
    pub final_wep: Vec<f64>,
    /// Runs stopped by a non-finite weight.
    pub halted_runs: usize,
}

impl LearningCurve {
    /// Runs whose final weight-error power exceeds `threshold` or that blew up.
    pub fn diverged_count(&self, threshold: f64) -> usize {
        self.final_wep.iter().filter(|&&w| !(w <= threshold)).count()
    }

    pub fn pod(&self, threshold: f64) -> f64 {
        self.diverged_count(threshold) as f64 / self.final_wep.len() as f64
    }

    /// Mean final weight-error power.
    pub fn final_mean(&self) -> f64 {
        self.wep.last().copied().unwrap_or(f64::NAN)
    }
}

/// Averaged learning curves of several algorithms driven by identical input
/// and noise realizations within each run. `config.algorithm` is ignored.
pub fn convergence_comparison(
    algorithms: &[(String, AlgorithmSpec)],
    config: &RunConfig,
    exec: Execution,
) -> Result<Vec<(String, LearningCurve)>> {
    config.validate()?;
    let n = config.iterations;
    let mut sums: Vec<Vec<CompensatedSum>> = vec![vec![CompensatedSum::default(); n]; algorithms.len()];
    let mut finals: Vec<Vec<f64>> = vec![Vec::with_capacity(config.num_runs); algorithms.len()];
    let mut halted = vec![0usize; algorithms.len()];
    for_each_run_ordered(
        config.num_runs,
        exec,
        |run| {
            let signals = Signals::generate(&config.setup, n, config.base_seed, run);
            algorithms
                .iter()
                .map(|(_, spec)| {
                    let mut curve = Vec::with_capacity(n);
                    let outcome = simulate(&config.setup, spec, &signals, |_, r| curve.push(r.wep));
                    let last = curve.last().copied().unwrap_or_else(|| config.setup.initial_wep());
                    curve.resize(n, last);
                    (curve, outcome.halted_at.is_some())
                })
                .collect::<Vec<_>>()
        },
        |_, per_algorithm| {
            for (a, (curve, was_halted)) in per_algorithm.into_iter().enumerate() {
                for (s, w) in sums[a].iter_mut().zip(&curve) {
                    s.add(*w);
                }
                finals[a].push(if was_halted { f64::INFINITY } else { curve[n - 1] });
                halted[a] += was_halted as usize;
            }
        },
    );
    let runs = config.num_runs as f64;
    Ok(algorithms
        .iter()
        .zip(sums.into_iter().zip(finals).zip(halted))
        .map(|((label, _), ((s, final_wep), halted_runs))| {
            let wep = s.iter().map(|c| c.value() / runs).collect();
            (
                label.clone(),
                LearningCurve {
                    wep,
                    final_wep,
                    halted_runs,
                },
            )
        })
        .collect())
}
