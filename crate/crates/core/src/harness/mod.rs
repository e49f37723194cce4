//! Seeded Monte Carlo system-identification experiments.
//!
//! An unknown FIR system `W0` is driven by white Gaussian input through a
//! tapped delay line (zero pre-history); the desired signal is
//! `d(i) = W0^T X(i) + v(i)`. The adaptive filter starts from the null
//! vector. Run `r` draws its input from lane 0 and its noise from lane 1 of
//! `SeededStream::new(base_seed, r)`, so every run is reproducible on its own
//! and all algorithms in a comparison see identical signals.

mod calibrate;
mod exec;
mod experiments;

pub use calibrate::{
    calibrate_step_size, select_lambda, CalibrationOptions, LambdaScore, LambdaSelection, StepCalibration,
};
pub use exec::{for_each_run_ordered, map_runs, CompensatedSum, Execution};
pub use experiments::{
    convergence_comparison, emse_experiment, pod_experiment, theory_inputs_for, EmseReport, LearningCurve,
    PodReport, PodRow,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filters::{dot, AlgorithmSpec, FirFilterState};
use crate::noise::{NoiseModel, SeededStream};

/// Unknown system of the divergence and convergence experiments.
pub const DEFAULT_W0: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.4, 0.3, 0.2, 0.1];

/// Unknown system, input power and additive noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemIdSetup {
    #[serde(default = "default_w0")]
    pub w0: Vec<f64>,
    #[serde(default = "unit")]
    pub input_variance: f64,
    pub noise: NoiseModel,
}

fn default_w0() -> Vec<f64> {
    DEFAULT_W0.to_vec()
}

fn unit() -> f64 {
    1.0
}

impl SystemIdSetup {
    pub fn new(w0: Vec<f64>, input_variance: f64, noise: NoiseModel) -> Result<Self> {
        let s = Self {
            w0,
            input_variance,
            noise,
        };
        s.validate()?;
        Ok(s)
    }

    /// Default 9-tap system with the given noise and unit input power.
    pub fn with_noise(noise: NoiseModel) -> Self {
        Self {
            w0: default_w0(),
            input_variance: 1.0,
            noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w0.is_empty() {
            return Err(invalid("w0", "need at least one tap"));
        }
        if let Some(index) = self.w0.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if !(self.input_variance.is_finite() && self.input_variance > 0.0) {
            return Err(invalid("input_variance", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Filter length `m`.
    pub fn taps(&self) -> usize {
        self.w0.len()
    }

    /// `Tr(Rxx) = m sigma_x^2` for white input.
    pub fn trace_rxx(&self) -> f64 {
        self.taps() as f64 * self.input_variance
    }

    /// `||W0||^2`, the weight-error power of the null initial filter.
    pub fn initial_wep(&self) -> f64 {
        self.w0.iter().map(|w| w * w).sum()
    }
}

/// A complete experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub iterations: usize,
    pub num_runs: usize,
    pub base_seed: u64,
    pub algorithm: AlgorithmSpec,
    pub setup: SystemIdSetup,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be >= 1"));
        }
        if self.num_runs == 0 {
            return Err(invalid("num_runs", "must be >= 1"));
        }
        self.setup.validate()
    }
}

/// Input and noise realizations of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Signals {
    pub input: Vec<f64>,
    pub noise: Vec<f64>,
}

impl Signals {
    pub fn generate(setup: &SystemIdSetup, iterations: usize, base_seed: u64, run_index: usize) -> Self {
        let stream = SeededStream::new(base_seed, run_index as u64);
        let input_model = NoiseModel::Gaussian {
            mean: 0.0,
            variance: setup.input_variance,
        };
        let mut input = vec![0.0; iterations];
        input_model.fill(&mut stream.lane(0), &mut input);
        let mut noise = vec![0.0; iterations];
        setup.noise.fill(&mut stream.lane(1), &mut noise);
        Self { input, noise }
    }
}

/// Per-iteration record, taken after the update of iteration `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// `||W0 - W(i)||^2`.
    pub wep: f64,
    /// A priori error `(W0 - W(i-1))^T X(i)`.
    pub ea: f64,
    /// `e(i) = d(i) - W(i-1)^T X(i)`.
    pub e: f64,
    /// `||X(i)||^2`.
    pub xnorm2: f64,
}

/// How a simulated run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub final_state: FirFilterState,
    pub final_wep: f64,
    /// Iteration at which a non-finite weight appeared; the run stopped there
    /// and `final_state` is the last finite iterate.
    pub halted_at: Option<usize>,
}

impl RunOutcome {
    pub fn diverged(&self, threshold: f64) -> bool {
        self.halted_at.is_some() || !(self.final_wep <= threshold)
    }
}

/// Runs `spec` over `signals`, calling `observe(i, record)` after each step.
pub fn simulate<O: FnMut(usize, &StepRecord)>(
    setup: &SystemIdSetup,
    spec: &AlgorithmSpec,
    signals: &Signals,
    mut observe: O,
) -> RunOutcome {
    let m = setup.taps();
    let w0 = &setup.w0;
    let mut w = vec![0.0; m];
    let mut x = vec![0.0; m];
    let mut candidate = vec![0.0; m];
    let mut wep = setup.initial_wep();
    for (i, (&xi, &vi)) in signals.input.iter().zip(&signals.noise).enumerate() {
        x.rotate_right(1);
        x[0] = xi;
        let d = dot(w0, &x) + vi;
        let e = d - dot(&w, &x);
        let ea: f64 = w0.iter().zip(&w).zip(&x).map(|((a, b), xk)| (a - b) * xk).sum();
        let gain = spec.eta * spec.rule.nonlinearity(e);
        let mut finite = gain.is_finite();
        if finite && gain != 0.0 {
            for ((c, wk), xk) in candidate.iter_mut().zip(&w).zip(&x) {
                *c = wk + gain * xk;
                finite &= c.is_finite();
            }
            if finite {
                std::mem::swap(&mut w, &mut candidate);
            }
        }
        if !finite {
            return RunOutcome {
                final_state: FirFilterState::from_weights(w).expect("last iterate is finite"),
                final_wep: wep,
                halted_at: Some(i),
            };
        }
        wep = w0.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
        let xnorm2 = dot(&x, &x);
        observe(i, &StepRecord { wep, ea, e, xnorm2 });
    }
    RunOutcome {
        final_state: FirFilterState::from_weights(w).expect("weights are finite"),
        final_wep: wep,
        halted_at: None,
    }
}

/// Full per-iteration trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub wep: Vec<f64>,
    pub ea: Vec<f64>,
    pub e: Vec<f64>,
    pub xnorm2: Vec<f64>,
    pub outcome: RunOutcome,
}

/// One run of `config`, fully determined by `(config.base_seed, run_index)`.
/// A halted run's trace ends at the halting iteration.
pub fn run_single(config: &RunConfig, run_index: usize) -> Result<RunTrace> {
    config.validate()?;
    let signals = Signals::generate(&config.setup, config.iterations, config.base_seed, run_index);
    let n = config.iterations;
    let mut trace = RunTrace {
        wep: Vec::with_capacity(n),
        ea: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        xnorm2: Vec::with_capacity(n),
        outcome: RunOutcome {
            final_state: FirFilterState::zeros(config.setup.taps()),
            final_wep: 0.0,
            halted_at: None,
        },
    };
    trace.outcome = simulate(&config.setup, &config.algorithm, &signals, |_, r| {
        trace.wep.push(r.wep);
        trace.ea.push(r.ea);
        trace.e.push(r.e);
        trace.xnorm2.push(r.xnorm2);
    });
    Ok(trace)
}
