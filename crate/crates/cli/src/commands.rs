//! The five subcommands. Each one decodes its config, validates it up front
//! (exit 2 on failure), runs, and renders a CSV or JSON body.

use serde::Deserialize;
use serde_json::json;

use gmcc_core::harness::{
    convergence_comparison, emse_experiment, pod_experiment, Execution, RunConfig, SystemIdSetup,
};
use gmcc_core::{steady_state_emse, AlgorithmSpec, GgdKernel, NoiseModel, TheoryInputs, Validity};

use crate::error::CliError;
use crate::output::{float, Csv, Provenance};

/// Rendered output plus anything worth telling the user on stderr.
pub struct Rendered {
    pub body: String,
    pub warnings: Vec<String>,
}

fn invalid(err: gmcc_core::Error) -> CliError {
    CliError::Config(err.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ErrorPoints {
    List(Vec<f64>),
    Grid { from: f64, to: f64, points: usize },
}

impl ErrorPoints {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            ErrorPoints::List(v) => Ok(v.clone()),
            ErrorPoints::Grid { from, to, points } => {
                if *points < 2 || !(from < to) || !from.is_finite() || !to.is_finite() {
                    return Err(CliError::Config(
                        "field `errors`: grid needs finite from < to and points >= 2".into(),
                    ));
                }
                let step = (to - from) / (*points - 1) as f64;
                Ok((0..*points).map(|i| from + step * i as f64).collect())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEvalConfig {
    #[allow(dead_code)] // checked before decoding
    schema: u64,
    kernel: GgdKernel,
    errors: ErrorPoints,
}

pub fn kernel_eval(cfg: &KernelEvalConfig, prov: &Provenance<'_>) -> Result<Rendered, CliError> {
    let errors = cfg.errors.values()?;
    if let Some(i) = errors.iter().position(|e| !e.is_finite()) {
        return Err(CliError::Config(format!("field `errors[{i}]`: must be finite")));
    }
    let k = &cfg.kernel;
    let mut csv = Csv::new(prov, &["e", "density", "nonlinearity"]);
    for &e in &errors {
        csv.row(&[
            float(e),
            float(k.density(e)),
            float(gmcc_core::filters::gmcc_nonlinearity(e, k)),
        ]);
    }
    Ok(Rendered {
        body: csv.into_string(),
        warnings: Vec::new(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[allow(dead_code)] // checked before decoding
    schema: u64,
    kernel: GgdKernel,
    etas: Vec<f64>,
    trace_rxx: f64,
    noise: NoiseModel,
}

pub fn theory(cfg: &TheoryConfig, prov: &Provenance<'_>) -> Result<Rendered, CliError> {
    if cfg.etas.is_empty() {
        return Err(CliError::Config("field `etas`: need at least one step size".into()));
    }
    let mut results = Vec::with_capacity(cfg.etas.len());
    let mut warnings = Vec::new();
    for &eta in &cfg.etas {
        let inputs = TheoryInputs {
            kernel: cfg.kernel,
            eta,
            trace_rxx: cfg.trace_rxx,
            noise: cfg.noise.clone(),
        };
        let r = steady_state_emse(&inputs).map_err(|e| match e {
            gmcc_core::Error::InvalidParameter { .. } => invalid(e),
            other => CliError::Runtime(other),
        })?;
        if r.validity != Validity::Valid {
            warnings.push(format!("eta={}: full prediction invalid ({})", float(eta), validity_name(r.validity)));
        }
        // non-finite numbers have no JSON form; they appear as null
        results.push(json!({
            "eta": eta,
            "full": r.full,
            "simplified": r.simplified,
            "validity": r.validity,
            "simplified_valid": r.simplified_valid,
            "diagnostics": r.diagnostics,
        }));
    }
    let doc = json!({
        "config_hash": prov.config_hash,
        "base_seed": prov.base_seed,
        "results": results,
    });
    let mut body = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    body.push('\n');
    Ok(Rendered { body, warnings })
}

fn validity_name(v: Validity) -> &'static str {
    match v {
        Validity::Valid => "valid",
        Validity::NonPositiveDenominator => "non_positive_denominator",
        Validity::DivergentCorrection => "divergent_correction",
    }
}

/// An algorithm with the column label it is reported under.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Labeled {
    label: String,
    algorithm: AlgorithmSpec,
}

fn check_labels(algs: &[Labeled]) -> Result<(), CliError> {
    if algs.is_empty() {
        return Err(CliError::Config("field `algorithms`: need at least one entry".into()));
    }
    for (i, a) in algs.iter().enumerate() {
        let ok = !a.label.is_empty()
            && a.label.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
        if !ok {
            return Err(CliError::Config(format!(
                "field `algorithms[{i}].label`: `{}` must be non-empty [A-Za-z0-9_.-]",
                a.label
            )));
        }
        if algs[..i].iter().any(|b| b.label == a.label) {
            return Err(CliError::Config(format!("field `algorithms[{i}].label`: duplicate `{}`", a.label)));
        }
    }
    Ok(())
}

fn run_config(iterations: usize, num_runs: usize, base_seed: u64, algorithm: AlgorithmSpec, setup: &SystemIdSetup) -> Result<RunConfig, CliError> {
    let c = RunConfig {
        iterations,
        num_runs,
        base_seed,
        algorithm,
        setup: setup.clone(),
    };
    c.validate().map_err(invalid)?;
    Ok(c)
}

fn check_etas(etas: &[f64]) -> Result<(), CliError> {
    if etas.is_empty() {
        return Err(CliError::Config("field `etas`: need at least one step size".into()));
    }
    if let Some(i) = etas.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(CliError::Config(format!("field `etas[{i}]`: must be finite and >= 0")));
    }
    Ok(())
}

fn default_threshold() -> f64 {
    100.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodConfig {
    #[allow(dead_code)] // checked before decoding
    schema: u64,
    iterations: usize,
    num_runs: usize,
    base_seed: u64,
    setup: SystemIdSetup,
    /// Each algorithm's own `eta` is replaced by every value of `etas`.
    algorithms: Vec<Labeled>,
    etas: Vec<f64>,
    #[serde(default = "default_threshold")]
    threshold: f64,
}

pub fn pod(cfg: &PodConfig, prov: &Provenance<'_>, exec: Execution) -> Result<Rendered, CliError> {
    check_labels(&cfg.algorithms)?;
    check_etas(&cfg.etas)?;
    if !(cfg.threshold.is_finite() && cfg.threshold > 0.0) {
        return Err(CliError::Config("field `threshold`: must be finite and > 0".into()));
    }
    let configs = cfg
        .algorithms
        .iter()
        .map(|a| run_config(cfg.iterations, cfg.num_runs, cfg.base_seed, a.algorithm, &cfg.setup))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(prov, &["label", "eta", "diverged", "total", "pod"]);
    for (a, c) in cfg.algorithms.iter().zip(&configs) {
        let report = pod_experiment(c, &cfg.etas, cfg.threshold, exec)?;
        for row in report.rows {
            csv.row(&[
                a.label.clone(),
                float(row.eta),
                row.diverged_count.to_string(),
                row.total_runs.to_string(),
                float(row.pod),
            ]);
        }
    }
    Ok(Rendered {
        body: csv.into_string(),
        warnings: Vec::new(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmseConfig {
    #[allow(dead_code)] // checked before decoding
    schema: u64,
    iterations: usize,
    num_runs: usize,
    base_seed: u64,
    setup: SystemIdSetup,
    /// `eta` is replaced by every value of `etas`.
    algorithm: AlgorithmSpec,
    etas: Vec<f64>,
    steady_window: usize,
}

pub fn emse(cfg: &EmseConfig, prov: &Provenance<'_>, exec: Execution) -> Result<Rendered, CliError> {
    check_etas(&cfg.etas)?;
    if cfg.steady_window == 0 || cfg.steady_window >= cfg.iterations {
        return Err(CliError::Config("field `steady_window`: must satisfy 1 <= steady_window < iterations".into()));
    }
    let configs = cfg
        .etas
        .iter()
        .map(|&eta| {
            let alg = cfg.algorithm.with_eta(eta).map_err(invalid)?;
            run_config(cfg.iterations, cfg.num_runs, cfg.base_seed, alg, &cfg.setup)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(
        prov,
        &["eta", "simulated", "theory_full", "theory_simplified", "validity", "halted"],
    );
    let mut warnings = Vec::new();
    for (&eta, c) in cfg.etas.iter().zip(&configs) {
        let r = emse_experiment(c, cfg.steady_window, exec)?;
        let validity = r.validity.map_or("unsupported", validity_name);
        if r.validity.is_some_and(|v| v != Validity::Valid) {
            warnings.push(format!("eta={}: full prediction invalid ({validity})", float(eta)));
        }
        csv.row(&[
            float(eta),
            float(r.simulated_emse),
            float(r.theoretical_full),
            float(r.theoretical_simplified),
            validity.to_string(),
            r.halted_runs.to_string(),
        ]);
    }
    Ok(Rendered {
        body: csv.into_string(),
        warnings,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[allow(dead_code)] // checked before decoding
    schema: u64,
    iterations: usize,
    num_runs: usize,
    base_seed: u64,
    setup: SystemIdSetup,
    algorithms: Vec<Labeled>,
}

pub fn converge(cfg: &ConvergeConfig, prov: &Provenance<'_>, exec: Execution) -> Result<Rendered, CliError> {
    check_labels(&cfg.algorithms)?;
    let c = run_config(cfg.iterations, cfg.num_runs, cfg.base_seed, cfg.algorithms[0].algorithm, &cfg.setup)?;
    let algs: Vec<(String, AlgorithmSpec)> = cfg.algorithms.iter().map(|a| (a.label.clone(), a.algorithm)).collect();
    let curves = convergence_comparison(&algs, &c, exec)?;
    let mut header = vec!["iteration"];
    header.extend(curves.iter().map(|(label, _)| label.as_str()));
    let mut csv = Csv::new(prov, &header);
    for i in 0..cfg.iterations {
        let mut row = vec![(i + 1).to_string()];
        row.extend(curves.iter().map(|(_, curve)| float(curve.wep[i])));
        csv.row(&row);
    }
    let mut warnings = Vec::new();
    for (label, curve) in &curves {
        if curve.halted_runs > 0 {
            warnings.push(format!("{label}: {} of {} runs blew up", curve.halted_runs, cfg.num_runs));
        }
    }
    Ok(Rendered {
        body: csv.into_string(),
        warnings,
    })
}
