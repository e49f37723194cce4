//! Recomputes the frozen step sizes and kernel width used by the impulsive-noise
//! convergence configs and the LMF divergence witness.
//!
//! cargo run --release -p gmcc-core --example calibrate

use gmcc_core::harness::{
    calibrate_step_size, pod_experiment, select_lambda, CalibrationOptions, Execution, RunConfig, SystemIdSetup,
};
use gmcc_core::{AlgorithmSpec, GgdKernel, NoiseModel};

fn main() -> gmcc_core::Result<()> {
    let exec = Execution::Parallel;
    let opts = CalibrationOptions::default();
    let inner = NoiseModel::uniform_with_variance(1.0)?;
    for outer_var in [15.0, 100.0] {
        let noise = NoiseModel::mixture(0.06, inner.clone(), NoiseModel::gaussian(0.0, outer_var)?)?;
        let setup = SystemIdSetup::with_noise(noise);
        let sel = select_lambda(4.0, &[0.01, 0.03, 0.1, 0.3, 1.0], &setup, &opts, 5000, 100, 0xbead, exec)?;
        println!("outer variance {outer_var}: lambda selection {sel:?}");
        for (name, p) in [("sa", 1.0), ("lms", 2.0), ("lmf", 4.0)] {
            let cal = calibrate_step_size(&AlgorithmSpec::lmp(p, 0.0)?, &setup, &opts, exec)?;
            println!("  {name}: {cal:?}");
        }
        for lambda in [0.01, 0.03, 0.1, 0.3] {
            let spec = AlgorithmSpec::gmcc(GgdKernel::from_lambda(4.0, lambda)?, 0.0)?;
            match calibrate_step_size(&spec, &setup, &opts, exec) {
                Ok(cal) => println!("  gmcc lambda {lambda}: {cal:?}"),
                Err(e) => println!("  gmcc lambda {lambda}: {e}"),
            }
        }
    }

    // LMF divergence witness on the Gaussian POD setup
    let etas: Vec<f64> = (0..10).map(|j| 1e-3 * 300f64.powf(j as f64 / 9.0)).collect();
    let cfg = RunConfig {
        iterations: 1000,
        num_runs: 200,
        base_seed: 0x0f16_2000,
        algorithm: AlgorithmSpec::lmp(4.0, 0.0)?,
        setup: SystemIdSetup::with_noise(NoiseModel::gaussian(0.0, 1.0)?),
    };
    for row in pod_experiment(&cfg, &etas, 100.0, exec)?.rows {
        println!("lmf eta {:?}: pod {}", row.eta, row.pod);
    }
    Ok(())
}
