//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain Rust function that returns
//! `Result<_, String>`, so the logic is testable natively; only the wrappers
//! touch `JsError`.

use oneshot_core::distributions::{pinch, ClassicalDistribution, DensityOperator};
use oneshot_core::divergences::LaserParams;
use oneshot_core::hyptest::{solve_classical, solve_quantum};
use oneshot_core::workflows::{self, LaserSetup, MeteorScenario};
use wasm_bindgen::prelude::*;

/// Largest `k` the page may request; keeps each call well under a frame.
pub const MAX_K: usize = 60;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `β(k)` for `k = 0..=kmax` against Poisson(`lambda`) background counts.
pub fn meteor_betas(lambda: f64, epsilon: f64, kmax: usize) -> Result<Vec<f64>, String> {
    if kmax > MAX_K {
        return Err(format!("kmax is limited to {MAX_K} in the demo"));
    }
    let s = MeteorScenario {
        lambda_values: vec![lambda],
        epsilon_values: vec![epsilon],
        k_values: (0..=kmax).collect(),
        ..MeteorScenario::default()
    };
    s.validate().map_err(err)?;
    let rows = workflows::meteor_experiment(&s).map_err(err)?;
    Ok(rows.into_iter().map(|r| r.beta).collect())
}

fn qubit_states() -> Result<(DensityOperator, DensityOperator), String> {
    let ket0 = DensityOperator::from_real(&[vec![1.0, 0.0], vec![0.0, 0.0]]).map_err(err)?;
    let plus = DensityOperator::from_real(&[vec![0.5, 0.5], vec![0.5, 0.5]]).map_err(err)?;
    Ok((ket0, plus))
}

/// `[quantum β, classical β]` for `|0⟩` against `|+⟩`: the optimal
/// measurement versus the best test after a computational-basis readout.
pub fn qubit_betas(epsilon: f64) -> Result<Vec<f64>, String> {
    let (r, s) = qubit_states()?;
    let q = solve_quantum(&r, &s, epsilon).map_err(err)?.beta;
    let (p, p_s): (ClassicalDistribution, ClassicalDistribution) =
        (pinch(&r).map_err(err)?, pinch(&s).map_err(err)?);
    let c = solve_classical(&p, &p_s, epsilon).map_err(err)?.beta;
    Ok(vec![q, c])
}

/// The laser KL table as CSV (`power,kl_bits,reference_bits`) over every
/// admissible power.
pub fn laser_table(
    g: usize,
    s: usize,
    c: usize,
    q: f64,
    delta: f64,
    n: usize,
) -> Result<String, String> {
    let setup = LaserSetup {
        g,
        s,
        c,
        q,
        delta,
        n,
    };
    let powers = LaserParams::admissible_powers(c, s, g);
    if powers.is_empty() {
        return Err("no admissible powers for these settings".into());
    }
    let rows = workflows::laser_experiment(&setup, &powers).map_err(err)?;
    Ok(workflows::laser_csv(&rows))
}

#[wasm_bindgen(js_name = meteorBetas)]
pub fn meteor_betas_js(lambda: f64, epsilon: f64, kmax: usize) -> Result<Vec<f64>, JsError> {
    meteor_betas(lambda, epsilon, kmax).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = qubitBetas)]
pub fn qubit_betas_js(epsilon: f64) -> Result<Vec<f64>, JsError> {
    qubit_betas(epsilon).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = laserTable)]
pub fn laser_table_js(
    g: usize,
    s: usize,
    c: usize,
    q: f64,
    delta: f64,
    n: usize,
) -> Result<String, JsError> {
    laser_table(g, s, c, q, delta, n).map_err(|e| JsError::new(&e))
}
