use super::{
    check_epsilon, dual_objective, DecisionFunction, DualVariables, Operator, TestCertificate,
};
use crate::distributions::DensityOperator;
use crate::error::{check_dim, validation, Result};
use crate::hermitian::{HermitianMatrix, Spectrum};

const MAX_BISECTIONS: usize = 200;
const MASS_TOL: f64 = 1e-12;
/// Eigenvalues of `ρ − tσ` closer than this (relative to the spectral scale)
/// are treated as one threshold eigenspace.
const CLUSTER_TOL: f64 = 1e-9;

/// Quantum Neyman–Pearson test.
///
/// Bisects the threshold `t` so that the projector onto the positive part of
/// `ρ − tσ` carries just under `1 − ε` of ρ's weight, then fills the
/// remaining mass with a fractional multiple of the threshold eigenspace.
/// Dual: `z = 1/t*`, `v = 1`, `Z = (zρ − σ)^+`.
pub fn solve_quantum(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    epsilon: f64,
) -> Result<TestCertificate> {
    check_epsilon(epsilon)?;
    check_dim(rho.dim(), sigma.dim())?;
    super::check_null_mass(rho.trace(), 1.0 - epsilon)?;
    if epsilon == 0.0 {
        return super::zero_epsilon_certificate(&[rho.clone().into()], &[sigma.clone().into()]);
    }
    let (r, s) = (rho.matrix(), sigma.matrix());
    let target = 1.0 - epsilon;

    let sig_spec = s.eigendecompose();
    let scale = sig_spec
        .eigenvalues
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(1.0);
    let kernel: Vec<usize> = (0..sig_spec.dim())
        .filter(|&k| sig_spec.eigenvalues[k] <= MASS_TOL * scale)
        .collect();
    if !kernel.is_empty() {
        let pk = sig_spec.projector(&kernel);
        let mass = pk.expectation(r)?;
        if mass >= target {
            return finish(rho, sigma, epsilon, pk.scale(target / mass), None);
        }
    }

    let accept_mass = |t: f64| -> Result<f64> {
        let spec = r.sub(&s.scale(t))?.eigendecompose();
        let pos: Vec<usize> = (0..spec.dim())
            .filter(|&k| spec.eigenvalues[k] > 0.0)
            .collect();
        spec.projector(&pos).expectation(r)
    };
    let min_pos = sig_spec
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > MASS_TOL * scale)
        .fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0, r.max_eigenvalue() / min_pos + 1.0);
    let mut doublings = 0;
    while accept_mass(hi)? >= target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(validation(
                "threshold search did not bracket the type-I budget",
            ));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if accept_mass(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let spec = r.sub(&s.scale(hi))?.eigendecompose();
    let a = greedy_fill(&spec, r, target, hi)?;
    finish(rho, sigma, epsilon, a, Some(hi))
}

/// Accepts eigenspaces of `ρ − tσ` in descending eigenvalue order; the one
/// that crosses the budget receives the fractional weight.
fn greedy_fill(
    spec: &Spectrum,
    rho: &HermitianMatrix,
    target: f64,
    t: f64,
) -> Result<HermitianMatrix> {
    let spread = spec
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, l| m.max(l.abs()))
        .max(t);
    let masses = spec.diagonal_in_eigenbasis(rho);
    let mut weights = vec![0.0; spec.dim()];
    let mut accepted = 0.0;
    for cluster in spec.clusters(CLUSTER_TOL * spread) {
        if accepted >= target {
            break;
        }
        let mass: f64 = cluster.indices.iter().map(|&k| masses[k]).sum();
        if mass <= 0.0 {
            continue;
        }
        let w = ((target - accepted) / mass).min(1.0);
        for &k in &cluster.indices {
            weights[k] = w;
        }
        accepted += w * mass;
    }
    Ok(spec.weighted_sum(&weights))
}

fn finish(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    epsilon: f64,
    a: HermitianMatrix,
    threshold: Option<f64>,
) -> Result<TestCertificate> {
    let beta = a.expectation(sigma.matrix())?;
    let alpha = 1.0 - a.expectation(rho.matrix())?;
    let z = threshold.map_or(0.0, |t| 1.0 / t);
    let (dual_value, big_z) = dual_objective(
        &[rho.clone().into()],
        &[z],
        &[sigma.clone().into()],
        &[1.0],
        epsilon,
    )?;
    Ok(TestCertificate {
        epsilon,
        beta,
        alpha,
        dual_value,
        gap: beta - dual_value,
        dual: DualVariables {
            z: vec![z],
            v: vec![1.0],
            big_z: Operator::Dense(big_z),
        },
        decision: DecisionFunction::quantum(clip_unit(a))?,
    })
}

/// Snaps eigenvalues that drifted past `[0, 1]` by rounding.
fn clip_unit(a: HermitianMatrix) -> HermitianMatrix {
    let spec = a.eigendecompose();
    if spec.eigenvalues.iter().all(|&l| (0.0..=1.0).contains(&l)) {
        return a;
    }
    spec.map(|l| l.clamp(0.0, 1.0))
}
