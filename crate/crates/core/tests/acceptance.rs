//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! Runs without the libtest harness so the lines are always printed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{random_channel_matrix, random_mixed_rank, random_state};
use oneshot_core::channels::{ClassicalChannel, QuantumChannel};
use oneshot_core::design::{optimize_source_exact, ConstraintPolytope};
use oneshot_core::distributions::{
    pinch, ClassicalDistribution, DensityOperator, Hypothesis, SequenceSpace,
};
use oneshot_core::divergences::{kl, stein_rate_curve, LaserParams};
use oneshot_core::hermitian::{CMatrix, HermitianMatrix, C64};
use oneshot_core::hyptest::{
    finite_time_beta_padded, solve_classical, solve_composite, solve_quantum, CompositeOptions,
};
use oneshot_core::workflows::{
    laser_experiment, meteor_experiment, LaserSetup, MeteorRow, MeteorScenario,
};
use oneshot_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dist(v: &[f64]) -> ClassicalDistribution {
    ClassicalDistribution::from_vec(v.to_vec()).unwrap()
}

fn qubit_pair_states() -> (DensityOperator, DensityOperator) {
    (
        DensityOperator::from_real(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(),
        DensityOperator::from_real(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
    )
}

fn eps_grid() -> impl Iterator<Item = f64> {
    (1..=15).map(|i| i as f64 * 0.05)
}

fn qubit_pair_classical() -> Check {
    let (p0, p1) = (dist(&[1.0, 0.0]), dist(&[0.5, 0.5]));
    let beta = solve_classical(&p0, &p1, 0.1)
        .map_err(|e| e.to_string())?
        .beta;
    ensure((beta - 0.45).abs() <= 1e-12, || {
        format!("beta {beta} != 0.45")
    })?;
    for eps in eps_grid() {
        let b = solve_classical(&p0, &p1, eps)
            .map_err(|e| e.to_string())?
            .beta;
        ensure(b >= (1.0 - eps) / 2.0 - 1e-12, || {
            format!("eps {eps}: beta {b} below (1-eps)/2")
        })?;
    }
    Ok(format!("beta(0.1) = {beta}, bound holds on 15 grid points"))
}

fn qubit_pair_quantum() -> Check {
    let (rho, sigma) = qubit_pair_states();
    let beta = solve_quantum(&rho, &sigma, 0.1)
        .map_err(|e| e.to_string())?
        .beta;
    let formula = |e: f64| 0.5 * (1.0 - 2.0 * (e * (1.0 - e)).sqrt());
    ensure(
        (beta - 0.2).abs() <= 1e-8 && (beta - formula(0.1)).abs() <= 1e-8,
        || format!("beta {beta} != 0.2"),
    )?;
    let (pr, ps) = (pinch(&rho).unwrap(), pinch(&sigma).unwrap());
    let mut worst_margin = f64::INFINITY;
    for eps in eps_grid().filter(|e| *e < 0.8 - 1e-12) {
        let q = solve_quantum(&rho, &sigma, eps)
            .map_err(|e| e.to_string())?
            .beta;
        let c = solve_classical(&pr, &ps, eps)
            .map_err(|e| e.to_string())?
            .beta;
        ensure(q < c, || {
            format!("eps {eps}: quantum {q} not below classical {c}")
        })?;
        worst_margin = worst_margin.min(c - q);
    }
    Ok(format!(
        "beta(0.1) = {beta:.12}, smallest advantage on grid {worst_margin:.3e}"
    ))
}

fn laser_power_independence() -> Check {
    let setup = LaserSetup {
        g: 6,
        s: 1,
        c: 1,
        q: 0.2,
        delta: 0.1,
        n: 5,
    };
    let powers = LaserParams::admissible_powers(setup.c, setup.s, setup.g);
    let rows = laser_experiment(&setup, &powers).map_err(|e| e.to_string())?;
    let first = rows[0].kl_bits;
    for r in &rows {
        ensure((r.kl_bits - first).abs() <= 1e-12, || {
            format!("P={}: {} vs {first}", r.power, r.kl_bits)
        })?;
        ensure((r.kl_bits - r.reference_bits).abs() <= 1e-10, || {
            format!(
                "P={}: {} vs closed form {}",
                r.power, r.kl_bits, r.reference_bits
            )
        })?;
    }
    Ok(format!("powers {powers:?} all give {first:.12} bits"))
}

fn meteor_ordinal() -> Check {
    let s = MeteorScenario::default();
    let rows = meteor_experiment(&s).map_err(|e| e.to_string())?;
    let get = |l: f64, e: f64, k: usize| -> f64 {
        rows.iter()
            .find(|r: &&MeteorRow| r.lambda == l && r.epsilon == e && r.k == k)
            .unwrap()
            .beta
    };
    for &l in &s.lambda_values {
        for &e in &s.epsilon_values {
            ensure((get(l, e, 0) - (1.0 - e)).abs() <= 1e-9, || {
                format!("k=0 at λ={l}, ε={e}")
            })?;
            for k in 1..=15 {
                ensure(get(l, e, k) <= get(l, e, k - 1), || {
                    format!("not monotone in k at λ={l}, ε={e}, k={k}")
                })?;
            }
        }
    }
    for k in 0..=15 {
        for &e in &s.epsilon_values {
            ensure(get(6.0, e, k) >= get(3.0, e, k), || {
                format!("λ ordering fails at k={k}, ε={e}")
            })?;
        }
        for &l in &s.lambda_values {
            for (&hi, &lo) in s.epsilon_values.iter().zip(&s.epsilon_values[1..]) {
                ensure(get(l, hi, k) <= get(l, lo, k), || {
                    format!("ε ordering fails at λ={l}, k={k}")
                })?;
            }
        }
    }
    Ok(format!(
        "{} rows; beta(λ=3, ε=0.01, k=8) = {:.6e}",
        rows.len(),
        get(3.0, 0.01, 8)
    ))
}

fn strong_duality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let d = rng.gen_range(2..=4);
        let (m0, m1) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let nulls: Vec<Hypothesis> = (0..m0)
            .map(|_| random_mixed_rank(&mut rng, d).into())
            .collect();
        let alts: Vec<Hypothesis> = (0..m1)
            .map(|_| random_mixed_rank(&mut rng, d).into())
            .collect();
        let eps = rng.gen_range(0.0..0.95);
        let c = solve_composite(&nulls, &alts, eps, &CompositeOptions::default())
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure(c.gap <= 1e-6, || format!("case {case}: gap {}", c.gap))?;
        c.verify(&nulls, &alts, 1e-9)
            .map_err(|e| format!("case {case}: {e}"))?;
        worst = worst.max(c.gap);
    }
    Ok(format!("200 certificates verified, worst gap {worst:.2e}"))
}

fn tensor_factorization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let opts = CompositeOptions::default();
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let (m0, m1) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let nulls: Vec<DensityOperator> = (0..m0).map(|_| random_mixed_rank(&mut rng, 2)).collect();
        let alts: Vec<DensityOperator> = (0..m1).map(|_| random_mixed_rank(&mut rng, 2)).collect();
        let omega = random_state(&mut rng, 2, 2);
        let eps = rng.gen_range(0.01..0.9);
        let lift = |v: &[DensityOperator]| -> Vec<Hypothesis> {
            v.iter().map(|r| r.tensor(&omega).unwrap().into()).collect()
        };
        let plain = |v: &[DensityOperator]| -> Vec<Hypothesis> {
            v.iter().cloned().map(Into::into).collect()
        };
        let a = solve_composite(&plain(&nulls), &plain(&alts), eps, &opts)
            .map_err(|e| format!("case {case}: {e}"))?;
        let b = solve_composite(&lift(&nulls), &lift(&alts), eps, &opts)
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure((a.beta - b.beta).abs() <= 1e-6, || {
            format!("case {case}: {} vs {}", a.beta, b.beta)
        })?;
        worst = worst.max((a.beta - b.beta).abs());
    }
    let mut worst_pad: f64 = 0.0;
    for case in 0..12 {
        let k = if case % 3 == 0 { 2 } else { 1 };
        let eta: Vec<DensityOperator> = (0..rng.gen_range(1..=2))
            .map(|_| random_mixed_rank(&mut rng, 2))
            .collect();
        let signals: Vec<DensityOperator> = (0..rng.gen_range(1..=2))
            .map(|_| random_mixed_rank(&mut rng, 1 << k))
            .collect();
        let eps = rng.gen_range(0.01..0.9);
        let base = finite_time_beta_padded(&eta, &signals, 0, eps)
            .map_err(|e| format!("pad case {case}: {e}"))?;
        for extra in 1..=3 {
            let padded = finite_time_beta_padded(&eta, &signals, extra, eps)
                .map_err(|e| format!("pad case {case}: {e}"))?;
            let diff = (padded.beta - base.beta).abs();
            ensure(diff <= 1e-6, || {
                format!(
                    "pad case {case}, extra {extra}: {} vs {}",
                    padded.beta, base.beta
                )
            })?;
            worst_pad = worst_pad.max(diff);
        }
    }
    Ok(format!("50 tensor instances (max |Δβ| {worst:.2e}), 12×3 padded instances (max |Δβ| {worst_pad:.2e})"))
}

/// Random channel with `Σ K†K = keep · I`: a Ginibre Kraus family
/// normalized by `S^{-1/2}` and scaled by `√keep`.
fn random_kraus(rng: &mut impl Rng, d_in: usize, d_out: usize, keep: f64) -> QuantumChannel {
    // Enough operators for ΣK†K to be invertible.
    let count = rng.gen_range(d_in.div_ceil(d_out)..=3);
    let ks: Vec<CMatrix> = (0..count)
        .map(|_| {
            CMatrix::from_fn(d_out, d_in, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        })
        .collect();
    let mut s = CMatrix::zeros(d_in, d_in);
    for k in &ks {
        s = s.add(&k.adjoint().matmul(k).unwrap()).unwrap();
    }
    let inv_sqrt = HermitianMatrix::new(s.hermitian_part())
        .unwrap()
        .eigendecompose()
        .map(|l| (keep / l).sqrt() * (1.0 - 1e-12));
    let ks = ks
        .iter()
        .map(|k| k.matmul(inv_sqrt.as_matrix()).unwrap())
        .collect();
    QuantumChannel::new(ks).unwrap()
}

/// `+∞` stands for an infeasible problem (output null mass below `1 − ε`).
fn beta_or_inf(
    r: oneshot_core::Result<oneshot_core::hyptest::TestCertificate>,
) -> std::result::Result<f64, String> {
    match r {
        Ok(c) => Ok(c.beta),
        Err(Error::Infeasible(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e.to_string()),
    }
}

fn data_processing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut infeasible = 0;
    for case in 0..500 {
        let eps = rng.gen_range(0.0..0.95);
        // Half the channels are trace preserving; the rest leak at most 0.9ε
        // so the output null still admits a feasible test.
        let min_keep = if rng.gen_bool(0.5) {
            1.0
        } else {
            1.0 - 0.9 * eps
        };
        let (before, after) = if case % 2 == 0 {
            let d = rng.gen_range(2..=6);
            let e = rng.gen_range(2..=6);
            let (p0, p1) = (
                common::random_distribution(&mut rng, d),
                common::random_distribution(&mut rng, d),
            );
            let ch = ClassicalChannel::from_matrix(random_channel_matrix(&mut rng, d, e, min_keep))
                .unwrap();
            let (q0, q1) = (ch.apply(&p0).unwrap(), ch.apply(&p1).unwrap());
            (
                beta_or_inf(solve_classical(&p0, &p1, eps))?,
                beta_or_inf(solve_classical(&q0, &q1, eps))?,
            )
        } else {
            let d = rng.gen_range(2..=3);
            let e = rng.gen_range(2..=3);
            let (r0, r1) = (
                random_mixed_rank(&mut rng, d),
                random_mixed_rank(&mut rng, d),
            );
            let keep = if min_keep < 1.0 {
                rng.gen_range(min_keep..=1.0)
            } else {
                1.0
            };
            let ch = random_kraus(&mut rng, d, e, keep);
            let (s0, s1) = (ch.apply(&r0).unwrap(), ch.apply(&r1).unwrap());
            (
                beta_or_inf(solve_quantum(&r0, &r1, eps))?,
                beta_or_inf(solve_quantum(&s0, &s1, eps))?,
            )
        };
        if after.is_infinite() {
            infeasible += 1;
        }
        ensure(after >= before - 1e-9, || {
            format!("case {case}: beta fell from {before} to {after}")
        })?;
    }
    Ok(format!(
        "500 triples (250 classical, 250 quantum); {infeasible} outputs infeasible (β = +∞)"
    ))
}

/// Exact LP optimum by enumerating the vertices of
/// `{A ∈ [0,1]^d : ⟨P0, A⟩ ≥ 1 − ε}`: 0/1 points plus points with one
/// fractional coordinate on the budget hyperplane.
fn vertex_lp(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let d = p.len();
    let target = 1.0 - eps;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << d) {
        let on = |i: usize| mask & (1 << i) != 0;
        let mass: f64 = (0..d).filter(|&i| on(i)).map(|i| p[i]).sum();
        let cost: f64 = (0..d).filter(|&i| on(i)).map(|i| q[i]).sum();
        if mass >= target - 1e-15 {
            best = best.min(cost);
        }
        for j in (0..d).filter(|&j| !on(j) && p[j] > 0.0) {
            let a = (target - mass) / p[j];
            if (0.0..=1.0).contains(&a) {
                best = best.min(cost + a * q[j]);
            }
        }
    }
    best
}

fn grid_distribution(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut units = vec![0usize; d];
    for _ in 0..20 {
        units[rng.gen_range(0..d)] += 1;
    }
    units.iter().map(|&u| u as f64 * 0.05).collect()
}

fn classical_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let d = rng.gen_range(1..=6);
        let (p, q) = (
            grid_distribution(&mut rng, d),
            grid_distribution(&mut rng, d),
        );
        let eps = rng.gen_range(0..20) as f64 * 0.05;
        let space = SequenceSpace::flat(d).unwrap();
        let p0 =
            ClassicalDistribution::with_deficit(space, p.clone()).map_err(|e| e.to_string())?;
        let p1 =
            ClassicalDistribution::with_deficit(space, q.clone()).map_err(|e| e.to_string())?;
        let got = solve_classical(&p0, &p1, eps)
            .map_err(|e| format!("case {case}: {e}"))?
            .beta;
        let want = vertex_lp(&p, &q, eps);
        ensure((got - want).abs() <= 1e-12, || {
            format!("case {case}: greedy {got} vs vertices {want}")
        })?;
        worst = worst.max((got - want).abs());
    }
    Ok(format!("1000 grid instances, max |Δβ| {worst:.1e}"))
}

fn stein_trend() -> Check {
    let p0 = dist(&[0.5, 0.5]).into();
    let p1 = dist(&[0.9, 0.1]).into();
    let curve = stein_rate_curve(&p0, &p1, 0.05, 10).map_err(|e| e.to_string())?;
    let (d2, d10) = (
        curve.distance_at(2).unwrap(),
        curve.distance_at(10).unwrap(),
    );
    ensure(curve.points.iter().all(|p| p.rate >= -1e-9), || {
        "negative rate".into()
    })?;
    ensure(d10 < d2, || {
        format!("distance at n=10 ({d10}) not below n=2 ({d2})")
    })?;
    Ok(format!(
        "D = {:.6} bits; |rate - D| = {d2:.6} at n=2, {d10:.6} at n=10",
        curve.reference_rate
    ))
}

fn unboundedness() -> Check {
    let star = dist(&[1.0, 0.0, 0.0]);
    let r = optimize_source_exact(
        &ClassicalChannel::identity(3),
        &star,
        &ConstraintPolytope::simplex(3),
    )
    .map_err(|e| e.to_string())?;
    ensure(r.objective == f64::INFINITY, || {
        format!("objective {}", r.objective)
    })?;
    let w = r.best_device.mass();
    let disjoint = w
        .iter()
        .zip(star.mass())
        .all(|(a, b)| *a == 0.0 || *b == 0.0);
    ensure(disjoint, || format!("witness {w:?} overlaps the reference"))?;
    ensure(kl(&star, &r.best_device).unwrap().is_infinite(), || {
        "witness has finite divergence".into()
    })?;
    Ok(format!("objective +inf, witness vertex {w:?}"))
}

/// Number, name, time limit in seconds, and the check itself.
type Criterion = (u32, &'static str, u64, fn() -> Check);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "classical bound", 1, qubit_pair_classical),
        (2, "quantum value and advantage", 1, qubit_pair_quantum),
        (3, "laser power independence", 10, laser_power_independence),
        (4, "meteor ordinal reproduction", 30, meteor_ordinal),
        (5, "composite strong duality", 300, strong_duality),
        (
            6,
            "tensor factorization and finite-time padding",
            300,
            tensor_factorization,
        ),
        (7, "data-processing monotonicity", 120, data_processing),
        (
            8,
            "classical solver vs vertex enumeration",
            120,
            classical_brute_force,
        ),
        (9, "Stein convergence trend", 60, stein_trend),
        (10, "unbounded source design detection", 1, unboundedness),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= Duration::from_secs(limit) => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(e) => (false, e),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.2}s, limit {limit}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
