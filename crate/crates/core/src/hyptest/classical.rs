use super::{check_epsilon, DecisionFunction, DualVariables, Operator, TestCertificate};
use crate::distributions::ClassicalDistribution;
use crate::error::{check_dim, Result};

/// Minimum type-II error of a classical test with type-I error at most ε.
///
/// Greedy Neyman–Pearson: outcomes are accepted in ascending order of the
/// likelihood ratio `P1/P0`, equal ratios forming one block, until the
/// accepted null mass reaches `1 − ε`; the boundary block gets a common
/// fractional weight. Outcomes with `P0 = P1 = 0` are accepted for free and
/// outcomes with `P0 = 0 < P1` are never needed. A sub-normalized null (the
/// image of a trace non-increasing map) is allowed while its mass still
/// covers `1 − ε`. The dual certificate is
/// `z = r*`, `v = 1`, `Z = (r* P0 − P1)^+` with `r*` the boundary ratio.
pub fn solve_classical(
    p0: &ClassicalDistribution,
    p1: &ClassicalDistribution,
    epsilon: f64,
) -> Result<TestCertificate> {
    check_epsilon(epsilon)?;
    check_dim(p0.dim(), p1.dim())?;
    let (p, q) = (p0.mass(), p1.mass());
    let target = 1.0 - epsilon;
    super::check_null_mass(p0.total(), target)?;

    let mut weights = vec![0.0; p.len()];
    let mut order: Vec<usize> = Vec::with_capacity(p.len());
    for y in 0..p.len() {
        if p[y] > 0.0 {
            order.push(y);
        } else if q[y] == 0.0 {
            weights[y] = 1.0;
        }
    }
    // Stable sort keeps ties in index order; blocks are merged below anyway.
    order.sort_by(|&a, &b| (q[a] / p[a]).total_cmp(&(q[b] / p[b])));

    let mut accepted = 0.0;
    let mut threshold = 0.0;
    let mut i = 0;
    while i < order.len() && accepted < target {
        let ratio = q[order[i]] / p[order[i]];
        let mut j = i;
        let mut block_mass = 0.0;
        while j < order.len() && q[order[j]] / p[order[j]] == ratio {
            block_mass += p[order[j]];
            j += 1;
        }
        let w = ((target - accepted) / block_mass).min(1.0);
        for &y in &order[i..j] {
            weights[y] = w;
        }
        accepted += w * block_mass;
        threshold = ratio;
        i = j;
    }

    let beta: f64 = weights.iter().zip(q).map(|(w, q)| w * q).sum();
    let alpha = 1.0 - weights.iter().zip(p).map(|(w, p)| w * p).sum::<f64>();
    let big_z: Vec<f64> = p
        .iter()
        .zip(q)
        .map(|(&p, &q)| (threshold * p - q).max(0.0))
        .collect();
    let dual_value = target * threshold - big_z.iter().sum::<f64>();
    Ok(TestCertificate {
        epsilon,
        beta,
        alpha,
        dual_value,
        gap: beta - dual_value,
        dual: DualVariables {
            z: vec![threshold],
            v: vec![1.0],
            big_z: Operator::Diagonal(big_z),
        },
        decision: DecisionFunction::classical(weights)?,
    })
}
