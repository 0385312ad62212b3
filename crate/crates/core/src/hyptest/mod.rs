//! Optimal one-shot tests.
//!
//! Every solver returns a [`TestCertificate`]: the achieving decision
//! function, its errors, and dual variables `(z, v, Z)` for the program
//!
//! ```text
//! maximize (1 − ε)‖z‖₁ − Tr Z   s.t.  Z ⪰ Σ zᵢ Pᵢ − Σ vⱼ Qⱼ,  Z ⪰ 0,  z, v ≥ 0,  Σ v ≤ 1
//! ```
//!
//! whose value lower-bounds β. `gap = β − dual_value` is therefore a proof of
//! near-optimality that can be rechecked with [`TestCertificate::verify`].

mod classical;
mod composite;
mod quantum;

use serde::{Deserialize, Serialize};

pub use classical::solve_classical;
pub use composite::{solve_composite, CompositeOptions};
pub use quantum::solve_quantum;

use crate::distributions::{DensityOperator, Hypothesis};
use crate::error::{check_dim, domain, validation, Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix};

/// Slack on decision weights and eigenvalues of decision operators.
pub const DECISION_TOL: f64 = 1e-9;

/// A Hermitian operator, stored as its diagonal when it is known to commute
/// with the computational basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Diagonal(Vec<f64>),
    Dense(HermitianMatrix),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Diagonal(d) => d.len(),
            Operator::Dense(m) => m.dim(),
        }
    }

    pub fn to_dense(&self) -> HermitianMatrix {
        match self {
            Operator::Diagonal(d) => HermitianMatrix::from_real_diagonal(d),
            Operator::Dense(m) => m.clone(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        match self {
            Operator::Diagonal(d) => {
                let mut v = d.clone();
                v.sort_by(|a, b| b.total_cmp(a));
                v
            }
            Operator::Dense(m) => m.eigenvalues(),
        }
    }

    /// `Tr(h · self)`.
    pub fn pair(&self, h: &Hypothesis) -> Result<f64> {
        check_dim(self.dim(), h.dim())?;
        Ok(match (self, h) {
            (Operator::Diagonal(a), Hypothesis::Classical(p)) => dot(a, p.mass()),
            (Operator::Diagonal(a), Hypothesis::Quantum(r)) => dot(a, &r.matrix().diagonal_real()),
            (Operator::Dense(m), Hypothesis::Classical(p)) => dot(&m.diagonal_real(), p.mass()),
            (Operator::Dense(m), Hypothesis::Quantum(r)) => m.expectation(r.matrix())?,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An operator `A` with `0 ⪯ A ⪯ I` (within [`DECISION_TOL`]). Outcome `y` is
/// accepted as null with probability `⟨y|A|y⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Operator", into = "Operator")]
pub struct DecisionFunction(Operator);

impl TryFrom<Operator> for DecisionFunction {
    type Error = crate::Error;

    fn try_from(op: Operator) -> Result<Self> {
        Self::new(op)
    }
}

impl From<DecisionFunction> for Operator {
    fn from(d: DecisionFunction) -> Self {
        d.0
    }
}

impl DecisionFunction {
    pub fn new(op: Operator) -> Result<Self> {
        let ok = match &op {
            Operator::Diagonal(w) => w
                .iter()
                .all(|&x| (-DECISION_TOL..=1.0 + DECISION_TOL).contains(&x)),
            Operator::Dense(m) => m.is_decision_operator(DECISION_TOL),
        };
        if !ok {
            return Err(validation("decision function must satisfy 0 ≤ A ≤ I"));
        }
        Ok(Self(op))
    }

    pub fn classical(weights: Vec<f64>) -> Result<Self> {
        Self::new(Operator::Diagonal(weights))
    }

    pub fn quantum(a: HermitianMatrix) -> Result<Self> {
        Self::new(Operator::Dense(a))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Operator::Diagonal(vec![1.0; dim]))
    }

    pub fn zero(dim: usize) -> Self {
        Self(Operator::Diagonal(vec![0.0; dim]))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Acceptance weights for a classical test, `None` for a dense operator.
    pub fn weights(&self) -> Option<&[f64]> {
        match &self.0 {
            Operator::Diagonal(w) => Some(w),
            Operator::Dense(_) => None,
        }
    }

    /// Probability of accepting the null on state `h`.
    pub fn acceptance(&self, h: &Hypothesis) -> Result<f64> {
        self.0.pair(h)
    }
}

/// Dual multipliers: `z` per null, `v` per alternative, and the matrix `Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualVariables {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(rename = "Z")]
    pub big_z: Operator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCertificate {
    pub epsilon: f64,
    /// Type-II error of `decision` against the worst alternative.
    pub beta: f64,
    /// Type-I error of `decision` against the worst null.
    pub alpha: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub dual: DualVariables,
    pub decision: DecisionFunction,
}

impl TestCertificate {
    /// Rechecks dual feasibility by substitution and returns the recomputed
    /// dual objective. Fails if any constraint is violated by more than `tol`;
    /// the objective comparison is relative to `1 + Σz`.
    pub fn verify(&self, nulls: &[Hypothesis], alts: &[Hypothesis], tol: f64) -> Result<f64> {
        let DualVariables { z, v, big_z } = &self.dual;
        check_dim(nulls.len(), z.len())?;
        check_dim(alts.len(), v.len())?;
        if z.iter().chain(v).any(|&x| x < -tol) {
            return Err(validation("negative dual multiplier"));
        }
        if v.iter().sum::<f64>() > 1.0 + tol {
            return Err(validation("alternative multipliers sum above one"));
        }
        let zmat = big_z.to_dense();
        if zmat.min_eigenvalue() < -tol {
            return Err(validation("Z is not positive semidefinite"));
        }
        let h = weighted_difference(nulls, z, alts, v)?;
        if zmat.sub(&h)?.min_eigenvalue() < -tol {
            return Err(validation("Z does not dominate Σ zP − Σ vQ"));
        }
        let value = (1.0 - self.epsilon) * z.iter().sum::<f64>() - zmat.trace();
        if (value - self.dual_value).abs() > tol * (1.0 + z.iter().sum::<f64>()) {
            return Err(validation(format!(
                "reported dual value {} differs from recomputed {value}",
                self.dual_value
            )));
        }
        Ok(value)
    }
}

/// `Σ zᵢ Pᵢ − Σ vⱼ Qⱼ` as a dense matrix.
pub(crate) fn weighted_difference(
    nulls: &[Hypothesis],
    z: &[f64],
    alts: &[Hypothesis],
    v: &[f64],
) -> Result<HermitianMatrix> {
    let dim = nulls
        .first()
        .or(alts.first())
        .map(Hypothesis::dim)
        .ok_or_else(|| validation("no hypotheses"))?;
    let mut acc = CMatrix::zeros(dim, dim);
    let signed = nulls
        .iter()
        .zip(z.iter().copied())
        .chain(alts.iter().zip(v.iter().map(|w| -w)));
    for (h, w) in signed {
        check_dim(dim, h.dim())?;
        acc.axpy(w, h.to_density()?.matrix().as_matrix());
    }
    Ok(HermitianMatrix::from_hermitian_part(&acc))
}

/// Minimum-trace `Z = H⁺` for given multipliers, with `H = Σ zP − Σ vQ`,
/// and the dual objective. The value is evaluated as
/// `−ε Σz + Σ vⱼ Tr Qⱼ − Tr H⁻` (using `Tr H⁺ = Tr H + Tr H⁻` and unit-trace
/// nulls), which avoids cancelling two large terms when `z` is large.
pub(crate) fn dual_objective(
    nulls: &[Hypothesis],
    z: &[f64],
    alts: &[Hypothesis],
    v: &[f64],
    epsilon: f64,
) -> Result<(f64, HermitianMatrix)> {
    let spec = weighted_difference(nulls, z, alts, v)?.eigendecompose();
    let negative: f64 = spec
        .eigenvalues
        .iter()
        .filter(|&&l| l < 0.0)
        .map(|l| -l)
        .sum();
    let mut value = -epsilon * z.iter().sum::<f64>() - negative;
    for (q, &w) in alts.iter().zip(v) {
        value += w * q.to_density()?.trace();
    }
    Ok((value, spec.map(|l| l.max(0.0))))
}

/// Support threshold relative to the largest eigenvalue.
const SUPPORT_TOL: f64 = 1e-10;

/// Exact solution at `ε = 0`: the test must accept every null with
/// certainty, so the smallest admissible `X` is the projector `Π` onto the
/// union of the null supports and `β = max_j ⟨Π, Qⱼ⟩`. The dual optimum is
/// only approached as `z → ∞`; the certificate takes `z = s·1`, `v` on the
/// worst alternative, and maximizes the concave dual objective over `s`.
pub(crate) fn zero_epsilon_certificate(
    nulls: &[Hypothesis],
    alts: &[Hypothesis],
) -> Result<TestCertificate> {
    let zeros = vec![0.0; alts.len()];
    let ones = vec![1.0; nulls.len()];
    let sum = weighted_difference(nulls, &ones, alts, &zeros)?;
    let spec = sum.eigendecompose();
    let top = spec.eigenvalues.first().copied().unwrap_or(0.0);
    let range: Vec<usize> = (0..spec.dim())
        .filter(|&k| spec.eigenvalues[k] > SUPPORT_TOL * top)
        .collect();
    let x = spec.projector(&range);
    let dec = DecisionFunction::quantum(x)?;
    let mut worst = (0, f64::NEG_INFINITY);
    for (j, q) in alts.iter().enumerate() {
        let b = dec.acceptance(q)?;
        if b > worst.1 {
            worst = (j, b);
        }
    }
    let alpha = nulls
        .iter()
        .map(|p| dec.acceptance(p).map(|a| 1.0 - a))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut v = zeros;
    v[worst.0] = 1.0;
    let value = |s: f64| dual_objective(nulls, &vec![s; nulls.len()], alts, &v, 0.0);
    // Golden-section search on log s; the objective is concave in s, hence
    // unimodal in log s.
    let (mut lo, mut hi) = (-8.0f64, 12.0f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if value(10f64.powf(a))?.0 < value(10f64.powf(b))?.0 {
            lo = a;
        } else {
            hi = b;
        }
    }
    let s = 10f64.powf(0.5 * (lo + hi));
    let (dual_value, big_z) = value(s)?;
    Ok(TestCertificate {
        epsilon: 0.0,
        beta: worst.1,
        alpha,
        dual_value,
        gap: worst.1 - dual_value,
        dual: DualVariables {
            z: vec![s; nulls.len()],
            v,
            big_z: Operator::Dense(big_z),
        },
        decision: dec,
    })
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

/// A null whose total mass is below `1 − ε` admits no feasible test.
pub(crate) fn check_null_mass(total: f64, target: f64) -> Result<()> {
    if total < target - 1e-12 {
        return Err(Error::Infeasible(format!(
            "null mass {total} cannot meet the acceptance target {target}"
        )));
    }
    Ok(())
}

/// `(α, β) = (1 − ⟨P0, A⟩, ⟨P1, A⟩)`.
pub fn evaluate_errors(
    a: &DecisionFunction,
    p0: &Hypothesis,
    p1: &Hypothesis,
) -> Result<(f64, f64)> {
    Ok((1.0 - a.acceptance(p0)?, a.acceptance(p1)?))
}

/// Dispatches to [`solve_classical`] when both hypotheses are classical and
/// to [`solve_quantum`] otherwise.
pub fn solve(p0: &Hypothesis, p1: &Hypothesis, epsilon: f64) -> Result<TestCertificate> {
    match (p0, p1) {
        (Hypothesis::Classical(a), Hypothesis::Classical(b)) => solve_classical(a, b, epsilon),
        _ => solve_quantum(&p0.to_density()?, &p1.to_density()?, epsilon),
    }
}

/// A divergence in bits; `+∞` is a legitimate value, not an error.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Bits(pub f64);

impl Bits {
    pub fn bits(self) -> f64 {
        self.0
    }

    pub fn nats(self) -> f64 {
        self.0 * std::f64::consts::LN_2
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `−log₂ β`, with `β ≤ 0` mapped to `+∞`.
    pub fn from_beta(beta: f64) -> Self {
        if beta <= 0.0 {
            Bits(f64::INFINITY)
        } else {
            Bits(-beta.log2())
        }
    }
}

/// ε-hypothesis-testing relative divergence `D^ε_H = −log₂ ξ^ε_H`.
pub fn dhte(p0: &Hypothesis, p1: &Hypothesis, epsilon: f64) -> Result<Bits> {
    Ok(Bits::from_beta(solve(p0, p1, epsilon)?.beta))
}

/// Value of the return-to-null problem at its `n → ∞` limit: nulls
/// `{ρ^⊗k : ρ ∈ eta}` against the `k`-slot signals.
pub fn finite_time_beta(
    eta: &[DensityOperator],
    signals: &[DensityOperator],
    epsilon: f64,
) -> Result<TestCertificate> {
    finite_time_beta_padded(eta, signals, 0, epsilon)
}

/// As [`finite_time_beta`], with `extra` further slots holding the first null
/// state appended to every hypothesis. The value is independent of `extra`.
pub fn finite_time_beta_padded(
    eta: &[DensityOperator],
    signals: &[DensityOperator],
    extra: usize,
    epsilon: f64,
) -> Result<TestCertificate> {
    let first = eta.first().ok_or_else(|| validation("no null states"))?;
    let d = first.dim();
    if eta.iter().any(|r| r.dim() != d) {
        return Err(validation("null states have different dimensions"));
    }
    let sig_dim = signals
        .first()
        .ok_or_else(|| validation("no signal states"))?
        .dim();
    if signals.iter().any(|s| s.dim() != sig_dim) {
        return Err(validation("signals do not share a slot count"));
    }
    let k = slot_count(d, sig_dim)?;
    let pad = if extra > 0 {
        Some(first.iid_power(extra)?)
    } else {
        None
    };
    let extend = |r: DensityOperator| -> Result<DensityOperator> {
        match &pad {
            Some(p) => r.tensor(p),
            None => Ok(r),
        }
    };
    let nulls = eta
        .iter()
        .map(|r| extend(r.iid_power(k)?).map(Hypothesis::from))
        .collect::<Result<Vec<_>>>()?;
    let alts = signals
        .iter()
        .map(|s| extend(s.clone()).map(Hypothesis::from))
        .collect::<Result<Vec<_>>>()?;
    solve_composite(&nulls, &alts, epsilon, &CompositeOptions::default())
}

fn slot_count(d: usize, total: usize) -> Result<usize> {
    let mut k = 1;
    let mut acc = d;
    while acc < total {
        acc = acc
            .checked_mul(d)
            .ok_or_else(|| validation("signal dimension overflow"))?;
        k += 1;
    }
    if acc != total || d < 2 && total != 1 {
        return Err(validation(format!(
            "signal dimension {total} is not a power of the slot dimension {d}"
        )));
    }
    Ok(k)
}
