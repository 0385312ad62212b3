//! Relative entropies, Stein-rate curves and the laser closed form.
//!
//! All values are [`Bits`]; `+∞` is returned, never raised, when the first
//! argument's support escapes the second's.

use serde::{Deserialize, Serialize};

use crate::distributions::{ClassicalDistribution, DensityOperator, Hypothesis};
use crate::error::{check_dim, domain, validation, Result};
use crate::hyptest::{check_epsilon, dhte, Bits};
use crate::numfmt::sig12;

/// Eigenvalues of σ below this fraction of its largest one count as kernel.
const SUPPORT_TOL: f64 = 1e-12;

/// `Σ P0 log₂(P0/P1)` with `0·log(0/q) = 0`.
pub fn kl(p0: &ClassicalDistribution, p1: &ClassicalDistribution) -> Result<Bits> {
    check_dim(p0.dim(), p1.dim())?;
    let mut nats = 0.0;
    for (&p, &q) in p0.mass().iter().zip(p1.mass()) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(Bits(f64::INFINITY));
        }
        nats += p * (p / q).ln();
    }
    // Nonnegative by Gibbs' inequality; rounding can leave a −1e-17 residue.
    Ok(Bits(nats.max(0.0) / std::f64::consts::LN_2))
}

/// `Tr ρ (log ρ − log σ)`, evaluated on the support of ρ.
pub fn quantum_relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<Bits> {
    check_dim(rho.dim(), sigma.dim())?;
    let r = rho.matrix().eigendecompose();
    let s = sigma.matrix().eigendecompose();
    let top = s.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    let cut = SUPPORT_TOL * top.max(f64::MIN_POSITIVE);
    let r_top = r.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    // overlap[(j, i)] = ⟨b_j|a_i⟩
    let overlap = s.eigenvectors.adjoint().matmul(&r.eigenvectors)?;
    let mut nats = 0.0;
    for (i, &lam) in r.eigenvalues.iter().enumerate() {
        if lam <= SUPPORT_TOL * r_top {
            continue;
        }
        nats += lam * lam.ln();
        for (j, &mu) in s.eigenvalues.iter().enumerate() {
            let w = overlap[(j, i)].norm_sqr();
            if mu <= cut {
                if w > 1e-10 {
                    return Ok(Bits(f64::INFINITY));
                }
            } else {
                nats -= lam * w * mu.ln();
            }
        }
    }
    Ok(Bits(nats.max(0.0) / std::f64::consts::LN_2))
}

/// `D(P0‖P1)` for either kind of hypothesis.
pub fn relative_entropy(p0: &Hypothesis, p1: &Hypothesis) -> Result<Bits> {
    match (p0, p1) {
        (Hypothesis::Classical(a), Hypothesis::Classical(b)) => kl(a, b),
        _ => quantum_relative_entropy(&p0.to_density()?, &p1.to_density()?),
    }
}

/// `(1/n) D^ε_H(P0^⊗n ‖ P1^⊗n)` for `n = 1..=n_max`, next to `D(P0‖P1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub epsilon: f64,
    pub points: Vec<RatePoint>,
    #[serde(with = "crate::numfmt::extended")]
    pub reference_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    #[serde(with = "crate::numfmt::extended")]
    pub rate: f64,
}

impl RateCurve {
    pub fn last(&self) -> Option<&RatePoint> {
        self.points.last()
    }

    /// `|rate(n) − reference|` at block length `n`, if computed.
    pub fn distance_at(&self, n: usize) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.n == n)
            .map(|p| (p.rate - self.reference_rate).abs())
    }

    /// Columns `n,rate_bits,reference_bits`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,rate_bits,reference_bits\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                p.n,
                sig12(p.rate),
                sig12(self.reference_rate)
            ));
        }
        out
    }
}

/// Exact block-product rates: every point is a full solve on `P^⊗n`.
pub fn stein_rate_curve(
    p0: &Hypothesis,
    p1: &Hypothesis,
    epsilon: f64,
    n_max: usize,
) -> Result<RateCurve> {
    check_epsilon(epsilon)?;
    check_dim(p0.dim(), p1.dim())?;
    if n_max == 0 {
        return Err(validation("n_max must be at least 1"));
    }
    let reference_rate = relative_entropy(p0, p1)?.bits();
    let (mut a, mut b) = (p0.clone(), p1.clone());
    let mut points = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            a = tensor(&a, p0)?;
            b = tensor(&b, p1)?;
        }
        let rate = dhte(&a, &b, epsilon)?.bits() / n as f64;
        points.push(RatePoint { n, rate });
    }
    Ok(RateCurve {
        epsilon,
        points,
        reference_rate,
    })
}

fn tensor(a: &Hypothesis, b: &Hypothesis) -> Result<Hypothesis> {
    Ok(match (a, b) {
        (Hypothesis::Classical(x), Hypothesis::Classical(y)) => x.tensor(y)?.into(),
        _ => a.to_density()?.tensor(&b.to_density()?)?.into(),
    })
}

/// Parameters of the pulsed-laser model: pulse level `power`, path loss `c`,
/// additive background `s`, alphabet cutoff `g`, jitter probability `q`,
/// uniform-mixing weight `delta` and `n` time slots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    pub power: usize,
    pub c: usize,
    pub s: usize,
    pub g: usize,
    pub q: f64,
    pub delta: f64,
    pub n: usize,
}

impl LaserParams {
    /// Rejects parameters outside the model's range. `power == c` is allowed
    /// (the pulse is fully absorbed); otherwise `c < power < g − s + c`.
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(domain(format!(
                "jitter probability must lie in (0, 1), got {}",
                self.q
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(domain(format!(
                "mixing weight must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.s > self.g {
            return Err(domain(format!(
                "background {} exceeds cutoff {}",
                self.s, self.g
            )));
        }
        if self.n < 3 {
            return Err(domain("the jittered pulse needs at least 3 slots"));
        }
        if self.power != self.c && !(self.c < self.power && self.power + self.s < self.g + self.c) {
            return Err(domain(format!(
                "power {} outside the admissible range ({}, {})",
                self.power,
                self.c,
                self.g + self.c - self.s
            )));
        }
        Ok(())
    }

    /// Integer powers strictly inside `(c, g − s + c)`.
    pub fn admissible_powers(c: usize, s: usize, g: usize) -> Vec<usize> {
        ((c + 1)..(g + c).saturating_sub(s)).collect()
    }
}

/// Closed form of `D(P0‖P1)` for the laser model, with
/// `κ = δ/(g+1)^n`, `m = 1 − δ + κ`:
/// `m ln(m/κ) − κ ln(1 + (1−δ)(1−q)/κ) − 2κ ln(1 + q(1−δ)/(2κ))`, zero at `P = c`.
pub fn laser_example_kl(params: &LaserParams) -> Result<Bits> {
    params.validate()?;
    if params.power == params.c {
        return Ok(Bits(0.0));
    }
    let LaserParams { q, delta, g, n, .. } = *params;
    let kappa = delta / ((g + 1) as f64).powi(n as i32);
    let m = 1.0 - delta + kappa;
    let nats = m * (m / kappa).ln()
        - kappa * ((1.0 - delta) * (1.0 - q) / kappa).ln_1p()
        - 2.0 * kappa * (q * (1.0 - delta) / (2.0 * kappa)).ln_1p();
    Ok(Bits(nats / std::f64::consts::LN_2))
}
