//! Sender-side design: pick the device distribution that a receiver can best
//! tell apart from the null, or that a null-hypothesis tester is most likely
//! to miss.
//!
//! `D(N(star) ‖ N(x))` is convex in `x`, so its maximum over a polytope sits
//! at a vertex and [`optimize_source_exact`] enumerates vertices. The type-II
//! error `ξ(P0 ‖ N(x))` is a minimum of linear functions of `x`, hence
//! concave, so its minimum over a polytope also sits at a vertex;
//! [`inscribed_matter_design`] starts its alternating scheme from every
//! vertex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::ClassicalChannel;
use crate::distributions::{ClassicalDistribution, SequenceSpace};
use crate::divergences::kl;
use crate::error::{check_dim, validation, Error, Result};
use crate::hyptest::{check_epsilon, solve_classical, TestCertificate};

/// Largest polytope dimension handled by vertex enumeration.
pub const MAX_VERTEX_DIM: usize = 12;
/// Upper bound on the number of active-set combinations tried.
pub const MAX_ACTIVE_SETS: usize = 5_000_000;
/// Slack allowed on every constraint when testing membership.
pub const FEAS_TOL: f64 = 1e-9;

/// Objectives this close (relative) count as tied; ties go to the
/// lexicographically first vertex.
const TIE_TOL: f64 = 1e-12;
const MAX_ROUNDS: usize = 100;
const ROUND_TOL: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const MAX_ASCENT_STEPS: usize = 2000;
const DYKSTRA_SWEEPS: usize = 20_000;

/// `a · x ≤ b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// `a · x ≤ budget`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub a: Vec<f64>,
    pub budget: f64,
}

/// Device distributions `x` on `dim` outcomes: the probability simplex cut
/// by linear inequalities and an optional energy budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPolytope {
    pub dim: usize,
    #[serde(default)]
    pub ineq: Vec<Halfspace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<Energy>,
}

impl ConstraintPolytope {
    pub fn simplex(dim: usize) -> Self {
        Self {
            dim,
            ineq: Vec::new(),
            energy: None,
        }
    }

    pub fn with_ineq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.ineq.push(Halfspace { a, b });
        self
    }

    pub fn with_energy(mut self, a: Vec<f64>, budget: f64) -> Self {
        self.energy = Some(Energy { a, budget });
        self
    }

    /// The single point `p`, written as `x_i ≤ p_i` for every `i`.
    pub fn singleton(p: &[f64]) -> Self {
        let mut poly = Self::simplex(p.len());
        for (i, &v) in p.iter().enumerate() {
            let mut a = vec![0.0; p.len()];
            a[i] = 1.0;
            poly = poly.with_ineq(a, v);
        }
        poly
    }

    /// Checks shapes and finiteness; feasibility is established by
    /// [`vertices`](Self::vertices).
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(validation("polytope dimension must be positive"));
        }
        for row in self.rows_raw() {
            check_dim(self.dim, row.0.len())?;
            if row.0.iter().chain([&row.1]).any(|v| !v.is_finite()) {
                return Err(validation("polytope coefficients must be finite"));
            }
        }
        Ok(())
    }

    fn rows_raw(&self) -> impl Iterator<Item = (&Vec<f64>, f64)> {
        self.ineq
            .iter()
            .map(|h| (&h.a, h.b))
            .chain(self.energy.iter().map(|e| (&e.a, e.budget)))
    }

    /// All inequality rows including `−x_i ≤ 0`.
    fn rows(&self) -> Vec<(Vec<f64>, f64)> {
        let mut rows: Vec<(Vec<f64>, f64)> = (0..self.dim)
            .map(|i| {
                let mut a = vec![0.0; self.dim];
                a[i] = -1.0;
                (a, 0.0)
            })
            .collect();
        rows.extend(self.rows_raw().map(|(a, b)| (a.clone(), b)));
        rows
    }

    /// Largest constraint violation of `x` (simplex included).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let sum = (x.iter().sum::<f64>() - 1.0).abs();
        self.rows()
            .iter()
            .map(|(a, b)| dot(a, x) - b)
            .fold(sum, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && self.violation(x) <= tol
    }

    /// Extreme points in lexicographic order. Errors when the dimension
    /// exceeds [`MAX_VERTEX_DIM`] or the polytope is empty.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        if self.dim > MAX_VERTEX_DIM {
            return Err(Error::Capacity {
                requested: self.dim,
                max: MAX_VERTEX_DIM,
            });
        }
        let rows = self.rows();
        let k = self.dim - 1;
        if binomial(rows.len(), k) > MAX_ACTIVE_SETS as f64 {
            return Err(Error::Capacity {
                requested: rows.len(),
                max: MAX_ACTIVE_SETS,
            });
        }
        let mut found: Vec<Vec<f64>> = Vec::new();
        for_each_subset(rows.len(), k, &mut |active| {
            let mut m: Vec<Vec<f64>> = active.iter().map(|&r| rows[r].0.clone()).collect();
            let mut rhs: Vec<f64> = active.iter().map(|&r| rows[r].1).collect();
            m.push(vec![1.0; self.dim]);
            rhs.push(1.0);
            let Some(x) = solve_dense(m, rhs) else { return };
            if self.violation(&x) > FEAS_TOL {
                return;
            }
            let x = clean(x);
            if !found.iter().any(|y| max_diff(y, &x) <= FEAS_TOL) {
                found.push(x);
            }
        });
        if found.is_empty() {
            return Err(Error::Infeasible("constraint polytope is empty".into()));
        }
        found.sort_by(|a, b| lex_cmp(a, b));
        Ok(found)
    }

    /// Euclidean projection onto the polytope by Dykstra's alternating
    /// scheme over the simplex and each halfspace.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, y.len())?;
        let halfspaces: Vec<(Vec<f64>, f64)> =
            self.rows_raw().map(|(a, b)| (a.clone(), b)).collect();
        if halfspaces.is_empty() {
            return Ok(project_simplex(y));
        }
        let sets = halfspaces.len() + 1;
        let mut x = y.to_vec();
        let mut corr = vec![vec![0.0; self.dim]; sets];
        for _ in 0..DYKSTRA_SWEEPS {
            let before = x.clone();
            for (s, c) in corr.iter_mut().enumerate() {
                let shifted: Vec<f64> = x.iter().zip(c.iter()).map(|(a, b)| a + b).collect();
                let p = if s == 0 {
                    project_simplex(&shifted)
                } else {
                    let (a, b) = &halfspaces[s - 1];
                    project_halfspace(&shifted, a, *b)
                };
                for i in 0..self.dim {
                    c[i] = shifted[i] - p[i];
                }
                x = p;
            }
            if max_diff(&before, &x) <= 1e-15 && self.violation(&x) <= FEAS_TOL {
                return Ok(clean(x));
            }
        }
        if self.violation(&x) <= FEAS_TOL {
            Ok(clean(x))
        } else {
            Err(Error::NonConvergence {
                iterations: DYKSTRA_SWEEPS,
                gap: self.violation(&x),
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMethod {
    VertexEnumeration,
    MultiStartGradient,
    Alternating,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignResult {
    pub best_device: ClassicalDistribution,
    /// Bits; `+∞` when the optimum escapes the null's support.
    pub objective: f64,
    pub method: DesignMethod,
    pub iterations: usize,
    /// Only vertex enumeration of a convex objective claims global optimality.
    pub certified_optimal: bool,
}

/// `D(N(star) ‖ N(x))` in bits.
pub fn source_objective(
    channel: &ClassicalChannel,
    star: &ClassicalDistribution,
    x: &[f64],
) -> Result<f64> {
    let a = channel.apply(star)?;
    objective_against(channel, &a, x)
}

fn objective_against(
    channel: &ClassicalChannel,
    a: &ClassicalDistribution,
    x: &[f64],
) -> Result<f64> {
    let b = ClassicalDistribution::with_deficit(a.space(), channel.apply_vec(x)?)?;
    Ok(kl(a, &b)?.bits())
}

fn device(x: Vec<f64>, star: &ClassicalDistribution) -> Result<ClassicalDistribution> {
    ClassicalDistribution::new(star.space(), x)
}

fn check_source_shapes(
    channel: &ClassicalChannel,
    star: &ClassicalDistribution,
    poly: &ConstraintPolytope,
) -> Result<()> {
    check_dim(channel.input_dim(), star.dim())?;
    check_dim(star.dim(), poly.dim)?;
    star.require_normalized("reference distribution")
}

/// Exact maximization of `D(N(star) ‖ N(P_D))` over the vertices of `C`.
/// Ties resolve to the lexicographically first vertex; an infinite optimum
/// returns its witness vertex.
pub fn optimize_source_exact(
    channel: &ClassicalChannel,
    star: &ClassicalDistribution,
    poly: &ConstraintPolytope,
) -> Result<DesignResult> {
    check_source_shapes(channel, star, poly)?;
    let vertices = poly.vertices()?;
    let a = channel.apply(star)?;
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for v in &vertices {
        let f = objective_against(channel, &a, v)?;
        if best.is_none_or(|(b, _)| f > b + TIE_TOL * b.abs().max(1.0)) {
            best = Some((f, v));
        }
    }
    let (objective, x) = best.expect("nonempty vertex list");
    Ok(DesignResult {
        best_device: device(x.clone(), star)?,
        objective,
        method: DesignMethod::VertexEnumeration,
        iterations: vertices.len(),
        certified_optimal: true,
    })
}

/// Multi-start projected gradient ascent with Armijo backtracking. Start 0
/// is the projection of the uniform vector; the others project Dirichlet(1)
/// draws from a ChaCha8 stream seeded by `seed`.
pub fn optimize_source_gradient(
    channel: &ClassicalChannel,
    star: &ClassicalDistribution,
    poly: &ConstraintPolytope,
    restarts: usize,
    seed: u64,
) -> Result<DesignResult> {
    check_source_shapes(channel, star, poly)?;
    poly.validate()?;
    if restarts == 0 {
        return Err(validation("at least one restart is required"));
    }
    let a = channel.apply(star)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    for r in 0..restarts {
        let start: Vec<f64> = if r == 0 {
            vec![1.0 / poly.dim as f64; poly.dim]
        } else {
            let e: Vec<f64> = (0..poly.dim)
                .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                .collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        };
        let x0 = poly.project(&start)?;
        let (f, x, steps) = ascend(channel, &a, poly, x0)?;
        iterations += steps;
        let better = match &best {
            None => true,
            Some((bf, bx)) => f > *bf || (f == *bf && lex_cmp(&x, bx).is_lt()),
        };
        if better {
            best = Some((f, x));
        }
    }
    let (objective, x) = best.expect("at least one restart");
    Ok(DesignResult {
        best_device: device(x, star)?,
        objective,
        method: DesignMethod::MultiStartGradient,
        iterations,
        certified_optimal: false,
    })
}

fn ascend(
    channel: &ClassicalChannel,
    a: &ClassicalDistribution,
    poly: &ConstraintPolytope,
    mut x: Vec<f64>,
) -> Result<(f64, Vec<f64>, usize)> {
    let mut f = objective_against(channel, a, &x)?;
    for step in 0..MAX_ASCENT_STEPS {
        if f.is_infinite() {
            return Ok((f, x, step));
        }
        let grad = gradient(channel, a, &x)?;
        let mut t = 1.0;
        let mut moved = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + t * gi).collect();
            let y = poly.project(&trial)?;
            let fy = objective_against(channel, a, &y)?;
            let lin: f64 = grad
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(g, (yi, xi))| g * (yi - xi))
                .sum();
            // An infinite value means the step left the support-safe region
            // of the null; keep it only if it is a genuine optimum.
            if fy >= f + ARMIJO * lin && lin > 0.0 {
                moved = Some((fy, y));
                break;
            }
            t *= 0.5;
        }
        match moved {
            Some((fy, y)) if max_diff(&x, &y) > 1e-13 => {
                x = y;
                f = fy;
            }
            _ => return Ok((f, x, step)),
        }
    }
    Ok((f, x, MAX_ASCENT_STEPS))
}

/// `∂/∂x_i D(a ‖ Nx) = −Σ_y a_y N_{y i} / (Nx)_y`, in bits.
fn gradient(channel: &ClassicalChannel, a: &ClassicalDistribution, x: &[f64]) -> Result<Vec<f64>> {
    let nx = channel.apply_vec(x)?;
    let ratio: Vec<f64> = a
        .mass()
        .iter()
        .zip(&nx)
        .map(|(&ay, &b)| if ay == 0.0 { 0.0 } else { -ay / b })
        .collect();
    let g = channel.adjoint_vec(&ratio)?;
    Ok(g.into_iter().map(|v| v / std::f64::consts::LN_2).collect())
}

/// How the peak-power bound enters the polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PeakConstraint {
    /// No mass on outcomes whose cost exceeds `max`.
    Support { max: f64 },
    /// A user-supplied linear form `a · x ≤ max`.
    Linear { a: Vec<f64>, max: f64 },
}

/// Average- and peak-power constrained source design over the noise stack
/// `stages = [N_s, N_t, N_r]` (application order), solved exactly.
pub fn em_power_design(
    stages: &[ClassicalChannel],
    star: &ClassicalDistribution,
    avg_power: f64,
    peak: &PeakConstraint,
    power_cost: &[f64],
) -> Result<DesignResult> {
    let channel = ClassicalChannel::chain(stages)?;
    let poly = power_polytope(star.dim(), avg_power, peak, power_cost)?;
    optimize_source_exact(&channel, star, &poly)
}

/// The polytope `{x : f·x ≤ avg, peak}` used by [`em_power_design`].
pub fn power_polytope(
    dim: usize,
    avg_power: f64,
    peak: &PeakConstraint,
    cost: &[f64],
) -> Result<ConstraintPolytope> {
    check_dim(dim, cost.len())?;
    let mut poly = ConstraintPolytope::simplex(dim).with_ineq(cost.to_vec(), avg_power);
    match peak {
        PeakConstraint::Support { max } => {
            for (i, &c) in cost.iter().enumerate() {
                if c > *max {
                    let mut a = vec![0.0; dim];
                    a[i] = 1.0;
                    poly = poly.with_ineq(a, 0.0);
                }
            }
        }
        PeakConstraint::Linear { a, max } => poly = poly.with_ineq(a.clone(), *max),
    }
    Ok(poly)
}

/// Alternating minimization of `ξ^ε_H(P0 ‖ N(P_d))` over designs with
/// `E · P_d ≤ budget`: solve the test for the current design, then the
/// linear program `min ⟨P_d, N†A⟩` over the energy polytope. Runs from every
/// vertex and keeps the best stationary point; never claims global
/// optimality.
pub fn inscribed_matter_design(
    noise: &ClassicalChannel,
    null: &ClassicalDistribution,
    epsilon: f64,
    energy: &[f64],
    budget: f64,
) -> Result<(DesignResult, TestCertificate)> {
    check_epsilon(epsilon)?;
    check_dim(noise.output_dim(), null.dim())?;
    null.require_normalized("null distribution")?;
    let poly = ConstraintPolytope::simplex(noise.input_dim()).with_energy(energy.to_vec(), budget);
    let vertices = poly.vertices().map_err(|e| match e {
        Error::Infeasible(_) => {
            Error::Infeasible(format!("no design meets the energy budget {budget}"))
        }
        other => other,
    })?;
    let design_space = SequenceSpace::flat(noise.input_dim())?;
    let test = |x: &[f64]| -> Result<TestCertificate> {
        let out = noise.apply(&ClassicalDistribution::new(design_space, x.to_vec())?)?;
        let out = ClassicalDistribution::with_deficit(null.space(), out.into_mass())?;
        solve_classical(null, &out, epsilon)
    };

    let mut best: Option<(Vec<f64>, TestCertificate)> = None;
    let mut rounds_total = 0;
    for start in &vertices {
        let mut x = start.clone();
        let mut cert = test(&x)?;
        for _ in 0..MAX_ROUNDS {
            rounds_total += 1;
            let weights = cert
                .decision
                .weights()
                .expect("classical solver returns weights")
                .to_vec();
            let cost = noise.adjoint_vec(&weights)?;
            let y = argmin_linear(&vertices, &cost);
            let next = test(y)?;
            let improvement = cert.beta - next.beta;
            if improvement > 0.0 {
                x = y.clone();
                cert = next;
            }
            if improvement < ROUND_TOL {
                break;
            }
        }
        let better = match &best {
            None => true,
            Some((bx, bc)) => {
                cert.beta < bc.beta || (cert.beta == bc.beta && lex_cmp(&x, bx).is_lt())
            }
        };
        if better {
            best = Some((x, cert));
        }
    }
    let (x, cert) = best.expect("nonempty vertex list");
    Ok((
        DesignResult {
            best_device: ClassicalDistribution::new(design_space, x)?,
            objective: cert.beta,
            method: DesignMethod::Alternating,
            iterations: rounds_total,
            certified_optimal: false,
        },
        cert,
    ))
}

/// The lexicographically first vertex minimizing `cost · v`.
fn argmin_linear<'a>(vertices: &'a [Vec<f64>], cost: &[f64]) -> &'a Vec<f64> {
    let mut best = &vertices[0];
    let mut best_val = dot(best, cost);
    for v in &vertices[1..] {
        let val = dot(v, cost);
        if val < best_val - 1e-15 {
            best = v;
            best_val = val;
        }
    }
    best
}

/// Drops rounding-level negative entries and restores unit mass.
fn clean(mut x: Vec<f64>) -> Vec<f64> {
    for v in &mut x {
        *v = v.max(0.0);
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            if factor != 0.0 {
                for c in col..n {
                    m[r][c] -= factor * m[col][c];
                }
                rhs[r] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &v) in u.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

fn project_halfspace(y: &[f64], a: &[f64], b: f64) -> Vec<f64> {
    let excess = dot(a, y) - b;
    let norm2 = dot(a, a);
    if excess <= 0.0 || norm2 == 0.0 {
        return y.to_vec();
    }
    y.iter()
        .zip(a)
        .map(|(yi, ai)| yi - excess / norm2 * ai)
        .collect()
}
