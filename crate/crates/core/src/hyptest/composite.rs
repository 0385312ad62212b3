//! Primal-dual interior-point solver for composite hypotheses.
//!
//! The test program
//!
//! ```text
//! minimize γ  s.t.  ⟨X, Pᵢ⟩ ≥ 1 − ε,  ⟨X, Qⱼ⟩ ≤ γ,  0 ⪯ X ⪯ I,  γ ≥ 0
//! ```
//!
//! is written in conic form over `y = (coords(X), γ)` with slack
//! `S = F(y) = (X, I − X, ⟨X,Pᵢ⟩ − (1−ε), γ − ⟨X,Qⱼ⟩, γ)`, a block-diagonal
//! cone of two `n×n` PSD blocks and `m₀ + m₁ + 1` scalars. The conjugate
//! variable `W = (W₁, W₂, w, u, u_γ)` carries the multipliers `Z = W₂`,
//! `z = w`, `v = u`. Search directions are HKM with a Mehrotra
//! predictor-corrector; the final iterate is projected onto both feasible
//! sets so that the reported gap is a rigorous bound.
//!
//! `coords` is the orthonormal real basis of Hermitian matrices: diagonal
//! entries, then `√2 Re H_ab`, `√2 Im H_ab` for `a < b`.

use std::f64::consts::SQRT_2;

use super::{
    check_epsilon, dual_objective, DecisionFunction, DualVariables, Operator, TestCertificate,
};
use crate::distributions::Hypothesis;
use crate::error::{check_dim, validation, Error, Result};
use crate::hermitian::{cholesky, hpd_inverse, lower_inverse, CMatrix, HermitianMatrix, C64};
use crate::limits::MAX_SDP_DIM;

/// Gap above which a repaired certificate is refused.
pub const CERTIFICATE_GAP: f64 = 1e-6;
const STEP_FRACTION: f64 = 0.95;
const SLACK_FLOOR: f64 = 1e-2;
/// Barrier gap below which iterates are repaired into certificates.
const REPAIR_FROM: f64 = 1e-4;
const SUPPORT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeOptions {
    pub max_iterations: usize,
    pub gap_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for CompositeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gap_tol: 1e-8,
            feasibility_tol: 1e-9,
        }
    }
}

/// `ξ^ε_H(𝒫‖𝒬)` for finite sets of states, with a dual certificate.
pub fn solve_composite(
    nulls: &[Hypothesis],
    alts: &[Hypothesis],
    epsilon: f64,
    opts: &CompositeOptions,
) -> Result<TestCertificate> {
    check_epsilon(epsilon)?;
    let n = nulls
        .first()
        .ok_or_else(|| validation("no null hypotheses"))?
        .dim();
    if alts.is_empty() {
        return Err(validation("no alternative hypotheses"));
    }
    for h in nulls.iter().chain(alts) {
        check_dim(n, h.dim())?;
    }
    if n > MAX_SDP_DIM {
        return Err(Error::Capacity {
            requested: n,
            max: MAX_SDP_DIM,
        });
    }
    let mut p = Vec::with_capacity(nulls.len());
    for h in nulls {
        let r = h.to_density()?;
        if r.is_subnormalized() {
            return Err(validation("null states must have unit trace"));
        }
        p.push(r.into_matrix().into_matrix());
    }
    let q = alts
        .iter()
        .map(|h| Ok(h.to_density()?.into_matrix().into_matrix()))
        .collect::<Result<Vec<_>>>()?;

    let (cert, iterations) = if epsilon == 0.0 {
        (super::zero_epsilon_certificate(nulls, alts)?, 0)
    } else {
        Problem::new(n, p, q, epsilon).run(nulls, alts, opts)?
    };
    if cert.gap.is_nan() || cert.gap > CERTIFICATE_GAP {
        return Err(Error::NonConvergence {
            iterations,
            gap: cert.gap,
        });
    }
    Ok(cert)
}

/// Block-diagonal element of the cone (or a direction in it). Matrix blocks
/// may be non-Hermitian in intermediate products.
#[derive(Clone, Debug)]
struct Blocks {
    upper: CMatrix,
    lower: CMatrix,
    nulls: Vec<f64>,
    alts: Vec<f64>,
    gamma: f64,
}

impl Blocks {
    fn inner(&self, o: &Self) -> f64 {
        self.upper.inner(&o.upper)
            + self.lower.inner(&o.lower)
            + dot(&self.nulls, &o.nulls)
            + dot(&self.alts, &o.alts)
            + self.gamma * o.gamma
    }

    fn axpy(&mut self, s: f64, o: &Self) {
        self.upper.axpy(s, &o.upper);
        self.lower.axpy(s, &o.lower);
        for (a, b) in self.nulls.iter_mut().zip(&o.nulls) {
            *a += s * b;
        }
        for (a, b) in self.alts.iter_mut().zip(&o.alts) {
            *a += s * b;
        }
        self.gamma += s * o.gamma;
    }

    fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, o);
        out
    }

    /// Blockwise product `self · o`.
    fn mul(&self, o: &Self) -> Self {
        Self {
            upper: self.upper.mul_unchecked(&o.upper),
            lower: self.lower.mul_unchecked(&o.lower),
            nulls: mul(&self.nulls, &o.nulls),
            alts: mul(&self.alts, &o.alts),
            gamma: self.gamma * o.gamma,
        }
    }

    fn herm(mut self) -> Self {
        self.upper = self.upper.hermitian_part();
        self.lower = self.lower.hermitian_part();
        self
    }

    fn max_abs(&self) -> f64 {
        let m = |c: &CMatrix| c.data().iter().fold(0.0f64, |a, z| a.max(z.norm()));
        self.nulls.iter().chain(&self.alts).fold(
            m(&self.upper).max(m(&self.lower)).max(self.gamma.abs()),
            |a, x| a.max(x.abs()),
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Real-basis element of the Hermitian matrices.
#[derive(Clone, Copy)]
enum Basis {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

fn basis(n: usize) -> Vec<Basis> {
    let mut out: Vec<Basis> = (0..n).map(Basis::Diag).collect();
    for a in 0..n {
        for b in a + 1..n {
            out.push(Basis::Re(a, b));
            out.push(Basis::Im(a, b));
        }
    }
    out
}

/// Coordinates of the Hermitian part of `t`.
fn coords(t: &CMatrix, basis: &[Basis]) -> Vec<f64> {
    basis
        .iter()
        .map(|&e| match e {
            Basis::Diag(a) => t[(a, a)].re,
            Basis::Re(a, b) => (t[(a, b)].re + t[(b, a)].re) / SQRT_2,
            Basis::Im(a, b) => (t[(a, b)].im - t[(b, a)].im) / SQRT_2,
        })
        .collect()
}

fn from_coords(x: &[f64], basis: &[Basis], n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for (&e, &v) in basis.iter().zip(x) {
        match e {
            Basis::Diag(a) => m[(a, a)].re += v,
            Basis::Re(a, b) => {
                m[(a, b)].re += v / SQRT_2;
                m[(b, a)].re += v / SQRT_2;
            }
            Basis::Im(a, b) => {
                m[(a, b)].im += v / SQRT_2;
                m[(b, a)].im -= v / SQRT_2;
            }
        }
    }
    m
}

/// `W E S⁻¹` for a basis element `E`, built from its rank-two structure.
fn sandwich(w: &CMatrix, e: Basis, sinv: &CMatrix) -> CMatrix {
    let n = w.rows();
    let mut t = CMatrix::zeros(n, n);
    let mut add = |a: usize, b: usize, c: C64| {
        for i in 0..n {
            let wa = w[(i, a)] * c;
            if wa == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                t[(i, j)] += wa * sinv[(b, j)];
            }
        }
    };
    let r = 1.0 / SQRT_2;
    match e {
        Basis::Diag(a) => add(a, a, C64::new(1.0, 0.0)),
        Basis::Re(a, b) => {
            add(a, b, C64::new(r, 0.0));
            add(b, a, C64::new(r, 0.0));
        }
        Basis::Im(a, b) => {
            add(a, b, C64::new(0.0, r));
            add(b, a, C64::new(0.0, -r));
        }
    }
    t
}

struct Problem {
    n: usize,
    basis: Vec<Basis>,
    p: Vec<CMatrix>,
    q: Vec<CMatrix>,
    pc: Vec<Vec<f64>>,
    qc: Vec<Vec<f64>>,
    epsilon: f64,
    target: f64,
    support: HermitianMatrix,
    identity: HermitianMatrix,
}

impl Problem {
    fn new(n: usize, p: Vec<CMatrix>, q: Vec<CMatrix>, epsilon: f64) -> Self {
        let basis = basis(n);
        let pc = p.iter().map(|m| coords(m, &basis)).collect();
        let qc = q.iter().map(|m| coords(m, &basis)).collect();
        let mut sum = CMatrix::zeros(n, n);
        for m in &p {
            sum.axpy(1.0, m);
        }
        let spec = HermitianMatrix::from_hermitian_part(&sum).eigendecompose();
        let top = spec.eigenvalues.first().copied().unwrap_or(0.0);
        let range: Vec<usize> = (0..n)
            .filter(|&k| spec.eigenvalues[k] > SUPPORT_TOL * top)
            .collect();
        Self {
            support: spec.projector(&range),
            identity: HermitianMatrix::identity(n),
            n,
            basis,
            p,
            q,
            pc,
            qc,
            epsilon,
            target: 1.0 - epsilon,
        }
    }

    fn nx(&self) -> usize {
        self.basis.len()
    }

    fn cone_order(&self) -> f64 {
        (2 * self.n + self.p.len() + self.q.len() + 1) as f64
    }

    /// Linear part of `F`.
    fn f_lin(&self, y: &[f64]) -> Blocks {
        let (x, g) = y.split_at(self.nx());
        let xm = from_coords(x, &self.basis, self.n);
        Blocks {
            lower: xm.scale(-1.0),
            upper: xm,
            nulls: self.pc.iter().map(|c| dot(c, x)).collect(),
            alts: self.qc.iter().map(|c| g[0] - dot(c, x)).collect(),
            gamma: g[0],
        }
    }

    fn f(&self, y: &[f64]) -> Blocks {
        let mut s = self.f_lin(y);
        for i in 0..self.n {
            s.lower[(i, i)].re += 1.0;
        }
        for v in &mut s.nulls {
            *v -= self.target;
        }
        s
    }

    /// Adjoint-side map `𝒜(W) = (−coords(G(W)), −(Σu + u_γ))` with
    /// `G(W) = W₁ − W₂ + Σ wᵢPᵢ − Σ uⱼQⱼ`.
    fn op_a(&self, w: &Blocks) -> Vec<f64> {
        let mut out = coords(&w.upper, &self.basis);
        for (o, l) in out.iter_mut().zip(coords(&w.lower, &self.basis)) {
            *o -= l;
        }
        for (wi, c) in w.nulls.iter().zip(&self.pc) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += wi * ci;
            }
        }
        for (uj, c) in w.alts.iter().zip(&self.qc) {
            for (o, cj) in out.iter_mut().zip(c) {
                *o -= uj * cj;
            }
        }
        for o in &mut out {
            *o = -*o;
        }
        out.push(-(w.alts.iter().sum::<f64>() + w.gamma));
        out
    }

    fn b(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.nx() + 1];
        b[self.nx()] = -1.0;
        b
    }

    /// Strictly feasible multipliers: `z = v = δ`, `u_γ = ½`,
    /// `W₂ = 2δH⁺ + δI`, `W₁ = δ(2H⁺ + I − H)` with `H = ΣPᵢ − ΣQⱼ`.
    fn slater_point(&self) -> Blocks {
        let n = self.n;
        let delta = 1.0 / (2.0 * self.q.len() as f64);
        let mut h = CMatrix::zeros(n, n);
        for m in &self.p {
            h.axpy(1.0, m);
        }
        for m in &self.q {
            h.axpy(-1.0, m);
        }
        let hp = HermitianMatrix::from_hermitian_part(&h)
            .positive_part()
            .into_matrix();
        let mut lower = hp.scale(2.0 * delta);
        let mut upper = lower.clone();
        upper.axpy(-delta, &h);
        for i in 0..n {
            lower[(i, i)].re += delta;
            upper[(i, i)].re += delta;
        }
        Blocks {
            upper: upper.hermitian_part(),
            lower: lower.hermitian_part(),
            nulls: vec![delta; self.p.len()],
            alts: vec![delta; self.q.len()],
            gamma: 0.5,
        }
    }

    fn initial_y(&self) -> Vec<f64> {
        let eps = self.epsilon;
        let x = CMatrix::identity(self.n).scale(1.0 - eps / 2.0);
        let mut y = coords(&x, &self.basis);
        y.push(1.0);
        y
    }

    /// Runs the interior-point iteration and returns the best repaired
    /// certificate seen, with the iteration count. Once the barrier gap is
    /// small every iterate is repaired; the run stops when the repaired gap
    /// reaches `gap_tol`, since further iterations mostly trade primal
    /// feasibility for complementarity in floating point.
    fn run(
        &self,
        nulls: &[Hypothesis],
        alts: &[Hypothesis],
        opts: &CompositeOptions,
    ) -> Result<(TestCertificate, usize)> {
        let nx = self.nx();
        let b = self.b();
        let mut w = self.slater_point();
        let mut y = self.initial_y();
        let mut s = self.f(&y);
        for blk in [&mut s.upper, &mut s.lower] {
            let min = HermitianMatrix::from_hermitian_part(blk).min_eigenvalue();
            if min < SLACK_FLOOR {
                for i in 0..self.n {
                    blk[(i, i)].re += SLACK_FLOOR - min;
                }
            }
        }
        for v in s
            .nulls
            .iter_mut()
            .chain(s.alts.iter_mut())
            .chain(std::iter::once(&mut s.gamma))
        {
            *v = v.max(SLACK_FLOOR);
        }

        let mut best: Option<TestCertificate> = None;
        let consider =
            |best: &mut Option<TestCertificate>, w: &Blocks, y: &[f64]| -> Result<bool> {
                let c = self.certificate(nulls, alts, w, y)?;
                let done = c.gap <= opts.gap_tol;
                if best.as_ref().is_none_or(|b| c.gap < b.gap) {
                    *best = Some(c);
                }
                Ok(done)
            };
        let mut iterations = opts.max_iterations;
        for iter in 0..opts.max_iterations {
            let gap = w.inner(&s);
            let rp: Vec<f64> = b
                .iter()
                .zip(self.op_a(&w))
                .map(|(bi, ai)| bi - ai)
                .collect();
            let rd = self.f(&y).sub(&s);
            let feas = rp
                .iter()
                .fold(0.0f64, |a, x| a.max(x.abs()))
                .max(rd.max_abs());
            if (gap <= REPAIR_FROM || feas <= opts.feasibility_tol && gap <= opts.gap_tol)
                && consider(&mut best, &w, &y)?
            {
                iterations = iter;
                break;
            }
            let mu = gap / self.cone_order();

            // A breakdown here means the iterate sits on the cone boundary;
            // certificate repair decides whether it is good enough.
            let (Some(up), Some(low)) = (hpd_inverse(&s.upper), hpd_inverse(&s.lower)) else {
                iterations = iter;
                break;
            };
            let sinv = Blocks {
                upper: up,
                lower: low,
                nulls: s.nulls.iter().map(|x| 1.0 / x).collect(),
                alts: s.alts.iter().map(|x| 1.0 / x).collect(),
                gamma: 1.0 / s.gamma,
            };
            let Some(lu) = Lu::factor(self.schur(&w, &sinv), nx + 1) else {
                iterations = iter;
                break;
            };

            let direction = |sigma_mu: f64, corr: Option<&Blocks>| {
                // K = W Rd S⁻¹ − σμ S⁻¹ + corr S⁻¹
                let mut k = w.mul(&rd).mul(&sinv);
                k.axpy(-sigma_mu, &sinv);
                if let Some(c) = corr {
                    k.axpy(1.0, &c.mul(&sinv));
                }
                let rhs: Vec<f64> = b.iter().zip(self.op_a(&k)).map(|(x, y)| x + y).collect();
                let dy = lu.solve(rhs);
                let mut ds = self.f_lin(&dy);
                ds.axpy(1.0, &rd);
                // ΔW = herm((σμI − WS − corr − WΔS) S⁻¹)
                let mut r = w.mul(&s);
                r.axpy(1.0, &w.mul(&ds));
                if let Some(c) = corr {
                    r.axpy(1.0, c);
                }
                let mut dw = negate(r.mul(&sinv));
                dw.axpy(sigma_mu, &sinv);
                (dy, ds, dw.herm())
            };

            let (_, ds_a, dw_a) = direction(0.0, None);
            let ap = step_length(&w, &dw_a);
            let ad = step_length(&s, &ds_a);
            let mut wa = w.clone();
            wa.axpy(ap, &dw_a);
            let mut sa = s.clone();
            sa.axpy(ad, &ds_a);
            let mu_aff = wa.inner(&sa) / self.cone_order();
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            let corr = dw_a.mul(&ds_a);
            let (dy, ds, dw) = direction(sigma * mu, Some(&corr));
            let ap = step_length(&w, &dw);
            let ad = step_length(&s, &ds);
            if ap < 1e-12 && ad < 1e-12 {
                iterations = iter;
                break;
            }
            w.axpy(ap, &dw);
            s.axpy(ad, &ds);
            for (yi, d) in y.iter_mut().zip(&dy) {
                *yi += ad * d;
            }
        }
        if best.is_none() {
            consider(&mut best, &w, &y)?;
        }
        Ok((best.expect("certificate recorded"), iterations))
    }

    /// Schur complement `M_kl = ⟨A_k, W A_l S⁻¹⟩` in row-major order.
    fn schur(&self, w: &Blocks, sinv: &Blocks) -> Vec<f64> {
        let nx = self.nx();
        let m = nx + 1;
        let mut out = vec![0.0; m * m];
        let pw: Vec<f64> = mul(&w.nulls, &sinv.nulls);
        let qw: Vec<f64> = mul(&w.alts, &sinv.alts);
        for (l, &e) in self.basis.iter().enumerate() {
            let mut col = coords(&sandwich(&w.upper, e, &sinv.upper), &self.basis);
            let low = coords(&sandwich(&w.lower, e, &sinv.lower), &self.basis);
            for (c, x) in col.iter_mut().zip(low) {
                *c += x;
            }
            for (c, &f) in self.pc.iter().zip(&pw) {
                let s = c[l] * f;
                if s != 0.0 {
                    for (o, ci) in col.iter_mut().zip(c) {
                        *o += s * ci;
                    }
                }
            }
            let mut g = 0.0;
            for (c, &f) in self.qc.iter().zip(&qw) {
                let s = c[l] * f;
                if s != 0.0 {
                    for (o, ci) in col.iter_mut().zip(c) {
                        *o += s * ci;
                    }
                    g -= s;
                }
            }
            for (k, v) in col.into_iter().enumerate() {
                out[k * m + l] = v;
            }
            out[nx * m + l] = g;
            out[l * m + nx] = g;
        }
        out[nx * m + nx] = qw.iter().sum::<f64>() + w.gamma * sinv.gamma;
        out
    }

    /// Projects the final iterate onto both feasible sets and assembles the
    /// certificate.
    fn certificate(
        &self,
        nulls: &[Hypothesis],
        alts: &[Hypothesis],
        w: &Blocks,
        y: &[f64],
    ) -> Result<TestCertificate> {
        let n = self.n;
        let x = HermitianMatrix::from_hermitian_part(&from_coords(&y[..self.nx()], &self.basis, n));
        let x = x.eigendecompose().map(|l| l.clamp(0.0, 1.0));
        // Mix toward the projector onto the null supports, which meets every
        // null constraint with equality at ε = 0 and is optimal there.
        let anchor = if self
            .p
            .iter()
            .all(|p| self.support.as_matrix().inner(p) >= self.target)
        {
            &self.support
        } else {
            &self.identity
        };
        let mut theta = 0.0f64;
        for p in &self.p {
            let a = x.as_matrix().inner(p);
            let c = anchor.as_matrix().inner(p);
            if a < self.target && c > a {
                theta = theta.max((self.target - a) / (c - a));
            }
        }
        let theta = theta.min(1.0);
        let x = if theta > 0.0 {
            x.scale(1.0 - theta).add(&anchor.scale(theta))?
        } else {
            x
        };
        let beta = self
            .q
            .iter()
            .map(|q| x.as_matrix().inner(q))
            .fold(f64::NEG_INFINITY, f64::max);
        let alpha = 1.0
            - self
                .p
                .iter()
                .map(|p| x.as_matrix().inner(p))
                .fold(f64::INFINITY, f64::min);

        let z: Vec<f64> = w.nulls.iter().map(|v| v.max(0.0)).collect();
        let mut v: Vec<f64> = w.alts.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = v.iter().sum();
        if total > 1.0 {
            v.iter_mut().for_each(|x| *x /= total);
        }
        let (dual_value, big_z) = dual_objective(nulls, &z, alts, &v, self.epsilon)?;
        Ok(TestCertificate {
            epsilon: self.epsilon,
            beta,
            alpha,
            dual_value,
            gap: beta - dual_value,
            dual: DualVariables {
                z,
                v,
                big_z: Operator::Dense(big_z),
            },
            decision: DecisionFunction::quantum(x)?,
        })
    }
}

fn negate(mut b: Blocks) -> Blocks {
    b.upper = b.upper.scale(-1.0);
    b.lower = b.lower.scale(-1.0);
    b.nulls.iter_mut().for_each(|x| *x = -*x);
    b.alts.iter_mut().for_each(|x| *x = -*x);
    b.gamma = -b.gamma;
    b
}

/// Largest `α ≤ 1` keeping `x + α d` in the cone, shortened by
/// [`STEP_FRACTION`].
fn step_length(x: &Blocks, d: &Blocks) -> f64 {
    let mut limit = f64::INFINITY;
    for (xm, dm) in [(&x.upper, &d.upper), (&x.lower, &d.lower)] {
        if let Some(l) = cholesky(xm) {
            let li = lower_inverse(&l);
            let m = li.mul_unchecked(dm).mul_unchecked(&li.adjoint());
            let min = HermitianMatrix::from_hermitian_part(&m).min_eigenvalue();
            if min < 0.0 {
                limit = limit.min(-1.0 / min);
            }
        } else {
            return 0.0;
        }
    }
    let scalars = x
        .nulls
        .iter()
        .zip(&d.nulls)
        .chain(x.alts.iter().zip(&d.alts));
    for (&xi, &di) in scalars.chain(std::iter::once((&x.gamma, &d.gamma))) {
        if di < 0.0 {
            limit = limit.min(-xi / di);
        }
    }
    (STEP_FRACTION * limit).min(1.0)
}

/// Dense LU factorization with partial pivoting.
struct Lu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<Self> {
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in 0..n {
            let (p, max) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if max.is_nan() || max <= scale * 1e-300 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                if f == 0.0 {
                    continue;
                }
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Some(Self { n, a, piv })
    }

    fn solve(&self, b: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.a[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.a[i * n + i];
        }
        x
    }
}
