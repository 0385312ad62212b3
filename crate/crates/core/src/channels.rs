//! Completely positive trace non-increasing maps.
//!
//! Classical channels act on probability vectors as column-substochastic
//! matrices (`out[y] = Σ_x W[y][x] in[x]`). Per-slot maps are stored once and
//! lifted to sequence spaces by acting on each slot in turn, so the full
//! `d^n × d^n` matrix is never materialized. Quantum channels are Kraus
//! families.

use crate::distributions::{ClassicalDistribution, DensityOperator, Hypothesis, SequenceSpace};
use crate::error::{check_dim, domain, validation, Result};
use crate::hermitian::{CMatrix, HermitianMatrix, C64};
use crate::limits;

/// Slack allowed on column sums and on `Σ K†K ⪯ I`.
pub const CHANNEL_TOL: f64 = 1e-12;
const KRAUS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    /// `rows[y][x] = W(y|x)`.
    Dense(Vec<Vec<f64>>),
    Lifted {
        slot: Box<ClassicalChannel>,
        slots: usize,
    },
    Mix {
        delta: f64,
    },
    Projection {
        keep: Vec<bool>,
    },
    /// Stages in application order.
    Chain(Vec<ClassicalChannel>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalChannel {
    input_dim: usize,
    output_dim: usize,
    stochastic: bool,
    kind: Kind,
}

impl ClassicalChannel {
    /// Channel from an explicit transition matrix, `rows[y][x] = W(y|x)`.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let output_dim = rows.len();
        let input_dim = rows.first().map_or(0, Vec::len);
        if output_dim == 0 || input_dim == 0 {
            return Err(validation("empty transition matrix"));
        }
        if rows.iter().any(|r| r.len() != input_dim) {
            return Err(validation("ragged transition matrix"));
        }
        let mut stochastic = true;
        for x in 0..input_dim {
            let mut sum = 0.0;
            for (y, row) in rows.iter().enumerate() {
                let w = row[x];
                if !w.is_finite() || w < 0.0 {
                    return Err(validation(format!(
                        "W[{y}][{x}] = {w} is not a nonnegative number"
                    )));
                }
                sum += w;
            }
            if sum > 1.0 + CHANNEL_TOL {
                return Err(validation(format!("column {x} sums to {sum} > 1")));
            }
            stochastic &= (sum - 1.0).abs() <= CHANNEL_TOL;
        }
        Ok(Self {
            input_dim,
            output_dim,
            stochastic,
            kind: Kind::Dense(rows),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::deterministic(dim, dim, |x| x)
    }

    fn deterministic(input_dim: usize, output_dim: usize, f: impl Fn(usize) -> usize) -> Self {
        let mut rows = vec![vec![0.0; input_dim]; output_dim];
        for x in 0..input_dim {
            rows[f(x)][x] = 1.0;
        }
        Self {
            input_dim,
            output_dim,
            stochastic: true,
            kind: Kind::Dense(rows),
        }
    }

    /// Per-slot loss on power levels `0..=g`: `y ↦ max(y − c, 0)`.
    pub fn loss_map(c: usize, g: usize) -> Self {
        Self::deterministic(g + 1, g + 1, |y| y.saturating_sub(c))
    }

    /// Per-slot additive background: `y ↦ min(y + s, g)`.
    pub fn saturating_add_map(s: usize, g: usize) -> Result<Self> {
        if s > g {
            return Err(domain(format!("additive level {s} exceeds cutoff {g}")));
        }
        Ok(Self::deterministic(g + 1, g + 1, |y| (y + s).min(g)))
    }

    /// `q ↦ (1 − δ) q + δ/dim · 1`. `δ = 1` is accepted as full mixing.
    pub fn uniform_mix_map(delta: f64, dim: usize) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(domain(format!(
                "mixing weight must lie in (0, 1], got {delta}"
            )));
        }
        if dim == 0 {
            return Err(validation("dimension must be positive"));
        }
        Ok(Self {
            input_dim: dim,
            output_dim: dim,
            stochastic: true,
            kind: Kind::Mix { delta },
        })
    }

    /// Zeroes every outcome rejected by `keep`, without renormalizing.
    pub fn truncate_projection(dim: usize, keep: impl Fn(usize) -> bool) -> Self {
        let keep: Vec<bool> = (0..dim).map(keep).collect();
        Self {
            input_dim: dim,
            output_dim: dim,
            stochastic: keep.iter().all(|&k| k),
            kind: Kind::Projection { keep },
        }
    }

    /// Applies this single-slot channel independently to each of `slots` slots.
    pub fn lift(&self, slots: usize) -> Result<Self> {
        if slots == 0 {
            return Err(domain("slot count must be positive"));
        }
        let cap = |d: usize| {
            limits::checked_pow(d, slots)
                .ok_or(crate::Error::Capacity {
                    requested: usize::MAX,
                    max: limits::max_outcomes(),
                })
                .and_then(|v| limits::check_outcomes(v).map(|_| v))
        };
        let input_dim = cap(self.input_dim)?;
        let output_dim = cap(self.output_dim)?;
        if slots == 1 {
            return Ok(self.clone());
        }
        Ok(Self {
            input_dim,
            output_dim,
            stochastic: self.stochastic,
            kind: Kind::Lifted {
                slot: Box::new(self.clone()),
                slots,
            },
        })
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        check_dim(inner.output_dim, outer.input_dim)?;
        let mut stages = Vec::new();
        for c in [inner, outer] {
            match &c.kind {
                Kind::Chain(s) => stages.extend(s.iter().cloned()),
                _ => stages.push(c.clone()),
            }
        }
        let mut out = Self {
            input_dim: inner.input_dim,
            output_dim: outer.output_dim,
            stochastic: outer.stochastic && inner.stochastic,
            kind: Kind::Chain(stages),
        };
        if !out.stochastic && inner.stochastic {
            // A lossy outer column may never be reached; check the column sums.
            let sums = out.adjoint_vec(&vec![1.0; out.output_dim])?;
            out.stochastic = sums.iter().all(|s| (s - 1.0).abs() <= CHANNEL_TOL);
        }
        Ok(out)
    }

    /// Composes a list given in application order (first element acts first).
    pub fn chain(stages: &[Self]) -> Result<Self> {
        let (first, rest) = stages
            .split_first()
            .ok_or_else(|| validation("empty channel chain"))?;
        rest.iter()
            .try_fold(first.clone(), |acc, next| Self::compose(next, &acc))
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// True iff every column sums to one (within [`CHANNEL_TOL`]).
    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    /// Dense transition matrix; intended for small channels and tests.
    pub fn to_matrix(&self) -> Result<Vec<Vec<f64>>> {
        limits::check_matrix_dim(self.input_dim.max(self.output_dim))?;
        let mut rows = vec![vec![0.0; self.input_dim]; self.output_dim];
        let mut e = vec![0.0; self.input_dim];
        for x in 0..self.input_dim {
            e[x] = 1.0;
            let col = self.apply_vec(&e)?;
            for (y, v) in col.into_iter().enumerate() {
                rows[y][x] = v;
            }
            e[x] = 0.0;
        }
        Ok(rows)
    }

    pub fn apply_vec(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, input.len())?;
        Ok(self.forward(input))
    }

    fn forward(&self, v: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Dense(rows) => rows
                .iter()
                .map(|r| r.iter().zip(v).map(|(w, x)| w * x).sum())
                .collect(),
            Kind::Lifted { slot, slots } => {
                lifted_action(v, slot.input_dim, slot.output_dim, *slots, |x| {
                    slot.forward(x)
                })
            }
            Kind::Mix { delta } => {
                let total: f64 = v.iter().sum();
                let floor = delta * total / self.output_dim as f64;
                v.iter().map(|x| (1.0 - delta) * x + floor).collect()
            }
            Kind::Projection { keep } => v
                .iter()
                .zip(keep)
                .map(|(&x, &k)| if k { x } else { 0.0 })
                .collect(),
            Kind::Chain(stages) => {
                let mut cur = v.to_vec();
                for s in stages {
                    cur = s.forward(&cur);
                }
                cur
            }
        }
    }

    /// Transpose action `a ↦ Wᵀ a` on acceptance vectors.
    pub fn adjoint_vec(&self, a: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.output_dim, a.len())?;
        Ok(self.backward(a))
    }

    fn backward(&self, a: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Dense(rows) => {
                let mut out = vec![0.0; self.input_dim];
                for (row, &ay) in rows.iter().zip(a) {
                    if ay == 0.0 {
                        continue;
                    }
                    for (o, w) in out.iter_mut().zip(row) {
                        *o += w * ay;
                    }
                }
                out
            }
            Kind::Lifted { slot, slots } => {
                lifted_action(a, slot.output_dim, slot.input_dim, *slots, |x| {
                    slot.backward(x)
                })
            }
            Kind::Mix { delta } => {
                let mean = a.iter().sum::<f64>() / self.output_dim as f64;
                a.iter().map(|x| (1.0 - delta) * x + delta * mean).collect()
            }
            Kind::Projection { .. } => self.forward(a),
            Kind::Chain(stages) => {
                let mut cur = a.to_vec();
                for s in stages.iter().rev() {
                    cur = s.backward(&cur);
                }
                cur
            }
        }
    }

    /// Output distribution; flagged sub-normalized when mass was lost.
    pub fn apply(&self, p: &ClassicalDistribution) -> Result<ClassicalDistribution> {
        let out = self.apply_vec(p.mass())?;
        let space = self.output_space(p.space())?;
        ClassicalDistribution::with_deficit(space, out)
    }

    fn output_space(&self, input: SequenceSpace) -> Result<SequenceSpace> {
        if self.output_dim == input.dim() {
            return Ok(input);
        }
        match &self.kind {
            Kind::Lifted { slot, slots } if input.length() == *slots => {
                SequenceSpace::new(slot.output_dim, *slots)
            }
            _ => SequenceSpace::flat(self.output_dim),
        }
    }

    /// `N†(A)` for a classical decision vector.
    pub fn adjoint_apply(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.adjoint_vec(a)
    }
}

/// Applies `slot_map` (a `d_in → d_out` vector map) along each of `slots`
/// axes of a tensor stored with the first slot most significant.
fn lifted_action(
    v: &[f64],
    d_in: usize,
    d_out: usize,
    slots: usize,
    slot_map: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let mut cur = v.to_vec();
    let mut buf_in = vec![0.0; d_in];
    for axis in 0..slots {
        let left = d_out.pow(axis as u32);
        let right = d_in.pow((slots - axis - 1) as u32);
        let mut next = vec![0.0; left * d_out * right];
        for l in 0..left {
            for r in 0..right {
                for (x, b) in buf_in.iter_mut().enumerate() {
                    *b = cur[(l * d_in + x) * right + r];
                }
                let out = slot_map(&buf_in);
                for (y, o) in out.into_iter().enumerate() {
                    next[(l * d_out + y) * right + r] = o;
                }
            }
        }
        cur = next;
    }
    cur
}

/// Laser pulse of level `power` in the centre slot of `n`, jittered one slot
/// earlier or later with probability `q/2` each:
/// `(1−q)|…,0,P,0,…⟩ + q/2 (|…,P,0,0,…⟩ + |…,0,0,P,…⟩)`.
pub fn jittered_pulse(power: usize, q: f64, n: usize, g: usize) -> Result<ClassicalDistribution> {
    if !(0.0..=1.0).contains(&q) {
        return Err(domain(format!(
            "jitter probability must lie in [0, 1], got {q}"
        )));
    }
    if n < 3 {
        return Err(domain("jittered pulse needs at least 3 slots"));
    }
    if power > g {
        return Err(domain(format!("power {power} exceeds cutoff {g}")));
    }
    let space = SequenceSpace::new(g + 1, n)?;
    let centre = n / 2;
    let mut mass = vec![0.0; space.dim()];
    for (slot, w) in [
        (centre - 1, q / 2.0),
        (centre, 1.0 - q),
        (centre + 1, q / 2.0),
    ] {
        let mut digits = vec![0; n];
        digits[slot] = power;
        mass[space.index(&digits)?] += w;
    }
    ClassicalDistribution::new(space, mass)
}

/// Sender-side jitter as a channel from pulse level `0..=g` to `n`-slot
/// sequences: column `P` is [`jittered_pulse`]`(P, q, n, g)`, so level 0 is
/// the all-zero sequence.
pub fn jitter_channel(q: f64, n: usize, g: usize) -> Result<ClassicalChannel> {
    let dim = SequenceSpace::new(g + 1, n)?.dim();
    let mut rows = vec![vec![0.0; g + 1]; dim];
    for power in 0..=g {
        for (y, &m) in jittered_pulse(power, q, n, g)?.mass().iter().enumerate() {
            rows[y][power] += m;
        }
    }
    ClassicalChannel::from_matrix(rows)
}

/// Kraus family `{K_k}` with `Σ K_k† K_k ⪯ I`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
    input_dim: usize,
    output_dim: usize,
    trace_preserving: bool,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| validation("empty Kraus family"))?;
        let (output_dim, input_dim) = (first.rows(), first.cols());
        for k in &kraus {
            if k.rows() != output_dim || k.cols() != input_dim {
                return Err(validation("Kraus operators have inconsistent shapes"));
            }
            if k.data()
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return Err(validation("Kraus operator has non-finite entries"));
            }
        }
        let mut sum = CMatrix::zeros(input_dim, input_dim);
        for k in &kraus {
            sum.axpy(1.0, &k.adjoint().mul_unchecked(k));
        }
        let sum = HermitianMatrix::from_hermitian_part(&sum);
        let spec = sum.eigenvalues();
        let max = spec.first().copied().unwrap_or(0.0);
        if max > 1.0 + KRAUS_TOL {
            return Err(validation(format!(
                "Kraus family increases trace (largest eigenvalue of ΣK†K is {max})"
            )));
        }
        let trace_preserving = spec.iter().all(|l| (l - 1.0).abs() <= KRAUS_TOL);
        Ok(Self {
            kraus,
            input_dim,
            output_dim,
            trace_preserving,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            kraus: vec![CMatrix::identity(dim)],
            input_dim: dim,
            output_dim: dim,
            trace_preserving: true,
        }
    }

    /// Dephasing in the computational basis.
    pub fn pinching(dim: usize) -> Self {
        let kraus = (0..dim)
            .map(|i| {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, i)] = C64::new(1.0, 0.0);
                k
            })
            .collect();
        Self {
            kraus,
            input_dim: dim,
            output_dim: dim,
            trace_preserving: true,
        }
    }

    /// Embeds a classical channel: `K_{yx} = √W(y|x) |y⟩⟨x|`.
    pub fn from_classical(c: &ClassicalChannel) -> Result<Self> {
        let w = c.to_matrix()?;
        let mut kraus = Vec::new();
        for (y, row) in w.iter().enumerate() {
            for (x, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    let mut k = CMatrix::zeros(c.output_dim(), c.input_dim());
                    k[(y, x)] = C64::new(p.sqrt(), 0.0);
                    kraus.push(k);
                }
            }
        }
        if kraus.is_empty() {
            kraus.push(CMatrix::zeros(c.output_dim(), c.input_dim()));
        }
        Self::new(kraus)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// `Σ K X K†` on an arbitrary Hermitian operator.
    pub fn apply_operator(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        check_dim(self.input_dim, x.dim())?;
        let mut out = CMatrix::zeros(self.output_dim, self.output_dim);
        for k in &self.kraus {
            out.axpy(
                1.0,
                &k.mul_unchecked(x.as_matrix()).mul_unchecked(&k.adjoint()),
            );
        }
        Ok(HermitianMatrix::from_hermitian_part(&out))
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        DensityOperator::with_deficit(self.apply_operator(rho.matrix())?)
    }

    /// `N†(A) = Σ K† A K`.
    pub fn adjoint_apply(&self, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        check_dim(self.output_dim, a.dim())?;
        let mut out = CMatrix::zeros(self.input_dim, self.input_dim);
        for k in &self.kraus {
            out.axpy(
                1.0,
                &k.adjoint().mul_unchecked(a.as_matrix()).mul_unchecked(k),
            );
        }
        Ok(HermitianMatrix::from_hermitian_part(&out))
    }

    /// `outer ∘ inner` with Kraus operators `{L_i K_j}`.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        check_dim(inner.output_dim, outer.input_dim)?;
        let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
        for l in &outer.kraus {
            for k in &inner.kraus {
                kraus.push(l.mul_unchecked(k));
            }
        }
        Self::new(kraus)
    }
}

/// Either channel kind, for hypothesis-generic processing.
#[derive(Clone, Debug, PartialEq)]
pub enum Channel {
    Classical(ClassicalChannel),
    Quantum(QuantumChannel),
}

impl Channel {
    pub fn apply(&self, h: &Hypothesis) -> Result<Hypothesis> {
        match (self, h) {
            (Channel::Classical(c), Hypothesis::Classical(p)) => Ok(c.apply(p)?.into()),
            (Channel::Quantum(q), Hypothesis::Quantum(r)) => Ok(q.apply(r)?.into()),
            (Channel::Quantum(q), Hypothesis::Classical(_)) => {
                Ok(q.apply(&h.to_density()?)?.into())
            }
            (Channel::Classical(c), Hypothesis::Quantum(r)) => {
                let q = QuantumChannel::from_classical(c)?;
                Ok(q.apply(r)?.into())
            }
        }
    }

    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        Ok(match (outer, inner) {
            (Channel::Classical(a), Channel::Classical(b)) => {
                Channel::Classical(ClassicalChannel::compose(a, b)?)
            }
            _ => Channel::Quantum(QuantumChannel::compose(
                &outer.to_quantum()?,
                &inner.to_quantum()?,
            )?),
        })
    }

    pub fn to_quantum(&self) -> Result<QuantumChannel> {
        match self {
            Channel::Classical(c) => QuantumChannel::from_classical(c),
            Channel::Quantum(q) => Ok(q.clone()),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Channel::Classical(c) => c.input_dim(),
            Channel::Quantum(q) => q.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Channel::Classical(c) => c.output_dim(),
            Channel::Quantum(q) => q.output_dim(),
        }
    }
}
