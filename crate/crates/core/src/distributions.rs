//! Classical distributions and density operators over sequence alphabets.
//!
//! Outcomes of a [`SequenceSpace`] are indexed in base `base` with the first
//! slot most significant, so `(y_0, …, y_{n-1})` maps to
//! `Σ y_i · base^{n-1-i}`.

use crate::error::{check_dim, domain, validation, Error, Result};
use crate::hermitian::{CMatrix, HermitianMatrix, C64};
use crate::limits;

/// Tolerance on total mass for normalized distributions.
pub const MASS_TOL: f64 = 1e-12;
/// Eigenvalue and trace tolerance for density operators.
pub const STATE_TOL: f64 = 1e-10;
/// Default tail mass used to choose the Poisson fold point.
pub const DEFAULT_FOLD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SequenceSpace {
    base: usize,
    length: usize,
    dim: usize,
}

impl SequenceSpace {
    pub fn new(base: usize, length: usize) -> Result<Self> {
        if base == 0 || length == 0 {
            return Err(validation("alphabet size and length must be positive"));
        }
        let dim = limits::checked_pow(base, length).ok_or(Error::Capacity {
            requested: usize::MAX,
            max: limits::max_outcomes(),
        })?;
        limits::check_outcomes(dim)?;
        Ok(Self { base, length, dim })
    }

    /// A single-slot alphabet of `size` outcomes.
    pub fn flat(size: usize) -> Result<Self> {
        Self::new(size, 1)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self, digits: &[usize]) -> Result<usize> {
        check_dim(self.length, digits.len())?;
        let mut idx = 0;
        for &d in digits {
            if d >= self.base {
                return Err(validation(format!(
                    "symbol {d} outside alphabet of size {}",
                    self.base
                )));
            }
            idx = idx * self.base + d;
        }
        Ok(idx)
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.length];
        for slot in (0..self.length).rev() {
            out[slot] = index % self.base;
            index /= self.base;
        }
        out
    }
}

fn check_mass(mass: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (i, &p) in mass.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(validation(format!(
                "mass[{i}] = {p} is not a nonnegative number"
            )));
        }
        total += p;
    }
    Ok(total)
}

/// Probability vector over a sequence space. Sub-normalized vectors (outputs
/// of trace non-increasing maps) carry an explicit flag.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalDistribution {
    space: SequenceSpace,
    mass: Vec<f64>,
    subnormalized: bool,
}

impl ClassicalDistribution {
    /// A normalized distribution; rejects negative entries and total mass
    /// away from one.
    pub fn new(space: SequenceSpace, mass: Vec<f64>) -> Result<Self> {
        check_dim(space.dim(), mass.len())?;
        let total = check_mass(&mass)?;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(validation(format!("mass sums to {total}, expected 1")));
        }
        Ok(Self {
            space,
            mass,
            subnormalized: false,
        })
    }

    /// A vector with total mass at most one. Flagged sub-normalized when the
    /// total falls short of one by more than [`MASS_TOL`].
    pub fn with_deficit(space: SequenceSpace, mass: Vec<f64>) -> Result<Self> {
        check_dim(space.dim(), mass.len())?;
        let total = check_mass(&mass)?;
        if total > 1.0 + MASS_TOL {
            return Err(validation(format!("mass sums to {total} > 1")));
        }
        Ok(Self {
            space,
            mass,
            subnormalized: total < 1.0 - MASS_TOL,
        })
    }

    pub fn from_vec(mass: Vec<f64>) -> Result<Self> {
        let space = SequenceSpace::flat(mass.len())?;
        Self::new(space, mass)
    }

    pub fn point_mass(space: SequenceSpace, outcome: usize) -> Result<Self> {
        if outcome >= space.dim() {
            return Err(validation(format!("outcome {outcome} out of range")));
        }
        let mut mass = vec![0.0; space.dim()];
        mass[outcome] = 1.0;
        Ok(Self {
            space,
            mass,
            subnormalized: false,
        })
    }

    pub fn uniform(space: SequenceSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            mass: vec![1.0 / d as f64; d],
            subnormalized: false,
        }
    }

    pub fn space(&self) -> SequenceSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_mass(self) -> Vec<f64> {
        self.mass
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.mass[i] > 0.0).collect()
    }

    pub(crate) fn require_normalized(&self, what: &str) -> Result<()> {
        if self.subnormalized {
            Err(validation(format!("{what} must be normalized")))
        } else {
            Ok(())
        }
    }

    /// Same mass viewed on another space of equal dimension.
    pub fn reshape(&self, space: SequenceSpace) -> Result<Self> {
        check_dim(self.dim(), space.dim())?;
        Ok(Self {
            space,
            mass: self.mass.clone(),
            subnormalized: self.subnormalized,
        })
    }

    /// Product distribution on the concatenated sequence space. Both factors
    /// must share a base alphabet unless one of them is flat.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let space = if self.space.base() == other.space.base() {
            SequenceSpace::new(
                self.space.base(),
                self.space.length() + other.space.length(),
            )?
        } else {
            let d = self.dim().saturating_mul(other.dim());
            limits::check_outcomes(d)?;
            SequenceSpace::flat(d)?
        };
        let mut mass = Vec::with_capacity(space.dim());
        for &a in &self.mass {
            mass.extend(other.mass.iter().map(|&b| a * b));
        }
        Ok(Self {
            space,
            mass,
            subnormalized: self.subnormalized || other.subnormalized,
        })
    }

    /// n-fold i.i.d. product.
    pub fn iid_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("block length must be positive"));
        }
        let space = SequenceSpace::new(self.space.base(), self.space.length() * n)?;
        let mut mass = self.mass.clone();
        for _ in 1..n {
            let mut next = Vec::with_capacity(mass.len() * self.dim());
            for &a in &mass {
                next.extend(self.mass.iter().map(|&b| a * b));
            }
            mass = next;
        }
        Ok(Self {
            space,
            mass,
            subnormalized: self.subnormalized,
        })
    }
}

/// Truncated Poisson distribution on `{0, …, cutoff}`: the exact pmf below
/// `fold`, the whole tail `1 − F(fold − 1)` at `fold`, and zeros above.
pub fn poisson_truncated(rate: f64, fold: usize, cutoff: usize) -> Result<ClassicalDistribution> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(domain(format!(
            "Poisson rate must be finite and >= 0, got {rate}"
        )));
    }
    if fold > cutoff {
        return Err(domain(format!("fold point {fold} exceeds cutoff {cutoff}")));
    }
    let space = SequenceSpace::flat(cutoff + 1)?;
    let mut mass = vec![0.0; cutoff + 1];
    if rate == 0.0 {
        mass[0] = 1.0;
        return ClassicalDistribution::new(space, mass);
    }
    for (k, m) in mass.iter_mut().enumerate().take(fold) {
        *m = poisson_pmf(rate, k);
    }
    mass[fold] = poisson_tail(rate, fold);
    ClassicalDistribution::new(space, mass)
}

/// Smallest fold point whose tail mass is at most `tol`.
pub fn poisson_fold_point(rate: f64, tol: f64) -> Result<usize> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(domain(format!(
            "Poisson rate must be finite and >= 0, got {rate}"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(domain("fold tolerance must be positive"));
    }
    let mut k = 0;
    while poisson_tail(rate, k) > tol {
        k += 1;
    }
    Ok(k)
}

pub(crate) fn poisson_pmf(rate: f64, k: usize) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let mut log = -rate;
    for j in 1..=k {
        log += rate.ln() - (j as f64).ln();
    }
    log.exp()
}

/// `Pr[N >= k]`, summed directly so small tails keep full relative accuracy.
pub(crate) fn poisson_tail(rate: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if (k as f64) <= rate {
        let head: f64 = (0..k).map(|j| poisson_pmf(rate, j)).sum();
        return (1.0 - head).max(0.0);
    }
    let mut term = poisson_pmf(rate, k);
    let mut sum = 0.0;
    let mut j = k;
    while term > 0.0 && term > sum * 1e-18 {
        sum += term;
        j += 1;
        term *= rate / j as f64;
    }
    sum
}

/// Mixture over arrival times `ν` of `null^{⊗ν} ⊗ signal ⊗ null^{⊗(n−k−ν)}`,
/// where `arrival[ν]` is the probability that the signal starts at slot `ν`.
pub fn embed_signal_with_arrival(
    signal: &ClassicalDistribution,
    null_symbol: &ClassicalDistribution,
    arrival: &[f64],
    n: usize,
) -> Result<ClassicalDistribution> {
    let base = null_symbol.dim();
    if null_symbol.space().length() != 1 {
        return Err(validation("null symbol must be a single-slot distribution"));
    }
    null_symbol.require_normalized("null symbol")?;
    signal.require_normalized("signal")?;
    let k = if signal.space().base() == base {
        signal.space().length()
    } else if signal.dim() == base {
        1
    } else {
        return Err(validation("signal alphabet differs from the null alphabet"));
    };
    if n < k {
        return Err(domain(format!(
            "{n} slots cannot hold a signal of {k} slots"
        )));
    }
    if arrival.len() > n - k + 1 {
        let beyond: f64 = arrival[n - k + 1..].iter().sum();
        if beyond > 0.0 {
            return Err(domain(format!(
                "arrival distribution has mass beyond slot {}",
                n - k
            )));
        }
    }
    let total = check_mass(arrival)?;
    if (total - 1.0).abs() > MASS_TOL {
        return Err(validation(format!("arrival mass sums to {total}")));
    }
    let space = SequenceSpace::new(base, n)?;
    let signal = signal.reshape(SequenceSpace::new(base, k)?)?;
    let mut mass = vec![0.0; space.dim()];
    for (nu, &w) in arrival.iter().enumerate().take(n - k + 1) {
        if w == 0.0 {
            continue;
        }
        let mut block: Option<ClassicalDistribution> = None;
        let mut push = |d: &ClassicalDistribution| -> Result<()> {
            block = Some(match block.take() {
                None => d.clone(),
                Some(b) => b.tensor(d)?,
            });
            Ok(())
        };
        if nu > 0 {
            push(&null_symbol.iid_power(nu)?)?;
        }
        push(&signal)?;
        if n - k - nu > 0 {
            push(&null_symbol.iid_power(n - k - nu)?)?;
        }
        let block = block.expect("signal always present");
        for (m, b) in mass.iter_mut().zip(block.mass()) {
            *m += w * b;
        }
    }
    ClassicalDistribution::new(space, mass)
}

/// Hermitian positive-semidefinite unit-trace matrix. Sub-normalized
/// operators (outputs of trace non-increasing maps) carry a flag.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: HermitianMatrix,
    subnormalized: bool,
}

impl DensityOperator {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(validation(format!("trace is {tr}, expected 1")));
        }
        Self::check_psd(&matrix)?;
        Ok(Self {
            matrix,
            subnormalized: false,
        })
    }

    /// Positive semidefinite with trace at most one.
    pub fn with_deficit(matrix: HermitianMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if tr > 1.0 + STATE_TOL {
            return Err(validation(format!("trace is {tr} > 1")));
        }
        Self::check_psd(&matrix)?;
        Ok(Self {
            matrix,
            subnormalized: tr < 1.0 - STATE_TOL,
        })
    }

    fn check_psd(m: &HermitianMatrix) -> Result<()> {
        let min = m.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(validation(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real(rows)?)
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(validation(format!("state vector has squared norm {norm}")));
        }
        Self::new(HermitianMatrix::new(CMatrix::outer(psi, psi))?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
            subnormalized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.matrix
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.kron(&other.matrix)?,
            subnormalized: self.subnormalized || other.subnormalized,
        })
    }

    pub fn iid_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("block length must be positive"));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self)?;
        }
        Ok(out)
    }
}

/// Diagonal density operator carrying `p` on its diagonal.
pub fn classical_to_density(p: &ClassicalDistribution) -> Result<DensityOperator> {
    limits::check_matrix_dim(p.dim())?;
    Ok(DensityOperator {
        matrix: HermitianMatrix::from_real_diagonal(p.mass()),
        subnormalized: p.is_subnormalized(),
    })
}

/// Diagonal of a density operator as a distribution on a flat alphabet.
pub fn pinch(rho: &DensityOperator) -> Result<ClassicalDistribution> {
    let diag: Vec<f64> = rho
        .matrix()
        .diagonal_real()
        .into_iter()
        .map(|d| if d < 0.0 && d > -STATE_TOL { 0.0 } else { d })
        .collect();
    let space = SequenceSpace::flat(diag.len())?;
    if rho.is_subnormalized() {
        ClassicalDistribution::with_deficit(space, diag)
    } else {
        // Renormalization is not applied; trace was validated to 1e-10 so the
        // diagonal is within that of one.
        let total = check_mass(&diag)?;
        if (total - 1.0).abs() > STATE_TOL {
            return Err(validation(format!("diagonal sums to {total}")));
        }
        Ok(ClassicalDistribution {
            space,
            mass: diag,
            subnormalized: false,
        })
    }
}

/// Either kind of hypothesis, for APIs that dispatch on the representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    Classical(ClassicalDistribution),
    Quantum(DensityOperator),
}

impl Hypothesis {
    pub fn dim(&self) -> usize {
        match self {
            Hypothesis::Classical(p) => p.dim(),
            Hypothesis::Quantum(r) => r.dim(),
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        match self {
            Hypothesis::Classical(p) => classical_to_density(p),
            Hypothesis::Quantum(r) => Ok(r.clone()),
        }
    }

    pub fn iid_power(&self, n: usize) -> Result<Self> {
        Ok(match self {
            Hypothesis::Classical(p) => Hypothesis::Classical(p.iid_power(n)?),
            Hypothesis::Quantum(r) => Hypothesis::Quantum(r.iid_power(n)?),
        })
    }
}

impl From<ClassicalDistribution> for Hypothesis {
    fn from(p: ClassicalDistribution) -> Self {
        Hypothesis::Classical(p)
    }
}

impl From<DensityOperator> for Hypothesis {
    fn from(r: DensityOperator) -> Self {
        Hypothesis::Quantum(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: &[f64]) -> ClassicalDistribution {
        ClassicalDistribution::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn poisson_rate_zero_is_point_mass() {
        let p = poisson_truncated(0.0, 5, 5).unwrap();
        assert_eq!(p.mass()[0], 1.0);
        assert_eq!(p.total(), 1.0);
    }

    #[test]
    fn poisson_pmf_value() {
        let p = poisson_truncated(3.0, 40, 40).unwrap();
        let expected = (-3.0f64).exp() * 27.0 / 6.0;
        assert!((p.mass()[3] - expected).abs() < 1e-15);
        assert!((p.mass()[3] - 0.2240).abs() < 5e-5);
    }

    #[test]
    fn poisson_fold_mass_below_tolerance() {
        let fold = poisson_fold_point(6.0, 1e-12).unwrap();
        let p = poisson_truncated(6.0, fold, fold + 3).unwrap();
        assert!(p.mass()[fold] <= 1e-12);
        assert!(p.mass()[fold + 1..].iter().all(|&m| m == 0.0));
        // cumulative-sum oracle: tail at fold-1 is above tolerance
        let head: f64 = (0..fold - 1).map(|k| poisson_pmf(6.0, k)).sum();
        assert!(1.0 - head > 1e-12);
    }

    #[test]
    fn poisson_rejects_negative_rate() {
        assert!(matches!(
            poisson_truncated(-1.0, 3, 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn iid_power_examples() {
        let p = flat(&[0.5, 0.5]).iid_power(2).unwrap();
        assert_eq!(p.mass(), &[0.25; 4]);
        let point = ClassicalDistribution::point_mass(SequenceSpace::flat(3).unwrap(), 2).unwrap();
        let p3 = point.iid_power(3).unwrap();
        let idx = p3.space().index(&[2, 2, 2]).unwrap();
        assert_eq!(p3.mass()[idx], 1.0);
    }

    #[test]
    fn iid_power_marginals() {
        let p = flat(&[0.2, 0.5, 0.3]);
        let p3 = p.iid_power(3).unwrap();
        for slot in 0..3 {
            let mut marg = vec![0.0; 3];
            for (i, &m) in p3.mass().iter().enumerate() {
                marg[p3.space().digits(i)[slot]] += m;
            }
            for (a, b) in marg.iter().zip(p.mass()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(ClassicalDistribution::from_vec(vec![0.5, 0.6]).is_err());
        assert!(ClassicalDistribution::from_vec(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn embedding_examples() {
        let null = flat(&[0.9, 0.1]);
        let signal = flat(&[0.2, 0.8]);
        // arrival at 0 with n = k gives the signal itself
        let e = embed_signal_with_arrival(&signal, &null, &[1.0], 1).unwrap();
        assert_eq!(e.mass(), signal.mass());
        // fixed delay: signal ⊗ null^{⊗2}
        let e = embed_signal_with_arrival(&signal, &null, &[1.0], 3).unwrap();
        let want = signal.tensor(&null.iid_power(2).unwrap()).unwrap();
        assert_eq!(e.mass(), want.mass());
        // uniform arrival over {0,1} with n = 2: enumerate both placements
        let e = embed_signal_with_arrival(&signal, &null, &[0.5, 0.5], 2).unwrap();
        let mut want = [0.0; 4];
        for a in 0..2 {
            for b in 0..2 {
                let first = signal.mass()[a] * null.mass()[b];
                let second = null.mass()[a] * signal.mass()[b];
                want[2 * a + b] = 0.5 * first + 0.5 * second;
            }
        }
        for (g, w) in e.mass().iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!(matches!(
            embed_signal_with_arrival(&signal, &null, &[0.5, 0.0, 0.5], 2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn density_round_trips() {
        let rho = classical_to_density(&flat(&[1.0, 0.0])).unwrap();
        assert_eq!(
            rho.matrix(),
            &HermitianMatrix::from_real_diagonal(&[1.0, 0.0])
        );
        let u = classical_to_density(&ClassicalDistribution::uniform(
            SequenceSpace::flat(4).unwrap(),
        ))
        .unwrap();
        assert_eq!(u, DensityOperator::maximally_mixed(4));
        let p = flat(&[0.3, 0.7]);
        assert_eq!(
            pinch(&classical_to_density(&p).unwrap()).unwrap().mass(),
            p.mass()
        );
        let plus = DensityOperator::from_real(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(pinch(&plus).unwrap().mass(), &[0.5, 0.5]);
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::from_real(&[vec![1.2, 0.0], vec![0.0, -0.2]]).is_err());
        assert!(DensityOperator::from_real(&[vec![0.5, 0.0], vec![0.0, 0.4]]).is_err());
    }
}
