//! Dense complex Hermitian linear algebra.
//!
//! Eigendecomposition uses cyclic Jacobi rotations. All downstream code works
//! with spectral projectors ([`Spectrum::clusters`]) rather than individual
//! eigenvectors, since vectors inside a degenerate eigenspace are not unique.

mod matrix;

pub(crate) use matrix::{cholesky, hpd_inverse, lower_inverse, ZERO};
pub use matrix::{CMatrix, C64};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, validation, Result};
use crate::limits;

/// Entrywise tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermitianRepr", into = "HermitianRepr")]
pub struct HermitianMatrix(CMatrix);

/// Wire form: `{"dim": n, "re": [[..]], "im": [[..]]}`; `im` may be omitted.
#[derive(Serialize, Deserialize)]
struct HermitianRepr {
    dim: usize,
    re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<Vec<f64>>>,
}

impl TryFrom<HermitianRepr> for HermitianMatrix {
    type Error = crate::Error;

    fn try_from(r: HermitianRepr) -> Result<Self> {
        let m = CMatrix::from_parts(&r.re, r.im.as_deref())?;
        check_dim(r.dim, m.rows())?;
        Self::new(m)
    }
}

impl From<HermitianMatrix> for HermitianRepr {
    fn from(h: HermitianMatrix) -> Self {
        let (re, im) = h.0.to_parts();
        let im = im.iter().flatten().any(|&x| x != 0.0).then_some(im);
        Self {
            dim: h.0.rows(),
            re,
            im,
        }
    }
}

impl TryFrom<CMatrix> for HermitianMatrix {
    type Error = crate::Error;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<HermitianMatrix> for CMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

impl HermitianMatrix {
    /// Validates Hermitian symmetry within [`HERMITIAN_TOL`] and snaps the
    /// matrix to its exact Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(validation(format!(
                "matrix is not square: {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.data()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(validation("matrix has non-finite entries"));
        }
        let dev = m.hermitian_deviation();
        if dev.is_nan() || dev > HERMITIAN_TOL {
            return Err(validation(format!(
                "matrix is not Hermitian (deviation {dev:e})"
            )));
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Wraps a matrix the caller knows is Hermitian (e.g. produced by
    /// Hermitian-preserving arithmetic); only the Hermitian part is kept.
    pub(crate) fn from_hermitian_part(m: &CMatrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(CMatrix::from_real_diagonal(diag))
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(CMatrix::from_parts(rows, None)?)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr(self · other)`, real for Hermitian arguments.
    pub fn expectation(&self, other: &HermitianMatrix) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.inner(&other.0))
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.sub(&other.0)?))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Kronecker product; fails when the result exceeds the matrix cap.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let dim = self.dim().saturating_mul(other.dim());
        limits::check_matrix_dim(dim)?;
        Ok(Self(self.0.kron(&other.0)))
    }

    /// `U self U†` for a (not necessarily square) `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        check_dim(u.cols(), self.dim())?;
        let m = u.mul_unchecked(&self.0).mul_unchecked(&u.adjoint());
        Ok(Self::from_hermitian_part(&m))
    }

    pub fn eigendecompose(&self) -> Spectrum {
        jacobi_eigen(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigendecompose().eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// True iff every eigenvalue lies in `[-tol, 1 + tol]`.
    pub fn is_decision_operator(&self, tol: f64) -> bool {
        self.eigenvalues()
            .iter()
            .all(|&l| l >= -tol && l <= 1.0 + tol)
    }

    /// `Σ_{λ>0} λ v v†`.
    pub fn positive_part(&self) -> Self {
        self.eigendecompose().map(|l| l.max(0.0))
    }

    /// Sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.abs()).sum()
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// A group of numerically equal eigenvalues and their spectral projector.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub value: f64,
    pub indices: Vec<usize>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }

    /// `Σ f(λ_k) v_k v_k†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.weighted_sum(&weights)
    }

    pub(crate) fn weighted_sum(&self, weights: &[f64]) -> HermitianMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut out = CMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = v[(i, k)] * w;
                if vi == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vi * v[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::from_hermitian_part(&out)
    }

    /// Projector onto the span of the listed eigenvectors.
    pub fn projector(&self, indices: &[usize]) -> HermitianMatrix {
        let mut w = vec![0.0; self.dim()];
        for &k in indices {
            w[k] = 1.0;
        }
        self.weighted_sum(&w)
    }

    /// `⟨v_k| M |v_k⟩` for every eigenvector.
    pub fn diagonal_in_eigenbasis(&self, m: &HermitianMatrix) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let v = self.eigenvectors.column(k);
                let mv = m.as_matrix().mul_vec(&v);
                v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum()
            })
            .collect()
    }

    /// Groups eigenvalues whose consecutive gaps are at most `tol`, in
    /// descending order of value.
    pub fn clusters(&self, tol: f64) -> Vec<Cluster> {
        let mut out: Vec<Cluster> = Vec::new();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            match out.last_mut() {
                Some(c) if (self.eigenvalues[*c.indices.last().unwrap()] - l) <= tol => {
                    c.indices.push(k);
                    let m = c.indices.len() as f64;
                    c.value += (l - c.value) / m;
                }
                _ => out.push(Cluster {
                    value: l,
                    indices: vec![k],
                }),
            }
        }
        out
    }
}

/// Cyclic complex Jacobi. Each rotation first removes the phase of the pivot
/// `a_pq` and then applies the real symmetric Jacobi rotation.
fn jacobi_eigen(m: &CMatrix) -> Spectrum {
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = 1e-12 * (n.max(1) as f64) * scale.max(f64::MIN_POSITIVE);

    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    // One polishing sweep after reaching the threshold; convergence is
    // quadratic so this pushes the off-diagonal mass far below it.
    let mut polish = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_norm(&a);
        if off == 0.0 {
            break;
        }
        if off <= threshold {
            if polish {
                break;
            }
            polish = true;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if r < 1e-300 * (app.abs() + aqq.abs()) {
                    continue;
                }
                let phase = apq / r;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                // A <- A U
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                }
                // A <- U† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                // V <- V U
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .re
            .partial_cmp(&a[(i, i)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// `kron` as a free function for symmetry with the other operations.
pub fn kron(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    a.kron(b)
}

pub fn eigendecompose(h: &HermitianMatrix) -> Spectrum {
    h.eigendecompose()
}

pub fn positive_part(h: &HermitianMatrix) -> HermitianMatrix {
    h.positive_part()
}

pub fn is_decision_operator(a: &HermitianMatrix, tol: f64) -> bool {
    a.is_decision_operator(tol)
}
