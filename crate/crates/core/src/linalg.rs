//! Dense Hermitian linear algebra and entropic functionals on small complex
//! matrices.
//!
//! All logarithms are base two, so every entropy here is in bits.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Maximum entrywise |M - M†| accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum |Tr ρ - 1| accepted for a density operator.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues at or above `-PSD_TOL` are accepted and clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as zero in entropies and logarithms.
pub const EIG_CLAMP: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest entrywise modulus of `M - M†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Returns `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// A validated Hermitian matrix (observables, Hamiltonians).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::validation(
                "hermitian",
                format!("max |M - M†| = {defect:.3e} exceeds {HERMITIAN_TOL:.0e}"),
            ));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }
}

/// Spectral decomposition `M = V diag(λ) V†` with eigenvalues in descending
/// order; column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, k)] *= lambda;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

pub fn eig_hermitian(m: &HermitianOperator) -> EigenDecomposition {
    eigh(m.matrix())
}

/// Eigendecomposition of a matrix the caller already knows to be Hermitian.
pub(crate) fn eigh(m: &CMatrix) -> EigenDecomposition {
    let n = m.nrows();
    if n == 1 {
        return EigenDecomposition {
            values: vec![m[(0, 0)].re],
            vectors: identity(1),
        };
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    EigenDecomposition { values, vectors }
}

/// Eigenvalues only, descending.
pub(crate) fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut values: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj()).norm();
            let mean = 0.5 * (a + d);
            let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            vec![mean + radius, mean - radius]
        }
        _ => hermitian_part(m)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect(),
    };
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// `-Σ p log₂ p` over a spectrum, with eigenvalues below the clamp dropped.
pub fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&p| p > EIG_CLAMP)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Entropy of a positive semidefinite matrix that has not been wrapped as a
/// [`DensityOperator`] (marginals, conditional states, scratch matrices).
pub(crate) fn entropy_of(m: &CMatrix) -> f64 {
    spectrum_entropy(&eigvalsh(m))
}

/// A Hermitian, unit-trace, positive semidefinite matrix with basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    entries: CMatrix,
    labels: Vec<String>,
}

impl DensityOperator {
    pub fn new(entries: CMatrix, labels: Vec<String>) -> Result<Self> {
        let rho = Self::from_parts(entries, labels)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Builds with numbered labels `0..dim`.
    pub fn unlabeled(entries: CMatrix) -> Result<Self> {
        let labels = (0..entries.nrows()).map(|i| i.to_string()).collect();
        Self::new(entries, labels)
    }

    /// Checks shape only; the caller is responsible for the physical
    /// invariants.
    pub(crate) fn from_parts(entries: CMatrix, labels: Vec<String>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "density operator is {}x{}, expected non-empty square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if labels.len() != entries.nrows() {
            return Err(Error::Dimension(format!(
                "{} basis labels for dimension {}",
                labels.len(),
                entries.nrows()
            )));
        }
        Ok(Self { entries, labels })
    }

    pub fn validate(&self) -> Result<()> {
        let defect = hermiticity_defect(&self.entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::validation(
                "hermitian",
                format!("max |ρ - ρ†| = {defect:.3e}"),
            ));
        }
        let tr = trace(&self.entries);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::validation(
                "unit-trace",
                format!("Tr ρ = {:.12} {:+.3e}i", tr.re, tr.im),
            ));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::validation(
                "positive-semidefinite",
                format!("minimum eigenvalue {min_eig:.3e}"),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    /// Real part of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    /// Pure state `|v⟩⟨v|` for a unit vector given as entries.
    pub fn pure(amplitudes: &[Complex64], labels: Vec<String>) -> Result<Self> {
        let n = amplitudes.len();
        let m = CMatrix::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj());
        Self::new(m, labels)
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64], labels: Vec<String>) -> Result<Self> {
        let n = probs.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(probs[i], 0.0)
            } else {
                ZERO
            }
        });
        Self::new(m, labels)
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of(rho.matrix())
}

/// Relative entropy `D(ρ‖σ) = Tr ρ log₂ ρ - Tr ρ log₂ σ` in bits.
///
/// Returns `f64::INFINITY` when ρ has weight outside the support of σ.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "relative entropy of dim {} against dim {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    if rho.labels() != sigma.labels() {
        return Err(Error::Dimension(
            "relative entropy between states on different bases".into(),
        ));
    }
    Ok(relative_entropy_matrices(rho.matrix(), sigma.matrix()))
}

/// Unchecked core of [`relative_entropy`].
pub(crate) fn relative_entropy_matrices(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let r = eigh(rho);
    let s = eigh(sigma);
    let n = rho.nrows();
    // overlaps[i][j] = |<r_i|s_j>|^2
    let cross = r.vectors.adjoint() * &s.vectors;
    let mut neg_entropy = 0.0;
    let mut cross_term = 0.0;
    for i in 0..n {
        let p = r.values[i];
        if p <= EIG_CLAMP {
            continue;
        }
        neg_entropy += p * p.log2();
        for j in 0..n {
            let overlap = cross[(i, j)].norm_sqr();
            let q = s.values[j];
            if q <= EIG_CLAMP {
                if overlap > EIG_CLAMP {
                    return f64::INFINITY;
                }
                continue;
            }
            cross_term += p * overlap * q.log2();
        }
    }
    neg_entropy - cross_term
}

/// Partial trace of a state on a tensor product with factor dimensions
/// `dims`, keeping the factors listed in `keep` (in ascending factor order).
pub fn partial_trace_full(
    rho: &DensityOperator,
    dims: &[usize],
    keep: &[usize],
) -> Result<DensityOperator> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::Dimension(format!(
            "factor dimensions {dims:?} multiply to {total}, state has dim {}",
            rho.dim()
        )));
    }
    if keep.is_empty() {
        return Err(Error::Dimension(
            "partial trace must keep at least one factor".into(),
        ));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::Dimension(format!(
            "factor {bad} out of range for {} factors",
            dims.len()
        )));
    }
    let reduced = partial_trace_matrix(rho.matrix(), dims, &kept);
    let labels = reduced_labels(rho.labels(), dims, &kept);
    DensityOperator::from_parts(reduced, labels)
}

/// Mixed-radix digits of `index` over `dims`, most significant factor first.
fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub(crate) fn partial_trace_matrix(m: &CMatrix, dims: &[usize], kept: &[usize]) -> CMatrix {
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    let compose = |kd: &[usize], td: &[usize]| -> usize {
        let mut full = vec![0; dims.len()];
        for (slot, &f) in kept.iter().enumerate() {
            full[f] = kd[slot];
        }
        for (slot, &f) in traced.iter().enumerate() {
            full[f] = td[slot];
        }
        full.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
    };

    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        let di = digits(i, &kept_dims);
        for j in 0..dk {
            let dj = digits(j, &kept_dims);
            let mut acc = ZERO;
            for t in 0..dt {
                let dt_digits = digits(t, &traced_dims);
                acc += m[(compose(&di, &dt_digits), compose(&dj, &dt_digits))];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn reduced_labels(labels: &[String], dims: &[usize], kept: &[usize]) -> Vec<String> {
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let per_factor = labels.iter().all(|l| l.chars().count() == dims.len());
    (0..dk)
        .map(|i| {
            if per_factor {
                // Reuse the characters of the first full label whose kept
                // digits match.
                let di = digits(i, &kept_dims);
                let mut full = vec![0; dims.len()];
                for (slot, &f) in kept.iter().enumerate() {
                    full[f] = di[slot];
                }
                let idx = full.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d);
                let chars: Vec<char> = labels[idx].chars().collect();
                kept.iter().map(|&f| chars[f]).collect()
            } else {
                i.to_string()
            }
        })
        .collect()
}
