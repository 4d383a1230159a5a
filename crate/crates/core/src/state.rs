//! Density matrices over a tensor product of finite-dimensional subsystems.

use crate::error::{QcorrError, Result};
use crate::linalg::{
    hermitian_eigenvalues, hermitian_part, kron, max_abs_diff, shannon_bits, trace, CMatrix,
    CVector, Spectrum, C64, ZERO,
};
use crate::measurement::LocalBasisSet;
use crate::tol;

/// Largest supported Hilbert-space dimension.
pub const MAX_TOTAL_DIM: usize = 64;

/// Ordered local dimensions of an N-partite system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
}

impl SubsystemLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(QcorrError::InvalidLayout("no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(QcorrError::InvalidLayout(format!(
                "local dimension {d} is below 2"
            )));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if total > MAX_TOTAL_DIM {
            return Err(QcorrError::InvalidLayout(format!(
                "total dimension {total} exceeds {MAX_TOTAL_DIM}"
            )));
        }
        Ok(SubsystemLayout { dims })
    }

    /// `n` qubits.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &SubsystemLayout) -> Result<SubsystemLayout> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        SubsystemLayout::new(dims)
    }

    /// Layout of the subsystems in `keep` (already normalized).
    pub(crate) fn restrict(&self, keep: &[usize]) -> SubsystemLayout {
        SubsystemLayout {
            dims: keep.iter().map(|&k| self.dims[k]).collect(),
        }
    }

    /// Mixed-radix digits of a global basis index, most significant first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Digit table for every global index.
    pub(crate) fn digit_table(&self) -> Vec<Vec<usize>> {
        (0..self.total_dim()).map(|i| self.digits(i)).collect()
    }

    /// Sorted, deduplicated copy of `set` after range checks.
    pub fn normalize_subset(&self, set: &[usize]) -> Result<Vec<usize>> {
        let mut out = set.to_vec();
        out.sort_unstable();
        out.dedup();
        if let Some(&index) = out.iter().find(|&&i| i >= self.dims.len()) {
            return Err(QcorrError::IndexOutOfRange {
                index,
                count: self.dims.len(),
            });
        }
        Ok(out)
    }

    pub fn complement(&self, set: &[usize]) -> Vec<usize> {
        (0..self.dims.len()).filter(|i| !set.contains(i)).collect()
    }

    pub fn all(&self) -> Vec<usize> {
        (0..self.dims.len()).collect()
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: SubsystemLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checks and cleans up a candidate density matrix.
    ///
    /// The matrix is symmetrized when its Hermiticity deviation is within
    /// [`tol::HERM`]; eigenvalues in `[-tol::PSD, 0)` are clamped to zero and
    /// the result renormalized.
    pub fn validate(matrix: CMatrix, layout: SubsystemLayout) -> Result<Self> {
        let dim = layout.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QcorrError::DimensionMismatch {
                expected: dim,
                found: if matrix.nrows() != dim {
                    matrix.nrows()
                } else {
                    matrix.ncols()
                },
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QcorrError::NonHermitian {
                deviation: f64::INFINITY,
            });
        }
        let deviation = max_abs_diff(&matrix, &matrix.adjoint());
        if deviation > tol::HERM {
            return Err(QcorrError::NonHermitian { deviation });
        }
        let sym = hermitian_part(&matrix);
        let tr = trace(&sym).re;
        if (tr - 1.0).abs() > tol::TRACE {
            return Err(QcorrError::TraceError { trace: tr });
        }
        let spectrum = Spectrum::of(&sym);
        let min = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -tol::PSD {
            return Err(QcorrError::NonPositive {
                min_eigenvalue: min,
            });
        }
        let matrix = if min < 0.0 {
            let total: f64 = spectrum.eigenvalues.iter().map(|&x| x.max(0.0)).sum();
            hermitian_part(&spectrum.apply(|x| x.max(0.0) / total))
        } else {
            sym
        };
        Ok(DensityMatrix { layout, matrix })
    }

    /// Wraps the output of an operation that preserves validity.
    pub(crate) fn from_trusted(layout: SubsystemLayout, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), layout.total_dim());
        DensityMatrix {
            layout,
            matrix: hermitian_part(&matrix),
        }
    }

    /// `|ψ⟩⟨ψ|` for a state vector, normalized on the way in.
    pub fn from_pure(psi: &CVector, layout: SubsystemLayout) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QcorrError::ParameterOutOfRange(
                "state vector has zero norm".into(),
            ));
        }
        let psi = psi.unscale(norm);
        Self::validate(&psi * psi.adjoint(), layout)
    }

    /// Diagonal state with the given probabilities in the computational basis.
    pub fn from_diagonal(probs: &[f64], layout: SubsystemLayout) -> Result<Self> {
        let diag = CVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::validate(CMatrix::from_diagonal(&diag), layout)
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        let matrix = CMatrix::identity(d, d).unscale(d as f64);
        DensityMatrix { layout, matrix }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::of(&self.matrix)
    }

    /// `a ⊗ b` on the concatenated layout.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(DensityMatrix::from_trusted(
            layout,
            kron(&self.matrix, &other.matrix),
        ))
    }

    /// Reduced state on `keep`. Kept subsystems stay in their original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(QcorrError::EmptyKeepSet);
        }
        let keep = self.layout.normalize_subset(keep)?;
        let reduced = partial_trace_raw(&self.matrix, &self.layout, &keep);
        Ok(DensityMatrix::from_trusted(
            self.layout.restrict(&keep),
            reduced,
        ))
    }

    /// Single-subsystem marginals in subsystem order.
    pub fn marginals(&self) -> Vec<DensityMatrix> {
        (0..self.layout.len())
            .map(|n| {
                DensityMatrix::from_trusted(
                    self.layout.restrict(&[n]),
                    partial_trace_raw(&self.matrix, &self.layout, &[n]),
                )
            })
            .collect()
    }

    /// `π_ρ = ρ₁ ⊗ ⋯ ⊗ ρ_N`.
    pub fn marginal_product(&self) -> DensityMatrix {
        let product = self
            .marginals()
            .iter()
            .fold(CMatrix::identity(1, 1), |acc, m| kron(&acc, m.matrix()));
        DensityMatrix::from_trusted(self.layout.clone(), product)
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        shannon_bits(hermitian_eigenvalues(&self.matrix))
    }

    /// `Σₙ S(ρₙ) − S(ρ)`, the total mutual information.
    pub fn mutual_information(&self) -> f64 {
        let marginal: f64 = self.marginals().iter().map(DensityMatrix::entropy).sum();
        (marginal - self.entropy()).max(0.0)
    }

    /// `U ρ U†` for a unitary on the full space.
    pub fn conjugated(&self, unitary: &CMatrix) -> Result<DensityMatrix> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(QcorrError::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Ok(DensityMatrix::from_trusted(
            self.layout.clone(),
            unitary * &self.matrix * unitary.adjoint(),
        ))
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        crate::linalg::trace_distance(&self.matrix, &other.matrix)
    }
}

/// Partial trace keeping the (sorted, in-range) subsystems in `keep`.
pub(crate) fn partial_trace_raw(matrix: &CMatrix, layout: &SubsystemLayout, keep: &[usize]) -> CMatrix {
    let total = layout.total_dim();
    let dims = layout.dims();
    let traced: Vec<usize> = layout.complement(keep);
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let split: Vec<(usize, usize)> = (0..total)
        .map(|i| {
            let digits = layout.digits(i);
            let fold = |set: &[usize]| set.iter().fold(0, |acc, &n| acc * dims[n] + digits[n]);
            (fold(keep), fold(&traced))
        })
        .collect();
    let mut out = CMatrix::from_element(kept_dim, kept_dim, ZERO);
    for i in 0..total {
        let (ki, ti) = split[i];
        for j in 0..total {
            let (kj, tj) = split[j];
            if ti == tj {
                out[(ki, kj)] += matrix[(i, j)];
            }
        }
    }
    out
}

/// Relative entropy `S(x‖y) = −tr(x log y) − S(x)` in bits.
///
/// Evaluated in the eigenbasis of `y`. Returns `f64::INFINITY` when the
/// support of `x` is not contained in the support of `y`.
pub fn relative_entropy(x: &DensityMatrix, y: &DensityMatrix) -> Result<f64> {
    if x.layout() != y.layout() {
        return Err(QcorrError::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let spectrum = y.spectrum();
    let v = &spectrum.eigenvectors;
    let xv = x.matrix() * v;
    let mut cross = 0.0;
    for (j, &mu) in spectrum.eigenvalues.iter().enumerate() {
        let weight = v.column(j).dotc(&xv.column(j)).re;
        if mu <= tol::PSD {
            if weight > tol::SUPPORT {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross -= weight * mu.log2();
    }
    Ok((cross - x.entropy()).max(0.0))
}

/// Projective dephasing of the `measured` subsystems in the given local bases.
///
/// Returns `Σ_k Π_k ρ Π_k` where `Π_k` runs over the rank-one product
/// projectors on the measured subsystems (identity elsewhere).
pub fn dephase(rho: &DensityMatrix, basis: &LocalBasisSet, measured: &[usize]) -> Result<DensityMatrix> {
    let measured = rho.layout().normalize_subset(measured)?;
    if measured.is_empty() {
        return Err(QcorrError::EmptyMeasuredSet);
    }
    basis.check(rho.layout(), &measured)?;
    let layout = rho.layout();
    let unitary = basis.full_unitary(layout, &measured);
    let mut rotated = unitary.adjoint() * rho.matrix() * &unitary;
    let digits = layout.digit_table();
    let total = layout.total_dim();
    for i in 0..total {
        for j in 0..total {
            if measured.iter().any(|&n| digits[i][n] != digits[j][n]) {
                rotated[(i, j)] = ZERO;
            }
        }
    }
    Ok(DensityMatrix::from_trusted(
        layout.clone(),
        &unitary * rotated * unitary.adjoint(),
    ))
}
