//! Small dense complex linear algebra on top of `nalgebra`.
//!
//! Every spectral quantity in the crate goes through [`Spectrum::of`], the
//! Hermitian eigendecomposition. Matrix logarithms and exponentials are
//! evaluated through it as well.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn of(matrix: &CMatrix) -> Spectrum {
        let n = matrix.nrows();
        let eig = SymmetricEigen::new(hermitian_part(matrix));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Spectrum { eigenvalues, eigenvectors }
    }

    /// `V f(Λ) V†`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = f(lambda);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    /// Largest deviation of `V†V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.eigenvalues.len();
        let gram = self.eigenvectors.adjoint() * &self.eigenvectors;
        max_abs_diff(&gram, &CMatrix::identity(n, n))
    }
}

/// Eigenvalues only. Closed forms for 1×1 and 2×2, which dominate the
/// conditional-state blocks evaluated inside the basis searches.
pub fn hermitian_eigenvalues(matrix: &CMatrix) -> Vec<f64> {
    match matrix.nrows() {
        0 => Vec::new(),
        1 => vec![matrix[(0, 0)].re],
        2 => {
            let a = matrix[(0, 0)].re;
            let d = matrix[(1, 1)].re;
            let b = 0.5 * (matrix[(0, 1)] + matrix[(1, 0)].conj());
            let mean = 0.5 * (a + d);
            let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            vec![mean + radius, mean - radius]
        }
        _ => {
            let mut values: Vec<f64> = SymmetricEigen::new(hermitian_part(matrix))
                .eigenvalues
                .iter()
                .copied()
                .collect();
            values.sort_by(|a, b| b.total_cmp(a));
            values
        }
    }
}

/// `−Σ λ log₂ λ` with `0 log 0 = 0`; negative round-off is treated as zero.
/// Works on unnormalized spectra too.
pub fn shannon_bits<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values
        .into_iter()
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.log2())
        .sum()
}

pub fn hermitian_part(matrix: &CMatrix) -> CMatrix {
    (matrix + matrix.adjoint()).scale(0.5)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn trace(matrix: &CMatrix) -> C64 {
    (0..matrix.nrows()).map(|i| matrix[(i, i)]).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a, I: IntoIterator<Item = &'a CMatrix>>(factors: I) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, m| acc.kronecker(m))
}

pub fn projector(vector: &CVector) -> CMatrix {
    vector * vector.adjoint()
}

/// Trace norm distance `½‖a − b‖₁` for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b))
        .into_iter()
        .map(f64::abs)
        .sum::<f64>()
}

pub fn is_unitary(matrix: &CMatrix, tol: f64) -> bool {
    let n = matrix.nrows();
    matrix.ncols() == n && max_abs_diff(&(matrix.adjoint() * matrix), &CMatrix::identity(n, n)) <= tol
}
