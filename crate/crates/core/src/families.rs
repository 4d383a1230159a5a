//! Named state families with known correlation structure, plus seeded random
//! generators for property tests and verification sweeps.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{QcorrError, Result};
use crate::linalg::{kron_all, CMatrix, CVector, C64, ONE, ZERO};
use crate::state::{DensityMatrix, SubsystemLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    fn amplitudes(self) -> [f64; 4] {
        let s = FRAC_1_SQRT_2;
        match self {
            BellKind::PhiPlus => [s, 0.0, 0.0, s],
            BellKind::PhiMinus => [s, 0.0, 0.0, -s],
            BellKind::PsiPlus => [0.0, s, s, 0.0],
            BellKind::PsiMinus => [0.0, s, -s, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily {
    Bell(BellKind),
    /// `p|Φ⁺⟩⟨Φ⁺| + (1−p) I/4`, `p ∈ [0, 1]`.
    Werner(f64),
    /// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
    Ghz(usize),
    /// Uniform superposition of single excitations on `n` qubits.
    WState(usize),
    /// `Σ p_k |k⟩⟨k|` in the computational product basis; `probs` is the
    /// row-major joint table over `dims`.
    ClassicalClassical { dims: Vec<usize>, probs: Vec<f64> },
    /// `Σᵢ pᵢ |i⟩⟨i| ⊗ ρᵢ`, classical on the first subsystem.
    ClassicalQuantum { probs: Vec<f64>, states: Vec<DensityMatrix> },
    Product(Vec<DensityMatrix>),
    /// Partial trace of a seeded Gaussian pure state on `dim × rank`.
    RandomMixed { dims: Vec<usize>, rank: usize, seed: u64 },
}

fn pure(amplitudes: &[f64], layout: SubsystemLayout) -> Result<DensityMatrix> {
    let psi = CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|&a| C64::new(a, 0.0)));
    DensityMatrix::from_pure(&psi, layout)
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| p.is_nan() || *p < 0.0) {
        return Err(QcorrError::ParameterOutOfRange("probabilities must be nonnegative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > crate::tol::TRACE {
        return Err(QcorrError::ParameterOutOfRange(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

impl StateFamily {
    /// Table given as rows over subsystem A and columns over subsystem B.
    pub fn classical_table(table: &[Vec<f64>]) -> Result<Self> {
        let rows = table.len();
        let cols = table.first().map(Vec::len).unwrap_or(0);
        if table.iter().any(|r| r.len() != cols) {
            return Err(QcorrError::ParameterOutOfRange("ragged probability table".into()));
        }
        Ok(StateFamily::ClassicalClassical {
            dims: vec![rows, cols],
            probs: table.concat(),
        })
    }

    pub fn instantiate(&self) -> Result<DensityMatrix> {
        match self {
            StateFamily::Bell(kind) => pure(&kind.amplitudes(), SubsystemLayout::qubits(2)?),
            StateFamily::Werner(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(QcorrError::ParameterOutOfRange(format!("Werner p = {p} outside [0, 1]")));
                }
                let bell = pure(&BellKind::PhiPlus.amplitudes(), SubsystemLayout::qubits(2)?)?;
                let m = bell.matrix().scale(*p) + CMatrix::identity(4, 4).scale((1.0 - p) / 4.0);
                DensityMatrix::validate(m, SubsystemLayout::qubits(2)?)
            }
            StateFamily::Ghz(n) => {
                let layout = qubit_register(*n)?;
                let mut amps = vec![0.0; layout.total_dim()];
                amps[0] = FRAC_1_SQRT_2;
                amps[layout.total_dim() - 1] = FRAC_1_SQRT_2;
                pure(&amps, layout)
            }
            StateFamily::WState(n) => {
                let layout = qubit_register(*n)?;
                let mut amps = vec![0.0; layout.total_dim()];
                for k in 0..*n {
                    amps[1 << k] = 1.0 / (*n as f64).sqrt();
                }
                pure(&amps, layout)
            }
            StateFamily::ClassicalClassical { dims, probs } => {
                let layout = SubsystemLayout::new(dims.clone())?;
                if probs.len() != layout.total_dim() {
                    return Err(QcorrError::ParameterOutOfRange(format!(
                        "{} probabilities for a {}-dimensional space",
                        probs.len(),
                        layout.total_dim()
                    )));
                }
                check_probs(probs)?;
                DensityMatrix::from_diagonal(probs, layout)
            }
            StateFamily::ClassicalQuantum { probs, states } => {
                if probs.len() != states.len() || probs.len() < 2 {
                    return Err(QcorrError::ParameterOutOfRange(
                        "need one conditional state per probability, at least two".into(),
                    ));
                }
                check_probs(probs)?;
                let inner = states[0].layout().clone();
                if states.iter().any(|s| s.layout() != &inner) {
                    return Err(QcorrError::ParameterOutOfRange(
                        "conditional states must share a layout".into(),
                    ));
                }
                let flags = SubsystemLayout::new(vec![probs.len()])?;
                let layout = flags.concat(&inner)?;
                let d = probs.len();
                let mut m = CMatrix::from_element(layout.total_dim(), layout.total_dim(), ZERO);
                for (i, (p, s)) in probs.iter().zip(states).enumerate() {
                    let mut flag = CMatrix::from_element(d, d, ZERO);
                    flag[(i, i)] = ONE;
                    m += flag.kronecker(s.matrix()).scale(*p);
                }
                DensityMatrix::validate(m, layout)
            }
            StateFamily::Product(factors) => {
                let mut iter = factors.iter();
                let first = iter
                    .next()
                    .ok_or_else(|| QcorrError::ParameterOutOfRange("empty product".into()))?
                    .clone();
                iter.try_fold(first, |acc, f| acc.tensor(f))
            }
            StateFamily::RandomMixed { dims, rank, seed } => {
                let layout = SubsystemLayout::new(dims.clone())?;
                let dim = layout.total_dim();
                if *rank == 0 || *rank > dim {
                    return Err(QcorrError::ParameterOutOfRange(format!(
                        "rank {rank} outside 1..={dim}"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(random::density(&layout, *rank, &mut rng))
            }
        }
    }
}

fn qubit_register(n: usize) -> Result<SubsystemLayout> {
    if n < 2 {
        return Err(QcorrError::ParameterOutOfRange(format!("{n} qubits; need at least 2")));
    }
    SubsystemLayout::qubits(n).map_err(|_| QcorrError::ParameterOutOfRange(format!("{n} qubits is too many")))
}

/// Seeded random states and unitaries.
pub mod random {
    use super::*;

    pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
    pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..d {
            let phase = r[(j, j)] / r[(j, j)].norm();
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    /// `U₁ ⊗ ⋯ ⊗ U_N` with independent Haar factors.
    pub fn local_unitary<R: Rng + ?Sized>(layout: &SubsystemLayout, rng: &mut R) -> CMatrix {
        let factors: Vec<CMatrix> = layout.dims().iter().map(|&d| unitary(d, rng)).collect();
        kron_all(&factors)
    }

    /// Probability vector drawn uniformly from the simplex.
    pub fn simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        e.into_iter().map(|x| x / total).collect()
    }

    /// Rank-`rank` state from the partial trace of a Gaussian pure state.
    pub fn density<R: Rng + ?Sized>(layout: &SubsystemLayout, rank: usize, rng: &mut R) -> DensityMatrix {
        let d = layout.total_dim();
        let g = CMatrix::from_fn(d, rank, |_, _| gaussian_complex(rng));
        let m = &g * g.adjoint();
        let tr = crate::linalg::trace(&m).re;
        DensityMatrix::validate(m.unscale(tr), layout.clone()).expect("Gram matrices are valid states")
    }

    pub fn pure_state<R: Rng + ?Sized>(layout: &SubsystemLayout, rng: &mut R) -> DensityMatrix {
        density(layout, 1, rng)
    }

    pub fn product<R: Rng + ?Sized>(layout: &SubsystemLayout, rng: &mut R) -> DensityMatrix {
        let factors: Vec<DensityMatrix> = layout
            .dims()
            .iter()
            .map(|&d| density(&SubsystemLayout::new(vec![d]).expect("d ≥ 2"), d, rng))
            .collect();
        StateFamily::Product(factors).instantiate().expect("valid factors")
    }

    /// Classical-classical state, diagonal in a random local product basis
    /// (the computational basis when `rotate` is false).
    pub fn classical_classical<R: Rng + ?Sized>(layout: &SubsystemLayout, rotate: bool, rng: &mut R) -> DensityMatrix {
        let probs = simplex(layout.total_dim(), rng);
        let chi = DensityMatrix::from_diagonal(&probs, layout.clone()).expect("valid probabilities");
        if rotate {
            chi.conjugated(&local_unitary(layout, rng)).expect("matching dimension")
        } else {
            chi
        }
    }

    /// `Σᵢ pᵢ |i⟩⟨i| ⊗ ρᵢ` with random full-rank `ρᵢ` on the remaining
    /// subsystems of `layout`; the flag basis is rotated when `rotate` is set.
    pub fn classical_quantum<R: Rng + ?Sized>(layout: &SubsystemLayout, rotate: bool, rng: &mut R) -> DensityMatrix {
        let flags = layout.dims()[0];
        let inner = SubsystemLayout::new(layout.dims()[1..].to_vec()).expect("at least two subsystems");
        let probs = simplex(flags, rng);
        let states = (0..flags).map(|_| density(&inner, inner.total_dim(), rng)).collect();
        let rho = StateFamily::ClassicalQuantum { probs, states }.instantiate().expect("valid ensemble");
        if rotate {
            let u = unitary(flags, rng);
            let full = u.kronecker(&CMatrix::identity(inner.total_dim(), inner.total_dim()));
            rho.conjugated(&full).expect("matching dimension")
        } else {
            rho
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn bell_phi_plus_corners() {
        let rho = StateFamily::Bell(BellKind::PhiPlus).instantiate().unwrap();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((rho.matrix()[(i, j)].re - 0.5).abs() < 1e-15);
        }
        assert!(rho.matrix()[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn werner_endpoints() {
        let one = StateFamily::Werner(1.0).instantiate().unwrap();
        let bell = StateFamily::Bell(BellKind::PhiPlus).instantiate().unwrap();
        assert!(max_abs_diff(one.matrix(), bell.matrix()) < 1e-15);
        let zero = StateFamily::Werner(0.0).instantiate().unwrap();
        assert!(max_abs_diff(zero.matrix(), &CMatrix::identity(4, 4).unscale(4.0)) < 1e-15);
        assert!(StateFamily::Werner(1.5).instantiate().is_err());
    }

    #[test]
    fn classical_table() {
        let rho = StateFamily::classical_table(&[vec![0.5, 0.0], vec![0.0, 0.5]])
            .unwrap()
            .instantiate()
            .unwrap();
        let diag: Vec<f64> = (0..4).map(|i| rho.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![0.5, 0.0, 0.0, 0.5]);
        assert!(StateFamily::classical_table(&[vec![0.5, 0.6], vec![0.0, 0.5]])
            .unwrap()
            .instantiate()
            .is_err());
    }

    #[test]
    fn ghz_and_w_are_pure() {
        for n in 2..=4 {
            let g = StateFamily::Ghz(n).instantiate().unwrap();
            assert!(g.entropy() < 1e-12);
            assert!((g.partial_trace(&[0]).unwrap().entropy() - 1.0).abs() < 1e-12);
            let w = StateFamily::WState(n).instantiate().unwrap();
            assert!(w.entropy() < 1e-12);
        }
        assert!(StateFamily::Ghz(1).instantiate().is_err());
        assert!(StateFamily::Ghz(7).instantiate().is_err());
    }

    #[test]
    fn random_mixed_reproducible_and_ranked() {
        let fam = StateFamily::RandomMixed { dims: vec![2, 2], rank: 2, seed: 11 };
        let a = fam.instantiate().unwrap();
        let b = fam.instantiate().unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let eig = a.spectrum().eigenvalues;
        assert!(eig[1] > 1e-6 && eig[2].abs() < 1e-12);
        assert!(StateFamily::RandomMixed { dims: vec![2, 2], rank: 5, seed: 0 }.instantiate().is_err());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random::unitary(3, &mut rng);
        assert!(crate::linalg::is_unitary(&u, 1e-12));
    }
}
