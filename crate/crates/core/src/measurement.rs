//! Local projective measurements: basis parameterization, post-measurement
//! ensembles, the two quantum conditional entropies and the conditional
//! amplitude operator.
//!
//! A local basis on a `d`-level subsystem is the column set of a unitary built
//! from `d(d−1)/2` complex Givens rotations, each carrying a polar angle
//! `θ ∈ [0, π]` and a phase `φ ∈ [0, 2π)`. For a qubit the first basis vector
//! is the Bloch-sphere point `(θ, φ)`. Column phases are dropped because they
//! do not change the projectors.

use std::f64::consts::{PI, TAU};

use crate::error::{QcorrError, Result};
use crate::linalg::{
    hermitian_eigenvalues, is_unitary, kron_all, shannon_bits, CMatrix, CVector, Spectrum, C64,
    ZERO,
};
use crate::state::{partial_trace_raw, DensityMatrix, SubsystemLayout};
use crate::tol;

/// Number of real basis parameters for a `d`-level subsystem.
pub fn param_count(d: usize) -> usize {
    d * (d - 1)
}

fn givens_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |c| (c + 1..d).map(move |r| (c, r)))
}

/// `G₁ G₂ ⋯ G_m` for the rotation pairs `(0,1), (0,2), …, (d−2,d−1)`.
pub fn givens_unitary(d: usize, params: &[f64]) -> Result<CMatrix> {
    if params.len() != param_count(d) {
        return Err(QcorrError::BasisDimensionMismatch(format!(
            "{} parameters supplied for a {d}-level basis (expected {})",
            params.len(),
            param_count(d)
        )));
    }
    let mut u = CMatrix::identity(d, d);
    for ((j, k), pair) in givens_pairs(d).zip(params.chunks_exact(2)) {
        let (c, s) = ((0.5 * pair[0]).cos(), (0.5 * pair[0]).sin());
        let phase = C64::from_polar(1.0, pair[1]);
        for row in 0..d {
            let uj = u[(row, j)];
            let uk = u[(row, k)];
            u[(row, j)] = uj * c + uk * phase * s;
            u[(row, k)] = -uj * phase.conj() * s + uk * c;
        }
    }
    Ok(u)
}

/// Givens parameters reproducing the columns of `unitary` up to phases.
pub fn givens_params(unitary: &CMatrix) -> Vec<f64> {
    let d = unitary.nrows();
    let mut w = unitary.clone();
    let mut params = Vec::with_capacity(param_count(d));
    for (c, r) in givens_pairs(d) {
        let x = w[(c, c)];
        let y = w[(r, c)];
        let (theta, phi) = if y.norm() == 0.0 {
            (0.0, 0.0)
        } else if x.norm() == 0.0 {
            (PI, 0.0)
        } else {
            (2.0 * y.norm().atan2(x.norm()), (-y / x).arg())
        };
        let (cs, sn) = ((0.5 * theta).cos(), (0.5 * theta).sin());
        let phase = C64::from_polar(1.0, phi);
        for col in 0..d {
            let wc = w[(c, col)];
            let wr = w[(r, col)];
            w[(c, col)] = wc * cs - phase.conj() * sn * wr;
            w[(r, col)] = phase * sn * wc + wr * cs;
        }
        params.push(theta);
        params.push(wrap_phase(phi + PI));
    }
    params
}

pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// An orthonormal basis of one subsystem, stored as the columns of a unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    unitary: CMatrix,
}

impl LocalBasis {
    pub fn from_params(dim: usize, params: &[f64]) -> Result<Self> {
        Ok(LocalBasis {
            unitary: givens_unitary(dim, params)?,
        })
    }

    pub fn from_unitary(unitary: CMatrix) -> Result<Self> {
        if !is_unitary(&unitary, tol::ORTH) {
            return Err(QcorrError::BasisDimensionMismatch(
                "basis matrix is not unitary".into(),
            ));
        }
        Ok(LocalBasis { unitary })
    }

    pub fn computational(dim: usize) -> Self {
        LocalBasis {
            unitary: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// Basis vector `k`.
    pub fn vector(&self, k: usize) -> CVector {
        self.unitary.column(k).into_owned()
    }

    /// Givens angles `[θ₀, φ₀, θ₁, φ₁, …]` in radians.
    pub fn params(&self) -> Vec<f64> {
        givens_params(&self.unitary)
    }
}

/// One local basis per measured subsystem, in measured-subsystem order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasisSet {
    bases: Vec<LocalBasis>,
}

impl LocalBasisSet {
    pub fn new(bases: Vec<LocalBasis>) -> Self {
        LocalBasisSet { bases }
    }

    /// Splits a flat parameter vector over the measured subsystems.
    pub fn from_params(layout: &SubsystemLayout, measured: &[usize], params: &[f64]) -> Result<Self> {
        let expected: usize = measured.iter().map(|&n| param_count(layout.dims()[n])).sum();
        if params.len() != expected {
            return Err(QcorrError::BasisDimensionMismatch(format!(
                "{} parameters supplied, {expected} required",
                params.len()
            )));
        }
        let mut offset = 0;
        let mut bases = Vec::with_capacity(measured.len());
        for &n in measured {
            let d = layout.dims()[n];
            let count = param_count(d);
            bases.push(LocalBasis::from_params(d, &params[offset..offset + count])?);
            offset += count;
        }
        Ok(LocalBasisSet { bases })
    }

    pub fn computational(layout: &SubsystemLayout, measured: &[usize]) -> Self {
        LocalBasisSet {
            bases: measured
                .iter()
                .map(|&n| LocalBasis::computational(layout.dims()[n]))
                .collect(),
        }
    }

    pub fn bases(&self) -> &[LocalBasis] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn params(&self) -> Vec<f64> {
        self.bases.iter().flat_map(LocalBasis::params).collect()
    }

    pub fn check(&self, layout: &SubsystemLayout, measured: &[usize]) -> Result<()> {
        if self.bases.len() != measured.len() {
            return Err(QcorrError::BasisDimensionMismatch(format!(
                "{} bases for {} measured subsystems",
                self.bases.len(),
                measured.len()
            )));
        }
        for (basis, &n) in self.bases.iter().zip(measured) {
            if basis.dim() != layout.dims()[n] {
                return Err(QcorrError::BasisDimensionMismatch(format!(
                    "subsystem {n} has dimension {}, basis has {}",
                    layout.dims()[n],
                    basis.dim()
                )));
            }
        }
        Ok(())
    }

    /// `⊗ₙ Uₙ` with identities on unmeasured subsystems.
    pub(crate) fn full_unitary(&self, layout: &SubsystemLayout, measured: &[usize]) -> CMatrix {
        let identities: Vec<CMatrix> = layout.dims().iter().map(|&d| CMatrix::identity(d, d)).collect();
        let factors = (0..layout.len()).map(|n| match measured.iter().position(|&m| m == n) {
            Some(slot) => &self.bases[slot].unitary,
            None => &identities[n],
        });
        kron_all(factors)
    }

    /// `1 − (1/d)Σₖ maxₗ |⟨uₖ|vₗ⟩|²` averaged over subsystems: zero iff the
    /// two sets define the same projectors.
    pub fn projector_distance(&self, other: &LocalBasisSet) -> f64 {
        if self.bases.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .bases
            .iter()
            .zip(&other.bases)
            .map(|(a, b)| {
                let overlap = a.unitary.adjoint() * &b.unitary;
                let d = a.dim();
                let best: f64 = (0..d)
                    .map(|k| (0..d).map(|l| overlap[(k, l)].norm_sqr()).fold(0.0, f64::max))
                    .sum();
                1.0 - best / d as f64
            })
            .sum();
        total / self.bases.len() as f64
    }
}

/// One measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Basis index on each measured subsystem.
    pub label: Vec<usize>,
    pub probability: f64,
    /// Post-measurement state of the unmeasured subsystems.
    pub state: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble {
    pub measured: Vec<usize>,
    pub outcomes: Vec<Outcome>,
}

impl MeasurementEnsemble {
    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }

    /// `Σᵢ pᵢ S(ρᵢ)`.
    pub fn average_entropy(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.probability * o.state.entropy())
            .sum()
    }
}

fn proper_subset(layout: &SubsystemLayout, set: &[usize]) -> Result<Vec<usize>> {
    let set = layout.normalize_subset(set)?;
    if set.is_empty() || set.len() == layout.len() {
        return Err(QcorrError::InvalidSubset(format!(
            "{set:?} must be a proper nonempty subset of {} subsystems",
            layout.len()
        )));
    }
    Ok(set)
}

/// Measures the `measured` subsystems in `basis`; outcomes with probability
/// at or below [`tol::TRACE`] are dropped.
pub fn measure(rho: &DensityMatrix, basis: &LocalBasisSet, measured: &[usize]) -> Result<MeasurementEnsemble> {
    if measured.is_empty() {
        return Err(QcorrError::EmptyMeasuredSet);
    }
    let measured = proper_subset(rho.layout(), measured)?;
    basis.check(rho.layout(), &measured)?;
    let frame = DephasingFrame::new(rho, &measured);
    let unitaries: Vec<&CMatrix> = basis.bases().iter().map(LocalBasis::unitary).collect();
    let blocks = frame.blocks(&unitaries);
    let inner_layout = rho.layout().restrict(&frame.unmeasured);
    let label_layout = rho.layout().restrict(&measured);
    let mut outcomes = Vec::new();
    for (k, block) in blocks.into_iter().enumerate() {
        let p = crate::linalg::trace(&block).re;
        if p <= tol::TRACE {
            continue;
        }
        outcomes.push(Outcome {
            label: label_layout.digits(k),
            probability: p,
            state: DensityMatrix::from_trusted(inner_layout.clone(), block.unscale(p)),
        });
    }
    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    for o in &mut outcomes {
        o.probability /= total;
    }
    Ok(MeasurementEnsemble { measured, outcomes })
}

/// `S⁽¹⁾ = S(ρ) − S(ρ_A)` with `A = conditioned_on`. May be negative.
pub fn conditional_entropy_s1(rho: &DensityMatrix, conditioned_on: &[usize]) -> Result<f64> {
    let a = proper_subset(rho.layout(), conditioned_on)?;
    Ok(rho.entropy() - rho.partial_trace(&a)?.entropy())
}

/// `S⁽²⁾ = Σᵢ pᵢ S(ρᵢ)` after measuring `measured` in `basis`.
pub fn conditional_entropy_s2(rho: &DensityMatrix, basis: &LocalBasisSet, measured: &[usize]) -> Result<f64> {
    Ok(measure(rho, basis, measured)?.average_entropy().max(0.0))
}

/// Regularization weight mixed in when `ρ` is rank deficient.
pub const AMPLITUDE_REGULARIZATION: f64 = 1e-9;

/// `exp(log ρ − log(ρ_A ⊗ I))`.
#[derive(Debug, Clone)]
pub struct ConditionalAmplitude {
    pub operator: CMatrix,
    /// `Some(ε)` when `(1−ε)ρ + ε I/d` was used in place of `ρ`.
    pub regularization: Option<f64>,
}

impl ConditionalAmplitude {
    /// `−tr(ρ log₂ A)`.
    pub fn conditional_entropy(&self, rho: &DensityMatrix) -> f64 {
        let spectrum = Spectrum::of(&self.operator);
        let log = spectrum.apply(|x| if x > 0.0 { x.log2() } else { f64::NEG_INFINITY });
        -(rho.matrix() * log).trace().re
    }
}

pub fn conditional_amplitude(rho: &DensityMatrix, conditioned_on: &[usize]) -> Result<ConditionalAmplitude> {
    let a = proper_subset(rho.layout(), conditioned_on)?;
    let layout = rho.layout();
    let d = rho.dim();
    let spectrum = rho.spectrum();
    let rank_deficient = spectrum.eigenvalues.last().copied().unwrap_or(0.0) <= tol::PSD;
    let (matrix, spectrum, regularization) = if rank_deficient {
        let eps = AMPLITUDE_REGULARIZATION;
        let m = rho.matrix().scale(1.0 - eps) + CMatrix::identity(d, d).scale(eps / d as f64);
        let s = Spectrum::of(&m);
        (m, s, Some(eps))
    } else {
        (rho.matrix().clone(), spectrum, None)
    };
    let reduced = partial_trace_raw(&matrix, layout, &a);
    let reduced_spectrum = Spectrum::of(&reduced);
    if reduced_spectrum.eigenvalues.iter().any(|&x| x <= 0.0) || spectrum.eigenvalues.iter().any(|&x| x <= 0.0) {
        return Err(QcorrError::SupportError(
            "conditioning marginal is singular after regularization".into(),
        ));
    }
    let log_rho = spectrum.apply(f64::ln);
    let log_reduced = reduced_spectrum.apply(f64::ln);
    // log(ρ_A ⊗ I) embedded in the original subsystem order.
    let digits = layout.digit_table();
    let rest = layout.complement(&a);
    let dims = layout.dims();
    let fold = |dg: &[usize], set: &[usize]| set.iter().fold(0, |acc, &n| acc * dims[n] + dg[n]);
    let mut embedded = CMatrix::from_element(d, d, ZERO);
    for i in 0..d {
        for j in 0..d {
            if fold(&digits[i], &rest) == fold(&digits[j], &rest) {
                embedded[(i, j)] = log_reduced[(fold(&digits[i], &a), fold(&digits[j], &a))];
            }
        }
    }
    let operator = Spectrum::of(&(log_rho - embedded)).apply(f64::exp);
    Ok(ConditionalAmplitude {
        operator,
        regularization,
    })
}

/// Precomputed index bookkeeping for repeated dephasing of one state.
///
/// In the rotated frame `U†ρU` the dephased state is block diagonal with one
/// block per joint outcome on the measured subsystems; only those blocks are
/// ever formed.
#[derive(Debug, Clone)]
pub(crate) struct DephasingFrame {
    layout: SubsystemLayout,
    measured: Vec<usize>,
    unmeasured: Vec<usize>,
    rho: CMatrix,
    /// Global indices belonging to each outcome block.
    block_indices: Vec<Vec<usize>>,
}

/// Summary of a dephasing in one set of local bases.
#[derive(Debug, Clone)]
pub(crate) struct FrameStats {
    /// Joint outcome probabilities, mixed radix over measured subsystems.
    pub probs: Vec<f64>,
    /// `S(χ)`, the entropy of the dephased state.
    pub dephased_entropy: f64,
}

impl DephasingFrame {
    /// `measured` must be normalized and nonempty.
    pub fn new(rho: &DensityMatrix, measured: &[usize]) -> Self {
        let layout = rho.layout().clone();
        let dims = layout.dims().to_vec();
        let unmeasured = layout.complement(measured);
        let labels: usize = measured.iter().map(|&n| dims[n]).product();
        let mut block_indices = vec![Vec::new(); labels];
        for i in 0..layout.total_dim() {
            let digits = layout.digits(i);
            let label = measured.iter().fold(0, |acc, &n| acc * dims[n] + digits[n]);
            block_indices[label].push(i);
        }
        DephasingFrame {
            layout,
            measured: measured.to_vec(),
            unmeasured,
            rho: rho.matrix().clone(),
            block_indices,
        }
    }

    fn full_unitary(&self, unitaries: &[&CMatrix]) -> CMatrix {
        let identities: Vec<CMatrix> = self.layout.dims().iter().map(|&d| CMatrix::identity(d, d)).collect();
        let factors = (0..self.layout.len()).map(|n| match self.measured.iter().position(|&m| m == n) {
            Some(slot) => unitaries[slot],
            None => &identities[n],
        });
        kron_all(factors)
    }

    /// Diagonal blocks of `U†ρU`, one per joint outcome (unnormalized).
    pub fn blocks(&self, unitaries: &[&CMatrix]) -> Vec<CMatrix> {
        let u = self.full_unitary(unitaries);
        let rho_u = &self.rho * &u;
        let dim = self.rho.nrows();
        self.block_indices
            .iter()
            .map(|idx| {
                let m = idx.len();
                let mut block = CMatrix::from_element(m, m, ZERO);
                for (a, &i) in idx.iter().enumerate() {
                    for (b, &j) in idx.iter().enumerate().skip(a) {
                        let mut acc = ZERO;
                        for l in 0..dim {
                            acc += u[(l, i)].conj() * rho_u[(l, j)];
                        }
                        block[(a, b)] = acc;
                        block[(b, a)] = acc.conj();
                    }
                }
                for a in 0..m {
                    block[(a, a)].im = 0.0;
                }
                block
            })
            .collect()
    }

    pub fn stats(&self, unitaries: &[&CMatrix]) -> FrameStats {
        let blocks = self.blocks(unitaries);
        let mut probs = Vec::with_capacity(blocks.len());
        let mut dephased_entropy = 0.0;
        for block in &blocks {
            let eig = hermitian_eigenvalues(block);
            probs.push(eig.iter().sum::<f64>().max(0.0));
            dephased_entropy += shannon_bits(eig);
        }
        FrameStats {
            probs,
            dephased_entropy,
        }
    }

    /// Entropy of each measured subsystem's dephased marginal, from the joint
    /// outcome distribution.
    pub fn measured_marginal_entropies(&self, probs: &[f64]) -> Vec<f64> {
        let labels = self.layout.restrict(&self.measured);
        let mut marginals: Vec<Vec<f64>> = labels.dims().iter().map(|&d| vec![0.0; d]).collect();
        for (k, &p) in probs.iter().enumerate() {
            for (slot, digit) in labels.digits(k).into_iter().enumerate() {
                marginals[slot][digit] += p;
            }
        }
        marginals.into_iter().map(shannon_bits).collect()
    }
}

/// Eigenbasis of each marginal, with degenerate eigenspaces aligned to the
/// computational basis. The flag reports whether any degeneracy was found.
pub fn marginal_eigenbases(rho: &DensityMatrix, measured: &[usize]) -> (LocalBasisSet, bool) {
    let mut degenerate = false;
    let mut bases = Vec::with_capacity(measured.len());
    for &n in measured {
        let marginal = rho.partial_trace(&[n]).expect("normalized subsystem index");
        let (unitary, flag) = aligned_eigenbasis(&marginal.spectrum(), DEGENERACY_GAP);
        degenerate |= flag;
        bases.push(LocalBasis { unitary });
    }
    (LocalBasisSet::new(bases), degenerate)
}

/// Eigenvalue gap below which two marginal eigenvalues count as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

fn aligned_eigenbasis(spectrum: &Spectrum, gap: f64) -> (CMatrix, bool) {
    let d = spectrum.eigenvalues.len();
    let mut out = CMatrix::from_element(d, d, ZERO);
    let mut degenerate = false;
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && spectrum.eigenvalues[end - 1] - spectrum.eigenvalues[end] < gap {
            end += 1;
        }
        if end - start == 1 {
            out.set_column(start, &spectrum.eigenvectors.column(start));
        } else {
            degenerate = true;
            // Project computational basis vectors onto the eigenspace and
            // orthonormalize in index order.
            let block = spectrum.eigenvectors.columns(start, end - start).into_owned();
            let proj = &block * block.adjoint();
            let mut chosen: Vec<CVector> = Vec::new();
            for e in 0..d {
                if chosen.len() == end - start {
                    break;
                }
                let mut v = proj.column(e).into_owned();
                for c in &chosen {
                    let overlap = c.dotc(&v);
                    v -= c * overlap;
                }
                let norm = v.norm();
                if norm > 1e-6 {
                    chosen.push(v.unscale(norm));
                }
            }
            for (offset, v) in chosen.iter().enumerate() {
                out.set_column(start + offset, v);
            }
        }
        start = end;
    }
    (out, degenerate)
}
