//! Relative-entropy minimization over separable states.
//!
//! The search space is the set of convex mixtures `Σᵢ wᵢ |ψᵢ⟩⟨ψᵢ|` of pure
//! product states `|ψᵢ⟩ = |a_{i,1}⟩ ⊗ ⋯ ⊗ |a_{i,N}⟩`. Weights are a softmax of
//! free logits and each local factor is an unnormalized complex vector, so the
//! parameterization has no boundary. Mixed product factors are covered by
//! spreading them over several pure terms.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::lbfgs::lbfgs;
use super::{OptimizerDiagnostics, OptimizerSettings};
use crate::error::{QcorrError, Result};
use crate::linalg::{CMatrix, CVector, Spectrum, C64, ZERO};
use crate::measurement::{marginal_eigenbases, LocalBasisSet};
use crate::state::{relative_entropy, DensityMatrix, SubsystemLayout};

/// Smallest eigenvalue of σ used inside the logarithm.
const EIGEN_FLOOR: f64 = 1e-300;
/// Weight given to padding terms in structured starting points.
const PADDING_WEIGHT: f64 = 1e-9;
/// Two optima closer than this in trace distance count as one basin.
const BASIN_DISTANCE: f64 = 1e-3;
/// Relative entropies at or below this count as exactly zero.
const EXACT_ZERO: f64 = 1e-13;

/// An explicit decomposition `σ = Σᵢ wᵢ ⊗ₙ |a_{i,n}⟩⟨a_{i,n}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableAnsatz {
    layout: SubsystemLayout,
    weights: Vec<f64>,
    factors: Vec<Vec<CVector>>,
}

impl SeparableAnsatz {
    /// Weights are renormalized; factor vectors are normalized.
    pub fn new(layout: SubsystemLayout, weights: Vec<f64>, factors: Vec<Vec<CVector>>) -> Result<Self> {
        if weights.len() != factors.len() || weights.is_empty() {
            return Err(QcorrError::ParameterOutOfRange(
                "one factor list per weight required".into(),
            ));
        }
        if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(QcorrError::ParameterOutOfRange("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(QcorrError::ParameterOutOfRange("weights sum to zero".into()));
        }
        let mut normalized = Vec::with_capacity(factors.len());
        for term in factors {
            if term.len() != layout.len() {
                return Err(QcorrError::ParameterOutOfRange(
                    "one factor per subsystem required".into(),
                ));
            }
            let mut out = Vec::with_capacity(term.len());
            for (v, &d) in term.into_iter().zip(layout.dims()) {
                if v.len() != d || v.norm() == 0.0 {
                    return Err(QcorrError::ParameterOutOfRange(format!(
                        "factor must be a nonzero vector of length {d}"
                    )));
                }
                let norm = v.norm();
                out.push(v.unscale(norm));
            }
            normalized.push(out);
        }
        Ok(SeparableAnsatz {
            layout,
            weights: weights.iter().map(|w| w / total).collect(),
            factors: normalized,
        })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Local pure states of term `i`, one per subsystem.
    pub fn factors(&self, i: usize) -> &[CVector] {
        &self.factors[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Product vector of term `i`.
    pub fn product_vector(&self, i: usize) -> CVector {
        kron_vectors(&self.factors[i])
    }

    pub fn assemble(&self) -> DensityMatrix {
        let d = self.layout.total_dim();
        let mut sigma = CMatrix::from_element(d, d, ZERO);
        for i in 0..self.len() {
            let psi = self.product_vector(i);
            sigma += (&psi * psi.adjoint()).scale(self.weights[i]);
        }
        DensityMatrix::from_trusted(self.layout.clone(), sigma)
    }

    /// Drops terms with weight below `threshold` and renormalizes.
    pub fn pruned(&self, threshold: f64) -> SeparableAnsatz {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] >= threshold).collect();
        if keep.is_empty() {
            return self.clone();
        }
        let total: f64 = keep.iter().map(|&i| self.weights[i]).sum();
        SeparableAnsatz {
            layout: self.layout.clone(),
            weights: keep.iter().map(|&i| self.weights[i] / total).collect(),
            factors: keep.iter().map(|&i| self.factors[i].clone()).collect(),
        }
    }

    /// Decomposition of the state obtained by dephasing `rho` in the product
    /// basis `bases` (one basis per subsystem).
    pub fn from_dephasing(rho: &DensityMatrix, bases: &LocalBasisSet) -> Result<Self> {
        let layout = rho.layout().clone();
        let all = layout.all();
        bases.check(&layout, &all)?;
        let mut weights = Vec::new();
        let mut factors = Vec::new();
        for k in 0..layout.total_dim() {
            let digits = layout.digits(k);
            let term: Vec<CVector> = digits
                .iter()
                .zip(bases.bases())
                .map(|(&j, b)| b.vector(j))
                .collect();
            let psi = kron_vectors(&term);
            let p = psi.dotc(&(rho.matrix() * &psi)).re.max(0.0);
            weights.push(p);
            factors.push(term);
        }
        SeparableAnsatz::new(layout, weights, factors)
    }

    /// Eigen-decomposition of the product of marginals.
    pub fn marginal_product(rho: &DensityMatrix) -> Result<Self> {
        let layout = rho.layout().clone();
        let spectra: Vec<Spectrum> = rho.marginals().iter().map(DensityMatrix::spectrum).collect();
        let mut weights = Vec::new();
        let mut factors = Vec::new();
        for k in 0..layout.total_dim() {
            let digits = layout.digits(k);
            let mut w = 1.0;
            let mut term = Vec::with_capacity(layout.len());
            for (s, &j) in spectra.iter().zip(&digits) {
                w *= s.eigenvalues[j].max(0.0);
                term.push(s.eigenvectors.column(j).into_owned());
            }
            weights.push(w);
            factors.push(term);
        }
        SeparableAnsatz::new(layout, weights, factors)
    }
}

fn kron_vectors(factors: &[CVector]) -> CVector {
    factors.iter().fold(CVector::from_element(1, C64::new(1.0, 0.0)), |acc, v| acc.kronecker(v))
}

/// Outcome of [`minimize_over_separable`].
#[derive(Debug, Clone)]
pub struct SeparableOptimum {
    /// `S(ρ‖σ)` in bits, recomputed from the assembled σ.
    pub value: f64,
    pub sigma: DensityMatrix,
    pub ansatz: SeparableAnsatz,
    pub diagnostics: OptimizerDiagnostics,
}

impl SeparableOptimum {
    /// The explicit product decomposition, when it certifies `S(ρ‖σ) ≤ tol`.
    pub fn certificate(&self, tol: f64) -> Option<&SeparableAnsatz> {
        (self.value <= tol).then_some(&self.ansatz)
    }
}

/// Packs parameters as `[logits (k) | term 0 factors | term 1 factors | …]`,
/// each factor stored as `d` real parts followed by `d` imaginary parts.
struct Packing {
    layout: SubsystemLayout,
    terms: usize,
    digits: Vec<Vec<usize>>,
}

impl Packing {
    fn new(layout: &SubsystemLayout, terms: usize) -> Self {
        Packing {
            layout: layout.clone(),
            terms,
            digits: layout.digit_table(),
        }
    }

    fn per_term(&self) -> usize {
        self.layout.dims().iter().map(|d| 2 * d).sum()
    }

    fn len(&self) -> usize {
        self.terms * (1 + self.per_term())
    }

    fn factor_offset(&self, term: usize, subsystem: usize) -> usize {
        self.terms
            + term * self.per_term()
            + self.layout.dims()[..subsystem].iter().map(|d| 2 * d).sum::<usize>()
    }

    fn pack(&self, weights: &[f64], factors: &[Vec<CVector>], floor: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for (i, &w) in weights.iter().enumerate() {
            x[i] = (w + floor).ln();
        }
        for (i, term) in factors.iter().enumerate() {
            for (n, v) in term.iter().enumerate() {
                let off = self.factor_offset(i, n);
                let d = v.len();
                for a in 0..d {
                    x[off + a] = v[a].re;
                    x[off + d + a] = v[a].im;
                }
            }
        }
        x
    }

    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let logits = &x[..self.terms];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }

    /// Normalized factors and their pre-normalization lengths.
    fn factors(&self, x: &[f64]) -> (Vec<Vec<CVector>>, Vec<Vec<f64>>) {
        let mut factors = Vec::with_capacity(self.terms);
        let mut norms = Vec::with_capacity(self.terms);
        for i in 0..self.terms {
            let mut term = Vec::with_capacity(self.layout.len());
            let mut term_norms = Vec::with_capacity(self.layout.len());
            for (n, &d) in self.layout.dims().iter().enumerate() {
                let off = self.factor_offset(i, n);
                let v = CVector::from_fn(d, |a, _| C64::new(x[off + a], x[off + d + a]));
                let norm = v.norm().max(1e-150);
                term.push(v.unscale(norm));
                term_norms.push(norm);
            }
            factors.push(term);
            norms.push(term_norms);
        }
        (factors, norms)
    }

    fn ansatz(&self, x: &[f64]) -> Result<SeparableAnsatz> {
        let (factors, _) = self.factors(x);
        SeparableAnsatz::new(self.layout.clone(), self.weights(x), factors)
    }
}

/// `S(ρ‖σ(x))` in bits and its gradient.
struct Objective<'a> {
    rho: &'a CMatrix,
    rho_entropy: f64,
    packing: &'a Packing,
}

impl Objective<'_> {
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.packing;
        let dim = p.layout.total_dim();
        let weights = p.weights(x);
        let (factors, norms) = p.factors(x);
        let psis: Vec<CVector> = factors.iter().map(|f| kron_vectors(f)).collect();

        let mut sigma = CMatrix::from_element(dim, dim, ZERO);
        for (psi, &w) in psis.iter().zip(&weights) {
            sigma += (psi * psi.adjoint()).scale(w);
        }
        let spectrum = Spectrum::of(&sigma);
        let mu: Vec<f64> = spectrum.eigenvalues.iter().map(|&m| m.max(EIGEN_FLOOR)).collect();
        let v = &spectrum.eigenvectors;
        let rho_eig = v.adjoint() * self.rho * v;
        let ln_mu: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
        let cross: f64 = (0..dim).map(|a| -rho_eig[(a, a)].re * ln_mu[a]).sum();
        let value = cross / LN_2 - self.rho_entropy;

        // Fréchet derivative of log at σ applied to ρ, in σ's eigenbasis.
        let mut g_eig = rho_eig;
        for a in 0..dim {
            for b in 0..dim {
                let gap = mu[a] - mu[b];
                let divided = if gap.abs() <= 1e-12 * mu[a].max(mu[b]) {
                    2.0 / (mu[a] + mu[b])
                } else {
                    (ln_mu[a] - ln_mu[b]) / gap
                };
                g_eig[(a, b)] *= divided;
            }
        }
        // dS = tr(F dσ) with F = −Dlog_σ[ρ] / ln 2
        let f_op = (v * g_eig * v.adjoint()).scale(-1.0 / LN_2);

        let mut h = vec![0.0; p.terms];
        for (i, psi) in psis.iter().enumerate() {
            let y = &f_op * psi;
            h[i] = psi.dotc(&y).re;
            let w = weights[i];
            for (n, &d) in p.layout.dims().iter().enumerate() {
                // (M a)_α: contract y with the conjugated other factors
                let mut ma = vec![ZERO; d];
                for (idx, digits) in p.digits.iter().enumerate() {
                    let mut coeff = C64::new(1.0, 0.0);
                    for (m, &digit) in digits.iter().enumerate() {
                        if m != n {
                            coeff *= factors[i][m][digit].conj();
                        }
                    }
                    ma[digits[n]] += coeff * y[idx];
                }
                let a = &factors[i][n];
                let off = p.factor_offset(i, n);
                let scale = 2.0 * w / norms[i][n];
                for alpha in 0..d {
                    let r = ma[alpha] - a[alpha] * h[i];
                    grad[off + alpha] = scale * r.re;
                    grad[off + d + alpha] = scale * r.im;
                }
            }
        }
        let mean: f64 = weights.iter().zip(&h).map(|(w, hi)| w * hi).sum();
        for i in 0..p.terms {
            grad[i] = weights[i] * (h[i] - mean);
        }
        value
    }
}

fn random_start(layout: &SubsystemLayout, terms: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<CVector>>) {
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 0.1).collect();
    let factors = (0..terms)
        .map(|_| {
            layout
                .dims()
                .iter()
                .map(|&d| {
                    CVector::from_fn(d, |_, _| {
                        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                    })
                })
                .collect()
        })
        .collect();
    (weights, factors)
}

fn padded(structured: &SeparableAnsatz, terms: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<CVector>>) {
    let mut weights = structured.weights.clone();
    let mut factors = structured.factors.clone();
    weights.truncate(terms);
    factors.truncate(terms);
    let (_, extra) = random_start(&structured.layout, terms - weights.len(), rng);
    for f in extra {
        weights.push(0.0);
        factors.push(f);
    }
    (weights, factors)
}

/// Minimizes `S(ρ‖σ)` over separable σ.
///
/// Starting points, in tie-break priority order: dephasings of `ρ` in each
/// `hints` product basis, in the computational basis and in the marginal
/// eigenbases; the product of marginals; then seeded random mixtures until
/// `settings.restarts` quasi-Newton runs are scheduled. The structured
/// decompositions are also scored as-is, so the result never exceeds
/// `S(ρ‖χ)` for any hinted dephasing `χ`.
pub fn minimize_over_separable(
    rho: &DensityMatrix,
    settings: &OptimizerSettings,
    hints: &[LocalBasisSet],
) -> Result<SeparableOptimum> {
    settings.validate()?;
    let layout = rho.layout().clone();
    let all = layout.all();
    let dim = layout.total_dim();
    let terms = settings.separable_terms.unwrap_or(dim * dim).max(1);

    let mut structured: Vec<SeparableAnsatz> = Vec::new();
    for hint in hints {
        structured.push(SeparableAnsatz::from_dephasing(rho, hint)?);
    }
    structured.push(SeparableAnsatz::from_dephasing(rho, &LocalBasisSet::computational(&layout, &all))?);
    structured.push(SeparableAnsatz::from_dephasing(rho, &marginal_eigenbases(rho, &all).0)?);
    structured.push(SeparableAnsatz::marginal_product(rho)?);

    // A structured candidate at zero distance is already optimal.
    let structured_values: Vec<f64> = structured
        .iter()
        .map(|s| relative_entropy(rho, &s.assemble()).unwrap_or(f64::INFINITY))
        .collect();
    if let Some(k) = structured_values.iter().position(|&v| v <= EXACT_ZERO) {
        let ansatz = structured[k].clone();
        let value = structured_values[k];
        return Ok(SeparableOptimum {
            value,
            sigma: ansatz.assemble(),
            ansatz,
            diagnostics: OptimizerDiagnostics {
                restarts: 0,
                evaluations: structured.len(),
                grid_points_per_angle: 0,
                best: value,
                second_best: None,
                gap: None,
                basins: 1,
                converged: true,
            },
        });
    }

    let packing = Packing::new(&layout, terms);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for (k, s) in structured.iter().enumerate() {
        if starts.len() >= settings.restarts {
            break;
        }
        let mut rng = seeded(settings.seed, k as u64);
        let (w, f) = padded(s, terms, &mut rng);
        starts.push(packing.pack(&w, &f, PADDING_WEIGHT));
    }
    let mut stream = structured.len() as u64;
    while starts.len() < settings.restarts.max(structured.len().min(settings.restarts) + 1) {
        let mut rng = seeded(settings.seed, stream);
        stream += 1;
        let (w, f) = random_start(&layout, terms, &mut rng);
        starts.push(packing.pack(&w, &f, 0.0));
    }

    let objective = Objective {
        rho: rho.matrix(),
        rho_entropy: rho.entropy(),
        packing: &packing,
    };
    let runs: Vec<(f64, SeparableAnsatz, bool, usize)> = starts
        .par_iter()
        .map(|x0| {
            let r = lbfgs(|x, g| objective.evaluate(x, g), x0, settings.separable_max_iter, 1e-10);
            let ansatz = packing.ansatz(&r.x).expect("softmax weights are valid");
            let value = relative_entropy(rho, &ansatz.assemble()).unwrap_or(f64::INFINITY);
            (value, ansatz, r.converged, r.evaluations)
        })
        .collect();

    // Candidates: the structured decompositions as-is, then the optimized runs.
    let mut candidates: Vec<(f64, SeparableAnsatz, bool)> = structured
        .iter()
        .zip(&structured_values)
        .map(|(s, &v)| (v, s.clone(), false))
        .collect();
    let evaluations = runs.iter().map(|r| r.3).sum::<usize>() + candidates.len();
    candidates.extend(runs.into_iter().map(|(v, a, c, _)| (v, a, c)));

    let min = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(QcorrError::OptimizerFailure(
            "no separable candidate has finite relative entropy".into(),
        ));
    }
    let best_idx = candidates
        .iter()
        .position(|c| c.0 <= min + 1e-9)
        .expect("minimum is attained");
    let (value, ansatz, _) = candidates[best_idx].clone();
    let sigma = ansatz.assemble();

    let optimized = &candidates[structured.len()..];
    let confirmed = optimized
        .iter()
        .filter(|c| (c.0 - min).abs() <= settings.opt_gap_tol)
        .count();
    let converged = optimized.iter().any(|c| c.2 && (c.0 - min).abs() <= settings.opt_gap_tol)
        || confirmed >= 2;
    let sigmas: Vec<DensityMatrix> = candidates.iter().map(|c| c.1.assemble()).collect();
    let mut representatives: Vec<usize> = Vec::new();
    for i in 0..candidates.len() {
        if candidates[i].0.is_finite()
            && !representatives
                .iter()
                .any(|&r| sigmas[r].trace_distance(&sigmas[i]) < BASIN_DISTANCE)
        {
            representatives.push(i);
        }
    }
    let second_best = (0..candidates.len())
        .filter(|&i| sigmas[best_idx].trace_distance(&sigmas[i]) >= BASIN_DISTANCE)
        .map(|i| candidates[i].0)
        .filter(|v| v.is_finite())
        .min_by(f64::total_cmp);
    let diagnostics = OptimizerDiagnostics {
        restarts: starts.len(),
        evaluations,
        grid_points_per_angle: 0,
        best: value,
        second_best,
        gap: second_best.map(|s| s - value),
        basins: representatives.len(),
        converged,
    };
    if !converged {
        return Err(QcorrError::OptimizerFailure(format!(
            "separable search did not converge (best {value:.9})"
        )));
    }
    Ok(SeparableOptimum {
        value,
        sigma,
        ansatz,
        diagnostics,
    })
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
