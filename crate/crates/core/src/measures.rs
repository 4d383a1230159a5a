//! Correlation measures built from entropies of a state, its dephasings and
//! its marginal products.
//!
//! Every quantity is in bits. Quantities that involve a choice of
//! measurement are minimized over local rank-one projective measurements
//! (one orthonormal basis per measured subsystem).

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{QcorrError, Result};
use crate::linalg::{max_abs_diff, CMatrix};
use crate::measurement::{
    conditional_entropy_s1, conditional_entropy_s2, marginal_eigenbases, DephasingFrame, LocalBasisSet,
};
use crate::optimizer::{
    minimize_over_bases, minimize_over_separable, OptimizerDiagnostics, OptimizerSettings, SeparableAnsatz,
    SeparableOptimum,
};
use crate::state::{dephase, relative_entropy, DensityMatrix};

/// Measurement class searched by every basis optimization.
pub const MEASUREMENT_DOMAIN: &str = "local rank-one projective";

/// Largest entry-wise deviation for a state to count as classical.
pub const CLASSICALITY_TOL: f64 = 1e-6;

fn unitaries(basis: &LocalBasisSet) -> Vec<&CMatrix> {
    basis.bases().iter().map(|b| b.unitary()).collect()
}

/// Clamps small negative optimization noise to zero.
fn settle(value: f64, settings: &OptimizerSettings, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -settings.opt_tol {
        Ok(0.0)
    } else {
        Err(QcorrError::OptimizerFailure(format!("{what} came out negative ({value:e})")))
    }
}

fn proper_subset(rho: &DensityMatrix, measured: &[usize]) -> Result<Vec<usize>> {
    let measured = rho.layout().normalize_subset(measured)?;
    if measured.is_empty() {
        return Err(QcorrError::EmptyMeasuredSet);
    }
    if measured.len() == rho.layout().len() {
        return Err(QcorrError::InvalidSubset(
            "the measured set must leave at least one subsystem unmeasured".into(),
        ));
    }
    Ok(measured)
}

fn nonempty_subset(rho: &DensityMatrix, measured: &[usize]) -> Result<Vec<usize>> {
    let measured = rho.layout().normalize_subset(measured)?;
    if measured.is_empty() {
        return Err(QcorrError::EmptyMeasuredSet);
    }
    Ok(measured)
}

/// Marginal eigenbases first, then the computational basis.
fn basis_seeds(rho: &DensityMatrix, measured: &[usize]) -> Vec<LocalBasisSet> {
    vec![
        marginal_eigenbases(rho, measured).0,
        LocalBasisSet::computational(rho.layout(), measured),
    ]
}

fn marginal_entropy_sum(rho: &DensityMatrix, subsystems: &[usize]) -> Result<f64> {
    subsystems
        .iter()
        .map(|&n| rho.partial_trace(&[n]).map(|m| m.entropy()))
        .sum()
}

/// `I(ρ)`, the relative entropy to the product of marginals.
pub fn total_correlations(rho: &DensityMatrix) -> f64 {
    rho.mutual_information()
}

/// `J = S(ρ_rest) − Σᵢ pᵢ S(ρᵢ)`: information about the unmeasured part
/// gained by measuring `measured` in `basis`.
pub fn classical_correlation_j(rho: &DensityMatrix, basis: &LocalBasisSet, measured: &[usize]) -> Result<f64> {
    let measured = proper_subset(rho, measured)?;
    let rest = rho.layout().complement(&measured);
    let s_rest = rho.partial_trace(&rest)?.entropy();
    Ok(s_rest - conditional_entropy_s2(rho, basis, &measured)?)
}

#[derive(Debug, Clone)]
pub struct DiscordResult {
    pub value: f64,
    pub measured: Vec<usize>,
    pub basis: LocalBasisSet,
    pub chi: DensityMatrix,
    pub diagnostics: OptimizerDiagnostics,
}

fn minimize_delta(rho: &DensityMatrix, measured: Vec<usize>, settings: &OptimizerSettings) -> Result<DiscordResult> {
    let frame = DephasingFrame::new(rho, &measured);
    let s_rho = rho.entropy();
    let marginals = marginal_entropy_sum(rho, &measured)?;
    let objective = |basis: &LocalBasisSet| {
        let stats = frame.stats(&unitaries(basis));
        let dephased_marginals: f64 = frame.measured_marginal_entropies(&stats.probs).iter().sum();
        marginals - dephased_marginals + stats.dephased_entropy - s_rho
    };
    let seeds = basis_seeds(rho, &measured);
    let opt = minimize_over_bases(objective, rho.layout(), &measured, settings, &seeds)?;
    let chi = dephase(rho, &opt.basis, &measured)?;
    let value = settle(rho.mutual_information() - chi.mutual_information(), settings, "discord")?;
    Ok(DiscordResult {
        value,
        measured,
        basis: opt.basis,
        chi,
        diagnostics: opt.diagnostics,
    })
}

/// `δ = min [I(ρ) − I(χ)]` over measurements on `measured`, a proper subset.
pub fn discord_delta(rho: &DensityMatrix, measured: &[usize], settings: &OptimizerSettings) -> Result<DiscordResult> {
    let measured = proper_subset(rho, measured)?;
    minimize_delta(rho, measured, settings)
}

#[derive(Debug, Clone)]
pub struct MidResult {
    pub value: f64,
    pub chi: DensityMatrix,
    pub basis: LocalBasisSet,
    /// Some marginal had a degenerate spectrum; its eigenbasis was aligned
    /// with the computational basis.
    pub degenerate: bool,
}

/// Measurement-induced disturbance `S(χ) − S(ρ)`, dephasing every subsystem
/// in its marginal eigenbasis.
pub fn mid(rho: &DensityMatrix) -> Result<MidResult> {
    let all = rho.layout().all();
    let (basis, degenerate) = marginal_eigenbases(rho, &all);
    let chi = dephase(rho, &basis, &all)?;
    let value = (chi.entropy() - rho.entropy()).max(0.0);
    Ok(MidResult {
        value,
        chi,
        basis,
        degenerate,
    })
}

#[derive(Debug, Clone)]
pub struct RedResult {
    pub value: f64,
    pub measured: Vec<usize>,
    pub chi: DensityMatrix,
    pub basis: LocalBasisSet,
    pub diagnostics: OptimizerDiagnostics,
}

/// Relative entropy of discord `min_χ S(ρ‖χ) = min S(χ) − S(ρ)` over
/// dephasings of `measured`. Measuring every subsystem gives the symmetric
/// version.
pub fn red(rho: &DensityMatrix, measured: &[usize], settings: &OptimizerSettings) -> Result<RedResult> {
    let measured = nonempty_subset(rho, measured)?;
    let frame = DephasingFrame::new(rho, &measured);
    let s_rho = rho.entropy();
    let objective = |basis: &LocalBasisSet| frame.stats(&unitaries(basis)).dephased_entropy - s_rho;
    let seeds = basis_seeds(rho, &measured);
    let opt = minimize_over_bases(objective, rho.layout(), &measured, settings, &seeds)?;
    let chi = dephase(rho, &opt.basis, &measured)?;
    let value = settle(chi.entropy() - s_rho, settings, "relative entropy of discord")?;
    Ok(RedResult {
        value,
        measured,
        chi,
        basis: opt.basis,
        diagnostics: opt.diagnostics,
    })
}

/// Relative entropy of entanglement `min_σ S(ρ‖σ)` over separable states.
pub fn ree(rho: &DensityMatrix, settings: &OptimizerSettings) -> Result<SeparableOptimum> {
    ree_with_hints(rho, settings, &[])
}

/// As [`ree`], also scoring the dephasings of `ρ` in each hinted basis set
/// (which must cover every subsystem). The result never exceeds those.
pub fn ree_with_hints(
    rho: &DensityMatrix,
    settings: &OptimizerSettings,
    hints: &[LocalBasisSet],
) -> Result<SeparableOptimum> {
    let all = rho.layout().all();
    for hint in hints {
        hint.check(rho.layout(), &all)?;
    }
    let mut opt = minimize_over_separable(rho, settings, hints)?;
    opt.value = settle(opt.value, settings, "relative entropy of entanglement")?;
    Ok(opt)
}

#[derive(Debug, Clone)]
pub struct DissonanceResult {
    pub value: f64,
    pub sigma: DensityMatrix,
    pub chi_sigma: DensityMatrix,
    pub basis: LocalBasisSet,
    pub diagnostics: OptimizerDiagnostics,
    pub separable: SeparableOptimum,
}

/// Dissonance `min_χ S(σ‖χ)` at the closest separable state `σ`.
pub fn dissonance(rho: &DensityMatrix, settings: &OptimizerSettings) -> Result<DissonanceResult> {
    let all = rho.layout().all();
    let separable = ree_with_hints(rho, settings, &[marginal_eigenbases(rho, &all).0])?;
    dissonance_from(rho, separable, settings)
}

/// Dissonance from an already computed separable optimum. When the
/// entanglement is within `opt_tol` of zero, `σ = ρ`.
pub fn dissonance_from(
    rho: &DensityMatrix,
    separable: SeparableOptimum,
    settings: &OptimizerSettings,
) -> Result<DissonanceResult> {
    let sigma = if separable.value <= settings.opt_tol {
        rho.clone()
    } else {
        separable.sigma.clone()
    };
    let r = red(&sigma, &sigma.layout().all(), settings)?;
    Ok(assemble_dissonance(sigma, r, separable))
}

fn assemble_dissonance(sigma: DensityMatrix, r: RedResult, separable: SeparableOptimum) -> DissonanceResult {
    DissonanceResult {
        value: r.value,
        sigma,
        chi_sigma: r.chi,
        basis: r.basis,
        diagnostics: r.diagnostics,
        separable,
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalCorrelations {
    pub value: f64,
    /// Closest product state, the product of the marginals.
    pub pi: DensityMatrix,
}

/// `C = min_π S(χ‖π) = I(χ)` for a classical state `χ`.
///
/// Classicality is checked in the marginal eigenbases first and, failing
/// that, in the basis minimizing the dephasing entropy.
pub fn classical_c(chi: &DensityMatrix, settings: &OptimizerSettings) -> Result<ClassicalCorrelations> {
    let all = chi.layout().all();
    let (basis, _) = marginal_eigenbases(chi, &all);
    let mut residual = max_abs_diff(dephase(chi, &basis, &all)?.matrix(), chi.matrix());
    if residual > CLASSICALITY_TOL {
        let r = red(chi, &all, settings)?;
        residual = residual.min(max_abs_diff(r.chi.matrix(), chi.matrix()));
    }
    if residual > CLASSICALITY_TOL {
        return Err(QcorrError::NotClassical { residual });
    }
    Ok(ClassicalCorrelations {
        value: chi.mutual_information(),
        pi: chi.marginal_product(),
    })
}

/// `L = S(π_χ) − S(π_ρ)` for the dephasing of `measured` in `basis`.
pub fn additivity_l(rho: &DensityMatrix, basis: &LocalBasisSet, measured: &[usize]) -> Result<f64> {
    let chi = dephase(rho, basis, measured)?;
    Ok(product_entropy_gap(rho, &chi))
}

fn product_entropy_gap(rho: &DensityMatrix, chi: &DensityMatrix) -> f64 {
    let all = rho.layout().all();
    let before = marginal_entropy_sum(rho, &all).expect("all subsystems");
    let after = marginal_entropy_sum(chi, &all).expect("all subsystems");
    // Dephasing never lowers a marginal entropy; clip rounding noise.
    (after - before).max(0.0)
}

/// Probability `exp(−n·S ln 2)` of confusing two states after `n` trials,
/// given their relative entropy `s_rel` in bits.
pub fn confusion_probability(s_rel: f64, n: f64) -> Result<f64> {
    if s_rel.is_nan() || n.is_nan() || s_rel < 0.0 || n < 0.0 {
        return Err(QcorrError::NegativeArguments(format!(
            "relative entropy {s_rel} and trial count {n} must be nonnegative"
        )));
    }
    if n == 0.0 {
        return Ok(1.0);
    }
    if s_rel.is_infinite() {
        return Ok(0.0);
    }
    Ok((-n * s_rel * LN_2).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuantumnessVariant {
    /// Basis minimizing `I(ρ) − I(χ)`.
    OriginalDiscord,
    /// Marginal eigenbasis.
    Mid,
    /// Basis minimizing `S(χ) − S(ρ)`.
    Red,
}

impl QuantumnessVariant {
    pub const ALL: [QuantumnessVariant; 3] =
        [QuantumnessVariant::OriginalDiscord, QuantumnessVariant::Mid, QuantumnessVariant::Red];

    pub fn name(self) -> &'static str {
        match self {
            QuantumnessVariant::OriginalDiscord => "original_discord",
            QuantumnessVariant::Mid => "mid",
            QuantumnessVariant::Red => "red",
        }
    }
}

/// Relative entropies among `ρ`, `π_ρ`, `χ`, `π_χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseDistances {
    pub rho_pi_rho: f64,
    pub rho_chi: f64,
    pub chi_pi_chi: f64,
    pub pi_rho_pi_chi: f64,
    pub rho_pi_chi: f64,
    pub chi_pi_rho: f64,
}

impl PairwiseDistances {
    pub fn between(rho: &DensityMatrix, pi_rho: &DensityMatrix, chi: &DensityMatrix, pi_chi: &DensityMatrix) -> Result<Self> {
        Ok(PairwiseDistances {
            rho_pi_rho: relative_entropy(rho, pi_rho)?,
            rho_chi: relative_entropy(rho, chi)?,
            chi_pi_chi: relative_entropy(chi, pi_chi)?,
            pi_rho_pi_chi: relative_entropy(pi_rho, pi_chi)?,
            rho_pi_chi: relative_entropy(rho, pi_chi)?,
            chi_pi_rho: relative_entropy(chi, pi_rho)?,
        })
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("rho|pi_rho", self.rho_pi_rho),
            ("rho|chi", self.rho_chi),
            ("chi|pi_chi", self.chi_pi_chi),
            ("pi_rho|pi_chi", self.pi_rho_pi_chi),
            ("rho|pi_chi", self.rho_pi_chi),
            ("chi|pi_rho", self.chi_pi_rho),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Quantumness {
    pub variant: QuantumnessVariant,
    pub measured: Vec<usize>,
    pub value: f64,
    pub rho: DensityMatrix,
    pub pi_rho: DensityMatrix,
    pub chi: DensityMatrix,
    pub pi_chi: DensityMatrix,
    pub basis: LocalBasisSet,
    pub distances: PairwiseDistances,
    pub degenerate: bool,
    pub diagnostics: Option<OptimizerDiagnostics>,
}

/// The four states `ρ, π_ρ, χ, π_χ` for one choice of dephasing basis, with
/// the quantumness of `ρ` under that choice.
pub fn unified_quantumness(
    rho: &DensityMatrix,
    variant: QuantumnessVariant,
    measured: &[usize],
    settings: &OptimizerSettings,
) -> Result<Quantumness> {
    let measured = nonempty_subset(rho, measured)?;
    let (basis, chi, degenerate, diagnostics) = match variant {
        QuantumnessVariant::OriginalDiscord => {
            let r = minimize_delta(rho, measured.clone(), settings)?;
            (r.basis, r.chi, false, Some(r.diagnostics))
        }
        QuantumnessVariant::Mid => {
            let (basis, degenerate) = marginal_eigenbases(rho, &measured);
            let chi = dephase(rho, &basis, &measured)?;
            (basis, chi, degenerate, None)
        }
        QuantumnessVariant::Red => {
            let r = red(rho, &measured, settings)?;
            (r.basis, r.chi, false, Some(r.diagnostics))
        }
    };
    let pi_rho = rho.marginal_product();
    let pi_chi = chi.marginal_product();
    let distances = PairwiseDistances::between(rho, &pi_rho, &chi, &pi_chi)?;
    let raw = match variant {
        QuantumnessVariant::OriginalDiscord => rho.mutual_information() - chi.mutual_information(),
        QuantumnessVariant::Mid | QuantumnessVariant::Red => chi.entropy() - rho.entropy(),
    };
    Ok(Quantumness {
        variant,
        measured,
        value: settle(raw, settings, variant.name())?,
        rho: rho.clone(),
        pi_rho,
        chi,
        pi_chi,
        basis,
        distances,
        degenerate,
        diagnostics,
    })
}

/// Quantities a report can contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    /// `S(ρ) − S(ρ_measured)`.
    S1,
    /// Post-measurement conditional entropy at the discord-optimal basis.
    S2,
    /// Classical correlation at the discord-optimal basis.
    J,
    /// Discord `δ` measuring the requested subsystems.
    Delta,
    /// Discord `δ` measuring the complement.
    DeltaReverse,
    Mid,
    /// Symmetric relative entropy of discord.
    Red,
    Ree,
    Dissonance,
    ClassicalC,
    TotalT,
    AdditivityL,
    ConfusionP,
    Unified,
}

impl Measure {
    pub const ALL: [Measure; 14] = [
        Measure::S1,
        Measure::S2,
        Measure::J,
        Measure::Delta,
        Measure::DeltaReverse,
        Measure::Mid,
        Measure::Red,
        Measure::Ree,
        Measure::Dissonance,
        Measure::ClassicalC,
        Measure::TotalT,
        Measure::AdditivityL,
        Measure::ConfusionP,
        Measure::Unified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::S1 => "S1",
            Measure::S2 => "S2",
            Measure::J => "J",
            Measure::Delta => "delta",
            Measure::DeltaReverse => "delta_rev",
            Measure::Mid => "MID",
            Measure::Red => "D",
            Measure::Ree => "E",
            Measure::Dissonance => "Q",
            Measure::ClassicalC => "C",
            Measure::TotalT => "T",
            Measure::AdditivityL => "L",
            Measure::ConfusionP => "P_N",
            Measure::Unified => "unified",
        }
    }

    /// Measures defined relative to the requested measured set.
    pub fn is_asymmetric(self) -> bool {
        matches!(
            self,
            Measure::S1 | Measure::S2 | Measure::J | Measure::Delta | Measure::DeltaReverse
        )
    }

    fn prerequisites(self) -> &'static [Measure] {
        match self {
            Measure::S2 | Measure::J => &[Measure::Delta],
            Measure::ClassicalC | Measure::AdditivityL => &[Measure::Red, Measure::TotalT],
            Measure::Red => &[Measure::TotalT],
            Measure::Dissonance | Measure::ConfusionP => &[Measure::Ree],
            _ => &[],
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = QcorrError;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s.trim().to_ascii_lowercase().as_str() {
            "s1" => Measure::S1,
            "s2" => Measure::S2,
            "j" => Measure::J,
            "delta" | "discord" => Measure::Delta,
            "delta_rev" | "delta_reverse" => Measure::DeltaReverse,
            "mid" => Measure::Mid,
            "d" | "red" => Measure::Red,
            "e" | "ree" => Measure::Ree,
            "q" | "dissonance" => Measure::Dissonance,
            "c" => Measure::ClassicalC,
            "t" => Measure::TotalT,
            "l" => Measure::AdditivityL,
            "p_n" | "pn" | "confusion" => Measure::ConfusionP,
            "unified" => Measure::Unified,
            other => return Err(QcorrError::ParameterOutOfRange(format!("unknown measure '{other}'"))),
        };
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct MeasureRequest {
    pub targets: Vec<Measure>,
    /// Measured subsystems for the asymmetric measures.
    pub measured: Vec<usize>,
    pub settings: OptimizerSettings,
    /// Trial count for the confusion probability.
    pub trials: f64,
}

impl MeasureRequest {
    pub fn new(targets: Vec<Measure>) -> Self {
        MeasureRequest {
            targets,
            measured: vec![0],
            settings: OptimizerSettings::default(),
            trials: 1.0,
        }
    }

    pub fn all() -> Self {
        MeasureRequest::new(Measure::ALL.to_vec())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ClosestStates {
    pub chi_rho: Option<DensityMatrix>,
    pub pi_rho: Option<DensityMatrix>,
    pub pi_chi: Option<DensityMatrix>,
    pub sigma: Option<DensityMatrix>,
    pub chi_sigma: Option<DensityMatrix>,
    pub pi_sigma: Option<DensityMatrix>,
}

/// Correlations of the closest separable state, closing the loop
/// `Q + C_σ = T_σ + L_σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaLoop {
    pub total: f64,
    pub classical: f64,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub measured: Vec<usize>,
    pub values: BTreeMap<Measure, f64>,
    pub states: ClosestStates,
    pub bases: BTreeMap<Measure, LocalBasisSet>,
    pub diagnostics: BTreeMap<Measure, OptimizerDiagnostics>,
    /// Measures that could not be computed, with the reason.
    pub failures: BTreeMap<Measure, String>,
    /// `|D + C − T − L|`.
    pub rho_loop_residual: Option<f64>,
    /// `|Q + C_σ − T_σ − L_σ|`.
    pub sigma_loop_residual: Option<f64>,
    pub sigma_loop: Option<SigmaLoop>,
    pub mid_degenerate: bool,
    pub separable_decomposition: Option<SeparableAnsatz>,
    pub unified: Vec<Quantumness>,
    pub measurement_domain: &'static str,
}

impl CorrelationReport {
    pub fn value(&self, m: Measure) -> Option<f64> {
        self.values.get(&m).copied()
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Optimizer failures become report entries; anything else aborts.
fn record_failure(failures: &mut BTreeMap<Measure, String>, m: Measure, err: QcorrError) -> Result<()> {
    match err {
        QcorrError::OptimizerFailure(msg) => {
            failures.insert(m, msg);
            Ok(())
        }
        other => Err(other),
    }
}

/// Computes every requested measure of `rho`. Validation problems are
/// returned as errors; optimizer failures are recorded per measure (along
/// with everything depending on them) and the rest of the report is filled.
pub fn analyze(rho: &DensityMatrix, request: &MeasureRequest) -> Result<CorrelationReport> {
    request.settings.validate()?;
    let settings = &request.settings;
    let mut wanted: Vec<Measure> = Vec::new();
    let mut stack = request.targets.clone();
    while let Some(m) = stack.pop() {
        if !wanted.contains(&m) {
            wanted.push(m);
            stack.extend_from_slice(m.prerequisites());
        }
    }
    let wants = |m: Measure| wanted.contains(&m);

    let measured = if wanted.iter().any(|m| m.is_asymmetric()) {
        proper_subset(rho, &request.measured)?
    } else {
        nonempty_subset(rho, &request.measured)?
    };
    if wants(Measure::ConfusionP) && (request.trials.is_nan() || request.trials < 0.0) {
        return Err(QcorrError::NegativeArguments(format!("trial count {}", request.trials)));
    }
    let all = rho.layout().all();

    let mut report = CorrelationReport {
        measured: measured.clone(),
        values: BTreeMap::new(),
        states: ClosestStates::default(),
        bases: BTreeMap::new(),
        diagnostics: BTreeMap::new(),
        failures: BTreeMap::new(),
        rho_loop_residual: None,
        sigma_loop_residual: None,
        sigma_loop: None,
        mid_degenerate: false,
        separable_decomposition: None,
        unified: Vec::new(),
        measurement_domain: MEASUREMENT_DOMAIN,
    };

    if wants(Measure::TotalT) {
        report.values.insert(Measure::TotalT, total_correlations(rho));
        report.states.pi_rho = Some(rho.marginal_product());
    }
    if wants(Measure::S1) {
        report.values.insert(Measure::S1, conditional_entropy_s1(rho, &measured)?);
    }

    if wants(Measure::Delta) {
        match discord_delta(rho, &measured, settings) {
            Ok(r) => {
                report.values.insert(Measure::Delta, r.value);
                if wants(Measure::S2) {
                    report.values.insert(Measure::S2, conditional_entropy_s2(rho, &r.basis, &measured)?);
                }
                if wants(Measure::J) {
                    report.values.insert(Measure::J, classical_correlation_j(rho, &r.basis, &measured)?);
                }
                report.bases.insert(Measure::Delta, r.basis);
                report.diagnostics.insert(Measure::Delta, r.diagnostics);
            }
            Err(e) => {
                record_failure(&mut report.failures, Measure::Delta, e)?;
                for m in [Measure::S2, Measure::J] {
                    if wants(m) {
                        report.failures.insert(m, "requires delta".into());
                    }
                }
            }
        }
    }
    if wants(Measure::DeltaReverse) {
        let complement = rho.layout().complement(&measured);
        match discord_delta(rho, &complement, settings) {
            Ok(r) => {
                report.values.insert(Measure::DeltaReverse, r.value);
                report.bases.insert(Measure::DeltaReverse, r.basis);
                report.diagnostics.insert(Measure::DeltaReverse, r.diagnostics);
            }
            Err(e) => record_failure(&mut report.failures, Measure::DeltaReverse, e)?,
        }
    }

    let mid_basis = if wants(Measure::Mid) {
        let r = mid(rho)?;
        report.values.insert(Measure::Mid, r.value);
        report.mid_degenerate = r.degenerate;
        report.bases.insert(Measure::Mid, r.basis.clone());
        r.basis
    } else {
        marginal_eigenbases(rho, &all).0
    };

    let mut red_result: Option<RedResult> = None;
    if wants(Measure::Red) {
        match red(rho, &all, settings) {
            Ok(r) => {
                let c = r.chi.mutual_information();
                let l = product_entropy_gap(rho, &r.chi);
                let t = total_correlations(rho);
                report.values.insert(Measure::Red, r.value);
                if wants(Measure::ClassicalC) {
                    report.values.insert(Measure::ClassicalC, c);
                }
                if wants(Measure::AdditivityL) {
                    report.values.insert(Measure::AdditivityL, l);
                }
                report.rho_loop_residual = Some((r.value + c - t - l).abs());
                report.states.pi_chi = Some(r.chi.marginal_product());
                report.states.chi_rho = Some(r.chi.clone());
                report.bases.insert(Measure::Red, r.basis.clone());
                report.diagnostics.insert(Measure::Red, r.diagnostics.clone());
                red_result = Some(r);
            }
            Err(e) => {
                record_failure(&mut report.failures, Measure::Red, e)?;
                for m in [Measure::ClassicalC, Measure::AdditivityL] {
                    if wants(m) {
                        report.failures.insert(m, "requires D".into());
                    }
                }
            }
        }
    }

    if wants(Measure::Ree) {
        let mut hints: Vec<LocalBasisSet> = red_result.iter().map(|r| r.basis.clone()).collect();
        hints.push(mid_basis);
        match ree_with_hints(rho, settings, &hints) {
            Ok(opt) => {
                report.values.insert(Measure::Ree, opt.value);
                report.diagnostics.insert(Measure::Ree, opt.diagnostics.clone());
                report.states.sigma = Some(opt.sigma.clone());
                report.separable_decomposition = Some(opt.ansatz.clone());
                if wants(Measure::ConfusionP) {
                    report
                        .values
                        .insert(Measure::ConfusionP, confusion_probability(opt.value, request.trials)?);
                }
                if wants(Measure::Dissonance) {
                    // With σ = ρ the symmetric discord already computed is Q.
                    let staged = match red_result {
                        Some(r) if opt.value <= settings.opt_tol => Ok(assemble_dissonance(rho.clone(), r, opt)),
                        _ => dissonance_from(rho, opt, settings),
                    };
                    match staged {
                        Ok(q) => {
                            let t_sigma = q.sigma.mutual_information();
                            let c_sigma = q.chi_sigma.mutual_information();
                            let l_sigma = product_entropy_gap(&q.sigma, &q.chi_sigma);
                            report.values.insert(Measure::Dissonance, q.value);
                            report.sigma_loop = Some(SigmaLoop {
                                total: t_sigma,
                                classical: c_sigma,
                                l: l_sigma,
                            });
                            report.sigma_loop_residual = Some((q.value + c_sigma - t_sigma - l_sigma).abs());
                            report.states.sigma = Some(q.sigma.clone());
                            report.states.pi_sigma = Some(q.chi_sigma.marginal_product());
                            report.states.chi_sigma = Some(q.chi_sigma);
                            report.bases.insert(Measure::Dissonance, q.basis);
                            report.diagnostics.insert(Measure::Dissonance, q.diagnostics);
                        }
                        Err(e) => record_failure(&mut report.failures, Measure::Dissonance, e)?,
                    }
                }
            }
            Err(e) => {
                record_failure(&mut report.failures, Measure::Ree, e)?;
                for m in [Measure::Dissonance, Measure::ConfusionP] {
                    if wants(m) {
                        report.failures.insert(m, "requires E".into());
                    }
                }
            }
        }
    }

    if wants(Measure::Unified) {
        for variant in QuantumnessVariant::ALL {
            match unified_quantumness(rho, variant, &measured, settings) {
                Ok(q) => report.unified.push(q),
                Err(QcorrError::OptimizerFailure(msg)) => {
                    report.failures.insert(Measure::Unified, format!("{}: {msg}", variant.name()));
                }
                Err(e) => return Err(e),
            }
        }
    }

    // Only report what was asked for; prerequisites stay internal.
    report.values.retain(|m, _| request.targets.contains(m));
    Ok(report)
}
