//! Invariant suites behind `qcorr verify`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qcorr::families::{random, BellKind, StateFamily};
use qcorr::measurement::{conditional_entropy_s1, conditional_entropy_s2, marginal_eigenbases};
use qcorr::measures::{self, analyze, Measure, MeasureRequest};
use qcorr::optimizer::brute_force_oracle;
use qcorr::{dephase, relative_entropy, DensityMatrix, LocalBasis, LocalBasisSet, OptimizerSettings, SubsystemLayout};

use crate::error::{CliError, Result};
use crate::io::StateFile;

/// Residual allowed for exact identities.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Relative entropies equal the corresponding entropy differences.
    Identities,
    /// `D + C = T + L` at fixed bases.
    Additivity,
    /// Bell, Werner, GHZ and classical-quantum reference values.
    Oracles,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Additivity => "additivity",
            Suite::Oracles => "oracles",
        }
    }
}

#[derive(Debug, Default)]
pub struct Summary {
    pub total: usize,
    pub failed: usize,
    pub lines: Vec<String>,
}

struct Recorder<'a> {
    suite: Suite,
    dir: &'a Path,
    summary: Summary,
}

impl Recorder<'_> {
    fn check(&mut self, label: &str, residual: f64, tol: f64, rho: &DensityMatrix) -> Result<()> {
        self.summary.total += 1;
        if residual <= tol {
            return Ok(());
        }
        self.summary.failed += 1;
        fs::create_dir_all(self.dir).map_err(|e| CliError::io(self.dir, e))?;
        let path: PathBuf = self
            .dir
            .join(format!("{}-{:04}.json", self.suite.name(), self.summary.failed));
        let doc = json!({
            "suite": self.suite.name(),
            "check": label,
            "residual": residual,
            "tolerance": tol,
            "state": StateFile::from_state(rho),
        });
        fs::write(&path, serde_json::to_string_pretty(&doc).expect("JSON values serialize"))
            .map_err(|e| CliError::io(&path, e))?;
        self.summary
            .lines
            .push(format!("FAIL {label}: residual {residual:.3e} > {tol:.0e} ({})", path.display()));
        Ok(())
    }
}

fn product_basis(layout: &SubsystemLayout, rng: &mut ChaCha8Rng) -> LocalBasisSet {
    LocalBasisSet::new(
        layout
            .dims()
            .iter()
            .map(|&d| LocalBasis::from_unitary(random::unitary(d, rng)).expect("Haar samples are unitary"))
            .collect(),
    )
}

fn identities(rec: &mut Recorder, seed: u64, trials: usize) -> Result<()> {
    let layout = SubsystemLayout::qubits(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let rho = random::density(&layout, 1 + t % 4, &mut rng);
        let basis = product_basis(&layout, &mut rng);
        let chi = dephase(&rho, &basis, &[0, 1])?;
        let (pi_rho, pi_chi) = (rho.marginal_product(), chi.marginal_product());
        let d = relative_entropy(&rho, &chi)?;
        rec.check(&format!("trial {t}: S(ρ‖χ) = S(χ) − S(ρ)"), (d - (chi.entropy() - rho.entropy())).abs(), IDENTITY_TOL, &rho)?;
        let tt = relative_entropy(&rho, &pi_rho)?;
        rec.check(&format!("trial {t}: S(ρ‖π_ρ) = I(ρ)"), (tt - rho.mutual_information()).abs(), IDENTITY_TOL, &rho)?;
        let c = relative_entropy(&chi, &pi_chi)?;
        rec.check(&format!("trial {t}: S(χ‖π_χ) = I(χ)"), (c - chi.mutual_information()).abs(), IDENTITY_TOL, &rho)?;
        let l = relative_entropy(&pi_rho, &pi_chi)?;
        rec.check(
            &format!("trial {t}: S(π_ρ‖π_χ) = S(π_χ) − S(π_ρ)"),
            (l - (pi_chi.entropy() - pi_rho.entropy())).abs(),
            IDENTITY_TOL,
            &rho,
        )?;
        let one_sided = LocalBasisSet::new(vec![basis.bases()[0].clone()]);
        let s1 = conditional_entropy_s1(&rho, &[0])?;
        let s2 = conditional_entropy_s2(&rho, &one_sided, &[0])?;
        rec.check(&format!("trial {t}: S2 ≥ S1 and S2 ≥ 0"), (s1 - s2).max(-s2).max(0.0), IDENTITY_TOL, &rho)?;
    }
    Ok(())
}

fn loop_residual(rho: &DensityMatrix, basis: &LocalBasisSet) -> Result<f64> {
    let all = rho.layout().all();
    let chi = dephase(rho, basis, &all)?;
    let (pi_rho, pi_chi) = (rho.marginal_product(), chi.marginal_product());
    let d = relative_entropy(rho, &chi)?;
    let c = relative_entropy(&chi, &pi_chi)?;
    let t = relative_entropy(rho, &pi_rho)?;
    let l = relative_entropy(&pi_rho, &pi_chi)?;
    Ok((d + c - t - l).abs())
}

/// Mixture of four random pure product states.
fn random_separable(layout: &SubsystemLayout, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let weights = random::simplex(4, rng);
    let mut m = qcorr::linalg::CMatrix::zeros(layout.total_dim(), layout.total_dim());
    for w in weights {
        let factors: Vec<DensityMatrix> = layout
            .dims()
            .iter()
            .map(|&d| random::pure_state(&SubsystemLayout::new(vec![d]).expect("d ≥ 2"), rng))
            .collect();
        let term = StateFamily::Product(factors).instantiate().expect("valid factors");
        m += term.matrix().scale(w);
    }
    DensityMatrix::validate(m, layout.clone()).expect("convex mixtures are states")
}

fn additivity(rec: &mut Recorder, seed: u64, trials: usize) -> Result<()> {
    let layout = SubsystemLayout::qubits(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = layout.all();
    for t in 0..trials {
        let rho = random::density(&layout, 1 + t % 4, &mut rng);
        let basis = product_basis(&layout, &mut rng);
        rec.check(&format!("trial {t}: ρ-loop, random basis"), loop_residual(&rho, &basis)?, IDENTITY_TOL, &rho)?;
        let mid_basis = marginal_eigenbases(&rho, &all).0;
        rec.check(&format!("trial {t}: ρ-loop, marginal basis"), loop_residual(&rho, &mid_basis)?, IDENTITY_TOL, &rho)?;
        let sigma = random_separable(&layout, &mut rng);
        let basis = product_basis(&layout, &mut rng);
        rec.check(&format!("trial {t}: σ-loop, random basis"), loop_residual(&sigma, &basis)?, IDENTITY_TOL, &sigma)?;
    }
    Ok(())
}

fn h2(x: f64) -> f64 {
    [x, 1.0 - x].iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

fn oracles(rec: &mut Recorder, seed: u64) -> Result<()> {
    let settings = OptimizerSettings {
        seed,
        ..OptimizerSettings::default()
    };
    let bell = StateFamily::Bell(BellKind::PhiPlus).instantiate()?;
    let report = analyze(
        &bell,
        &MeasureRequest {
            settings: settings.clone(),
            ..MeasureRequest::all()
        },
    )?;
    for (m, expected, tol) in [
        (Measure::TotalT, 2.0, 1e-8),
        (Measure::Delta, 1.0, 1e-8),
        (Measure::Red, 1.0, 1e-8),
        (Measure::Mid, 1.0, 1e-8),
        (Measure::Ree, 1.0, 1e-4),
        (Measure::Dissonance, 0.0, 1e-4),
        (Measure::ClassicalC, 1.0, 1e-8),
    ] {
        let residual = report.value(m).map_or(f64::INFINITY, |v| (v - expected).abs());
        rec.check(&format!("Bell {m} = {expected}"), residual, tol, &bell)?;
    }

    for p in [0.1, 0.5, 0.9] {
        let rho = StateFamily::Werner(p).instantiate()?;
        let i_rho = rho.mutual_information();
        let slow = |b: &LocalBasisSet| i_rho - dephase(&rho, b, &[0]).expect("valid basis").mutual_information();
        let grid = brute_force_oracle(slow, rho.layout(), &[0], 41)?;
        let delta = measures::discord_delta(&rho, &[0], &settings)?;
        rec.check(&format!("Werner {p} δ against 41-point grid"), (delta.value - grid.value).abs(), 1e-4, &rho)?;
        let red = measures::red(&rho, &[0, 1], &settings)?;
        let closed = 1.0 + h2((1.0 + p) / 2.0) - rho.entropy();
        rec.check(&format!("Werner {p} D closed form"), (red.value - closed).abs(), 1e-6, &rho)?;
    }

    let werner = StateFamily::Werner(0.8).instantiate()?;
    let e = measures::ree(&werner, &settings)?;
    rec.check("Werner 0.8 E = 1 − H₂(0.85)", (e.value - (1.0 - h2(0.85))).abs(), 1e-4, &werner)?;

    for n in [2, 3] {
        let ghz = StateFamily::Ghz(n).instantiate()?;
        let red = measures::red(&ghz, &ghz.layout().all(), &settings)?;
        rec.check(&format!("GHZ({n}) D = 1"), (red.value - 1.0).abs(), 1e-6, &ghz)?;
    }

    let layout = SubsystemLayout::new(vec![2, 2])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..3 {
        let cq = random::classical_quantum(&layout, true, &mut rng);
        let delta = measures::discord_delta(&cq, &[0], &settings)?;
        rec.check(&format!("classical-quantum #{k} δ on flag side = 0"), delta.value, 1e-6, &cq)?;
    }
    Ok(())
}

/// Runs `suite`. `trials` is ignored by the fixed oracle table.
pub fn run_suite(suite: Suite, seed: u64, trials: usize, failures_dir: &Path) -> Result<Summary> {
    let mut rec = Recorder {
        suite,
        dir: failures_dir,
        summary: Summary::default(),
    };
    match suite {
        Suite::Identities => identities(&mut rec, seed, trials)?,
        Suite::Additivity => additivity(&mut rec, seed, trials)?,
        Suite::Oracles => oracles(&mut rec, seed)?,
    }
    Ok(rec.summary)
}
