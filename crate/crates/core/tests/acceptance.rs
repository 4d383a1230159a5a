//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{delta_grid, red_grid};

use qcorr::families::{random, BellKind, StateFamily};
use qcorr::linalg::{kron, CMatrix, Spectrum};
use qcorr::measurement::{conditional_amplitude, conditional_entropy_s1, conditional_entropy_s2};
use qcorr::measures::{self, analyze, Measure, MeasureRequest};
use qcorr::{dephase, relative_entropy, DensityMatrix, LocalBasis, LocalBasisSet, OptimizerSettings, SubsystemLayout};

type Outcome = Result<String, String>;
/// Name, check and optional runtime budget.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn two_qubits() -> SubsystemLayout {
    SubsystemLayout::qubits(2).unwrap()
}

fn random_product_basis(rng: &mut ChaCha8Rng) -> LocalBasisSet {
    LocalBasisSet::new(vec![
        LocalBasis::from_unitary(random::unitary(2, rng)).unwrap(),
        LocalBasis::from_unitary(random::unitary(2, rng)).unwrap(),
    ])
}

/// 200 seeded two-qubit states, ranks cycling through 1..=4.
fn corpus(seed: u64, count: usize) -> Vec<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|k| random::density(&two_qubits(), 1 + k % 4, &mut rng)).collect()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn entropy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for rho in corpus(1, 200) {
        for _ in 0..20 {
            let basis = random_product_basis(&mut rng);
            let chi = dephase(&rho, &basis, &[0, 1]).unwrap();
            let direct = relative_entropy(&rho, &chi).unwrap();
            worst = worst.max((direct - (chi.entropy() - rho.entropy())).abs());
        }
    }
    check(worst < 1e-10, format!("max |S(ρ‖χ) − (S(χ) − S(ρ))| = {worst:.2e}"))
}

fn additivity_loop() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for rho in corpus(1, 200) {
        let pi_rho = rho.marginal_product();
        let t = relative_entropy(&rho, &pi_rho).unwrap();
        for _ in 0..20 {
            let basis = random_product_basis(&mut rng);
            let chi = dephase(&rho, &basis, &[0, 1]).unwrap();
            let pi_chi = chi.marginal_product();
            let d = relative_entropy(&rho, &chi).unwrap();
            let c = relative_entropy(&chi, &pi_chi).unwrap();
            let l = relative_entropy(&pi_rho, &pi_chi).unwrap();
            worst = worst.max((d + c - t - l).abs());
        }
    }
    check(worst < 1e-9, format!("max |D + C − T − L| = {worst:.2e}"))
}

fn bell_table() -> Outcome {
    let rho = StateFamily::Bell(BellKind::PhiPlus).instantiate().unwrap();
    let report = analyze(&rho, &MeasureRequest::all()).map_err(|e| e.to_string())?;
    if !report.is_complete() {
        return Err(format!("failures: {:?}", report.failures));
    }
    let expectations = [
        (Measure::TotalT, 2.0, 1e-8),
        (Measure::Delta, 1.0, 1e-8),
        (Measure::Red, 1.0, 1e-8),
        (Measure::Mid, 1.0, 1e-8),
        (Measure::Ree, 1.0, 1e-4),
        (Measure::Dissonance, 0.0, 1e-4),
        (Measure::ClassicalC, 1.0, 1e-8),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (m, expected, tol) in expectations {
        let v = report.value(m).unwrap();
        ok &= (v - expected).abs() <= tol;
        lines.push(format!("{m}={v:.9}"));
    }
    check(ok, lines.join(" "))
}

fn zero_classes() -> Outcome {
    let settings = OptimizerSettings::default();
    let layout = two_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let correlation_measures = vec![
        Measure::Delta,
        Measure::DeltaReverse,
        Measure::J,
        Measure::Mid,
        Measure::Red,
        Measure::Ree,
        Measure::Dissonance,
        Measure::ClassicalC,
        Measure::TotalT,
        Measure::AdditivityL,
    ];
    let mut product_worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random::product(&layout, &mut rng);
        let request = MeasureRequest {
            settings: settings.clone(),
            ..MeasureRequest::new(correlation_measures.clone())
        };
        let report = analyze(&rho, &request).map_err(|e| e.to_string())?;
        if !report.is_complete() {
            return Err(format!("product state failures: {:?}", report.failures));
        }
        product_worst = report.values.values().fold(product_worst, |a, &v| a.max(v.abs()));
    }
    let mut cc_worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random::classical_classical(&layout, true, &mut rng);
        let request = MeasureRequest {
            settings: settings.clone(),
            ..MeasureRequest::new(vec![Measure::Delta, Measure::Red, Measure::Mid, Measure::Dissonance])
        };
        let report = analyze(&rho, &request).map_err(|e| e.to_string())?;
        if !report.is_complete() {
            return Err(format!("classical state failures: {:?}", report.failures));
        }
        cc_worst = report.values.values().fold(cc_worst, |a, &v| a.max(v.abs()));
    }
    let mut cq_worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random::classical_quantum(&layout, true, &mut rng);
        let r = measures::discord_delta(&rho, &[0], &settings).map_err(|e| e.to_string())?;
        cq_worst = cq_worst.max(r.value);
    }
    check(
        product_worst < 1e-8 && cc_worst < 1e-8 && cq_worst < 1e-6,
        format!("product max {product_worst:.2e}, classical-classical max {cc_worst:.2e}, classical-quantum δ max {cq_worst:.2e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let settings = OptimizerSettings::default();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for k in 1..=9 {
        let p = k as f64 / 10.0;
        let rho = StateFamily::Werner(p).instantiate().unwrap();
        let delta = measures::discord_delta(&rho, &[0], &settings).map_err(|e| e.to_string())?.value;
        let red = measures::red(&rho, &[0, 1], &settings).map_err(|e| e.to_string())?.value;
        let delta_oracle = delta_grid(&rho, 41);
        let red_oracle = red_grid(&rho, 41);
        worst = worst.max((delta - delta_oracle).abs()).max((red - red_oracle).abs());
        lines.push(format!("p={p:.1}: δ {delta:.6}/{delta_oracle:.6} D {red:.6}/{red_oracle:.6}"));
    }
    check(worst < 1e-4, format!("max deviation {worst:.2e}; {}", lines.join(", ")))
}

fn ordering() -> Outcome {
    let settings = OptimizerSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut violations = Vec::new();
    let mut min_s2 = f64::INFINITY;
    for (k, rho) in corpus(6, 200).into_iter().enumerate() {
        let mid = measures::mid(&rho).map_err(|e| e.to_string())?.value;
        let red = measures::red(&rho, &[0, 1], &settings).map_err(|e| e.to_string())?.value;
        let ree = measures::ree(&rho, &settings).map_err(|e| e.to_string())?.value;
        if mid < red - 1e-8 {
            violations.push(format!("state {k}: MID {mid:.9} < D {red:.9}"));
        }
        if red < ree - settings.opt_gap_tol {
            violations.push(format!("state {k}: D {red:.9} < E {ree:.9}"));
        }
        let s1 = conditional_entropy_s1(&rho, &[0]).unwrap();
        for _ in 0..20 {
            let basis = LocalBasisSet::new(vec![LocalBasis::from_unitary(random::unitary(2, &mut rng)).unwrap()]);
            let s2 = conditional_entropy_s2(&rho, &basis, &[0]).unwrap();
            min_s2 = min_s2.min(s2);
            if s2 < s1 - 1e-12 || s2 < 0.0 {
                violations.push(format!("state {k}: S2 {s2:.12} vs S1 {s1:.12}"));
            }
        }
    }
    check(
        violations.is_empty(),
        format!("{} violations, min S2 {min_s2:.2e} {}", violations.len(), violations.join("; ")),
    )
}

/// `Σ wᵢ ⊗ₙ |aᵢₙ⟩⟨aᵢₙ|` rebuilt from the decomposition alone.
fn rebuild(ansatz: &qcorr::optimizer::SeparableAnsatz) -> Result<DensityMatrix, String> {
    let weights = ansatz.weights();
    if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err("weights are not a probability vector".into());
    }
    let mut sigma = CMatrix::zeros(4, 4);
    for (i, &w) in weights.iter().enumerate() {
        let factors = ansatz.factors(i);
        let projectors: Vec<CMatrix> = factors
            .iter()
            .map(|v| {
                let v = v.normalize();
                &v * v.adjoint()
            })
            .collect();
        sigma += kron(&projectors[0], &projectors[1]).scale(w);
    }
    DensityMatrix::validate(sigma, two_qubits()).map_err(|e| e.to_string())
}

fn separability_threshold() -> Outcome {
    let settings = OptimizerSettings::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for k in 0..=10 {
        let p = k as f64 / 10.0;
        let rho = StateFamily::Werner(p).instantiate().unwrap();
        let opt = measures::ree(&rho, &settings).map_err(|e| e.to_string())?;
        if p <= 1.0 / 3.0 {
            let certified = match opt.certificate(1e-5) {
                Some(ansatz) => {
                    let sigma = rebuild(ansatz)?;
                    relative_entropy(&rho, &sigma).map_err(|e| e.to_string())?
                }
                None => f64::INFINITY,
            };
            ok &= certified <= 1e-5;
            lines.push(format!("p={p:.1}: certified S={certified:.2e}"));
        } else {
            if p >= 0.5 {
                ok &= opt.value > 1e-3;
            }
            lines.push(format!("p={p:.1}: E={:.6}", opt.value));
        }
    }
    check(ok, lines.join(", "))
}

fn conditional_amplitude_check() -> Outcome {
    let layout = two_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut min_eig = f64::INFINITY;
    for _ in 0..100 {
        let rho = random::classical_classical(&layout, true, &mut rng);
        let amp = conditional_amplitude(&rho, &[0]).map_err(|e| e.to_string())?;
        let eig = Spectrum::of(&amp.operator).eigenvalues;
        min_eig = min_eig.min(*eig.last().unwrap());
    }
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = random::density(&layout, 4, &mut rng);
        let amp = conditional_amplitude(&rho, &[0]).map_err(|e| e.to_string())?;
        let s1 = conditional_entropy_s1(&rho, &[0]).unwrap();
        worst = worst.max((amp.conditional_entropy(&rho) - s1).abs());
    }
    check(
        min_eig > -1e-10 && worst < 1e-8,
        format!("min eigenvalue {min_eig:.2e}, max |−tr ρ log A − S1| = {worst:.2e}"),
    )
}

fn local_unitary_invariance() -> Outcome {
    let settings = OptimizerSettings::default();
    let layout = two_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst = [0.0f64; 4];
    for k in 0..50 {
        let rho = random::density(&layout, 1 + k % 4, &mut rng);
        let turned = rho.conjugated(&random::local_unitary(&layout, &mut rng)).unwrap();
        let values = |s: &DensityMatrix| -> Result<[f64; 4], String> {
            Ok([
                measures::discord_delta(s, &[0], &settings).map_err(|e| e.to_string())?.value,
                measures::red(s, &[0, 1], &settings).map_err(|e| e.to_string())?.value,
                measures::mid(s).map_err(|e| e.to_string())?.value,
                measures::ree(s, &settings).map_err(|e| e.to_string())?.value,
            ])
        };
        let (a, b) = (values(&rho)?, values(&turned)?);
        for i in 0..4 {
            worst[i] = worst[i].max((a[i] - b[i]).abs());
        }
    }
    check(
        worst.iter().all(|&w| w <= settings.opt_gap_tol),
        format!("max drift δ {:.2e}, D {:.2e}, MID {:.2e}, E {:.2e}", worst[0], worst[1], worst[2], worst[3]),
    )
}

fn confusion() -> Outcome {
    let p = |s: f64, n: f64| measures::confusion_probability(s, n).unwrap();
    let mut ok = (p(1.0, 10.0) - 2f64.powi(-10)).abs() < 1e-12;
    for s in [0.0, 0.01, 0.5, 1.0, 3.0] {
        ok &= p(s, 0.0) == 1.0;
        for n in 1..=60 {
            let (prev, next) = (p(s, (n - 1) as f64), p(s, n as f64));
            ok &= if s > 0.0 { next < prev } else { next == prev };
        }
    }
    check(ok, format!("P(S=1, N=10) = {:.6e}", p(1.0, 10.0)))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("entropy-difference identity", entropy_identity, Some(Duration::from_secs(30))),
        ("additivity loop", additivity_loop, Some(Duration::from_secs(30))),
        ("Bell-state table", bell_table, Some(Duration::from_secs(120))),
        ("zero classes", zero_classes, Some(Duration::from_secs(120))),
        ("Werner oracle equivalence", oracle_equivalence, Some(Duration::from_secs(300))),
        ("ordering properties", ordering, None),
        ("Werner separability threshold", separability_threshold, None),
        ("conditional amplitude", conditional_amplitude_check, None),
        ("local-unitary invariance", local_unitary_invariance, None),
        ("confusion probability", confusion, None),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(detail), Some(limit)) if elapsed > *limit => {
                Err(format!("{detail} (over the {}s budget)", limit.as_secs()))
            }
            (o, _) => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name} [{:.1}s] {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("SKIP 11 operational state-merging checks (out of scope)");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
