//! Measures against closed forms and exhaustive searches.

use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcorr::families::{random, BellKind, StateFamily};
use qcorr::linalg::CVector;
use qcorr::measurement::LocalBasis;
use qcorr::measures::{self, analyze, Measure, MeasureRequest, QuantumnessVariant};
use qcorr::optimizer::brute_force_oracle;
use qcorr::{dephase, relative_entropy, DensityMatrix, LocalBasisSet, OptimizerSettings, SubsystemLayout};

mod common;
use common::{delta_grid, h2, red_grid, swap_qubits, werner_delta, werner_ree_grid};

fn werner(p: f64) -> DensityMatrix {
    StateFamily::Werner(p).instantiate().unwrap()
}

fn settings() -> OptimizerSettings {
    OptimizerSettings::default()
}

#[test]
fn werner_discord_closed_form() {
    for p in [0.2, 0.5, 0.9] {
        let r = measures::discord_delta(&werner(p), &[0], &settings()).unwrap();
        assert_abs_diff_eq!(r.value, werner_delta(p), epsilon = 1e-8);
    }
    assert_abs_diff_eq!(werner_delta(0.5), 0.26248, epsilon = 1e-5);
}

#[test]
fn werner_symmetric_red_closed_form() {
    for p in [0.3, 0.7] {
        let rho = werner(p);
        let r = measures::red(&rho, &[0, 1], &settings()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 + h2((1.0 + p) / 2.0) - rho.entropy(), epsilon = 1e-8);
    }
}

#[test]
fn werner_ree_matches_bell_diagonal_grid() {
    let p = 0.8;
    let oracle = werner_ree_grid(p, 200_001);
    let r = measures::ree(&werner(p), &settings()).unwrap();
    assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-4);
    assert_abs_diff_eq!(oracle, 1.0 - h2(0.85), epsilon = 1e-9);
}

#[test]
fn werner_dissonance_staged_oracle() {
    let rho = werner(0.8);
    let q = measures::dissonance(&rho, &settings()).unwrap();
    let staged = red_grid(&q.sigma, 41);
    assert_abs_diff_eq!(q.value, staged, epsilon = 1e-4);
    let closest = werner(1.0 / 3.0);
    let expected = 1.0 + h2(2.0 / 3.0) - closest.entropy();
    assert_abs_diff_eq!(q.value, expected, epsilon = 1e-3);
}

#[test]
fn bell_ree_candidate_is_not_beaten() {
    let rho = StateFamily::Bell(BellKind::PhiPlus).instantiate().unwrap();
    let r = measures::ree(&rho, &settings()).unwrap();
    assert!(r.value >= 1.0 - 1e-9);
    assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-6);
}

#[test]
fn pure_state_ree_is_entanglement_entropy() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..3 {
        let rho = random::pure_state(&layout, &mut rng);
        let s_a = rho.partial_trace(&[0]).unwrap().entropy();
        let r = measures::ree(&rho, &settings()).unwrap();
        assert_abs_diff_eq!(r.value, s_a, epsilon = 1e-6);
    }
}

#[test]
fn ghz_symmetric_red_matches_oracle() {
    let rho = StateFamily::Ghz(3).instantiate().unwrap();
    let all = [0, 1, 2];
    let slow = |b: &LocalBasisSet| dephase(&rho, b, &all).unwrap().entropy() - rho.entropy();
    let oracle = brute_force_oracle(slow, rho.layout(), &all, 5).unwrap();
    let fast = OptimizerSettings {
        grid_points_per_angle: 7,
        ..settings()
    };
    let r = measures::red(&rho, &all, &fast).unwrap();
    assert_abs_diff_eq!(oracle.value, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
}

#[test]
fn discord_is_asymmetric_and_reproducible() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..4 {
        let rho = random::density(&layout, 2, &mut rng);
        let ab = measures::discord_delta(&rho, &[0], &settings()).unwrap().value;
        let ba = measures::discord_delta(&rho, &[1], &settings()).unwrap().value;
        assert!((ab - ba).abs() > 1e-6, "{ab} vs {ba}");
        assert!(ab <= delta_grid(&rho, 41) + 1e-10);
        assert!(ba <= delta_grid(&swap_qubits(&rho), 41) + 1e-10);
        assert_abs_diff_eq!(ab, delta_grid(&rho, 41), epsilon = 1e-3);
        assert_abs_diff_eq!(ba, delta_grid(&swap_qubits(&rho), 41), epsilon = 1e-3);
    }
}

#[test]
fn discord_equals_mutual_information_minus_best_j() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..5 {
        let rho = random::density(&layout, 3, &mut rng);
        let r = measures::discord_delta(&rho, &[0], &settings()).unwrap();
        let j = measures::classical_correlation_j(&rho, &r.basis, &[0]).unwrap();
        assert_abs_diff_eq!(r.value, rho.mutual_information() - j, epsilon = 1e-8);
    }
}

fn flag_state(probs: [f64; 2], states: [&[f64; 2]; 2]) -> DensityMatrix {
    let qubit = SubsystemLayout::qubits(1).unwrap();
    let pure = |v: &[f64; 2]| {
        let psi = CVector::from_iterator(2, v.iter().map(|&x| qcorr::linalg::C64::new(x, 0.0)));
        DensityMatrix::from_pure(&psi, qubit.clone()).unwrap()
    };
    StateFamily::ClassicalQuantum {
        probs: probs.to_vec(),
        states: states.iter().map(|v| pure(v)).collect(),
    }
    .instantiate()
    .unwrap()
}

#[test]
fn unified_original_discord_is_one_sided() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rho = flag_state([0.5, 0.5], [&[1.0, 0.0], &[s, s]]);
    let a = measures::unified_quantumness(&rho, QuantumnessVariant::OriginalDiscord, &[0], &settings()).unwrap();
    let b = measures::unified_quantumness(&rho, QuantumnessVariant::OriginalDiscord, &[1], &settings()).unwrap();
    assert!(a.value < 1e-8);
    assert!(b.value > 1e-2);
    assert_abs_diff_eq!(a.value, delta_grid(&rho, 41).max(0.0), epsilon = 1e-8);
    assert_abs_diff_eq!(b.value, delta_grid(&swap_qubits(&rho), 41), epsilon = 1e-4);
    // The original discord closes the loop T − C = D − L at its own basis.
    let d = &b.distances;
    assert_abs_diff_eq!(d.rho_pi_rho - d.chi_pi_chi, d.rho_chi - d.pi_rho_pi_chi, epsilon = 1e-9);
    assert_abs_diff_eq!(b.value, d.rho_pi_rho - d.chi_pi_chi, epsilon = 1e-9);
}

#[test]
fn unified_classical_state_is_fixed_point() {
    let rho = StateFamily::classical_table(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap().instantiate().unwrap();
    for v in QuantumnessVariant::ALL {
        let q = measures::unified_quantumness(&rho, v, &[0, 1], &settings()).unwrap();
        assert!(q.value < 1e-8, "{v:?}");
        assert!(q.chi.trace_distance(&rho) < 1e-6);
        assert!(q.pi_chi.trace_distance(&q.pi_rho) < 1e-6);
    }
}

#[test]
fn unified_mid_keeps_marginals() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let rho = random::density(&layout, 4, &mut rng);
    let q = measures::unified_quantumness(&rho, QuantumnessVariant::Mid, &[0, 1], &settings()).unwrap();
    assert!(q.pi_chi.trace_distance(&q.pi_rho) < 1e-10);
    assert_abs_diff_eq!(q.distances.pi_rho_pi_chi, 0.0, epsilon = 1e-10);
}

#[test]
fn classical_c_beats_perturbed_products() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let chi = random::classical_classical(&layout, false, &mut rng);
    let c = measures::classical_c(&chi, &settings()).unwrap();
    assert_abs_diff_eq!(c.value, relative_entropy(&chi, &c.pi).unwrap(), epsilon = 1e-12);
    let marginals = chi.marginals();
    for k in 0..20 {
        let eps = 0.01 * (k + 1) as f64;
        let turn = |m: &DensityMatrix, rng: &mut ChaCha8Rng| {
            let mixed = m.matrix().scale(1.0 - eps) + random::density(m.layout(), 2, rng).matrix().scale(eps);
            DensityMatrix::validate(mixed, m.layout().clone()).unwrap()
        };
        let pi = turn(&marginals[0], &mut rng).tensor(&turn(&marginals[1], &mut rng)).unwrap();
        assert!(relative_entropy(&chi, &pi).unwrap() >= c.value - 1e-12);
    }
}

#[test]
fn product_family_is_uncorrelated() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let rho = random::product(&layout, &mut rng);
    let report = analyze(&rho, &MeasureRequest::all()).unwrap();
    assert!(report.is_complete());
    for m in [
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
    ] {
        assert!(report.value(m).unwrap() < 1e-8, "{m}");
    }
    assert_eq!(report.value(Measure::ConfusionP), Some(1.0));
}

#[test]
fn classical_quantum_family_has_no_discord_on_flag_side() {
    let layout = SubsystemLayout::new(vec![3, 2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..5 {
        let rho = random::classical_quantum(&layout, true, &mut rng);
        assert!(measures::discord_delta(&rho, &[0], &settings()).unwrap().value < 1e-6);
    }
}

#[test]
fn report_loops_close() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let rho = random::density(&layout, 2, &mut rng);
    let report = analyze(&rho, &MeasureRequest::all()).unwrap();
    assert!(report.is_complete(), "{:?}", report.failures);
    assert!(report.rho_loop_residual.unwrap() < 1e-9);
    assert!(report.sigma_loop_residual.unwrap() < 1e-9);
    let (d, e) = (report.value(Measure::Red).unwrap(), report.value(Measure::Ree).unwrap());
    assert!(e <= d + 1e-12);
    assert!(report.value(Measure::Mid).unwrap() >= d - 1e-8);
    let p = report.value(Measure::ConfusionP).unwrap();
    assert_abs_diff_eq!(p, (-e * std::f64::consts::LN_2).exp(), epsilon = 1e-12);
}

#[test]
fn additivity_holds_at_any_basis() {
    let layout = SubsystemLayout::qubits(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let rho = random::density(&layout, 4, &mut rng);
    let basis = LocalBasisSet::new(vec![
        LocalBasis::from_unitary(random::unitary(2, &mut rng)).unwrap(),
        LocalBasis::from_unitary(random::unitary(2, &mut rng)).unwrap(),
    ]);
    let chi = dephase(&rho, &basis, &[0, 1]).unwrap();
    let d = chi.entropy() - rho.entropy();
    let c = chi.mutual_information();
    let t = rho.mutual_information();
    let l = measures::additivity_l(&rho, &basis, &[0, 1]).unwrap();
    assert_abs_diff_eq!(d + c, t + l, epsilon = 1e-9);
}
