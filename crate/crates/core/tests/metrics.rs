// SPDX-License-Identifier: Apache-2.0

use ensemble_qip::analytic::{psi_plus, qubit_pair_layout, rho_discounted};
use ensemble_qip::dynamics::PhysicalParams;
use ensemble_qip::logical::{plus_plus_register, DualRailQubit};
use ensemble_qip::metrics::{
    convex_roof_c2, dephase_outside, discount, entanglement_of_formation, entanglement_report, fidelity,
    i_concurrence_pure, to_quinits, wootters_concurrence, ConvexRoofOptions, OutsideLevels, ReportVariant,
};
use ensemble_qip::protocol::{parity_projection, MeasurementModel};
use ensemble_qip::statekit::{CMatrix, DensityMatrix, StateVector, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn final_modes(eta: f64) -> DensityMatrix {
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    let rho = plus_plus_register(false, &params).unwrap();
    parity_projection(&rho, &q1, &q2, &MeasurementModel::new(eta, 0.0).unwrap(), &params)
        .unwrap()
        .final_state
}

fn random_state(rank: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = CMatrix::from_fn(4, rank, |_, _| {
        C64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    });
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    DensityMatrix::new(qubit_pair_layout(), m.scale_real(1.0 / t)).unwrap()
}

/// Concurrence of an X state with populations `a, b, c, d` and coherences
/// `z = ρ₁₂`, `w = ρ₀₃`.
fn x_state_concurrence(a: f64, b: f64, c: f64, d: f64, z: f64, w: f64) -> f64 {
    (2.0 * (z - (a * d).sqrt())).max(2.0 * (w - (b * c).sqrt())).max(0.0)
}

#[test]
fn discounted_family_concurrence() {
    for k in 0..=10 {
        let eta = k as f64 / 10.0;
        let n = 1.0 + eta;
        let oracle = x_state_concurrence(eta / 2.0 / n, 0.5 / n, 0.5 / n, eta / 2.0 / n, 0.5 / n, 0.0);
        let c = wootters_concurrence(&rho_discounted(eta).unwrap()).unwrap();
        assert!((c - oracle).abs() < 1e-9);
        assert!((c - (1.0 - eta) / (1.0 + eta)).abs() < 1e-9);
    }
    let e = entanglement_of_formation(&rho_discounted(0.1).unwrap()).unwrap();
    assert!((e - 0.746).abs() < 5e-3, "{e}");
    assert!(entanglement_of_formation(&rho_discounted(1.0).unwrap()).unwrap() < 1e-12);
}

#[test]
fn discount_reproduces_closed_form_on_protocol_output() {
    let (q1, q2) = DualRailQubit::standard_pair();
    for eta in [0.0, 0.2, 0.5, 1.0] {
        let d = discount(&to_quinits(&final_modes(eta), &q1, &q2).unwrap()).unwrap();
        let want = rho_discounted(eta).unwrap();
        assert!(d.state.matrix().max_abs_diff(want.matrix()) < 1e-9, "eta {eta}");
        assert!(d.unrecognized < 1e-12);
    }
    let d = discount(&to_quinits(&final_modes(0.2), &q1, &q2).unwrap()).unwrap();
    assert!((d.state.matrix()[(0, 0)].re - 0.1 / 1.2).abs() < 1e-12);
}

#[test]
fn dephasing_spreads_leaked_weight() {
    let (q1, q2) = DualRailQubit::standard_pair();
    let eta = 0.4;
    let q = to_quinits(&final_modes(eta), &q1, &q2).unwrap();
    let d = dephase_outside(&q, OutsideLevels::All).unwrap();
    let leaked = eta / (2.0 * (1.0 + eta));
    assert!((d.density().trace() - 1.0).abs() < 1e-12);
    assert!((d.matrix()[(24, 24)].re - leaked / 21.0).abs() < 1e-12);
    assert!(
        d.projected_qubits()
            .unwrap()
            .matrix()
            .max_abs_diff(q.projected_qubits().unwrap().matrix())
            < 1e-12
    );
}

#[test]
fn roof_matches_concurrence_squared_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = ConvexRoofOptions::default();
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let rho = random_state(2 + k % 2, &mut rng);
        let c = wootters_concurrence(&rho).unwrap();
        let r = convex_roof_c2(&rho, &["Q1"], &opts).unwrap();
        worst = worst.max((r.value - c * c).abs());
    }
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn roof_curves_are_ordered() {
    let (q1, q2) = DualRailQubit::standard_pair();
    let opts = ConvexRoofOptions::default();
    for eta in [0.2, 0.5, 0.8] {
        let rho = final_modes(eta);
        let v: Vec<f64> = ReportVariant::ALL
            .iter()
            .map(|&var| entanglement_report(&rho, &q1, &q2, var, &opts).unwrap().c2_squared)
            .collect();
        let (raw, deph, disc) = (v[0], v[1], v[2]);
        assert!(disc <= deph + 2e-3 && deph <= raw + 2e-3, "eta {eta}: {v:?}");
        let c = (1.0 - eta) / (1.0 + eta);
        assert!((disc - c * c).abs() < 2e-3);
    }
}

#[test]
fn raw_roof_stays_positive_at_full_error() {
    let (q1, q2) = DualRailQubit::standard_pair();
    let r = entanglement_report(
        &final_modes(1.0),
        &q1,
        &q2,
        ReportVariant::Raw,
        &ConvexRoofOptions::default(),
    )
    .unwrap();
    assert!(r.c2_squared > 0.05, "{}", r.c2_squared);
    assert!((r.fidelity_psi_plus - 0.5f64.sqrt()).abs() < 1e-9);
}

#[test]
fn projected_block_has_more_formation_entanglement() {
    let (q1, q2) = DualRailQubit::standard_pair();
    for eta in [0.1, 0.5, 0.9] {
        let q = to_quinits(&final_modes(eta), &q1, &q2).unwrap();
        let projected = entanglement_of_formation(&q.projected_qubits().unwrap()).unwrap();
        let discounted = entanglement_of_formation(&discount(&q).unwrap().state).unwrap();
        assert!(discounted <= projected + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pure_roof_equals_pure_measure(re in prop::collection::vec(-1.0f64..1.0, 8)) {
        let amps: Vec<C64> = re.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3);
        let psi = StateVector::new(qubit_pair_layout(), amps).unwrap().normalized().unwrap();
        let pure = i_concurrence_pure(&psi, &["Q1"]).unwrap();
        let c = wootters_concurrence(&psi.to_density()).unwrap();
        prop_assert!((pure - c * c).abs() < 1e-10);
        let roof = convex_roof_c2(&psi.to_density(), &["Q1"], &ConvexRoofOptions::default()).unwrap();
        prop_assert!((roof.value - pure).abs() < 1e-6);
    }

    #[test]
    fn fidelity_is_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(3, &mut rng);
        let b = random_state(2, &mut rng);
        let f = fidelity(&a, &b).unwrap();
        prop_assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn channels_preserve_trace(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 25;
        let g = CMatrix::from_fn(n, 3, |_, _| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
        let m = &g * &g.adjoint();
        let t = m.trace().re;
        let q = ensemble_qip::metrics::QuinitState::new(
            DensityMatrix::new(ensemble_qip::metrics::quinit_pair_layout(), m.scale_real(1.0 / t)).unwrap(),
        ).unwrap();
        prop_assert!((dephase_outside(&q, OutsideLevels::All).unwrap().density().trace() - 1.0).abs() < 1e-12);
        prop_assert!((discount(&q).unwrap().state.trace() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn psi_plus_reference_values() {
    let psi = psi_plus();
    assert!((i_concurrence_pure(&psi, &["Q1"]).unwrap() - 1.0).abs() < 1e-12);
}
