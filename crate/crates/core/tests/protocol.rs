// SPDX-License-Identifier: Apache-2.0

mod common;

use ensemble_qip::analytic::{pf_closed_form, pf_factors, psi_plus};
use ensemble_qip::dynamics::PhysicalParams;
use ensemble_qip::logical::{plus_plus_register, DualRailQubit};
use ensemble_qip::metrics::{fidelity, to_quinits};
use ensemble_qip::protocol::{
    parity_projection, parity_projection_deferred, Conditioning, MeasurementModel, ProtocolResult,
};
use ensemble_qip::Error;
use proptest::prelude::*;

fn try_run(eta1: f64, eta2: f64) -> Result<ProtocolResult, Error> {
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    let rho = plus_plus_register(false, &params)?;
    parity_projection(&rho, &q1, &q2, &MeasurementModel::new(eta1, eta2)?, &params)
}

fn run(eta1: f64, eta2: f64) -> ProtocolResult {
    try_run(eta1, eta2).unwrap()
}

fn run_deferred(eta1: f64, eta2: f64) -> ProtocolResult {
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    let rho = plus_plus_register(true, &params).unwrap();
    parity_projection_deferred(&rho, &q1, &q2, &MeasurementModel::new(eta1, eta2).unwrap(), &params).unwrap()
}

#[test]
fn intermediate_and_final_states_match_reference() {
    for eta in [0.0, 0.1, 0.3, 0.7, 1.0] {
        let r = run(eta, 0.0);
        let checks = [
            ("block1.check1", common::rho1(eta)),
            ("block1.check2", common::rho2(eta)),
            ("block1", common::post_block(eta)),
        ];
        for (label, expected) in checks {
            let got = r.snapshot(label).unwrap().matrix();
            let (d, _) = common::gauge_distance(got, &expected, 5);
            assert!(d < 1e-9, "{label} at eta {eta}: {d:e}");
        }
        let (d, _) = common::gauge_distance(r.final_state.matrix(), &common::final_modes(eta), 4);
        assert!(d < 1e-9, "final at eta {eta}: {d:e}");
    }
}

#[test]
fn ideal_run_succeeds_half_the_time() {
    let r = run(0.0, 0.0);
    assert!((r.success_probability - 0.5).abs() < 1e-12);
    for (got, want) in r
        .no_probabilities()
        .iter()
        .zip([7.0 / 8.0, 6.0 / 7.0, 5.0 / 6.0, 4.0 / 5.0])
    {
        assert!((got - want).abs() < 1e-12);
    }
    let psi = psi_plus().to_density();
    let (q1, q2) = DualRailQubit::standard_pair();
    let block = to_quinits(&r.final_state, &q1, &q2)
        .unwrap()
        .projected_qubits()
        .unwrap();
    assert!((fidelity(&block, &psi).unwrap() - 1.0).abs() < 1e-9);
    assert!(r.cavity_residual < 1e-12);
}

#[test]
fn faulty_success_probability_near_reported_value() {
    let p = run(0.1, 0.1).success_probability;
    assert!((p - pf_closed_form(0.1, 0.1).unwrap()).abs() < 1e-9);
    assert!((p - 0.364).abs() < 5e-4);
}

#[test]
fn success_probability_grid() {
    for i in 0..=10 {
        for j in 0..=10 {
            let (e1, e2) = (i as f64 / 10.0, j as f64 / 10.0);
            let closed = pf_closed_form(e1, e2).unwrap();
            if closed == 0.0 {
                assert_eq!(try_run(e1, e2).unwrap_err(), Error::ZeroProbability("NO"));
                continue;
            }
            let r = run(e1, e2);
            let factors = pf_factors(e1, e2).unwrap();
            for (got, want) in r.no_probabilities().iter().zip(factors) {
                assert!((got - want).abs() < 1e-9, "({e1}, {e2})");
            }
            assert!((r.success_probability - pf_closed_form(e1, e2).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn fidelity_law() {
    let (q1, q2) = DualRailQubit::standard_pair();
    let target = ensemble_qip::metrics::psi_plus_quinit().to_density();
    for k in 0..=20 {
        let eta = k as f64 * 0.05;
        let q = to_quinits(&run(eta, 0.0).final_state, &q1, &q2).unwrap();
        let f = fidelity(q.density(), &target).unwrap();
        assert!((f * f * (1.0 + eta) - 1.0).abs() < 1e-9, "eta {eta}: {f}");
    }
}

#[test]
fn computational_weight_after_post_selection() {
    let (q1, q2) = DualRailQubit::standard_pair();
    for eta in [0.2, 0.6, 1.0] {
        let q = to_quinits(&run(eta, 0.0).final_state, &q1, &q2).unwrap();
        let want = (1.0 + eta / 2.0) / (1.0 + eta);
        assert!((q.computational_weight() - want).abs() < 1e-12);
    }
}

#[test]
fn deferred_variant_halves_readouts() {
    let a = run(0.0, 0.0);
    let b = run_deferred(0.0, 0.0);
    assert_eq!(a.readout_count(), 4);
    assert_eq!(b.readout_count(), 2);
    assert!((a.success_probability - b.success_probability).abs() < 1e-9);
    assert!(a.final_state.matrix().max_abs_diff(b.final_state.matrix()) < 1e-9);
}

#[test]
fn deferred_variant_keeps_success_probability_under_faults() {
    // The conditioned states differ once eta1 > 0 (one flag readout screens
    // both cavity checks at once), but the abort rate does not.
    for eta in [0.1, 0.3, 1.0] {
        let a = run(eta, 0.0);
        let b = run_deferred(eta, 0.0);
        assert!(
            (a.success_probability - b.success_probability).abs() < 1e-9,
            "eta {eta}"
        );
    }
}

#[test]
fn bayesian_conditioning_changes_the_state() {
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    let rho = plus_plus_register(false, &params).unwrap();
    let model = MeasurementModel {
        conditioning: Conditioning::Bayesian,
        ..MeasurementModel::new(0.3, 0.3).unwrap()
    };
    let a = parity_projection(&rho, &q1, &q2, &model, &params).unwrap();
    let b = run(0.3, 0.3);
    assert!(a.final_state.matrix().max_abs_diff(b.final_state.matrix()) > 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eta2_never_changes_the_conditioned_state(eta1 in 0.0f64..=1.0, eta2 in 0.0f64..0.99) {
        let a = run(eta1, eta2);
        let b = run(eta1, 0.0);
        prop_assert!(a.final_state.matrix().max_abs_diff(b.final_state.matrix()) < 1e-12);
        prop_assert!((a.success_probability - pf_closed_form(eta1, eta2).unwrap()).abs() < 1e-9);
    }
}
