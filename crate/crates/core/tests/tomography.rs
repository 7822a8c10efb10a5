// SPDX-License-Identifier: Apache-2.0

use ensemble_qip::analytic::rho_discounted;
use ensemble_qip::dynamics::PhysicalParams;
use ensemble_qip::logical::{plus_plus_register, DualRailQubit};
use ensemble_qip::metrics::{trace_distance, wootters_concurrence};
use ensemble_qip::protocol::{parity_projection, MeasurementModel};
use ensemble_qip::statekit::{DensityMatrix, C64};
use ensemble_qip::tomography::{
    estimate_coherences, estimate_diagonals, exact_run, postselected_fraction, reconstruct, write_csv, CountTable,
    OutcomeDistribution, ReadoutSetting, TomographyRun,
};

fn final_state(eta1: f64) -> DensityMatrix {
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    let rho = plus_plus_register(false, &params).unwrap();
    parity_projection(&rho, &q1, &q2, &MeasurementModel::new(eta1, 0.0).unwrap(), &params)
        .unwrap()
        .final_state
}

fn exact(eta1: f64) -> TomographyRun<OutcomeDistribution> {
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    exact_run(
        &final_state(eta1),
        &q1,
        &q2,
        &ReadoutSetting::default_rotated(&params),
        &MeasurementModel::ideal(),
        &params,
    )
    .unwrap()
}

#[test]
fn z_distribution_matches_born_rule() {
    let eta = 0.2;
    let z = exact(eta).z;
    let n = 1.0 + eta;
    let expected = [
        (0b1001, 0.5 / n),
        (0b0110, 0.5 / n),
        (0b1010, eta / (4.0 * n)),
        (0b0101, eta / (4.0 * n)),
        (0b0000, eta / (2.0 * n)),
    ];
    for (r, p) in expected {
        assert!((z.probabilities[r] - p).abs() < 1e-12, "record {r:04b}");
    }
    let total: f64 = expected.iter().map(|e| e.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn exact_statistics_reconstruct_discounted_state() {
    let params = PhysicalParams::default();
    for i in 0..=10 {
        let eta = i as f64 / 10.0;
        let (_, co, rec) = exact(eta).reconstruct(&params, Some(eta)).unwrap();
        let target = rho_discounted(eta).unwrap();
        let d = rec.state.matrix().max_abs_diff(target.matrix());
        assert!(d < 1e-9, "eta {eta}: {d:e}");
        assert!(rec.trace_distance.unwrap() < 1e-9);
        assert!((co.c.norm() - 0.5 / (1.0 + eta)).abs() < 1e-9);
    }
}

#[test]
fn postselected_fraction_in_rotated_settings() {
    // the readout turns the σ branches' two-excitation qubit into dark or
    // double-bright records on one qubit only
    for eta in [0.0, 0.1, 0.5, 1.0] {
        let run = exact(eta);
        let expected = (1.0 + eta / 2.0) / (1.0 + eta);
        for d in &run.rotated {
            assert!((postselected_fraction(d) - expected).abs() < 1e-12, "eta {eta}");
        }
    }
}

#[test]
fn sampled_reconstruction_at_1e5_runs() {
    let params = PhysicalParams::default();
    let eta = 0.1;
    let sampled = exact(eta).sample(100_000, 7).unwrap();
    let (diag, co, rec) = sampled.reconstruct(&params, Some(eta)).unwrap();
    assert!(rec.trace_distance.unwrap() <= 0.05, "{:?}", rec.trace_distance);

    let target = rho_discounted(eta).unwrap();
    let n = 100_000.0;
    for k in 0..4 {
        let p = target.matrix()[(k, k)].re;
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!((diag.populations[k] - p).abs() < 3.0 * sigma, "population {k}");
    }
    assert!((co.c.norm() - 0.5 / 1.1).abs() < 3.0 * co.c_standard_error.max(1e-3));
}

#[test]
fn sampling_error_scales_as_inverse_square_root() {
    let params = PhysicalParams::default();
    let eta = 0.1;
    let run = exact(eta);
    let seeds = 12;
    let runs = [1_000u64, 10_000, 100_000];
    let mean_distance: Vec<f64> = runs
        .iter()
        .map(|&n| {
            (0..seeds)
                .map(|s| {
                    let (_, _, rec) = run
                        .sample(n, 1000 + s)
                        .unwrap()
                        .reconstruct(&params, Some(eta))
                        .unwrap();
                    rec.trace_distance.unwrap()
                })
                .sum::<f64>()
                / seeds as f64
        })
        .collect();
    let xs: Vec<f64> = runs.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mean_distance.iter().map(|d| d.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}, distances {mean_distance:?}");
}

#[test]
fn diagonal_only_reconstruction_is_unentangled() {
    let diag = estimate_diagonals(&exact(0.1).z).unwrap();
    let rec = reconstruct(&diag, None, Some(0.1)).unwrap();
    assert_eq!(wootters_concurrence(&rec.state).unwrap(), 0.0);
}

#[test]
fn dephased_input_gives_zero_coherence() {
    // classical mixture of |01⟩ and |10⟩ on the rails
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    let rho = final_state(0.0);
    let mut m = rho.matrix().clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                m[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    let dephased = DensityMatrix::new(rho.layout().clone(), m).unwrap();
    let run = exact_run(
        &dephased,
        &q1,
        &q2,
        &ReadoutSetting::default_rotated(&params),
        &MeasurementModel::ideal(),
        &params,
    )
    .unwrap();
    let diag = estimate_diagonals(&run.z).unwrap();
    let co = estimate_coherences(&run.rotated, &diag, &params).unwrap();
    assert!(co.c.norm() < 1e-10 && co.d.norm() < 1e-10);
    let rec = reconstruct(&diag, Some(&co), None).unwrap();
    assert_eq!(wootters_concurrence(&rec.state).unwrap(), 0.0);
}

#[test]
fn sampling_is_deterministic_and_csv_round_trips() {
    let run = exact(0.1);
    let a = run.sample(20_000, 3).unwrap();
    let b = run.sample(20_000, 3).unwrap();
    let tables = |r: &TomographyRun<CountTable>| {
        let mut v = vec![r.z.clone()];
        v.extend(r.rotated.iter().cloned());
        v
    };
    let csv = write_csv(&tables(&a));
    assert_eq!(csv, write_csv(&tables(&b)));
    assert_eq!(CountTable::parse_csv(&csv).unwrap(), tables(&a));
    assert!(tables(&a).iter().all(|t| t.total() == 20_000));
}

#[test]
fn readout_errors_bias_the_reconstruction() {
    let params = PhysicalParams::default();
    let (q1, q2) = DualRailQubit::standard_pair();
    let run = exact_run(
        &final_state(0.1),
        &q1,
        &q2,
        &ReadoutSetting::default_rotated(&params),
        &MeasurementModel::new(0.05, 0.0).unwrap(),
        &params,
    )
    .unwrap();
    let (_, _, rec) = run.reconstruct(&params, Some(0.1)).unwrap();
    let ideal = rho_discounted(0.1).unwrap();
    assert!(trace_distance(&rec.state, &ideal).unwrap() > 1e-3);
}
