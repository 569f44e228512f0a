use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use dyspec_core::oracle::{brute_force_propagator, OracleCocycle};
use dyspec_core::{AmplitudeForm, Cocycle, FlowField, PhasePoint};
use nalgebra::DMatrix;

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn cellular_fixed_point_matches_brute_force() {
    let flow = FlowField::cellular();
    let b = Cocycle::amplitude(&flow, AmplitudeForm::Projected);
    for eta in [[1.0, 0.0], [0.0, 1.0]] {
        let theta = PhasePoint::new(&[0.0, 0.0], &eta).unwrap();
        let a = dyspec_core::cocycle::amplitude_generator(&flow, &theta, AmplitudeForm::Projected).unwrap();
        let want = brute_force_propagator(&|_| a.clone(), 2.0, 1e-4).unwrap();
        let got = b.propagate(&theta, 2.0, 1e-3).unwrap();
        assert!(max_diff(&got, &want) < 1e-5, "{got} vs {want}");
    }
}

#[test]
fn shear_amplitude_matches_closed_form() {
    let b = Cocycle::amplitude(&FlowField::shear(), AmplitudeForm::Projected);
    for (y0, eta0) in [(0.4, [0.6, 0.8]), (2.5, [-0.28, 0.96]), (PI / 2.0, [1.0, 0.0])] {
        let o = OracleCocycle::ShearClosedForm { y0, eta0 };
        for t0 in [0.0, 1.5] {
            let theta = o.base_point(t0).unwrap();
            let got = b.propagate(&theta, 3.0, 1e-3).unwrap();
            let want = o.exact_propagator_from(t0, 3.0).unwrap();
            assert!(max_diff(&got, &want) < 1e-9, "y0={y0} t0={t0}: {got} vs {want}");
        }
    }
}

#[test]
fn floquet_production_matches_oracle() {
    let o = OracleCocycle::floquet_fixture();
    let c = o.to_cocycle().unwrap();
    let got = c.propagate(&o.base_point(0.5).unwrap(), 2.0 * PI, 1e-3).unwrap();
    let want = o.exact_propagator_from(0.5, 2.0 * PI).unwrap();
    assert!(max_diff(&got, &want) < 1e-8);
    assert_abs_diff_eq!(want[(0, 1)], 2.0 * PI, epsilon = 1e-8);
}

#[test]
fn constant_and_time_dependent_oracles_agree_with_production() {
    let a = DMatrix::from_row_slice(3, 3, &[0.1, -0.4, 0.0, 0.4, 0.1, 0.2, 0.0, -0.3, -0.5]);
    let o = OracleCocycle::Constant(a.clone());
    let got = o.to_cocycle().unwrap().propagate(&PhasePoint::clock(0.0), 4.0, 1e-3).unwrap();
    assert!(max_diff(&got, &o.exact_propagator(4.0).unwrap()) < 1e-10);

    let td = OracleCocycle::TimeDependent(Arc::new(|t: f64| DMatrix::from_row_slice(2, 2, &[t.sin(), 1.0, -1.0, 0.3 * t.cos()])));
    let got = td.to_cocycle().unwrap().propagate(&PhasePoint::clock(0.7), 3.0, 1e-3).unwrap();
    assert!(max_diff(&got, &td.exact_propagator_from(0.7, 3.0).unwrap()) < 1e-7);
}

#[test]
fn diagonal_time_varying_propagator() {
    let o = OracleCocycle::DiagonalTimeVarying {
        rates: vec![Arc::new(|t: f64| -1.0 + 0.5 * t.sin()), Arc::new(|t: f64| 1.0 + 0.5 * (0.5 * t).cos())],
        window: 20.0,
        starts: (0.0, 180.0),
    };
    let got = o.to_cocycle().unwrap().propagate(&PhasePoint::clock(2.0), 3.0, 1e-3).unwrap();
    let want = o.exact_propagator_from(2.0, 3.0).unwrap();
    assert!(max_diff(&got, &want) < 1e-9 * want.max());
    let s = o.exact_sacker_sell().unwrap();
    assert_eq!(s.len(), 2);
    assert!(s.intervals()[0].hi < -0.9 && s.intervals()[1].lo > 0.9);
}
