use std::f64::consts::TAU;

use dyspec_core::spectrum::{lyapunov_exponents, sacker_sell_estimate, EstimatorConfig};
use dyspec_core::{AmplitudeForm, Cocycle, FlowField, PhasePoint};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn theta2() -> impl Strategy<Value = PhasePoint> {
    (0.0..TAU, 0.0..TAU, 0.0..TAU).prop_map(|(x, y, a)| PhasePoint::new(&[x, y], &[a.cos(), a.sin()]).unwrap())
}

fn theta3() -> impl Strategy<Value = PhasePoint> {
    (0.0..TAU, 0.0..TAU, 0.0..TAU, -1.0f64..1.0, 0.0..TAU).prop_map(|(x, y, z, c, a)| {
        let r = (1.0 - c * c).sqrt();
        PhasePoint::new(&[x, y, z], &[r * a.cos(), r * a.sin(), c]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cocycle_identity_on_the_abc_flow(theta in theta3(), t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let flow = FlowField::abc(1.0, 0.8, 0.6);
        let b = Cocycle::amplitude(&flow, AmplitudeForm::Projected);
        prop_assert!(b.identity_residual(&theta, t, s, 1e-3).unwrap() < 1e-6);
        let r = Cocycle::restricted_amplitude(&flow, AmplitudeForm::Projected).unwrap();
        prop_assert!(r.identity_residual(&theta, t, s, 1e-3).unwrap() < 1e-6);
    }

    #[test]
    fn projected_amplitude_keeps_b_orthogonal(theta in theta3(), w in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)) {
        let flow = FlowField::abc(1.0, 1.0, 1.0);
        let b = Cocycle::amplitude(&flow, AmplitudeForm::Projected);
        let eta0 = DVector::from_column_slice(&theta.eta);
        let raw = DVector::from_vec(vec![w.0, w.1, w.2]);
        let b0 = &raw - &eta0 * eta0.dot(&raw);
        prop_assume!(b0.norm() > 1e-3);
        let (m, end) = b.propagate_with_end(&theta, 5.0, 1e-3).unwrap();
        let bt = m * &b0;
        let rel = bt.dot(&DVector::from_column_slice(&end.eta)).abs() / bt.norm();
        prop_assert!(rel < 1e-6, "relative inner product {rel}");
    }

    #[test]
    fn restricted_b_mirrors_the_stretch_in_two_dimensions(theta in theta2(), t in 0.1f64..3.0) {
        let flow = FlowField::cellular();
        let r = Cocycle::restricted_amplitude(&flow, AmplitudeForm::Projected).unwrap();
        let x = Cocycle::stretch(&flow, -1.0);
        let rv = r.propagate(&theta, t, 1e-3).unwrap()[(0, 0)];
        let xv = x.propagate(&theta, t, 1e-3).unwrap()[(0, 0)];
        prop_assert!((rv - xv).abs() < 1e-8 * xv.abs().max(1.0));
    }

    #[test]
    fn adjoint_shares_singular_values(theta in theta2(), t in 0.1f64..2.0) {
        let b = Cocycle::amplitude(&FlowField::cellular(), AmplitudeForm::Projected);
        let end = b.base_step(&theta, t, 1e-3).unwrap();
        let forward = b.propagate(&theta, t, 1e-3).unwrap();
        let backward = b.adjoint().propagate(&end, t, 1e-3).unwrap();
        prop_assert!((forward - backward.transpose()).abs().max() < 1e-6);
    }

    #[test]
    fn rescaling_translates_the_estimate(a in proptest::collection::vec(-1.0f64..1.0, 4), lambda in -2.0f64..2.0) {
        let c = Cocycle::constant(&DMatrix::from_row_slice(2, 2, &a)).unwrap();
        let cfg = EstimatorConfig { horizon: 40.0, window: 10.0, step: 1e-2, ..Default::default() };
        let ens = [PhasePoint::clock(0.0)];
        let base = sacker_sell_estimate(&c, &ens, &cfg).unwrap();
        let shifted = sacker_sell_estimate(&c.rescaled(lambda), &ens, &cfg).unwrap();
        let want = base.translated(-lambda);
        prop_assert_eq!(want.len(), shifted.len());
        for (u, v) in want.intervals().iter().zip(shifted.intervals()) {
            prop_assert!((u.lo - v.lo).abs() < 1e-9 && (u.hi - v.hi).abs() < 1e-9);
        }
    }

    #[test]
    fn lyapunov_exponents_lie_in_the_estimate(a in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let c = Cocycle::constant(&DMatrix::from_row_slice(2, 2, &a)).unwrap();
        let cfg = EstimatorConfig { horizon: 40.0, window: 10.0, step: 1e-2, window_stride: 0.5, ..Default::default() };
        let start = PhasePoint::clock(0.0);
        let est = sacker_sell_estimate(&c, core::slice::from_ref(&start), &cfg).unwrap();
        for l in lyapunov_exponents(&c, &start, cfg.horizon, cfg.step, cfg.qr_every).unwrap() {
            prop_assert!(est.contains(l, cfg.merge_tol), "{l} not in {:?}", est.pairs());
        }
    }
}
