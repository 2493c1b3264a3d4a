mod common;

use proptest::prelude::*;
use warped_soliton::analysis::{d_tensor, soliton_residual, Status};
use warped_soliton::ode::{
    integrate, monitor, IntegrateOptions, Method, SolitonOdeParams, TrajectoryState,
};
use warped_soliton::{catalog_entry, connection_state, CatalogId, FiberSpec};

use common::bryant_init;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

prop_compose! {
    fn two_fiber_problem()(
        r1 in 1usize..=3,
        r2 in 2usize..=4,
        k2 in prop::sample::select(vec![-1.0, 0.0, 1.0]),
        k1 in prop::sample::select(vec![-1.0, 0.0, 1.0]),
        rho in -1.0..1.0f64,
        h in prop::array::uniform2(0.7..1.5f64),
        w in prop::array::uniform2(-0.5..0.5f64),
        v in 0.3..1.5f64,
    ) -> (SolitonOdeParams, TrajectoryState) {
        let k1 = if r1 == 1 { 0.0 } else { k1 };
        let p = SolitonOdeParams::new(
            1 + r1 + r2,
            rho,
            vec![FiberSpec::new(r1, k1, true), FiberSpec::new(r2, k2, true)],
        )
        .unwrap();
        let init = TrajectoryState { s: 1.0, h: h.to_vec(), w: w.to_vec(), f: 0.0, v };
        (p, init)
    }
}

proptest! {
    #![proptest_config(config(64))]

    /// Along any trajectory of the soliton system the D tensor recombines
    /// from Cotton and Weyl, and the potential stays a soliton potential.
    #[test]
    fn d_recombines_along_ode_solitons((p, init) in two_fiber_problem()) {
        let opts = IntegrateOptions { grid_points: 41, ..IntegrateOptions::with_tol(1e-11) };
        let traj = match integrate(&init, &p, 1.4, &opts) {
            Ok(t) => t,
            Err(e) => {
                prop_assume!(false, "left the chart: {}", e);
                unreachable!()
            }
        };
        let moderate = traj
            .samples
            .iter()
            .all(|x| x.h.iter().zip(&x.w).all(|(h, w)| *h > 0.2 && (w / h).abs() < 5.0));
        prop_assume!(moderate, "approaching a singularity");
        for st in traj.frames().unwrap() {
            for r in soliton_residual(&st, 1e-9) {
                prop_assert!(r.passed(), "{} = {:?} at {}", r.name, r.value, st.s);
            }
            for r in d_tensor(&st, 1e-9) {
                if r.name.starts_with("d_eq_226") {
                    prop_assert_eq!(r.status, Status::Pass, "{} = {:?}", r.name, r.value);
                }
            }
        }
        let rep = monitor(&traj).unwrap();
        prop_assert!(rep.c0_drift <= 1e-8 * (1.0 + rep.c0_initial.abs()));
        prop_assert!(rep.hamilton_grad_max <= 1e-8);
    }
}

#[test]
fn closed_form_solutions_are_reproduced() {
    let cases = [
        (CatalogId::type_iii(6), 1.0, 5.0),
        (CatalogId::type_ii(7, 3, -2.0), 0.5, 3.0),
        (CatalogId::gaussian(5, 1.0), 0.2, 4.0),
    ];
    for (id, a, b) in cases {
        let spec = catalog_entry(id).unwrap();
        let p = SolitonOdeParams::from_spec(&spec).unwrap();
        let init = TrajectoryState::from_spec(&spec, a).unwrap();
        let traj = integrate(&init, &p, b, &IntegrateOptions::with_tol(1e-11)).unwrap();
        for st in traj.samples.iter().step_by(50) {
            let exact = TrajectoryState::from_spec(&spec, st.s).unwrap();
            assert!(st.max_abs_diff(&exact) < 1e-8, "{id:?} at {}", st.s);
        }
        let last = connection_state(&spec, b).unwrap();
        assert!((traj.last().h[0] - last.fibers[0].h.v()).abs() < 1e-8);
    }
}

#[test]
fn time_reversal_on_regular_interval() {
    for id in [CatalogId::type_iii(7), CatalogId::gaussian(4, -0.5)] {
        let spec = catalog_entry(id).unwrap();
        let p = SolitonOdeParams::from_spec(&spec).unwrap();
        let init = TrajectoryState::from_spec(&spec, 1.0).unwrap();
        let opts = IntegrateOptions::with_tol(1e-11);
        let fwd = integrate(&init, &p, 5.0, &opts).unwrap();
        let back = integrate(fwd.last(), &p, 1.0, &opts).unwrap();
        let err = back.last().max_abs_diff(&init);
        assert!(err < 1e-8, "{id:?}: {err:e}");
    }
}

#[test]
fn rk4_is_fourth_order() {
    let (p, init) = bryant_init(4, 0.1);
    let reference = integrate(&init, &p, 2.0, &IntegrateOptions::with_tol(1e-13)).unwrap();
    let run = |step: f64| {
        let opts = IntegrateOptions {
            method: Method::Rk4 { step },
            grid_points: 11,
            ..IntegrateOptions::default()
        };
        integrate(&init, &p, 2.0, &opts).unwrap().last().max_abs_diff(reference.last())
    };
    let (coarse, fine) = (run(0.02), run(0.01));
    let ratio = coarse / fine;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio} ({coarse:e}, {fine:e})");
}

#[test]
fn bryant_profile_is_asymptotically_parabolic() {
    let (p, init) = bryant_init(4, 0.1);
    let traj = integrate(&init, &p, 10.0, &IntegrateOptions::with_tol(1e-10)).unwrap();
    let rep = monitor(&traj).unwrap();
    assert!((rep.c0_initial - 1.0).abs() < 1e-3);
    let h: Vec<f64> = traj.samples.iter().map(|s| s.h[0]).collect();
    assert!(h.windows(2).all(|w| w[1] > w[0]));
    let last = traj.last();
    assert!(last.w[0] > 0.0 && last.w[0] < 0.5);
    assert!(last.v < 0.0);
}
