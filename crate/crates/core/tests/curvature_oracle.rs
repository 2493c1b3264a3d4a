mod common;

use proptest::prelude::*;
use warped_soliton::curvature::{
    cotton_radial, d_components, ricci_spectrum, weyl_components, weyl_traces,
};
use warped_soliton::{build_metric, connection_state, parse_expr, FiberSpec, SolitonSpec};

use common::{cotton_a1a, Dense};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Positive warping function on `[0.5, 3]` from one of three families.
fn warp() -> impl Strategy<Value = String> {
    prop_oneof![
        (0.5..2.0f64, -2.0..2.0f64).prop_map(|(a, p)| format!("{a}*s^{p}")),
        (0.5..2.0f64, -0.7..0.7f64).prop_map(|(a, q)| format!("{a}*exp({q}*s)")),
        (0.2..2.0f64, 0.1..1.0f64).prop_map(|(a, b)| format!("{a}+{b}*s^2")),
    ]
}

fn potential() -> impl Strategy<Value = String> {
    prop_oneof![
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(c, d)| format!("{c}*s^2+{d}*s")),
        (0.1..3.0f64).prop_map(|c| format!("{c}*log(s)")),
        Just("0".to_string()),
    ]
}

fn fiber(dim: usize, k: f64) -> FiberSpec {
    FiberSpec::new(dim, if dim == 1 { 0.0 } else { k }, true)
}

prop_compose! {
    fn two_fiber_spec()(
        r1 in 1usize..=3,
        r2 in 1usize..=4,
        k1 in prop::sample::select(vec![-1.0, 0.0, 1.0]),
        k2 in prop::sample::select(vec![-1.0, 0.0, 1.0]),
        w1 in warp(),
        w2 in warp(),
        f in potential(),
        rho in -1.0..1.0f64,
    ) -> SolitonSpec {
        let (r1, r2) = if r1 + r2 < 3 { (r1, r2 + 1) } else { (r1, r2) };
        build_metric(SolitonSpec {
            n: 1 + r1 + r2,
            rho,
            domain: [0.5, 3.0],
            fibers: vec![fiber(r1, k1), fiber(r2, k2)],
            warps: vec![parse_expr(&w1).unwrap(), parse_expr(&w2).unwrap()],
            potential: parse_expr(&f).unwrap(),
        })
        .unwrap()
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn blocks_match_dense_tensors(spec in two_fiber_spec(), s in 0.6..2.9f64) {
        let st = connection_state(&spec, s).unwrap();
        let dense = Dense::new(&spec, s);
        let n = spec.n;
        let tol = 1e-12;

        let spectrum = ricci_spectrum(&st);
        prop_assert!(close(spectrum.lambda1.v(), dense.ric(0, 0), tol));
        prop_assert!(close(spectrum.trace().v(), dense.scalar, tol));
        for (j, &a) in dense.start.iter().enumerate() {
            prop_assert!(close(spectrum.lambdas[j].v(), dense.ric(a, a), tol));
        }
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    prop_assert_eq!(dense.ric(i, k), 0.0);
                }
            }
        }

        let w = weyl_components(&st).unwrap();
        for (j, &a) in dense.start.iter().enumerate() {
            prop_assert!(close(w.radial[j], dense.w(0, a, 0, a), tol));
            if spec.fibers[j].dim >= 2 {
                prop_assert!(close(w.intra[j].unwrap(), dense.w(a, a + 1, a, a + 1), tol));
            } else {
                prop_assert!(w.intra[j].is_none());
            }
        }
        let (a, b) = (dense.start[0], dense.start[1]);
        prop_assert!(close(w.cross[0].2, dense.w(a, b, a, b), tol));
        for t in weyl_traces(&st, &w) {
            prop_assert!(t.abs() <= 1e-11 * (1.0 + dense.scalar.abs()));
        }

        let d = d_components(&st);
        for (j, &a) in dense.start.iter().enumerate() {
            prop_assert!(close(d[j], dense.d(a, 0, a), tol));
            prop_assert!(close(-d[j], dense.d(a, a, 0), tol));
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let structural = (j == 0 && i == k && i != 0) || (k == 0 && i == j && i != 0);
                    if !structural {
                        prop_assert!(dense.d(i, j, k).abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn weyl_of_dense_tensor_is_trace_free(spec in two_fiber_spec(), s in 0.6..2.9f64) {
        let dense = Dense::new(&spec, s);
        let n = spec.n;
        for i in 0..n {
            for k in 0..n {
                let t: f64 = (0..n).map(|j| dense.w(i, j, k, j)).sum();
                prop_assert!(t.abs() <= 1e-11 * (1.0 + dense.scalar.abs()));
            }
        }
    }
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn cotton_matches_covariant_derivative(spec in two_fiber_spec(), s in 0.7..2.8f64) {
        let st = connection_state(&spec, s).unwrap();
        let c = cotton_radial(&st);
        for (j, cj) in c.iter().enumerate().take(2) {
            let oracle = cotton_a1a(&spec, s, j, 0.05);
            prop_assert!(close(-cj, oracle, 1e-7), "fiber {}: {} vs {}", j, -cj, oracle);
        }
    }
}

/// `h1 = s^2` on a line, `h2 = 1` on a flat plane, `n = 4`. Then `xi = 2/s`,
/// the radial and first fiber eigenvalues are both `-2/s^2`, the second is
/// zero and `R = -4/s^2`, so at `s = 1`
/// `c_1 = lambda' - (lambda1 - lambda) xi - R'/6 = 4 - 0 - 8/6 = 8/3`.
#[test]
fn non_harmonic_hand_value() {
    let spec = build_metric(SolitonSpec {
        n: 4,
        rho: 0.0,
        domain: [0.5, 2.0],
        fibers: vec![fiber(1, 0.0), fiber(2, 0.0)],
        warps: vec![parse_expr("s^2").unwrap(), parse_expr("1").unwrap()],
        potential: parse_expr("0").unwrap(),
    })
    .unwrap();
    let c = cotton_radial(&connection_state(&spec, 1.0).unwrap());
    assert!((c[0] - 8.0 / 3.0).abs() < 1e-12, "{c:?}");
    assert!((-c[0] - cotton_a1a(&spec, 1.0, 0, 0.05)).abs() < 1e-8);
}
