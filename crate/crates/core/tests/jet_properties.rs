mod common;

use proptest::prelude::*;
use warped_soliton::{parse_expr, Expr, Jet, Jet4};

use common::{expression_corpus, ridders};

#[test]
fn derivative_channels_match_finite_differences() {
    let mut worst: f64 = 0.0;
    for (text, e, s) in expression_corpus() {
        let jet: Jet4 = e.eval_jet(s).unwrap();
        for k in 1..=4 {
            let (fd, est) = ridders(|t| e.eval_jet::<4>(t).unwrap().d(k - 1), s, 0.05);
            let rel = (jet.d(k) - fd).abs() / (1.0 + jet.d(k).abs());
            worst = worst.max(rel);
            assert!(
                rel <= 1e-6,
                "{text} at s = {s}: d{k} jet {} fd {fd} (estimate {est})",
                jet.d(k)
            );
        }
    }
    println!("worst relative error {worst:e}");
}

#[test]
fn parser_round_trip() {
    for (text, e, s) in expression_corpus() {
        let canon = e.unparse();
        let again = parse_expr(&canon).unwrap_or_else(|err| panic!("{text} -> {canon}: {err}"));
        assert_eq!(again, e, "{text} -> {canon}");
        assert_eq!(again.unparse(), canon);
        assert_eq!(again.value(s).unwrap(), e.value(s).unwrap());
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<Expr>(&json).unwrap(), e);
    }
}

fn jet3() -> impl Strategy<Value = Jet<3>> {
    prop::array::uniform4(-5.0..5.0f64).prop_map(|d| Jet::from_derivatives(&d))
}

fn close(a: Jet<3>, b: Jet<3>, tol: f64) -> bool {
    close_at(a, b, tol, 1.0)
}

/// Like `close`, with the error measured against `scale` as well, for
/// results that cancel out of larger intermediate terms.
fn close_at(a: Jet<3>, b: Jet<3>, tol: f64, scale: f64) -> bool {
    a.derivatives()
        .iter()
        .zip(b.derivatives())
        .all(|(x, y)| (x - y).abs() <= tol * (scale + x.abs().max(y.abs())))
}

fn size(a: Jet<3>) -> f64 {
    a.derivatives().iter().fold(1.0, |m: f64, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sum_and_product_commute(a in jet3(), b in jet3()) {
        prop_assert_eq!(a + b, b + a);
        prop_assert!(close_at(a * b, b * a, 1e-14, 8.0 * size(a) * size(b)));
    }

    #[test]
    fn sum_and_product_associate(a in jet3(), b in jet3(), c in jet3()) {
        prop_assert!(close((a + b) + c, a + (b + c), 1e-14));
        let scale = 64.0 * size(a) * size(b) * size(c);
        prop_assert!(close_at((a * b) * c, a * (b * c), 1e-12, scale));
        prop_assert!(close_at(a * (b + c), a * b + a * c, 1e-12, scale));
    }

    #[test]
    fn exp_log_inverse(v in 0.2..5.0f64, d1 in -2.0..2.0f64, d2 in -2.0..2.0f64, d3 in -2.0..2.0f64) {
        let x = Jet::<3>::from_derivatives(&[v, d1, d2, d3]);
        prop_assert!(close(x.ln().unwrap().exp(), x, 1e-12));
        prop_assert!(close(x * x.recip().unwrap(), Jet::constant(1.0), 1e-12));
    }
}
