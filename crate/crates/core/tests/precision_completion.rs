use std::sync::Arc;

use gluekit::arith::{q, Q};
use gluekit::completion::{complete, complete_map, torsion_bound, torsion_split, CompletionModel};
use gluekit::precision::{
    is_one, prec_add, prec_invert, prec_mul, refine, Expr, Factor, PrecisionElement, TruncatedAlgebra,
};
use gluekit::{AffineAlgebra, BasePair, GlueError, Poly, PolyRing, Regime};
use proptest::prelude::*;

fn base() -> BasePair {
    BasePair::arithmetic(5).unwrap()
}

fn algebra(vars: &[&str], rels: Vec<Poly>) -> AffineAlgebra {
    AffineAlgebra::new(PolyRing::new(base(), Regime::OverR, vars), rels).unwrap()
}

fn two_var() -> Arc<TruncatedAlgebra> {
    Arc::new(TruncatedAlgebra::new("B", base(), 12, vec![Factor::new("d", &["x", "y"], vec![])]))
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-30i64..30).prop_map(|c| Expr::Const(q(c))),
        Just(Expr::var("x")),
        Just(Expr::var("y")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Expr::Neg(Box::new(a))),
        ]
    })
}

#[test]
fn complete_examples() {
    let zx = algebra(&["x"], vec![]);
    let t = complete(&zx, 2).unwrap();
    let lvl = t.level(2).unwrap();
    assert_eq!(lvl[0].reduce(&Poly::var(1, 0).scale(&q(26))).unwrap(), Poly::var(1, 0));
    let x = Poly::var(1, 0);
    let a = algebra(&["x"], vec![&(&x * &x) - &Poly::constant(1, q(5))]);
    let t = complete(&a, 3).unwrap();
    let lvl = t.level(3).unwrap();
    // x^6 = p^3 = 0 mod p^3
    assert!(lvl[0].is_zero(&x.pow(6)).unwrap());
    assert!(!lvl[0].is_zero(&x.pow(5)).unwrap());
    let over_q = AffineAlgebra::new(PolyRing::new(base(), Regime::OverRInvPi, &["x"]), vec![]).unwrap();
    assert!(matches!(complete(&over_q, 2), Err(GlueError::RegimeMismatch(_))));
}

#[test]
fn torsion_fixtures_split() {
    let y = Poly::var(1, 0);
    for (rels, n0) in [(vec![], 0u32), (vec![y.scale(&q(5))], 1), (vec![y.scale(&q(25))], 2)] {
        let m = CompletionModel::new(algebra(&["y"], rels)).unwrap();
        let s = torsion_split(&m, 2 * n0 + 4).unwrap();
        assert_eq!(s.n0, n0);
        assert_eq!(s.verified_levels.len() as u32, 2 * n0 + 4);
    }
    // torsionfree: B'' is the zero ring and B' = B
    let m = CompletionModel::new(algebra(&["y"], vec![])).unwrap();
    let s = torsion_split(&m, 4).unwrap();
    assert!(s.truncated.is_zero(&Poly::one(1)).unwrap());
    assert!(!s.torsionfree.is_zero(&y).unwrap());
    // pure torsion Z/p^2: B' = 0, B'' = B, B''' = 0
    let m = CompletionModel::new(algebra(&[], vec![Poly::constant(0, q(25))])).unwrap();
    let s = torsion_split(&m, 8).unwrap();
    assert_eq!(s.n0, 2);
    assert!(s.torsionfree.is_zero(&Poly::one(0)).unwrap());
    assert!(s.overlap.is_zero(&Poly::one(0)).unwrap());
    assert!(!s.truncated.is_zero(&Poly::constant(0, q(5))).unwrap());
    assert!(torsion_bound(&m, 1).is_err());
}

#[test]
fn complete_is_functorial() {
    // y -> x^2 + p, then x -> z + 1, composed into Z_(p)[z]/(z^3 - p)
    let z = Poly::var(1, 0);
    let target = complete(&algebra(&["z"], vec![&z.pow(3) - &Poly::constant(1, q(5))]), 4).unwrap();
    let g = vec![&z + &Poly::one(1)];
    let f = vec![&Poly::var(1, 0).pow(2) + &Poly::constant(1, q(5))];
    let composed: Vec<Poly> = f.iter().map(|h| h.substitute(&g, 1)).collect();
    let lhs = complete_map(&composed, &target, 4).unwrap();
    let g4 = complete_map(&g, &target, 4).unwrap();
    let rhs: Vec<Poly> = f.iter().map(|h| h.substitute(&g4, 1)).collect();
    let rhs = complete_map(&rhs, &target, 4).unwrap();
    assert_eq!(lhs, rhs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tower_compatibility(f in arb_expr(), lo in 1u32..5, extra in 0u32..5) {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let a = algebra(&["x", "y"], vec![&(&x * &y) - &Poly::constant(2, q(5))]);
        let hi = lo + extra;
        let t = Arc::new(complete(&a, hi).unwrap());
        let v = f.eval(&t).unwrap().remove(0);
        let fine = t.level(hi).unwrap()[0].reduce(&v).unwrap();
        let coarse = t.level(lo).unwrap()[0].reduce(&v).unwrap();
        prop_assert_eq!(t.level(lo).unwrap()[0].reduce(&fine).unwrap(), coarse);
    }

    #[test]
    fn precision_soundness(a in arb_expr(), b in arb_expr(), n in 1u32..6, gain in 1u32..6) {
        let alg = two_var();
        let run = |m: u32| -> PrecisionElement {
            let ea = PrecisionElement::from_expr(&alg, a.clone(), m).unwrap();
            let eb = PrecisionElement::from_expr(&alg, b.clone(), m).unwrap();
            prec_add(&prec_mul(&ea, &eb).unwrap(), &ea).unwrap()
        };
        let lo = run(n);
        let hi = run(n + gain);
        prop_assert!(hi.equal_at(&lo, n).unwrap());
        prop_assert_eq!(hi.truncate(n).unwrap().value, lo.value.clone());
        let r = refine(&lo, n + gain).unwrap();
        prop_assert!(r.equal_at(&hi, n + gain).unwrap());
    }

    #[test]
    fn min_rule(a in arb_expr(), b in arb_expr(), n in 0u32..6, m in 0u32..6) {
        let alg = two_var();
        let ea = PrecisionElement::from_expr(&alg, a, n).unwrap();
        let eb = PrecisionElement::from_expr(&alg, b, m).unwrap();
        prop_assert!(prec_add(&ea, &eb).unwrap().precision <= n.min(m));
        prop_assert!(prec_mul(&ea, &eb).unwrap().precision <= n.min(m));
    }

    #[test]
    fn inverse_of_units(c0 in 1i64..5, tail in arb_expr(), n in 1u32..=10) {
        // c0 + p*tail is a unit in Z_p<x, y>
        let alg = two_var();
        let e = Expr::Add(Box::new(Expr::Const(q(c0))), Box::new(Expr::Mul(Box::new(Expr::Const(q(5))), Box::new(tail))));
        let a = PrecisionElement::from_expr(&alg, e, n).unwrap();
        let inv = prec_invert(&a).unwrap();
        prop_assert!(is_one(&prec_mul(&a, &inv).unwrap()).unwrap());
    }

    #[test]
    fn inverse_on_the_circle(k in 1u32..4, n in 1u32..=10, c in 1i64..5) {
        // c * x^k is a unit on the circle with inverse c^-1 * xb^k
        let x = Poly::var(2, 0);
        let xb = Poly::var(2, 1);
        let alg = Arc::new(TruncatedAlgebra::new("C", base(), 10, vec![Factor::new("c", &["x", "xb"], vec![&(&x * &xb) - &Poly::one(2)])]));
        let a = PrecisionElement::from_values(&alg, vec![x.pow(k).scale(&q(c))], n).unwrap();
        let inv = prec_invert(&a).unwrap();
        prop_assert!(is_one(&prec_mul(&a, &inv).unwrap()).unwrap());
        let expected = PrecisionElement::from_values(&alg, vec![xb.pow(k).scale(&(Q::from_integer(1.into()) / q(c)))], n).unwrap();
        prop_assert!(inv.equal_at(&expected, n).unwrap());
    }
}
