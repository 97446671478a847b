use std::sync::Arc;
use std::time::Instant;

use gluekit::arith::{q, q_frac, Q};
use gluekit::models::{two_disks_generators, two_disks_triple, unit_circle_triple, unit_disk_triple};
use gluekit::precision::{Factor, TruncatedAlgebra};
use gluekit::triple::{reconstruct_global_sections, AffineGluingTriple, Classification, DElement, Membership};
use gluekit::{AffineAlgebra, BasePair, GlueError, Poly, PolyRing, Regime};
use num_traits::Zero;
use proptest::prelude::*;

fn x() -> Poly {
    Poly::var(1, 0)
}

/// Coefficients of `f(x + c)` by Horner's rule on dense coefficient lists.
fn shifted(f: &Poly, c: &Q) -> Vec<Q> {
    let deg = f.total_degree().unwrap_or(0) as usize;
    let mut out: Vec<Q> = vec![];
    for k in (0..=deg).rev() {
        // out = out * (x + c) + a_k
        let mut next = vec![Q::zero(); out.len() + 1];
        for (i, a) in out.iter().enumerate() {
            next[i + 1] += a;
            next[i] += a * c;
        }
        next[0] += f.coeff(&[k as u32]);
        out = next;
    }
    out
}

fn integral(c: &Q, p: i64) -> bool {
    !(c.denom() % num_bigint::BigInt::from(p)).is_zero()
}

fn in_two_disks(f: &Poly, p: i64) -> bool {
    shifted(f, &Q::zero()).iter().all(|c| integral(c, p)) && shifted(f, &q_frac(1, p)).iter().all(|c| integral(c, p))
}

fn d_elements(t: &AffineGluingTriple, fs: &[Poly]) -> Vec<DElement> {
    fs.iter().map(|f| t.d_element(f, "reference").unwrap().expect("in D")).collect()
}

#[test]
fn two_disks_membership() {
    let t = two_disks_triple(5).unwrap();
    assert_eq!(t.membership(&x().scale(&q(5))).unwrap(), Membership::Member);
    match t.membership(&x()).unwrap() {
        Membership::NonMember { factor, valuation, monomial } => {
            assert_eq!((factor, valuation, monomial.as_str()), (1, -1, "1"));
        }
        m => panic!("{m:?}"),
    }
    for g in two_disks_generators(5) {
        assert_eq!(t.membership(&g).unwrap(), Membership::Member);
    }
}

#[test]
fn two_disks_constructors() {
    for p in [2, 5, 7] {
        let t = two_disks_triple(p).unwrap();
        assert_eq!(t.membership(&x().scale(&q(p as i64))).unwrap(), Membership::Member);
    }
    assert!(two_disks_triple(7).unwrap().dense_image_check(3, 6).unwrap().dense);
}

fn check_two_disks(p: u64) {
    let t = two_disks_triple(p).unwrap();
    let r = t.glue_ring(4, 6).unwrap();
    let reference = d_elements(&t, &two_disks_generators(p));
    for d in 1..=6 {
        assert!(t.s_lattice(&r.generators, d, 2 * d).unwrap().same(&t.s_lattice(&reference, d, 2 * d).unwrap()), "degree {d}");
    }
    let [alpha, beta, gamma] = two_disks_generators(p)
        .map(|f| t.express(&r.generators, &f, 12).unwrap().expect("expressible"));
    let n = r.generators.len();
    let one = Poly::one(n);
    let pc = Poly::constant(n, q(p as i64));
    let om = &one - &gamma;
    let rels = [
        &(&pc * &alpha) - &(&gamma * &om.pow(2)),
        &(&pc * &beta) - &(&gamma.pow(2) * &om),
        &(&gamma * &alpha) - &(&om * &beta),
    ];
    for rel in &rels {
        assert!(r.relations.contains(rel).unwrap(), "{}", rel.display(&r.names()));
    }
    assert!(t.verify_glued(&r).unwrap().len() >= 4);
}

#[test]
fn two_disks_presentation() {
    let start = Instant::now();
    check_two_disks(5);
    check_two_disks(2);
    eprintln!("two primes in {:?}", start.elapsed());
}

#[test]
fn dropping_gamma_breaks_surjectivity() {
    let t = two_disks_triple(5).unwrap();
    let r = t.glue_ring(4, 6).unwrap();
    let gens: Vec<DElement> = r.generators.iter().filter(|g| g.label != "p^1*x").cloned().collect();
    assert_eq!(gens.len() + 1, r.generators.len());
    match t.verify_generators(&gens, 6, 4) {
        Err(GlueError::VerificationFailed { check, witness }) => {
            assert_eq!(check, "B-surjectivity mod p^1");
            assert_eq!(witness, "idempotent of d0");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unit_circle_is_not_affine() {
    for p in [3, 5] {
        let t = unit_circle_triple(p).unwrap();
        let d = t.dense_image_check(1, 6).unwrap();
        assert!(!d.dense);
        assert_eq!(d.witness.as_deref(), Some("xb mod p on c"));
        assert!(matches!(t.classify(1, 6).unwrap(), Classification::NotAffine { .. }));
    }
    match unit_disk_triple(5).unwrap().classify(4, 3).unwrap() {
        Classification::Affine(r) => {
            assert_eq!(r.generators.len(), 1);
            assert!(r.relations.generators().is_empty());
        }
        c => panic!("{c:?}"),
    }
}

#[test]
fn low_degree_bound_is_inconclusive() {
    let t = two_disks_triple(5).unwrap();
    assert!(matches!(t.dense_image_check(2, 1), Err(GlueError::DegreeBoundInconclusive(_))));
    assert!(matches!(t.classify(2, 1).unwrap(), Classification::Inconclusive(_)));
    assert!(matches!(t.generator_search(1, 4), Err(GlueError::SearchExhausted { bound: 1, .. })));
}

#[test]
fn jstar_must_respect_relations() {
    let b = BasePair::arithmetic(5).unwrap();
    let a = AffineAlgebra::new(PolyRing::new(b.clone(), Regime::OverRInvPi, &["x"]), vec![&x() * &x()]).unwrap();
    let disk = TruncatedAlgebra::new("disk", b, 4, vec![Factor::new("d", &["u"], vec![])]);
    let err = AffineGluingTriple::new("bad", a, Arc::new(disk), vec![vec![Poly::var(1, 0)]], vec![]).unwrap_err();
    assert!(matches!(err, GlueError::IncompatibleDatum(_)));
}

#[test]
fn torsion_factor_contributes_a_generator() {
    // B = Z_p<x, e>/(p e, e^2, x e): e spans B[p^inf] and maps to zero in A
    let b = BasePair::arithmetic(5).unwrap();
    let a = AffineAlgebra::new(PolyRing::new(b.clone(), Regime::OverRInvPi, &["x"]), vec![]).unwrap();
    let xv = Poly::var(2, 0);
    let e = Poly::var(2, 1);
    let rels = vec![e.scale(&q(5)), &e * &e, &xv * &e];
    let fac = TruncatedAlgebra::new("tors", b, 4, vec![Factor::new("d", &["x", "e"], rels)]);
    let t = AffineGluingTriple::new("tors", a, Arc::new(fac), vec![vec![xv.clone()]], vec![]).unwrap();
    assert!(t.has_torsion());
    let r = t.glue_ring(4, 3).unwrap();
    let tors: Vec<&DElement> = r.generators.iter().filter(|g| g.is_torsion()).collect();
    assert_eq!(tors.len(), 1);
    assert_eq!(tors[0].b[0], e);
}

#[test]
fn split_triple_returns_a() {
    let b = BasePair::arithmetic(5).unwrap();
    let a = AffineAlgebra::new(PolyRing::new(b.clone(), Regime::OverRInvPi, &["x"]), vec![]).unwrap();
    let empty = TruncatedAlgebra::new("zero", b, 4, vec![]);
    let t = AffineGluingTriple::new("split", a, Arc::new(empty), vec![], vec![]).unwrap();
    let r = t.glue_ring(4, 3).unwrap();
    assert_eq!(r.relations.generators().len(), 1);
    assert_eq!(r.generators.last().unwrap().a, Poly::constant(1, q_frac(1, 5)));
}

#[test]
fn global_sections() {
    let b = BasePair::arithmetic(5).unwrap();
    let zx = AffineAlgebra::new(PolyRing::new(b.clone(), Regime::OverR, &["x"]), vec![]).unwrap();
    let r = reconstruct_global_sections(&zx, 4, 6).unwrap();
    assert_eq!(r.result.generators.len(), 1);

    let tors = AffineAlgebra::new(PolyRing::new(b.clone(), Regime::OverR, &["x"]), vec![x().scale(&q(5))]).unwrap();
    let r = reconstruct_global_sections(&tors, 4, 6).unwrap();
    assert_eq!(r.result.generators.len(), 1);
    assert!(r.result.generators[0].is_torsion());
    assert_eq!(r.result.relations.generators(), &[Poly::var(1, 0).scale(&q(5))]);

    let xv = Poly::var(2, 0);
    let yv = Poly::var(2, 1);
    let node_rel = &(&xv * &yv) - &Poly::constant(2, q(5));
    let node = AffineAlgebra::new(PolyRing::new(b, Regime::OverR, &["x", "y"]), vec![node_rel.clone()]).unwrap();
    let r = reconstruct_global_sections(&node, 4, 6).unwrap();
    let t = gluekit::triple::triple_of_algebra(&node, 4).unwrap();
    assert_eq!(t.membership(&xv).unwrap(), Membership::Member);
    assert_eq!(t.membership(&yv).unwrap(), Membership::Member);
    assert_eq!(t.membership(&xv.scale(&q_frac(1, 5))).unwrap() == Membership::Member, false);
    assert!(t.a.is_zero(&node_rel).unwrap());
    assert!(r.result.relations.contains(&node_rel).unwrap());
}

fn arb_poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((-12i64..12, 0u32..3), 1..5).prop_map(|cs| {
        Poly::from_terms(1, cs.into_iter().enumerate().map(|(k, (c, e))| (vec![k as u32], q_frac(c, 5i64.pow(e)))))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn membership_matches_substitution(f in arb_poly()) {
        let t = two_disks_triple(5).unwrap();
        let m = t.membership(&f).unwrap();
        prop_assert_eq!(m == Membership::Member, in_two_disks(&f, 5));
        if let Membership::NonMember { valuation, .. } = m {
            prop_assert!(valuation < 0);
        }
    }

    #[test]
    fn members_form_a_subring(f in arb_poly(), g in arb_poly()) {
        let t = two_disks_triple(5).unwrap();
        let scale = |h: &Poly| {
            // push h into D by multiplying with a power of p
            let mut h = h.clone();
            while t.membership(&h).unwrap() != Membership::Member {
                h = h.scale(&q(5));
            }
            h
        };
        let (f, g) = (scale(&f), scale(&g));
        prop_assert_eq!(t.membership(&(&f + &g)).unwrap(), Membership::Member);
        prop_assert_eq!(t.membership(&(&f * &g)).unwrap(), Membership::Member);
    }
}
