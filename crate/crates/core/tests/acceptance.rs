//! End-to-end acceptance gate: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gluekit::arith::{q, q_frac};
use gluekit::completion::{torsion_split, CompletionModel};
use gluekit::models::{neron_gm_triple, neron_iso_test, two_disks_generators, two_disks_triple, unit_circle_triple};
use gluekit::module::{check_iso, random_module, round_trip, round_trip_batch, ModulePresentation};
use gluekit::triple::{reconstruct_global_sections, AffineGluingTriple, Classification, DElement, GluedRingResult};
use gluekit::{AffineAlgebra, BasePair, Poly, PolyRing, Regime};
use num_bigint::BigInt;

type Check = Box<dyn Fn() -> Result<(), String>>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn seed() -> u64 {
    std::env::var("GLUEKIT_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

fn d_elements(t: &AffineGluingTriple, fs: &[Poly]) -> Result<Vec<DElement>, String> {
    fs.iter()
        .map(|f| t.d_element(f, "reference").map_err(|e| e.to_string())?.ok_or_else(|| "reference generator not in D".into()))
        .collect()
}

fn two_disks(p: u64) -> Result<(), String> {
    let t = two_disks_triple(p).map_err(|e| e.to_string())?;
    let r = t.glue_ring(8, 6).map_err(|e| e.to_string())?;
    let reference = d_elements(&t, &two_disks_generators(p))?;
    for d in 1..=6 {
        let ours = t.s_lattice(&r.generators, d, 2 * d).map_err(|e| e.to_string())?;
        let theirs = t.s_lattice(&reference, d, 2 * d).map_err(|e| e.to_string())?;
        ensure(ours.same(&theirs), || format!("p = {p}: subalgebras differ in degree {d}"))?;
    }
    let mut exprs = vec![];
    for f in two_disks_generators(p) {
        exprs.push(t.express(&r.generators, &f, 12).map_err(|e| e.to_string())?.ok_or("not expressible")?);
    }
    let (alpha, beta, gamma) = (&exprs[0], &exprs[1], &exprs[2]);
    let n = r.generators.len();
    let pc = Poly::constant(n, q(p as i64));
    let om = &Poly::one(n) - gamma;
    let rels = [
        &(&pc * alpha) - &(gamma * &om.pow(2)),
        &(&pc * beta) - &(&gamma.pow(2) * &om),
        &(gamma * alpha) - &(&om * beta),
    ];
    for rel in &rels {
        ensure(r.relations.contains(rel).map_err(|e| e.to_string())?, || {
            format!("p = {p}: {} not in the relation ideal", rel.display(&r.names()))
        })?;
    }
    Ok(())
}

fn criterion_1() -> Result<(), String> {
    for p in [2, 3, 5, 7] {
        let start = Instant::now();
        two_disks(p)?;
        ensure(start.elapsed() < Duration::from_secs(30), || format!("p = {p} took {:?}", start.elapsed()))?;
    }
    Ok(())
}

fn criterion_2() -> Result<(), String> {
    let t = two_disks_triple(5).map_err(|e| e.to_string())?;
    for n in 1..=4 {
        let r = t.glue_ring(n, 6).map_err(|e| format!("N = {n}: {e}"))?;
        t.verify_glued(&r).map_err(|e| format!("N = {n}: {e}"))?;
    }
    Ok(())
}

fn criterion_3() -> Result<(), String> {
    for p in [3, 5] {
        let t = unit_circle_triple(p).map_err(|e| e.to_string())?;
        match t.classify(1, 6).map_err(|e| e.to_string())? {
            Classification::NotAffine { tag, witness } => {
                ensure(tag == "dense-image", || format!("p = {p}: tag {tag}"))?;
                ensure(witness.starts_with("xb mod p"), || format!("p = {p}: witness {witness}"))?;
            }
            c => return Err(format!("p = {p}: {c:?}")),
        }
    }
    Ok(())
}

fn criterion_4() -> Result<(), String> {
    let base = BasePair::arithmetic(5).map_err(|e| e.to_string())?;
    let s = seed();
    let mods: Vec<ModulePresentation> = (0..200u64)
        .map(|k| random_module(&base, s.wrapping_add(k), k % 2 == 1))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for (k, (m, res)) in mods.iter().zip(round_trip_batch(&mods)).enumerate() {
        let (g, cert) = res.map_err(|e| format!("module {k}: {e}"))?;
        ensure(check_iso(m, &g.module, &cert).map_err(|e| e.to_string())?, || {
            format!("module {k} (seed {}): certificate rejected", s.wrapping_add(k as u64))
        })?;
    }
    Ok(())
}

fn torsion_fixture(base: &BasePair, k: u32) -> Result<AffineAlgebra, String> {
    let ring = PolyRing::new(base.clone(), Regime::OverR, &["y"]);
    let rels = if k == 0 { vec![] } else { vec![Poly::var(1, 0).scale(&q(5i64.pow(k)))] };
    AffineAlgebra::new(ring, rels).map_err(|e| e.to_string())
}

fn criterion_5() -> Result<(), String> {
    let base = BasePair::arithmetic(5).map_err(|e| e.to_string())?;
    for n0 in 0..=2 {
        let model = CompletionModel::new(torsion_fixture(&base, n0)?).map_err(|e| e.to_string())?;
        let prec = 2 * n0 + 4;
        let s = torsion_split(&model, prec).map_err(|e| e.to_string())?;
        ensure(s.n0 == n0, || format!("expected N0 = {n0}, got {}", s.n0))?;
        ensure(s.verified_levels == (1..=prec).collect::<Vec<_>>(), || format!("levels {:?}", s.verified_levels))?;
    }
    Ok(())
}

fn criterion_6() -> Result<(), String> {
    let base = BasePair::arithmetic(5).map_err(|e| e.to_string())?;
    let x = Poly::var(1, 0);
    let (x2, y2) = (Poly::var(2, 0), Poly::var(2, 1));
    let algebras = [
        AffineAlgebra::new(PolyRing::new(base.clone(), Regime::OverR, &["x"]), vec![]),
        AffineAlgebra::new(PolyRing::new(base.clone(), Regime::OverR, &["x", "y"]), vec![&(&x2 * &y2) - &Poly::constant(2, q(5))]),
        AffineAlgebra::new(PolyRing::new(base, Regime::OverR, &["x"]), vec![x.scale(&q(5))]),
    ];
    for a in algebras {
        let a = a.map_err(|e| e.to_string())?;
        let r = reconstruct_global_sections(&a, 4, 6).map_err(|e| e.to_string())?;
        ensure(!r.checks.is_empty(), || "no checks recorded".into())?;
    }
    Ok(())
}

fn criterion_7() -> Result<(), String> {
    // (a/b, c/d, expected): equal valuations iff a*d == b*c
    let table: [(i64, i64, i64, i64, bool); 20] = [
        (1, 1, 1, 1, true),
        (1, 1, 1, 2, false),
        (1, 2, 1, 2, true),
        (1, 2, 2, 4, true),
        (2, 1, 1, 2, false),
        (3, 1, 3, 1, true),
        (3, 1, 6, 2, true),
        (1, 3, 2, 6, true),
        (1, 3, 1, 2, false),
        (2, 3, 4, 6, true),
        (2, 3, 3, 2, false),
        (5, 1, 10, 2, true),
        (5, 1, 5, 2, false),
        (1, 4, 1, 4, true),
        (1, 4, 2, 4, false),
        (7, 3, 14, 6, true),
        (7, 3, 7, 4, false),
        (1, 6, 1, 5, false),
        (4, 1, 8, 2, true),
        (9, 4, 2, 1, false),
    ];
    for (a, b, c, d, expected) in table {
        ensure((a * d == b * c) == expected, || format!("table row {a}/{b} vs {c}/{d} is inconsistent"))?;
        let t1 = neron_gm_triple(q_frac(a, b)).map_err(|e| e.to_string())?;
        let t2 = neron_gm_triple(q_frac(c, d)).map_err(|e| e.to_string())?;
        ensure(neron_iso_test(&t1, &t2) == expected, || format!("{a}/{b} vs {c}/{d}"))?;
    }
    Ok(())
}

fn reduced(fs: &[Poly], p: &BigInt) -> Vec<Poly> {
    fs.iter().map(|f| f.reduce_mod(p, 8)).collect()
}

fn ring_values(r: &GluedRingResult, p: &BigInt) -> Vec<Vec<Poly>> {
    let mut out: Vec<Vec<Poly>> = r.generators.iter().map(|g| reduced(&[vec![g.a.clone()], g.b.clone()].concat(), p)).collect();
    out.push(reduced(r.relations.generators(), p));
    out
}

fn module_values(m: &ModulePresentation, p: &BigInt) -> Vec<Vec<Poly>> {
    m.relations.iter().map(|c| reduced(c, p)).collect()
}

/// Everything the fixture pipelines report, reduced mod `p^8`.
fn pipeline_values(prec: u32) -> Result<Vec<String>, String> {
    let p = BigInt::from(5);
    let mut out = vec![];
    let t = two_disks_triple(5).map_err(|e| e.to_string())?;
    let r = t.glue_ring(prec, 6).map_err(|e| e.to_string())?;
    out.push(format!("{:?}", ring_values(&r, &p)));
    let c = unit_circle_triple(5).map_err(|e| e.to_string())?.classify(prec, 6).map_err(|e| e.to_string())?;
    match c {
        Classification::NotAffine { tag, witness } => out.push(format!("{tag} {witness}")),
        other => return Err(format!("unit circle at prec {prec}: {other:?}")),
    }
    let base = BasePair::arithmetic(5).map_err(|e| e.to_string())?;
    for n0 in 0..=2 {
        let model = CompletionModel::new(torsion_fixture(&base, n0)?).map_err(|e| e.to_string())?;
        let s = torsion_split(&model, prec).map_err(|e| e.to_string())?;
        let ideals = [&s.torsionfree, &s.truncated, &s.overlap].map(|a| reduced(a.relations.generators(), &p));
        out.push(format!("{} {:?}", s.n0, ideals));
    }
    let s = seed();
    for k in 0..20u64 {
        let m = random_module(&base, s.wrapping_add(k), k % 2 == 1).map_err(|e| e.to_string())?;
        let (g, _) = round_trip(&m, prec).map_err(|e| e.to_string())?;
        out.push(format!("{:?}", module_values(&g.module, &p)));
    }
    Ok(out)
}

fn criterion_8() -> Result<(), String> {
    let start = Instant::now();
    let base = pipeline_values(8)?;
    let baseline = start.elapsed();
    let start = Instant::now();
    let high = pipeline_values(12)?;
    let rerun = start.elapsed();
    for (k, (a, b)) in base.iter().zip(&high).enumerate() {
        ensure(a == b, || format!("value {k} differs mod p^8:\n  {a}\n  {b}"))?;
    }
    ensure(rerun < baseline * 2, || format!("rerun {rerun:?} vs baseline {baseline:?}"))
}

/// Written to the raw stderr handle so the table shows without `--nocapture`.
fn report(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("1 two-disks presentation", Duration::from_secs(120), Box::new(criterion_1)),
        ("2 verification for N <= 4", Duration::from_secs(10), Box::new(criterion_2)),
        ("3 non-affine detection", Duration::from_secs(1), Box::new(criterion_3)),
        ("4 module round trips", Duration::from_secs(120), Box::new(criterion_4)),
        ("5 torsion split", Duration::from_secs(5), Box::new(criterion_5)),
        ("6 global sections", Duration::from_secs(30), Box::new(criterion_6)),
        ("7 Neron criterion", Duration::from_secs(1), Box::new(criterion_7)),
        ("8 precision stability", Duration::from_secs(600), Box::new(criterion_8)),
    ];
    let mut failures = vec![];
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let res = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(_) => Err("panicked".into()),
        };
        let took = start.elapsed();
        let res = res.and_then(|_| ensure(took < *budget, || format!("over budget {budget:?}")));
        match res {
            Ok(()) => report(&format!("PASS criterion {name} ({took:.2?})")),
            Err(e) => {
                report(&format!("FAIL criterion {name} ({took:.2?}): {e}"));
                failures.push(*name);
            }
        }
    }
    assert!(failures.is_empty(), "failed: {failures:?}");
}
