//! Elements of completed algebras known modulo `pi^N`.
//!
//! Propagation is conservative: the precision of a sum or product is the
//! minimum of the input precisions, and no precision is ever gained from
//! valuations. Higher precision is obtained only by re-evaluating an exact
//! source expression ([`refine`]).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::arith::{self, Q};
use crate::base::BasePair;
use crate::error::{GlueError, Result};
use crate::gb::{Coeffs, Engine};
use crate::ideal::{AffineAlgebra, IdealPresentation, PolyRing, Regime};
use crate::poly::{MonomialOrder, Poly};

/// One direct factor: a restricted power series algebra modulo polynomial relations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub name: String,
    pub vars: Vec<String>,
    /// Exact lifts of the relations, with coefficients in `R`.
    pub relations: Vec<Poly>,
}

impl Factor {
    pub fn new(name: &str, vars: &[&str], relations: Vec<Poly>) -> Self {
        Factor { name: name.into(), vars: vars.iter().map(|s| s.to_string()).collect(), relations }
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }
}

/// `B / pi^N` for `B` a finite product of factors in standard form.
#[derive(Debug)]
pub struct TruncatedAlgebra {
    pub name: String,
    pub base: BasePair,
    pub prec: u32,
    pub factors: Vec<Factor>,
    levels: Mutex<BTreeMap<u32, Arc<Vec<AffineAlgebra>>>>,
}

impl Clone for TruncatedAlgebra {
    fn clone(&self) -> Self {
        TruncatedAlgebra::new(&self.name, self.base.clone(), self.prec, self.factors.clone())
    }
}

impl PartialEq for TruncatedAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.base == other.base && self.factors == other.factors
    }
}

impl TruncatedAlgebra {
    pub fn new(name: &str, base: BasePair, prec: u32, factors: Vec<Factor>) -> Self {
        TruncatedAlgebra { name: name.into(), base, prec, factors, levels: Mutex::new(BTreeMap::new()) }
    }

    pub fn component_count(&self) -> usize {
        self.factors.len()
    }

    /// The factor presentations over `R / pi^n`, memoized per level.
    pub fn level(&self, n: u32) -> Result<Arc<Vec<AffineAlgebra>>> {
        if let Some(l) = self.levels.lock().expect("level cache poisoned").get(&n) {
            return Ok(l.clone());
        }
        let mut out = Vec::new();
        for f in &self.factors {
            let ring = PolyRing::from_names(self.base.clone(), Regime::OverRModPiN(n), f.vars.clone());
            let alg = AffineAlgebra::new(ring, f.relations.clone())?;
            alg.relations.groebner()?;
            out.push(alg);
        }
        let out = Arc::new(out);
        self.levels.lock().expect("level cache poisoned").entry(n).or_insert(out.clone());
        Ok(out)
    }

    /// The same standard-form algebra at another working precision.
    pub fn at_precision(&self, n: u32) -> TruncatedAlgebra {
        TruncatedAlgebra::new(&self.name, self.base.clone(), n, self.factors.clone())
    }

    pub fn factor_index_of_var(&self, var: &str) -> Option<(usize, usize)> {
        self.factors.iter().enumerate().find_map(|(i, f)| f.vars.iter().position(|v| v == var).map(|j| (i, j)))
    }
}

impl fmt::Display for TruncatedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "algebra {} over {} prec {} {{", self.name, self.base, self.prec)?;
        for fac in &self.factors {
            let rels: Vec<String> = fac.relations.iter().map(|r| r.display(&fac.vars)).collect();
            write!(f, " factor {}: vars {}; rels {};", fac.name, fac.vars.join(", "), rels.join(", "))?;
        }
        write!(f, " }}")
    }
}

/// An exact expression over `R` in the variables of a truncated algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Q),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }

    pub fn constant(c: Q) -> Expr {
        Expr::Const(c)
    }

    /// Evaluates to exact per-factor polynomials over `R`.
    pub fn eval(&self, alg: &TruncatedAlgebra) -> Result<Vec<Poly>> {
        match self {
            Expr::Const(c) => {
                if !arith::is_integral(c, &alg.base.p) {
                    return Err(GlueError::RegimeMismatch(format!("constant {c} is not in R")));
                }
                Ok(alg.factors.iter().map(|f| Poly::constant(f.nvars(), c.clone())).collect())
            }
            Expr::Var(name) => {
                let (fi, vi) = alg
                    .factor_index_of_var(name)
                    .ok_or_else(|| GlueError::AlgebraMismatch(format!("unknown variable {name}")))?;
                Ok(alg
                    .factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| if i == fi { Poly::var(f.nvars(), vi) } else { Poly::zero(f.nvars()) })
                    .collect())
            }
            Expr::Add(a, b) => Ok(a.eval(alg)?.iter().zip(b.eval(alg)?.iter()).map(|(x, y)| x + y).collect()),
            Expr::Mul(a, b) => Ok(a.eval(alg)?.iter().zip(b.eval(alg)?.iter()).map(|(x, y)| x * y).collect()),
            Expr::Neg(a) => Ok(a.eval(alg)?.iter().map(|x| -x).collect()),
        }
    }
}

/// An element of `B` asserted only modulo `pi^precision`.
#[derive(Clone, Debug)]
pub struct PrecisionElement {
    pub algebra: Arc<TruncatedAlgebra>,
    /// One normal form per factor.
    pub value: Vec<Poly>,
    pub precision: u32,
    pub source: Option<Expr>,
}

impl PrecisionElement {
    /// Builds an element from exact per-factor values, reduced at `precision`.
    pub fn from_values(algebra: &Arc<TruncatedAlgebra>, values: Vec<Poly>, precision: u32) -> Result<Self> {
        let value = reduce_values(algebra, &values, precision)?;
        Ok(PrecisionElement { algebra: algebra.clone(), value, precision, source: None })
    }

    /// Builds an element from an exact expression; it can later be refined.
    pub fn from_expr(algebra: &Arc<TruncatedAlgebra>, expr: Expr, precision: u32) -> Result<Self> {
        let values = expr.eval(algebra)?;
        let mut e = PrecisionElement::from_values(algebra, values, precision)?;
        e.source = Some(expr);
        Ok(e)
    }

    pub fn is_zero(&self) -> bool {
        self.value.iter().all(|v| v.is_zero())
    }

    /// Equality at precision `m`; `false` if `m` exceeds either precision.
    pub fn equal_at(&self, other: &PrecisionElement, m: u32) -> Result<bool> {
        check_same(self, other)?;
        if m > self.precision || m > other.precision {
            return Ok(false);
        }
        let diff: Vec<Poly> = self.value.iter().zip(&other.value).map(|(a, b)| a - b).collect();
        Ok(reduce_values(&self.algebra, &diff, m)?.iter().all(|v| v.is_zero()))
    }

    /// The element reduced to a lower precision.
    pub fn truncate(&self, m: u32) -> Result<PrecisionElement> {
        let m = m.min(self.precision);
        Ok(PrecisionElement {
            algebra: self.algebra.clone(),
            value: reduce_values(&self.algebra, &self.value, m)?,
            precision: m,
            source: self.source.clone(),
        })
    }

    pub fn display(&self) -> String {
        let parts: Vec<String> =
            self.value.iter().zip(&self.algebra.factors).map(|(v, f)| v.display(&f.vars)).collect();
        format!("({}) mod pi^{}", parts.join(" | "), self.precision)
    }
}

fn reduce_values(alg: &TruncatedAlgebra, values: &[Poly], n: u32) -> Result<Vec<Poly>> {
    if values.len() != alg.factors.len() {
        return Err(GlueError::AlgebraMismatch("factor count mismatch".into()));
    }
    let level = alg.level(n)?;
    values.iter().zip(level.iter()).map(|(v, a)| a.reduce(v)).collect()
}

fn check_same(a: &PrecisionElement, b: &PrecisionElement) -> Result<()> {
    if !Arc::ptr_eq(&a.algebra, &b.algebra) && *a.algebra != *b.algebra {
        return Err(GlueError::AlgebraMismatch(format!("{} vs {}", a.algebra.name, b.algebra.name)));
    }
    Ok(())
}

fn combine_sources(a: &PrecisionElement, b: &PrecisionElement, f: impl Fn(Box<Expr>, Box<Expr>) -> Expr) -> Option<Expr> {
    match (&a.source, &b.source) {
        (Some(x), Some(y)) => Some(f(Box::new(x.clone()), Box::new(y.clone()))),
        _ => None,
    }
}

pub fn prec_add(a: &PrecisionElement, b: &PrecisionElement) -> Result<PrecisionElement> {
    check_same(a, b)?;
    let n = a.precision.min(b.precision);
    let sum: Vec<Poly> = a.value.iter().zip(&b.value).map(|(x, y)| x + y).collect();
    Ok(PrecisionElement {
        algebra: a.algebra.clone(),
        value: reduce_values(&a.algebra, &sum, n)?,
        precision: n,
        source: combine_sources(a, b, Expr::Add),
    })
}

pub fn prec_neg(a: &PrecisionElement) -> Result<PrecisionElement> {
    let neg: Vec<Poly> = a.value.iter().map(|x| -x).collect();
    Ok(PrecisionElement {
        algebra: a.algebra.clone(),
        value: reduce_values(&a.algebra, &neg, a.precision)?,
        precision: a.precision,
        source: a.source.clone().map(|s| Expr::Neg(Box::new(s))),
    })
}

/// Product with the min-precision rule. A factor of high valuation would
/// justify a larger output precision; that gain is deliberately not taken.
pub fn prec_mul(a: &PrecisionElement, b: &PrecisionElement) -> Result<PrecisionElement> {
    check_same(a, b)?;
    let n = a.precision.min(b.precision);
    let prod: Vec<Poly> = a.value.iter().zip(&b.value).map(|(x, y)| x * y).collect();
    Ok(PrecisionElement {
        algebra: a.algebra.clone(),
        value: reduce_values(&a.algebra, &prod, n)?,
        precision: n,
        source: combine_sources(a, b, Expr::Mul),
    })
}

/// Inverse by Newton-Hensel lifting from an inverse modulo `pi`.
pub fn prec_invert(a: &PrecisionElement) -> Result<PrecisionElement> {
    let alg = &a.algebra;
    let n = a.precision;
    if n == 0 {
        return Ok(a.clone());
    }
    let mut inv = Vec::new();
    for (i, fac) in alg.factors.iter().enumerate() {
        let mut b = residue_inverse(alg, i, &a.value[i])
            .ok_or_else(|| GlueError::NotAUnit(format!("{} on factor {}", a.display(), fac.name)))?;
        let mut k = 1;
        let level_n = alg.level(n)?;
        let two = Poly::constant(fac.nvars(), arith::q(2));
        while k < n {
            k = (2 * k).min(n);
            let level = alg.level(k)?;
            let ab = level[i].reduce(&(&a.value[i] * &b))?;
            b = level[i].reduce(&(&b * &(&two - &ab)))?;
        }
        let check = level_n[i].reduce(&(&a.value[i] * &b))?;
        debug_assert!(level_n[i].equal(&check, &Poly::one(fac.nvars()))?);
        inv.push(level_n[i].reduce(&b)?);
    }
    Ok(PrecisionElement { algebra: alg.clone(), value: inv, precision: n, source: None })
}

/// An inverse modulo `pi` in factor `i`, via the normal form of `z` modulo `(J, p, a*z - 1)`.
fn residue_inverse(alg: &TruncatedAlgebra, i: usize, a: &Poly) -> Option<Poly> {
    let fac = &alg.factors[i];
    let m = fac.nvars();
    let n = m + 1;
    let p = &alg.base.p;
    let engine = Engine::new(Coeffs::Dvr(p.clone()), MonomialOrder::Elim(1), n);
    let shift: Vec<usize> = (1..n).collect();
    let z = Poly::var(n, 0);
    let mut gens: Vec<Poly> = fac.relations.iter().map(|r| r.embed(n, &shift)).collect();
    gens.push(Poly::constant(n, arith::int(p)));
    gens.push(&(&z * &a.embed(n, &shift)) - &Poly::one(n));
    let vs: Vec<_> = gens.iter().map(|g| engine.from_poly(g, 0)).collect();
    let basis = engine.groebner(&vs);
    if engine.is_zero_mod(engine.unit(), &basis) {
        return None;
    }
    let nf = engine.to_poly(&engine.reduce(engine.from_poly(&z, 0), &basis));
    let keep: Vec<Option<usize>> = (0..n).map(|k| if k == 0 { None } else { Some(k - 1) }).collect();
    let b = nf.restrict(m, &keep)?;
    // confirm a*b = 1 mod (J, p)
    let check = &(&a.embed(n, &shift) * &b.embed(n, &shift)) - &Poly::one(n);
    if engine.is_zero_mod(engine.from_poly(&check, 0), &basis) {
        Some(b)
    } else {
        None
    }
}

/// Re-evaluates the element's exact source at a strictly larger precision.
pub fn refine(a: &PrecisionElement, new_prec: u32) -> Result<PrecisionElement> {
    let src = a.source.clone().ok_or(GlueError::NoExactSource)?;
    refine_with(a, &src, new_prec)
}

/// Like [`refine`] with an explicitly supplied source, which must reproduce `a`.
pub fn refine_with(a: &PrecisionElement, source: &Expr, new_prec: u32) -> Result<PrecisionElement> {
    if new_prec <= a.precision {
        return Err(GlueError::Invalid(format!("refinement must raise precision above {}", a.precision)));
    }
    let out = PrecisionElement::from_expr(&a.algebra, source.clone(), new_prec)?;
    if !out.equal_at(a, a.precision)? {
        return Err(GlueError::AlgebraMismatch("source does not reproduce the element".into()));
    }
    Ok(out)
}

/// Convenience for ideals over a truncated level.
pub fn level_ideal(alg: &TruncatedAlgebra, factor: usize, n: u32) -> Result<IdealPresentation> {
    Ok(alg.level(n)?[factor].relations.clone())
}

pub fn is_one(e: &PrecisionElement) -> Result<bool> {
    let one: Vec<Poly> = e.algebra.factors.iter().map(|f| Poly::one(f.nvars())).collect();
    let one = PrecisionElement::from_values(&e.algebra, one, e.precision)?;
    e.equal_at(&one, e.precision)
}

pub fn constant(alg: &Arc<TruncatedAlgebra>, c: Q, precision: u32) -> Result<PrecisionElement> {
    PrecisionElement::from_expr(alg, Expr::Const(c), precision)
}

pub fn zero(alg: &Arc<TruncatedAlgebra>, precision: u32) -> Result<PrecisionElement> {
    constant(alg, Q::zero(), precision)
}

pub fn one(alg: &Arc<TruncatedAlgebra>, precision: u32) -> Result<PrecisionElement> {
    constant(alg, Q::one(), precision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn disk(p: u64) -> Arc<TruncatedAlgebra> {
        let base = BasePair::arithmetic(p).unwrap();
        Arc::new(TruncatedAlgebra::new("B", base, 8, vec![Factor::new("d", &["x", "y"], vec![])]))
    }

    fn circle(p: u64) -> Arc<TruncatedAlgebra> {
        let base = BasePair::arithmetic(p).unwrap();
        let x = Poly::var(2, 0);
        let xb = Poly::var(2, 1);
        Arc::new(TruncatedAlgebra::new("C", base, 8, vec![Factor::new("c", &["x", "xb"], vec![&(&x * &xb) - &Poly::one(2)])]))
    }

    fn el(alg: &Arc<TruncatedAlgebra>, e: Expr, n: u32) -> PrecisionElement {
        PrecisionElement::from_expr(alg, e, n).unwrap()
    }

    fn c(v: i64) -> Expr {
        Expr::Const(q(v))
    }

    fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    #[test]
    fn min_rule_addition() {
        let b = disk(5);
        let x = el(&b, Expr::var("x"), 3);
        let y = el(&b, Expr::var("y"), 2);
        let s = prec_add(&x, &y).unwrap();
        assert_eq!(s.precision, 2);
        assert_eq!(s.value[0], &Poly::var(2, 0) + &Poly::var(2, 1));
        let z = prec_add(&x, &el(&b, c(0), 3)).unwrap();
        assert!(z.equal_at(&x, 3).unwrap());
        let a = el(&b, mul(c(25), Expr::var("x")), 3);
        let na = el(&b, mul(c(-25), Expr::var("x")), 3);
        assert!(prec_add(&a, &na).unwrap().is_zero());
    }

    #[test]
    fn min_rule_multiplication() {
        let b = disk(5);
        let px = el(&b, mul(c(5), Expr::var("x")), 3);
        let p = el(&b, c(5), 3);
        let prod = prec_mul(&px, &p).unwrap();
        assert_eq!(prod.value[0], Poly::var(2, 0).scale(&q(25)));
        let x2 = el(&b, Expr::var("x"), 2);
        assert_eq!(prec_mul(&x2, &el(&b, c(1), 4)).unwrap().precision, 2);
        assert!(prec_mul(&x2, &el(&b, c(0), 2)).unwrap().is_zero());
    }

    #[test]
    fn inversion() {
        let b = disk(5);
        let one = el(&b, c(1), 4);
        assert!(is_one(&prec_invert(&one).unwrap()).unwrap());
        // (1+p)^-1 = 1 - p + p^2 mod p^3
        let u = el(&b, c(6), 3);
        let inv = prec_invert(&u).unwrap();
        assert_eq!(inv.value[0], Poly::constant(2, q(1 - 5 + 25)));
        assert!(matches!(prec_invert(&el(&b, c(5), 3)), Err(GlueError::NotAUnit(_))));
        let cb = circle(5);
        let x = el(&cb, Expr::var("x"), 2);
        let xi = prec_invert(&x).unwrap();
        assert_eq!(xi.value[0], Poly::var(2, 1));
    }

    #[test]
    fn refinement() {
        let b = disk(5);
        let x = el(&b, Expr::var("x"), 2);
        let r = refine(&x, 5).unwrap();
        assert_eq!(r.precision, 5);
        assert_eq!(r.value[0], Poly::var(2, 0));
        let approx = PrecisionElement::from_values(&b, vec![Poly::var(2, 0)], 2).unwrap();
        assert_eq!(refine(&approx, 4).unwrap_err(), GlueError::NoExactSource);
        let src = mul(c(125), Expr::var("x"));
        let small = el(&b, src.clone(), 2);
        assert!(small.is_zero());
        let big = refine_with(&small, &src, 4).unwrap();
        assert_eq!(big.value[0], Poly::var(2, 0).scale(&q(125)));
    }

    #[test]
    fn algebra_mismatch() {
        let a = el(&disk(5), c(1), 2);
        let b = el(&circle(5), c(1), 2);
        assert!(matches!(prec_add(&a, &b), Err(GlueError::AlgebraMismatch(_))));
    }
}
