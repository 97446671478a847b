//! Ideals with cached Gröbner bases, finite-type algebras, and the
//! pi-adic operations on them (saturation, Gauss valuation).

use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;

use crate::arith;
use crate::base::{BasePair, Profile};
use crate::error::{GlueError, Result};
use crate::gb::{Coeffs, Engine, Vector};
use crate::poly::{mono_degree, MonomialOrder, Poly};

/// Which coefficient ring the polynomials live over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    OverR,
    OverRInvPi,
    OverRModPiN(u32),
}

impl Regime {
    pub fn tag(&self) -> String {
        match self {
            Regime::OverR => "over_R".into(),
            Regime::OverRInvPi => "over_R_inv_pi".into(),
            Regime::OverRModPiN(n) => format!("over_R_mod_pi^{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyRing {
    pub base: BasePair,
    pub regime: Regime,
    pub vars: Vec<String>,
}

impl PolyRing {
    pub fn new(base: BasePair, regime: Regime, vars: &[&str]) -> Arc<Self> {
        Arc::new(PolyRing { base, regime, vars: vars.iter().map(|s| s.to_string()).collect() })
    }

    pub fn from_names(base: BasePair, regime: Regime, vars: Vec<String>) -> Arc<Self> {
        Arc::new(PolyRing { base, regime, vars })
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn with_regime(&self, regime: Regime) -> Arc<Self> {
        Arc::new(PolyRing { base: self.base.clone(), regime, vars: self.vars.clone() })
    }

    pub fn var(&self, name: &str) -> Option<Poly> {
        self.vars.iter().position(|v| v == name).map(|i| Poly::var(self.nvars(), i))
    }

    fn pi_var(&self) -> Option<usize> {
        self.vars.iter().position(|v| v == "t")
    }

    /// The element `pi` of the ring.
    pub fn pi(&self) -> Result<Poly> {
        match self.base.profile {
            Profile::Arithmetic => Ok(Poly::constant(self.nvars(), arith::int(&self.base.p))),
            Profile::Geometric => self
                .pi_var()
                .map(|i| Poly::var(self.nvars(), i))
                .ok_or_else(|| GlueError::RegimeMismatch("geometric profile needs a variable named t".into())),
        }
    }

    /// The engine and the extra generators (`pi^N`) realizing this regime.
    pub fn engine(&self, order: MonomialOrder) -> Result<(Engine, Vec<Poly>)> {
        let n = self.nvars();
        match (self.base.profile, self.regime) {
            (Profile::Arithmetic, Regime::OverR) => Ok((Engine::new(Coeffs::Dvr(self.base.p.clone()), order, n), vec![])),
            (Profile::Arithmetic, Regime::OverRInvPi) => Ok((Engine::new(Coeffs::Field, order, n), vec![])),
            (Profile::Arithmetic, Regime::OverRModPiN(k)) => Ok((
                Engine::new(Coeffs::Dvr(self.base.p.clone()), order, n),
                vec![Poly::constant(n, arith::int(&arith::pow(&self.base.p, k)))],
            )),
            (Profile::Geometric, Regime::OverRModPiN(k)) => {
                let t = self.pi()?;
                Ok((Engine::new(Coeffs::Field, order, n), vec![t.pow(k)]))
            }
            (Profile::Geometric, r) => Err(GlueError::UnsupportedRegime(format!(
                "geometric profile supports Groebner computations only modulo t^N, not {}",
                r.tag()
            ))),
        }
    }

    /// Checks that `f` is a polynomial of this ring.
    pub fn check(&self, f: &Poly) -> Result<()> {
        if f.nvars() != self.nvars() {
            return Err(GlueError::RegimeMismatch(format!(
                "polynomial has {} variables, ring [{}] has {}",
                f.nvars(),
                self.vars.join(","),
                self.nvars()
            )));
        }
        if self.base.profile == Profile::Arithmetic
            && matches!(self.regime, Regime::OverR | Regime::OverRModPiN(_))
            && !f.is_integral(&self.base.p)
        {
            return Err(GlueError::RegimeMismatch(format!(
                "coefficients of {} are not in {}",
                f.display(&self.vars),
                self.base
            )));
        }
        Ok(())
    }

    pub fn display(&self, f: &Poly) -> String {
        f.display(&self.vars)
    }
}

/// An ideal with an optional cached reduced Gröbner basis.
#[derive(Debug)]
pub struct IdealPresentation {
    ring: Arc<PolyRing>,
    generators: Vec<Poly>,
    order: MonomialOrder,
    basis: OnceLock<Vec<Vector>>,
}

impl Clone for IdealPresentation {
    fn clone(&self) -> Self {
        let basis = OnceLock::new();
        if let Some(b) = self.basis.get() {
            let _ = basis.set(b.clone());
        }
        IdealPresentation { ring: self.ring.clone(), generators: self.generators.clone(), order: self.order, basis }
    }
}

impl IdealPresentation {
    pub fn new(ring: Arc<PolyRing>, generators: Vec<Poly>) -> Result<Self> {
        Self::with_order(ring, generators, MonomialOrder::DegLex)
    }

    pub fn with_order(ring: Arc<PolyRing>, generators: Vec<Poly>, order: MonomialOrder) -> Result<Self> {
        if matches!(order, MonomialOrder::Elim(_)) {
            return Err(GlueError::Invalid("supported orders are lex and deglex".into()));
        }
        for g in &generators {
            ring.check(g)?;
        }
        Ok(IdealPresentation { ring, generators, order, basis: OnceLock::new() })
    }

    pub fn zero(ring: Arc<PolyRing>) -> Self {
        IdealPresentation { ring, generators: vec![], order: MonomialOrder::DegLex, basis: OnceLock::new() }
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        &self.ring
    }

    pub fn generators(&self) -> &[Poly] {
        &self.generators
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn engine(&self) -> Result<Engine> {
        Ok(self.ring.engine(self.order)?.0)
    }

    fn basis_vectors(&self) -> Result<&Vec<Vector>> {
        if let Some(b) = self.basis.get() {
            return Ok(b);
        }
        let (engine, extra) = self.ring.engine(self.order)?;
        let gens: Vec<Vector> = self.generators.iter().chain(extra.iter()).map(|g| engine.from_poly(g, 0)).collect();
        let b = engine.groebner(&gens);
        // identical content if another thread won the race
        let _ = self.basis.set(b);
        Ok(self.basis.get().expect("basis just set"))
    }

    /// The reduced Gröbner basis (including `pi^N` in truncated regimes).
    pub fn groebner(&self) -> Result<Vec<Poly>> {
        let engine = self.engine()?;
        Ok(self.basis_vectors()?.iter().map(|v| engine.to_poly(v)).collect())
    }

    pub fn has_cached_basis(&self) -> bool {
        self.basis.get().is_some()
    }

    pub fn normal_form(&self, f: &Poly) -> Result<Poly> {
        self.ring.check(f)?;
        let engine = self.engine()?;
        let basis = self.basis_vectors()?;
        Ok(engine.to_poly(&engine.reduce(engine.from_poly(f, 0), basis)))
    }

    pub fn contains(&self, f: &Poly) -> Result<bool> {
        Ok(self.normal_form(f)?.is_zero())
    }

    pub fn contains_ideal(&self, other: &IdealPresentation) -> Result<bool> {
        for g in &other.generators {
            if !self.contains(g)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn same_ideal(&self, other: &IdealPresentation) -> Result<bool> {
        Ok(self.contains_ideal(other)? && other.contains_ideal(self)?)
    }

    pub fn is_unit(&self) -> Result<bool> {
        self.contains(&Poly::one(self.ring.nvars()))
    }

    pub fn with_generators(&self, extra: impl IntoIterator<Item = Poly>) -> Result<Self> {
        let mut g = self.generators.clone();
        g.extend(extra);
        IdealPresentation::with_order(self.ring.clone(), g, self.order)
    }

    pub fn in_regime(&self, regime: Regime) -> Result<Self> {
        IdealPresentation::with_order(self.ring.with_regime(regime), self.generators.clone(), self.order)
    }
}

/// Returns the ideal with its reduced Gröbner basis cached under `order`.
pub fn groebner_basis(ideal: &IdealPresentation, order: MonomialOrder) -> Result<IdealPresentation> {
    let out = IdealPresentation::with_order(ideal.ring.clone(), ideal.generators.clone(), order)?;
    let basis = out.groebner()?;
    let (_, extra) = out.ring.engine(order)?;
    // the cached basis already contains pi^N; keep only the ideal's own part visible
    let gens: Vec<Poly> = basis.into_iter().filter(|g| !extra.contains(g)).collect();
    let reduced = IdealPresentation::with_order(out.ring.clone(), gens, order)?;
    if let Some(b) = out.basis.get() {
        let _ = reduced.basis.set(b.clone());
    }
    Ok(reduced)
}

pub fn normal_form(f: &Poly, ideal: &IdealPresentation) -> Result<Poly> {
    ideal.normal_form(f)
}

pub fn ideal_membership(f: &Poly, ideal: &IdealPresentation) -> Result<bool> {
    ideal.contains(f)
}

/// The saturation `(I : pi^infinity)` of an ideal over `R`.
pub fn pi_saturation(ideal: &IdealPresentation) -> Result<IdealPresentation> {
    let ring = ideal.ring();
    if ring.regime != Regime::OverR {
        return Err(GlueError::RegimeMismatch(format!("saturation needs regime over_R, got {}", ring.regime.tag())));
    }
    let p = ring.base.prime()?.clone();
    let gens = saturate_by_p(&p, ring.nvars(), ideal.generators())?;
    let out = IdealPresentation::with_order(ring.clone(), gens, ideal.order())?;
    out.groebner()?;
    Ok(out)
}

/// Generators of `(I : p^infinity)` in `Z_(p)[x]`, via `I + (1 - p*s)` and elimination of `s`.
pub fn saturate_by_p(p: &BigInt, nvars: usize, gens: &[Poly]) -> Result<Vec<Poly>> {
    let n = nvars + 1;
    let engine = Engine::new(Coeffs::Dvr(p.clone()), MonomialOrder::Elim(1), n);
    let shift: Vec<usize> = (1..n).collect();
    let mut vs: Vec<Vector> = gens.iter().map(|g| engine.from_poly(&g.embed(n, &shift), 0)).collect();
    let mut helper = Poly::one(n);
    helper.add_term(
        {
            let mut m = vec![0; n];
            m[0] = 1;
            m
        },
        -arith::int(p),
    );
    vs.push(engine.from_poly(&helper, 0));
    let basis = engine.groebner(&vs);
    Ok(eliminated(&engine, &basis, 1, nvars))
}

/// Elements of an elimination basis free of the first `k` variables, restricted to the rest.
pub fn eliminated(engine: &Engine, basis: &[Vector], k: usize, rest: usize) -> Vec<Poly> {
    let keep: Vec<Option<usize>> = (0..k + rest).map(|i| if i < k { None } else { Some(i - k) }).collect();
    basis
        .iter()
        .filter(|v| mono_degree(&v[0].0.mono[..k]) == 0)
        .filter_map(|v| engine.to_poly(v).restrict(rest, &keep))
        .collect()
}

/// Generators of `I ∩ J` over the engine's coefficient ring.
pub fn intersect(coeffs: &Coeffs, nvars: usize, i: &[Poly], j: &[Poly]) -> Vec<Poly> {
    let n = nvars + 1;
    let engine = Engine::new(coeffs.clone(), MonomialOrder::Elim(1), n);
    let shift: Vec<usize> = (1..n).collect();
    let t = Poly::var(n, 0);
    let one_minus_t = &Poly::one(n) - &t;
    let mut vs = Vec::new();
    for g in i {
        vs.push(engine.from_poly(&(&t * &g.embed(n, &shift)), 0));
    }
    for g in j {
        vs.push(engine.from_poly(&(&one_minus_t * &g.embed(n, &shift)), 0));
    }
    let basis = engine.groebner(&vs);
    eliminated(&engine, &basis, 1, nvars)
}

/// Kernel of `K[X_1..X_m] -> K[y]/J` sending `X_i` to `images[i]`, by elimination of `y`.
pub fn kernel_of_map(coeffs: &Coeffs, target_vars: usize, relations: &[Poly], images: &[Poly]) -> Vec<Poly> {
    let m = images.len();
    let n = target_vars + m;
    let engine = Engine::new(coeffs.clone(), MonomialOrder::Elim(target_vars), n);
    let ymap: Vec<usize> = (0..target_vars).collect();
    let mut vs = Vec::new();
    for r in relations {
        vs.push(engine.from_poly(&r.embed(n, &ymap), 0));
    }
    for (i, img) in images.iter().enumerate() {
        let xi = Poly::var(n, target_vars + i);
        vs.push(engine.from_poly(&(&xi - &img.embed(n, &ymap)), 0));
    }
    let basis = engine.groebner(&vs);
    eliminated(&engine, &basis, target_vars, m)
}

/// Scales a nonzero rational polynomial to have integral coefficients of minimal valuation zero.
pub fn primitive_part(f: &Poly, p: &BigInt) -> Poly {
    match f.min_valuation(p) {
        None => f.clone(),
        Some(v) => {
            let mut g = f.scale(&arith::p_power(p, -v));
            // clear remaining denominators (units) so the result is integral
            let mut den = BigInt::from(1);
            for (_, c) in g.terms() {
                den = num_integer::Integer::lcm(&den, c.denom());
            }
            g = g.scale(&arith::int(&den));
            g
        }
    }
}

/// `+infinity` is represented by `Infinite`, which compares above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl std::fmt::Display for Valuation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// Coefficientwise minimum of pi-adic valuations.
pub fn gauss_valuation(f: &Poly, ring: &PolyRing) -> Result<Valuation> {
    ring.check_nvars(f)?;
    if f.is_zero() {
        return Ok(Valuation::Infinite);
    }
    match ring.base.profile {
        Profile::Arithmetic => Ok(Valuation::Finite(f.min_valuation(&ring.base.p).expect("nonzero"))),
        Profile::Geometric => {
            let t = ring
                .pi_var()
                .ok_or_else(|| GlueError::RegimeMismatch("geometric profile needs a variable named t".into()))?;
            Ok(Valuation::Finite(f.terms().map(|(m, _)| m[t] as i64).min().expect("nonzero")))
        }
    }
}

impl PolyRing {
    fn check_nvars(&self, f: &Poly) -> Result<()> {
        if f.nvars() != self.nvars() {
            return Err(GlueError::RegimeMismatch("variable count mismatch".into()));
        }
        Ok(())
    }
}

/// A finite-type algebra `ring / relations`.
#[derive(Clone, Debug)]
pub struct AffineAlgebra {
    pub relations: IdealPresentation,
}

impl AffineAlgebra {
    pub fn new(ring: Arc<PolyRing>, relations: Vec<Poly>) -> Result<Self> {
        Ok(AffineAlgebra { relations: IdealPresentation::new(ring, relations)? })
    }

    pub fn ring(&self) -> &Arc<PolyRing> {
        self.relations.ring()
    }

    pub fn base(&self) -> &BasePair {
        &self.ring().base
    }

    pub fn regime(&self) -> Regime {
        self.ring().regime
    }

    pub fn vars(&self) -> &[String] {
        &self.ring().vars
    }

    pub fn nvars(&self) -> usize {
        self.ring().nvars()
    }

    pub fn reduce(&self, f: &Poly) -> Result<Poly> {
        self.relations.normal_form(f)
    }

    pub fn is_zero(&self, f: &Poly) -> Result<bool> {
        self.relations.contains(f)
    }

    pub fn equal(&self, f: &Poly, g: &Poly) -> Result<bool> {
        self.is_zero(&(f - g))
    }

    pub fn in_regime(&self, regime: Regime) -> Result<Self> {
        Ok(AffineAlgebra { relations: self.relations.in_regime(regime)? })
    }

    pub fn display(&self, f: &Poly) -> String {
        self.ring().display(f)
    }
}
