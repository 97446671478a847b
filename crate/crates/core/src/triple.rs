//! Affine gluing triples `(A, B, j*)` and the pullback ring `D = A x_C B`,
//! with `C = B[1/pi]`.
//!
//! `A` is a finite-type algebra over `R[1/pi]`. `B` is a finite product of
//! standard-form factors given by exact lifts of their relations; its
//! torsion-free quotient `B'` is free over `R` on the standard monomials of
//! the saturated relation ideal, which is what makes integrality checks exact.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{self, Q};
use crate::error::{GlueError, Result};
use crate::gb::Coeffs;
use crate::ideal::{
    intersect, kernel_of_map, pi_saturation, primitive_part, saturate_by_p, AffineAlgebra, IdealPresentation,
    PolyRing, Regime,
};
use crate::linalg::{rank_rational, smith, solve_rational, Lattice, Mat};
use crate::par;
use crate::poly::{mono_divides, monomials_up_to, Monomial, MonomialOrder, Poly};
use crate::precision::{Factor, TruncatedAlgebra};

/// Extra degrees tried before a failed dense-image check counts as certified.
pub const RETRY_BUDGET: u32 = 3;

/// `|g| <= 1` on the subdomain cut out by one factor of `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainCondition {
    pub factor: usize,
    pub g: Poly,
}

#[derive(Debug)]
struct FactorData {
    exact: IdealPresentation,
    sat: IdealPresentation,
    sat_q: IdealPresentation,
    torsion: bool,
}

#[derive(Debug)]
pub struct AffineGluingTriple {
    pub name: String,
    pub a: AffineAlgebra,
    pub b: Arc<TruncatedAlgebra>,
    /// `jstar[f][i]`: image of the `i`-th variable of `A` on factor `f`, over `Q`.
    pub jstar: Vec<Vec<Poly>>,
    pub domain: Vec<DomainCondition>,
    factors: Vec<FactorData>,
    a_leads: Vec<Monomial>,
    p: BigInt,
}

/// An element of `D`: its `A`-part and a lift of its `B`-part on each factor.
#[derive(Clone, Debug, PartialEq)]
pub struct DElement {
    pub a: Poly,
    pub b: Vec<Poly>,
    pub label: String,
}

impl DElement {
    pub fn is_torsion(&self) -> bool {
        self.a.is_zero()
    }

    fn weight(&self) -> u32 {
        self.a.total_degree().unwrap_or(0).max(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    Member,
    /// A coefficient of negative valuation in the image on `factor`.
    NonMember { factor: usize, monomial: String, valuation: i64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseImage {
    pub dense: bool,
    pub degree_bound: u32,
    /// Levels `n` at which `D_{<=d} -> B/pi^n` hit every target.
    pub levels: Vec<u32>,
    pub witness: Option<String>,
}

/// Targets whose classes generate `B'/pi` as an algebra: variables and idempotents.
struct Target {
    label: String,
    value: Vec<Poly>,
}

/// Coordinates on `B'` with respect to standard monomials, one block per factor.
struct BCoords {
    index: BTreeMap<(usize, Monomial), usize>,
}

impl BCoords {
    fn build<'a>(items: impl IntoIterator<Item = &'a Vec<Poly>>) -> Self {
        let mut keys = std::collections::BTreeSet::new();
        for v in items {
            for (f, poly) in v.iter().enumerate() {
                for (m, _) in poly.terms() {
                    keys.insert((f, m.clone()));
                }
            }
        }
        BCoords { index: keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect() }
    }

    fn dim(&self) -> usize {
        self.index.len()
    }

    fn vector(&self, v: &[Poly]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim()];
        for (f, poly) in v.iter().enumerate() {
            for (m, c) in poly.terms() {
                out[self.index[&(f, m.clone())]] = c.clone();
            }
        }
        out
    }
}

fn from_coords(nvars: usize, std: &[Monomial], c: &[Q]) -> Poly {
    Poly::from_terms(nvars, std.iter().cloned().zip(c.iter().cloned()))
}

impl AffineGluingTriple {
    pub fn new(
        name: &str,
        a: AffineAlgebra,
        b: Arc<TruncatedAlgebra>,
        jstar: Vec<Vec<Poly>>,
        domain: Vec<DomainCondition>,
    ) -> Result<Self> {
        if a.regime() != Regime::OverRInvPi {
            return Err(GlueError::RegimeMismatch(format!("A must be over R[1/pi], got {}", a.regime().tag())));
        }
        if a.base() != &b.base {
            return Err(GlueError::AlgebraMismatch("A and B have different base pairs".into()));
        }
        let p = a.base().prime()?.clone();
        if jstar.len() != b.factors.len() {
            return Err(GlueError::Invalid(format!("{} factors but {} image lists", b.factors.len(), jstar.len())));
        }
        let mut factors = Vec::new();
        for (f, fac) in b.factors.iter().enumerate() {
            if jstar[f].len() != a.nvars() || jstar[f].iter().any(|g| g.nvars() != fac.nvars()) {
                return Err(GlueError::Invalid(format!("images on factor {} have the wrong shape", fac.name)));
            }
            let ring = PolyRing::from_names(b.base.clone(), Regime::OverR, fac.vars.clone());
            let exact = IdealPresentation::new(ring.clone(), fac.relations.clone())?;
            let sat = pi_saturation(&exact)?;
            for g in sat.groebner()? {
                let (_, lc) = g.leading(MonomialOrder::DegLex).expect("basis elements are nonzero");
                if arith::val(lc, &p) != Some(0) {
                    return Err(GlueError::UnsupportedRegime(format!(
                        "factor {} is not in standard form: {} has a non-unit leading coefficient",
                        fac.name,
                        g.display(&fac.vars)
                    )));
                }
            }
            let sat_q = sat.in_regime(Regime::OverRInvPi)?;
            let torsion = !exact.contains_ideal(&sat)?;
            factors.push(FactorData { exact, sat, sat_q, torsion });
        }
        let a_leads = a
            .relations
            .groebner()?
            .iter()
            .map(|g| g.leading(MonomialOrder::DegLex).expect("nonzero").0.clone())
            .collect();
        let t = AffineGluingTriple { name: name.into(), a, b, jstar, domain, factors, a_leads, p };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        for r in self.a.relations.generators() {
            for (f, img) in self.image(r)?.iter().enumerate() {
                if !img.is_zero() {
                    return Err(GlueError::IncompatibleDatum(format!(
                        "relation {} of A does not vanish on factor {}",
                        self.a.display(r),
                        self.b.factors[f].name
                    )));
                }
            }
        }
        for c in &self.domain {
            if c.factor >= self.factors.len() {
                return Err(GlueError::Invalid(format!("domain condition on missing factor {}", c.factor)));
            }
            let img = &self.image(&c.g)?[c.factor];
            if !img.is_integral(&self.p) {
                return Err(GlueError::IncompatibleDatum(format!(
                    "|{}| <= 1 fails on factor {}",
                    self.a.display(&c.g),
                    self.b.factors[c.factor].name
                )));
            }
        }
        Ok(())
    }

    pub fn prime(&self) -> &BigInt {
        &self.p
    }

    pub fn has_torsion(&self) -> bool {
        self.factors.iter().any(|f| f.torsion)
    }

    /// `j*(f)` in `C`, reduced to standard monomials on each factor.
    pub fn image(&self, f: &Poly) -> Result<Vec<Poly>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, fd)| fd.sat_q.normal_form(&f.substitute(&self.jstar[i], self.b.factors[i].nvars())))
            .collect()
    }

    /// Whether `f` in `A` lies in `D`, i.e. `j*(f)` lies in the image of `B`.
    pub fn membership(&self, f: &Poly) -> Result<Membership> {
        for (i, img) in self.image(f)?.iter().enumerate() {
            let bad = img.terms().filter_map(|(m, c)| arith::val(c, &self.p).filter(|&v| v < 0).map(|v| (m, v))).min_by_key(|t| t.1);
            if let Some((m, v)) = bad {
                let names = &self.b.factors[i].vars;
                return Ok(Membership::NonMember {
                    factor: i,
                    monomial: Poly::monomial(m.clone(), Q::one()).display(names),
                    valuation: v,
                });
            }
        }
        Ok(Membership::Member)
    }

    /// The element of `D` with `A`-part `a`, if there is one.
    pub fn d_element(&self, a: &Poly, label: &str) -> Result<Option<DElement>> {
        match self.membership(a)? {
            Membership::Member => Ok(Some(self.element(a.clone(), label.into())?)),
            Membership::NonMember { .. } => Ok(None),
        }
    }

    fn element(&self, a: Poly, label: String) -> Result<DElement> {
        let a = self.a.reduce(&a)?;
        let b = self.image(&a)?;
        Ok(DElement { a, b, label })
    }

    /// Standard monomials of `A` of degree `<= d`, ordered by degree.
    fn a_std(&self, d: u32) -> Vec<Monomial> {
        monomials_up_to(self.a.nvars(), d)
            .into_iter()
            .filter(|m| !self.a_leads.iter().any(|l| mono_divides(l, m)))
            .collect()
    }

    fn a_vec(&self, f: &Poly, std: &[Monomial]) -> Result<Vec<Q>> {
        let nf = self.a.reduce(f)?;
        let mut out = vec![Q::zero(); std.len()];
        for (m, c) in nf.terms() {
            let i = std.iter().position(|s| s == m).ok_or_else(|| {
                GlueError::Invalid(format!("{} exceeds the coordinate range", self.a.display(&nf)))
            })?;
            out[i] = c.clone();
        }
        Ok(out)
    }

    fn targets(&self) -> Vec<Target> {
        let nf = self.factors.len();
        let zero: Vec<Poly> = self.b.factors.iter().map(|f| Poly::zero(f.nvars())).collect();
        let mut out = Vec::new();
        for (f, fac) in self.b.factors.iter().enumerate() {
            for (k, name) in fac.vars.iter().enumerate() {
                let mut value = zero.clone();
                value[f] = self.factors[f].sat_q.normal_form(&Poly::var(fac.nvars(), k)).expect("same ring");
                out.push(Target { label: format!("{name} mod p on {}", fac.name), value });
            }
        }
        if nf > 1 {
            for (f, fac) in self.b.factors.iter().enumerate() {
                let mut value = zero.clone();
                value[f] = Poly::one(fac.nvars());
                out.push(Target { label: format!("idempotent of {}", fac.name), value });
            }
        }
        out
    }

    /// `D_{<=d}` as a lattice in the coordinates of `a_std(d)`.
    pub fn d_lattice(&self, d: u32) -> Result<(Vec<Monomial>, Lattice)> {
        let std = self.a_std(d);
        let images: Vec<Vec<Poly>> = std
            .iter()
            .map(|m| self.image(&Poly::monomial(m.clone(), Q::one())))
            .collect::<Result<_>>()?;
        let coords = BCoords::build(images.iter());
        let phi: Mat = images.iter().map(|v| coords.vector(v)).collect();
        if rank_rational(&phi, coords.dim()) < std.len() {
            return Err(GlueError::UnsupportedRegime(format!(
                "j* is not injective on degree <= {d}; D is not a lattice there"
            )));
        }
        // c * phi integral  <=>  (c * U^-1)_i in diag_i^-1 * Z_(p)
        let s = smith(&self.p, &phi, coords.dim());
        let rows: Mat = (0..s.rank)
            .map(|i| {
                let inv = Q::one() / &s.diag[i];
                s.u[i].iter().map(|x| x * &inv).collect()
            })
            .collect();
        Ok((std.clone(), Lattice::new(&self.p, std.len(), rows)))
    }

    fn d_elements(&self, d: u32) -> Result<Vec<DElement>> {
        let (std, lat) = self.d_lattice(d)?;
        lat.basis()
            .iter()
            .map(|r| self.element(from_coords(self.a.nvars(), &std, r), format!("D_{d}")))
            .collect()
    }

    /// First target not hit by `elements` modulo `pi^n`.
    fn first_missed(&self, elements: &[Vec<Poly>], targets: &[Target], n: u32) -> Option<String> {
        let coords = BCoords::build(elements.iter().chain(targets.iter().map(|t| &t.value)));
        let lat = Lattice::new(&self.p, coords.dim(), elements.iter().map(|v| coords.vector(v)).collect());
        targets.iter().find(|t| !lat.covers_mod(&coords.vector(&t.value), n)).map(|t| t.label.clone())
    }

    /// Level 1 is checked; the image of `D` is a subring containing `pi`, so
    /// `S + pi B = B` gives `S + pi^n B = B` for every `n`.
    fn dense_at(&self, d: u32, prec: u32) -> Result<(Vec<u32>, Option<String>)> {
        let elems: Vec<Vec<Poly>> = self.d_elements(d)?.into_iter().map(|e| e.b).collect();
        if let Some(w) = self.first_missed(&elems, &self.targets(), 1) {
            return Ok((vec![], Some(w)));
        }
        Ok(((1..=prec.max(1)).collect(), None))
    }

    /// Whether the image of `D_{<=d}` generates `B/pi^n` for every `n <= prec`.
    ///
    /// A failure that disappears when the degree is raised within
    /// [`RETRY_BUDGET`] is reported as `DegreeBoundInconclusive`; one that
    /// persists is returned as `dense: false` with the missed target.
    pub fn dense_image_check(&self, prec: u32, degree_bound: u32) -> Result<DenseImage> {
        let (levels, witness) = self.dense_at(degree_bound, prec)?;
        let Some(witness) = witness else {
            return Ok(DenseImage { dense: true, degree_bound, levels, witness: None });
        };
        for d in degree_bound + 1..=degree_bound + RETRY_BUDGET {
            if self.dense_at(d, prec)?.1.is_none() {
                return Err(GlueError::DegreeBoundInconclusive(format!(
                    "{witness} is missed at degree {degree_bound} but hit at degree {d}"
                )));
            }
        }
        Ok(DenseImage { dense: false, degree_bound, levels, witness: Some(witness) })
    }
}

/// The pullback ring presented over `R`, with its generators in `D`.
#[derive(Clone, Debug)]
pub struct GluedRingResult {
    pub generators: Vec<DElement>,
    /// Relations in variables `g1..gn`, one per generator.
    pub relations: IdealPresentation,
    pub degree_bound: u32,
    pub prec: u32,
    pub checks: Vec<String>,
}

impl GluedRingResult {
    pub fn names(&self) -> Vec<String> {
        self.relations.ring().vars.clone()
    }
}

#[derive(Clone, Debug)]
pub enum Classification {
    Affine(Box<GluedRingResult>),
    NotAffine { tag: String, witness: String },
    Inconclusive(String),
}

fn gen_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("g{i}")).collect()
}

impl AffineGluingTriple {
    /// Monomials in the non-torsion generators of weight `<= e`, with their `A`-parts.
    fn products(&self, gens: &[DElement], e: u32) -> Result<Vec<(Vec<u32>, Poly)>> {
        let live: Vec<usize> = (0..gens.len()).filter(|&i| !gens[i].is_torsion()).collect();
        let mut out = vec![(vec![0; gens.len()], Poly::one(self.a.nvars()))];
        let mut frontier = vec![(0usize, 0u32, vec![0u32; gens.len()], Poly::one(self.a.nvars()))];
        while let Some((start, w, exps, val)) = frontier.pop() {
            for (pos, &g) in live.iter().enumerate().skip(start) {
                let w2 = w + gens[g].weight();
                if w2 > e {
                    continue;
                }
                let mut ex = exps.clone();
                ex[g] += 1;
                let v = self.a.reduce(&(&val * &gens[g].a))?;
                out.push((ex.clone(), v.clone()));
                frontier.push((pos, w2, ex, v));
            }
        }
        Ok(out)
    }

    /// `S_{<=d}` for the subalgebra `S` generated by `gens`, from products of weight `<= e`.
    pub fn s_lattice(&self, gens: &[DElement], d: u32, e: u32) -> Result<Lattice> {
        let e = e.max(d);
        let prods = self.products(gens, e)?;
        let top = prods.iter().filter_map(|(_, a)| a.total_degree()).max().unwrap_or(0).max(e);
        let std = self.a_std(top);
        let low = self.a_std(d).len();
        let rows: Mat = prods.iter().map(|(_, a)| self.a_vec(a, &std)).collect::<Result<_>>()?;
        let lat = Lattice::new(&self.p, std.len(), rows);
        let high: Vec<usize> = (low..std.len()).collect();
        let cut = if high.is_empty() { lat } else { lat.vanishing_on(&high) };
        Ok(Lattice::new(&self.p, low, cut.rows.iter().map(|r| r[..low].to_vec()).collect()))
    }

    /// Writes an element of `A` as a polynomial over `R` in the generators, using products of weight `<= e`.
    pub fn express(&self, gens: &[DElement], f: &Poly, e: u32) -> Result<Option<Poly>> {
        let prods = self.products(gens, e)?;
        let f = self.a.reduce(f)?;
        let top = prods.iter().chain([(vec![], f.clone())].iter()).filter_map(|(_, a)| a.total_degree()).max().unwrap_or(0);
        let std = self.a_std(top);
        let rows: Mat = prods.iter().map(|(_, a)| self.a_vec(a, &std)).collect::<Result<_>>()?;
        let lat = Lattice { p: self.p.clone(), dim: std.len(), rows };
        Ok(lat.solve(&self.a_vec(&f, &std)?).map(|c| {
            Poly::from_terms(gens.len(), prods.iter().zip(c).map(|((ex, _), c)| (ex.clone(), c)))
        }))
    }

    fn search_target(&self, t: &Target, d: u32) -> Result<Option<DElement>> {
        let basis = self.d_elements(d)?;
        let coords = BCoords::build(basis.iter().map(|e| &e.b).chain([&t.value]));
        let mut rows: Mat = basis.iter().map(|e| coords.vector(&e.b)).collect();
        let k = rows.len();
        let p = arith::int(&self.p);
        for j in 0..coords.dim() {
            let mut r = vec![Q::zero(); coords.dim()];
            r[j] = p.clone();
            rows.push(r);
        }
        let Some(c) = Lattice::new(&self.p, coords.dim(), rows).solve(&coords.vector(&t.value)) else {
            return Ok(None);
        };
        let mut a = Poly::zero(self.a.nvars());
        for (e, ci) in basis.iter().zip(&c[..k]) {
            let r = arith::int(&arith::residue(ci, &self.p, 1));
            a = &a + &e.a.scale(&r);
        }
        Ok(Some(self.element(a, format!("lift of {}", t.label))?))
    }

    /// A generating set for `D` that agrees with `D` degreewise up to `degree_bound`.
    ///
    /// Scaled variables `p^N x`, lifts of the variable and idempotent classes
    /// of `B'/p`, and torsion generators `(0, w)`; then any element of a
    /// degree piece of `D` still missing is added. Output is ordered by
    /// degree, then valuation, then printed form.
    pub fn generator_search(&self, degree_bound: u32, prec: u32) -> Result<Vec<DElement>> {
        if self.factors.is_empty() {
            return Err(GlueError::Invalid("split triple: D = A needs no search".into()));
        }
        let mut gens = Vec::new();
        let names = self.a.vars().to_vec();
        for (i, name) in names.iter().enumerate() {
            let x = Poly::var(self.a.nvars(), i);
            let n = (0..=prec)
                .find_map(|n| {
                    let f = x.scale(&arith::int(&arith::pow(&self.p, n)));
                    match self.membership(&f) {
                        Ok(Membership::Member) => Some(Ok((n, f))),
                        Ok(_) => None,
                        Err(e) => Some(Err(e)),
                    }
                })
                .transpose()?;
            let Some((n, f)) = n else {
                return Err(GlueError::SearchExhausted {
                    bound: degree_bound,
                    frontier: format!("p^{prec}*{name} is not in D"),
                });
            };
            let e = self.element(f, if n == 0 { name.clone() } else { format!("p^{n}*{name}") })?;
            if !e.a.is_zero() {
                gens.push(e);
            }
        }
        for (f, fd) in self.factors.iter().enumerate() {
            if !fd.torsion {
                continue;
            }
            for w in fd.sat.groebner()? {
                if fd.exact.contains(&w)? {
                    continue;
                }
                let mut b: Vec<Poly> = self.b.factors.iter().map(|g| Poly::zero(g.nvars())).collect();
                b[f] = w.clone();
                let label = format!("torsion {}", w.display(&self.b.factors[f].vars));
                gens.push(DElement { a: Poly::zero(self.a.nvars()), b, label });
            }
        }
        let e = 2 * degree_bound.max(1);
        let targets = self.targets();
        for t in &targets {
            let images: Vec<Vec<Poly>> =
                self.products(&gens, e)?.iter().map(|(_, a)| self.image(a)).collect::<Result<_>>()?;
            if self.first_missed(&images, std::slice::from_ref(t), 1).is_none() {
                continue;
            }
            let degrees: Vec<u32> = (1..=degree_bound).collect();
            let found = par::map(&degrees, |&d| self.search_target(t, d));
            let mut hit = None;
            for r in found {
                if let Some(el) = r? {
                    hit = Some(el);
                    break;
                }
            }
            match hit {
                Some(el) => gens.push(el),
                None => {
                    return Err(GlueError::SearchExhausted { bound: degree_bound, frontier: t.label.clone() });
                }
            }
        }
        for d in 1..=degree_bound {
            let (std, dl) = self.d_lattice(d)?;
            loop {
                let s = self.s_lattice(&gens, d, 2 * d)?;
                let Some(row) = dl.basis().into_iter().find(|r| !s.contains(r)) else { break };
                gens.push(self.element(from_coords(self.a.nvars(), &std, &row), format!("degree {d} completion"))?);
            }
        }
        let p = self.p.clone();
        let key = |e: &DElement| {
            let v = e.a.min_valuation(&p).or_else(|| e.b.iter().filter_map(|b| b.min_valuation(&p)).min()).unwrap_or(0);
            (e.a.total_degree().unwrap_or(0), v, e.a.display(self.a.vars()), e.label.clone())
        };
        gens.sort_by_key(key);
        Ok(gens)
    }

    /// Relations among `gens`: the kernel of `R[g] -> A x B`.
    pub fn pullback_ring(&self, gens: &[DElement]) -> Result<IdealPresentation> {
        let n = gens.len();
        let ring = PolyRing::from_names(self.a.base().clone(), Regime::OverR, gen_names(n));
        let a_parts: Vec<Poly> = gens.iter().map(|g| g.a.clone()).collect();
        let over_q = kernel_of_map(&Coeffs::Field, self.a.nvars(), self.a.relations.generators(), &a_parts);
        let prim: Vec<Poly> = over_q.iter().map(|g| primitive_part(g, &self.p)).collect();
        let mut kernel = if prim.is_empty() { vec![] } else { saturate_by_p(&self.p, n, &prim)? };
        for (f, fd) in self.factors.iter().enumerate() {
            if !fd.torsion {
                continue;
            }
            let b_parts: Vec<Poly> = gens.iter().map(|g| g.b[f].clone()).collect();
            let kb = kernel_of_map(
                &Coeffs::Dvr(self.p.clone()),
                self.b.factors[f].nvars(),
                fd.exact.generators(),
                &b_parts,
            );
            kernel = intersect(&Coeffs::Dvr(self.p.clone()), n, &kernel, &kb);
        }
        let out = IdealPresentation::new(ring, kernel)?;
        let gb = out.groebner()?;
        IdealPresentation::new(out.ring().clone(), gb)
    }

    /// Degreewise and mod-`p^n` checks that `gens` generate `D`.
    pub fn verify_generators(&self, gens: &[DElement], degree_bound: u32, prec: u32) -> Result<Vec<String>> {
        let mut log = Vec::new();
        let e = 2 * degree_bound.max(1);
        let prods = self.products(gens, e)?;
        let images: Vec<Vec<Poly>> = prods.iter().map(|(_, a)| self.image(a)).collect::<Result<_>>()?;
        let targets = self.targets();
        if let Some(w) = self.first_missed(&images, &targets, 1) {
            return Err(GlueError::VerificationFailed { check: "B-surjectivity mod p^1".into(), witness: w });
        }
        // the image of S is a subring containing p, so level 1 lifts to every level
        let explicit: Vec<u32> =
            (1..=prec.max(1)).take_while(|&n| self.first_missed(&images, &targets, n).is_none()).collect();
        log.push(format!(
            "B-surjectivity mod p^n for n <= {}: explicit for n <= {}, lifted from n = 1 beyond",
            prec.max(1),
            explicit.len()
        ));

        let top = prods.iter().filter_map(|(_, a)| a.total_degree()).max().unwrap_or(0).max(1);
        let std = self.a_std(top);
        let rows: Mat = prods.iter().map(|(_, a)| self.a_vec(a, &std)).collect::<Result<_>>()?;
        for (i, name) in self.a.vars().iter().enumerate() {
            let t = self.a_vec(&Poly::var(self.a.nvars(), i), &std)?;
            if solve_rational(&rows, std.len(), &t).is_none() {
                return Err(GlueError::VerificationFailed {
                    check: "A-surjectivity after inverting p".into(),
                    witness: name.clone(),
                });
            }
        }
        log.push("A-surjectivity after inverting p".into());

        for d in 1..=degree_bound {
            let (dstd, dl) = self.d_lattice(d)?;
            let s = self.s_lattice(gens, d, 2 * d)?;
            if let Some(r) = dl.basis().into_iter().find(|r| !s.contains(r)) {
                return Err(GlueError::VerificationFailed {
                    check: format!("S = D in degree <= {d}"),
                    witness: self.a.display(&from_coords(self.a.nvars(), &dstd, &r)),
                });
            }
            if let Some(r) = s.rows.iter().find(|r| !dl.contains(r)) {
                return Err(GlueError::VerificationFailed {
                    check: format!("S in D in degree <= {d}"),
                    witness: self.a.display(&from_coords(self.a.nvars(), &dstd, r)),
                });
            }
        }
        log.push(format!("S = D degreewise for d <= {degree_bound}; D/p^n -> B/p^n injective there"));

        for (f, fd) in self.factors.iter().enumerate() {
            if !fd.torsion {
                continue;
            }
            let ws: Vec<Poly> = gens.iter().filter(|g| g.is_torsion()).map(|g| g.b[f].clone()).collect();
            if !fd.exact.with_generators(ws)?.contains_ideal(&fd.sat)? {
                return Err(GlueError::VerificationFailed {
                    check: "torsion generators".into(),
                    witness: format!("B[p^inf] on {} is not generated", self.b.factors[f].name),
                });
            }
            log.push(format!("torsion of {} generated", self.b.factors[f].name));
        }
        Ok(log)
    }

    /// Checks a result: relations vanish in `A` and in `B/pi^N`, then [`Self::verify_generators`].
    pub fn verify_glued(&self, result: &GluedRingResult) -> Result<Vec<String>> {
        if self.factors.is_empty() {
            return Ok(vec!["split triple: D = A".into()]);
        }
        let gens = &result.generators;
        let a_parts: Vec<Poly> = gens.iter().map(|g| g.a.clone()).collect();
        for r in result.relations.generators() {
            let names = result.names();
            if !self.a.is_zero(&r.substitute(&a_parts, self.a.nvars()))? {
                return Err(GlueError::VerificationFailed {
                    check: "relations vanish in A".into(),
                    witness: r.display(&names),
                });
            }
            for (f, fd) in self.factors.iter().enumerate() {
                let b_parts: Vec<Poly> = gens.iter().map(|g| g.b[f].clone()).collect();
                let img = r.substitute(&b_parts, self.b.factors[f].nvars());
                let level = fd.exact.in_regime(Regime::OverRModPiN(result.prec.max(1)))?;
                let vanishes = if fd.torsion { level.contains(&img)? } else { fd.sat_q.contains(&img)? };
                if !vanishes {
                    return Err(GlueError::VerificationFailed {
                        check: format!("relations vanish in B/p^{}", result.prec),
                        witness: r.display(&names),
                    });
                }
            }
        }
        let mut log = vec!["relations vanish in A and B".to_string()];
        log.extend(self.verify_generators(gens, result.degree_bound, result.prec)?);
        Ok(log)
    }

    fn glue_split(&self, prec: u32, degree_bound: u32) -> Result<GluedRingResult> {
        let n = self.a.nvars();
        let mut names: Vec<String> = self.a.vars().to_vec();
        names.push("inv_p".into());
        let ring = PolyRing::from_names(self.a.base().clone(), Regime::OverR, names);
        let shift: Vec<usize> = (0..n).collect();
        let mut rels: Vec<Poly> =
            self.a.relations.generators().iter().map(|r| primitive_part(r, &self.p).embed(n + 1, &shift)).collect();
        let mut t = Poly::var(n + 1, n).scale(&arith::int(&self.p));
        t.add_term(vec![0; n + 1], -Q::one());
        rels.push(t);
        let mut generators: Vec<DElement> = self
            .a
            .vars()
            .iter()
            .enumerate()
            .map(|(i, v)| DElement { a: Poly::var(n, i), b: vec![], label: v.clone() })
            .collect();
        let inv = Q::one() / arith::int(&self.p);
        generators.push(DElement { a: Poly::constant(n, inv), b: vec![], label: "1/p".into() });
        Ok(GluedRingResult {
            generators,
            relations: IdealPresentation::new(ring, rels)?,
            degree_bound,
            prec,
            checks: vec!["split triple: D = A".into()],
        })
    }

    /// Search, present and verify the pullback ring.
    pub fn glue_ring(&self, prec: u32, degree_bound: u32) -> Result<GluedRingResult> {
        if self.factors.is_empty() {
            return self.glue_split(prec, degree_bound);
        }
        let generators = self.generator_search(degree_bound, prec)?;
        let relations = self.pullback_ring(&generators)?;
        let mut r = GluedRingResult { generators, relations, degree_bound, prec, checks: vec![] };
        r.checks = self.verify_glued(&r)?;
        Ok(r)
    }

    /// Dense-image check first, then the pullback ring.
    pub fn classify(&self, prec: u32, degree_bound: u32) -> Result<Classification> {
        if !self.factors.is_empty() {
            match self.dense_image_check(prec, degree_bound) {
                Ok(d) if !d.dense => {
                    return Ok(Classification::NotAffine {
                        tag: "dense-image".into(),
                        witness: d.witness.unwrap_or_default(),
                    })
                }
                Ok(_) => {}
                Err(GlueError::DegreeBoundInconclusive(m)) => return Ok(Classification::Inconclusive(m)),
                Err(e) => return Err(e),
            }
        }
        match self.glue_ring(prec, degree_bound) {
            Ok(r) => Ok(Classification::Affine(Box::new(r))),
            Err(e @ GlueError::SearchExhausted { .. }) | Err(e @ GlueError::VerificationFailed { .. }) => {
                Ok(Classification::Inconclusive(e.to_string()))
            }
            Err(e) => Err(e),
        }
    }
}

impl fmt::Display for GluedRingResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names();
        for (n, g) in names.iter().zip(&self.generators) {
            writeln!(f, "{n} = {}", g.label)?;
        }
        let rels: Vec<String> = self.relations.generators().iter().map(|r| r.display(&names)).collect();
        write!(f, "relations: {}", if rels.is_empty() { "none".into() } else { rels.join(", ") })
    }
}

/// The triple `(X[1/pi], X^, id)` of a finite-type algebra over `R`.
pub fn triple_of_algebra(x: &AffineAlgebra, prec: u32) -> Result<AffineGluingTriple> {
    if x.regime() != Regime::OverR {
        return Err(GlueError::RegimeMismatch("global sections need an algebra over R".into()));
    }
    let a = x.in_regime(Regime::OverRInvPi)?;
    let vars: Vec<&str> = x.vars().iter().map(|s| s.as_str()).collect();
    let b = TruncatedAlgebra::new("completion", x.base().clone(), prec, vec![Factor::new("main", &vars, x.relations.generators().to_vec())]);
    let n = x.nvars();
    let jstar = vec![(0..n).map(|i| Poly::var(n, i)).collect()];
    AffineGluingTriple::new("global", a, Arc::new(b), jstar, vec![])
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub result: GluedRingResult,
    pub checks: Vec<String>,
}

/// Glues `t(X)` and certifies that the canonical map `X -> D` is an isomorphism.
///
/// Injectivity at precision `N` is `I_sat ∩ (I + p^N) = I`; surjectivity is
/// degreewise equality of `D_{<=d}` with the image of `X_{<=d}`, plus the
/// torsion generators, which are images of elements of `X` by construction.
pub fn reconstruct_global_sections(x: &AffineAlgebra, prec: u32, degree_bound: u32) -> Result<Reconstruction> {
    let t = triple_of_algebra(x, prec)?;
    let result = t.glue_ring(prec, degree_bound)?;
    let mut checks = result.checks.clone();
    let p = t.p.clone();
    let n = x.nvars();
    let fd = &t.factors[0];
    let mut with_pn = x.relations.generators().to_vec();
    with_pn.push(Poly::constant(n, arith::int(&arith::pow(&p, prec))));
    let cut = intersect(&Coeffs::Dvr(p.clone()), n, fd.sat.generators(), &with_pn);
    if !IdealPresentation::new(x.ring().clone(), cut)?.same_ideal(&x.relations)? {
        return Err(GlueError::VerificationFailed {
            check: format!("X -> D injective at precision {prec}"),
            witness: "I_sat ∩ (I + p^N) is larger than I".into(),
        });
    }
    checks.push(format!("X -> D injective at precision {prec}"));
    for d in 1..=degree_bound {
        let (std, dl) = t.d_lattice(d)?;
        let rows: Mat = monomials_up_to(n, d)
            .into_iter()
            .map(|m| t.a_vec(&Poly::monomial(m, Q::one()), &std))
            .collect::<Result<_>>()?;
        let xl = Lattice::new(&p, std.len(), rows);
        if !xl.same(&dl) {
            return Err(GlueError::VerificationFailed {
                check: format!("X = D in degree <= {d}"),
                witness: "degree pieces differ".into(),
            });
        }
    }
    checks.push(format!("X = D degreewise for d <= {degree_bound}"));
    Ok(Reconstruction { result, checks })
}
