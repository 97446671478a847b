//! Finitely presented modules and Beauville-Laszlo gluing at the affine level.
//!
//! A module is `A^m / (relation columns + I * A^m)` where `I` is the relation
//! ideal of the ring. The completion side `B` is represented by the same
//! polynomial ring over `R`, known modulo `pi^n`.
//!
//! Gluing a datum `(F, N, iota)` with `kappa = iota^-1` produces generators
//! `(kappa(n_k), n_k)` and relations `S ∩ (Rel_N + pi^n)`, where
//! `S = {a : kappa(a) = 0 in F}`. The answer is certified when `pi^(n-1) S`
//! lies in the result: then every exact lift of `N` consistent with the
//! datum gives the same module.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::arith::{self, Q};
use crate::error::{GlueError, Result};
use crate::gb::{Coeffs, Engine, Term, Vector};
use crate::ideal::{primitive_part, AffineAlgebra, IdealPresentation, Regime};
use crate::linalg::{smith, Mat};
use crate::poly::{MonomialOrder, Poly};

/// A column vector of ring elements.
pub type Column = Vec<Poly>;

// ---------- submodule arithmetic ----------

fn vec_at(engine: &Engine, col: &[Poly], offset: usize) -> Vector {
    let mut all = Vec::new();
    for (i, f) in col.iter().enumerate() {
        all.extend(f.terms().map(|(m, c)| (Term { pos: offset + i, mono: m.clone() }, c.clone())));
    }
    engine.normalize(all)
}

fn unit_col(nvars: usize, rank: usize, k: usize, f: &Poly) -> Column {
    (0..rank).map(|i| if i == k { f.clone() } else { Poly::zero(nvars) }).collect()
}

/// The columns together with `s * e_k` for every scalar `s` and position `k`.
fn with_scalars(nvars: usize, rank: usize, cols: &[Column], scalars: &[Poly]) -> Vec<Column> {
    let mut out = cols.to_vec();
    for s in scalars {
        for k in 0..rank {
            out.push(unit_col(nvars, rank, k, s));
        }
    }
    out
}

/// A submodule of `K^rank` with its Gröbner basis.
#[derive(Clone, Debug)]
pub struct Submodule {
    pub engine: Engine,
    pub rank: usize,
    pub basis: Vec<Vector>,
}

impl Submodule {
    pub fn new(coeffs: Coeffs, nvars: usize, rank: usize, cols: &[Column]) -> Self {
        let engine = Engine::new(coeffs, MonomialOrder::DegLex, nvars);
        let gens: Vec<Vector> = cols.iter().map(|c| vec_at(&engine, c, 0)).collect();
        let basis = engine.groebner(&gens);
        Submodule { engine, rank, basis }
    }

    pub fn reduce(&self, col: &[Poly]) -> Column {
        let r = self.engine.reduce(vec_at(&self.engine, col, 0), &self.basis);
        self.engine.to_rows(&r, self.rank)
    }

    pub fn contains(&self, col: &[Poly]) -> bool {
        self.engine.is_zero_mod(vec_at(&self.engine, col, 0), &self.basis)
    }

    pub fn contains_all(&self, cols: &[Column]) -> bool {
        cols.iter().all(|c| self.contains(c))
    }

    pub fn columns(&self) -> Vec<Column> {
        self.basis.iter().map(|v| self.engine.to_rows(v, self.rank)).collect()
    }
}

/// `U ∩ W` in `K^rank`, by eliminating the first block of `{(u; u), (w; 0)}`.
pub fn intersect_modules(coeffs: &Coeffs, nvars: usize, rank: usize, u: &[Column], w: &[Column]) -> Vec<Column> {
    let engine = Engine::new(coeffs.clone(), MonomialOrder::DegLex, nvars);
    let mut gens = Vec::new();
    for c in u {
        let mut v = vec_at(&engine, c, 0);
        v.extend(vec_at(&engine, c, rank));
        gens.push(engine.normalize(v));
    }
    for c in w {
        gens.push(vec_at(&engine, c, 0));
    }
    let basis = engine.groebner(&gens);
    keep_block(&engine, &basis, rank, rank)
}

fn keep_block(engine: &Engine, basis: &[Vector], skip: usize, rank: usize) -> Vec<Column> {
    basis
        .iter()
        .filter(|v| v[0].0.pos >= skip)
        .map(|v| {
            let shifted: Vector = v.iter().map(|(t, c)| (Term { pos: t.pos - skip, mono: t.mono.clone() }, c.clone())).collect();
            engine.to_rows(&shifted, rank)
        })
        .collect()
}

/// `{a in K^m : sum a_k images_k in span(target)}` for images in `K^r`.
pub fn kernel_into(coeffs: &Coeffs, nvars: usize, r: usize, images: &[Column], target: &[Column]) -> Vec<Column> {
    let m = images.len();
    let engine = Engine::new(coeffs.clone(), MonomialOrder::DegLex, nvars);
    let mut gens = Vec::new();
    for (k, img) in images.iter().enumerate() {
        let mut v = vec_at(&engine, img, 0);
        v.push((Term { pos: r + k, mono: vec![0; nvars] }, Q::one()));
        gens.push(engine.normalize(v));
    }
    for t in target {
        gens.push(vec_at(&engine, t, 0));
    }
    let basis = engine.groebner(&gens);
    keep_block(&engine, &basis, r, m)
}

/// `(U : p^inf)` in `Z_(p)[x]^rank`, via `U + (1 - p*s) * e_k` and elimination of `s`.
pub fn saturate_module(p: &BigInt, nvars: usize, rank: usize, cols: &[Column]) -> Vec<Column> {
    let n = nvars + 1;
    let engine = Engine::new(Coeffs::Dvr(p.clone()), MonomialOrder::Elim(1), n);
    let shift: Vec<usize> = (1..n).collect();
    let mut gens: Vec<Vector> =
        cols.iter().map(|c| vec_at(&engine, &c.iter().map(|f| f.embed(n, &shift)).collect::<Vec<_>>(), 0)).collect();
    let mut helper = Poly::one(n);
    let mut s = vec![0; n];
    s[0] = 1;
    helper.add_term(s, -arith::int(p));
    for k in 0..rank {
        gens.push(vec_at(&engine, &unit_col(n, rank, k, &helper), 0));
    }
    let basis = engine.groebner(&gens);
    let keep: Vec<Option<usize>> = (0..n).map(|i| if i == 0 { None } else { Some(i - 1) }).collect();
    basis
        .iter()
        .filter(|v| v[0].0.mono[0] == 0)
        .map(|v| engine.to_rows(v, rank).iter().map(|f| f.restrict(nvars, &keep).expect("s-free element")).collect())
        .collect()
}

/// `(U : p^n) = (U ∩ p^n K^rank) / p^n`.
pub fn colon_power(p: &BigInt, nvars: usize, rank: usize, cols: &[Column], n: u32) -> Vec<Column> {
    if n == 0 {
        return cols.to_vec();
    }
    let pn = arith::int(&arith::pow(p, n));
    let scaled = with_scalars(nvars, rank, &[], &[Poly::constant(nvars, pn.clone())]);
    let cut = intersect_modules(&Coeffs::Dvr(p.clone()), nvars, rank, cols, &scaled);
    let inv = Q::one() / pn;
    cut.iter().map(|c| c.iter().map(|f| f.scale(&inv)).collect()).collect()
}

fn apply_matrix(nvars: usize, mat: &[Column], a: &[Poly]) -> Column {
    // mat is a list of columns; returns sum a_k * mat_k
    let rows = mat.first().map(|c| c.len()).unwrap_or(0);
    let mut out = vec![Poly::zero(nvars); rows];
    for (k, col) in mat.iter().enumerate() {
        if a[k].is_zero() {
            continue;
        }
        for (i, e) in col.iter().enumerate() {
            out[i] = &out[i] + &(&a[k] * e);
        }
    }
    out
}

fn sub_cols(a: &[Poly], b: &[Poly]) -> Column {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

// ---------- presentations ----------

/// `ring^n_gens / (relations)`, the relations given as columns.
#[derive(Clone, Debug)]
pub struct ModulePresentation {
    pub ring: AffineAlgebra,
    pub n_gens: usize,
    pub relations: Vec<Column>,
    /// For completion-side modules: the presentation is asserted modulo `pi^n`.
    pub precision: Option<u32>,
}

impl ModulePresentation {
    pub fn new(ring: AffineAlgebra, n_gens: usize, relations: Vec<Column>) -> Result<Self> {
        let mut rels = Vec::new();
        for col in relations {
            if col.len() != n_gens {
                return Err(GlueError::Invalid(format!("relation has {} entries, expected {n_gens}", col.len())));
            }
            let col: Column = col.iter().map(|f| ring.reduce(f)).collect::<Result<_>>()?;
            if col.iter().any(|f| !f.is_zero()) {
                rels.push(col);
            }
        }
        Ok(ModulePresentation { ring, n_gens, relations: rels, precision: None })
    }

    pub fn free(ring: AffineAlgebra, n: usize) -> Self {
        ModulePresentation { ring, n_gens: n, relations: vec![], precision: None }
    }

    pub fn with_precision(mut self, n: u32) -> Self {
        self.precision = Some(n);
        self
    }

    pub fn nvars(&self) -> usize {
        self.ring.nvars()
    }

    fn coeffs(&self) -> Result<Coeffs> {
        match self.ring.regime() {
            Regime::OverRInvPi => Ok(Coeffs::Field),
            _ => Ok(Coeffs::Dvr(self.ring.base().prime()?.clone())),
        }
    }

    fn scalars(&self) -> Result<Vec<Poly>> {
        let mut s = self.ring.relations.generators().to_vec();
        if let Regime::OverRModPiN(n) = self.ring.regime() {
            s.push(Poly::constant(self.nvars(), arith::int(&arith::pow(self.ring.base().prime()?, n))));
        }
        Ok(s)
    }

    /// All relations including `I * e_k` (and `pi^N * e_k` in truncated regimes).
    pub fn all_relations(&self) -> Result<Vec<Column>> {
        Ok(with_scalars(self.nvars(), self.n_gens, &self.relations, &self.scalars()?))
    }

    pub fn relation_module(&self) -> Result<Submodule> {
        Ok(Submodule::new(self.coeffs()?, self.nvars(), self.n_gens, &self.all_relations()?))
    }

    /// The same presentation over another coefficient regime.
    pub fn in_regime(&self, regime: Regime) -> Result<Self> {
        let ring = self.ring.in_regime(regime)?;
        let mut m = ModulePresentation::new(ring, self.n_gens, self.relations.clone())?;
        m.precision = self.precision;
        Ok(m)
    }

    pub fn display(&self) -> String {
        let mut s = format!("gens {};", self.n_gens);
        if self.relations.is_empty() {
            s.push_str(" rels none;");
        }
        for r in &self.relations {
            let entries: Vec<String> = r.iter().map(|f| self.ring.display(f)).collect();
            s.push_str(&format!(" rel [{}];", entries.join(", ")));
        }
        s
    }
}

impl fmt::Display for ModulePresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

/// Images of the generators of one module in another, in both directions.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoCertificate {
    /// Column `k`: the image of generator `k` of the source, in target coordinates.
    pub forward: Vec<Column>,
    pub backward: Vec<Column>,
}

impl IsoCertificate {
    pub fn identity(nvars: usize, n: usize) -> Self {
        let id: Vec<Column> = (0..n).map(|k| unit_col(nvars, n, k, &Poly::one(nvars))).collect();
        IsoCertificate { forward: id.clone(), backward: id }
    }

    /// `self` from `M1` to `M2`, then `next` from `M2` to `M3`.
    pub fn then(&self, next: &IsoCertificate, nvars: usize) -> Self {
        IsoCertificate {
            forward: self.forward.iter().map(|c| apply_matrix(nvars, &next.forward, c)).collect(),
            backward: next.backward.iter().map(|c| apply_matrix(nvars, &self.backward, c)).collect(),
        }
    }
}

fn check_hom(src: &ModulePresentation, dst_rel: &Submodule, images: &[Column]) -> Result<bool> {
    let nv = src.nvars();
    for rel in src.all_relations()? {
        if !dst_rel.contains(&apply_matrix(nv, images, &rel)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verifies that the certificate gives mutually inverse module maps, exactly.
pub fn check_iso(m1: &ModulePresentation, m2: &ModulePresentation, cert: &IsoCertificate) -> Result<bool> {
    if cert.forward.len() != m1.n_gens
        || cert.backward.len() != m2.n_gens
        || cert.forward.iter().any(|c| c.len() != m2.n_gens)
        || cert.backward.iter().any(|c| c.len() != m1.n_gens)
    {
        return Ok(false);
    }
    let nv = m1.nvars();
    let r1 = m1.relation_module()?;
    let r2 = m2.relation_module()?;
    if !check_hom(m1, &r2, &cert.forward)? || !check_hom(m2, &r1, &cert.backward)? {
        return Ok(false);
    }
    for k in 0..m1.n_gens {
        let back = apply_matrix(nv, &cert.backward, &cert.forward[k]);
        if !r1.contains(&sub_cols(&back, &unit_col(nv, m1.n_gens, k, &Poly::one(nv)))) {
            return Ok(false);
        }
    }
    for k in 0..m2.n_gens {
        let fwd = apply_matrix(nv, &cert.forward, &cert.backward[k]);
        if !r2.contains(&sub_cols(&fwd, &unit_col(nv, m2.n_gens, k, &Poly::one(nv)))) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Invariants of a module over `Z_(p)`: free rank and torsion exponents (ascending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZpInvariants {
    pub free_rank: usize,
    pub torsion: Vec<u32>,
}

impl fmt::Display for ZpInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.torsion.iter().map(|e| format!("Z/p^{e}")).collect();
        if self.free_rank > 0 {
            parts.push(if self.free_rank == 1 { "Z_(p)".into() } else { format!("Z_(p)^{}", self.free_rank) });
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// Diagonalizes a presentation over `Z_(p)` and returns the invariants with
/// a certificate to the canonical presentation `(torsion gens, then free gens)`.
pub fn zp_normal_form(m: &ModulePresentation) -> Result<(ZpInvariants, ModulePresentation, IsoCertificate)> {
    if m.nvars() != 0 || m.ring.regime() != Regime::OverR {
        return Err(GlueError::UnsupportedRegime("diagonalization needs modules over Z_(p)".into()));
    }
    let p = m.ring.base().prime()?.clone();
    let rels = m.all_relations()?;
    let n = m.n_gens;
    let a: Mat = (0..n).map(|k| rels.iter().map(|c| c[k].constant_term()).collect()).collect();
    let s = smith(&p, &a, rels.len());
    let mut torsion: Vec<(u32, usize)> = Vec::new();
    let mut free = Vec::new();
    for i in 0..n {
        if i < s.rank {
            let e = arith::val(&s.diag[i], &p).expect("nonzero pivot") as u32;
            if e > 0 {
                torsion.push((e, i));
            }
        } else {
            free.push(i);
        }
    }
    torsion.sort();
    let kept: Vec<usize> = torsion.iter().map(|(_, i)| *i).chain(free.iter().copied()).collect();
    let c = |q: &Q| Poly::constant(0, q.clone());
    // generator e_k of M maps to U e_k; keep the surviving coordinates
    let forward: Vec<Column> = (0..n).map(|k| kept.iter().map(|&i| c(&s.u[i][k])).collect()).collect();
    let backward: Vec<Column> = kept.iter().map(|&i| (0..n).map(|k| c(&s.u_inv[k][i])).collect()).collect();
    let canon_rels: Vec<Column> = torsion
        .iter()
        .enumerate()
        .map(|(j, (e, _))| unit_col(0, kept.len(), j, &Poly::constant(0, arith::p_power(&p, *e as i64))))
        .collect();
    let canon = ModulePresentation::new(m.ring.clone(), kept.len(), canon_rels)?;
    let inv = ZpInvariants { free_rank: free.len(), torsion: torsion.iter().map(|(e, _)| *e).collect() };
    Ok((inv, canon, IsoCertificate { forward, backward }))
}

/// An isomorphism between two modules over `Z_(p)` if their invariants agree.
pub fn zp_isomorphism(m1: &ModulePresentation, m2: &ModulePresentation) -> Result<Option<IsoCertificate>> {
    let (i1, _, c1) = zp_normal_form(m1)?;
    let (i2, _, c2) = zp_normal_form(m2)?;
    if i1 != i2 {
        return Ok(None);
    }
    let back = IsoCertificate { forward: c2.backward, backward: c2.forward };
    Ok(Some(c1.then(&back, 0)))
}

// ---------- gluing data ----------

/// `(F, N, iota)` with `iota: F ⊗ C -> N ⊗ C` and its inverse `kappa`.
#[derive(Clone, Debug)]
pub struct ModuleGluingDatum {
    /// Over `A[1/pi]`.
    pub f: ModulePresentation,
    /// Over `B`, with exact relation lifts, asserted modulo `pi^prec`.
    pub nmod: ModulePresentation,
    /// Column `i`: `iota(f_i)` in `C^{n_gens(N)}`.
    pub iota: Vec<Column>,
    /// Column `k`: `kappa(n_k)` in `C^{n_gens(F)}`.
    pub iota_inv: Vec<Column>,
    pub prec: u32,
}

/// `F = M[1/pi]`, `N = M mod pi^prec`, `iota = id`.
pub fn triple_of_module(m: &ModulePresentation, prec: u32) -> Result<ModuleGluingDatum> {
    if m.ring.regime() != Regime::OverR {
        return Err(GlueError::RegimeMismatch("modules to decompose must be over R".into()));
    }
    let f = m.in_regime(Regime::OverRInvPi)?;
    let nmod = m.clone().with_precision(prec);
    let id = IsoCertificate::identity(m.nvars(), m.n_gens);
    Ok(ModuleGluingDatum { f, nmod, iota: id.forward, iota_inv: id.backward, prec })
}

/// Block sum of two data over the same rings.
pub fn direct_sum(d1: &ModuleGluingDatum, d2: &ModuleGluingDatum) -> Result<ModuleGluingDatum> {
    let nv = d1.f.nvars();
    let sum = |a: &ModulePresentation, b: &ModulePresentation| -> Result<ModulePresentation> {
        let n = a.n_gens + b.n_gens;
        let mut rels = Vec::new();
        for r in &a.relations {
            let mut c = r.clone();
            c.extend((0..b.n_gens).map(|_| Poly::zero(nv)));
            rels.push(c);
        }
        for r in &b.relations {
            let mut c: Column = (0..a.n_gens).map(|_| Poly::zero(nv)).collect();
            c.extend(r.iter().cloned());
            rels.push(c);
        }
        let mut m = ModulePresentation::new(a.ring.clone(), n, rels)?;
        m.precision = a.precision;
        Ok(m)
    };
    let block = |x: &[Column], xr: usize, y: &[Column], yr: usize| -> Vec<Column> {
        let mut out = Vec::new();
        for c in x {
            let mut v = c.clone();
            v.extend((0..yr).map(|_| Poly::zero(nv)));
            out.push(v);
        }
        for c in y {
            let mut v: Column = (0..xr).map(|_| Poly::zero(nv)).collect();
            v.extend(c.iter().cloned());
            out.push(v);
        }
        out
    };
    Ok(ModuleGluingDatum {
        f: sum(&d1.f, &d2.f)?,
        nmod: sum(&d1.nmod, &d2.nmod)?,
        iota: block(&d1.iota, d1.nmod.n_gens, &d2.iota, d2.nmod.n_gens),
        iota_inv: block(&d1.iota_inv, d1.f.n_gens, &d2.iota_inv, d2.f.n_gens),
        prec: d1.prec.min(d2.prec),
    })
}

/// The glued module with its pair generators.
#[derive(Clone, Debug)]
pub struct GluedModule {
    pub module: ModulePresentation,
    /// Generator `k` is the pair `(kappa(n_k), n_k)`; this is the `F` component.
    pub f_part: Vec<Column>,
    /// Exponent `e` with `pi^e` killing the torsion of the result.
    pub torsion_exponent: u32,
    pub precision: u32,
}

fn residual_fails(
    coeffs_field: &Submodule,
    integral: &[Column],
    rank: usize,
    nvars: usize,
    p: &BigInt,
    prec: u32,
    residual: &[Poly],
) -> Option<bool> {
    // None: holds exactly; Some(true): holds only modulo p^prec; Some(false): fails
    if coeffs_field.contains(residual) {
        return None;
    }
    if residual.iter().all(|f| f.is_integral(p)) {
        let pn = Poly::constant(nvars, arith::int(&arith::pow(p, prec)));
        let lattice = with_scalars(nvars, rank, integral, &[pn]);
        if Submodule::new(Coeffs::Dvr(p.clone()), nvars, rank, &lattice).contains(residual) {
            return Some(true);
        }
    }
    Some(false)
}

/// Checks the datum invariants: `iota` and `kappa` carry relations to
/// relations and are mutually inverse, exactly over `C`.
pub fn check_datum(d: &ModuleGluingDatum) -> Result<()> {
    let nv = d.f.nvars();
    let p = d.nmod.ring.base().prime()?.clone();
    let (r, m) = (d.f.n_gens, d.nmod.n_gens);
    if d.iota.len() != r || d.iota.iter().any(|c| c.len() != m) || d.iota_inv.len() != m || d.iota_inv.iter().any(|c| c.len() != r)
    {
        return Err(GlueError::IncompatibleDatum("iota has the wrong shape".into()));
    }
    if d.prec == 0 {
        return Err(GlueError::Invalid("gluing precision must be at least 1".into()));
    }
    let rel_f = d.f.all_relations()?;
    let rel_n = d.nmod.in_regime(Regime::OverR)?.all_relations()?;
    let integral = |cols: &[Column]| -> Vec<Column> {
        cols.iter()
            .map(|c| {
                let flat = Poly::from_terms(
                    nv + 1,
                    c.iter().enumerate().flat_map(|(i, f)| {
                        f.terms().map(move |(mono, q)| {
                            let mut mm = mono.clone();
                            mm.push(i as u32);
                            (mm, q.clone())
                        })
                    }),
                );
                let scale = primitive_part(&flat, &p);
                let factor = if flat.is_zero() { Q::one() } else { scale.terms().next().unwrap().1 / flat.terms().next().unwrap().1 };
                c.iter().map(|f| f.scale(&factor)).collect()
            })
            .collect()
    };
    let f_sub = Submodule::new(Coeffs::Field, nv, r, &rel_f);
    let n_sub = Submodule::new(Coeffs::Field, nv, m, &rel_n);
    let (f_int, n_int) = (integral(&rel_f), integral(&rel_n));
    let mut only_at_precision = false;
    let mut judge = |sub: &Submodule, int: &[Column], rank: usize, res: &[Poly], what: &str| -> Result<()> {
        match residual_fails(sub, int, rank, nv, &p, d.prec, res) {
            None => Ok(()),
            Some(true) => {
                only_at_precision = true;
                Ok(())
            }
            Some(false) => Err(GlueError::IncompatibleDatum(what.to_string())),
        }
    };
    for rel in &rel_f {
        judge(&n_sub, &n_int, m, &apply_matrix(nv, &d.iota, rel), "iota does not carry the relations of F into those of N")?;
    }
    for rel in &rel_n {
        judge(&f_sub, &f_int, r, &apply_matrix(nv, &d.iota_inv, rel), "iota^-1 does not carry the relations of N into those of F")?;
    }
    for i in 0..r {
        let back = apply_matrix(nv, &d.iota_inv, &d.iota[i]);
        judge(&f_sub, &f_int, r, &sub_cols(&back, &unit_col(nv, r, i, &Poly::one(nv))), "iota^-1 iota is not the identity")?;
    }
    for k in 0..m {
        let fwd = apply_matrix(nv, &d.iota, &d.iota_inv[k]);
        judge(&n_sub, &n_int, m, &sub_cols(&fwd, &unit_col(nv, m, k, &Poly::one(nv))), "iota iota^-1 is not the identity")?;
    }
    if only_at_precision {
        return Err(GlueError::PrecisionLoss(format!(
            "the datum is compatible only modulo pi^{}; an exact gluing isomorphism is needed",
            d.prec
        )));
    }
    Ok(())
}

/// Glues `(F, N, iota)` into a finitely presented module over `A`.
pub fn glue_module(d: &ModuleGluingDatum) -> Result<GluedModule> {
    check_datum(d)?;
    let nv = d.f.nvars();
    let p = d.nmod.ring.base().prime()?.clone();
    let (r, m) = (d.f.n_gens, d.nmod.n_gens);
    let a_ring = d.nmod.ring.in_regime(Regime::OverR)?;
    let dvr = Coeffs::Dvr(p.clone());

    // S = {a in A^m : kappa(a) = 0 in F}
    let rel_f = d.f.all_relations()?;
    let ker_q = kernel_into(&Coeffs::Field, nv, r, &d.iota_inv, &rel_f);
    let prim: Vec<Column> = ker_q
        .iter()
        .map(|c| {
            let den = c.iter().fold(BigInt::one(), |acc, f| {
                f.terms().fold(acc, |a, (_, q)| num_integer::Integer::lcm(&a, q.denom()))
            });
            c.iter().map(|f| f.scale(&arith::int(&den))).collect()
        })
        .collect();
    let ring_rels: Vec<Poly> = a_ring.relations.generators().to_vec();
    let s = saturate_module(&p, nv, m, &with_scalars(nv, m, &prim, &ring_rels));

    // T = Rel_N + pi^n
    let pn = Poly::constant(nv, arith::int(&arith::pow(&p, d.prec)));
    let mut scal = ring_rels.clone();
    scal.push(pn);
    let t = with_scalars(nv, m, &d.nmod.relations, &scal);
    let rel = intersect_modules(&dvr, nv, m, &s, &t);

    // certificate: pi^(n-1) S lies in the result
    let rel_sub = Submodule::new(dvr.clone(), nv, m, &rel);
    let mut exponent = 0;
    for e in 0..d.prec {
        let pe = arith::int(&arith::pow(&p, e));
        if s.iter().all(|c| rel_sub.contains(&c.iter().map(|f| f.scale(&pe)).collect::<Vec<_>>())) {
            exponent = e;
            break;
        }
        exponent = e + 1;
    }
    if exponent >= d.prec {
        return Err(GlueError::PrecisionLoss(format!(
            "torsion of the glued module is not certified below pi^{}; raise the precision",
            d.prec
        )));
    }
    let rels: Vec<Column> = rel_sub.columns();
    let module = ModulePresentation::new(a_ring, m, rels)?;
    Ok(GluedModule { module, f_part: d.iota_inv.clone(), torsion_exponent: exponent, precision: d.prec })
}

/// Round trip `M -> t(M) -> glue`, with the identity certificate checked exactly.
pub fn round_trip(m: &ModulePresentation, prec: u32) -> Result<(GluedModule, IsoCertificate)> {
    let glued = glue_module(&triple_of_module(m, prec)?)?;
    let cert = IsoCertificate::identity(m.nvars(), m.n_gens);
    if !check_iso(m, &glued.module, &cert)? {
        return Err(GlueError::VerificationFailed {
            check: "round trip".into(),
            witness: glued.module.display(),
        });
    }
    Ok((glued, cert))
}

/// Torsion exponent of `M`: the least `e` with `(Rel : p^e) = (Rel : p^inf)`, up to `cap`.
pub fn module_torsion_bound(m: &ModulePresentation, cap: u32) -> Result<(u32, Vec<Column>)> {
    let p = m.ring.base().prime()?.clone();
    let nv = m.nvars();
    let rels = m.all_relations()?;
    let sat = saturate_module(&p, nv, m.n_gens, &rels);
    let dvr = Coeffs::Dvr(p.clone());
    for e in 0..=cap {
        let colon = colon_power(&p, nv, m.n_gens, &rels, e);
        let sub = Submodule::new(dvr.clone(), nv, m.n_gens, &colon);
        if sub.contains_all(&sat) {
            return Ok((e, sat));
        }
    }
    Err(GlueError::CapExceeded { cap })
}

/// Results of the precision-level checks on a module.
#[derive(Clone, Debug)]
pub struct GlueableReport {
    pub levels_checked: Vec<u32>,
    pub torsion_bound: u32,
    /// Generators of the pi-power torsion, as columns not in the relation module.
    pub torsion_generators: Vec<Column>,
}

/// (3): the truncations form a tower; (4): torsion injects into every truncation past `N0`.
pub fn check_glueable(m: &ModulePresentation, prec: u32) -> Result<GlueableReport> {
    if m.ring.regime() != Regime::OverR {
        return Err(GlueError::RegimeMismatch("check_glueable needs a module over R".into()));
    }
    let p = m.ring.base().prime()?.clone();
    let nv = m.nvars();
    let dvr = Coeffs::Dvr(p.clone());
    let rels = m.all_relations()?;
    let level = |n: u32| {
        let pn = Poly::constant(nv, arith::int(&arith::pow(&p, n)));
        Submodule::new(dvr.clone(), nv, m.n_gens, &with_scalars(nv, m.n_gens, &rels, &[pn]))
    };
    let mut levels = Vec::new();
    let mut prev = level(1);
    for n in 1..=prec {
        let next = level(n + 1);
        // the level n+1 relations map into level n, and agree with it after adding pi^n
        let cols = next.columns();
        if !prev.contains_all(&cols) {
            return Err(GlueError::VerificationFailed { check: format!("tower at level {n}"), witness: String::new() });
        }
        levels.push(n);
        prev = next;
    }
    let (n0, sat) = module_torsion_bound(m, prec)?;
    let exact = Submodule::new(dvr.clone(), nv, m.n_gens, &rels);
    let torsion: Vec<Column> = sat.iter().filter(|c| !exact.contains(c)).cloned().collect();
    for n in n0.max(1)..=prec {
        let pn = Poly::constant(nv, arith::int(&arith::pow(&p, n)));
        let trunc = with_scalars(nv, m.n_gens, &rels, &[pn]);
        let meet = intersect_modules(&dvr, nv, m.n_gens, &sat, &trunc);
        if !exact.contains_all(&meet) {
            return Err(GlueError::VerificationFailed {
                check: format!("torsion injectivity at level {n}"),
                witness: "torsion element divisible by pi^n".into(),
            });
        }
    }
    Ok(GlueableReport { levels_checked: levels, torsion_bound: n0, torsion_generators: torsion })
}

// ---------- vector bundles ----------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BundleVerdict {
    Projective { rank: usize },
    NotProjective(String),
    Inconclusive(String),
}

fn det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    let nv = m.first().and_then(|r| r.first()).map(|f| f.nvars()).unwrap_or(0);
    if n == 0 {
        return Poly::one(nv);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut out = Poly::zero(nv);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Poly>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, f)| f.clone()).collect()).collect();
        let term = &m[0][j] * &det(&minor);
        out = if j % 2 == 0 { &out + &term } else { &out - &term };
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Generators of the `k`-th Fitting ideal (the `(n_gens - k)`-minors of the presentation).
pub fn fitting_ideal(m: &ModulePresentation, k: usize) -> Vec<Poly> {
    let nv = m.nvars();
    if k >= m.n_gens {
        return vec![Poly::one(nv)];
    }
    let size = m.n_gens - k;
    let cols = &m.relations;
    let mut out = Vec::new();
    for rows in subsets(m.n_gens, size) {
        for cs in subsets(cols.len(), size) {
            let mat: Vec<Vec<Poly>> = rows.iter().map(|&r| cs.iter().map(|&c| cols[c][r].clone()).collect()).collect();
            let d = det(&mat);
            if !d.is_zero() {
                out.push(d);
            }
        }
    }
    out
}

/// Whether the glued module is projective: `F` locally free of constant rank
/// over `A[1/pi]` and `N` locally free of the same rank over `B`.
pub fn is_vector_bundle_glued(d: &ModuleGluingDatum) -> Result<BundleVerdict> {
    check_datum(d)?;
    let p = d.nmod.ring.base().prime()?.clone();
    let ideal_over = |m: &ModulePresentation, k: usize, regime: Regime, extra: Vec<Poly>| -> Result<IdealPresentation> {
        let ring = m.ring.ring().with_regime(regime);
        let mut gens = m.ring.relations.generators().to_vec();
        gens.extend(fitting_ideal(m, k));
        gens.extend(extra);
        IdealPresentation::new(ring, gens)
    };
    let zero_ideal = |m: &ModulePresentation, regime: Regime| -> Result<IdealPresentation> {
        IdealPresentation::new(m.ring.ring().with_regime(regime), m.ring.relations.generators().to_vec())
    };
    // F over A[1/pi]
    let f = &d.f;
    let rank_f = (0..=f.n_gens).find(|&k| ideal_over(f, k, Regime::OverRInvPi, vec![]).and_then(|i| i.is_unit()).unwrap_or(false));
    let rank_f = rank_f.expect("Fitt_n is the unit ideal");
    if rank_f > 0 {
        let below = ideal_over(f, rank_f - 1, Regime::OverRInvPi, vec![])?;
        if !zero_ideal(f, Regime::OverRInvPi)?.contains_ideal(&below)? {
            return Ok(BundleVerdict::NotProjective("F is not locally free of constant rank".into()));
        }
    }
    // N over B: unit ideals are detected modulo pi, zero ideals exactly
    let n = d.nmod.in_regime(Regime::OverR)?;
    let pi = Poly::constant(n.nvars(), arith::int(&p));
    let rank_n = (0..=n.n_gens)
        .find(|&k| ideal_over(&n, k, Regime::OverR, vec![pi.clone()]).and_then(|i| i.is_unit()).unwrap_or(false))
        .expect("Fitt_n is the unit ideal");
    if rank_n > 0 {
        let below = ideal_over(&n, rank_n - 1, Regime::OverR, vec![])?;
        if !zero_ideal(&n, Regime::OverR)?.contains_ideal(&below)? {
            let trunc = zero_ideal(&n, Regime::OverRModPiN(d.prec))?;
            let below_t = below.in_regime(Regime::OverRModPiN(d.prec))?;
            if trunc.contains_ideal(&below_t)? {
                return Ok(BundleVerdict::Inconclusive(format!(
                    "Fitting ideal vanishes modulo pi^{} but not exactly",
                    d.prec
                )));
            }
            return Ok(BundleVerdict::NotProjective("N has torsion".into()));
        }
    }
    if rank_n != rank_f {
        return Ok(BundleVerdict::NotProjective(format!("rank {rank_f} on the generic fiber, {rank_n} on the completion")));
    }
    Ok(BundleVerdict::Projective { rank: rank_f })
}

// ---------- presentation moves ----------

/// Elementary moves between presentations of the same module.
#[derive(Clone, Debug)]
pub enum Move {
    /// Append the relation `sum c_j rel_j`.
    AddRelation(Vec<Poly>),
    /// Append a generator `g = sum e_k gen_k` with its defining relation.
    AddGenerator(Column),
}

/// Applies a move script and returns the new presentation with a certificate from the old one.
pub fn apply_moves(m: &ModulePresentation, moves: &[Move]) -> Result<(ModulePresentation, IsoCertificate)> {
    let nv = m.nvars();
    let mut cur = m.clone();
    let mut cert = IsoCertificate::identity(nv, m.n_gens);
    for mv in moves {
        match mv {
            Move::AddRelation(coeffs) => {
                let mut rel = vec![Poly::zero(nv); cur.n_gens];
                for (c, r) in coeffs.iter().zip(&cur.relations) {
                    for (i, e) in r.iter().enumerate() {
                        rel[i] = &rel[i] + &(c * e);
                    }
                }
                let mut rels = cur.relations.clone();
                rels.push(rel);
                let mut next = ModulePresentation::new(cur.ring.clone(), cur.n_gens, rels)?;
                next.precision = cur.precision;
                cur = next;
            }
            Move::AddGenerator(expr) => {
                let n = cur.n_gens;
                let pad = |c: &Column| {
                    let mut v = c.clone();
                    v.push(Poly::zero(nv));
                    v
                };
                let mut rels: Vec<Column> = cur.relations.iter().map(pad).collect();
                let mut def: Column = expr.iter().map(|f| -f).collect();
                def.push(Poly::one(nv));
                rels.push(def);
                let mut next = ModulePresentation::new(cur.ring.clone(), n + 1, rels)?;
                next.precision = cur.precision;
                let mut backward: Vec<Column> = (0..n).map(|k| unit_col(nv, n, k, &Poly::one(nv))).collect();
                backward.push(expr.clone());
                let step = IsoCertificate {
                    forward: (0..n).map(|k| unit_col(nv, n + 1, k, &Poly::one(nv))).collect(),
                    backward,
                };
                cert = cert.then(&step, nv);
                cur = next;
            }
        }
    }
    Ok((cur, cert))
}

// ---------- random family ----------

/// A seeded random module of rank `1..=3` over `Z_(p)` (`with_x = false`) or
/// `Z_(p)[x]`, with up to three relations whose entries have degree `<= 2`
/// and integer coefficients of absolute value `<= p^2`.
pub fn random_module(base: &crate::base::BasePair, seed: u64, with_x: bool) -> Result<ModulePresentation> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let p = base.prime()?;
    let h: i64 = num_traits::ToPrimitive::to_i64(&(p * p)).unwrap_or(i64::MAX);
    let vars: &[&str] = if with_x { &["x"] } else { &[] };
    let ring = AffineAlgebra::new(crate::ideal::PolyRing::new(base.clone(), Regime::OverR, vars), vec![])?;
    let nv = vars.len();
    let rank = rng.gen_range(1..=3);
    let nrels = rng.gen_range(0..=3);
    let mut rels = Vec::new();
    for _ in 0..nrels {
        let col: Column = (0..rank)
            .map(|_| {
                if rng.gen_bool(0.35) {
                    return Poly::zero(nv);
                }
                let deg = if with_x { rng.gen_range(0..=2) } else { 0 };
                Poly::from_terms(
                    nv,
                    (0..=deg).map(|d| {
                        let c = rng.gen_range(-h..=h);
                        (if with_x { vec![d] } else { vec![] }, Q::from_integer(c.into()))
                    }),
                )
            })
            .collect();
        rels.push(col);
    }
    ModulePresentation::new(ring, rank, rels)
}

/// Round trips a batch at precision `max(8, N0 + 1)` per module, in parallel when enabled.
pub fn round_trip_batch(mods: &[ModulePresentation]) -> Vec<Result<(GluedModule, IsoCertificate)>> {
    crate::par::map(mods, round_trip_auto)
}

/// Round trip at precision `max(8, N0 + 1)`.
pub fn round_trip_auto(m: &ModulePresentation) -> Result<(GluedModule, IsoCertificate)> {
    let (n0, _) = module_torsion_bound(m, 64)?;
    round_trip(m, (n0 + 1).max(8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;
    use crate::base::BasePair;
    use crate::ideal::PolyRing;

    fn zp(regime: Regime) -> AffineAlgebra {
        AffineAlgebra::new(PolyRing::new(BasePair::arithmetic(5).unwrap(), regime, &[]), vec![]).unwrap()
    }

    fn k(v: i64) -> Poly {
        Poly::constant(0, q(v))
    }

    #[test]
    fn free_rank_one_round_trip() {
        let m = ModulePresentation::free(zp(Regime::OverR), 1);
        let (g, _) = round_trip(&m, 8).unwrap();
        assert!(g.module.relations.is_empty());
    }

    #[test]
    fn torsion_datum() {
        let f = ModulePresentation::new(zp(Regime::OverRInvPi), 0, vec![]).unwrap();
        let n = ModulePresentation::new(zp(Regime::OverR), 1, vec![vec![k(25)]]).unwrap().with_precision(8);
        let d = ModuleGluingDatum { f, nmod: n, iota: vec![], iota_inv: vec![vec![]], prec: 8 };
        let g = glue_module(&d).unwrap();
        let (inv, _, _) = zp_normal_form(&g.module).unwrap();
        assert_eq!(inv, ZpInvariants { free_rank: 0, torsion: vec![2] });
        assert_eq!(is_vector_bundle_glued(&d).unwrap(), BundleVerdict::NotProjective("N has torsion".into()));
        let low = ModuleGluingDatum { prec: 2, ..d };
        assert!(matches!(glue_module(&low), Err(GlueError::PrecisionLoss(_))));
    }

    #[test]
    fn lattice_twist() {
        let f = ModulePresentation::free(zp(Regime::OverRInvPi), 1);
        let n = ModulePresentation::free(zp(Regime::OverR), 1).with_precision(8);
        let d = ModuleGluingDatum {
            f,
            nmod: n,
            iota: vec![vec![k(5)]],
            iota_inv: vec![vec![Poly::constant(0, arith::q_frac(1, 5))]],
            prec: 8,
        };
        let g = glue_module(&d).unwrap();
        let (inv, _, _) = zp_normal_form(&g.module).unwrap();
        assert_eq!(inv, ZpInvariants { free_rank: 1, torsion: vec![] });
        assert_eq!(g.f_part[0][0], Poly::constant(0, arith::q_frac(1, 5)));
        assert_eq!(is_vector_bundle_glued(&d).unwrap(), BundleVerdict::Projective { rank: 1 });
    }

    #[test]
    fn incompatible_iota() {
        let f = ModulePresentation::free(zp(Regime::OverRInvPi), 1);
        let n = ModulePresentation::free(zp(Regime::OverR), 1).with_precision(4);
        let d = ModuleGluingDatum { f, nmod: n, iota: vec![vec![k(2)]], iota_inv: vec![vec![k(3)]], prec: 4 };
        assert!(matches!(glue_module(&d), Err(GlueError::IncompatibleDatum(_))));
        // 1 + p^4 is inverse to 1 only modulo p^4
        let d2 = ModuleGluingDatum { iota: vec![vec![k(1)]], iota_inv: vec![vec![k(626)]], ..d };
        assert!(matches!(glue_module(&d2), Err(GlueError::PrecisionLoss(_))));
    }

    #[test]
    fn fitting_minors() {
        let m = ModulePresentation::new(zp(Regime::OverR), 2, vec![vec![k(5), k(0)], vec![k(0), k(25)]]).unwrap();
        assert_eq!(fitting_ideal(&m, 0), vec![k(125)]);
        assert_eq!(fitting_ideal(&m, 2), vec![k(1)]);
    }
}
