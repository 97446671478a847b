//! Buchberger's algorithm over module terms, for coefficients in the rationals
//! or in the integers localized at a prime.
//!
//! Over the local ring the engine computes *strong* Gröbner bases: a term
//! `c*m` is reducible by `g` when `lm(g) | m` and `v(lc(g)) <= v(c)`. Since
//! the ideals of a discrete valuation ring are totally ordered, S-polynomials
//! suffice (the gcd-polynomial of a pair always reduces to zero by one of the
//! pair). Partially reducible terms are replaced by their canonical residue
//! modulo `p^k`, which makes normal forms unique.
//!
//! Ideals are modules of rank one (every term at position 0). The term order is
//! position-over-term, refined by the elimination degree of [`MonomialOrder::Elim`].

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{self, Q};
use crate::poly::{mono_coprime, mono_degree, mono_div, mono_divides, mono_lcm, mono_mul, Monomial, MonomialOrder, Poly};

/// The coefficient ring the engine works over.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Coeffs {
    /// The rationals.
    Field,
    /// The integers localized at the given prime.
    Dvr(BigInt),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub pos: usize,
    pub mono: Monomial,
}

/// Terms sorted strictly descending in the engine's term order.
pub type Vector = Vec<(Term, Q)>;

#[derive(Clone, Debug)]
pub struct Engine {
    pub coeffs: Coeffs,
    pub order: MonomialOrder,
    pub nvars: usize,
}

impl Engine {
    pub fn new(coeffs: Coeffs, order: MonomialOrder, nvars: usize) -> Self {
        Engine { coeffs, order, nvars }
    }

    pub fn cmp_term(&self, a: &Term, b: &Term) -> Ordering {
        let elim = match self.order {
            MonomialOrder::Elim(k) => {
                let k = k.min(a.mono.len());
                mono_degree(&a.mono[..k]).cmp(&mono_degree(&b.mono[..k]))
            }
            _ => Ordering::Equal,
        };
        elim.then_with(|| b.pos.cmp(&a.pos)).then_with(|| self.order.cmp(&a.mono, &b.mono))
    }

    pub fn from_poly(&self, f: &Poly, pos: usize) -> Vector {
        self.normalize(f.terms().map(|(m, c)| (Term { pos, mono: m.clone() }, c.clone())).collect())
    }

    pub fn from_rows(&self, entries: &[Poly]) -> Vector {
        let mut all = Vec::new();
        for (pos, f) in entries.iter().enumerate() {
            all.extend(f.terms().map(|(m, c)| (Term { pos, mono: m.clone() }, c.clone())));
        }
        self.normalize(all)
    }

    pub fn to_poly(&self, v: &Vector) -> Poly {
        Poly::from_terms(self.nvars, v.iter().map(|(t, c)| (t.mono.clone(), c.clone())))
    }

    pub fn to_rows(&self, v: &Vector, rank: usize) -> Vec<Poly> {
        let mut out = vec![Poly::zero(self.nvars); rank];
        for (t, c) in v {
            out[t.pos].add_term(t.mono.clone(), c.clone());
        }
        out
    }

    pub fn normalize(&self, mut v: Vec<(Term, Q)>) -> Vector {
        v.sort_by(|a, b| self.cmp_term(&b.0, &a.0));
        let mut out: Vector = Vec::with_capacity(v.len());
        for (t, c) in v {
            match out.last_mut() {
                Some((lt, lc)) if *lt == t => *lc += c,
                _ => out.push((t, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        out
    }

    fn valuation(&self, c: &Q) -> u32 {
        match &self.coeffs {
            Coeffs::Field => 0,
            Coeffs::Dvr(p) => arith::val_int(c.numer(), p),
        }
    }

    /// `f - c * shift * g`, merged in term order.
    fn sub_mul(&self, f: &Vector, c: &Q, shift: &[u32], g: &Vector) -> Vector {
        let mut out = Vec::with_capacity(f.len() + g.len());
        let mut i = 0;
        let mut j = 0;
        let scaled = |t: &Term| Term { pos: t.pos, mono: mono_mul(&t.mono, shift) };
        while i < f.len() || j < g.len() {
            if j == g.len() {
                out.push(f[i].clone());
                i += 1;
                continue;
            }
            let gt = scaled(&g[j].0);
            if i == f.len() {
                out.push((gt, -(c * &g[j].1)));
                j += 1;
                continue;
            }
            match self.cmp_term(&f[i].0, &gt) {
                Ordering::Greater => {
                    out.push(f[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push((gt, -(c * &g[j].1)));
                    j += 1;
                }
                Ordering::Equal => {
                    let v = &f[i].1 - c * &g[j].1;
                    if !v.is_zero() {
                        out.push((gt, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    }

    fn best_divisor(&self, t: &Term, basis: &[Vector]) -> Option<(usize, u32)> {
        let mut best: Option<(usize, u32)> = None;
        for (i, g) in basis.iter().enumerate() {
            let (gt, gc) = &g[0];
            if gt.pos == t.pos && mono_divides(&gt.mono, &t.mono) {
                let k = self.valuation(gc);
                if best.map_or(true, |(_, b)| k < b) {
                    best = Some((i, k));
                    if k == 0 {
                        break;
                    }
                }
            }
        }
        best
    }

    /// Full canonical reduction of `f` by `basis`.
    pub fn reduce(&self, mut f: Vector, basis: &[Vector]) -> Vector {
        let mut rem: Vector = Vec::new();
        while !f.is_empty() {
            let (t, c) = f[0].clone();
            match self.best_divisor(&t, basis) {
                None => rem.push(f.remove(0)),
                Some((i, k)) => {
                    let g = &basis[i];
                    let shift = mono_div(&t.mono, &g[0].0.mono);
                    if self.valuation(&c) >= k {
                        f = self.sub_mul(&f, &(&c / &g[0].1), &shift, g);
                    } else {
                        let p = match &self.coeffs {
                            Coeffs::Dvr(p) => p,
                            Coeffs::Field => unreachable!(),
                        };
                        let r = arith::int(&arith::residue(&c, p, k));
                        let diff = &c - &r;
                        if !diff.is_zero() {
                            f = self.sub_mul(&f, &(&diff / &g[0].1), &shift, g);
                        }
                        if !r.is_zero() {
                            rem.push(f.remove(0));
                        }
                    }
                }
            }
        }
        rem
    }

    fn spoly(&self, f: &Vector, g: &Vector) -> Vector {
        let (ft, fc) = &f[0];
        let (gt, gc) = &g[0];
        let l = mono_lcm(&ft.mono, &gt.mono);
        // multiply the element whose leading coefficient has larger valuation by a monomial only
        let (a, ac, at, b, bc, bt) = if self.valuation(fc) >= self.valuation(gc) {
            (f, fc, ft, g, gc, gt)
        } else {
            (g, gc, gt, f, fc, ft)
        };
        let sa = mono_div(&l, &at.mono);
        let sb = mono_div(&l, &bt.mono);
        let lifted: Vector = a.iter().map(|(t, c)| (Term { pos: t.pos, mono: mono_mul(&t.mono, &sa) }, c.clone())).collect();
        self.sub_mul(&lifted, &(ac / bc), &sb, b)
    }

    fn product_criterion(&self, f: &Vector, g: &Vector) -> bool {
        if !mono_coprime(&f[0].0.mono, &g[0].0.mono) {
            return false;
        }
        // only sound for multiples of a single basis vector
        let pos = f[0].0.pos;
        if f.iter().chain(g.iter()).any(|(t, _)| t.pos != pos) {
            return false;
        }
        match self.coeffs {
            Coeffs::Field => true,
            Coeffs::Dvr(_) => self.valuation(&f[0].1) == 0 || self.valuation(&g[0].1) == 0,
        }
    }

    /// Reduced Gröbner basis of the submodule generated by `gens`.
    pub fn groebner(&self, gens: &[Vector]) -> Vec<Vector> {
        let mut basis: Vec<Vector> = Vec::new();
        let mut pending: Vec<(usize, usize)> = Vec::new();
        let mut live: HashSet<(usize, usize)> = HashSet::new();
        let mut queue: Vec<Vector> = gens.iter().filter(|g| !g.is_empty()).cloned().collect();
        queue.sort_by(|a, b| self.cmp_term(&a[0].0, &b[0].0));
        for g in queue {
            let r = self.reduce(g, &basis);
            if !r.is_empty() {
                self.push(&mut basis, r, &mut pending, &mut live);
            }
        }
        while !pending.is_empty() {
            // normal strategy: smallest lcm first
            let idx = (0..pending.len())
                .min_by(|&a, &b| {
                    let ta = self.pair_lcm(&basis, pending[a]);
                    let tb = self.pair_lcm(&basis, pending[b]);
                    self.cmp_term(&ta, &tb)
                })
                .unwrap();
            let (i, j) = pending.swap_remove(idx);
            live.remove(&(i, j));
            if self.product_criterion(&basis[i], &basis[j]) || self.chain_criterion(&basis, i, j, &live) {
                continue;
            }
            let s = self.spoly(&basis[i], &basis[j]);
            let r = self.reduce(s, &basis);
            if !r.is_empty() {
                self.push(&mut basis, r, &mut pending, &mut live);
            }
        }
        self.interreduce(basis)
    }

    fn pair_lcm(&self, basis: &[Vector], (i, j): (usize, usize)) -> Term {
        Term { pos: basis[i][0].0.pos, mono: mono_lcm(&basis[i][0].0.mono, &basis[j][0].0.mono) }
    }

    fn chain_criterion(&self, basis: &[Vector], i: usize, j: usize, live: &HashSet<(usize, usize)>) -> bool {
        let l = mono_lcm(&basis[i][0].0.mono, &basis[j][0].0.mono);
        let vmax = self.valuation(&basis[i][0].1).max(self.valuation(&basis[j][0].1));
        let pos = basis[i][0].0.pos;
        basis.iter().enumerate().any(|(k, g)| {
            k != i
                && k != j
                && g[0].0.pos == pos
                && mono_divides(&g[0].0.mono, &l)
                && self.valuation(&g[0].1) <= vmax
                && !live.contains(&(i.min(k), i.max(k)))
                && !live.contains(&(j.min(k), j.max(k)))
        })
    }

    fn push(&self, basis: &mut Vec<Vector>, r: Vector, pending: &mut Vec<(usize, usize)>, live: &mut HashSet<(usize, usize)>) {
        let n = basis.len();
        for (i, g) in basis.iter().enumerate() {
            if g[0].0.pos == r[0].0.pos {
                pending.push((i, n));
                live.insert((i, n));
            }
        }
        basis.push(r);
    }

    fn interreduce(&self, basis: Vec<Vector>) -> Vec<Vector> {
        let n = basis.len();
        let mut keep = vec![true; n];
        for g in 0..n {
            for h in 0..n {
                if g == h || !keep[h] {
                    continue;
                }
                let (gt, gc) = &basis[g][0];
                let (ht, hc) = &basis[h][0];
                if gt.pos != ht.pos || !mono_divides(&ht.mono, &gt.mono) {
                    continue;
                }
                let (vg, vh) = (self.valuation(gc), self.valuation(hc));
                if vh < vg || (vh == vg && (ht.mono != gt.mono || h < g)) {
                    keep[g] = false;
                    break;
                }
            }
        }
        let minimal: Vec<Vector> = basis
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(g, _)| {
                let lc = g[0].1.clone();
                let target = match &self.coeffs {
                    Coeffs::Field => Q::one(),
                    Coeffs::Dvr(p) => arith::int(&arith::pow(p, self.valuation(&lc))),
                };
                let s = target / lc;
                g.into_iter().map(|(t, c)| (t, c * &s)).collect()
            })
            .collect();
        let mut out: Vec<Vector> = minimal
            .iter()
            .map(|g| {
                let tail = self.reduce(g[1..].to_vec(), &minimal);
                let mut v = vec![g[0].clone()];
                v.extend(tail);
                v
            })
            .collect();
        out.sort_by(|a, b| self.cmp_term(&b[0].0, &a[0].0));
        out
    }

    pub fn is_zero_mod(&self, f: Vector, basis: &[Vector]) -> bool {
        self.reduce(f, basis).is_empty()
    }

    /// The constant `1` at position 0, handy for unit-ideal tests.
    pub fn unit(&self) -> Vector {
        vec![(Term { pos: 0, mono: vec![0; self.nvars] }, Q::one())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn x(n: usize, i: usize) -> Poly {
        Poly::var(n, i)
    }

    #[test]
    fn field_basis_of_principal_ideal() {
        let e = Engine::new(Coeffs::Field, MonomialOrder::DegLex, 2);
        let f = &x(2, 0) * &x(2, 1);
        let g = e.groebner(&[e.from_poly(&f.scale(&q(3)), 0)]);
        assert_eq!(g.len(), 1);
        assert_eq!(e.to_poly(&g[0]), f);
    }

    #[test]
    fn dvr_residues_are_canonical() {
        let p = BigInt::from(5);
        let e = Engine::new(Coeffs::Dvr(p), MonomialOrder::DegLex, 1);
        // ideal (25) in Z_(5)[y]; 27*y reduces to 2*y
        let basis = e.groebner(&[e.from_poly(&Poly::constant(1, q(25)), 0)]);
        let r = e.reduce(e.from_poly(&x(1, 0).scale(&q(27)), 0), &basis);
        assert_eq!(e.to_poly(&r), x(1, 0).scale(&q(2)));
    }

    #[test]
    fn dvr_mixed_leading_coefficients() {
        let p = BigInt::from(3);
        let e = Engine::new(Coeffs::Dvr(p), MonomialOrder::DegLex, 1);
        let y = x(1, 0);
        // (9*y, 3*y^2): contains 9*y^2 and 3*y^3 but not 3*y
        let gens = [e.from_poly(&y.scale(&q(9)), 0), e.from_poly(&y.pow(2).scale(&q(3)), 0)];
        let basis = e.groebner(&gens);
        assert!(e.is_zero_mod(e.from_poly(&y.pow(2).scale(&q(9)), 0), &basis));
        assert!(e.is_zero_mod(e.from_poly(&y.pow(3).scale(&q(3)), 0), &basis));
        assert!(!e.is_zero_mod(e.from_poly(&y.scale(&q(3)), 0), &basis));
    }
}
