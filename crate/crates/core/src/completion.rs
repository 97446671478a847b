//! Truncated pi-adic completions and the pi-torsion split
//! `B = B' x_{B'''} B''` with `B' = B / B[pi^inf]`, `B'' = B / pi^N0`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::arith;
use crate::error::{GlueError, Result};
use crate::gb::Coeffs;
use crate::ideal::{intersect, pi_saturation, AffineAlgebra, IdealPresentation, Regime};
use crate::poly::Poly;
use crate::precision::{Factor, TruncatedAlgebra};

/// `algebra / pi^n`, as a one-factor truncated algebra with the exact relation lifts.
pub fn complete(algebra: &AffineAlgebra, n: u32) -> Result<TruncatedAlgebra> {
    if algebra.regime() != Regime::OverR {
        return Err(GlueError::RegimeMismatch(format!("completion needs over_R, got {}", algebra.regime().tag())));
    }
    let vars: Vec<&str> = algebra.vars().iter().map(|s| s.as_str()).collect();
    let factor = Factor::new("main", &vars, algebra.relations.generators().to_vec());
    Ok(TruncatedAlgebra::new("completion", algebra.base().clone(), n, vec![factor]))
}

/// A ring map given by images of the source variables, reduced into `target` at level `n`.
pub fn complete_map(images: &[Poly], target: &TruncatedAlgebra, n: u32) -> Result<Vec<Poly>> {
    let level = target.level(n)?;
    images.iter().map(|f| level[0].reduce(f)).collect()
}

/// Generators of `(I : p^n)`, computed as `(I ∩ (p^n)) / p^n`.
pub fn colon_by_power(ideal: &IdealPresentation, n: u32) -> Result<IdealPresentation> {
    let ring = ideal.ring();
    let p = ring.base.prime()?.clone();
    if n == 0 {
        return Ok(ideal.clone());
    }
    let pn = arith::int(&arith::pow(&p, n));
    let nv = ring.nvars();
    let cut = intersect(&Coeffs::Dvr(p.clone()), nv, ideal.generators(), &[Poly::constant(nv, pn.clone())]);
    let inv = arith::Q::from_integer(1.into()) / pn;
    IdealPresentation::new(ring.clone(), cut.iter().map(|g| g.scale(&inv)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionCertificate {
    pub n0: u32,
    /// Generators of `(I : pi^inf)`.
    pub saturation: Vec<Poly>,
    /// `(I : pi^n)` for `n = 0..=n0+1`; the last two coincide with the saturation.
    pub colons: Vec<Vec<Poly>>,
}

/// A finite-type algebra over `R` with memoized truncations.
#[derive(Debug)]
pub struct CompletionModel {
    pub source: AffineAlgebra,
    truncations: Mutex<BTreeMap<u32, Arc<TruncatedAlgebra>>>,
    torsion: OnceLock<TorsionCertificate>,
}

impl CompletionModel {
    pub fn new(source: AffineAlgebra) -> Result<Self> {
        if source.regime() != Regime::OverR {
            return Err(GlueError::RegimeMismatch("completion model needs over_R".into()));
        }
        Ok(CompletionModel { source, truncations: Mutex::new(BTreeMap::new()), torsion: OnceLock::new() })
    }

    pub fn truncation(&self, n: u32) -> Result<Arc<TruncatedAlgebra>> {
        if let Some(t) = self.truncations.lock().expect("truncation cache poisoned").get(&n) {
            return Ok(t.clone());
        }
        let t = Arc::new(complete(&self.source, n)?);
        Ok(self.truncations.lock().expect("truncation cache poisoned").entry(n).or_insert(t).clone())
    }

    pub fn torsion_certificate(&self) -> Option<&TorsionCertificate> {
        self.torsion.get()
    }
}

/// The smallest `N0 <= cap` with `B[pi^inf] = B[pi^N0]`.
pub fn torsion_bound(model: &CompletionModel, cap: u32) -> Result<TorsionCertificate> {
    if let Some(c) = model.torsion.get() {
        return if c.n0 <= cap { Ok(c.clone()) } else { Err(GlueError::CapExceeded { cap }) };
    }
    let ideal = &model.source.relations;
    let sat = pi_saturation(ideal)?;
    let mut colons = Vec::new();
    for n in 0..=cap {
        let c = colon_by_power(ideal, n)?;
        let stable = c.same_ideal(&sat)?;
        colons.push(c.generators().to_vec());
        if stable {
            // level n+1 equals level n: both equal the saturation, which contains every colon
            let next = colon_by_power(ideal, n + 1)?;
            debug_assert!(next.same_ideal(&c)?);
            colons.push(next.generators().to_vec());
            let cert = TorsionCertificate { n0: n, saturation: sat.generators().to_vec(), colons };
            let _ = model.torsion.set(cert.clone());
            return Ok(cert);
        }
    }
    Err(GlueError::CapExceeded { cap })
}

/// The three quotients of the torsion split with their defining ideals over `R`.
#[derive(Clone, Debug)]
pub struct TorsionSplit {
    pub n0: u32,
    /// `B' = B / B[pi^inf]`.
    pub torsionfree: AffineAlgebra,
    /// `B'' = B / pi^N0`.
    pub truncated: AffineAlgebra,
    /// `B''' = B' / pi^N0`.
    pub overlap: AffineAlgebra,
    /// Levels at which `B/pi^n = B'/pi^n x_{B'''/pi^n} B''/pi^n` was verified.
    pub verified_levels: Vec<u32>,
}

/// Computes the split and verifies the fiber-product reconstruction at every level `<= prec`.
///
/// All three structure maps are quotient maps, so the map into the fiber
/// product is always onto; it is injective at level `n` iff
/// `(J' + p^n) ∩ (J'' + p^n) = I + p^n`.
pub fn torsion_split(model: &CompletionModel, prec: u32) -> Result<TorsionSplit> {
    let cert = torsion_bound(model, prec.max(1))?;
    let src = &model.source;
    let ring = src.ring().clone();
    let nv = ring.nvars();
    let p = ring.base.prime()?.clone();
    let i_gens = src.relations.generators().to_vec();
    let pn0 = Poly::constant(nv, arith::int(&arith::pow(&p, cert.n0)));
    let j1 = cert.saturation.clone();
    let mut j2 = i_gens.clone();
    j2.push(pn0.clone());
    let mut j3 = j1.clone();
    j3.push(pn0);

    let exact = intersect(&Coeffs::Dvr(p.clone()), nv, &j1, &j2);
    let exact = IdealPresentation::new(ring.clone(), exact)?;
    if !exact.same_ideal(&src.relations)? {
        return Err(GlueError::VerificationFailed {
            check: "torsion split injectivity".into(),
            witness: format!("B[pi^inf] ∩ pi^{} B is nonzero", cert.n0),
        });
    }
    let mut verified = Vec::new();
    for n in 1..=prec {
        let pn = Poly::constant(nv, arith::int(&arith::pow(&p, n)));
        let with = |g: &[Poly]| {
            let mut v = g.to_vec();
            v.push(pn.clone());
            v
        };
        let cut = intersect(&Coeffs::Dvr(p.clone()), nv, &with(&j1), &with(&j2));
        let level = ring.with_regime(Regime::OverRModPiN(n));
        let lhs = IdealPresentation::new(level.clone(), cut)?;
        let rhs = IdealPresentation::new(level, i_gens.clone())?;
        if !lhs.same_ideal(&rhs)? {
            return Err(GlueError::VerificationFailed {
                check: format!("torsion split at level {n}"),
                witness: "fiber product kernel nonzero".into(),
            });
        }
        verified.push(n);
    }
    Ok(TorsionSplit {
        n0: cert.n0,
        torsionfree: AffineAlgebra::new(ring.clone(), j1)?,
        truncated: AffineAlgebra::new(ring.clone(), j2)?,
        overlap: AffineAlgebra::new(ring, j3)?,
        verified_levels: verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;
    use crate::base::BasePair;
    use crate::ideal::PolyRing;

    fn model(rels: Vec<Poly>) -> CompletionModel {
        let ring = PolyRing::new(BasePair::arithmetic(5).unwrap(), Regime::OverR, &["y"]);
        CompletionModel::new(AffineAlgebra::new(ring, rels).unwrap()).unwrap()
    }

    #[test]
    fn torsion_bounds() {
        let y = Poly::var(1, 0);
        assert_eq!(torsion_bound(&model(vec![y.scale(&q(25))]), 8).unwrap().n0, 2);
        assert_eq!(torsion_bound(&model(vec![y.scale(&q(5))]), 8).unwrap().n0, 1);
        assert_eq!(torsion_bound(&model(vec![]), 8).unwrap().n0, 0);
        assert_eq!(torsion_bound(&model(vec![y.scale(&q(125))]), 2).unwrap_err(), GlueError::CapExceeded { cap: 2 });
    }

    #[test]
    fn split_of_p_squared_torsion() {
        let y = Poly::var(1, 0);
        let s = torsion_split(&model(vec![y.scale(&q(25))]), 8).unwrap();
        assert_eq!(s.n0, 2);
        assert!(s.torsionfree.is_zero(&y).unwrap());
        assert!(s.overlap.is_zero(&Poly::constant(1, q(25))).unwrap());
        assert!(!s.overlap.is_zero(&Poly::constant(1, q(5))).unwrap());
        assert_eq!(s.verified_levels, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn truncation_is_memoized() {
        let m = model(vec![]);
        let a = m.truncation(3).unwrap();
        let b = m.truncation(3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.prec, 3);
    }
}
