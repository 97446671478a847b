//! Worked examples as constructors, the point-level reduction map and
//! component triples for the Néron model of `G_m`.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::arith::{self, q, Q};
use crate::base::BasePair;
use crate::error::{GlueError, Result};
use crate::ideal::{AffineAlgebra, PolyRing, Regime};
use crate::poly::Poly;
use crate::precision::{Factor, TruncatedAlgebra};
use crate::triple::{AffineGluingTriple, DomainCondition};

fn base(p: u64) -> Result<BasePair> {
    BasePair::arithmetic(p)
}

fn line(b: &BasePair) -> Result<AffineAlgebra> {
    AffineAlgebra::new(PolyRing::new(b.clone(), Regime::OverRInvPi, &["x"]), vec![])
}

/// Two closed unit disks around `0` and `1/p` glued to the affine line.
pub fn two_disks_triple(p: u64) -> Result<AffineGluingTriple> {
    let b = base(p)?;
    let pq = q(p as i64);
    let inv = Q::one() / &pq;
    let disks = TruncatedAlgebra::new(
        "two-disks",
        b.clone(),
        8,
        vec![Factor::new("d0", &["u"], vec![]), Factor::new("d1", &["v"], vec![])],
    );
    let jstar = vec![vec![Poly::var(1, 0)], vec![&Poly::var(1, 0) + &Poly::constant(1, inv)]];
    let px = Poly::var(1, 0).scale(&pq);
    let domain = vec![
        DomainCondition { factor: 0, g: px.clone() },
        DomainCondition { factor: 1, g: &px - &Poly::one(1) },
    ];
    AffineGluingTriple::new("two-disks", line(&b)?, Arc::new(disks), jstar, domain)
}

/// `gamma = p x`, `alpha = x(1 - p x)^2`, `beta = p x^2 (1 - p x)`.
pub fn two_disks_generators(p: u64) -> [Poly; 3] {
    let x = Poly::var(1, 0);
    let pq = q(p as i64);
    let gamma = x.scale(&pq);
    let one_minus = &Poly::one(1) - &gamma;
    let alpha = &x * &one_minus.pow(2);
    let beta = &(&x * &x).scale(&pq) * &one_minus;
    [alpha, beta, gamma]
}

/// The unit circle `|x| = 1` mapping into the affine line.
pub fn unit_circle_triple(p: u64) -> Result<AffineGluingTriple> {
    let b = base(p)?;
    let x = Poly::var(2, 0);
    let xb = Poly::var(2, 1);
    let circle =
        TruncatedAlgebra::new("unit-circle", b.clone(), 8, vec![Factor::new("c", &["x", "xb"], vec![&(&x * &xb) - &Poly::one(2)])]);
    let domain = vec![DomainCondition { factor: 0, g: Poly::var(1, 0) }];
    AffineGluingTriple::new("unit-circle", line(&b)?, Arc::new(circle), vec![vec![x]], domain)
}

/// The closed unit disk mapping into the affine line; the affine control for the circle.
pub fn unit_disk_triple(p: u64) -> Result<AffineGluingTriple> {
    let b = base(p)?;
    let disk = TruncatedAlgebra::new("unit-disk", b.clone(), 8, vec![Factor::new("d", &["x"], vec![])]);
    let domain = vec![DomainCondition { factor: 0, g: Poly::var(1, 0) }];
    AffineGluingTriple::new("unit-disk", line(&b)?, Arc::new(disk), vec![vec![Poly::var(1, 0)]], domain)
}

/// The component-indexed triple gluing copies of the formal unit circle
/// along `j_omega`; only `v(omega)` is recorded, with `v(pi) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentTriple {
    pub base_valuation: Q,
    pub index_description: String,
    pub label: String,
}

pub fn neron_gm_triple(v: Q) -> Result<ComponentTriple> {
    if !v.is_positive() {
        return Err(GlueError::Invalid(format!("valuation {v} must be positive")));
    }
    Ok(ComponentTriple { label: format!("neron-gm v={v}"), base_valuation: v, index_description: "Z".into() })
}

/// Two component triples are isomorphic iff their gluing radii agree.
pub fn neron_iso_test(t1: &ComponentTriple, t2: &ComponentTriple) -> bool {
    t1.base_valuation == t2.base_valuation
}

/// A point of an affine model over `R` with integral coordinates.
#[derive(Clone, Debug)]
pub struct IntegralPoint {
    pub coordinates: Vec<Q>,
    pub model: AffineAlgebra,
}

impl IntegralPoint {
    pub fn new(model: AffineAlgebra, coordinates: Vec<Q>) -> Result<Self> {
        if model.regime() != Regime::OverR {
            return Err(GlueError::RegimeMismatch("points live on models over R".into()));
        }
        if coordinates.len() != model.nvars() {
            return Err(GlueError::Invalid(format!("{} coordinates for {} variables", coordinates.len(), model.nvars())));
        }
        let p = model.base().prime()?.clone();
        if let Some(c) = coordinates.iter().find(|c| !arith::is_integral(c, &p)) {
            return Err(GlueError::NotIntegral(format!("coordinate {c}")));
        }
        let pt = IntegralPoint { coordinates, model };
        for r in pt.model.relations.generators() {
            if !pt.eval(r).is_zero() {
                return Err(GlueError::Invalid(format!("relation {} fails at the point", pt.model.display(r))));
            }
        }
        Ok(pt)
    }

    pub fn eval(&self, f: &Poly) -> Q {
        let images: Vec<Poly> = self.coordinates.iter().map(|c| Poly::constant(0, c.clone())).collect();
        f.substitute(&images, 0).constant_term()
    }
}

/// Coordinates reduced mod `pi`, as residues in `0..p`.
pub fn specialize_point(pt: &IntegralPoint) -> Result<Vec<u64>> {
    let p = pt.model.base().prime()?.clone();
    specialize_values(&pt.coordinates, &p)
}

pub fn specialize_values(coords: &[Q], p: &num_bigint::BigInt) -> Result<Vec<u64>> {
    coords
        .iter()
        .map(|c| {
            if !arith::is_integral(c, p) {
                return Err(GlueError::NotIntegral(format!("coordinate {c} has negative valuation")));
            }
            Ok(u64::try_from(arith::residue(c, p, 1)).expect("residue below p"))
        })
        .collect()
}

/// `GL_n` over `R`: `n^2` entries and an inverse-determinant variable.
pub fn gl_model(p: u64, n: usize) -> Result<AffineAlgebra> {
    let mut names: Vec<String> = (0..n).flat_map(|i| (0..n).map(move |j| format!("a{}{}", i + 1, j + 1))).collect();
    names.push("dinv".into());
    let nv = names.len();
    let entries: Vec<Vec<Poly>> = (0..n).map(|i| (0..n).map(|j| Poly::var(nv, i * n + j)).collect()).collect();
    let det = determinant(&entries, nv);
    let rel = &(&det * &Poly::var(nv, nv - 1)) - &Poly::one(nv);
    AffineAlgebra::new(PolyRing::from_names(base(p)?, Regime::OverR, names), vec![rel])
}

fn determinant(m: &[Vec<Poly>], nv: usize) -> Poly {
    if m.is_empty() {
        return Poly::one(nv);
    }
    let mut total = Poly::zero(nv);
    for j in 0..m.len() {
        let minor: Vec<Vec<Poly>> =
            m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| x.clone()).collect()).collect();
        let term = &m[0][j] * &determinant(&minor, nv);
        total = if j % 2 == 0 { &total + &term } else { &total - &term };
    }
    total
}

fn det_q(m: &[Vec<Q>]) -> Q {
    let nv = 0;
    let polys: Vec<Vec<Poly>> = m.iter().map(|r| r.iter().map(|c| Poly::constant(nv, c.clone())).collect()).collect();
    determinant(&polys, nv).constant_term()
}

/// A matrix in `GL_n(R)` as a point of [`gl_model`].
pub fn gl_point(p: u64, m: &[Vec<Q>]) -> Result<IntegralPoint> {
    let model = gl_model(p, m.len())?;
    let d = det_q(m);
    if d.is_zero() {
        return Err(GlueError::NotAUnit("singular matrix".into()));
    }
    let mut coords: Vec<Q> = m.iter().flatten().cloned().collect();
    coords.push(Q::one() / d);
    IntegralPoint::new(model, coords)
}

/// Integral entries, entries above the diagonal in `(pi)`, unit determinant.
pub fn iwahori_membership(p: u64, m: &[Vec<Q>]) -> Result<bool> {
    let pb = base(p)?.prime()?.clone();
    if m.iter().any(|r| r.len() != m.len()) {
        return Err(GlueError::Invalid("matrix is not square".into()));
    }
    for (i, row) in m.iter().enumerate() {
        for (j, a) in row.iter().enumerate() {
            let v = arith::val(a, &pb);
            let ok = if j > i { v.map_or(true, |v| v > 0) } else { v.map_or(true, |v| v >= 0) };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(arith::val(&det_q(m), &pb) == Some(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[[i64; 2]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
    }

    #[test]
    fn iwahori_examples() {
        assert!(iwahori_membership(5, &mat(&[[1, 5], [1, 1]])).unwrap());
        assert!(!iwahori_membership(5, &mat(&[[1, 1], [5, 1]])).unwrap());
        assert!(iwahori_membership(5, &mat(&[[1, 0], [0, 1]])).unwrap());
    }

    #[test]
    fn reduction_of_points() {
        let pt = gl_point(5, &mat(&[[1, 5], [1, 1]])).unwrap();
        assert_eq!(specialize_point(&pt).unwrap()[..4], [1, 0, 1, 1]);
        assert!(matches!(gl_point(5, &[vec![q(1), Q::new(1.into(), 5.into())], vec![q(0), q(1)]]), Err(GlueError::NotIntegral(_))));
    }
}
