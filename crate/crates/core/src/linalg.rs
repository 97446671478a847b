//! Linear algebra over the integers localized at `p` (and over the rationals).
//!
//! Everything goes through one Smith normal form routine: over a discrete
//! valuation ring the entry of least valuation divides the whole remaining
//! block, so elimination never needs gcd steps.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{self, Q};

pub type Mat = Vec<Vec<Q>>;

pub fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect()
}

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![Q::zero(); c]; r]
}

pub fn mat_mul(a: &Mat, b: &Mat, inner: usize, cols: usize) -> Mat {
    let mut out = zeros(a.len(), cols);
    for (i, row) in a.iter().enumerate() {
        for k in 0..inner {
            if row[k].is_zero() {
                continue;
            }
            for j in 0..cols {
                if !b[k][j].is_zero() {
                    let t = &row[k] * &b[k][j];
                    out[i][j] += t;
                }
            }
        }
    }
    out
}

pub fn vec_mat(v: &[Q], m: &Mat, cols: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); cols];
    for (k, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for j in 0..cols {
            if !m[k][j].is_zero() {
                out[j] += c * &m[k][j];
            }
        }
    }
    out
}

/// `U * A * V = diag`, with `U`, `V` invertible over `Z_(p)` and their inverses tracked.
#[derive(Clone, Debug)]
pub struct Smith {
    pub rows: usize,
    pub cols: usize,
    pub diag: Vec<Q>,
    pub rank: usize,
    pub u: Mat,
    pub u_inv: Mat,
    pub v: Mat,
    pub v_inv: Mat,
}

fn vp(c: &Q, p: &BigInt) -> i64 {
    arith::val(c, p).expect("nonzero")
}

pub fn smith(p: &BigInt, a: &Mat, cols: usize) -> Smith {
    let rows = a.len();
    let mut m = a.clone();
    let mut u = identity(rows);
    let mut u_inv = identity(rows);
    let mut v = identity(cols);
    let mut v_inv = identity(cols);
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        let mut best: Option<(usize, usize, i64)> = None;
        for i in t..rows {
            for j in t..cols {
                if !m[i][j].is_zero() {
                    let k = vp(&m[i][j], p);
                    if best.map_or(true, |b| k < b.2) {
                        best = Some((i, j, k));
                    }
                }
            }
        }
        let Some((bi, bj, k)) = best else { break };
        m.swap(t, bi);
        u.swap(t, bi);
        for row in u_inv.iter_mut() {
            row.swap(t, bi);
        }
        for row in m.iter_mut() {
            row.swap(t, bj);
        }
        for row in v.iter_mut() {
            row.swap(t, bj);
        }
        v_inv.swap(t, bj);
        // normalize pivot to p^k
        let unit = &m[t][t] / arith::p_power(p, k);
        let inv = Q::one() / &unit;
        for x in m[t].iter_mut() {
            *x *= &inv;
        }
        for x in u[t].iter_mut() {
            *x *= &inv;
        }
        for row in u_inv.iter_mut() {
            row[t] *= &unit;
        }
        let piv = m[t][t].clone();
        for r in 0..rows {
            if r == t || m[r][t].is_zero() {
                continue;
            }
            let f = &m[r][t] / &piv;
            for j in 0..cols {
                if !m[t][j].is_zero() {
                    let d = &f * &m[t][j];
                    m[r][j] -= d;
                }
            }
            for j in 0..rows {
                if !u[t][j].is_zero() {
                    let d = &f * &u[t][j];
                    u[r][j] -= d;
                }
            }
            // u_inv <- u_inv * E^{-1}: column t += f * column r
            for row in u_inv.iter_mut() {
                if !row[r].is_zero() {
                    let d = &f * &row[r];
                    row[t] += d;
                }
            }
        }
        for c in 0..cols {
            if c == t || m[t][c].is_zero() {
                continue;
            }
            let f = &m[t][c] / &piv;
            for row in m.iter_mut() {
                if !row[t].is_zero() {
                    let d = &f * &row[t];
                    row[c] -= d;
                }
            }
            for row in v.iter_mut() {
                if !row[t].is_zero() {
                    let d = &f * &row[t];
                    row[c] -= d;
                }
            }
            // v_inv <- F^{-1} * v_inv: row t += f * row c
            let rc = v_inv[c].clone();
            for (j, x) in rc.iter().enumerate() {
                if !x.is_zero() {
                    v_inv[t][j] += &f * x;
                }
            }
        }
        diag.push(piv);
        t += 1;
    }
    Smith { rows, cols, rank: diag.len(), diag, u, u_inv, v, v_inv }
}

/// A finitely generated `Z_(p)`-submodule of `Q^n`, kept as generating rows.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub p: BigInt,
    pub dim: usize,
    pub rows: Mat,
}

impl Lattice {
    pub fn new(p: &BigInt, dim: usize, rows: Mat) -> Self {
        let rows = rows.into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
        Lattice { p: p.clone(), dim, rows }
    }

    pub fn standard(p: &BigInt, dim: usize) -> Self {
        Lattice::new(p, dim, identity(dim))
    }

    fn smith(&self) -> Smith {
        smith(&self.p, &self.rows, self.dim)
    }

    pub fn rank(&self) -> usize {
        self.smith().rank
    }

    /// Whether `t` is a `Z_(p)`-combination of the rows; returns the coefficients if so.
    pub fn solve(&self, t: &[Q]) -> Option<Vec<Q>> {
        if self.rows.is_empty() {
            return if t.iter().all(|x| x.is_zero()) { Some(vec![]) } else { None };
        }
        let s = self.smith();
        let tv = vec_mat(t, &s.v, self.dim);
        let mut y = vec![Q::zero(); self.rows.len()];
        for (j, c) in tv.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if j >= s.rank {
                return None;
            }
            let q = c / &s.diag[j];
            if !arith::is_integral(&q, &self.p) {
                return None;
            }
            y[j] = q;
        }
        Some(vec_mat(&y, &s.u, self.rows.len()))
    }

    pub fn contains(&self, t: &[Q]) -> bool {
        self.solve(t).is_some()
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }

    pub fn same(&self, other: &Lattice) -> bool {
        self.contains_lattice(other) && other.contains_lattice(self)
    }

    /// A basis: the nonzero rows of `diag * V^{-1}`.
    pub fn basis(&self) -> Mat {
        let s = self.smith();
        (0..s.rank).map(|i| s.v_inv[i].iter().map(|x| x * &s.diag[i]).collect()).collect()
    }

    /// The intersection of the rational span with `Z_(p)^n`.
    pub fn saturation(&self) -> Lattice {
        let s = self.smith();
        Lattice::new(&self.p, self.dim, s.v_inv[..s.rank].to_vec())
    }

    pub fn sum(&self, other: &Lattice) -> Lattice {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Lattice::new(&self.p, self.dim, rows)
    }

    pub fn scaled(&self, c: &Q) -> Lattice {
        Lattice::new(&self.p, self.dim, self.rows.iter().map(|r| r.iter().map(|x| x * c).collect()).collect())
    }

    /// Elements whose coordinates in `cols` all vanish.
    pub fn vanishing_on(&self, cols: &[usize]) -> Lattice {
        if self.rows.is_empty() {
            return self.clone();
        }
        let restricted: Mat = self.rows.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect();
        let s = smith(&self.p, &restricted, cols.len());
        let n = self.rows.len();
        let kernel: Mat = s.u[s.rank..].to_vec();
        Lattice::new(&self.p, self.dim, mat_mul(&kernel, &self.rows, n, self.dim))
    }

    /// Whether every element of `other` is in `self + p^n Z_(p)^dim`.
    pub fn covers_mod(&self, t: &[Q], n: u32) -> bool {
        let mut rows = self.rows.clone();
        let pn = arith::int(&arith::pow(&self.p, n));
        for i in 0..self.dim {
            let mut r = vec![Q::zero(); self.dim];
            r[i] = pn.clone();
            rows.push(r);
        }
        Lattice::new(&self.p, self.dim, rows).contains(t)
    }

    /// Elementary divisor valuations of `self` inside `outer` (which must contain it and have equal rank).
    pub fn index_in(&self, outer: &Lattice) -> Option<Vec<i64>> {
        let ob = outer.basis();
        let outer_l = Lattice::new(&self.p, self.dim, ob.clone());
        let coords: Option<Mat> = self.rows.iter().map(|r| outer_l.solve(r)).collect();
        let coords = coords?;
        let s = smith(&self.p, &coords, ob.len());
        Some(s.diag.iter().map(|d| vp(d, &self.p)).collect())
    }
}

/// Solves `x * A = t` over the rationals; `None` if inconsistent.
pub fn solve_rational(a: &Mat, cols: usize, t: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    // transpose: columns of A^T are rows of A; augmented system A^T x = t
    let mut m: Mat = (0..cols)
        .map(|j| {
            let mut r: Vec<Q> = (0..n).map(|i| a[i][j].clone()).collect();
            r.push(t[j].clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pr) = (row..cols).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, pr);
        let inv = Q::one() / &m[row][col];
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..cols {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=n {
                    let d = &f * &m[row][c];
                    m[r][c] -= d;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == cols {
            break;
        }
    }
    if m[row..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i][n].clone();
    }
    Some(x)
}

/// Rank over the rationals.
pub fn rank_rational(a: &Mat, cols: usize) -> usize {
    let mut m = a.clone();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pr) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, pr);
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[rank][col];
                for c in 0..cols {
                    let d = &f * &m[rank][c];
                    m[r][c] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{q, q_frac};

    fn p() -> BigInt {
        BigInt::from(5)
    }

    #[test]
    fn smith_reconstructs() {
        let a = vec![vec![q(10), q(5), q(3)], vec![q(25), q(0), q(6)]];
        let s = smith(&p(), &a, 3);
        let uav = mat_mul(&mat_mul(&s.u, &a, 2, 3), &s.v, 3, 3);
        for i in 0..2 {
            for j in 0..3 {
                let expect = if i == j { s.diag[i].clone() } else { Q::zero() };
                assert_eq!(uav[i][j], expect);
            }
        }
        assert_eq!(mat_mul(&s.u, &s.u_inv, 2, 2), identity(2));
        assert_eq!(mat_mul(&s.v, &s.v_inv, 3, 3), identity(3));
    }

    #[test]
    fn lattice_membership() {
        let l = Lattice::new(&p(), 2, vec![vec![q(5), q(0)], vec![q(1), q(1)]]);
        assert!(l.contains(&[q(6), q(1)]));
        assert!(!l.contains(&[q(1), q(0)]));
        assert!(l.contains(&[q_frac(5, 3), q(0)]));
        assert!(l.covers_mod(&[q(1), q(0)], 1) == false);
        assert!(l.covers_mod(&[q(0), q(5)], 1));
    }

    #[test]
    fn saturation_and_kernel() {
        let l = Lattice::new(&p(), 2, vec![vec![q(5), q(10)]]);
        assert!(l.saturation().contains(&[q(1), q(2)]));
        let both = Lattice::new(&p(), 3, vec![vec![q(1), q(1), q(0)], vec![q(1), q(0), q(1)]]);
        let k = both.vanishing_on(&[0]);
        assert!(k.contains(&[q(0), q(1), q(-1)]));
        assert_eq!(k.rank(), 1);
    }

    #[test]
    fn rational_solve() {
        let a = vec![vec![q(1), q(2)], vec![q(0), q(3)]];
        assert_eq!(solve_rational(&a, 2, &[q(1), q(5)]), Some(vec![q(1), q(1)]));
        let b = vec![vec![q(1), q(1)]];
        assert_eq!(solve_rational(&b, 2, &[q(1), q(2)]), None);
    }
}
