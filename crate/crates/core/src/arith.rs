//! Exact rational arithmetic with p-adic valuation helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

pub fn pow(p: &BigInt, e: u32) -> BigInt {
    num_traits::pow(p.clone(), e as usize)
}

/// Multiplicity of `p` in a nonzero integer.
pub fn val_int(n: &BigInt, p: &BigInt) -> u32 {
    debug_assert!(!n.is_zero());
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (quo, rem) = n.div_rem(p);
        if !rem.is_zero() {
            return v;
        }
        n = quo;
        v += 1;
    }
}

/// p-adic valuation of a rational; `None` encodes +infinity.
pub fn val(c: &Q, p: &BigInt) -> Option<i64> {
    if c.is_zero() {
        return None;
    }
    Some(val_int(c.numer(), p) as i64 - val_int(c.denom(), p) as i64)
}

/// Whether `c` lies in the localization of the integers at `p`.
pub fn is_integral(c: &Q, p: &BigInt) -> bool {
    c.denom().gcd(p).is_one()
}

/// The canonical representative of an integral rational modulo `p^e`, in `[0, p^e)`.
pub fn residue(c: &Q, p: &BigInt, e: u32) -> BigInt {
    let m = pow(p, e);
    if m.is_one() {
        return BigInt::zero();
    }
    let inv = mod_inverse(&c.denom().mod_floor(&m), &m).expect("denominator must be a p-adic unit");
    (c.numer().mod_floor(&m) * inv).mod_floor(&m)
}

pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else if (-e.gcd.clone()).is_one() {
        Some((-e.x).mod_floor(m))
    } else {
        None
    }
}

/// `c / p^v(c)`, a p-adic unit.
pub fn unit_part(c: &Q, p: &BigInt) -> Q {
    let v = val(c, p).expect("unit part of zero");
    c / p_power(p, v)
}

/// `p^e` for a possibly negative exponent.
pub fn p_power(p: &BigInt, e: i64) -> Q {
    if e >= 0 {
        int(&pow(p, e as u32))
    } else {
        Q::new(BigInt::one(), pow(p, (-e) as u32))
    }
}

pub fn is_probable_prime(p: &BigInt) -> bool {
    let two = BigInt::from(2);
    if p < &two {
        return false;
    }
    let mut d = two.clone();
    while &d * &d <= *p {
        if (p % &d).is_zero() {
            return false;
        }
        d += 1;
    }
    true
}
