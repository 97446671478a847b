//! The base pair `(R, pi)`.

use std::fmt;

use num_bigint::BigInt;

use crate::error::{GlueError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Profile {
    /// `R` is the integers localized at a prime `p`, and `pi = p`.
    Arithmetic,
    /// `R` is `Q[t]` localized at `(t)`, and `pi = t`.
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasePair {
    pub profile: Profile,
    /// The prime `p` (arithmetic) or zero (geometric, where `pi` is the variable `t`).
    pub p: BigInt,
    pub description: String,
}

impl BasePair {
    pub fn arithmetic(p: u64) -> Result<Self> {
        let p = BigInt::from(p);
        if !crate::arith::is_probable_prime(&p) {
            return Err(GlueError::Invalid(format!("{p} is not prime")));
        }
        Ok(BasePair { profile: Profile::Arithmetic, description: format!("Zp({p})"), p })
    }

    pub fn geometric() -> Self {
        BasePair { profile: Profile::Geometric, p: BigInt::from(0), description: "Qt".into() }
    }

    /// The prime, for operations that need the arithmetic profile.
    pub fn prime(&self) -> Result<&BigInt> {
        match self.profile {
            Profile::Arithmetic => Ok(&self.p),
            Profile::Geometric => Err(GlueError::UnsupportedRegime(
                "operation requires the arithmetic profile Zp(p)".into(),
            )),
        }
    }

    /// Parses `Zp(5)` or `Qt`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "Qt" {
            return Ok(BasePair::geometric());
        }
        let inner = s
            .strip_prefix("Zp(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| GlueError::Invalid(format!("unknown profile '{s}' (expected Zp(p) or Qt)")))?;
        let p: u64 = inner.trim().parse().map_err(|_| GlueError::Invalid(format!("bad prime in '{s}'")))?;
        BasePair::arithmetic(p)
    }
}

impl fmt::Display for BasePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_profiles() {
        assert_eq!(BasePair::parse("Zp(5)").unwrap().p, BigInt::from(5));
        assert_eq!(BasePair::parse("Qt").unwrap().profile, Profile::Geometric);
        assert!(BasePair::parse("Zp(6)").is_err());
        assert!(BasePair::parse("Zq").is_err());
    }
}
