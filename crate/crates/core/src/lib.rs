//! Beauville-Laszlo gluing over a base pair `(R, pi)` with `R` the integers
//! localized at a prime: exact polynomial algebra, pi-adic truncations, module
//! gluing, and the pullback-ring construction for affine gluing triples.

pub mod arith;
pub mod base;
pub mod completion;
pub mod error;
pub mod format;
pub mod gb;
pub mod ideal;
pub mod linalg;
pub mod models;
pub mod module;
pub mod par;
pub mod poly;
pub mod precision;
pub mod triple;

pub use base::{BasePair, Profile};
pub use error::{GlueError, Result};
pub use ideal::{AffineAlgebra, IdealPresentation, PolyRing, Regime, Valuation};
pub use poly::{MonomialOrder, Poly};
