//! Numerical engine for hyperbolic factor-spaces `B^n / G`.
//!
//! `G` is a discontinuous, fixed-point-free group of Möbius automorphisms of
//! the unit ball. The crate covers the exact ball geometry ([`mobius`]),
//! finitely generated groups and their orbits ([`group`]), the quotient metric
//! and measure ([`quotient`], [`measure`]), sampled paths ([`paths`]), moduli of
//! path families ([`modulus`]), smooth and quotient test maps ([`maps`]) and a
//! harness that checks modulus-distortion inequalities on them ([`verify`]).
//!
//! All reals are `f64`; the default comparison tolerance is [`TOL`].

pub mod error;
pub mod ext;
pub mod group;
pub mod maps;
pub mod measure;
pub mod mobius;
pub mod modulus;
pub mod paths;
pub mod quotient;
pub mod region;
pub mod rng;
pub mod specs;
pub mod verify;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use group::{GroupPresentation, Word};
pub use mobius::{hyp_dist, MobiusMap, Point};
pub use quotient::QuotientPoint;

/// Default absolute tolerance for geometric comparisons.
pub const TOL: f64 = 1e-9;
