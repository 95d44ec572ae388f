//! Certified continued-fraction arithmetic.
//!
//! An irrational α is carried as its stream of partial quotients. All
//! quantities derived from it (`‖kα‖`, fractional parts, Bohr sets) come
//! with exact rational enclosures built from pairs of consecutive
//! convergents, which always bracket α.

mod bohr;
mod irrational;
mod norm;

pub use bohr::{ReturnGaps, BRUTE_FORCE_BELOW};
pub use irrational::{Convergent, Irrational, QuotientSource, DEFAULT_DEPTH_CAP};
pub use norm::{bits_for_tol, fold_rational, CircleEnclosure, NormInterval, MAX_REFINE_BITS};
