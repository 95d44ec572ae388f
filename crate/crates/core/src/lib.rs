//! Certified computations around rigidity sequences of irrational rotations.
//!
//! * [`cf`]: continued-fraction arithmetic with exact enclosures of `‖kα‖`
//!   and Bohr-set enumeration.
//! * [`rigidity`]: inductive construction of atomic measures `μ_p` whose
//!   averages of `‖m_n θ‖` vanish along a rigidity sequence, with exact
//!   verification of the construction invariants.
//! * [`trig`]: trigonometric polynomials, certified pointwise bounds and
//!   Birkhoff sums over the two-torus rotation.
//! * [`exceptional`]: the stage schedule and the sequence whose exceptional
//!   set is `Qα + Q`, plus density diagnostics.
//! * [`cli`]: the `rigidity-lab` command-line front end.

pub mod cf;
pub mod cli;
pub mod error;
pub mod exceptional;
pub mod rigidity;
pub mod trig;

mod serde_rational;

pub use error::{Error, Result};
