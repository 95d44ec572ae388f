//! Inductive construction of atomic measures `μ_p = 2^-p Σ δ_{k_i α}` whose
//! averages `∫‖m_n θ‖ dμ_p` are small along a rigidity sequence `m_n`, with
//! exact post-hoc certification.

mod construct;
mod diagnostics;
mod measure;
mod sequence;
mod verify;

pub use construct::{build, extend, ConstructionOptions, ConstructionState, Stage};
pub use diagnostics::{
    limit_diagnostics, DiagnosticRow, DiagnosticsOptions, DiagnosticsReport, DisjointRow, MassRow,
};
pub use measure::{AtomicMeasure, ComplexBall};
pub use sequence::{RigiditySequence, SequenceKind};
pub(crate) use verify::pow2_inv;
pub use verify::{verify_properties, Check, CheckKind, CheckMethod, CertificateReport, EtaEntry, VerifyOptions};
