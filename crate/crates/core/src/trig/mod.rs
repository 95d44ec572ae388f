//! Trigonometric polynomials for the counting argument on the two-torus:
//! a non-negative window polynomial `φ_ε`, a zero-mean polynomial `φ_l`,
//! certified pointwise bounds, and Birkhoff sums of their product along the
//! rotation by `(α, θ)`.

mod birkhoff;
mod builders;
mod certify;
mod lemma;
mod poly;

pub use birkhoff::{
    birkhoff_direct, birkhoff_direct_max, birkhoff_fourier, resonance_bound, torus_from_f64, torus_signed,
    torus_to_f64, BirkhoffMax, BirkhoffSum, TorusRotation,
};
pub use builders::{build_phi_eps, build_varphi_l, PhiEps, VarphiL, MAX_ORDER, PHI_MARGIN, PHI_PAD};
pub use certify::{certify, BoundCertificate, BoundKind, MAX_CELLS};
pub use lemma::{
    effective_nprime, effective_nprime_with, resonance_witness, scan_a_membership, ClosedArc, LemmaPolys, Membership, NPrime,
    ResonanceWitness,
};
pub use poly::{fejer, jackson, jackson_indicator, smoothed_indicator, TrigPoly, TrigPolyJson};
