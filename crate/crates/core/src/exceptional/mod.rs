//! Exceptional sequences `(m_n)` built from Bohr sets of α along a schedule
//! of shrinking windows, and orbit diagnostics for `{m_n θ}`.

mod orbit;
mod schedule;
mod theta;

pub(crate) use theta::dyadic_to_u64;
pub use orbit::{
    default_prefixes, density_scan, grid_cluster_check, max_gap, max_gap_fixed, orbit_points, ClusterReport, DensityRow,
};
pub use schedule::{
    build_schedule, emit_sequence, Block, ExceptionalSchedule, ExceptionalSequence, Mode, ScheduleOptions,
    ScheduleStage, ENUMERATION_BUDGET,
};
pub use theta::{RationalComboTheta, Theta, ThetaKind};
