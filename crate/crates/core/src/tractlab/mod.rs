//! The rectilinear tract: geometry, bound functions, cross-cuts and the
//! inductive sequence construction with its slow-escape certificate.

mod bounds;
mod distance;
mod geometry;
pub mod quadrature;
mod sequences;
mod topology;
mod verify;

pub use bounds::{bound_eval, bound_functions, Abscissa, BoundEval, GEOMETRIC_HORIZON};
pub use distance::{boundary_distance, boundary_distance_local, boundary_segments, Segment};
pub use geometry::{Lane, Opening, Piece, Rect, RectTract, TractKind, THIRD_PI};
pub use topology::{
    backtrack_depth, cross_cuts, gulf_witness, locate, locate_base, misses_base, slope_constants, verify_crosscut_stability, CrossCut,
    GulfWitness, SlopeReport, StabilityReport, StabilityRow, GULF_STEP,
};
pub use sequences::{build_sequences, build_unit_sequences, Certified, Magnitude, SequencePlan, StageRecord, BUILD_WIDENING, PLAIN_CUTOFF, VERIFY_WIDENING};
pub use verify::{verify_ahlfors, verify_plan, verify_plan_with, AhlforsModel, AhlforsReport, PlanRecord, PlanReport};
