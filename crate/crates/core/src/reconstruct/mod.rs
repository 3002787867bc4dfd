//! Eulerian fields rebuilt from the Lagrangian description.

pub mod compare;
pub mod deformation;
pub mod phase;
pub mod pipeline;

pub use compare::{compare, compare_em, ErrorReport};
pub use deformation::{
    cloud_labels, cofactor_matrix, deformation, flow_from_cloud, CloudStep, DeformationData, JACOBIAN_FLOOR,
};
pub use phase::{
    gradient_from_velocities, line_integral_phase, line_integral_phase_from, reconstruct_phase, reference_gauge,
    weber_rate, wrap_difference, PhaseComparison, Point, ReferenceGauge,
};
pub use pipeline::{
    assemble_fields, invert_labels, reconstruct, reconstruct_queries, reference_spinor, DensityRoute, LabelMapSample,
    QuerySample, ReconstructedState, ReconstructionConfig,
};
