//! Exact spectral evolution and the Eulerian hydrodynamic fields.

pub mod circulation;
pub mod hydro;
pub mod residuals;
pub mod spectral;

pub use circulation::{circulation, loop_integral, Loop, Winding, WINDING_TOL};
pub use hydro::{
    hydro_from_jet, local_spinors, node_threshold, polar_decompose, quantum_potential, HydroFields, NodeSet, PsiJet,
    NODE_TAU,
};
pub use residuals::{angular_moments, euler_residuals, poynting_theorem_residual, EulerResiduals, ResidualSteps};
pub use spectral::{
    evolve_spinor, helicity_generator, mode_propagator, LocalSpinor, Mode, Snapshot, SpectralField, SpectralPropagator,
    PSI_BOUND,
};
