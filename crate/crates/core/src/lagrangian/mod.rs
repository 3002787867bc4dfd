//! Fluid-element trajectories on `R^3 x SO(3)` and their diagnostics.

pub mod diagnostics;
pub mod ensemble;
pub mod trajectory;

pub use diagnostics::{
    action_eval, circulation_transport, newton_residual, poynting_from_velocities, quantum_potential_gradient,
    ActionSample, LabelLoop, NewtonResidual,
};
pub use ensemble::{trace_ensemble, EnsembleSpec, Integrator};
pub use trajectory::{
    initial_velocity, integrate_classical, integrate_ensemble, integrate_guided, phase_rate, FluidLabel, Stepping,
    Trajectory, TrajectoryFlags,
};
