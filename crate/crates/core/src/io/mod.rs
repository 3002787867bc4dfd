//! Run configuration, field snapshots and trajectory tables.

pub mod config;
pub mod snapshot;
pub mod table;

pub use config::{GridConfig, ReconstructionSettings, RunConfig, TraceSettings, VerifySettings};
pub use snapshot::FieldSnapshot;
pub use table::{read_trajectory_table, trajectory_rows, write_rows, write_trajectory_table, TrajectoryRow};
