pub mod checks;
pub mod cli;
pub mod constants;
pub mod error;
pub mod eulerian;
pub mod field;
pub mod io;
pub mod lagrangian;
pub mod presets;
pub mod reconstruct;
pub mod so3;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
