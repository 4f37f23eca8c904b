//! Three-level multiscale solver for time-dependent single-phase flow in
//! two-dimensional fractured porous media.
//!
//! The solver hierarchy:
//! * fine grid: cell-centered finite volumes with an embedded fracture model,
//! * intermediate grid: nonlocal multicontinuum (NLMC) upscaling built from
//!   constrained energy-minimizing basis functions,
//! * coarse grid: spectral multiscale reduction (GMsFEM) of the NLMC system.

pub mod driver;
pub mod error;
pub mod fine;
pub mod gmsfem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod nlmc;
pub mod timestep;
pub mod util;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
