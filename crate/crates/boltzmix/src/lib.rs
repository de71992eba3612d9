//! Two-species Boltzmann machinery for unequal particle masses: collision
//! operators, the linearized operator with macro-micro decomposition,
//! integral-kernel decay checks, and the mixture Euler/acoustic fluid
//! hierarchy with desk-scale convergence-rate studies.
//!
//! The numerical core is generic over the scalar type via [`real::Real`]
//! (`f32` or `f64`); concrete `f64` aliases live at the crate root.

pub mod collision;
pub mod config;
pub mod kernels;
pub mod linearized;
pub mod error;
pub mod experiments;
pub mod field;
pub mod fluid;
pub mod grids;
pub mod hilbert;
pub mod io;
pub mod real;
pub mod species;

pub use error::{Error, Result};
pub use real::Real;

/// Default scalar type for the shipped binaries and studies.
pub type Scalar = f64;

pub type VelocityGrid64 = grids::VelocityGrid<f64>;
pub type SpatialGrid64 = grids::SpatialGrid<f64>;
pub type AngularRule64 = grids::AngularRule<f64>;
pub type SpeciesPair64 = species::SpeciesPair<f64>;
pub type MaxwellParams64 = species::MaxwellParams<f64>;
pub type BiMaxwellParams64 = species::BiMaxwellParams<f64>;
pub type GlobalFrame64 = species::GlobalFrame<f64>;
pub type DistributionField64 = field::DistributionField<f64>;
