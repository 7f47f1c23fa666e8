//! Fractional maximal operator, potential-type operators and the Riesz potential.

pub mod kernel;
pub mod maximal;
pub mod potential;

pub use kernel::{Kernel, KernelSpec};
pub use maximal::{maximal, maximal_detailed, MassGrid, MaximalEstimate, MaximalQuery, MaximalSampler};
pub use potential::{
    farfield_bound_check, graded_integral, potential, power_twist, riesz_potential, riesz_potential_power_route, FarField,
    FarFieldGeometry,
};
