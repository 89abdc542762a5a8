//! Independent reference solvers used to validate the production solvers.

pub mod brute;
pub mod dykstra;

pub use brute::brute_force;
pub use dykstra::{dykstra_project, DykstraOutcome, DykstraState};
