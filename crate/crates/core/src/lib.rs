//! Discrete conformal maps of planar annuli built from finite-volume conductance networks.

pub mod geometry;
pub mod point;

pub use point::Point;
pub mod cli;
pub mod conjugate;
mod error;
pub mod network;
pub mod packing;
pub mod riemann;
pub mod solver;
pub mod uniformize;

pub use error::Error;
