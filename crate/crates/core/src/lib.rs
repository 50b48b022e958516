//! Simulation and verification toolkit for extremal clusters of scored
//! point patterns.

pub mod cluster;
pub mod error;
pub mod model;
pub mod numeric;
pub mod pattern;
pub mod scoring;
pub mod simulate;
pub mod stats;
pub mod tail;

pub use error::{Error, Result};
pub use model::Model;
pub use pattern::{MarkedPoint, Pattern, Region, ScalingMap};
pub use simulate::{Boundary, MarkLaw, RngStream, SimWindow};
