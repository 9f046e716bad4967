//! Job shop scheduling by constraint programming, with variable orderings
//! learned from optimal solutions of small instances.

pub mod cp;
pub mod error;
pub mod features;
pub mod instance;
pub mod ml;
pub mod ordering;

pub use error::{Error, Result};
pub use instance::{JssInstance, Objective, OpId, Schedule, Time};
