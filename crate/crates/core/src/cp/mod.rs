//! Constraint model over operation start times and its search.

mod disjunctive;
mod local;
mod model;
mod propagate;
mod search;
mod tardiness;

pub use local::{local_search, LocalSearchConfig};
pub use model::{build_model, Bounds, CpModel};
pub use propagate::{propagate, Propagation, SearchState};
pub use search::{solve, SolveLimits, SolveResult, Status};
