//! Numerical engine for staged entry with costly gatekeeping in a CES
//! economy with heterogeneous firms.

pub mod economy;
pub mod equilibrium;
pub mod error;
pub mod oracle;
pub mod policy;
pub mod roots;
pub mod stats;
pub mod welfare;

pub use economy::{CostSchedule, LogCutoffs, Primitives, Regime};
pub use equilibrium::{solve_equilibrium, EquilibriumSolution, SolverOptions};
pub use error::{Error, Result};
pub use stats::{Correlation, Probability};
pub use welfare::{compute_aggregates, Aggregates};
