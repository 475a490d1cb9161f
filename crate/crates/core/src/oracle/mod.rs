//! Independent checks on the closed forms: Monte Carlo, adaptive quadrature
//! and a cohort simulation of the operating stock.

mod cohort;
mod monte_carlo;
mod quadrature;

pub use cohort::{simulate_cohort, CohortConfig, CohortEstimate};
pub use monte_carlo::{
    estimate_aggregates, estimate_profit_given_signal, sample_log_population, McEstimate,
    OracleReport, OracleRow, Population, SHARD_SIZE, Z_THRESHOLD,
};
pub use quadrature::{
    integrate, quadrature_reference, Integral, QuadratureQuantity, MAX_INTERVALS,
};
