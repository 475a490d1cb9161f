//! Death-renewal simulation of the operating-firm stock.
//!
//! Each period a fixed number of experimenters draw types; those clearing
//! both cutoffs join the stock, and every incumbent dies independently with
//! probability δ. The stock is recorded after inflow, where its stationary
//! mean is exactly `inflow / δ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::economy::LogCutoffs;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    /// Experimenters drawn per period; they stand for the mass `m_e`.
    pub entrants_per_period: u64,
    pub periods: usize,
    pub burn_in: usize,
    /// Batches for the batch-means standard error.
    pub batches: usize,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            entrants_per_period: 2000,
            periods: 10_000,
            burn_in: 500,
            batches: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortEstimate {
    /// Time-averaged operating mass, in units of `m_e`.
    pub m_hat: f64,
    pub std_error: f64,
    pub periods_used: usize,
}

/// Simulates the stock of operating firms for a mass `m_e` of experimenters
/// per period facing the given cutoffs.
pub fn simulate_cohort(
    rho: f64,
    cutoffs: &LogCutoffs,
    m_e: f64,
    delta: f64,
    config: &CohortConfig,
    seed: u64,
) -> Result<CohortEstimate> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "per-period death rate {delta} outside (0, 1)"
        )));
    }
    if !(m_e > 0.0 && m_e.is_finite()) {
        return Err(Error::Domain("experimenter mass must be positive".into()));
    }
    let CohortConfig {
        entrants_per_period,
        periods,
        burn_in,
        batches,
    } = *config;
    if entrants_per_period == 0 || batches < 2 || periods < burn_in + batches {
        return Err(Error::Domain("cohort run too short for batch means".into()));
    }

    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let LogCutoffs { t_star, p_star, .. } = *cutoffs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stock: u64 = 0;
    let mut path = Vec::with_capacity(periods - burn_in);

    for period in 0..periods {
        let deaths = Binomial::new(stock, delta)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(&mut rng);
        stock -= deaths;
        for _ in 0..entrants_per_period {
            let t: f64 = rng.sample(StandardNormal);
            let z: f64 = rng.sample(StandardNormal);
            if t >= t_star && rho * t + s * z >= p_star {
                stock += 1;
            }
        }
        if period >= burn_in {
            path.push(stock as f64);
        }
    }

    let len = path.len() / batches;
    let means: Vec<f64> = path
        .chunks_exact(len)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let scale = m_e / entrants_per_period as f64;
    Ok(CohortEstimate {
        m_hat: grand * scale,
        std_error: (var / batches as f64).sqrt() * scale,
        periods_used: len * batches,
    })
}
