//! Monte Carlo estimates of the aggregates from raw bivariate-normal draws.
//!
//! Draws come from ChaCha8 streams: shard `i` of a run with seed `s` uses
//! `ChaCha8Rng::seed_from_u64(s)` on stream `i`. Shards have a fixed size,
//! so results do not depend on how many threads run them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economy::{expected_joint_profit, LogCutoffs, Primitives};
use crate::error::{Error, Result};
use crate::stats::{bvn_cdf, std_normal_cdf, tilted_upper_tail2};

/// Draws per shard.
pub const SHARD_SIZE: usize = 1 << 16;

/// `|z|` above which an estimate is flagged.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub seed: u64,
}

/// Running mean and sum of squared deviations; merged in shard order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Self {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
        }
    }

    fn estimate(&self, seed: u64) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var.max(0.0) / self.n as f64).sqrt(),
            n: self.n,
            seed,
        }
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

fn shard_len(n: usize, shard: usize) -> usize {
    SHARD_SIZE.min(n - shard * SHARD_SIZE)
}

/// Runs `visit` over every shard in parallel and returns per-shard results
/// in shard order.
fn map_shards<T, F>(n: usize, seed: u64, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let shards = n.div_ceil(SHARD_SIZE);
    (0..shards)
        .into_par_iter()
        .map(|i| visit(&mut shard_rng(seed, i), shard_len(n, i)))
        .collect()
}

/// A reproducible population of log types `(p, t)`, generated on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub rho: f64,
    pub n: usize,
    pub seed: u64,
}

impl Population {
    /// Visits every draw of every shard, handing each shard's draws to
    /// `visit` in generation order.
    fn map_draws<T, F>(&self, visit: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut dyn Iterator<Item = (f64, f64)>) -> T + Sync,
    {
        let rho = self.rho;
        let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
        map_shards(self.n, self.seed, |rng, len| {
            let mut draws = (0..len).map(|_| {
                let t: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample(StandardNormal);
                (rho * t + s * z, t)
            });
            visit(&mut draws)
        })
    }

    /// All draws `(p, t)` in order.
    pub fn draws(&self) -> Vec<(f64, f64)> {
        self.map_draws(|it| it.collect::<Vec<_>>()).concat()
    }
}

/// `(p, t)` with `t ~ N(0,1)` and `p = ρt + √(1−ρ²) z`.
pub fn sample_log_population(rho: f64, n: usize, seed: u64) -> Result<Population> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    Ok(Population { rho, n, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub name: String,
    pub closed_form: f64,
    pub estimate: McEstimate,
    pub z_score: f64,
}

impl OracleRow {
    fn new(name: &str, closed_form: f64, estimate: McEstimate) -> Self {
        let z_score = if estimate.std_error > 0.0 {
            (closed_form - estimate.mean) / estimate.std_error
        } else if closed_form == estimate.mean {
            0.0
        } else {
            f64::INFINITY.copysign(closed_form - estimate.mean)
        };
        Self {
            name: name.to_owned(),
            closed_form,
            estimate,
            z_score,
        }
    }

    pub fn flagged(&self) -> bool {
        !(self.z_score.abs() <= Z_THRESHOLD)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    /// Quantities that could not be compared, with the reason.
    pub issues: Vec<String>,
}

impl OracleReport {
    pub fn passes(&self) -> bool {
        self.issues.is_empty() && self.rows.iter().all(|r| !r.flagged())
    }

    pub fn row(&self, name: &str) -> Option<&OracleRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Sample estimates of `P_θ`, `P_φ`, `S` and `π̆` at the given cutoffs,
/// compared with their closed forms.
pub fn estimate_aggregates(
    pop: &Population,
    prim: &Primitives,
    cutoffs: &LogCutoffs,
) -> Result<OracleReport> {
    let LogCutoffs { t_star, p_star, .. } = *cutoffs;
    let k = prim.k();
    let f = prim.f;
    let profit_defined = p_star.is_finite();

    let shards = pop.map_draws(|draws| {
        let mut m = [Moments::default(); 4];
        for (p, t) in draws {
            let activated = t >= t_star;
            let operating = activated && p >= p_star;
            m[0].push(if activated { 1.0 } else { 0.0 });
            m[1].push(if operating { 1.0 } else { 0.0 });
            m[2].push(if operating { (k * p).exp() } else { 0.0 });
            if profit_defined {
                m[3].push(if operating {
                    f * ((k * (p - p_star)).exp() - 1.0)
                } else {
                    0.0
                });
            }
        }
        m
    });
    let m = shards.into_iter().fold([Moments::default(); 4], |acc, s| {
        [
            acc[0].merge(s[0]),
            acc[1].merge(s[1]),
            acc[2].merge(s[2]),
            acc[3].merge(s[3]),
        ]
    });
    let est = |i: usize| m[i].estimate(pop.seed);

    let rho = pop.rho;
    let mut rows = vec![
        OracleRow::new("P_theta", std_normal_cdf(-t_star), est(0)),
        OracleRow::new("P_phi", bvn_cdf(-p_star, -t_star, rho)?, est(1)),
        OracleRow::new("S", tilted_upper_tail2(k, p_star, t_star, rho)?, est(2)),
    ];
    let mut issues = Vec::new();
    if profit_defined {
        rows.push(OracleRow::new(
            "pi_breve",
            expected_joint_profit(prim, rho, cutoffs)?,
            est(3),
        ));
    } else {
        issues.push(format!("pi_breve undefined at p* = {p_star}"));
    }
    if est(1).mean == 0.0 {
        issues.push(
            Error::DegenerateSample(format!(
                "no operating draws among {} at cutoffs ({t_star}, {p_star})",
                pop.n
            ))
            .to_string(),
        );
    }
    Ok(OracleReport { rows, issues })
}

/// Samples `p | t ~ N(ρt, 1−ρ²)` and averages flow profit over `p ≥ p*`.
pub fn estimate_profit_given_signal(
    t: f64,
    prim: &Primitives,
    rho: f64,
    p_star: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
    }
    if n == 0 || !t.is_finite() || p_star.is_nan() {
        return Err(Error::Domain("need n ≥ 1, finite t and a cutoff".into()));
    }
    let k = prim.k();
    let mean = rho * t;
    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let shards = map_shards(n, seed, |rng, len| {
        let mut m = Moments::default();
        for _ in 0..len {
            let z: f64 = rng.sample(StandardNormal);
            let p = mean + s * z;
            m.push(if p >= p_star {
                prim.f * ((k * (p - p_star)).exp() - 1.0)
            } else {
                0.0
            });
        }
        m
    });
    let m = shards.into_iter().fold(Moments::default(), Moments::merge);
    Ok(m.estimate(seed))
}
