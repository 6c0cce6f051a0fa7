//! Exact-jump simulation of the birth-death process.
//!
//! From level `n` the process jumps down at rate `rho n` and up at rate
//! `sigma (n + 1)`; its forward equation is the untruncated master equation.
//! Paths are split into fixed-size shards. Shard `s` draws from a ChaCha8
//! stream seeded with the run seed and selected by `set_stream(s)`, so the
//! merged histograms do not depend on how shards are scheduled.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::{ModelParams, TruncatedDistribution};

/// Paths per shard.
pub const SHARD_PATHS: u64 = 8192;

/// Largest tolerated fraction of paths hitting `max_level`.
pub const MAX_CAPPED_FRACTION: f64 = 1e-3;

/// Name of the random stream, echoed in run metadata.
pub fn rng_algorithm() -> String {
    format!("ChaCha8Rng::seed_from_u64(seed) with set_stream(shard); {SHARD_PATHS} paths per shard")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub n_paths: u64,
    pub t_samples: Vec<f64>,
    pub seed: u64,
    /// Paths reaching a level above this stop and are counted as capped.
    pub max_level: usize,
}

impl TrajectoryConfig {
    pub fn new(n_paths: u64, t_samples: Vec<f64>, seed: u64, max_level: usize) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::InvalidParameter {
                name: "n_paths",
                reason: "must be at least 1".into(),
            });
        }
        if t_samples.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || t_samples.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::InvalidParameter {
                name: "t_samples",
                reason: format!("must be finite, >= 0 and non-decreasing, got {t_samples:?}"),
            });
        }
        Ok(Self {
            n_paths,
            t_samples,
            seed,
            max_level,
        })
    }

    /// Config with the default level cap for `params`.
    pub fn with_default_cap(params: &ModelParams, n_paths: u64, t_samples: Vec<f64>, seed: u64) -> Result<Self> {
        Self::new(n_paths, t_samples, seed, default_max_level(params))
    }

    pub fn shards(&self) -> u64 {
        self.n_paths.div_ceil(SHARD_PATHS)
    }
}

/// `4 * (mean + 10 sd)` of the Gibbs law, and at least `N`.
pub fn default_max_level(params: &ModelParams) -> usize {
    let x = params.boltzmann_factor();
    let mean = x / (1.0 - x);
    let sd = libm::sqrt(x) / (1.0 - x);
    let cap = libm::ceil(4.0 * (mean + 10.0 * sd)) as usize;
    cap.max(params.truncation_n())
}

/// Raw level counts of one or more shards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardCounts {
    /// `counts[i][n]`: paths at level `n` at sample time `i`.
    pub counts: Vec<Vec<u64>>,
    pub capped: u64,
    pub paths: u64,
}

impl ShardCounts {
    pub fn empty(samples: usize, max_level: usize) -> Self {
        Self {
            counts: vec![vec![0; max_level + 1]; samples],
            capped: 0,
            paths: 0,
        }
    }

    /// Adds `other` in place; addition of counts is order-independent.
    pub fn merge(&mut self, other: &ShardCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.capped += other.capped;
        self.paths += other.paths;
    }
}

fn initial_law(p0: &TruncatedDistribution) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p0.values().iter().copied()).map_err(|e| Error::InvalidParameter {
        name: "p0",
        reason: format!("not a sampling distribution: {e}"),
    })
}

/// Simulates the paths of shard `shard`.
pub fn simulate_shard(
    params: &ModelParams,
    config: &TrajectoryConfig,
    p0: &TruncatedDistribution,
    shard: u64,
) -> Result<ShardCounts> {
    let first = shard * SHARD_PATHS;
    if first >= config.n_paths {
        return Err(Error::IndexOutOfRange {
            index: shard as usize,
            max: config.shards().saturating_sub(1) as usize,
        });
    }
    let paths = SHARD_PATHS.min(config.n_paths - first);
    let start = initial_law(p0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(shard);

    let (rho, sigma) = (params.rho(), params.sigma());
    let mut out = ShardCounts::empty(config.t_samples.len(), config.max_level);
    out.paths = paths;
    'paths: for _ in 0..paths {
        let mut level = start.sample(&mut rng);
        let mut t = 0.0;
        let draw_wait = |level: usize, rng: &mut ChaCha8Rng| {
            let n = level as f64;
            let e: f64 = rng.sample(Exp1);
            e / (rho * n + sigma * (n + 1.0))
        };
        let mut next = t + draw_wait(level, &mut rng);
        for (i, &ts) in config.t_samples.iter().enumerate() {
            while next <= ts {
                t = next;
                let n = level as f64;
                let down = rho * n;
                let total = down + sigma * (n + 1.0);
                if rng.random::<f64>() * total < down {
                    level -= 1;
                } else {
                    level += 1;
                    if level > config.max_level {
                        out.capped += 1;
                        continue 'paths;
                    }
                }
                next = t + draw_wait(level, &mut rng);
            }
            out.counts[i][level] += 1;
        }
    }
    Ok(out)
}

/// Empirical distributions at the sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub times: Vec<f64>,
    /// Fractions of paths on levels `0..=N`.
    pub histograms: Vec<TruncatedDistribution>,
    /// Binomial standard errors `sqrt(p (1 - p) / n_paths)` per level.
    pub std_errors: Vec<Vec<f64>>,
    /// Fraction of paths above `N` (but at most `max_level`).
    pub above_truncation: Vec<f64>,
    pub capped_paths: u64,
    pub n_paths: u64,
    pub algorithm: String,
}

/// Normalizes merged counts; fails when too many paths were capped.
pub fn finalize(params: &ModelParams, config: &TrajectoryConfig, counts: &ShardCounts) -> Result<SampleResult> {
    if counts.capped as f64 > MAX_CAPPED_FRACTION * counts.paths as f64 {
        return Err(Error::LevelCap {
            capped: counts.capped,
            paths: counts.paths,
            max_level: config.max_level,
        });
    }
    let n = params.truncation_n();
    let total = counts.paths as f64;
    let mut histograms = Vec::with_capacity(counts.counts.len());
    let mut std_errors = Vec::with_capacity(counts.counts.len());
    let mut above = Vec::with_capacity(counts.counts.len());
    for row in &counts.counts {
        let probs: Vec<f64> = (0..=n)
            .map(|m| row.get(m).copied().unwrap_or(0) as f64 / total)
            .collect();
        std_errors.push(probs.iter().map(|p| libm::sqrt(p * (1.0 - p) / total)).collect());
        above.push(row.iter().skip(n + 1).sum::<u64>() as f64 / total);
        histograms.push(TruncatedDistribution::from_values(probs));
    }
    Ok(SampleResult {
        times: config.t_samples.clone(),
        histograms,
        std_errors,
        above_truncation: above,
        capped_paths: counts.capped,
        n_paths: counts.paths,
        algorithm: rng_algorithm(),
    })
}

/// Runs every shard in order and merges the histograms.
pub fn gillespie_sample(
    params: &ModelParams,
    config: &TrajectoryConfig,
    p0: &TruncatedDistribution,
) -> Result<SampleResult> {
    if config.max_level < params.truncation_n() {
        return Err(Error::InvalidParameter {
            name: "max_level",
            reason: format!("{} is below the truncation {}", config.max_level, params.truncation_n()),
        });
    }
    let mut merged = ShardCounts::empty(config.t_samples.len(), config.max_level);
    for shard in 0..config.shards() {
        merged.merge(&simulate_shard(params, config, p0, shard)?);
    }
    finalize(params, config, &merged)
}

/// Total-variation distance `1/2 sum |p_m - q_m|`.
pub fn total_variation(p: &TruncatedDistribution, q: &TruncatedDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(0.5 * crate::sum::sum(p.values().iter().zip(q.values()).map(|(a, b)| (a - b).abs())))
}
