//! Weighted sequence-space geometry.
//!
//! The generator is symmetric for the inner product
//! `<p, q> = sum_m w_m p_m conj(q_m)` with `w_m = exp(beta m)`, and its domain
//! carries the Sobolev-type norm `sum_m w_m (1 + m^2) |p_m|^2`. Weights grow
//! exponentially, so every term is evaluated in the log domain once
//! `beta m` approaches the overflow threshold, and sums are compensated.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Exponents above this are handled in the log domain.
const LOG_DOMAIN_THRESHOLD: f64 = 600.0;

/// `1 + pi sqrt(6) / 6`, the constant of the `h1 -> l1(w^(1/2))` embedding.
pub const EMBEDDING_CONSTANT: f64 = 1.0 + core::f64::consts::PI * 2.449_489_742_783_178 / 6.0;

/// Weights `w_m = exp(beta m)` for `m = 0..levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    beta: f64,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(beta: f64, levels: usize) -> Self {
        let weights = (0..levels).map(|m| crate::math::exp(beta * m as f64)).collect();
        Self { beta, weights }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `x * exp(exponent)` without intermediate overflow or underflow of the
/// exponential factor. Results below the smallest normal are flushed to 0.
pub(crate) fn scale_exp(x: f64, exponent: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let out = if exponent.abs() < LOG_DOMAIN_THRESHOLD {
        x * crate::math::exp(exponent)
    } else {
        libm::copysign(crate::math::exp(crate::math::log(x.abs()) + exponent), x)
    };
    if out.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        out
    }
}

/// `x * exp(beta m / 2)`: p-coordinates to symmetric coordinates.
pub fn to_symmetric(x: f64, beta: f64, m: usize) -> f64 {
    scale_exp(x, 0.5 * beta * m as f64)
}

/// `x * exp(-beta m / 2)`: symmetric coordinates to p-coordinates.
pub fn from_symmetric(x: f64, beta: f64, m: usize) -> f64 {
    scale_exp(x, -0.5 * beta * m as f64)
}

/// `w_m * a * b` for non-negative magnitudes.
fn weighted_product(a: f64, b: f64, log_weight: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else if log_weight < LOG_DOMAIN_THRESHOLD {
        crate::math::exp(log_weight) * a * b
    } else {
        crate::math::exp(log_weight + crate::math::log(a) + crate::math::log(b))
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}

/// `sum_m w_m p_m conj(q_m)` with `w_m = exp(beta m)`.
pub fn weighted_inner_product(p: &[Complex64], q: &[Complex64], beta: f64) -> Result<Complex64> {
    check_len(p.len(), q.len())?;
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for (m, (a, b)) in p.iter().zip(q).enumerate() {
        let (na, nb) = (a.norm(), b.norm());
        let mag = weighted_product(na, nb, beta * m as f64);
        if mag == 0.0 {
            continue;
        }
        let phase = a * b.conj() / (na * nb);
        re.add(mag * phase.re);
        im.add(mag * phase.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Real counterpart of [`weighted_inner_product`].
pub fn weighted_dot(p: &[f64], q: &[f64], beta: f64) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok(p.iter()
        .zip(q)
        .enumerate()
        .map(|(m, (a, b))| {
            let sign = (a * b).signum();
            sign * weighted_product(a.abs(), b.abs(), beta * m as f64)
        })
        .collect::<NeumaierSum>()
        .value())
}

/// `sqrt(sum_m w_m |p_m|^2)`.
pub fn weighted_norm(p: &[f64], beta: f64) -> f64 {
    weighted_norm_by(p.iter().map(|x| x.abs()), beta, |_| 1.0)
}

/// Complex counterpart of [`weighted_norm`].
pub fn weighted_norm_complex(p: &[Complex64], beta: f64) -> f64 {
    weighted_norm_by(p.iter().map(|x| x.norm()), beta, |_| 1.0)
}

fn weighted_norm_by<I, F>(abs: I, beta: f64, extra: F) -> f64
where
    I: Iterator<Item = f64>,
    F: Fn(f64) -> f64,
{
    let s = abs
        .enumerate()
        .map(|(m, a)| extra(m as f64) * weighted_product(a, a, beta * m as f64))
        .collect::<NeumaierSum>()
        .value();
    libm::sqrt(s)
}

/// `sqrt(sum_m w_m (1 + m^2) |p_m|^2)`.
pub fn h1_norm(p: &[f64], beta: f64) -> f64 {
    weighted_norm_by(p.iter().map(|x| x.abs()), beta, |m| 1.0 + m * m)
}

pub fn h1_norm_complex(p: &[Complex64], beta: f64) -> f64 {
    weighted_norm_by(p.iter().map(|x| x.norm()), beta, |m| 1.0 + m * m)
}

/// `sum_m w_m (1 + m^2) p_m q_m` for real sequences.
pub fn h1_dot(p: &[f64], q: &[f64], beta: f64) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok(p.iter()
        .zip(q)
        .enumerate()
        .map(|(m, (a, b))| {
            let mf = m as f64;
            (a * b).signum() * (1.0 + mf * mf) * weighted_product(a.abs(), b.abs(), beta * mf)
        })
        .collect::<NeumaierSum>()
        .value())
}

/// `sum_m exp(beta m / 2) |p_m|`, the `l1` norm with half weights.
pub fn l1_half_weight_norm(p: &[f64], beta: f64) -> f64 {
    p.iter()
        .enumerate()
        .map(|(m, x)| to_symmetric(x.abs(), beta, m))
        .collect::<NeumaierSum>()
        .value()
}

/// Both sides of the two embedding inequalities
/// `|p|_{1, w^(1/2)} <= C |p|_{h1}` and `|p|_{2, w} <= |p|_{1, w^(1/2)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingReport {
    /// `l1` norm with weights `exp(beta m / 2)`.
    pub l1_half: f64,
    pub h1: f64,
    /// `EMBEDDING_CONSTANT * h1`.
    pub rhs: f64,
    pub l2_weighted: f64,
}

impl EmbeddingReport {
    pub fn first_holds(&self) -> bool {
        self.l1_half <= self.rhs
    }

    pub fn second_holds(&self) -> bool {
        self.l2_weighted <= self.l1_half
    }

    pub fn holds(&self) -> bool {
        self.first_holds() && self.second_holds()
    }
}

pub fn embedding_bound(p: &[f64], beta: f64) -> EmbeddingReport {
    let h1 = h1_norm(p, beta);
    EmbeddingReport {
        l1_half: l1_half_weight_norm(p, beta),
        h1,
        rhs: EMBEDDING_CONSTANT * h1,
        l2_weighted: weighted_norm(p, beta),
    }
}

/// Largest ratios of the two embedding inequalities over a random sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingSweep {
    /// Max of `|p|_{1, w^(1/2)} / (C |p|_{h1})`.
    pub first_ratio: f64,
    /// Max of `|p|_{2, w} / |p|_{1, w^(1/2)}`.
    pub second_ratio: f64,
    pub cases: usize,
}

impl EmbeddingSweep {
    pub fn holds(&self) -> bool {
        self.first_ratio <= 1.0 && self.second_ratio <= 1.0
    }
}

/// Checks both embedding inequalities on `trials` random vectors of length
/// up to `max_len` and on every vector in `extra`.
///
/// Random entries are uniform in `[-1, 1]` scaled by `exp(-d beta m / 2)`
/// with `d` uniform in `[0, 2]`, so that weighted tails range from flat to
/// fast-decaying.
pub fn embedding_sweep(beta: f64, trials: usize, max_len: usize, seed: u64, extra: &[&[f64]]) -> EmbeddingSweep {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut sweep = EmbeddingSweep {
        first_ratio: 0.0,
        second_ratio: 0.0,
        cases: 0,
    };
    let mut record = |p: &[f64]| {
        let r = embedding_bound(p, beta);
        if r.h1 > 0.0 {
            sweep.first_ratio = sweep.first_ratio.max(r.l1_half / r.rhs);
            sweep.second_ratio = sweep.second_ratio.max(r.l2_weighted / r.l1_half);
        }
        sweep.cases += 1;
    };
    for _ in 0..trials {
        let len = rng.random_range(1..=max_len.max(1));
        let d = 2.0 * rng.random::<f64>();
        let p: Vec<f64> = (0..len)
            .map(|m| (2.0 * rng.random::<f64>() - 1.0) * crate::math::exp(-0.5 * d * beta * m as f64))
            .collect();
        record(&p);
    }
    for p in extra {
        record(p);
    }
    sweep
}
