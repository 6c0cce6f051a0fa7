//! Model parameters, transition rates and the equilibrium laws.
//!
//! Levels are the non-negative integers `m`, identified with the rescaled
//! oscillator energies. The process jumps down from `n` at rate `rho * n` and
//! up at rate `sigma * (n + 1)`. Everything here is truncated to the levels
//! `0..=N`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default tolerance on the probability mass lost to truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Physical and numerical parameters of the truncated model.
///
/// `sigma` is derived from `beta` and `rho` so that the rates satisfy
/// detailed balance with respect to the Gibbs law. Use
/// [`ModelParams::with_free_sigma`] to build a deliberately unbalanced model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    rho: f64,
    sigma: f64,
    truncation_n: usize,
}

impl ModelParams {
    pub fn new(beta: f64, rho: f64, truncation_n: usize) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("rho", rho)?;
        check_truncation(truncation_n)?;
        let sigma = rho * crate::math::exp(-beta);
        if !(sigma > 0.0 && sigma < rho) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("derived sigma = {sigma:e} must lie strictly between 0 and rho"),
            });
        }
        Ok(Self {
            beta,
            rho,
            sigma,
            truncation_n,
        })
    }

    /// Parameters with an independent upward rate `sigma`.
    ///
    /// Only `sigma > 0` is enforced; the result generally violates detailed
    /// balance and exists to exercise the failure paths.
    pub fn with_free_sigma(beta: f64, rho: f64, sigma: f64, truncation_n: usize) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("rho", rho)?;
        check_positive("sigma", sigma)?;
        check_truncation(truncation_n)?;
        Ok(Self {
            beta,
            rho,
            sigma,
            truncation_n,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Highest retained level `N`.
    pub fn truncation_n(&self) -> usize {
        self.truncation_n
    }

    /// Number of retained levels, `N + 1`.
    pub fn levels(&self) -> usize {
        self.truncation_n + 1
    }

    /// `exp(-beta)`, the Boltzmann factor of one energy quantum.
    pub fn boltzmann_factor(&self) -> f64 {
        crate::math::exp(-self.beta)
    }

    /// Partition function `Z = 1 / (1 - exp(-beta))` of the untruncated chain.
    pub fn partition_function(&self) -> f64 {
        1.0 / -crate::math::expm1(-self.beta)
    }

    /// Gibbs mass beyond the truncation, `exp(-beta (N + 1))`.
    pub fn tail_mass(&self) -> f64 {
        crate::math::exp(-self.beta * (self.truncation_n as f64 + 1.0))
    }

    pub fn with_truncation(&self, truncation_n: usize) -> Result<Self> {
        check_truncation(truncation_n)?;
        Ok(Self {
            truncation_n,
            ..*self
        })
    }

    /// Same model with `rho` (and hence `sigma`) multiplied by `factor`.
    pub fn scaled_rates(&self, factor: f64) -> Result<Self> {
        check_positive("factor", factor)?;
        Ok(Self {
            rho: self.rho * factor,
            sigma: self.sigma * factor,
            ..*self
        })
    }

    pub fn is_detailed_balanced(&self) -> bool {
        let expected = self.rho * crate::math::exp(-self.beta);
        (self.sigma - expected).abs() <= 1e-14 * expected
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

fn check_truncation(n: usize) -> Result<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "truncation_n",
            reason: format!("must be at least 2, got {n}"),
        })
    }
}

/// Occupation probabilities `p_0..p_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDistribution {
    values: Vec<f64>,
}

impl TruncatedDistribution {
    /// Wraps raw values without checking the probability constraints.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// A probability vector: non-negative entries summing to one within `tol`.
    pub fn probability(values: Vec<f64>, tol: f64) -> Result<Self> {
        if let Some((m, &v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "distribution",
                reason: format!("entry {m} is {v}, expected >= 0"),
            });
        }
        let total = crate::sum::sum(values.iter().copied());
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidParameter {
                name: "distribution",
                reason: format!("entries sum to {total}, expected 1 within {tol:e}"),
            });
        }
        Ok(Self { values })
    }

    /// Point mass on level `m` of a chain with `levels` states.
    pub fn delta(levels: usize, m: usize) -> Result<Self> {
        if m >= levels {
            return Err(Error::IndexOutOfRange {
                index: m,
                max: levels.saturating_sub(1),
            });
        }
        let mut values = vec![0.0; levels];
        values[m] = 1.0;
        Ok(Self { values })
    }

    /// Uniform law on the levels `a..=b`.
    pub fn uniform(levels: usize, a: usize, b: usize) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidParameter {
                name: "uniform",
                reason: format!("empty range {a}..{b}"),
            });
        }
        if b >= levels {
            return Err(Error::IndexOutOfRange {
                index: b,
                max: levels.saturating_sub(1),
            });
        }
        let mut values = vec![0.0; levels];
        let mass = 1.0 / (b - a + 1) as f64;
        values[a..=b].iter_mut().for_each(|v| *v = mass);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        crate::sum::sum(self.values.iter().copied())
    }

    pub fn min_entry(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Rate `r_{m,n}` of jumping from level `n` to level `m`.
///
/// The diagonal carries minus the total escape rate, so every column of the
/// untruncated rate matrix sums to zero.
pub fn transition_rate(m: usize, n: usize, params: &ModelParams) -> Result<f64> {
    let max = params.truncation_n;
    for index in [m, n] {
        if index > max {
            return Err(Error::IndexOutOfRange { index, max });
        }
    }
    let (rho, sigma) = (params.rho, params.sigma);
    let rate = if m == n {
        -(rho * m as f64 + sigma * (m as f64 + 1.0))
    } else if m + 1 == n {
        rho * n as f64
    } else if m == n + 1 {
        sigma * (n as f64 + 1.0)
    } else {
        0.0
    };
    Ok(rate)
}

/// Gibbs law `p_m = exp(-beta m) / Z` with the untruncated partition function.
///
/// The truncated entries therefore sum to `1 - exp(-beta (N + 1))`; see
/// [`ModelParams::tail_mass`].
pub fn gibbs_distribution(params: &ModelParams) -> TruncatedDistribution {
    let norm = -crate::math::expm1(-params.beta);
    let values = (0..params.levels())
        .map(|m| norm * crate::math::exp(-params.beta * m as f64))
        .collect();
    TruncatedDistribution { values }
}

/// Stationary solution of the master equations for `sigma < rho`.
///
/// Built level by level from the balance of the rows: row 0 fixes
/// `p_1 = (sigma / rho) p_0`, and substituting into the three-term row `m`
/// leaves `p_{m+1} = (sigma / rho) p_m`. Iterating this zero-flux form
/// avoids the parasitic solution the raw three-term recurrence amplifies.
pub fn stationary_distribution(params: &ModelParams) -> Result<TruncatedDistribution> {
    let ratio = params.sigma / params.rho;
    if ratio >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("no stationary law: sigma / rho = {ratio} >= 1"),
        });
    }
    let mut values = Vec::with_capacity(params.levels());
    let mut p = 1.0 - ratio;
    for _ in 0..params.levels() {
        values.push(p);
        p *= ratio;
    }
    Ok(TruncatedDistribution { values })
}

/// Outcome of a detailed-balance scan over adjacent level pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailedBalanceReport {
    pub max_violation: f64,
    /// Lower level `m` of the worst pair `(m, m + 1)`.
    pub worst_pair: usize,
    pub tol: f64,
    pub passed: bool,
}

/// Checks `r_{m,n} p_n = r_{n,m} p_m` against the Gibbs law for every
/// adjacent pair; non-adjacent rates vanish identically.
pub fn check_detailed_balance(params: &ModelParams, tol: f64) -> DetailedBalanceReport {
    let gibbs = gibbs_distribution(params);
    let p = gibbs.values();
    let mut max_violation = 0.0_f64;
    let mut worst_pair = 0;
    for m in 0..params.truncation_n {
        let n = m + 1;
        let down = params.rho * n as f64 * p[n];
        let up = params.sigma * n as f64 * p[m];
        let violation = (down - up).abs();
        if violation > max_violation {
            max_violation = violation;
            worst_pair = m;
        }
    }
    DetailedBalanceReport {
        max_violation,
        worst_pair,
        tol,
        passed: max_violation <= tol,
    }
}

/// Right-hand side of the master equations, row by row, with the `q_{N+1}`
/// coupling of row `N` dropped.
pub fn master_rhs(params: &ModelParams, p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != params.levels() {
        return Err(Error::ShapeMismatch {
            expected: params.levels(),
            found: p.len(),
        });
    }
    let (rho, sigma) = (params.rho, params.sigma);
    let n_max = params.truncation_n;
    Ok((0..=n_max)
        .map(|m| {
            let mf = m as f64;
            let mut out = -(rho * mf + sigma * (mf + 1.0)) * p[m];
            if m < n_max {
                out += rho * (mf + 1.0) * p[m + 1];
            }
            if m > 0 {
                out += sigma * mf * p[m - 1];
            }
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    fn ln2_params(n: usize) -> ModelParams {
        ModelParams::new(LN_2, 1.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(0.0, 1.0, 10).is_err());
        assert!(ModelParams::new(1.0, -1.0, 10).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 10).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1).is_err());
        let p = ModelParams::new(1.0, 2.0, 2).unwrap();
        assert!(p.sigma() > 0.0 && p.sigma() < p.rho());
    }

    #[test]
    fn rate_examples() {
        let p = ln2_params(10);
        assert!((transition_rate(0, 0, &p).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(transition_rate(0, 1, &p).unwrap(), 1.0);
        assert_eq!(transition_rate(2, 0, &p).unwrap(), 0.0);
        assert!(matches!(
            transition_rate(11, 0, &p),
            Err(Error::IndexOutOfRange { index: 11, max: 10 })
        ));
    }

    #[test]
    fn interior_column_sums_vanish() {
        let p = ModelParams::new(1.3, 2.5, 30).unwrap();
        for n in 1..30 {
            let s: f64 = (n - 1..=n + 1)
                .map(|m| transition_rate(m, n, &p).unwrap())
                .sum();
            assert!(s.abs() < 1e-12, "column {n}: {s}");
        }
        // Column N loses the upward jump out of the truncated space.
        let n = 30;
        let s: f64 = (n - 1..=n).map(|m| transition_rate(m, n, &p).unwrap()).sum();
        let leak = -p.sigma() * (n as f64 + 1.0);
        assert!((s - leak).abs() < 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let p = ln2_params(10);
        let g = gibbs_distribution(&p);
        assert!((g.values()[0] - 0.5).abs() < 1e-15);
        assert!((g.values()[1] - 0.25).abs() < 1e-15);
        assert!((g.values()[2] - 0.125).abs() < 1e-15);
        assert!((p.partition_function() - 2.0).abs() < 1e-15);
        let deficit = 1.0 - g.total();
        assert!((deficit - p.tail_mass()).abs() < 1e-15);
    }

    #[test]
    fn stationary_examples() {
        let p = ln2_params(10);
        let s = stationary_distribution(&p).unwrap();
        assert!((s.values()[0] - 0.5).abs() < 1e-15);
        assert!((s.values()[1] - 0.25).abs() < 1e-15);
        let ratio = p.sigma() / p.rho();
        for w in s.values().windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-15);
        }
    }

    #[test]
    fn stationary_requires_sigma_below_rho() {
        let p = ModelParams::with_free_sigma(1.0, 1.0, 1.5, 10).unwrap();
        assert!(stationary_distribution(&p).is_err());
    }

    #[test]
    fn gibbs_matches_stationary() {
        let p = ModelParams::new(1.0, 1.0, 200).unwrap();
        let g = gibbs_distribution(&p);
        let s = stationary_distribution(&p).unwrap();
        for (a, b) in g.values().iter().zip(s.values()) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn stationary_solves_master_equation() {
        let p = ModelParams::new(1.0, 1.0, 100).unwrap();
        let s = stationary_distribution(&p).unwrap();
        let r = master_rhs(&p, s.values()).unwrap();
        let sup = r[..100].iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        assert!(sup <= 1e-13, "{sup}");
    }

    #[test]
    fn detailed_balance_first_pair() {
        let p = ln2_params(5);
        let g = gibbs_distribution(&p);
        let lhs = transition_rate(0, 1, &p).unwrap() * g.values()[1];
        let rhs = transition_rate(1, 0, &p).unwrap() * g.values()[0];
        assert!((lhs - 0.25).abs() < 1e-15 && (rhs - 0.25).abs() < 1e-15);
        assert!(check_detailed_balance(&p, 1e-15).passed);
    }

    #[test]
    fn detailed_balance_holds_and_breaks() {
        let p = ModelParams::new(1.0, 2.0, 50).unwrap();
        let report = check_detailed_balance(&p, 1e-15);
        assert!(report.passed, "{report:?}");

        let sigma = 1.1 * 2.0 * crate::math::exp(-1.0);
        let broken = ModelParams::with_free_sigma(1.0, 2.0, sigma, 50).unwrap();
        let report = check_detailed_balance(&broken, 1e-15);
        assert!(!report.passed);
        assert!(report.max_violation > 0.0);
        assert!(!broken.is_detailed_balanced());
    }

    #[test]
    fn distribution_constructors() {
        let d = TruncatedDistribution::delta(5, 2).unwrap();
        assert_eq!(d.values(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(TruncatedDistribution::delta(5, 5).is_err());
        let u = TruncatedDistribution::uniform(10, 0, 4).unwrap();
        assert!((u.total() - 1.0).abs() < 1e-15);
        assert!(TruncatedDistribution::probability(alloc::vec![0.5, 0.6], 1e-12).is_err());
        assert!(TruncatedDistribution::probability(alloc::vec![1.5, -0.5], 1e-12).is_err());
    }
}
