//! Time evolution of occupation probabilities.
//!
//! [`evolve_spectral`] expands the initial law over the weighted-orthonormal
//! eigenvectors and propagates each mode by `exp(t nu_k)`. [`evolve_ode`] is
//! an independent fixed-step RK4 integration of `dp/dt = A p`. Both report
//! the probability leaked through the truncation cut,
//! `leak(t) = sigma (N + 1) * integral_0^t p_N(s) ds`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::GeneratorMatrix;
use crate::model::{gibbs_distribution, ModelParams, TruncatedDistribution};
use crate::spectral::{spectral_gap, SpectralDecomposition};
use crate::sum::NeumaierSum;
use crate::weighted::{from_symmetric, weighted_norm};

/// Slack allowed on the exponential decay bound.
pub const DECAY_BOUND_SLACK: f64 = 1e-9;
/// Most negative entry tolerated before positivity is declared violated.
pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub total: f64,
    pub min_entry: f64,
    /// Weighted distance to the (unrenormalized) truncated Gibbs law.
    pub dist_gibbs: f64,
    /// `exp(-t gap) |p0|`, when the gap is known.
    pub bound: Option<f64>,
    /// Probability lost through the cut since `t = 0`.
    pub leak: f64,
    /// `exp(t nu_K) |p0|` for the first dropped mode `K`; zero when all
    /// modes are kept.
    pub mode_budget: f64,
}

impl StepDiagnostics {
    /// `bound - dist_gibbs`.
    pub fn slack(&self) -> Option<f64> {
        self.bound.map(|b| b - self.dist_gibbs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// `states[i]` is the distribution at `times[i]`.
    pub states: Vec<Vec<f64>>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl EvolutionResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> TruncatedDistribution {
        TruncatedDistribution::from_values(self.states[i].clone())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Domain(format!("sample times must be finite and >= 0, got {t}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be non-decreasing".into()));
    }
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}

fn diagnostics(
    params: &ModelParams,
    gibbs: &[f64],
    p: &[f64],
    leak: f64,
    bound: Option<f64>,
    mode_budget: f64,
) -> StepDiagnostics {
    let diff: Vec<f64> = p.iter().zip(gibbs).map(|(a, b)| a - b).collect();
    StepDiagnostics {
        total: crate::sum::sum(p.iter().copied()),
        min_entry: p.iter().copied().fold(f64::INFINITY, f64::min),
        dist_gibbs: weighted_norm(&diff, params.beta()),
        bound,
        leak,
        mode_budget,
    }
}

/// `expm1(t nu) / nu`, continuous at `nu = 0`.
fn integrated_exp(nu: f64, t: f64) -> f64 {
    if (nu * t).abs() < 1e-300 || nu == 0.0 {
        t
    } else {
        crate::math::expm1(nu * t) / nu
    }
}

/// Spectral propagation with every eigenpair of the truncated generator.
pub fn evolve_spectral(
    dec: &SpectralDecomposition,
    p0: &TruncatedDistribution,
    times: &[f64],
) -> Result<EvolutionResult> {
    evolve_spectral_modes(dec, p0, times, dec.len())
}

/// Spectral propagation keeping only the leading `modes` eigenpairs.
///
/// Mode 0 is the Gibbs direction and is always kept. The neglected part is
/// bounded by `exp(t nu_modes) |p0|`, reported as `mode_budget`.
pub fn evolve_spectral_modes(
    dec: &SpectralDecomposition,
    p0: &TruncatedDistribution,
    times: &[f64],
    modes: usize,
) -> Result<EvolutionResult> {
    check_times(times)?;
    let dim = dec.len();
    check_len(dim, p0.len())?;
    let modes = modes.clamp(1, dim);
    let params = *dec.params();
    let beta = params.beta();
    let n = params.truncation_n();
    let gibbs = gibbs_distribution(&params);
    let coeffs = dec.coefficients(p0.values())?;
    let p0_norm = weighted_norm(p0.values(), beta);
    let gap = spectral_gap(dec).ok();
    let leak_scale = params.sigma() * (n as f64 + 1.0);

    let mut states = Vec::with_capacity(times.len());
    let mut diags = Vec::with_capacity(times.len());
    for &t in times {
        let budget = if modes < dim {
            crate::math::exp(t * dec.eigenvalue(modes)) * p0_norm
        } else {
            0.0
        };
        let bound = gap.map(|g| crate::math::exp(-t * g) * p0_norm);
        let state = if t == 0.0 {
            p0.values().to_vec()
        } else {
            let mut y = vec![0.0; dim];
            for k in 0..modes {
                let amp = coeffs[k] * crate::math::exp(t * dec.eigenvalue(k));
                if amp == 0.0 {
                    continue;
                }
                y.iter_mut()
                    .zip(dec.sym_vector(k))
                    .for_each(|(acc, v)| *acc += amp * v);
            }
            y.iter()
                .enumerate()
                .map(|(m, &v)| from_symmetric(v, beta, m))
                .collect()
        };
        let leak = leak_scale
            * (0..modes)
                .map(|k| coeffs[k] * dec.vector(k)[n] * integrated_exp(dec.eigenvalue(k), t))
                .collect::<NeumaierSum>()
                .value();
        diags.push(diagnostics(&params, gibbs.values(), &state, leak, bound, budget));
        states.push(state);
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        states,
        diagnostics: diags,
    })
}

/// `exp(t A) p` through the full spectral resolution.
pub fn propagate(dec: &SpectralDecomposition, p: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    let dim = dec.len();
    check_len(dim, p.len())?;
    let beta = dec.params().beta();
    let coeffs = dec.coefficients(p)?;
    let mut y = vec![0.0; dim];
    for (k, c) in coeffs.iter().enumerate() {
        let amp = c * crate::math::exp(t * dec.eigenvalue(k));
        y.iter_mut()
            .zip(dec.sym_vector(k))
            .for_each(|(acc, v)| *acc += amp * v);
    }
    Ok(y.iter()
        .enumerate()
        .map(|(m, &v)| from_symmetric(v, beta, m))
        .collect())
}

/// Largest step accepted by [`evolve_ode`]: `1 / (2 max |A_mm|)`.
pub fn ode_step_bound(gen: &GeneratorMatrix) -> f64 {
    let max_diag = gen.diag().iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    1.0 / (2.0 * max_diag)
}

/// Classical fixed-step RK4 integration of `dp/dt = A p`, sampled at `times`.
///
/// Between samples the interval is split into equal sub-steps no longer than
/// `dt`, so every sample time is hit exactly. The leak is integrated as an
/// extra state component.
pub fn evolve_ode(
    gen: &GeneratorMatrix,
    p0: &TruncatedDistribution,
    times: &[f64],
    dt: f64,
) -> Result<EvolutionResult> {
    check_times(times)?;
    check_len(gen.dim(), p0.len())?;
    let bound = ode_step_bound(gen);
    if !(dt > 0.0) || dt > bound {
        return Err(Error::Stability { dt, bound });
    }
    let params = *gen.params();
    let gibbs = gibbs_distribution(&params);

    let rhs = |p: &[f64]| -> (Vec<f64>, f64) {
        let dp = gen.apply(p).expect("length checked");
        (dp, gen.leak_rate(p))
    };

    let mut p = p0.values().to_vec();
    let mut leak = 0.0;
    let mut t = 0.0;
    let mut states = Vec::with_capacity(times.len());
    let mut diags = Vec::with_capacity(times.len());
    let mut stage = vec![0.0; p.len()];
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = libm::ceil(span / dt - 1e-9).max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let (k1, l1) = rhs(&p);
                axpy_into(&mut stage, &p, 0.5 * h, &k1);
                let (k2, l2) = rhs(&stage);
                axpy_into(&mut stage, &p, 0.5 * h, &k2);
                let (k3, l3) = rhs(&stage);
                axpy_into(&mut stage, &p, h, &k3);
                let (k4, l4) = rhs(&stage);
                for i in 0..p.len() {
                    p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                leak += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            }
            t = target;
        }
        diags.push(diagnostics(&params, gibbs.values(), &p, leak, None, 0.0));
        states.push(p.clone());
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        states,
        diagnostics: diags,
    })
}

fn axpy_into(out: &mut [f64], x: &[f64], a: f64, y: &[f64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    /// `|p(t) - p_Gibbs|` in the weighted norm.
    pub lhs: f64,
    /// `exp(-t gap) |p0|`.
    pub rhs: f64,
}

impl DecayRow {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + DECAY_BOUND_SLACK
    }
}

/// Exponential relaxation towards Gibbs at the rate of the spectral gap.
pub fn decay_bound_check(
    dec: &SpectralDecomposition,
    p0: &TruncatedDistribution,
    times: &[f64],
) -> Result<Vec<DecayRow>> {
    let result = evolve_spectral(dec, p0, times)?;
    let gap = spectral_gap(dec)?;
    let p0_norm = weighted_norm(p0.values(), dec.params().beta());
    Ok(result
        .times
        .iter()
        .zip(&result.diagnostics)
        .map(|(&t, d)| DecayRow {
            t,
            lhs: d.dist_gibbs,
            rhs: crate::math::exp(-t * gap) * p0_norm,
        })
        .collect())
}

/// Least-squares slope of `ln(values)` against `ts`.
pub fn log_slope(ts: &[f64], values: &[f64]) -> Result<f64> {
    if ts.len() != values.len() || ts.len() < 2 {
        return Err(Error::Domain("need at least two matching samples".into()));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log slope needs positive values".into()));
    }
    let n = ts.len() as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let logs: Vec<f64> = values.iter().map(|v| crate::math::log(*v)).collect();
    let mean_l = logs.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, l) in ts.iter().zip(&logs) {
        num += (t - mean_t) * (l - mean_l);
        den += (t - mean_t) * (t - mean_t);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: f64,
    /// Level, or `None` for a normalization failure.
    pub level: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub min_entry: f64,
    /// Largest `|sum - 1|` after discounting the leak and the initial tail
    /// deficit.
    pub max_excess: f64,
    pub max_leak: f64,
    /// The leak exceeded `tail_tol`: mass visibly drains through the cut.
    /// This is a truncation artifact, not a failure.
    pub truncation_artifact: bool,
    pub violations: Vec<Violation>,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Positivity (`p_m(t) >= -1e-12`) and normalization
/// (`|sum - 1| <= leak + initial deficit + tail_tol`) along an evolution.
pub fn conservation_positivity_check(result: &EvolutionResult, tail_tol: f64) -> ConservationReport {
    let deficit0 = result.diagnostics.first().map_or(0.0, |d| (1.0 - d.total).abs());
    let mut report = ConservationReport {
        min_entry: f64::INFINITY,
        max_excess: 0.0,
        max_leak: 0.0,
        truncation_artifact: false,
        violations: Vec::new(),
    };
    for ((&t, state), d) in result.times.iter().zip(&result.states).zip(&result.diagnostics) {
        for (m, &v) in state.iter().enumerate() {
            report.min_entry = report.min_entry.min(v);
            if v < -POSITIVITY_TOL {
                report.violations.push(Violation {
                    t,
                    level: Some(m),
                    value: v,
                });
            }
        }
        let excess = (d.total - 1.0).abs() - d.leak.abs() - deficit0;
        report.max_excess = report.max_excess.max(excess);
        report.max_leak = report.max_leak.max(d.leak.abs());
        if excess > tail_tol {
            report.violations.push(Violation {
                t,
                level: None,
                value: d.total,
            });
        }
    }
    report.truncation_artifact = report.max_leak > tail_tol;
    report
}

/// `t |A p(t)| / |p0|` on a grid of strictly positive times.
pub fn derivative_decay_profile(
    dec: &SpectralDecomposition,
    p0: &TruncatedDistribution,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    if let Some(t) = t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Domain(format!("profile times must be > 0, got {t}")));
    }
    let p0_norm = weighted_norm(p0.values(), dec.params().beta());
    if p0_norm == 0.0 {
        return Err(Error::Domain("zero initial condition".into()));
    }
    let coeffs = dec.coefficients(p0.values())?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let s = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let nu = dec.eigenvalue(k);
                    let a = c * nu * crate::math::exp(t * nu);
                    a * a
                })
                .collect::<NeumaierSum>()
                .value();
            t * libm::sqrt(s) / p0_norm
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::build_generator;
    use crate::spectral::decompose;
    use core::f64::consts::LN_2;

    fn setup(beta: f64, rho: f64, n: usize) -> (ModelParams, SpectralDecomposition) {
        let p = ModelParams::new(beta, rho, n).unwrap();
        (p, decompose(&p).unwrap())
    }

    #[test]
    fn gibbs_is_a_fixed_point() {
        let (p, dec) = setup(1.0, 1.5, 80);
        let g = gibbs_distribution(&p);
        let r = evolve_spectral(&dec, &g, &[0.0, 0.5, 3.0, 40.0]).unwrap();
        for s in &r.states {
            for (a, b) in s.iter().zip(g.values()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        let profile = derivative_decay_profile(&dec, &g, &[0.1, 0.5, 1.0]).unwrap();
        assert!(profile.iter().all(|v| *v < 1e-12), "{profile:?}");
    }

    #[test]
    fn initial_state_is_exact() {
        let (p, dec) = setup(LN_2, 1.0, 60);
        let e0 = TruncatedDistribution::delta(p.levels(), 0).unwrap();
        let r = evolve_spectral(&dec, &e0, &[0.0, 1.0]).unwrap();
        assert_eq!(r.states[0], e0.values());
        // Reconstruction through all modes is also exact to rounding.
        let rebuilt = propagate(&dec, e0.values(), 0.0).unwrap();
        for (a, b) in rebuilt.iter().zip(e0.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxes_to_gibbs() {
        let (p, dec) = setup(LN_2, 1.0, 200);
        let gap = spectral_gap(&dec).unwrap();
        let e0 = TruncatedDistribution::delta(p.levels(), 0).unwrap();
        let r = evolve_spectral(&dec, &e0, &[40.0 / gap]).unwrap();
        let expected = [0.5, 0.25, 0.125, 0.0625];
        for (a, b) in r.states[0].iter().zip(expected) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_negative_time_and_bad_step() {
        let (p, dec) = setup(1.0, 1.0, 20);
        let e0 = TruncatedDistribution::delta(p.levels(), 0).unwrap();
        assert!(evolve_spectral(&dec, &e0, &[-1.0]).is_err());
        assert!(evolve_spectral(&dec, &e0, &[1.0, 0.5]).is_err());
        let gen = build_generator(&p);
        let too_big = 2.0 * ode_step_bound(&gen);
        assert!(matches!(
            evolve_ode(&gen, &e0, &[1.0], too_big),
            Err(Error::Stability { .. })
        ));
        assert!(derivative_decay_profile(&dec, &e0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn ode_matches_spectral() {
        let (p, dec) = setup(LN_2, 1.0, 100);
        let gen = build_generator(&p);
        let e0 = TruncatedDistribution::delta(p.levels(), 0).unwrap();
        let times = [0.5, 1.0, 5.0];
        let a = evolve_spectral(&dec, &e0, &times).unwrap();
        let b = evolve_ode(&gen, &e0, &times, 1e-3).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            let diff: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
            assert!(weighted_norm(&diff, LN_2) < 1e-8);
        }
    }

    #[test]
    fn ode_leak_accounts_for_lost_mass() {
        let (p, _) = setup(1.0, 1.0, 10);
        let gen = build_generator(&p);
        let u = TruncatedDistribution::uniform(p.levels(), 0, 4).unwrap();
        let r = evolve_ode(&gen, &u, &[1.0, 5.0, 10.0], 1e-3).unwrap();
        for d in &r.diagnostics {
            assert!((d.total + d.leak - 1.0).abs() < 1e-9, "{d:?}");
        }
        assert!(r.diagnostics[2].leak > 1e-6);
    }

    #[test]
    fn spectral_leak_matches_ode_leak() {
        let (p, dec) = setup(1.0, 1.0, 10);
        let gen = build_generator(&p);
        let u = TruncatedDistribution::uniform(p.levels(), 0, 4).unwrap();
        let times = [1.0, 5.0, 10.0];
        let a = evolve_spectral(&dec, &u, &times).unwrap();
        let b = evolve_ode(&gen, &u, &times, 1e-3).unwrap();
        for (x, y) in a.diagnostics.iter().zip(&b.diagnostics) {
            assert!((x.leak - y.leak).abs() < 1e-9, "{} vs {}", x.leak, y.leak);
            assert!((x.total + x.leak - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_mode_profile() {
        let (_, dec) = setup(LN_2, 1.0, 120);
        // The first excited mode alone; its coefficient vector is e_1.
        let p1 = TruncatedDistribution::from_values(dec.vector(1).to_vec());
        let nu1 = dec.eigenvalue(1);
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.02).collect();
        let prof = derivative_decay_profile(&dec, &p1, &grid).unwrap();
        for (t, v) in grid.iter().zip(&prof) {
            let expected = t * nu1.abs() * crate::math::exp(t * nu1);
            assert!((v - expected).abs() < 1e-10);
        }
        let peak = derivative_decay_profile(&dec, &p1, &[1.0 / nu1.abs()]).unwrap()[0];
        assert!((peak - crate::math::exp(-1.0)).abs() < 1e-10);
    }

    #[test]
    fn mode_cutoff_reports_budget() {
        let (p, dec) = setup(LN_2, 1.0, 100);
        let e0 = TruncatedDistribution::delta(p.levels(), 0).unwrap();
        let full = evolve_spectral(&dec, &e0, &[2.0]).unwrap();
        let cut = evolve_spectral_modes(&dec, &e0, &[2.0], 10).unwrap();
        let budget = cut.diagnostics[0].mode_budget;
        assert!(budget > 0.0);
        let diff: Vec<f64> = full.states[0]
            .iter()
            .zip(&cut.states[0])
            .map(|(a, b)| a - b)
            .collect();
        assert!(weighted_norm(&diff, LN_2) <= budget);
        assert_eq!(full.diagnostics[0].mode_budget, 0.0);
    }

    #[test]
    fn conservation_flags_edge_level_drain() {
        let (p, dec) = setup(1.0, 1.0, 10);
        let top = TruncatedDistribution::delta(p.levels(), 10).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let r = evolve_spectral(&dec, &top, &times).unwrap();
        let report = conservation_positivity_check(&r, 1e-10);
        assert!(report.passed(), "{report:?}");
        assert!(report.truncation_artifact);
        assert!(r.diagnostics.last().unwrap().total < 0.99);
    }

    #[test]
    fn log_slope_of_exponential() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let vs: Vec<f64> = ts.iter().map(|t| 2.0 * crate::math::exp(-0.7 * t)).collect();
        assert!((log_slope(&ts, &vs).unwrap() + 0.7).abs() < 1e-14);
        assert!(log_slope(&ts, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }
}
