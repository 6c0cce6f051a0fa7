//! Run configuration: defaults, JSON files, and command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use pauli_core::model::{gibbs_distribution, ModelParams, TruncatedDistribution, DEFAULT_TAIL_TOL};

use crate::{LabError, LabResult};

/// Tolerance on the normalization of an initial condition.
pub const INIT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub beta: f64,
    pub rho: f64,
    /// Truncation level `N`; levels are `0..=N`.
    pub n: usize,
    /// Number of leading eigenpairs reported or compared.
    pub k: usize,
    /// `delta:m`, `gibbs`, `uniform:a..b`, or comma-separated values.
    pub init: String,
    /// `start:step:end` or a comma-separated list.
    pub t: String,
    /// Spectral modes kept by `evolve`; all when absent.
    pub modes: Option<usize>,
    /// `spectral` or `ode` (fixed-step RK4) for `evolve`.
    pub method: String,
    /// RK4 step when `method` is `ode`.
    pub dt: f64,
    pub paths: u64,
    pub seed: u64,
    /// Monte Carlo level cap; the default depends on the Gibbs law.
    pub max_level: Option<usize>,
    /// Truncation sizes for `convergence`.
    pub sizes: Vec<usize>,
    /// Random cases for `lindblad-check` and `balance`.
    pub trials: usize,
    pub tail_tol: f64,
    pub allow_truncation_tail: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            rho: 1.0,
            n: 200,
            k: 20,
            init: "delta:0".into(),
            t: "0:0.1:20".into(),
            modes: None,
            method: "spectral".into(),
            dt: 1e-3,
            paths: 100_000,
            seed: 1,
            max_level: None,
            sizes: vec![50, 100, 200, 400],
            trials: 100,
            tail_tol: DEFAULT_TAIL_TOL,
            allow_truncation_tail: false,
        }
    }
}

/// Flags shared by every subcommand. Unset flags leave the file or default
/// value in place.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; a metadata sidecar written by an earlier run also works.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub init: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub paths: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_level: Option<usize>,
    /// Comma-separated truncation sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub tail_tol: Option<f64>,
    /// Run even when the Gibbs mass above `N` exceeds `tail_tol`.
    #[arg(long, global = true)]
    pub allow_truncation_tail: bool,
    /// CSV output path; the sidecar goes to `<out>.meta.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut c: RunConfig) -> RunConfig {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(beta, rho, n, k, init, t, method, dt, paths, seed, sizes, trials, tail_tol);
        if self.modes.is_some() {
            c.modes = self.modes;
        }
        if self.max_level.is_some() {
            c.max_level = self.max_level;
        }
        if self.allow_truncation_tail {
            c.allow_truncation_tail = true;
        }
        c
    }
}

/// Reads a config file. Accepts a bare [`RunConfig`] object or a metadata
/// sidecar, whose `config` member is used.
pub fn load_file(path: &Path) -> LabResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| LabError::Config(format!("config {} is not JSON: {e}", path.display())))?;
    let inner = match value.get("schema").and(value.get("config")) {
        Some(c) => c.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| LabError::Config(format!("config {}: {e}", path.display())))
}

/// Defaults, then the config file, then flags.
pub fn resolve(overrides: &Overrides) -> LabResult<RunConfig> {
    let base = match &overrides.config {
        Some(path) => load_file(path)?,
        None => RunConfig::default(),
    };
    Ok(overrides.apply(base))
}

impl RunConfig {
    /// Validated model parameters; refuses truncations whose Gibbs tail
    /// exceeds `tail_tol` unless explicitly allowed.
    pub fn params(&self) -> LabResult<ModelParams> {
        let p = ModelParams::new(self.beta, self.rho, self.n).map_err(|e| LabError::Config(e.to_string()))?;
        if !(self.tail_tol > 0.0) {
            return Err(LabError::Config(format!("tail_tol must be > 0, got {}", self.tail_tol)));
        }
        if p.tail_mass() > self.tail_tol && !self.allow_truncation_tail {
            return Err(LabError::Config(format!(
                "n: Gibbs mass above N = {} is {:e} > tail_tol {:e}; raise n or pass --allow-truncation-tail",
                self.n,
                p.tail_mass(),
                self.tail_tol
            )));
        }
        Ok(p)
    }

    pub fn times(&self) -> LabResult<Vec<f64>> {
        parse_times(&self.t)
    }

    pub fn initial(&self, params: &ModelParams) -> LabResult<TruncatedDistribution> {
        parse_init(&self.init, params)
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> LabError {
    LabError::Config(format!("{field}: {msg}"))
}

fn parse_f64(field: &str, s: &str) -> LabResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| config_err(field, format!("cannot parse {s:?}: {e}")))
}

/// `start:step:end` (inclusive, evaluated as `start + i step`) or a list.
pub fn parse_times(spec: &str) -> LabResult<Vec<f64>> {
    let times = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(config_err("t", format!("expected start:step:end, got {spec:?}")));
        }
        let start = parse_f64("t", parts[0])?;
        let step = parse_f64("t", parts[1])?;
        let end = parse_f64("t", parts[2])?;
        if !(step > 0.0) || !(end >= start) {
            return Err(config_err("t", format!("need step > 0 and end >= start in {spec:?}")));
        }
        let count = ((end - start) / step * (1.0 + 1e-12)).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',').map(|s| parse_f64("t", s)).collect::<LabResult<Vec<f64>>>()?
    };
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(config_err("t", format!("times must be finite and >= 0, got {spec:?}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(config_err("t", format!("times must be non-decreasing, got {spec:?}")));
    }
    Ok(times)
}

fn parse_level(s: &str) -> LabResult<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|e| config_err("init", format!("bad level {s:?}: {e}")))
}

/// Initial condition from its textual form.
///
/// `gibbs` uses the untruncated normalizer, so its sum falls short of one by
/// the tail mass, which the tail check already bounds.
pub fn parse_init(spec: &str, params: &ModelParams) -> LabResult<TruncatedDistribution> {
    let levels = params.levels();
    let spec = spec.trim();
    let core_err = |e: pauli_core::Error| config_err("init", e);
    if spec == "gibbs" {
        let g = gibbs_distribution(params);
        return TruncatedDistribution::probability(g.into_values(), INIT_SUM_TOL.max(params.tail_mass()))
            .map_err(core_err);
    }
    if let Some(m) = spec.strip_prefix("delta:") {
        return TruncatedDistribution::delta(levels, parse_level(m)?).map_err(core_err);
    }
    if let Some(range) = spec.strip_prefix("uniform:") {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| config_err("init", format!("expected uniform:a..b, got {spec:?}")))?;
        return TruncatedDistribution::uniform(levels, parse_level(a)?, parse_level(b)?).map_err(core_err);
    }
    let mut values = spec
        .split(',')
        .map(|s| parse_f64("init", s))
        .collect::<LabResult<Vec<f64>>>()?;
    if values.len() > levels {
        return Err(config_err(
            "init",
            format!("{} values given for {levels} levels", values.len()),
        ));
    }
    values.resize(levels, 0.0);
    TruncatedDistribution::probability(values, INIT_SUM_TOL).map_err(core_err)
}
