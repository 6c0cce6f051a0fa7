//! The subcommands. Each builds a table and a list of checks; [`run`] writes
//! both and turns failed checks into an error.

use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use pauli_core::evolution::{
    conservation_positivity_check, evolve_ode, evolve_spectral, evolve_spectral_modes, EvolutionResult,
    DECAY_BOUND_SLACK, POSITIVITY_TOL,
};
use pauli_core::generator::build_generator;
use pauli_core::lindblad::{diagonal_dynamics_check, preservation_check};
use pauli_core::model::{check_detailed_balance, gibbs_distribution, master_rhs, ModelParams};
use pauli_core::pencil::{build_pencil, pencil_eigen, pencil_residual, representation_defect};
use pauli_core::spectral::{decompose, eigenvector_recurrence_check, spectral_gap, truncation_convergence};
use pauli_core::stochastic::{
    default_max_level, finalize, rng_algorithm, simulate_shard, total_variation, ShardCounts, TrajectoryConfig,
};
use pauli_core::weighted::embedding_sweep;

use crate::config::RunConfig;
use crate::output::{emit, schema_tag, Cell, Check, Derived, RngInfo, Sidecar, Table};
use crate::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Leading eigenvalues, spacings and residuals.
    Spectrum,
    /// Time series of p(t) with the relaxation bound.
    Evolve,
    /// Monte Carlo histograms against the spectral solution.
    Sample,
    /// Pencil eigenvalues against the generator's.
    Pencil,
    /// Diagonal Lindblad dynamics against the master equations.
    LindbladCheck,
    /// Leading eigenvalues across truncation sizes.
    Convergence,
    /// Detailed balance, stationarity and embedding inequalities.
    Balance,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Sample => "sample",
            Command::Pencil => "pencil",
            Command::LindbladCheck => "lindblad-check",
            Command::Convergence => "convergence",
            Command::Balance => "balance",
        }
    }
}

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub checks: Vec<Check>,
    pub gap: Option<f64>,
    pub rng: Option<RngInfo>,
    pub extra: Option<serde_json::Value>,
}

impl Report {
    fn new(table: Table) -> Self {
        Self {
            table,
            checks: Vec::new(),
            gap: None,
            rng: None,
            extra: None,
        }
    }
}

pub fn execute(command: Command, config: &RunConfig) -> LabResult<Report> {
    let params = config.params()?;
    match command {
        Command::Spectrum => spectrum(config, &params),
        Command::Evolve => evolve(config, &params),
        Command::Sample => sample(config, &params),
        Command::Pencil => pencil(config, &params),
        Command::LindbladCheck => lindblad_check(config, &params),
        Command::Convergence => convergence(config, &params),
        Command::Balance => balance(config, &params),
    }
}

/// Runs `command`, writes its outputs, and fails with [`LabError::Check`]
/// when any check failed (after the outputs are written).
pub fn run(command: Command, config: &RunConfig, out: Option<&Path>) -> LabResult<Report> {
    let report = execute(command, config)?;
    let params = config.params()?;
    let sidecar = Sidecar {
        schema: schema_tag(command.name()),
        command: command.name().into(),
        config: config.clone(),
        derived: Derived {
            sigma: params.sigma(),
            partition_function: params.partition_function(),
            tail_mass: params.tail_mass(),
            levels: params.levels(),
            gap: report.gap,
        },
        checks: report.checks.clone(),
        rng: report.rng.clone(),
        columns: report.table.columns.clone(),
        extra: report.extra.clone(),
    };
    emit(&report.table, &sidecar, out)?;
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:e} (needs {} {:e})", c.name, c.value, c.relation, c.threshold))
        .collect();
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(LabError::Check(failed.join("; ")))
    }
}

fn leading(config: &RunConfig, dim: usize) -> LabResult<usize> {
    if config.k == 0 {
        return Err(LabError::Config("k: must be at least 1".into()));
    }
    Ok(config.k.min(dim))
}

fn spectrum(config: &RunConfig, params: &ModelParams) -> LabResult<Report> {
    let dec = decompose(params)?;
    let k = leading(config, dec.len())?;
    let norm = dec.matrix_norm();
    let mut table = Table::new(["k", "nu", "spacing", "residual", "recurrence"]);
    let mut max_res = 0.0_f64;
    for i in 0..k {
        let spacing = (i > 0).then(|| dec.eigenvalue(i - 1) - dec.eigenvalue(i));
        let res = dec.residual(i);
        max_res = max_res.max(res);
        // Modes whose ground entry vanishes cannot seed the recurrence.
        let rec = eigenvector_recurrence_check(&dec, i, 40).ok().map(|r| r.max_residual);
        table.push(vec![i.into(), dec.eigenvalue(i).into(), spacing.into(), res.into(), rec.into()]);
    }
    let zeros = dec.eigenvalues().iter().filter(|v| v.abs() <= 1e-10).count();
    let mut report = Report::new(table);
    report.gap = spectral_gap(&dec).ok();
    report.checks = vec![
        Check::at_most("max_residual", max_res, 1e-10 * norm.max(1.0)),
        Check::at_most("orthonormality_defect", dec.orthonormality_defect(k), 1e-10),
    ];
    // With an unresolved tail the truncated chain leaks and has no zero mode.
    let resolved = params.tail_mass() <= config.tail_tol;
    if resolved {
        report.checks.push(Check::at_most("max_eigenvalue", dec.eigenvalue(0), 1e-10));
        report.checks.push(Check::at_most("zero_eigenvalue_count_minus_one", zeros.abs_diff(1) as f64, 0.0));
    }
    report.extra = Some(json!({ "tail_resolved": resolved, "leading_eigenvalue": dec.eigenvalue(0) }));
    Ok(report)
}

fn evolve(config: &RunConfig, params: &ModelParams) -> LabResult<Report> {
    let times = config.times()?;
    let p0 = config.initial(params)?;
    let dec = decompose(params)?;
    let gap = spectral_gap(&dec)?;
    let result: EvolutionResult = match config.method.as_str() {
        "spectral" => match config.modes {
            Some(m) => evolve_spectral_modes(&dec, &p0, &times, m)?,
            None => evolve_spectral(&dec, &p0, &times)?,
        },
        "ode" => evolve_ode(&build_generator(params), &p0, &times, config.dt)
            .map_err(|e| LabError::Config(format!("dt: {e}")))?,
        other => return Err(LabError::Config(format!("method: expected spectral or ode, got {other:?}"))),
    };
    let p0_norm = pauli_core::weighted::weighted_norm(p0.values(), params.beta());

    let mut columns = vec!["t".to_string()];
    columns.extend((0..params.levels()).map(|m| format!("p_{m}")));
    columns.extend(["sum", "min", "dist_gibbs", "bound"].map(String::from));
    let mut table = Table::new(columns);
    let mut worst_slack = f64::NEG_INFINITY;
    for ((t, state), d) in result.times.iter().zip(&result.states).zip(&result.diagnostics) {
        let bound = d.bound.unwrap_or_else(|| (-t * gap).exp() * p0_norm);
        worst_slack = worst_slack.max(d.dist_gibbs - bound);
        let mut row = vec![Cell::from(*t)];
        row.extend(state.iter().map(|x| Cell::from(*x)));
        row.extend([d.total.into(), d.min_entry.into(), d.dist_gibbs.into(), bound.into()]);
        table.push(row);
    }
    let cons = conservation_positivity_check(&result, config.tail_tol);
    let mut report = Report::new(table);
    report.gap = Some(gap);
    report.checks = vec![
        Check::at_most("dist_minus_bound", worst_slack, DECAY_BOUND_SLACK),
        Check::at_least("min_entry", cons.min_entry, -POSITIVITY_TOL),
        Check::at_most("sum_excess_beyond_leak", cons.max_excess, config.tail_tol),
    ];
    let budget = result.diagnostics.iter().map(|d| d.mode_budget).fold(0.0, f64::max);
    report.extra = Some(json!({
        "max_leak": cons.max_leak,
        "truncation_artifact": cons.truncation_artifact,
        "mode_budget": budget,
    }));
    Ok(report)
}

fn sample(config: &RunConfig, params: &ModelParams) -> LabResult<Report> {
    let times = config.times()?;
    let p0 = config.initial(params)?;
    let max_level = config.max_level.unwrap_or_else(|| default_max_level(params));
    let traj = TrajectoryConfig::new(config.paths, times.clone(), config.seed, max_level)?;
    if max_level < params.truncation_n() {
        return Err(LabError::Config(format!(
            "max_level: {max_level} is below the truncation {}",
            params.truncation_n()
        )));
    }
    // Shards are independent streams; merging integer counts is
    // order-independent, so the parallel result is bit-identical to a
    // sequential run.
    let shards: Vec<ShardCounts> = (0..traj.shards())
        .into_par_iter()
        .map(|s| simulate_shard(params, &traj, &p0, s))
        .collect::<Result<_, _>>()?;
    let mut merged = ShardCounts::empty(times.len(), max_level);
    shards.iter().for_each(|s| merged.merge(s));
    let mc = finalize(params, &traj, &merged)?;

    let dec = decompose(params)?;
    let exact = evolve_spectral(&dec, &p0, &times)?;
    let mut table = Table::new(["t", "m", "empirical", "std_error", "analytic"]);
    let mut tv = Vec::with_capacity(times.len());
    for (i, t) in times.iter().enumerate() {
        let state = exact.state(i);
        for m in 0..params.levels() {
            table.push(vec![
                (*t).into(),
                m.into(),
                mc.histograms[i].values()[m].into(),
                mc.std_errors[i][m].into(),
                state.values()[m].into(),
            ]);
        }
        tv.push(total_variation(&mc.histograms[i], &state)?);
    }
    let band = 3.0 * (params.levels() as f64 / config.paths as f64).sqrt();
    let mut report = Report::new(table);
    report.gap = spectral_gap(&dec).ok();
    report.checks = vec![Check::at_most(
        "max_total_variation",
        tv.iter().cloned().fold(0.0, f64::max),
        band,
    )];
    report.rng = Some(RngInfo {
        algorithm: rng_algorithm(),
        seed: config.seed,
        shards: traj.shards(),
        max_level,
    });
    report.extra = Some(json!({
        "total_variation": tv,
        "above_truncation": mc.above_truncation,
        "capped_paths": mc.capped_paths,
        "n_paths": mc.n_paths,
    }));
    Ok(report)
}

fn pencil(config: &RunConfig, params: &ModelParams) -> LabResult<Report> {
    let dec = decompose(params)?;
    let pair = build_pencil(params);
    let eig = pencil_eigen(&pair)?;
    let k = leading(config, dec.len())?;
    let mut table = Table::new(["k", "nu_generator", "nu_pencil", "abs_diff", "residual"]);
    let (mut diff, mut res) = (0.0_f64, 0.0_f64);
    for i in 0..k {
        let d = (eig.values[i] - dec.eigenvalue(i)).abs();
        let r = pencil_residual(&pair, eig.values[i], eig.vector(i))?;
        diff = diff.max(d);
        res = res.max(r);
        table.push(vec![i.into(), dec.eigenvalue(i).into(), eig.values[i].into(), d.into(), r.into()]);
    }
    let scale = build_generator(params).matrix().norm_inf();
    let mut report = Report::new(table);
    report.gap = spectral_gap(&dec).ok();
    report.checks = vec![
        Check::at_most("max_eigenvalue_diff", diff, 1e-10),
        Check::at_most("max_residual", res, 1e-9),
        Check::at_most("representation_defect", representation_defect(&pair), 1e-15 * scale),
    ];
    Ok(report)
}

fn check_table(checks: &[Check]) -> Table {
    let mut table = Table::new(["check", "value", "relation", "threshold", "passed"]);
    for c in checks {
        table.push(vec![
            Cell::Text(c.name.clone()),
            c.value.into(),
            Cell::Text(c.relation.into()),
            c.threshold.into(),
            c.passed.into(),
        ]);
    }
    table
}

fn lindblad_check(config: &RunConfig, params: &ModelParams) -> LabResult<Report> {
    let diag = diagonal_dynamics_check(params, config.trials, config.seed)?;
    let keep = preservation_check(params, config.trials.clamp(1, 20), config.seed)?;
    let checks = vec![
        Check::at_most("diagonal_deviation", diag.max_deviation, 1e-12),
        Check::at_most("diagonal_invariance", diag.max_off_diagonal, 1e-14),
        Check::at_most("hermiticity_defect", keep.hermiticity_defect, 1e-14),
        Check::at_most("trace_excess", keep.trace_excess, 1e-13),
    ];
    let mut report = Report::new(check_table(&checks));
    report.checks = checks;
    report.extra = Some(json!({
        "cases": diag.cases,
        "row_n_deviation": diag.row_n_deviation,
        "random_states": keep.cases,
    }));
    Ok(report)
}

fn convergence(config: &RunConfig, params: &ModelParams) -> LabResult<Report> {
    let sizes = &config.sizes;
    let first = *sizes.first().ok_or_else(|| LabError::Config("sizes: empty".into()))?;
    let k = leading(config, first + 1)?;
    let table_data = truncation_convergence(params, sizes, k)?;
    let mut table = Table::new(["n", "k", "nu", "drift"]);
    for (i, n) in table_data.sizes.iter().enumerate() {
        for j in 0..k {
            table.push(vec![(*n).into(), j.into(), table_data.values[i][j].into(), table_data.drift(i, j).into()]);
        }
    }
    let mut report = Report::new(table);
    if sizes.len() >= 2 {
        let i = sizes.len() - 2;
        let last_drift = (0..k).map(|j| table_data.drift(i, j)).fold(0.0, f64::max);
        report.checks.push(Check::at_most("drift_between_largest_sizes", last_drift, 1e-8));
    }
    Ok(report)
}

fn balance(config: &RunConfig, params: &ModelParams) -> LabResult<Report> {
    let db = check_detailed_balance(params, 1e-15);
    let gibbs = gibbs_distribution(params);
    let r = master_rhs(params, gibbs.values())?;
    let n = params.truncation_n();
    let stationarity = r[..n].iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let sweep = embedding_sweep(params.beta(), config.trials, n + 1, config.seed, &[gibbs.values()]);
    let checks = vec![
        Check::at_most("detailed_balance_violation", db.max_violation, db.tol),
        Check::at_most("stationarity_residual", stationarity, 1e-13),
        Check::at_most("embedding_l1_over_h1", sweep.first_ratio, 1.0),
        Check::at_most("embedding_l2_over_l1", sweep.second_ratio, 1.0),
    ];
    let mut report = Report::new(check_table(&checks));
    report.checks = checks;
    report.extra = Some(json!({
        "worst_pair": db.worst_pair,
        "embedding_cases": sweep.cases,
        "embedding_constant": pauli_core::weighted::EMBEDDING_CONSTANT,
    }));
    Ok(report)
}
