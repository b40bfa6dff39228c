//! Experiment pipelines: build, solve, decode and validate one instance
//! under one formulation, and the report commands built on top of that
//! (model-size tables, objective-weight sweeps, liDARP versus DARP).
//!
//! Reports are rows of delimiter-separated values under a fixed header.
//! With a single worker and timing disabled, identical inputs produce
//! byte-identical reports.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rayon::prelude::*;
use thiserror::Error;

use crate::event_form::{build_event, decode_event, EventModel};
use crate::instance::{format_decimal, Instance, ObjectiveWeights, Rat};
use crate::location_form::{build_location, decode_location, LocationModel};
use crate::milp::{format_big, solve_bb, BbConfig, MilpModel, MilpSolution, SolveStatus};
use crate::route::{metrics, validate, DecodeError, Mode, RoutePlan, SolutionMetrics, Violation};
use crate::subline_form::{build_subline, decode_subline, SublineModel};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("DARP mode is only available with the event formulation")]
    DarpNeedsEvent,
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("report output failed: {0}")]
    Report(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formulation {
    Subline,
    Location,
    Event,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [Formulation::Subline, Formulation::Location, Formulation::Event];
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Subline => "subline",
            Formulation::Location => "location",
            Formulation::Event => "event",
        })
    }
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subline" => Ok(Formulation::Subline),
            "location" => Ok(Formulation::Location),
            "event" => Ok(Formulation::Event),
            _ => Err(format!("unknown formulation `{s}` (expected subline, location or event)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Internal,
    /// Export the model and read back a `<name> <value>` solution file.
    External,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub instance: PathBuf,
    pub formulation: Formulation,
    pub mode: Mode,
    pub solver: SolverKind,
    pub weights: Option<ObjectiveWeights>,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(instance: impl Into<PathBuf>) -> Self {
        RunConfig {
            instance: instance.into(),
            formulation: Formulation::Event,
            mode: Mode::Lidarp,
            solver: SolverKind::Internal,
            weights: None,
            time_limit: Some(Duration::from_secs(3600)),
            seed: 0,
            workers: 1,
        }
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        check_mode(self.formulation, self.mode)
    }

    pub fn bb_config(&self) -> BbConfig {
        BbConfig { time_limit: self.time_limit, workers: self.workers.max(1), ..BbConfig::default() }
    }

    /// The instance with the weight override applied.
    pub fn apply(&self, inst: &Instance) -> Instance {
        match &self.weights {
            Some(w) => inst.with_weights(w.clone()),
            None => inst.clone(),
        }
    }
}

fn check_mode(formulation: Formulation, mode: Mode) -> Result<(), HarnessError> {
    if mode == Mode::Darp && formulation != Formulation::Event {
        return Err(HarnessError::DarpNeedsEvent);
    }
    Ok(())
}

/// A built formulation, kept so that solutions can be decoded.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Subline(SublineModel),
    Location(LocationModel),
    Event(EventModel),
}

impl BuiltModel {
    pub fn build(inst: &Instance, formulation: Formulation, mode: Mode) -> Result<BuiltModel, HarnessError> {
        check_mode(formulation, mode)?;
        Ok(match formulation {
            Formulation::Subline => BuiltModel::Subline(build_subline(inst)),
            Formulation::Location => BuiltModel::Location(build_location(inst)),
            Formulation::Event => BuiltModel::Event(build_event(inst, mode)),
        })
    }

    pub fn model(&self) -> &MilpModel {
        match self {
            BuiltModel::Subline(m) => &m.model,
            BuiltModel::Location(m) => &m.model,
            BuiltModel::Event(m) => &m.model,
        }
    }

    pub fn decode(&self, inst: &Instance, sol: &MilpSolution) -> Result<RoutePlan, DecodeError> {
        match self {
            BuiltModel::Subline(m) => decode_subline(inst, m, sol),
            BuiltModel::Location(m) => decode_location(inst, m, sol),
            BuiltModel::Event(m) => decode_event(inst, m, sol),
        }
    }
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solution: MilpSolution,
    pub plan: Option<RoutePlan>,
    pub metrics: Option<SolutionMetrics>,
    pub violations: Vec<Violation>,
}

/// Decodes, measures and re-validates a solution in the given mode.
pub fn evaluate(inst: &Instance, built: &BuiltModel, mode: Mode, solution: MilpSolution) -> Result<RunOutcome, HarnessError> {
    if !solution.has_solution() {
        return Ok(RunOutcome { solution, plan: None, metrics: None, violations: Vec::new() });
    }
    let plan = built.decode(inst, &solution)?;
    let violations = validate(inst, &plan, mode);
    let m = metrics(inst, &plan);
    Ok(RunOutcome { solution, plan: Some(plan), metrics: Some(m), violations })
}

/// Build, solve with the internal solver, decode and validate.
pub fn run_pipeline(
    inst: &Instance,
    formulation: Formulation,
    mode: Mode,
    cfg: &BbConfig,
) -> Result<(BuiltModel, RunOutcome), HarnessError> {
    let built = BuiltModel::build(inst, formulation, mode)?;
    let solution = solve_bb(built.model(), cfg);
    let outcome = evaluate(inst, &built, mode, solution)?;
    Ok((built, outcome))
}

/// Generated suites are named after fleet size and request count.
pub fn suite_name(kappa: usize, m: usize) -> String {
    format!("w{kappa}-{m}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub formulation: Formulation,
    pub mode: Mode,
    pub weights: ObjectiveWeights,
    pub n_constraints: usize,
    pub n_binary: usize,
    pub n_continuous: usize,
    /// `None` for rows that were only built.
    pub status: Option<SolveStatus>,
    pub objective: Option<BigRational>,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub wall_time: Duration,
    pub accepted_share: Option<f64>,
    pub metrics: Option<SolutionMetrics>,
    pub violations: usize,
}

pub const REPORT_HEADER: [&str; 22] = [
    "name",
    "formulation",
    "mode",
    "w_accept",
    "w_dist",
    "n_constraints",
    "n_binary",
    "n_continuous",
    "status",
    "objective",
    "gap",
    "nodes",
    "wall_time_s",
    "accepted_count",
    "accepted_share",
    "saved_distance",
    "driven",
    "empty_share",
    "mean_detour",
    "mean_ride",
    "direction_violations",
    "violations",
];

fn status_label(s: &SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Feasible { .. } => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::TimeLimit => "timelimit",
    }
}

impl ReportRow {
    fn sized(name: &str, inst: &Instance, formulation: Formulation, mode: Mode, model: &MilpModel) -> ReportRow {
        ReportRow {
            name: name.to_string(),
            formulation,
            mode,
            weights: inst.weights.clone(),
            n_constraints: model.n_constraints(),
            n_binary: model.n_binary(),
            n_continuous: model.n_continuous(),
            status: None,
            objective: None,
            gap: None,
            nodes: 0,
            wall_time: Duration::ZERO,
            accepted_share: None,
            metrics: None,
            violations: 0,
        }
    }

    fn solved(name: &str, inst: &Instance, formulation: Formulation, mode: Mode, built: &BuiltModel, out: &RunOutcome, wall: Duration) -> ReportRow {
        let mut row = ReportRow::sized(name, inst, formulation, mode, built.model());
        row.status = Some(out.solution.status.clone());
        row.objective = out.solution.objective.clone();
        row.gap = out.solution.gap();
        row.nodes = out.solution.stats.nodes;
        row.wall_time = wall;
        row.metrics = out.metrics.clone();
        row.accepted_share = out.metrics.as_ref().map(|m| accepted_share(m.accepted_count, inst.requests.len()));
        row.violations = out.violations.len();
        row
    }

    /// Field values in [`REPORT_HEADER`] order; the wall time is blanked
    /// unless `timing` is set.
    pub fn fields(&self, timing: bool) -> Vec<String> {
        let opt_f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let m = self.metrics.as_ref();
        vec![
            self.name.clone(),
            self.formulation.to_string(),
            self.mode.to_string(),
            format_decimal(&self.weights.w_accept),
            format_decimal(&self.weights.w_dist),
            self.n_constraints.to_string(),
            self.n_binary.to_string(),
            self.n_continuous.to_string(),
            self.status.as_ref().map(status_label).unwrap_or("built").to_string(),
            self.objective.as_ref().map(format_big).unwrap_or_default(),
            opt_f(self.gap),
            self.nodes.to_string(),
            if timing { format!("{:.3}", self.wall_time.as_secs_f64()) } else { String::new() },
            m.map(|m| m.accepted_count.to_string()).unwrap_or_default(),
            opt_f(self.accepted_share),
            m.map(|m| format_decimal(&m.saved_distance)).unwrap_or_default(),
            m.map(|m| format_decimal(&m.driven)).unwrap_or_default(),
            opt_f(m.map(|m| m.empty_share)),
            opt_f(m.map(|m| m.mean_detour)),
            opt_f(m.map(|m| m.mean_ride)),
            m.map(|m| m.direction_violation_count.to_string()).unwrap_or_default(),
            self.violations.to_string(),
        ]
    }
}

fn accepted_share(accepted: usize, m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        accepted as f64 / m as f64
    }
}

/// Writes rows as comma-separated values with the fixed header.
pub fn write_report<W: std::io::Write>(out: W, rows: &[ReportRow], timing: bool) -> Result<(), HarnessError> {
    let err = |e: csv::Error| HarnessError::Report(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER).map_err(err)?;
    for r in rows {
        w.write_record(r.fields(timing)).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::Report(e.to_string()))
}

pub fn report_string(rows: &[ReportRow], timing: bool) -> String {
    let mut buf = Vec::new();
    write_report(&mut buf, rows, timing).expect("writing to memory");
    String::from_utf8(buf).expect("report is UTF-8")
}

/// Runs `f` over the items on `workers` threads; results keep item order.
fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Model sizes of every (instance, formulation) pair, without solving.
/// DARP mode is only reported for the event formulation.
pub fn cmd_build_report(
    instances: &[(String, Instance)],
    formulations: &[Formulation],
    mode: Mode,
    workers: usize,
) -> Result<Vec<ReportRow>, HarnessError> {
    for &f in formulations {
        check_mode(f, mode)?;
    }
    let jobs: Vec<(usize, Formulation)> =
        (0..instances.len()).flat_map(|i| formulations.iter().map(move |&f| (i, f))).collect();
    parallel_map(&jobs, workers, |&(i, f)| {
        let (name, inst) = &instances[i];
        let built = BuiltModel::build(inst, f, mode)?;
        Ok(ReportRow::sized(name, inst, f, mode, built.model()))
    })
    .into_iter()
    .collect()
}

/// Solves every instance under every formulation.
pub fn cmd_solve_report(
    instances: &[(String, Instance)],
    formulations: &[Formulation],
    mode: Mode,
    cfg: &BbConfig,
    workers: usize,
) -> Result<Vec<ReportRow>, HarnessError> {
    let jobs: Vec<(usize, Formulation)> =
        (0..instances.len()).flat_map(|i| formulations.iter().map(move |&f| (i, f))).collect();
    let single = BbConfig { workers: 1, ..cfg.clone() };
    parallel_map(&jobs, workers, |&(i, f)| {
        let (name, inst) = &instances[i];
        solve_row(name, inst, f, mode, &single)
    })
    .into_iter()
    .collect()
}

pub fn solve_row(name: &str, inst: &Instance, f: Formulation, mode: Mode, cfg: &BbConfig) -> Result<ReportRow, HarnessError> {
    let start = Instant::now();
    let (built, out) = run_pipeline(inst, f, mode, cfg)?;
    Ok(ReportRow::solved(name, inst, f, mode, &built, &out, start.elapsed()))
}

/// Weight pairs of the trade-off study, from distance-focused to
/// acceptance-focused: `(w_accept, w_dist)`.
pub fn default_sweep() -> Vec<ObjectiveWeights> {
    vec![ObjectiveWeights::new(1, 10), ObjectiveWeights::new(1, 1), ObjectiveWeights::new(10, 1)]
}

/// One solve per weight pair, in the given order.
pub fn cmd_sweep_weights(
    name: &str,
    inst: &Instance,
    formulation: Formulation,
    weights: &[ObjectiveWeights],
    cfg: &BbConfig,
) -> Result<Vec<ReportRow>, HarnessError> {
    weights.iter().map(|w| solve_row(name, &inst.with_weights(w.clone()), formulation, Mode::Lidarp, cfg)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lidarp: ReportRow,
    pub darp: ReportRow,
    /// DARP minus liDARP.
    pub objective_delta: Option<BigRational>,
    pub saved_distance_delta: Option<Rat>,
    /// Backtracking moves in the DARP plan that liDARP would forbid.
    pub darp_direction_violations: Option<usize>,
    pub mean_ride_delta: Option<f64>,
}

impl Comparison {
    pub fn delta_fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("objective_delta", self.objective_delta.as_ref().map(format_big).unwrap_or_default()),
            ("saved_distance_delta", self.saved_distance_delta.as_ref().map(format_decimal).unwrap_or_default()),
            ("darp_direction_violations", self.darp_direction_violations.map(|v| v.to_string()).unwrap_or_default()),
            ("mean_ride_delta", self.mean_ride_delta.map(|v| format!("{v:.6}")).unwrap_or_default()),
        ]
    }
}

/// Event formulation in both modes with free turns.
pub fn cmd_compare(name: &str, inst: &Instance, cfg: &BbConfig) -> Result<Comparison, HarnessError> {
    let inst = inst.with_turn_time(0);
    let lidarp = solve_row(name, &inst, Formulation::Event, Mode::Lidarp, cfg)?;
    let darp = solve_row(name, &inst, Formulation::Event, Mode::Darp, cfg)?;
    let objective_delta = match (&darp.objective, &lidarp.objective) {
        (Some(d), Some(l)) => Some(d - l),
        _ => None,
    };
    let (lm, dm) = (lidarp.metrics.as_ref(), darp.metrics.as_ref());
    let saved_distance_delta = lm.zip(dm).map(|(l, d)| d.saved_distance - l.saved_distance);
    let mean_ride_delta = lm.zip(dm).map(|(l, d)| d.mean_ride - l.mean_ride);
    let darp_direction_violations = dm.map(|d| d.direction_violation_count);
    Ok(Comparison { lidarp, darp, objective_delta, saved_distance_delta, darp_direction_violations, mean_ride_delta })
}
