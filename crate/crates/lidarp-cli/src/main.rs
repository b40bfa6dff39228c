use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lidarp::harness::{
    cmd_build_report, cmd_compare, cmd_solve_report, cmd_sweep_weights, default_sweep, evaluate, report_string,
    suite_name, BuiltModel, Formulation, RunConfig, SolverKind,
};
use lidarp::instance::{
    format_instance, generate_instance, line_metric_matrix, parse_decimal, parse_instance, Instance, ObjectiveWeights,
    ServiceParams,
};
use lidarp::milp::{export_lp, f64_of, format_big, format_solution, import_solution, solve_bb, Arithmetic, SolveStatus};
use lidarp::route::{format_plan, metrics, parse_plan, validate, Mode};

/// Exit status for infeasible models and plans that fail validation.
const EXIT_INFEASIBLE: u8 = 2;
/// Exit status for a time limit hit with an incumbent in hand.
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "lidarp", version, about = "Exact optimization toolkit for the line-based Dial-a-Ride problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance on an evenly spaced line.
    Gen(GenArgs),
    /// Build formulations and report their sizes without solving.
    Build(ModelArgs),
    /// Write a formulation in LP format.
    Export(ModelArgs),
    /// Solve an instance and print the decoded route plan.
    Solve(SolveArgs),
    /// Check a route plan against every rule of a mode.
    Validate(PlanArgs),
    /// Print the metrics of a route plan.
    Metrics(PlanArgs),
    /// Solve the event formulation in liDARP and DARP mode with free turns.
    Compare(CompareArgs),
    /// Solve once per objective weight pair.
    Sweep(SweepArgs),
    /// Generate a suite of instances and report sizes, optionally solving.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lidarp,
    Darp,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Lidarp => Mode::Lidarp,
            ModeArg::Darp => Mode::Darp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    Subline,
    Location,
    Event,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Formulation {
        match f {
            FormulationArg::Subline => Formulation::Subline,
            FormulationArg::Location => Formulation::Location,
            FormulationArg::Event => Formulation::Event,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Internal,
    External,
}

#[derive(Args)]
struct Common {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver time limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Seed for generated data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 8)]
    stops: usize,
    #[arg(long, default_value_t = 6)]
    requests: usize,
    #[arg(long, default_value_t = 1)]
    kappa: usize,
    #[arg(long, default_value_t = 3)]
    q_max: u32,
    /// Travel time between neighbouring stops.
    #[arg(long, default_value_t = 3)]
    spacing: i64,
    #[arg(long, default_value_t = 3)]
    t_turn: i64,
    #[arg(long, default_value_t = 480)]
    horizon: i64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Formulations to use; all three when omitted (event only for export).
    #[arg(long, value_enum)]
    formulation: Vec<FormulationArg>,
    #[arg(long, value_enum, default_value = "lidarp")]
    mode: ModeArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "event")]
    formulation: FormulationArg,
    #[arg(long, value_enum, default_value = "lidarp")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "internal")]
    solver: SolverArg,
    /// External solver output (`<name> <value>` lines) to decode.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Also write the solver's variable values to this file.
    #[arg(long)]
    write_solution: Option<PathBuf>,
    /// Objective weights as `w_accept:w_dist`.
    #[arg(long)]
    weights: Option<String>,
    /// Exact rational arithmetic instead of floating point.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, value_enum, default_value = "lidarp")]
    mode: ModeArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReportFlags {
    /// Leave the wall-time column empty so that reports are reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    report: ReportFlags,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "event")]
    formulation: FormulationArg,
    /// Comma-separated `w_accept:w_dist` pairs; defaults to 1:10,1:1,10:1.
    #[arg(long)]
    weights: Option<String>,
    #[command(flatten)]
    report: ReportFlags,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 8)]
    stops: usize,
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    /// Comma-separated request counts.
    #[arg(long, default_value = "4,8,16")]
    requests: String,
    /// Instances per request count.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 3)]
    q_max: u32,
    #[arg(long, default_value_t = 480)]
    horizon: i64,
    #[arg(long, value_enum)]
    formulation: Vec<FormulationArg>,
    /// Solve every model instead of only building it.
    #[arg(long)]
    solve: bool,
    #[command(flatten)]
    report: ReportFlags,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Export(a) => export(a),
        Command::Solve(a) => solve(a),
        Command::Validate(a) => check_plan(a),
        Command::Metrics(a) => plan_metrics(a),
        Command::Compare(a) => compare(a),
        Command::Sweep(a) => sweep(a),
        Command::Bench(a) => bench(a),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn time_limit(c: &Common) -> Result<Duration> {
    Duration::try_from_secs_f64(c.time_limit).context("--time-limit must be a non-negative number of seconds")
}

fn parse_weights(s: &str) -> Result<ObjectiveWeights> {
    let (a, d) = s.split_once(':').with_context(|| format!("weights `{s}` should look like `w_accept:w_dist`"))?;
    let w_accept = parse_decimal(a.trim()).with_context(|| format!("bad weight `{a}`"))?;
    let w_dist = parse_decimal(d.trim()).with_context(|| format!("bad weight `{d}`"))?;
    Ok(ObjectiveWeights { w_accept, w_dist })
}

fn formulations(list: &[FormulationArg]) -> Vec<Formulation> {
    if list.is_empty() {
        Formulation::ALL.to_vec()
    } else {
        list.iter().map(|&f| f.into()).collect()
    }
}

fn gen(a: GenArgs) -> Result<u8> {
    let matrix = line_metric_matrix(a.stops, a.spacing, a.t_turn);
    let params = ServiceParams { horizon: a.horizon, ..ServiceParams::default() };
    let inst = generate_instance(a.common.seed, a.stops, a.requests, a.kappa, a.q_max, &matrix, &params, &ObjectiveWeights::default())?;
    log::info!("generated {}", suite_name(a.kappa, a.requests));
    emit(&a.common.out, &format_instance(&inst))?;
    Ok(0)
}

fn build(a: ModelArgs) -> Result<u8> {
    let inst = load_instance(&a.instance)?;
    let named = vec![(instance_name(&a.instance), inst)];
    let rows = cmd_build_report(&named, &formulations(&a.formulation), a.mode.into(), a.common.workers)?;
    emit(&a.common.out, &report_string(&rows, false))?;
    Ok(0)
}

fn export(a: ModelArgs) -> Result<u8> {
    let inst = load_instance(&a.instance)?;
    let f = match a.formulation.as_slice() {
        [] => Formulation::Event,
        [f] => (*f).into(),
        _ => bail!("export takes a single --formulation"),
    };
    let built = BuiltModel::build(&inst, f, a.mode.into())?;
    emit(&a.common.out, &export_lp(built.model())?)?;
    Ok(0)
}

fn solve(a: SolveArgs) -> Result<u8> {
    let mut cfg = RunConfig::new(&a.instance);
    cfg.formulation = a.formulation.into();
    cfg.mode = a.mode.into();
    cfg.solver = match a.solver {
        SolverArg::Internal => SolverKind::Internal,
        SolverArg::External => SolverKind::External,
    };
    cfg.weights = a.weights.as_deref().map(parse_weights).transpose()?;
    cfg.time_limit = Some(time_limit(&a.common)?);
    cfg.seed = a.common.seed;
    cfg.workers = a.common.workers;
    cfg.check()?;

    let inst = cfg.apply(&load_instance(&cfg.instance)?);
    let built = BuiltModel::build(&inst, cfg.formulation, cfg.mode)?;
    let solution = match cfg.solver {
        SolverKind::Internal => {
            let mut bb = cfg.bb_config();
            if a.exact {
                bb.arithmetic = Arithmetic::Rational;
            }
            solve_bb(built.model(), &bb)
        }
        SolverKind::External => {
            let Some(path) = &a.solution else {
                bail!("--solver external needs --solution <file>; create the model with `lidarp export`");
            };
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let sol = import_solution(&text, built.model())?;
            for w in &sol.warnings {
                log::warn!("{w}");
            }
            sol
        }
    };
    if let Some(path) = &a.write_solution {
        if solution.has_solution() {
            fs::write(path, format_solution(built.model(), &solution.values))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    let status = solution.status.clone();
    let objective = solution.objective.clone();
    let gap = solution.gap();
    let outcome = evaluate(&inst, &built, cfg.mode, solution)?;
    eprintln!(
        "status={:?} objective={} gap={}",
        status,
        objective.as_ref().map(format_big).unwrap_or_else(|| "-".into()),
        gap.map(|g| format!("{g:.6}")).unwrap_or_else(|| "-".into())
    );
    let Some(plan) = &outcome.plan else {
        return match status {
            SolveStatus::Infeasible | SolveStatus::Unbounded => Ok(EXIT_INFEASIBLE),
            _ => bail!("no feasible solution found within the time limit"),
        };
    };
    emit(&a.common.out, &format_plan(plan))?;
    if let Some(m) = &outcome.metrics {
        eprint!("{m}");
    }
    if !outcome.violations.is_empty() {
        for v in &outcome.violations {
            eprintln!("violation: {v}");
        }
        return Ok(EXIT_INFEASIBLE);
    }
    Ok(match status {
        SolveStatus::Optimal => 0,
        SolveStatus::Infeasible | SolveStatus::Unbounded => EXIT_INFEASIBLE,
        SolveStatus::Feasible { .. } | SolveStatus::TimeLimit => {
            if cfg.solver == SolverKind::External {
                0
            } else {
                EXIT_TIMEOUT
            }
        }
    })
}

fn load_plan(a: &PlanArgs) -> Result<(Instance, lidarp::route::RoutePlan)> {
    let inst = load_instance(&a.instance)?;
    let text = fs::read_to_string(&a.plan).with_context(|| format!("reading {}", a.plan.display()))?;
    Ok((inst, parse_plan(&text)?))
}

fn check_plan(a: PlanArgs) -> Result<u8> {
    let (inst, plan) = load_plan(&a)?;
    let violations = validate(&inst, &plan, a.mode.into());
    let text: String = violations.iter().map(|v| format!("{v}\n")).collect();
    emit(&a.common.out, &text)?;
    Ok(if violations.is_empty() { 0 } else { EXIT_INFEASIBLE })
}

fn plan_metrics(a: PlanArgs) -> Result<u8> {
    let (inst, plan) = load_plan(&a)?;
    emit(&a.common.out, &metrics(&inst, &plan).to_string())?;
    Ok(0)
}

fn solve_config(c: &Common) -> Result<lidarp::milp::BbConfig> {
    Ok(lidarp::milp::BbConfig { time_limit: Some(time_limit(c)?), workers: c.workers.max(1), ..Default::default() })
}

fn compare(a: CompareArgs) -> Result<u8> {
    let inst = load_instance(&a.instance)?;
    let cmp = cmd_compare(&instance_name(&a.instance), &inst, &solve_config(&a.common)?)?;
    let mut text = report_string(&[cmp.lidarp.clone(), cmp.darp.clone()], !a.report.no_timing);
    let deltas = cmp.delta_fields();
    text.push('\n');
    text.push_str(&deltas.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(","));
    text.push('\n');
    text.push_str(&deltas.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(","));
    text.push('\n');
    emit(&a.common.out, &text)?;
    Ok(0)
}

fn sweep(a: SweepArgs) -> Result<u8> {
    let inst = load_instance(&a.instance)?;
    let weights = match &a.weights {
        Some(list) => list.split(',').map(parse_weights).collect::<Result<Vec<_>>>()?,
        None => default_sweep(),
    };
    let rows = cmd_sweep_weights(&instance_name(&a.instance), &inst, a.formulation.into(), &weights, &solve_config(&a.common)?)?;
    emit(&a.common.out, &report_string(&rows, !a.report.no_timing))?;
    Ok(0)
}

fn bench(a: BenchArgs) -> Result<u8> {
    let matrix = line_metric_matrix(a.stops, 3, 3);
    let params = ServiceParams { horizon: a.horizon, ..ServiceParams::default() };
    let mut suite = Vec::new();
    for m in a.requests.split(',') {
        let m: usize = m.trim().parse().with_context(|| format!("bad request count `{m}`"))?;
        for i in 0..a.count {
            let seed = a.common.seed + i;
            let inst = generate_instance(seed, a.stops, m, a.kappa, a.q_max, &matrix, &params, &ObjectiveWeights::default())?;
            let base = suite_name(a.kappa, m);
            let name = if a.count > 1 { format!("{base}_s{seed}") } else { base };
            suite.push((name, inst));
        }
    }
    let forms = formulations(&a.formulation);
    let rows = if a.solve {
        cmd_solve_report(&suite, &forms, Mode::Lidarp, &solve_config(&a.common)?, a.common.workers)?
    } else {
        cmd_build_report(&suite, &forms, Mode::Lidarp, a.common.workers)?
    };
    emit(&a.common.out, &report_string(&rows, a.solve && !a.report.no_timing))?;
    if a.solve {
        let mean = rows.iter().filter_map(|r| r.objective.as_ref().map(f64_of)).sum::<f64>() / rows.len().max(1) as f64;
        log::info!("mean objective {mean:.3}");
    }
    Ok(0)
}
