mod common;

use common::line_instance;
use lidarp::harness::{
    cmd_build_report, cmd_compare, cmd_sweep_weights, default_sweep, report_string, suite_name, BuiltModel, Formulation,
    HarnessError, ReportRow, REPORT_HEADER,
};
use lidarp::instance::{line_metric_matrix, FleetSpec, Instance, ObjectiveWeights, Request, ServiceParams, WindowType};
use lidarp::milp::{rat, BbConfig};
use lidarp::route::{brute_force_solve, Mode};

fn named(seed: u64, m: usize, kappa: usize) -> (String, Instance) {
    (suite_name(kappa, m), line_instance(seed, 8, m, kappa, 3, 480))
}

fn row<'a>(rows: &'a [ReportRow], f: Formulation) -> &'a ReportRow {
    rows.iter().find(|r| r.formulation == f).unwrap()
}

#[test]
fn sizes_order_subline_location_event() {
    let insts = vec![named(1, 8, 2)];
    let rows = cmd_build_report(&insts, &Formulation::ALL, Mode::Lidarp, 1).unwrap();
    assert_eq!(rows.len(), 3);
    let (s, l, e) = (row(&rows, Formulation::Subline), row(&rows, Formulation::Location), row(&rows, Formulation::Event));
    assert!(s.n_constraints > l.n_constraints && l.n_constraints > e.n_constraints);
    assert!(s.n_binary > l.n_binary && l.n_binary > e.n_binary);
    assert!(rows.iter().all(|r| r.status.is_none() && r.name == "w2-8"));
}

#[test]
fn empty_instance_has_no_event_arcs() {
    let insts = vec![named(0, 0, 1)];
    let rows = cmd_build_report(&insts, &[Formulation::Event], Mode::Lidarp, 1).unwrap();
    assert_eq!(rows[0].n_binary, 0);
}

#[test]
fn doubling_requests_grows_every_model() {
    let small = cmd_build_report(&[named(4, 3, 1)], &Formulation::ALL, Mode::Lidarp, 1).unwrap();
    let large = cmd_build_report(&[named(4, 6, 1)], &Formulation::ALL, Mode::Lidarp, 1).unwrap();
    for f in Formulation::ALL {
        assert!(row(&large, f).n_binary > row(&small, f).n_binary, "{f}");
    }
}

#[test]
fn darp_needs_event_formulation() {
    let inst = line_instance(0, 5, 2, 1, 2, 60);
    assert!(matches!(BuiltModel::build(&inst, Formulation::Location, Mode::Darp), Err(HarnessError::DarpNeedsEvent)));
    assert!(BuiltModel::build(&inst, Formulation::Event, Mode::Darp).is_ok());
}

#[test]
fn sweep_trades_acceptance_for_distance() {
    let cfg = BbConfig::default();
    for seed in 0..4 {
        let inst = line_instance(seed, 8, 5, 1, 2, 90);
        let rows = cmd_sweep_weights("sweep", &inst, Formulation::Event, &default_sweep(), &cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for w in rows.windows(2) {
            let (a, b) = (w[0].metrics.as_ref().unwrap(), w[1].metrics.as_ref().unwrap());
            assert!(a.accepted_count <= b.accepted_count, "seed {seed}");
            assert!(a.saved_distance >= b.saved_distance, "seed {seed}");
        }
        assert!(rows.iter().all(|r| r.violations == 0));
    }
}

#[test]
fn acceptance_focus_accepts_everyone_when_possible() {
    let cfg = BbConfig::default();
    let w = ObjectiveWeights::new(10, 1);
    for seed in 10..14 {
        let inst = line_instance(seed, 8, 4, 2, 3, 480).with_weights(w.clone());
        let oracle = brute_force_solve(&inst, Mode::Lidarp).unwrap();
        let rows = cmd_sweep_weights("w", &inst, Formulation::Event, &[w.clone()], &cfg).unwrap();
        assert_eq!(rows[0].objective, Some(rat(oracle.objective)));
        if oracle.plan.accepted.len() == inst.requests.len() {
            assert_eq!(rows[0].accepted_share, Some(1.0));
        }
    }
}

fn request(id: u32, o: usize, d: usize, anchor: i64) -> Request {
    Request { id, origin: o, destination: d, load: 1, window_type: WindowType::EarliestPickup, anchor, service: 1 }
}

/// One vehicle, two overlapping rides in opposite directions.  Serving both
/// at once needs a turn with a passenger aboard.
fn backtracking_instance() -> Instance {
    Instance::new(
        line_metric_matrix(6, 3, 0),
        FleetSpec { kappa: 1, q_max: 2, t_turn: 0 },
        ServiceParams { alpha: rat_alpha(), beta: 0, horizon: 60 },
        ObjectiveWeights::new(10, 1),
        vec![request(1, 1, 6, 0), request(2, 5, 3, 13)],
    )
    .unwrap()
}

fn rat_alpha() -> lidarp::instance::Rat {
    lidarp::instance::Rat::from_integer(3)
}

#[test]
fn compare_reports_darp_backtracking() {
    let inst = backtracking_instance();
    let cmp = cmd_compare("bt", &inst, &BbConfig::default()).unwrap();
    let darp_oracle = brute_force_solve(&inst, Mode::Darp).unwrap();
    let lidarp_oracle = brute_force_solve(&inst, Mode::Lidarp).unwrap();
    assert_eq!(cmp.darp.objective, Some(rat(darp_oracle.objective)));
    assert_eq!(cmp.lidarp.objective, Some(rat(lidarp_oracle.objective)));
    assert!(darp_oracle.objective > lidarp_oracle.objective);
    let oracle_violations = lidarp::route::metrics(&inst, &darp_oracle.plan).direction_violation_count;
    assert!(oracle_violations > 0);
    assert_eq!(cmp.darp_direction_violations, Some(oracle_violations));
    assert_eq!(cmp.lidarp.metrics.as_ref().unwrap().direction_violation_count, 0);
    assert!(cmp.objective_delta.unwrap() > rat(lidarp::instance::Rat::from_integer(0)));
}

#[test]
fn compare_never_favours_lidarp() {
    for seed in 0..6 {
        let inst = line_instance(seed, 8, 5, 1 + seed as usize % 2, 2, 60);
        let cmp = cmd_compare("c", &inst, &BbConfig::default()).unwrap();
        assert!(cmp.darp.objective >= cmp.lidarp.objective, "seed {seed}");
        assert_eq!(cmp.lidarp.metrics.as_ref().unwrap().direction_violation_count, 0);
    }
}

#[test]
fn reports_are_reproducible() {
    let insts: Vec<_> = (0..3).map(|s| named(s, 2, 1)).collect();
    let run = || {
        let rows = lidarp::harness::cmd_solve_report(&insts, &Formulation::ALL, Mode::Lidarp, &BbConfig::default(), 1).unwrap();
        report_string(&rows, false)
    };
    let first = run();
    assert_eq!(first, run());
    assert_eq!(first.lines().next().unwrap(), REPORT_HEADER.join(","));
    assert_eq!(first.lines().count(), 1 + 9);
    let parallel = lidarp::harness::cmd_solve_report(&insts, &Formulation::ALL, Mode::Lidarp, &BbConfig::default(), 3).unwrap();
    assert_eq!(report_string(&parallel, false), first);
}
