mod common;

use common::{line_instance, solve_exact};
use lidarp::event_form::build_event;
use lidarp::location_form::{build_location, decode_location, LocationGraph, START_DEPOT};
use lidarp::milp::rat;
use lidarp::route::{brute_force_solve, metrics, validate, Mode};

#[test]
fn matches_oracle() {
    for seed in 0..8 {
        let inst = line_instance(seed, 8, 4, 1 + (seed as usize % 2), 2, 60);
        let oracle = brute_force_solve(&inst, Mode::Lidarp).unwrap();
        let lm = build_location(&inst);
        let sol = solve_exact(&lm.model);
        let plan = decode_location(&inst, &lm, &sol).unwrap();
        assert_eq!(validate(&inst, &plan, Mode::Lidarp), vec![], "seed {seed}");
        let got = metrics(&inst, &plan).objective;
        assert_eq!(sol.objective, Some(rat(got)), "seed {seed}");
        assert_eq!(got, oracle.objective, "seed {seed}");
    }
}

#[test]
fn node_count_and_direct_arcs() {
    for seed in 0..5 {
        let inst = line_instance(seed, 8, 7, 2, 3, 480);
        let lm = build_location(&inst);
        assert_eq!(lm.graph.nodes.len(), 4 * 7 + 2);
        for r in 0..7 {
            assert!(lm.graph.arc(LocationGraph::pickup(r), LocationGraph::dropoff(r)).is_some());
        }
        assert!(lm.graph.arc(START_DEPOT, LocationGraph::start_turn(0)).is_some());
    }
}

#[test]
fn bigger_than_event_model() {
    for seed in 0..5 {
        let inst = line_instance(seed, 8, 8, 2, 3, 480);
        let lm = build_location(&inst).model;
        let em = build_event(&inst, Mode::Lidarp).model;
        assert!(lm.n_constraints() > em.n_constraints());
        assert!(lm.n_binary() > em.n_binary());
    }
}
