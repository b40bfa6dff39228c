mod common;

use common::{line_instance, solve_exact};
use lidarp::event_form::{build_event, decode_event, enumerate_events};
use lidarp::milp::rat;
use lidarp::route::{brute_force_solve, metrics, validate, Mode};
use proptest::prelude::*;

fn check_against_oracle(seed: u64, m: usize, kappa: usize, q_max: u32, mode: Mode) {
    let inst = line_instance(seed, 8, m, kappa, q_max, 60);
    let oracle = brute_force_solve(&inst, mode).unwrap();
    let em = build_event(&inst, mode);
    let sol = solve_exact(&em.model);
    let plan = decode_event(&inst, &em, &sol).unwrap();
    assert_eq!(validate(&inst, &plan, mode), vec![], "seed {seed}");
    let got = metrics(&inst, &plan).objective;
    assert_eq!(sol.objective, Some(rat(got)), "seed {seed}: model objective differs from plan");
    assert_eq!(got, oracle.objective, "seed {seed}");
}

#[test]
fn matches_oracle_lidarp() {
    for seed in 0..12 {
        check_against_oracle(seed, 5, 1 + (seed as usize % 2), 2, Mode::Lidarp);
    }
}

#[test]
fn matches_oracle_darp() {
    for seed in 100..108 {
        check_against_oracle(seed, 4, 1 + (seed as usize % 2), 2, Mode::Darp);
    }
}

#[test]
fn darp_enumerates_at_least_as_many_events() {
    for seed in 0..10 {
        let inst = line_instance(seed, 8, 6, 2, 3, 60);
        assert!(enumerate_events(&inst, Mode::Darp).len() >= enumerate_events(&inst, Mode::Lidarp).len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn event_optimum_is_oracle_optimum(seed in 0u64..10_000, m in 1usize..=4, kappa in 1usize..=2) {
        check_against_oracle(seed, m, kappa, 2, Mode::Lidarp);
    }
}
