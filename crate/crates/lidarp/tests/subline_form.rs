mod common;

use std::collections::BTreeMap;

use common::{line_instance, solve_double, solve_exact};
use lidarp::instance::{line_metric_matrix, FleetSpec, Instance, ObjectiveWeights, Request, ServiceParams, WindowType};
use lidarp::milp::{int, rat, MilpModel, MilpSolution};
use lidarp::route::{brute_force_solve, metrics, validate, Mode};
use lidarp::subline_form::{build_subline, build_subline_model, decode_subline, SublineModel};

fn check(inst: &Instance, sm: &SublineModel, sol: &MilpSolution, label: &str) {
    let oracle = brute_force_solve(inst, Mode::Lidarp).unwrap();
    let plan = decode_subline(inst, sm, sol).unwrap();
    assert_eq!(validate(inst, &plan, Mode::Lidarp), vec![], "{label}");
    let got = metrics(inst, &plan);
    assert_eq!(got.direction_violation_count, 0, "{label}");
    assert_eq!(sol.objective, Some(rat(got.objective)), "{label}");
    assert_eq!(got.objective, oracle.objective, "{label}");
}

#[test]
fn two_requests_match_oracle_exactly() {
    for seed in 0..6 {
        let inst = line_instance(seed, 6, 2, 1 + (seed as usize % 2), 2, 60);
        let sm = build_subline(&inst);
        check(&inst, &sm, &solve_exact(&sm.model), &format!("seed {seed}"));
    }
}

#[test]
fn three_requests_match_oracle() {
    for seed in [0, 2, 4, 6] {
        let inst = line_instance(seed, 6, 3, 1, 2, 60);
        let sm = build_subline(&inst);
        check(&inst, &sm, &solve_double(&sm.model), &format!("seed {seed}"));
    }
}

fn instance(kappa: usize, n: usize, reqs: &[(usize, usize, i64)]) -> Instance {
    let requests = reqs
        .iter()
        .enumerate()
        .map(|(i, &(o, d, a))| Request {
            id: i as u32 + 1,
            origin: o,
            destination: d,
            load: 1,
            window_type: WindowType::EarliestPickup,
            anchor: a,
            service: 3,
        })
        .collect();
    Instance::new(
        line_metric_matrix(n, 3, 3),
        FleetSpec { kappa, q_max: 3, t_turn: 3 },
        ServiceParams::default(),
        ObjectiveWeights::default(),
        requests,
    )
    .unwrap()
}

#[test]
fn no_requests_gives_zero() {
    let inst = instance(2, 4, &[]);
    let sm = build_subline(&inst);
    assert_eq!(solve_exact(&sm.model).objective, Some(int(0)));
}

#[test]
fn single_request_is_accepted_without_savings() {
    let inst = instance(1, 6, &[(2, 5, 30)]);
    let sm = build_subline_model(&inst, 2);
    let sol = solve_exact(&sm.model);
    assert_eq!(sol.objective, Some(int(10)));
    check(&inst, &sm, &sol, "single");
}

#[test]
fn extra_sublines_do_not_change_the_optimum() {
    let inst = instance(1, 5, &[(1, 4, 0), (4, 2, 10)]);
    let base = solve_exact(&build_subline_model(&inst, 4).model).objective;
    let doubled = solve_exact(&build_subline_model(&inst, 8).model).objective;
    assert_eq!(base, doubled);
}

fn counts(model: &MilpModel) -> (i64, i64) {
    (model.n_constraints() as i64, model.n_vars() as i64)
}

#[test]
fn size_grows_linearly_in_sigma_and_fleet() {
    let reqs = [(1, 4, 0), (4, 2, 10), (2, 3, 20)];
    let by_sigma: Vec<_> = [2, 4, 6, 8].iter().map(|&s| counts(&build_subline_model(&instance(1, 5, &reqs), s).model)).collect();
    let step = (by_sigma[1].0 - by_sigma[0].0, by_sigma[1].1 - by_sigma[0].1);
    for w in by_sigma.windows(2).skip(1) {
        assert_eq!((w[1].0 - w[0].0, w[1].1 - w[0].1), step);
    }
    let by_kappa: Vec<_> = [1, 2, 3, 4].iter().map(|&k| counts(&build_subline_model(&instance(k, 5, &reqs), 4).model)).collect();
    let step = (by_kappa[2].0 - by_kappa[1].0, by_kappa[2].1 - by_kappa[1].1);
    assert_eq!((by_kappa[3].0 - by_kappa[2].0, by_kappa[3].1 - by_kappa[2].1), step);
}

#[test]
fn variable_families_match_definitions() {
    // n = 4, m = 2 (one per direction), one vehicle, four sublines.
    let (n, sigma) = (4usize, 4usize);
    let inst = instance(1, n, &[(1, 3, 0), (4, 2, 0)]);
    let sm = build_subline_model(&inst, sigma);
    let mut family: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &sm.model.variables {
        *family.entry(v.name.split('#').next().unwrap()).or_default() += 1;
    }
    let drives = n * (n - 1) / 2;
    let expected: BTreeMap<&str, usize> = [
        ("z", 1),
        ("u", 1),
        ("start", n),
        ("g", sigma),
        ("y", n * sigma),
        ("end", n * sigma),
        ("arr", n * sigma),
        ("dep", n * sigma),
        ("x", sigma * drives + (sigma - 1) * n),
        // each request fits the sublines of its own direction only
        ("assign", 2 * (sigma / 2)),
        ("p", 2),
        ("pbar", 2),
    ]
    .into_iter()
    .collect();
    assert_eq!(family, expected);
}
