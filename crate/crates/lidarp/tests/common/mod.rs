#![allow(dead_code)]

use lidarp::instance::{generate_instance, line_metric_matrix, Instance, ObjectiveWeights, ServiceParams};
use lidarp::milp::{solve_bb, Arithmetic, BbConfig, MilpModel, MilpSolution, SolveStatus};

/// Seeded line instance with spacing 3 and turn time 3.  A short horizon
/// packs the anchors together so that pooling actually happens.
pub fn line_instance(seed: u64, n: usize, m: usize, kappa: usize, q_max: u32, horizon: i64) -> Instance {
    let matrix = line_metric_matrix(n, 3, 3);
    let params = ServiceParams { horizon, ..ServiceParams::default() };
    generate_instance(seed, n, m, kappa, q_max, &matrix, &params, &ObjectiveWeights::default()).unwrap()
}

pub fn solve_exact(model: &MilpModel) -> MilpSolution {
    let cfg = BbConfig { arithmetic: Arithmetic::Rational, gap_limit: 0.0, ..BbConfig::default() };
    let sol = solve_bb(model, &cfg);
    assert_eq!(sol.status, SolveStatus::Optimal);
    sol
}

pub fn solve_double(model: &MilpModel) -> MilpSolution {
    let sol = solve_bb(model, &BbConfig::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    sol
}
