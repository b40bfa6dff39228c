use lidarp::milp::{
    export_lp, format_solution, import_solution, int, solve_bb, solve_lp, Arithmetic, BbConfig, LpStatus, MilpModel,
    Sense, SolveStatus,
};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_binary_model(rng: &mut ChaCha8Rng, k: usize, rows: usize) -> MilpModel {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (0..k).map(|i| m.add_binary(format!("x{i}"))).collect();
    for r in 0..rows {
        let terms: Vec<_> = xs.iter().map(|&x| (int(rng.gen_range(-4..=6)), x)).collect();
        let sense = match rng.gen_range(0..5) {
            0 => Sense::Ge,
            1 => Sense::Eq,
            _ => Sense::Le,
        };
        let rhs = int(rng.gen_range(-2..=(2 * k as i64)));
        m.add_constraint(format!("c{r}"), terms, sense, rhs);
    }
    m.set_objective(xs.iter().map(|&x| (int(rng.gen_range(-5..=12)), x)));
    m
}

fn enumerate(m: &MilpModel) -> Option<BigRational> {
    let k = m.n_vars();
    let zero = int(0);
    let mut best: Option<BigRational> = None;
    for mask in 0u32..(1 << k) {
        let vals: Vec<_> = (0..k).map(|i| int(((mask >> i) & 1) as i64)).collect();
        if m.violations(&vals, &zero).is_empty() {
            let o = m.objective_value(&vals);
            if best.as_ref().is_none_or(|b| o > *b) {
                best = Some(o);
            }
        }
    }
    best
}

fn check(m: &MilpModel, arithmetic: Arithmetic) {
    let want = enumerate(m);
    let s = solve_bb(m, &BbConfig { arithmetic, ..BbConfig::default() });
    match want {
        None => assert_eq!(s.status, SolveStatus::Infeasible),
        Some(w) => {
            assert_eq!(s.status, SolveStatus::Optimal);
            assert_eq!(s.objective.as_ref(), Some(&w));
            assert_eq!(s.bound.as_ref(), Some(&w));
            let lp = solve_lp(m, arithmetic);
            assert_eq!(lp.status, LpStatus::Optimal);
            let lp_obj = lp.objective.unwrap();
            assert!(lp_obj >= w - BigRational::new(1.into(), 1_000_000.into()));
        }
    }
}

#[test]
fn fixed_seed_models_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..60 {
        let k = rng.gen_range(1..=9);
        let rows = rng.gen_range(1..=5);
        let m = random_binary_model(&mut rng, k, rows);
        check(&m, Arithmetic::Rational);
        check(&m, Arithmetic::Double);
    }
}

#[test]
fn knapsack_optimum_is_fourteen() {
    let mut m = MilpModel::new();
    let xs: Vec<_> = (1..=3).map(|i| m.add_binary(format!("x{i}"))).collect();
    m.add_constraint("cap", xs.iter().zip([5, 4, 3]).map(|(&x, w)| (int(w), x)), Sense::Le, int(8));
    m.set_objective(xs.iter().zip([10, 6, 4]).map(|(&x, v)| (int(v), x)));
    assert_eq!(enumerate(&m), Some(int(14)));
    let s = solve_bb(&m, &BbConfig::default());
    assert_eq!(s.objective, Some(int(14)));
}

#[test]
fn integral_relaxation_solves_at_root() {
    let mut m = MilpModel::new();
    let x = m.add_binary("x");
    let y = m.add_binary("y");
    m.add_constraint("c", vec![(int(1), x), (int(1), y)], Sense::Le, int(1));
    m.set_objective(vec![(int(2), x), (int(1), y)]);
    let s = solve_bb(&m, &BbConfig::default());
    assert_eq!(s.stats.nodes, 1);
    assert_eq!(s.objective, Some(int(2)));
}

#[test]
fn export_then_import_reproduces_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let mut m = random_binary_model(&mut rng, 6, 3);
        let y = m.add_continuous("y", Some(int(0)), Some(BigRational::new(7.into(), 3.into())));
        m.add_constraint("link", vec![(int(1), y), (int(-1), 0)], Sense::Le, int(1));
        let mut obj = m.objective.clone();
        obj.push((int(1), y));
        m.set_objective(obj);
        let text = export_lp(&m).unwrap();
        assert!(text.starts_with("Maximize\n"));
        let s = solve_bb(&m, &BbConfig { arithmetic: Arithmetic::Rational, ..BbConfig::default() });
        if !s.has_solution() {
            continue;
        }
        let back = import_solution(&format_solution(&m, &s.values), &m).unwrap();
        assert_eq!(back.objective, s.objective);
        assert!(back.warnings.is_empty());
    }
}

#[test]
fn bound_never_below_incumbent_in_log() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let m = random_binary_model(&mut rng, 10, 4);
        let s = solve_bb(&m, &BbConfig::default());
        for sample in &s.log {
            if let (Some(b), Some(i)) = (sample.bound, sample.incumbent) {
                assert!(b >= i - 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn bb_matches_enumeration(seed in any::<u64>(), k in 1usize..=8, rows in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_binary_model(&mut rng, k, rows);
        let want = enumerate(&m);
        let s = solve_bb(&m, &BbConfig::default());
        prop_assert_eq!(&s.objective, &want);
        let p = solve_bb(&m, &BbConfig { workers: 3, ..BbConfig::default() });
        prop_assert_eq!(p.objective, s.objective);
    }
}
