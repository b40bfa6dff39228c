//! Bounded-variable revised primal simplex.
//!
//! Every constraint row `a x (<=,>=,=) b` becomes `-a x + r = 0` with a row
//! variable `r` carrying the bounds implied by the sense.  The starting basis
//! is therefore the identity.  The basis inverse is kept in product form and
//! refactorized periodically.  Phase one minimizes the sum of bound
//! violations of basic variables, so any basis (for instance the optimal
//! basis of a parent branch-and-bound node) can be used as a warm start.
//! When such a basis is still dual feasible, a bounded dual simplex pass
//! repairs the primal infeasibility first, which after a single bound change
//! is usually far cheaper.  In floating point, long runs of degenerate
//! pivots trigger a small bound perturbation that is removed before the
//! final optimality check.

use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::Zero;

use super::scalar::Scalar;
use super::{MilpModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    Rational,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Result of [`solve_lp`], converted to exact rationals.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub values: Vec<BigRational>,
    pub objective: Option<BigRational>,
    pub iterations: u64,
}

/// Solves the LP relaxation of `model` (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel, arithmetic: Arithmetic) -> LpResult {
    fn run<T: Scalar>(model: &MilpModel) -> LpResult {
        let p = LpProblem::<T>::from_model(model);
        if p.presolve_infeasible {
            return LpResult { status: LpStatus::Infeasible, values: vec![], objective: None, iterations: 0 };
        }
        let r = p.solve(&p.lower[..p.n_struct], &p.upper[..p.n_struct], None, p.default_iteration_limit());
        let (values, objective) = if r.status == LpStatus::Optimal {
            (r.x.iter().map(|v| v.to_big()).collect(), Some(r.objective.to_big()))
        } else {
            (vec![], None)
        };
        LpResult { status: r.status, values, objective, iterations: r.iterations }
    }
    match arithmetic {
        Arithmetic::Rational => run::<BigRational>(model),
        Arithmetic::Double => run::<f64>(model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NbState {
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basic: Vec<usize>,
    state: Vec<NbState>,
}

pub(crate) struct InnerResult<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: u64,
    pub basis: Basis,
    /// Row duals `y` with `c = Aᵀy + d`; empty unless optimal.
    pub duals: Vec<T>,
}

/// Standard-form data shared by all solves of one model.
pub(crate) struct LpProblem<T> {
    pub n_struct: usize,
    pub n_rows: usize,
    cols: Vec<Vec<(usize, T)>>,
    cost: Vec<T>,
    pub lower: Vec<Option<T>>,
    pub upper: Vec<Option<T>>,
    pub presolve_infeasible: bool,
    /// Floating-point copy used to find a starting basis for exact solves.
    shadow: Option<Box<LpProblem<f64>>>,
}

impl<T: Scalar> LpProblem<T> {
    /// Builds the standard form.  Presolve only drops empty rows (checking
    /// them for trivial infeasibility) and exact duplicate rows.
    pub fn from_model(model: &MilpModel) -> Self {
        let n_struct = model.variables.len();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_struct];
        let mut row_lower = Vec::new();
        let mut row_upper = Vec::new();
        let mut seen = HashSet::new();
        let mut presolve_infeasible = false;
        for c in &model.constraints {
            if c.terms.is_empty() {
                let z = BigRational::zero();
                let ok = match c.sense {
                    Sense::Le => z <= c.rhs,
                    Sense::Ge => z >= c.rhs,
                    Sense::Eq => z == c.rhs,
                };
                presolve_infeasible |= !ok;
                continue;
            }
            if !seen.insert((c.terms.clone(), c.sense, c.rhs.clone())) {
                continue;
            }
            let row = row_lower.len();
            for (coef, v) in &c.terms {
                cols[*v].push((row, T::from_big(coef).negate()));
            }
            let rhs = T::from_big(&c.rhs);
            let (lo, hi) = match c.sense {
                Sense::Le => (None, Some(rhs)),
                Sense::Ge => (Some(rhs), None),
                Sense::Eq => (Some(rhs.clone()), Some(rhs)),
            };
            row_lower.push(lo);
            row_upper.push(hi);
        }
        let mut cost = vec![T::nil(); n_struct];
        for (c, v) in &model.objective {
            cost[*v] = T::from_big(c);
        }
        let mut lower: Vec<Option<T>> = model.variables.iter().map(|v| v.lower.as_ref().map(T::from_big)).collect();
        let mut upper: Vec<Option<T>> = model.variables.iter().map(|v| v.upper.as_ref().map(T::from_big)).collect();
        let n_rows = row_lower.len();
        lower.extend(row_lower);
        upper.extend(row_upper);
        let shadow = T::EXACT.then(|| Box::new(LpProblem::<f64>::from_model(model)));
        LpProblem { n_struct, n_rows, cols, cost, lower, upper, presolve_infeasible, shadow }
    }

    pub fn default_iteration_limit(&self) -> u64 {
        200 * (self.n_struct + self.n_rows) as u64 + 10_000
    }

    /// Solves with the given structural bounds, optionally from a warm basis.
    pub fn solve(
        &self,
        lower: &[Option<T>],
        upper: &[Option<T>],
        warm: Option<&Basis>,
        iteration_limit: u64,
    ) -> InnerResult<T> {
        // Exact solves start from the basis a floating-point solve ends in;
        // the exact simplex then only repairs what rounding got wrong.
        match self.solve_shadow(lower, upper, warm, iteration_limit) {
            Some(r) if r.status != LpStatus::IterationLimit => {
                let mut exact = self.solve_from(lower, upper, Some(&r.basis), iteration_limit);
                exact.iterations += r.iterations;
                exact
            }
            Some(r) => {
                let mut exact = self.solve_from(lower, upper, warm, iteration_limit);
                exact.iterations += r.iterations;
                exact
            }
            None => self.solve_from(lower, upper, warm, iteration_limit),
        }
    }

    /// The floating-point solve that guides an exact one; `None` when this
    /// problem is already floating point.
    pub fn solve_shadow(
        &self,
        lower: &[Option<T>],
        upper: &[Option<T>],
        warm: Option<&Basis>,
        iteration_limit: u64,
    ) -> Option<InnerResult<f64>> {
        let shadow = self.shadow.as_ref()?;
        let approx = |b: &[Option<T>]| b.iter().map(|v| v.as_ref().map(T::approx)).collect::<Vec<_>>();
        Some(shadow.solve(&approx(lower), &approx(upper), warm, iteration_limit))
    }

    /// Solves in this problem's own arithmetic, without a shadow pass.
    pub fn solve_from(
        &self,
        lower: &[Option<T>],
        upper: &[Option<T>],
        warm: Option<&Basis>,
        iteration_limit: u64,
    ) -> InnerResult<T> {
        let mut s = Solver::new(self, lower, upper, warm);
        let status = s.run(iteration_limit);
        let x: Vec<T> = s.x[..self.n_struct].to_vec();
        let objective = x
            .iter()
            .zip(&self.cost)
            .fold(T::nil(), |acc, (xv, c)| if c.is_exact_zero() { acc } else { acc.plus(&c.times(xv)) });
        let duals = if status == LpStatus::Optimal {
            s.phase_two_duals().iter().map(T::negate).collect()
        } else {
            Vec::new()
        };
        InnerResult { status, x, objective, iterations: s.iterations, basis: Basis { basic: s.basic, state: s.state }, duals }
    }

    /// Upper bound on the LP optimum implied by weak duality for any row
    /// multipliers `y`, evaluated in this problem's arithmetic:
    /// `cᵀx = Σ yᵢ·(aᵢx) + Σ dⱼ·xⱼ` with `d = c − Aᵀy`, each term maximised
    /// over its bounds.  The multipliers are rounded to multiples of 2⁻³⁰
    /// first.  `None` if some term is unbounded.
    pub fn safe_bound(&self, lower: &[Option<T>], upper: &[Option<T>], y: &[f64]) -> Option<T> {
        const SCALE: f64 = (1u64 << 30) as f64;
        let denom = BigRational::from_integer((1u64 << 30).into());
        let mut total = T::nil();
        let mut rows = Vec::with_capacity(self.n_rows);
        for (i, yi) in y.iter().enumerate() {
            let k = (yi * SCALE).round();
            if !k.is_finite() || k.abs() > 2f64.powi(62) {
                return None;
            }
            let yi = if k == 0.0 { T::nil() } else { T::from_big(&(BigRational::from_integer((k as i64).into()) / &denom)) };
            let r = self.n_struct + i;
            total = total.plus(&Self::best_term(&yi, &self.lower[r], &self.upper[r])?);
            rows.push(yi);
        }
        for j in 0..self.n_struct {
            let mut d = self.cost[j].clone();
            for (i, a) in &self.cols[j] {
                if !rows[*i].is_exact_zero() {
                    d = d.plus(&rows[*i].times(a));
                }
            }
            total = total.plus(&Self::best_term(&d, &lower[j], &upper[j])?);
        }
        Some(total)
    }

    fn best_term(v: &T, lo: &Option<T>, hi: &Option<T>) -> Option<T> {
        if v.is_exact_zero() {
            Some(T::nil())
        } else if *v > T::nil() {
            hi.as_ref().map(|h| v.times(h))
        } else {
            lo.as_ref().map(|l| v.times(l))
        }
    }
}

struct Eta<T> {
    row: usize,
    pivot: T,
    col: Vec<(usize, T)>,
}

struct Solver<'a, T> {
    p: &'a LpProblem<T>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    basic: Vec<usize>,
    pos: Vec<usize>,
    state: Vec<NbState>,
    x: Vec<T>,
    etas: Vec<Eta<T>>,
    /// Number of etas produced by the last refactorization.
    factor_len: usize,
    iterations: u64,
    degenerate_run: usize,
    bland: bool,
    /// Bounds before perturbation, while the perturbation is active.
    unperturbed: Option<(Vec<Option<T>>, Vec<Option<T>>)>,
    perturbed_once: bool,
}

const NOT_BASIC: usize = usize::MAX;
const REFACTOR_EVERY: usize = 100;
/// Degenerate pivots tolerated before floating-point bounds get perturbed.
const PERTURB_AFTER: usize = 50;

impl<'a, T: Scalar> Solver<'a, T> {
    fn new(p: &'a LpProblem<T>, lower: &[Option<T>], upper: &[Option<T>], warm: Option<&Basis>) -> Self {
        let total = p.n_struct + p.n_rows;
        let mut lo = lower.to_vec();
        lo.extend_from_slice(&p.lower[p.n_struct..]);
        let mut hi = upper.to_vec();
        hi.extend_from_slice(&p.upper[p.n_struct..]);
        let (basic, mut state) = match warm {
            Some(b) if b.basic.len() == p.n_rows && b.state.len() == total => (b.basic.clone(), b.state.clone()),
            _ => ((p.n_struct..total).collect(), vec![NbState::Lower; total]),
        };
        let mut pos = vec![NOT_BASIC; total];
        for (k, &v) in basic.iter().enumerate() {
            pos[v] = k;
        }
        for j in 0..total {
            if pos[j] == NOT_BASIC {
                state[j] = Self::fit_state(state[j], &lo[j], &hi[j]);
            }
        }
        let mut s = Solver {
            p,
            lower: lo,
            upper: hi,
            basic,
            pos,
            state,
            x: vec![T::nil(); total],
            etas: Vec::new(),
            factor_len: 0,
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            unperturbed: None,
            perturbed_once: false,
        };
        for j in 0..total {
            if s.pos[j] == NOT_BASIC {
                s.x[j] = s.nonbasic_value(j);
            }
        }
        s
    }

    fn fit_state(st: NbState, lo: &Option<T>, hi: &Option<T>) -> NbState {
        match (st, lo, hi) {
            (NbState::Lower, Some(_), _) => NbState::Lower,
            (NbState::Upper, _, Some(_)) => NbState::Upper,
            (_, Some(_), _) => NbState::Lower,
            (_, None, Some(_)) => NbState::Upper,
            _ => NbState::Free,
        }
    }

    fn nonbasic_value(&self, j: usize) -> T {
        match self.state[j] {
            NbState::Lower => self.lower[j].clone().unwrap_or_else(T::nil),
            NbState::Upper => self.upper[j].clone().unwrap_or_else(T::nil),
            NbState::Free => T::nil(),
        }
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, &T)) {
        if j < self.p.n_struct {
            for (i, a) in &self.p.cols[j] {
                f(*i, a);
            }
        } else {
            f(j - self.p.n_struct, &T::unit());
        }
    }

    fn col_nnz(&self, j: usize) -> usize {
        if j < self.p.n_struct {
            self.p.cols[j].len()
        } else {
            1
        }
    }

    fn ftran(&self, v: &mut [T]) {
        for e in &self.etas {
            if v[e.row].is_exact_zero() {
                continue;
            }
            let vr = v[e.row].over(&e.pivot);
            for (i, a) in &e.col {
                v[*i] = v[*i].minus(&a.times(&vr));
            }
            v[e.row] = vr;
        }
    }

    fn btran(&self, y: &mut [T]) {
        for e in self.etas.iter().rev() {
            let mut acc = y[e.row].clone();
            for (i, a) in &e.col {
                if !y[*i].is_exact_zero() {
                    acc = acc.minus(&a.times(&y[*i]));
                }
            }
            y[e.row] = acc.over(&e.pivot);
        }
    }

    fn ftran_col(&self, j: usize) -> Vec<T> {
        let mut v = vec![T::nil(); self.p.n_rows];
        self.for_col(j, |i, a| v[i] = a.clone());
        self.ftran(&mut v);
        v
    }

    fn push_eta(&mut self, row: usize, v: &[T]) {
        let col = v
            .iter()
            .enumerate()
            .filter(|(i, a)| *i != row && !a.is_exact_zero())
            .map(|(i, a)| (i, a.clone()))
            .collect();
        self.etas.push(Eta { row, pivot: v[row].clone(), col });
    }

    /// Rebuilds the product-form inverse of the current basis from scratch.
    /// Structural columns that turn out dependent are swapped for slacks.
    fn refactor(&mut self) {
        let n_rows = self.p.n_rows;
        let n_struct = self.p.n_struct;
        self.etas.clear();
        let mut taken = vec![false; n_rows];
        let mut new_basic = vec![NOT_BASIC; n_rows];
        let mut structs = Vec::new();
        for &v in &self.basic {
            if v >= n_struct {
                taken[v - n_struct] = true;
                new_basic[v - n_struct] = v;
            } else {
                structs.push(v);
            }
        }
        structs.sort_by_key(|&j| (self.col_nnz(j), j));
        for j in structs {
            let v = self.ftran_col(j);
            let mut best: Option<usize> = None;
            for r in 0..n_rows {
                if taken[r] || v[r].is_tiny() || v[r].is_exact_zero() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => !T::EXACT && v[r].magnitude() > v[b].magnitude(),
                };
                if better {
                    best = Some(r);
                }
            }
            match best {
                Some(r) => {
                    self.push_eta(r, &v);
                    taken[r] = true;
                    new_basic[r] = j;
                }
                None => {
                    self.pos[j] = NOT_BASIC;
                    self.state[j] = Self::fit_state(NbState::Lower, &self.lower[j], &self.upper[j]);
                    self.x[j] = self.nonbasic_value(j);
                }
            }
        }
        for r in 0..n_rows {
            if new_basic[r] == NOT_BASIC {
                let s = n_struct + r;
                new_basic[r] = s;
            }
        }
        for j in 0..n_struct + n_rows {
            self.pos[j] = NOT_BASIC;
        }
        for (k, &v) in new_basic.iter().enumerate() {
            self.pos[v] = k;
        }
        self.basic = new_basic;
        self.factor_len = self.etas.len();
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let n_rows = self.p.n_rows;
        let mut rhs = vec![T::nil(); n_rows];
        for j in 0..self.p.n_struct + n_rows {
            if self.pos[j] != NOT_BASIC {
                continue;
            }
            let xj = self.x[j].clone();
            if xj.is_exact_zero() {
                continue;
            }
            self.for_col(j, |i, a| rhs[i] = rhs[i].minus(&a.times(&xj)));
        }
        self.ftran(&mut rhs);
        for (k, v) in rhs.into_iter().enumerate() {
            let var = self.basic[k];
            self.x[var] = v;
        }
    }

    /// Relaxes every non-fixed bound by a small pseudo-random amount so that
    /// degenerate vertices split apart.  Only used with floating point.
    fn perturb(&mut self) {
        self.unperturbed = Some((self.lower.clone(), self.upper.clone()));
        self.perturbed_once = true;
        let total = self.lower.len();
        for j in 0..total {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l >= u {
                    continue;
                }
            }
            // Deterministic spread in [0.5, 1).
            let spread = 0.5 + ((j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 54) as f64;
            let relax = |b: &T| {
                let scale = 1e-7 * (1.0 + b.approx().abs().min(1e4)) * spread;
                T::from_big(&BigRational::from_float(scale).unwrap_or_else(BigRational::zero))
            };
            if let Some(l) = &self.lower[j] {
                self.lower[j] = Some(l.minus(&relax(l)));
            }
            if let Some(u) = &self.upper[j] {
                self.upper[j] = Some(u.plus(&relax(u)));
            }
        }
        self.reset_nonbasic();
    }

    fn unperturb(&mut self) {
        if let Some((lo, hi)) = self.unperturbed.take() {
            self.lower = lo;
            self.upper = hi;
            self.degenerate_run = 0;
            self.bland = false;
            self.reset_nonbasic();
        }
    }

    fn reset_nonbasic(&mut self) {
        for j in 0..self.lower.len() {
            if self.pos[j] == NOT_BASIC {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        self.recompute_basic_values();
    }

    fn infeasibility_sign(&self, v: usize) -> i8 {
        let x = &self.x[v];
        let tol = T::feas_tol();
        if let Some(l) = &self.lower[v] {
            if *x < l.minus(&tol) {
                return 1;
            }
        }
        if let Some(u) = &self.upper[v] {
            if *x > u.plus(&tol) {
                return -1;
            }
        }
        0
    }

    fn phase_two_duals(&self) -> Vec<T> {
        let mut y = vec![T::nil(); self.p.n_rows];
        for (k, &v) in self.basic.iter().enumerate() {
            if v < self.p.n_struct {
                y[k] = self.p.cost[v].clone();
            }
        }
        self.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[T]) -> T {
        let mut d = if j >= self.p.n_struct { T::nil() } else { self.p.cost[j].clone() };
        self.for_col(j, |i, a| {
            if !y[i].is_exact_zero() {
                d = d.minus(&y[i].times(a));
            }
        });
        d
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if l >= u)
    }

    fn dual_feasible(&self) -> bool {
        let y = self.phase_two_duals();
        let dtol = T::dual_tol();
        (0..self.lower.len()).all(|j| {
            if self.pos[j] != NOT_BASIC || self.is_fixed(j) {
                return true;
            }
            let d = self.reduced_cost(j, &y);
            match self.state[j] {
                NbState::Lower => d <= dtol,
                NbState::Upper => d >= dtol.negate(),
                NbState::Free => d.magnitude() <= dtol,
            }
        })
    }

    /// Bounded dual simplex from a dual-feasible basis, typically the
    /// optimal basis of a parent node after a bound change.  Rows are priced
    /// by approximate dual steepest edge and the ratio test flips boxed
    /// columns past their breakpoints.  Returns `None` once the basis is
    /// primal feasible or the dual pass gives up; the primal loop then
    /// finishes (and certifies) the solve.
    fn dual_phase(&mut self, iteration_limit: u64) -> Option<LpStatus> {
        let n_rows = self.p.n_rows;
        let total = self.lower.len();
        let budget = self.iterations + 20 * n_rows as u64 + 100;
        let mut degenerate_run = 0;
        // Reduced costs are updated along with the basis; the row weights
        // approximate squared norms of the rows of the basis inverse
        // (dual steepest edge, starting from a unit reference framework).
        let mut d = self.all_reduced_costs();
        let mut weight = vec![1.0f64; n_rows];
        loop {
            let bland = degenerate_run > PERTURB_AFTER;
            if self.iterations >= iteration_limit {
                return Some(LpStatus::IterationLimit);
            }
            if self.iterations >= budget {
                return None;
            }
            if self.etas.len() - self.factor_len >= REFACTOR_EVERY {
                self.refactor();
                d = self.all_reduced_costs();
            }
            let ftol = T::feas_tol();
            let mut leave: Option<(usize, f64)> = None;
            for (k, &v) in self.basic.iter().enumerate() {
                let x = &self.x[v];
                let viol = match (&self.lower[v], &self.upper[v]) {
                    (Some(l), _) if *x < l.minus(&ftol) => l.minus(x),
                    (_, Some(u)) if *x > u.plus(&ftol) => x.minus(u),
                    _ => continue,
                };
                let viol = viol.approx();
                let score = viol * viol / weight[k];
                let better = match &leave {
                    None => true,
                    Some((bk, best)) => if bland { v < self.basic[*bk] } else { score > *best },
                };
                if better {
                    leave = Some((k, score));
                }
            }
            let Some((r, _)) = leave else { return None };
            let out = self.basic[r];
            let below = self.lower[out].as_ref().is_some_and(|l| self.x[out] < *l);

            let mut rho = vec![T::nil(); n_rows];
            rho[r] = T::unit();
            self.btran(&mut rho);
            let mut row = vec![T::nil(); total];
            let mut candidates: Vec<(usize, T, T)> = Vec::new(); // (var, ratio, |pivot|)
            for j in 0..total {
                if self.pos[j] != NOT_BASIC || self.is_fixed(j) {
                    continue;
                }
                let mut arj = T::nil();
                self.for_col(j, |i, a| {
                    if !rho[i].is_exact_zero() {
                        arj = arj.plus(&rho[i].times(a));
                    }
                });
                if arj.is_tiny() || arj.is_exact_zero() {
                    continue;
                }
                row[j] = arj.clone();
                // x_out changes by -arj per unit increase of x_j.
                let neg = arj < T::nil();
                let (up_ok, down_ok) = match self.state[j] {
                    NbState::Lower => (true, false),
                    NbState::Upper => (false, true),
                    NbState::Free => (true, true),
                };
                let eligible = if below { (up_ok && neg) || (down_ok && !neg) } else { (up_ok && !neg) || (down_ok && neg) };
                if eligible {
                    candidates.push((j, d[j].magnitude().over(&arj.magnitude()), arj.magnitude()));
                }
            }
            if candidates.is_empty() {
                if T::EXACT || self.confirm_dual_ray(r) {
                    return Some(LpStatus::Infeasible);
                }
                return None;
            }
            // Long-step ratio test: boxed candidates are flipped to their
            // opposite bound while the leaving row stays infeasible.
            candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal)).then(a.0.cmp(&b.0)));
            let mut slope = {
                let bound = if below { self.lower[out].as_ref() } else { self.upper[out].as_ref() };
                bound.expect("violated bound exists").minus(&self.x[out]).magnitude()
            };
            let mut flips = Vec::new();
            let mut pick = candidates.len() - 1;
            if bland {
                pick = (0..candidates.len())
                    .filter(|&c| candidates[c].1 == candidates[0].1)
                    .min_by_key(|&c| candidates[c].0)
                    .unwrap_or(0);
            } else {
                for (c, (j, _, piv)) in candidates.iter().enumerate() {
                    let range = match (&self.lower[*j], &self.upper[*j]) {
                        (Some(l), Some(u)) => u.minus(l),
                        _ => {
                            pick = c;
                            break;
                        }
                    };
                    let next = slope.minus(&piv.times(&range));
                    if c + 1 == candidates.len() || next <= T::nil() {
                        pick = c;
                        break;
                    }
                    slope = next;
                    flips.push(*j);
                }
            }
            let (q, ratio, _) = candidates[pick].clone();
            if ratio <= T::dual_tol() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            if !flips.is_empty() {
                let mut shift = vec![T::nil(); n_rows];
                for &j in &flips {
                    let before = self.x[j].clone();
                    self.state[j] = match self.state[j] {
                        NbState::Lower => NbState::Upper,
                        _ => NbState::Lower,
                    };
                    self.x[j] = self.nonbasic_value(j);
                    let change = self.x[j].minus(&before);
                    self.for_col(j, |i, a| shift[i] = shift[i].plus(&a.times(&change)));
                }
                self.ftran(&mut shift);
                for (k, v) in shift.iter().enumerate() {
                    if !v.is_exact_zero() {
                        let b = self.basic[k];
                        self.x[b] = self.x[b].minus(v);
                    }
                }
            }
            let alpha = self.ftran_col(q);
            if alpha[r].is_tiny() || alpha[r].is_exact_zero() {
                return None;
            }
            self.iterations += 1;

            let step = d[q].over(&row[q]);
            for j in 0..total {
                if !row[j].is_exact_zero() {
                    d[j] = d[j].minus(&step.times(&row[j]));
                }
            }
            d[q] = T::nil();
            d[out] = step.negate();

            // steepest-edge weights, floating point only
            if !T::EXACT {
                let mut tau = rho;
                self.ftran(&mut tau);
                let ar = alpha[r].approx();
                let wr = weight[r];
                for (k, a) in alpha.iter().enumerate() {
                    if k == r || a.is_exact_zero() {
                        continue;
                    }
                    let ratio = a.approx() / ar;
                    weight[k] = (weight[k] - 2.0 * ratio * tau[k].approx() + ratio * ratio * wr).max(1e-4);
                }
                weight[r] = (wr / (ar * ar)).max(1e-4);
            }

            let bound = if below { self.lower[out].clone() } else { self.upper[out].clone() }.expect("violated bound exists");
            let delta = self.x[out].minus(&bound).over(&alpha[r]);
            for (k, a) in alpha.iter().enumerate() {
                if !a.is_exact_zero() {
                    let v = self.basic[k];
                    self.x[v] = self.x[v].minus(&a.times(&delta));
                }
            }
            self.x[q] = self.x[q].plus(&delta);
            self.state[out] = if below { NbState::Lower } else { NbState::Upper };
            self.x[out] = bound;
            self.pos[out] = NOT_BASIC;
            self.basic[r] = q;
            self.pos[q] = r;
            self.push_eta(r, &alpha);
        }
    }

    /// Floating-point check of a dual unboundedness ray on a fresh
    /// factorization: the row must still be violated with no way to repair it.
    fn confirm_dual_ray(&mut self, r: usize) -> bool {
        self.refactor();
        let out = self.basic[r];
        let margin = T::feas_tol().times(&T::from_big(&BigRational::from_integer(100.into())));
        let x = &self.x[out];
        let below = match (&self.lower[out], &self.upper[out]) {
            (Some(l), _) if *x < l.minus(&margin) => true,
            (_, Some(u)) if *x > u.plus(&margin) => false,
            _ => return false,
        };
        let mut rho = vec![T::nil(); self.p.n_rows];
        rho[r] = T::unit();
        self.btran(&mut rho);
        (0..self.lower.len()).all(|j| {
            if self.pos[j] != NOT_BASIC || self.is_fixed(j) {
                return true;
            }
            let mut arj = T::nil();
            self.for_col(j, |i, a| {
                if !rho[i].is_exact_zero() {
                    arj = arj.plus(&rho[i].times(a));
                }
            });
            if arj.is_tiny() {
                return true;
            }
            let neg = arj < T::nil();
            let (up_ok, down_ok) = match self.state[j] {
                NbState::Lower => (true, false),
                NbState::Upper => (false, true),
                NbState::Free => (true, true),
            };
            !(if below { (up_ok && neg) || (down_ok && !neg) } else { (up_ok && !neg) || (down_ok && neg) })
        })
    }

    fn all_reduced_costs(&self) -> Vec<T> {
        let y = self.phase_two_duals();
        (0..self.lower.len())
            .map(|j| if self.pos[j] == NOT_BASIC { self.reduced_cost(j, &y) } else { T::nil() })
            .collect()
    }

    fn run(&mut self, iteration_limit: u64) -> LpStatus {
        self.refactor();
        let n_rows = self.p.n_rows;
        let total = self.p.n_struct + n_rows;
        let mut fresh = true;
        if self.dual_feasible() {
            let before = self.iterations;
            if let Some(status) = self.dual_phase(iteration_limit) {
                return status;
            }
            fresh = self.iterations == before;
        }
        let tie_scale = T::from_big(&BigRational::new(1.into(), 1000.into()));
        loop {
            if self.iterations >= iteration_limit {
                return LpStatus::IterationLimit;
            }
            if self.etas.len() - self.factor_len >= REFACTOR_EVERY {
                self.refactor();
                fresh = true;
            }
            let mut phase_one = false;
            let mut cb = vec![T::nil(); n_rows];
            for k in 0..n_rows {
                let s = self.infeasibility_sign(self.basic[k]);
                if s != 0 {
                    phase_one = true;
                    cb[k] = if s > 0 { T::unit() } else { T::unit().negate() };
                }
            }
            if !phase_one {
                for k in 0..n_rows {
                    let v = self.basic[k];
                    if v < self.p.n_struct {
                        cb[k] = self.p.cost[v].clone();
                    }
                }
            }
            let mut y = cb;
            self.btran(&mut y);

            // pricing
            let dtol = T::dual_tol();
            let mut entering: Option<(usize, T, T)> = None; // (var, reduced cost, score)
            for j in 0..total {
                if self.pos[j] != NOT_BASIC {
                    continue;
                }
                if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                    if l >= u {
                        continue;
                    }
                }
                let mut d = if phase_one || j >= self.p.n_struct { T::nil() } else { self.p.cost[j].clone() };
                self.for_col(j, |i, a| {
                    if !y[i].is_exact_zero() {
                        d = d.minus(&y[i].times(a));
                    }
                });
                let eligible = match self.state[j] {
                    NbState::Lower => d > dtol,
                    NbState::Upper => d < dtol.negate(),
                    NbState::Free => d.magnitude() > dtol,
                };
                if !eligible {
                    continue;
                }
                let score = d.magnitude();
                let take = match &entering {
                    None => true,
                    Some((_, _, best)) => !self.bland && score > *best,
                };
                if take {
                    entering = Some((j, d, score));
                    if self.bland {
                        break;
                    }
                }
            }

            let Some((q, dq, _)) = entering else {
                if fresh && self.unperturbed.is_some() {
                    self.unperturb();
                    continue;
                }
                if phase_one {
                    if fresh {
                        return LpStatus::Infeasible;
                    }
                } else if fresh {
                    return LpStatus::Optimal;
                }
                self.refactor();
                fresh = true;
                continue;
            };
            fresh = false;
            self.iterations += 1;

            let alpha = self.ftran_col(q);
            let increasing = dq > T::nil();
            // (theta, position or None for bound flip, leaves at upper?)
            let mut best: Option<(T, Option<usize>, bool, T)> = None;
            if let (Some(l), Some(u)) = (&self.lower[q], &self.upper[q]) {
                best = Some((u.minus(l), None, false, T::nil()));
            }
            let ftol = T::feas_tol();
            let tie_slack = ftol.times(&tie_scale);
            for (k, a) in alpha.iter().enumerate() {
                if a.is_tiny() || a.is_exact_zero() {
                    continue;
                }
                let v = self.basic[k];
                let rate = if increasing { a.negate() } else { a.clone() };
                let xv = &self.x[v];
                let infeas = if phase_one { self.infeasibility_sign(v) } else { 0 };
                let target: Option<(T, bool)> = if infeas > 0 {
                    if rate > T::nil() {
                        self.lower[v].clone().map(|l| (l, false))
                    } else {
                        None
                    }
                } else if infeas < 0 {
                    if rate < T::nil() {
                        self.upper[v].clone().map(|u| (u, true))
                    } else {
                        None
                    }
                } else if rate > T::nil() {
                    self.upper[v].clone().map(|u| (u, true))
                } else {
                    self.lower[v].clone().map(|l| (l, false))
                };
                let Some((bound, at_upper)) = target else { continue };
                let mut theta = bound.minus(xv).over(&rate);
                if theta < T::nil() {
                    theta = T::nil();
                }
                let replace = match &best {
                    None => true,
                    Some((bt, bk, _, bpiv)) => {
                        if self.bland {
                            theta < *bt || (theta <= *bt && bk.is_some_and(|bk| v < self.basic[bk]))
                        } else if T::EXACT {
                            theta < *bt || (theta == *bt && bk.is_some() && a.magnitude() > *bpiv)
                        } else {
                            theta < bt.minus(&tie_slack)
                                || (theta <= bt.plus(&tie_slack) && bk.is_some() && a.magnitude() > *bpiv)
                        }
                    }
                };
                if replace {
                    best = Some((theta, Some(k), at_upper, a.magnitude()));
                }
            }
            let Some((theta, leave, at_upper, _)) = best else {
                if phase_one {
                    // Should not happen; treat as numerical trouble.
                    self.refactor();
                    fresh = true;
                    continue;
                }
                if self.unperturbed.is_some() {
                    self.unperturb();
                    fresh = true;
                    continue;
                }
                return LpStatus::Unbounded;
            };

            let degenerate = if T::EXACT { theta.is_exact_zero() } else { theta <= ftol };
            if degenerate {
                self.degenerate_run += 1;
                if self.degenerate_run > 10 * n_rows.max(1) {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }

            let delta = if increasing { theta.clone() } else { theta.negate() };
            if !delta.is_exact_zero() {
                for (k, a) in alpha.iter().enumerate() {
                    if a.is_exact_zero() {
                        continue;
                    }
                    let v = self.basic[k];
                    self.x[v] = self.x[v].minus(&a.times(&delta));
                }
                self.x[q] = self.x[q].plus(&delta);
            }
            match leave {
                None => {
                    self.state[q] = if increasing { NbState::Upper } else { NbState::Lower };
                    self.x[q] = self.nonbasic_value(q);
                }
                Some(k) => {
                    let v = self.basic[k];
                    self.state[v] = if at_upper { NbState::Upper } else { NbState::Lower };
                    self.x[v] = self.nonbasic_value(v);
                    self.pos[v] = NOT_BASIC;
                    self.basic[k] = q;
                    self.pos[q] = k;
                    self.push_eta(k, &alpha);
                }
            }
            if !T::EXACT && !self.perturbed_once && self.degenerate_run > PERTURB_AFTER {
                self.perturb();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{int, MilpModel, Sense};

    fn both(model: &MilpModel) -> [LpResult; 2] {
        [solve_lp(model, Arithmetic::Rational), solve_lp(model, Arithmetic::Double)]
    }

    #[test]
    fn single_bound() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", Some(int(0)), None);
        m.add_constraint("c", vec![(int(1), x)], Sense::Le, int(5));
        m.set_objective(vec![(int(1), x)]);
        for r in both(&m) {
            assert_eq!(r.status, LpStatus::Optimal);
            assert_eq!(r.objective.unwrap(), int(5));
        }
    }

    #[test]
    fn degenerate_optimum() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", Some(int(0)), None);
        let y = m.add_continuous("y", Some(int(0)), None);
        m.add_constraint("c", vec![(int(1), x), (int(1), y)], Sense::Le, int(1));
        m.set_objective(vec![(int(1), x), (int(1), y)]);
        for r in both(&m) {
            assert_eq!(r.objective.unwrap(), int(1));
        }
    }

    #[test]
    fn contradictory_bounds() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", None, None);
        m.add_constraint("lo", vec![(int(1), x)], Sense::Ge, int(2));
        m.add_constraint("hi", vec![(int(1), x)], Sense::Le, int(1));
        m.set_objective(vec![(int(1), x)]);
        for r in both(&m) {
            assert_eq!(r.status, LpStatus::Infeasible);
        }
    }

    #[test]
    fn unbounded_ray() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", Some(int(0)), None);
        let y = m.add_continuous("y", Some(int(0)), None);
        m.add_constraint("c", vec![(int(1), x), (int(-1), y)], Sense::Le, int(1));
        m.set_objective(vec![(int(1), x)]);
        for r in both(&m) {
            assert_eq!(r.status, LpStatus::Unbounded);
        }
    }

    #[test]
    fn equality_and_free_variable() {
        // max x - y, x + y = 4, x - y <= 2, y free
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", Some(int(0)), Some(int(10)));
        let y = m.add_continuous("y", None, None);
        m.add_constraint("e", vec![(int(1), x), (int(1), y)], Sense::Eq, int(4));
        m.add_constraint("l", vec![(int(1), x), (int(-1), y)], Sense::Le, int(2));
        m.set_objective(vec![(int(1), x), (int(-1), y)]);
        for r in both(&m) {
            assert_eq!(r.status, LpStatus::Optimal);
            assert_eq!(r.objective.unwrap(), int(2));
        }
    }

    #[test]
    fn fractional_vertex_is_exact() {
        // max x + y, 2x + y <= 4, x + 3y <= 6  -> x = 6/5, y = 8/5
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", Some(int(0)), None);
        let y = m.add_continuous("y", Some(int(0)), None);
        m.add_constraint("a", vec![(int(2), x), (int(1), y)], Sense::Le, int(4));
        m.add_constraint("b", vec![(int(1), x), (int(3), y)], Sense::Le, int(6));
        m.set_objective(vec![(int(1), x), (int(1), y)]);
        let r = solve_lp(&m, Arithmetic::Rational);
        assert_eq!(r.objective.unwrap(), BigRational::new(14.into(), 5.into()));
        assert_eq!(r.values[x], BigRational::new(6.into(), 5.into()));
    }

    #[test]
    fn empty_row_infeasibility_is_detected() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        m.add_constraint("bad", Vec::new(), Sense::Ge, int(1));
        m.set_objective(vec![(int(1), x)]);
        assert_eq!(solve_lp(&m, Arithmetic::Double).status, LpStatus::Infeasible);
    }
}
