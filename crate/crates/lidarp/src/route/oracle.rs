//! Exhaustive reference solver for tiny instances.
//!
//! A depth-first search over action interleavings records, for every set of
//! requests one vehicle can serve, the least driving time.  Each complete
//! route is checked exactly with [`schedule_sequence`](super::schedule_sequence)
//! semantics.  Vehicle routes are then combined over disjoint request sets.

use thiserror::Error;

use super::schedule::solve;
use super::{plan_from_sequences, Action, ActionKind, Mode, Prepared, RoutePlan};
use crate::instance::{Instance, Rat};

pub const ORACLE_MAX_REQUESTS: usize = 6;
pub const ORACLE_MAX_VEHICLES: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {m} requests, {kappa} vehicles (limits {ORACLE_MAX_REQUESTS}, {ORACLE_MAX_VEHICLES})")]
    TooLarge { m: usize, kappa: usize },
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub objective: Rat,
    pub plan: RoutePlan,
    /// Action sequence per used vehicle.
    pub sequences: Vec<Vec<Action>>,
}

struct Search<'p, 'a> {
    prep: &'p Prepared<'a>,
    mode: Mode,
    best: Vec<Option<(i64, Vec<Action>)>>,
    seq: Vec<Action>,
    times: Vec<Rat>,
    onboard: Vec<usize>,
    picked: u32,
    load: u32,
    driven: i64,
}

impl Search<'_, '_> {
    fn record(&mut self) {
        let slot = &mut self.best[self.picked as usize];
        if slot.as_ref().is_none_or(|(d, _)| self.driven < *d) {
            *slot = Some((self.driven, self.seq.clone()));
        }
    }

    fn candidates(&self) -> Vec<Action> {
        let mut out: Vec<Action> = self.onboard.iter().map(|&r| Action::dropoff(r)).collect();
        out.sort();
        for r in 0..self.prep.m() {
            if self.picked & (1 << r) == 0
                && self.prep.is_servable(r)
                && self.load + self.prep.inst.requests[r].load <= self.prep.inst.fleet.q_max
            {
                out.push(Action::pickup(r));
            }
        }
        out
    }

    fn dfs(&mut self) {
        let candidates = self.candidates();
        for c in candidates {
            let win = self.prep.window(c);
            let (start, gap) = match self.seq.last() {
                None => (win.earliest, 0),
                Some(&a) => {
                    let Some(tr) = self.prep.transition(self.mode, a, c, self.onboard.is_empty()) else { continue };
                    let cost = self.prep.transition_time(self.mode, tr);
                    let t_prev = *self.times.last().expect("times track seq");
                    let t = t_prev + Rat::from_integer(self.prep.service(a.request) + cost);
                    (t.max(win.earliest), cost)
                }
            };
            if start > win.latest {
                continue;
            }
            let r = c.request;
            if c.kind == ActionKind::Dropoff {
                let pick = self.prep.window(Action::pickup(r)).latest;
                if start + Rat::from_integer(self.prep.service(r)) - pick > self.prep.max_ride(r) {
                    continue;
                }
            }
            self.seq.push(c);
            self.times.push(start);
            self.driven += if self.seq.len() > 1 { gap } else { 0 };
            let req_load = self.prep.inst.requests[r].load;
            match c.kind {
                ActionKind::Pickup => {
                    self.onboard.push(r);
                    self.picked |= 1 << r;
                    self.load += req_load;
                }
                ActionKind::Dropoff => {
                    self.onboard.retain(|&x| x != r);
                    self.load -= req_load;
                }
            }
            let feasible = c.kind == ActionKind::Pickup || solve(self.prep, self.mode, &self.seq, false).is_ok();
            if feasible {
                if self.onboard.is_empty() {
                    self.record();
                }
                self.dfs();
            }
            match c.kind {
                ActionKind::Pickup => {
                    self.onboard.retain(|&x| x != r);
                    self.picked &= !(1 << r);
                    self.load -= req_load;
                }
                ActionKind::Dropoff => {
                    self.onboard.push(r);
                    self.load += req_load;
                }
            }
            self.driven -= if self.seq.len() > 1 { gap } else { 0 };
            self.seq.pop();
            self.times.pop();
        }
    }
}

/// Optimal objective and one optimal plan by exhaustive search.
/// Ties prefer more accepted requests, then the first combination found.
pub fn brute_force_solve(inst: &Instance, mode: Mode) -> Result<OracleSolution, OracleError> {
    let m = inst.requests.len();
    let kappa = inst.fleet.kappa;
    if m > ORACLE_MAX_REQUESTS || kappa > ORACLE_MAX_VEHICLES {
        return Err(OracleError::TooLarge { m, kappa });
    }
    let prep = Prepared::new(inst);
    let mut s = Search {
        prep: &prep,
        mode,
        best: vec![None; 1 << m],
        seq: Vec::new(),
        times: Vec::new(),
        onboard: Vec::new(),
        picked: 0,
        load: 0,
        driven: 0,
    };
    s.best[0] = Some((0, Vec::new()));
    s.dfs();
    let best = s.best;

    let w = &inst.weights;
    let value = |mask: usize| -> Option<Rat> {
        let (driven, _) = best[mask].as_ref()?;
        let mut direct = 0;
        let mut count = 0;
        for r in 0..m {
            if mask & (1 << r) != 0 {
                direct += prep.direct(r);
                count += 1;
            }
        }
        Some(w.w_accept * Rat::from_integer(count) + w.w_dist * Rat::from_integer(direct - driven))
    };
    let full = (1usize << m) - 1;
    let mut champion: Option<(Rat, u32, Vec<usize>)> = None;
    let consider = |masks: Vec<usize>, champion: &mut Option<(Rat, u32, Vec<usize>)>| {
        let mut total = Rat::from_integer(0);
        for &mk in &masks {
            match value(mk) {
                Some(v) => total += v,
                None => return,
            }
        }
        let count: u32 = masks.iter().map(|mk| mk.count_ones()).sum();
        let better = match champion {
            None => true,
            Some((v, c, _)) => total > *v || (total == *v && count > *c),
        };
        if better {
            *champion = Some((total, count, masks));
        }
    };
    for a in 0..=full {
        if best[a].is_none() {
            continue;
        }
        if kappa == 1 {
            consider(vec![a], &mut champion);
            continue;
        }
        let rest = full & !a;
        let mut b = rest;
        loop {
            if b <= a && best[b].is_some() {
                consider(vec![a, b], &mut champion);
            }
            if b == 0 {
                break;
            }
            b = (b - 1) & rest;
        }
    }
    let (objective, _, masks) = champion.expect("the empty plan is always feasible");
    let sequences: Vec<Vec<Action>> = masks
        .iter()
        .filter(|&&mk| mk != 0)
        .map(|&mk| best[mk].as_ref().expect("mask is feasible").1.clone())
        .collect();
    let plan = plan_from_sequences(&prep, mode, &sequences).expect("oracle routes are schedulable");
    Ok(OracleSolution { objective, plan, sequences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{line_metric_matrix, FleetSpec, ObjectiveWeights, Request, ServiceParams, WindowType};
    use crate::route::{metrics, validate};

    fn inst(kappa: usize, reqs: &[(usize, usize, i64)]) -> Instance {
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
            line_metric_matrix(8, 3, 3),
            FleetSpec { kappa, q_max: 3, t_turn: 3 },
            ServiceParams::default(),
            ObjectiveWeights::default(),
            requests,
        )
        .unwrap()
    }

    #[test]
    fn no_requests() {
        let s = brute_force_solve(&inst(1, &[]), Mode::Lidarp).unwrap();
        assert_eq!(s.objective, Rat::from_integer(0));
    }

    #[test]
    fn single_request_is_accepted() {
        let i = inst(1, &[(1, 5, 50)]);
        let s = brute_force_solve(&i, Mode::Lidarp).unwrap();
        assert_eq!(s.objective, Rat::from_integer(10));
        assert!(validate(&i, &s.plan, Mode::Lidarp).is_empty());
        assert_eq!(metrics(&i, &s.plan).objective, s.objective);
    }

    #[test]
    fn pooling_saves_distance() {
        // Two identical-direction rides that can share the vehicle.
        let i = inst(1, &[(1, 6, 0), (2, 5, 0)]);
        let s = brute_force_solve(&i, Mode::Lidarp).unwrap();
        // driven 15 for 15 + 9 direct
        assert_eq!(s.objective, Rat::from_integer(20 + 9));
        assert!(validate(&i, &s.plan, Mode::Lidarp).is_empty());
    }

    #[test]
    fn guard() {
        let i = inst(3, &[(1, 2, 0)]);
        assert!(matches!(brute_force_solve(&i, Mode::Lidarp), Err(OracleError::TooLarge { .. })));
    }
}
