//! Route plans: the decoded solution form shared by every formulation, plus
//! the rules that say which action may follow which on one vehicle.
//!
//! A vehicle route is a sequence of pick-up and drop-off actions.  Between
//! two actions the vehicle drives, possibly turning.  In liDARP mode a
//! vehicle with passengers aboard keeps its direction; an empty vehicle may
//! turn, paying `t_turn` per turn.  Actions at the same stop during one stay
//! follow the canonical order: drop-offs first, then pick-ups, each group by
//! [`service_key`](crate::timewin::service_key).

mod metrics;
mod oracle;
mod plan;
mod schedule;
mod validate;

use std::fmt;

use crate::instance::{Direction, Instance, Rat, Stop};
use crate::timewin::{derive_all, service_key, RequestSchedule, TimeWindow};

pub use metrics::{metrics, SolutionMetrics};
pub use oracle::{brute_force_solve, OracleError, OracleSolution, ORACLE_MAX_REQUESTS, ORACLE_MAX_VEHICLES};
pub use plan::{format_plan, parse_plan, plan_from_sequences, PlanParseError, RoutePlan, Visit};
pub use schedule::{schedule_sequence, ScheduleError};
pub use validate::{validate, Violation, ViolationKind};

/// A solver solution that does not describe a valid set of routes.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot decode solution: {0}")]
pub struct DecodeError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Line-based: no turning with passengers aboard, ordered same-stop service.
    Lidarp,
    /// Classical dial-a-ride: no direction rules, no turn time.
    Darp,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Lidarp => "lidarp",
            Mode::Darp => "darp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Pickup,
    Dropoff,
}

/// One pick-up or drop-off; `request` is the index into `Instance::requests`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    pub request: usize,
    pub kind: ActionKind,
}

impl Action {
    pub fn pickup(request: usize) -> Self {
        Action { request, kind: ActionKind::Pickup }
    }

    pub fn dropoff(request: usize) -> Self {
        Action { request, kind: ActionKind::Dropoff }
    }
}

/// Driving between two consecutive actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub travel: i64,
    pub turns: u32,
}

/// Per-request data every consumer of the routing rules needs.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub inst: &'a Instance,
    /// `None` for requests whose windows cannot be derived.
    pub schedules: Vec<Option<RequestSchedule>>,
    pub keys: Vec<(Rat, u32)>,
}

impl<'a> Prepared<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        let schedules = derive_all(inst);
        let keys = inst.requests.iter().zip(&schedules).map(|(r, s)| service_key(r, s.as_ref())).collect();
        Prepared { inst, schedules, keys }
    }

    pub fn m(&self) -> usize {
        self.inst.requests.len()
    }

    pub fn is_servable(&self, r: usize) -> bool {
        self.schedules[r].is_some()
    }

    pub fn stop(&self, a: Action) -> Stop {
        let r = &self.inst.requests[a.request];
        match a.kind {
            ActionKind::Pickup => r.origin,
            ActionKind::Dropoff => r.destination,
        }
    }

    pub fn direction(&self, r: usize) -> Direction {
        self.inst.requests[r].direction()
    }

    pub fn service(&self, r: usize) -> i64 {
        self.inst.requests[r].service
    }

    pub fn direct(&self, r: usize) -> i64 {
        let q = &self.inst.requests[r];
        self.inst.matrix.travel(q.origin, q.destination)
    }

    /// Window of the action; panics for unschedulable requests.
    pub fn window(&self, a: Action) -> TimeWindow {
        let s = self.schedules[a.request].as_ref().expect("request has no schedule");
        match a.kind {
            ActionKind::Pickup => s.pickup,
            ActionKind::Dropoff => s.dropoff,
        }
    }

    pub fn max_ride(&self, r: usize) -> Rat {
        self.schedules[r].as_ref().expect("request has no schedule").max_ride
    }

    /// Whether `a` may directly precede `c` at the same stop and in one stay.
    pub fn same_stop_order_ok(&self, a: Action, c: Action) -> bool {
        use ActionKind::*;
        match (a.kind, c.kind) {
            (Dropoff, Pickup) => true,
            (Pickup, Dropoff) => false,
            _ => self.keys[a.request] < self.keys[c.request],
        }
    }

    /// Time cost of a transition in the given mode.
    pub fn transition_time(&self, mode: Mode, t: Transition) -> i64 {
        match mode {
            Mode::Lidarp => t.travel + t.turns as i64 * self.inst.fleet.t_turn,
            Mode::Darp => t.travel,
        }
    }

    /// How the vehicle gets from action `a` to action `c`.  `empty` tells
    /// whether nobody is aboard after `a`.  `None` means `c` cannot follow
    /// `a` directly.
    pub fn transition(&self, mode: Mode, a: Action, c: Action, empty: bool) -> Option<Transition> {
        let (sa, sc) = (self.stop(a), self.stop(c));
        let travel = self.inst.matrix.travel(sa, sc);
        if mode == Mode::Darp {
            return Some(Transition { travel, turns: 0 });
        }
        let (da, dc) = (self.direction(a.request), self.direction(c.request));
        if !empty {
            if da != dc || !da.allows(sa, sc) {
                return None;
            }
            if sa == sc && !self.same_stop_order_ok(a, c) {
                return None;
            }
            return Some(Transition { travel, turns: 0 });
        }
        let turns = if da != dc {
            1
        } else if da.allows(sa, sc) {
            0
        } else {
            2
        };
        Some(Transition { travel, turns })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{line_metric_matrix, FleetSpec, ObjectiveWeights, Request, ServiceParams, WindowType};

    fn inst(reqs: &[(usize, usize, i64)]) -> Instance {
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
            FleetSpec { kappa: 1, q_max: 3, t_turn: 3 },
            ServiceParams::default(),
            ObjectiveWeights::default(),
            requests,
        )
        .unwrap()
    }

    #[test]
    fn empty_vehicle_turn_counts() {
        let i = inst(&[(2, 5, 0), (3, 6, 10), (6, 1, 20), (1, 4, 30)]);
        let p = Prepared::new(&i);
        let tr = |a, c| p.transition(Mode::Lidarp, a, c, true).unwrap();
        // drop 1 at 5, pick 2 at 3 (same direction, behind): two turns
        assert_eq!(tr(Action::dropoff(0), Action::pickup(1)), Transition { travel: 6, turns: 2 });
        // drop 1 at 5, pick 3 at 6 (descending): one turn
        assert_eq!(tr(Action::dropoff(0), Action::pickup(2)), Transition { travel: 3, turns: 1 });
        // drop 2 at 6, pick 3 at 6: turn on the spot
        assert_eq!(tr(Action::dropoff(1), Action::pickup(2)), Transition { travel: 0, turns: 1 });
        assert_eq!(p.transition(Mode::Darp, Action::dropoff(0), Action::pickup(1), true).unwrap().turns, 0);
    }

    #[test]
    fn loaded_vehicle_keeps_direction() {
        let i = inst(&[(2, 5, 0), (3, 6, 10), (6, 1, 20)]);
        let p = Prepared::new(&i);
        assert!(p.transition(Mode::Lidarp, Action::pickup(0), Action::pickup(1), false).is_some());
        assert!(p.transition(Mode::Lidarp, Action::pickup(1), Action::pickup(0), false).is_none());
        assert!(p.transition(Mode::Lidarp, Action::pickup(0), Action::pickup(2), false).is_none());
        assert!(p.transition(Mode::Darp, Action::pickup(0), Action::pickup(2), false).is_some());
    }

    #[test]
    fn same_stop_order() {
        let i = inst(&[(2, 5, 0), (2, 6, 10), (1, 2, 20)]);
        let p = Prepared::new(&i);
        assert!(p.same_stop_order_ok(Action::pickup(0), Action::pickup(1)));
        assert!(!p.same_stop_order_ok(Action::pickup(1), Action::pickup(0)));
        assert!(p.same_stop_order_ok(Action::dropoff(2), Action::pickup(1)));
        assert!(!p.same_stop_order_ok(Action::pickup(0), Action::dropoff(2)));
    }
}
