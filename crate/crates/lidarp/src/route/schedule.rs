//! Timing of a fixed action sequence.
//!
//! The constraints form a system of difference inequalities `T_v >= T_u + w`
//! (windows against a zero-time source, service plus travel between
//! consecutive actions, ride-time caps backwards from drop-off to pick-up).
//! Longest paths from the source give the earliest feasible times; a
//! positive cycle proves infeasibility and is reported as a readable chain.

use thiserror::Error;

use super::{Action, ActionKind, Mode, Prepared};
use crate::instance::{format_decimal, Rat};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("action {position} cannot follow its predecessor: {reason}")]
    Unroutable { position: usize, reason: String },
    #[error("no feasible timing; conflicting constraints: {}", cycle.join(" -> "))]
    Infeasible { cycle: Vec<String> },
}

#[derive(Debug, Clone, Copy)]
enum EdgeKind {
    Earliest(usize),
    Latest(usize),
    Follow(usize),
    Ride(usize),
}

struct Edge {
    from: usize,
    to: usize,
    w: Rat,
    kind: EdgeKind,
}

fn describe(prep: &Prepared, actions: &[Action], e: &Edge) -> String {
    let name = |k: usize| {
        let a = actions[k];
        let id = prep.inst.requests[a.request].id;
        match a.kind {
            ActionKind::Pickup => format!("pick-up of {id}"),
            ActionKind::Dropoff => format!("drop-off of {id}"),
        }
    };
    match e.kind {
        EdgeKind::Earliest(k) => format!("{} not before {}", name(k), format_decimal(&e.w)),
        EdgeKind::Latest(k) => format!("{} not after {}", name(k), format_decimal(&-e.w)),
        EdgeKind::Follow(k) => {
            format!("{} at least {} after {}", name(k + 1), format_decimal(&e.w), name(k))
        }
        EdgeKind::Ride(r) => {
            let id = prep.inst.requests[r].id;
            format!("ride of {id} within {}", format_decimal(&(prep.max_ride(r))))
        }
    }
}

/// Earliest start-of-service times for every action of one vehicle route.
pub fn schedule_sequence(prep: &Prepared, mode: Mode, actions: &[Action]) -> Result<Vec<Rat>, ScheduleError> {
    solve(prep, mode, actions, true)
}

pub(crate) fn solve(
    prep: &Prepared,
    mode: Mode,
    actions: &[Action],
    witness: bool,
) -> Result<Vec<Rat>, ScheduleError> {
    let k = actions.len();
    let mut edges: Vec<Edge> = Vec::with_capacity(4 * k);
    let mut onboard: Vec<usize> = Vec::new();
    let mut pickup_at: Vec<Option<usize>> = vec![None; prep.m()];
    let mut seen = vec![(false, false); prep.m()];
    for (pos, &a) in actions.iter().enumerate() {
        let unroutable = |reason: &str| ScheduleError::Unroutable { position: pos, reason: reason.to_string() };
        if a.request >= prep.m() || !prep.is_servable(a.request) {
            return Err(unroutable("request cannot be served"));
        }
        match a.kind {
            ActionKind::Pickup => {
                if seen[a.request].0 {
                    return Err(unroutable("request picked up twice"));
                }
                seen[a.request].0 = true;
                pickup_at[a.request] = Some(pos);
            }
            ActionKind::Dropoff => {
                if !onboard.contains(&a.request) {
                    return Err(unroutable("drop-off of a passenger not aboard"));
                }
                seen[a.request].1 = true;
            }
        }
        if pos > 0 {
            let prev = actions[pos - 1];
            let Some(tr) = prep.transition(mode, prev, a, onboard.is_empty()) else {
                return Err(unroutable("violates direction or same-stop order"));
            };
            let w = Rat::from_integer(prep.service(prev.request) + prep.transition_time(mode, tr));
            edges.push(Edge { from: pos, to: pos + 1, w, kind: EdgeKind::Follow(pos - 1) });
        }
        match a.kind {
            ActionKind::Pickup => onboard.push(a.request),
            ActionKind::Dropoff => onboard.retain(|&r| r != a.request),
        }
        let win = prep.window(a);
        edges.push(Edge { from: 0, to: pos + 1, w: win.earliest, kind: EdgeKind::Earliest(pos) });
        edges.push(Edge { from: pos + 1, to: 0, w: -win.latest, kind: EdgeKind::Latest(pos) });
        if a.kind == ActionKind::Dropoff {
            let p = pickup_at[a.request].expect("pickup recorded");
            let cap = prep.max_ride(a.request) - Rat::from_integer(prep.service(a.request));
            edges.push(Edge { from: pos + 1, to: p + 1, w: -cap, kind: EdgeKind::Ride(a.request) });
        }
    }

    let n = k + 1;
    let mut dist: Vec<Option<Rat>> = vec![None; n];
    let mut pred: Vec<usize> = vec![usize::MAX; n];
    dist[0] = Some(Rat::from_integer(0));
    let mut last_changed = None;
    for _round in 0..n {
        last_changed = None;
        for (ei, e) in edges.iter().enumerate() {
            let Some(du) = dist[e.from] else { continue };
            let cand = du + e.w;
            if dist[e.to].is_none_or(|dv| cand > dv) {
                dist[e.to] = Some(cand);
                pred[e.to] = ei;
                last_changed = Some(e.to);
            }
        }
        if last_changed.is_none() {
            break;
        }
    }
    if let Some(mut v) = last_changed {
        if !witness {
            return Err(ScheduleError::Infeasible { cycle: Vec::new() });
        }
        for _ in 0..n {
            v = edges[pred[v]].from;
        }
        let start = v;
        let mut cycle = Vec::new();
        loop {
            let e = &edges[pred[v]];
            cycle.push(describe(prep, actions, e));
            v = e.from;
            if v == start {
                break;
            }
        }
        cycle.reverse();
        return Err(ScheduleError::Infeasible { cycle });
    }
    Ok(dist[1..].iter().map(|d| d.expect("every action is reachable from the source")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{line_metric_matrix, FleetSpec, Instance, ObjectiveWeights, Request, ServiceParams, WindowType};

    fn req(id: u32, o: usize, d: usize, wt: WindowType, anchor: i64) -> Request {
        Request { id, origin: o, destination: d, load: 1, window_type: wt, anchor, service: 3 }
    }

    fn inst(requests: Vec<Request>) -> Instance {
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
    fn direct_drive_earliest() {
        let i = inst(vec![req(1, 1, 4, WindowType::EarliestPickup, 0)]);
        let p = Prepared::new(&i);
        let t = schedule_sequence(&p, Mode::Lidarp, &[Action::pickup(0), Action::dropoff(0)]).unwrap();
        // pickup at 0, service 3, travel 9
        assert_eq!(t, vec![Rat::from_integer(0), Rat::from_integer(12)]);
    }

    #[test]
    fn ride_cap_against_later_window_is_reported() {
        // Request 1 rides 1 -> 3 (t = 6, cap 18: at most 15 between service starts)
        // and must board by 15.  Request 2 boards at stop 2 no earlier than 25,
        // so request 1 cannot alight before 31.
        let i = inst(vec![
            req(1, 1, 3, WindowType::EarliestPickup, 0),
            req(2, 2, 7, WindowType::EarliestPickup, 25),
        ]);
        let p = Prepared::new(&i);
        let seq = [Action::pickup(0), Action::pickup(1), Action::dropoff(0), Action::dropoff(1)];
        match schedule_sequence(&p, Mode::Lidarp, &seq) {
            Err(ScheduleError::Infeasible { cycle }) => {
                let text = cycle.join(" | ");
                assert!(text.contains("ride of 1"), "{text}");
                assert!(text.contains("pick-up of 2 not before 25"), "{text}");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        let feasible = (0..=15).any(|t1: i64| {
            (25..=40).any(|t2| {
                let d1 = t2 + 3 + 3;
                t2 >= t1 + 3 + 3 && d1 <= 33 && d1 + 3 - t1 <= 18
            })
        });
        assert!(!feasible);
    }

    #[test]
    fn reversed_pair_is_unroutable() {
        let i = inst(vec![req(1, 1, 4, WindowType::EarliestPickup, 0)]);
        let p = Prepared::new(&i);
        let e = schedule_sequence(&p, Mode::Lidarp, &[Action::dropoff(0), Action::pickup(0)]);
        assert!(matches!(e, Err(ScheduleError::Unroutable { position: 0, .. })));
    }
}
