use std::fmt::Write as _;

use thiserror::Error;

use super::schedule::schedule_sequence;
use super::{Action, ActionKind, Mode, Prepared, ScheduleError};
use crate::instance::{format_decimal, parse_decimal, Instance, Rat, Stop};

/// A stay of a vehicle at one stop.  Alightings are served first, then
/// boardings, back to back starting at `arrival`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visit {
    pub stop: Stop,
    pub arrival: Rat,
    pub departure: Rat,
    pub boards: Vec<u32>,
    pub alights: Vec<u32>,
    /// The vehicle reverses direction after this visit.
    pub turn_after: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoutePlan {
    /// Visits per vehicle, indexed by vehicle.
    pub routes: Vec<Vec<Visit>>,
    pub accepted: Vec<u32>,
    pub rejected: Vec<u32>,
}

impl RoutePlan {
    /// The plan that serves nobody.
    pub fn empty(inst: &Instance) -> Self {
        RoutePlan { routes: Vec::new(), accepted: Vec::new(), rejected: inst.requests.iter().map(|r| r.id).collect() }
    }

    pub fn vehicles_used(&self) -> usize {
        self.routes.iter().filter(|r| !r.is_empty()).count()
    }
}

/// Times each sequence at its earliest schedule and groups the actions into
/// visits.  Turns are placed where the vehicle physically reverses, adding
/// an empty visit when the reversal happens at the next stop.
pub fn plan_from_sequences(prep: &Prepared, mode: Mode, seqs: &[Vec<Action>]) -> Result<RoutePlan, ScheduleError> {
    let inst = prep.inst;
    let t_turn = Rat::from_integer(inst.fleet.t_turn);
    let mut routes = Vec::with_capacity(seqs.len());
    let mut served = vec![false; prep.m()];
    for seq in seqs {
        let times = schedule_sequence(prep, mode, seq)?;
        let mut visits: Vec<Visit> = Vec::new();
        let mut onboard = 0usize;
        for (k, (&a, &t)) in seq.iter().zip(&times).enumerate() {
            let id = inst.requests[a.request].id;
            let b = Rat::from_integer(prep.service(a.request));
            let stop = prep.stop(a);
            let mut joined = false;
            if k > 0 {
                let p = seq[k - 1];
                let tr = prep.transition(mode, p, a, onboard == 0).expect("schedule accepted the sequence");
                let cur = visits.last_mut().expect("a visit is open");
                let back_to_back = cur.departure == t;
                let order_ok = mode == Mode::Darp && !(p.kind == ActionKind::Pickup && a.kind == ActionKind::Dropoff)
                    || mode == Mode::Lidarp && prep.same_stop_order_ok(p, a);
                if tr.turns == 0 && stop == cur.stop && back_to_back && order_ok {
                    joined = true;
                } else if mode == Mode::Lidarp && tr.turns > 0 {
                    let dir = prep.direction(p.request);
                    let ahead = cur.stop != stop && dir.allows(cur.stop, stop);
                    if tr.turns == 1 && !ahead {
                        cur.turn_after = true;
                    } else {
                        cur.turn_after = tr.turns == 2;
                        let at = t - t_turn;
                        visits.push(Visit {
                            stop,
                            arrival: at,
                            departure: at,
                            boards: Vec::new(),
                            alights: Vec::new(),
                            turn_after: true,
                        });
                    }
                }
            }
            if !joined {
                visits.push(Visit {
                    stop,
                    arrival: t,
                    departure: t,
                    boards: Vec::new(),
                    alights: Vec::new(),
                    turn_after: false,
                });
            }
            let cur = visits.last_mut().expect("a visit is open");
            cur.departure += b;
            match a.kind {
                ActionKind::Pickup => {
                    cur.boards.push(id);
                    onboard += 1;
                    served[a.request] = true;
                }
                ActionKind::Dropoff => {
                    cur.alights.push(id);
                    onboard -= 1;
                }
            }
        }
        routes.push(visits);
    }
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (r, req) in inst.requests.iter().enumerate() {
        if served[r] {
            accepted.push(req.id);
        } else {
            rejected.push(req.id);
        }
    }
    Ok(RoutePlan { routes, accepted, rejected })
}

fn ids(v: &[u32]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// One line per visit: `k <stop> <arr> <dep> B:<ids> A:<ids> [TURN]`,
/// preceded by `ACCEPTED` and `REJECTED` headers.  Vehicles count from 1.
pub fn format_plan(plan: &RoutePlan) -> String {
    let mut out = String::new();
    for (head, list) in [("ACCEPTED", &plan.accepted), ("REJECTED", &plan.rejected)] {
        out.push_str(head);
        if !list.is_empty() {
            let _ = write!(out, " {}", ids(list));
        }
        out.push('\n');
    }
    for (k, route) in plan.routes.iter().enumerate() {
        for v in route {
            let _ = write!(
                out,
                "{} {} {} {} B:{} A:{}",
                k + 1,
                v.stop,
                format_decimal(&v.arrival),
                format_decimal(&v.departure),
                ids(&v.boards),
                ids(&v.alights)
            );
            out.push_str(if v.turn_after { " TURN\n" } else { "\n" });
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("plan line {line}: {msg}")]
pub struct PlanParseError {
    pub line: usize,
    pub msg: String,
}

fn parse_ids(s: &str, line: usize) -> Result<Vec<u32>, PlanParseError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.parse().map_err(|_| PlanParseError { line, msg: format!("bad request id `{t}`") }))
        .collect()
}

pub fn parse_plan(text: &str) -> Result<RoutePlan, PlanParseError> {
    let mut plan = RoutePlan::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| PlanParseError { line, msg };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        match tok[0] {
            "ACCEPTED" => plan.accepted = parse_ids(tok.get(1).copied().unwrap_or(""), line)?,
            "REJECTED" => plan.rejected = parse_ids(tok.get(1).copied().unwrap_or(""), line)?,
            _ => {
                if tok.len() < 6 || tok.len() > 7 {
                    return Err(err(format!("expected 6 or 7 fields, found {}", tok.len())));
                }
                let k: usize = tok[0].parse().map_err(|_| err(format!("bad vehicle `{}`", tok[0])))?;
                if k == 0 {
                    return Err(err("vehicles are numbered from 1".into()));
                }
                let stop: Stop = tok[1].parse().map_err(|_| err(format!("bad stop `{}`", tok[1])))?;
                let arrival = parse_decimal(tok[2]).ok_or_else(|| err(format!("bad time `{}`", tok[2])))?;
                let departure = parse_decimal(tok[3]).ok_or_else(|| err(format!("bad time `{}`", tok[3])))?;
                let boards = tok[4].strip_prefix("B:").ok_or_else(|| err("expected `B:`".into()))?;
                let alights = tok[5].strip_prefix("A:").ok_or_else(|| err("expected `A:`".into()))?;
                let turn_after = match tok.get(6) {
                    None => false,
                    Some(&"TURN") => true,
                    Some(t) => return Err(err(format!("unexpected `{t}`"))),
                };
                if plan.routes.len() < k {
                    plan.routes.resize(k, Vec::new());
                }
                plan.routes[k - 1].push(Visit {
                    stop,
                    arrival,
                    departure,
                    boards: parse_ids(boards, line)?,
                    alights: parse_ids(alights, line)?,
                    turn_after,
                });
            }
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{line_metric_matrix, FleetSpec, ObjectiveWeights, Request, ServiceParams, WindowType};

    fn inst() -> Instance {
        let r = |id, o, d, anchor| Request {
            id,
            origin: o,
            destination: d,
            load: 1,
            window_type: WindowType::EarliestPickup,
            anchor,
            service: 3,
        };
        Instance::new(
            line_metric_matrix(8, 3, 3),
            FleetSpec { kappa: 2, q_max: 3, t_turn: 3 },
            ServiceParams::default(),
            ObjectiveWeights::default(),
            vec![r(1, 2, 5, 0), r(2, 7, 6, 30), r(3, 4, 7, 100)],
        )
        .unwrap()
    }

    #[test]
    fn turn_placement() {
        let i = inst();
        let p = Prepared::new(&i);
        // 1 ascends to 5, then 2 descends from 7: drive on to 7 and turn there.
        let seq = vec![Action::pickup(0), Action::dropoff(0), Action::pickup(1), Action::dropoff(1)];
        let plan = plan_from_sequences(&p, Mode::Lidarp, &[seq]).unwrap();
        let stops: Vec<_> = plan.routes[0].iter().map(|v| (v.stop, v.turn_after)).collect();
        assert_eq!(stops, vec![(2, false), (5, false), (7, true), (7, false), (6, false)]);
        assert_eq!(plan.accepted, vec![1, 2]);
        assert_eq!(plan.rejected, vec![3]);
    }

    #[test]
    fn text_round_trip() {
        let i = inst();
        let p = Prepared::new(&i);
        let seqs = vec![
            vec![Action::pickup(0), Action::dropoff(0)],
            vec![Action::pickup(2), Action::dropoff(2)],
        ];
        let plan = plan_from_sequences(&p, Mode::Lidarp, &seqs).unwrap();
        let text = format_plan(&plan);
        assert!(text.starts_with("ACCEPTED 1,3\nREJECTED 2\n1 2 0 3 B:1 A:\n"));
        assert_eq!(parse_plan(&text).unwrap(), plan);
        assert_eq!(format_plan(&RoutePlan::empty(&i)), "ACCEPTED\nREJECTED 1,2,3\n");
        assert!(parse_plan("1 2 x 3 B: A:").is_err());
    }
}
