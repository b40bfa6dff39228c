use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{Mode, Prepared, RoutePlan};
use crate::instance::{format_decimal, Direction, Instance, Rat, WindowType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    Capacity,
    TimeWindow,
    WaitPromise,
    RidePromise,
    Directionality,
    TurnWithPassengers,
    BoardingOrder,
    TravelTime,
    VehicleCount,
    TransferViolation,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// 0-based vehicle index, when the violation is tied to a route.
    pub vehicle: Option<usize>,
    pub request: Option<u32>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(k) = self.vehicle {
            write!(f, " vehicle={}", k + 1)?;
        }
        if let Some(r) = self.request {
            write!(f, " request={r}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

struct Checker<'a, 'b> {
    prep: &'b Prepared<'a>,
    index: HashMap<u32, usize>,
    out: Vec<Violation>,
}

impl Checker<'_, '_> {
    fn push(&mut self, kind: ViolationKind, vehicle: Option<usize>, request: Option<u32>, detail: String) {
        self.out.push(Violation { kind, vehicle, request, detail });
    }
}

#[derive(Clone, Default)]
struct Served {
    pickup: Option<(usize, Rat)>,
    dropoff: Option<(usize, Rat)>,
}

/// Checks a plan against every rule of the chosen mode.  An empty result
/// means the plan is feasible.
pub fn validate(inst: &Instance, plan: &RoutePlan, mode: Mode) -> Vec<Violation> {
    use ViolationKind::*;
    let prep = Prepared::new(inst);
    let index: HashMap<u32, usize> = inst.requests.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let mut c = Checker { prep: &prep, index, out: Vec::new() };
    let lidarp = mode == Mode::Lidarp;

    let used = plan.vehicles_used();
    if used > inst.fleet.kappa {
        c.push(VehicleCount, None, None, format!("{used} vehicles used, fleet has {}", inst.fleet.kappa));
    }

    let mut accepted = HashSet::new();
    let mut listed = HashSet::new();
    for (list, is_acc) in [(&plan.accepted, true), (&plan.rejected, false)] {
        for &id in list {
            if !c.index.contains_key(&id) {
                c.push(TransferViolation, None, Some(id), "unknown request id".into());
                continue;
            }
            if !listed.insert(id) {
                c.push(TransferViolation, None, Some(id), "listed more than once".into());
            }
            if is_acc {
                accepted.insert(id);
            }
        }
    }
    for r in &inst.requests {
        if !listed.contains(&r.id) {
            c.push(TransferViolation, None, Some(r.id), "neither accepted nor rejected".into());
        }
        if accepted.contains(&r.id) && !prep.is_servable(c.index[&r.id]) {
            c.push(TimeWindow, None, Some(r.id), "request has no feasible time window".into());
        }
    }

    let mut served: Vec<Served> = vec![Served::default(); inst.requests.len()];
    let t_turn = Rat::from_integer(inst.fleet.t_turn);
    for (k, route) in plan.routes.iter().enumerate() {
        let mut onboard: Vec<usize> = Vec::new();
        let mut load: u32 = 0;
        let mut loaded_turn = vec![false; route.len()];
        // canonical order within one stay: (phase, last key); phase 0 = alighting, 1 = boarding
        let mut stay: Option<(u8, (Rat, u32))> = None;
        for (j, v) in route.iter().enumerate() {
            if v.stop < 1 || v.stop > inst.n_stops() {
                c.push(TransferViolation, Some(k), None, format!("visit at unknown stop {}", v.stop));
                continue;
            }
            if j > 0 {
                let prev = &route[j - 1];
                let same_stay = prev.stop == v.stop && !(lidarp && prev.turn_after);
                if !same_stay {
                    stay = None;
                }
            }
            let mut t = v.arrival;
            for &id in &v.alights {
                let Some(&r) = c.index.get(&id) else {
                    c.push(TransferViolation, Some(k), Some(id), "unknown request alights".into());
                    continue;
                };
                if v.boards.contains(&id) {
                    c.push(TransferViolation, Some(k), Some(id), format!("boards and alights at stop {}", v.stop));
                }
                if let Some(pos) = onboard.iter().position(|&x| x == r) {
                    onboard.remove(pos);
                    load -= inst.requests[r].load;
                    if served[r].dropoff.is_some() {
                        c.push(TransferViolation, Some(k), Some(id), "alights twice".into());
                    }
                    served[r].dropoff = Some((k, t));
                } else {
                    c.push(TransferViolation, Some(k), Some(id), format!("alights at stop {} without being aboard", v.stop));
                }
                if inst.requests[r].destination != v.stop {
                    c.push(TransferViolation, Some(k), Some(id), format!("alights at stop {} instead of its destination", v.stop));
                }
                if lidarp {
                    let key = prep.keys[r];
                    match stay {
                        Some((1, _)) => c.push(BoardingOrder, Some(k), Some(id), "alights after a boarding at the same stop".into()),
                        Some((0, last)) if last > key => {
                            c.push(BoardingOrder, Some(k), Some(id), "alights out of order".into())
                        }
                        _ => {}
                    }
                    if !matches!(stay, Some((1, _))) {
                        stay = Some((0, key));
                    }
                }
                t += Rat::from_integer(inst.requests[r].service);
            }
            for &id in &v.boards {
                let Some(&r) = c.index.get(&id) else {
                    c.push(TransferViolation, Some(k), Some(id), "unknown request boards".into());
                    continue;
                };
                if !accepted.contains(&id) {
                    c.push(TransferViolation, Some(k), Some(id), "boards without being accepted".into());
                }
                if served[r].pickup.is_some() {
                    c.push(TransferViolation, Some(k), Some(id), "boards twice".into());
                } else {
                    served[r].pickup = Some((k, t));
                }
                if inst.requests[r].origin != v.stop {
                    c.push(TransferViolation, Some(k), Some(id), format!("boards at stop {} instead of its origin", v.stop));
                }
                onboard.push(r);
                load += inst.requests[r].load;
                if lidarp {
                    let key = prep.keys[r];
                    if let Some((1, last)) = stay {
                        if last > key {
                            c.push(BoardingOrder, Some(k), Some(id), "boards out of order".into());
                        }
                    }
                    stay = Some((1, key));
                }
                t += Rat::from_integer(inst.requests[r].service);
            }
            if v.departure < t {
                c.push(
                    TravelTime,
                    Some(k),
                    None,
                    format!("departs stop {} at {} before service ends at {}", v.stop, format_decimal(&v.departure), format_decimal(&t)),
                );
            }
            if load > inst.fleet.q_max {
                c.push(Capacity, Some(k), None, format!("load {load} after stop {} exceeds {}", v.stop, inst.fleet.q_max));
            }
            if lidarp && v.turn_after && load > 0 {
                loaded_turn[j] = true;
                c.push(TurnWithPassengers, Some(k), None, format!("turns at stop {} with load {load}", v.stop));
            }
            if let Some(next) = route.get(j + 1) {
                if next.stop >= 1 && next.stop <= inst.n_stops() {
                    let mut need = Rat::from_integer(inst.matrix.travel(v.stop, next.stop));
                    if lidarp && v.turn_after {
                        need += t_turn;
                    }
                    if next.arrival < v.departure + need {
                        c.push(
                            TravelTime,
                            Some(k),
                            None,
                            format!(
                                "stop {} -> {} needs {} but has {}",
                                v.stop,
                                next.stop,
                                format_decimal(&need),
                                format_decimal(&(next.arrival - v.departure))
                            ),
                        );
                    }
                }
            }
        }
        if lidarp {
            check_directions(&mut c, k, plan, &loaded_turn);
        }
    }

    for (r, req) in inst.requests.iter().enumerate() {
        let id = req.id;
        let s = &served[r];
        if !accepted.contains(&id) {
            continue;
        }
        let (Some((kp, tp)), Some((kd, td))) = (s.pickup, s.dropoff) else {
            c.push(TransferViolation, None, Some(id), "accepted but not carried from origin to destination".into());
            continue;
        };
        if kp != kd {
            c.push(TransferViolation, Some(kd), Some(id), format!("boards vehicle {} but alights from {}", kp + 1, kd + 1));
        }
        let Some(sched) = prep.schedules[r] else { continue };
        let wait_side_pickup = req.window_type == WindowType::EarliestPickup;
        for (t, win, is_pickup) in [(tp, sched.pickup, true), (td, sched.dropoff, false)] {
            let what = if is_pickup { "pick-up" } else { "drop-off" };
            if t < win.earliest {
                let kind = if !is_pickup && !wait_side_pickup { WaitPromise } else { TimeWindow };
                c.push(kind, Some(kd), Some(id), format!("{what} at {} before {}", format_decimal(&t), format_decimal(&win.earliest)));
            }
            if t > win.latest {
                let kind = if is_pickup && wait_side_pickup { WaitPromise } else { TimeWindow };
                c.push(kind, Some(kd), Some(id), format!("{what} at {} after {}", format_decimal(&t), format_decimal(&win.latest)));
            }
        }
        let ride = td + Rat::from_integer(req.service) - tp;
        if ride > sched.max_ride {
            c.push(
                RidePromise,
                Some(kd),
                Some(id),
                format!("ride {} exceeds {}", format_decimal(&ride), format_decimal(&sched.max_ride)),
            );
        }
    }
    c.out
}

fn move_dir(from: usize, to: usize) -> Option<Direction> {
    match from.cmp(&to) {
        std::cmp::Ordering::Less => Some(Direction::Ascending),
        std::cmp::Ordering::Greater => Some(Direction::Descending),
        std::cmp::Ordering::Equal => None,
    }
}

/// Splits the route at its (empty) turns and checks that each run moves one
/// way, carries only passengers of that direction, and that consecutive runs
/// alternate.
fn check_directions(c: &mut Checker, k: usize, plan: &RoutePlan, loaded_turn: &[bool]) {
    use ViolationKind::Directionality;
    let route = &plan.routes[k];
    let inst = c.prep.inst;
    let mut runs: Vec<Option<Direction>> = Vec::new();
    let mut start = 0;
    while start < route.len() {
        let mut end = start;
        while end + 1 < route.len() && !(route[end].turn_after && !loaded_turn[end]) {
            end += 1;
        }
        let mut dirs: Vec<(Direction, String)> = Vec::new();
        let first_leg = if start > 0 { start - 1 } else { start };
        for j in first_leg..end {
            if let Some(d) = move_dir(route[j].stop, route[j + 1].stop) {
                dirs.push((d, format!("moves {} -> {}", route[j].stop, route[j + 1].stop)));
            }
        }
        for v in &route[start..=end] {
            for id in v.boards.iter().chain(&v.alights) {
                if let Some(&r) = c.index.get(id) {
                    dirs.push((inst.requests[r].direction(), format!("serves request {id}")));
                }
            }
        }
        let mut run_dir = None;
        for (d, why) in &dirs {
            match run_dir {
                None => run_dir = Some((*d, why.clone())),
                Some((rd, ref first)) if rd != *d => {
                    c.push(
                        Directionality,
                        Some(k),
                        None,
                        format!("between turns the vehicle {first} but also {why} in the other direction"),
                    );
                    break;
                }
                _ => {}
            }
        }
        runs.push(run_dir.map(|(d, _)| d));
        start = end + 1;
    }
    let mut last: Option<(usize, Direction)> = None;
    for (i, d) in runs.iter().enumerate() {
        let Some(d) = *d else { continue };
        if let Some((j, prev)) = last {
            let expect = if (i - j) % 2 == 0 { prev } else { prev.opposite() };
            if d != expect {
                c.push(Directionality, Some(k), None, format!("run {} does not alternate direction with run {}", i + 1, j + 1));
            }
        }
        last = Some((i, d));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{line_metric_matrix, FleetSpec, ObjectiveWeights, Request, ServiceParams};
    use crate::route::{plan_from_sequences, Action};

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
            FleetSpec { kappa: 1, q_max: 1, t_turn: 3 },
            ServiceParams::default(),
            ObjectiveWeights::default(),
            vec![r(1, 2, 5, 0), r(2, 3, 6, 0), r(3, 7, 4, 100)],
        )
        .unwrap()
    }

    #[test]
    fn direct_plan_is_clean() {
        let i = inst();
        let p = Prepared::new(&i);
        let plan = plan_from_sequences(&p, Mode::Lidarp, &[vec![Action::pickup(0), Action::dropoff(0)]]).unwrap();
        assert_eq!(validate(&i, &plan, Mode::Lidarp), vec![]);
    }

    #[test]
    fn turn_with_passenger_and_capacity() {
        let i = inst();
        let p = Prepared::new(&i);
        let mut plan = plan_from_sequences(&p, Mode::Lidarp, &[vec![Action::pickup(0), Action::dropoff(0)]]).unwrap();
        plan.routes[0][0].turn_after = true;
        plan.routes[0][1].arrival += Rat::from_integer(3);
        plan.routes[0][1].departure += Rat::from_integer(3);
        let kinds: Vec<_> = validate(&i, &plan, Mode::Lidarp).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::TurnWithPassengers]);

        let plan = plan_from_sequences(
            &p,
            Mode::Darp,
            &[vec![Action::pickup(0), Action::pickup(1), Action::dropoff(0), Action::dropoff(1)]],
        )
        .unwrap();
        let kinds: Vec<_> = validate(&i, &plan, Mode::Darp).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::Capacity]);
    }

    #[test]
    fn missing_turn_is_a_direction_violation() {
        let i = inst();
        let p = Prepared::new(&i);
        let seq = vec![Action::pickup(0), Action::dropoff(0), Action::pickup(2), Action::dropoff(2)];
        let mut plan = plan_from_sequences(&p, Mode::Lidarp, &[seq]).unwrap();
        assert_eq!(validate(&i, &plan, Mode::Lidarp), vec![]);
        for v in &mut plan.routes[0] {
            v.turn_after = false;
        }
        let kinds: Vec<_> = validate(&i, &plan, Mode::Lidarp).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::Directionality]);
    }
}
