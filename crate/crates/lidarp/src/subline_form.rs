//! Subline-based formulation.
//!
//! Every vehicle owns `σ` sublines of alternating direction, odd sublines
//! ascending.  A subline is a monotone path over the stops; consecutive
//! active sublines are joined by a turn at a shared stop.  Requests are
//! assigned to a subline of their own direction, so a vehicle is always
//! empty when it turns.  A vehicle whose first movement is descending uses a
//! degenerate first subline whose closing turn is free.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::instance::{Direction, Instance, Rat, Stop};
use crate::milp::{int, rat, MilpModel, MilpSolution, Sense, VarId};
use crate::route::{plan_from_sequences, Action, DecodeError, Mode, Prepared, RoutePlan};

/// Same-stop precedence for one request `i`; entries are request indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Precedence {
    /// Same origin, same direction, boarding before `i`.
    pub oo: Vec<usize>,
    /// Destination at `i`'s origin, same direction: alight before `i` boards.
    pub od: Vec<usize>,
    /// Same destination, same direction, alighting before `i`.
    pub dd: Vec<usize>,
}

/// Precedence sets per request, ordered by the service key (earliest
/// pick-up, then id).  Requests without a schedule take part in none.
pub fn precedence_sets(inst: &Instance) -> Vec<Precedence> {
    let prep = Prepared::new(inst);
    let m = prep.m();
    (0..m)
        .map(|i| {
            let mut p = Precedence::default();
            if !prep.is_servable(i) {
                return p;
            }
            let ri = &inst.requests[i];
            for j in (0..m).filter(|&j| j != i && prep.is_servable(j)) {
                let rj = &inst.requests[j];
                if rj.direction() != ri.direction() {
                    continue;
                }
                let before = prep.keys[j] < prep.keys[i];
                if rj.origin == ri.origin && before {
                    p.oo.push(j);
                }
                if rj.destination == ri.origin {
                    p.od.push(j);
                }
                if rj.destination == ri.destination && before {
                    p.dd.push(j);
                }
            }
            p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigMConstants {
    /// Longest maximum ride time.
    pub m1: Rat,
    /// Bound on every arrival and departure time.
    pub m2: Rat,
    /// End of service.
    pub t_plus: Rat,
}

impl BigMConstants {
    pub fn new(inst: &Instance, sigma: usize) -> Self {
        let prep = Prepared::new(inst);
        let zero = Rat::from_integer(0);
        let servable = || (0..prep.m()).filter(|&r| prep.is_servable(r));
        let m1 = servable().map(|r| prep.max_ride(r)).max().unwrap_or(zero);
        let paper_m2 = servable()
            .map(|r| prep.window(Action::dropoff(r)).latest + Rat::from_integer((2 * sigma as i64 - 1) * prep.service(r)))
            .max()
            .unwrap_or(zero);
        let busy = servable()
            .map(|r| prep.window(Action::dropoff(r)).latest + Rat::from_integer(prep.service(r) + inst.fleet.t_turn))
            .max()
            .unwrap_or(zero);
        let t_plus = m1 + Rat::from_integer((sigma as i64 - 1).max(0) * inst.fleet.t_turn);
        BigMConstants { m1, m2: paper_m2.max(busy), t_plus }
    }
}

pub fn subline_direction(s: usize) -> Direction {
    if s % 2 == 1 {
        Direction::Ascending
    } else {
        Direction::Descending
    }
}

/// Variable lookup for a built subline model.  Sublines and vehicles are
/// 1-based, stops are the instance's stop numbers, requests are indices.
#[derive(Debug, Clone, Default)]
pub struct SublineIndexing {
    pub sigma: usize,
    pub kappa: usize,
    pub stops: Vec<Stop>,
    pub y: BTreeMap<(Stop, usize, usize), VarId>,
    /// `(i, j, s, k)`; `i == j` is the turn after subline `s`.
    pub x: BTreeMap<(Stop, Stop, usize, usize), VarId>,
    pub assign: BTreeMap<(usize, usize, usize), VarId>,
    pub w: BTreeMap<(usize, usize), VarId>,
    pub z: Vec<VarId>,
    pub start: BTreeMap<(Stop, usize), VarId>,
    pub end: BTreeMap<(Stop, usize, usize), VarId>,
    pub active: BTreeMap<(usize, usize), VarId>,
    pub descending_start: Vec<VarId>,
    pub arr: BTreeMap<(Stop, usize, usize), VarId>,
    pub dep: BTreeMap<(Stop, usize, usize), VarId>,
    pub pickup: BTreeMap<usize, VarId>,
    pub dropoff: BTreeMap<usize, VarId>,
}

#[derive(Debug, Clone)]
pub struct SublineModel {
    pub model: MilpModel,
    pub index: SublineIndexing,
    pub big_m: BigMConstants,
}

/// Default number of sublines per vehicle: twice the request count.
pub fn default_sigma(inst: &Instance) -> usize {
    (2 * inst.requests.len()).max(1)
}

pub fn build_subline_model(inst: &Instance, sigma: usize) -> SublineModel {
    assert!(sigma >= 1, "at least one subline per vehicle");
    let prep = Prepared::new(inst);
    let big_m = BigMConstants::new(inst, sigma);
    let kappa = inst.fleet.kappa;
    let stops: Vec<Stop> = inst.stops().collect();
    let t_turn = inst.fleet.t_turn;
    let q_max = inst.fleet.q_max as i64;
    let m2 = rat(big_m.m2);
    let one = int(1);
    let minus = int(-1);
    let zero = Rat::from_integer(0);
    let mut model = MilpModel::new();
    let mut ix = SublineIndexing { sigma, kappa, stops: stops.clone(), ..SublineIndexing::default() };
    let servable: Vec<usize> = (0..prep.m()).filter(|&r| prep.is_servable(r)).collect();
    let ahead = |s: usize, i: Stop, j: Stop| match subline_direction(s) {
        Direction::Ascending => i < j,
        Direction::Descending => i > j,
    };
    let id = |r: usize| inst.requests[r].id;

    for k in 1..=kappa {
        let z = model.add_binary(format!("z#{k}"));
        model.tag(z, format!("vehicle {k} used"));
        ix.z.push(z);
        let u = model.add_binary(format!("u#{k}"));
        model.tag(u, format!("vehicle {k} starts descending"));
        ix.descending_start.push(u);
        for &i in &stops {
            let v = model.add_binary(format!("start#{i}#{k}"));
            model.tag(v, format!("vehicle {k} starts at stop {i}"));
            ix.start.insert((i, k), v);
        }
        for s in 1..=sigma {
            let g = model.add_binary(format!("g#{s}#{k}"));
            model.tag(g, format!("subline {s} of vehicle {k} active"));
            ix.active.insert((s, k), g);
            for &i in &stops {
                let y = model.add_binary(format!("y#{i}#{s}#{k}"));
                model.tag(y, format!("subline {s} of vehicle {k} stops at {i}"));
                ix.y.insert((i, s, k), y);
                let e = model.add_binary(format!("end#{i}#{s}#{k}"));
                model.tag(e, format!("vehicle {k} ends at {i} after subline {s}"));
                ix.end.insert((i, s, k), e);
                let a = model.add_continuous(format!("arr#{i}#{s}#{k}"), Some(int(0)), Some(m2.clone()));
                let d = model.add_continuous(format!("dep#{i}#{s}#{k}"), Some(int(0)), Some(m2.clone()));
                model.tag(a, format!("arrival of subline {s} of vehicle {k} at {i}"));
                model.tag(d, format!("departure of subline {s} of vehicle {k} at {i}"));
                ix.arr.insert((i, s, k), a);
                ix.dep.insert((i, s, k), d);
                for &j in &stops {
                    if ahead(s, i, j) || (i == j && s < sigma) {
                        let x = model.add_binary(format!("x#{i}#{j}#{s}#{k}"));
                        let what = if i == j { format!("turn at {i}") } else { format!("drive {i} -> {j}") };
                        model.tag(x, format!("subline {s} of vehicle {k}: {what}"));
                        ix.x.insert((i, j, s, k), x);
                    }
                }
            }
            for &r in &servable {
                if inst.requests[r].direction() == subline_direction(s) {
                    let a = model.add_binary(format!("assign#{}#{s}#{k}", id(r)));
                    model.tag(a, format!("request {} rides subline {s} of vehicle {k}", id(r)));
                    ix.assign.insert((r, s, k), a);
                }
            }
        }
    }
    let prec = precedence_sets(inst);
    for (i, p) in prec.iter().enumerate() {
        for &j in p.oo.iter().chain(&p.od).chain(&p.dd) {
            let key = (i.min(j), i.max(j));
            if !ix.w.contains_key(&key) {
                let v = model.add_binary(format!("w#{}#{}", id(key.0), id(key.1)));
                model.tag(v, format!("requests {} and {} share a subline", id(key.0), id(key.1)));
                ix.w.insert(key, v);
            }
        }
    }
    for &r in &servable {
        let pw = prep.window(Action::pickup(r));
        let dw = prep.window(Action::dropoff(r));
        let p = model.add_continuous(format!("p#{}", id(r)), Some(rat(pw.earliest)), Some(rat(pw.latest)));
        let pb = model.add_continuous(format!("pbar#{}", id(r)), Some(rat(dw.earliest)), Some(rat(dw.latest)));
        model.tag(p, format!("pick-up time of request {}", id(r)));
        model.tag(pb, format!("drop-off time of request {}", id(r)));
        ix.pickup.insert(r, p);
        ix.dropoff.insert(r, pb);
    }

    // Objective: accepted requests, direct travel credited, driving and turns charged.
    let w = &inst.weights;
    let mut objective: Vec<(BigRational, VarId)> = Vec::new();
    for (&(r, _, _), &a) in &ix.assign {
        objective.push((rat(w.w_accept + w.w_dist * Rat::from_integer(prep.direct(r))), a));
    }
    for (&(i, j, _, _), &x) in &ix.x {
        let t = if i == j { t_turn } else { inst.matrix.travel(i, j) };
        if t != 0 {
            objective.push((-rat(w.w_dist * Rat::from_integer(t)), x));
        }
    }
    if t_turn != 0 {
        for &u in &ix.descending_start {
            objective.push((rat(w.w_dist * Rat::from_integer(t_turn)), u));
        }
    }
    model.set_objective(objective);

    let x = |i: Stop, j: Stop, s: usize, k: usize| ix.x.get(&(i, j, s, k)).copied();
    for k in 1..=kappa {
        let z = ix.z[k - 1];
        let u = ix.descending_start[k - 1];
        let starts: Vec<_> = stops.iter().map(|&i| (one.clone(), ix.start[&(i, k)])).collect();
        model.add_constraint(format!("onestart#{k}"), starts.clone(), Sense::Le, int(1));
        let mut ends: Vec<_> = ix.end.iter().filter(|(key, _)| key.2 == k).map(|(_, &v)| (one.clone(), v)).collect();
        ends.extend(starts.iter().map(|(_, v)| (minus.clone(), *v)));
        model.add_constraint(format!("ends#{k}"), ends, Sense::Eq, int(0));
        let mut used = vec![(one.clone(), z)];
        used.extend(starts.iter().map(|(_, v)| (minus.clone(), *v)));
        model.add_constraint(format!("used#{k}"), used, Sense::Eq, int(0));
        model.add_constraint(format!("first#{k}"), vec![(one.clone(), ix.active[&(1, k)]), (minus.clone(), z)], Sense::Eq, int(0));

        for s in 1..=sigma {
            let g = ix.active[&(s, k)];
            if s < sigma {
                let g_next = ix.active[&(s + 1, k)];
                model.add_constraint(format!("chain#{s}#{k}"), vec![(one.clone(), g), (minus.clone(), g_next)], Sense::Ge, int(0));
                let mut t: Vec<_> = stops.iter().map(|&i| (one.clone(), x(i, i, s, k).expect("turn var"))).collect();
                t.push((minus.clone(), g_next));
                model.add_constraint(format!("turns#{s}#{k}"), t, Sense::Eq, int(0));
                // the vehicle ends after subline s exactly when s is its last active subline
                let mut t: Vec<_> = stops.iter().map(|&i| (one.clone(), ix.end[&(i, s, k)])).collect();
                t.push((minus.clone(), g));
                t.push((one.clone(), g_next));
                model.add_constraint(format!("last#{s}#{k}"), t, Sense::Eq, int(0));
            } else {
                let mut t: Vec<_> = stops.iter().map(|&i| (one.clone(), ix.end[&(i, s, k)])).collect();
                t.push((minus.clone(), g));
                model.add_constraint(format!("last#{s}#{k}"), t, Sense::Eq, int(0));
            }
            for &i in &stops {
                let y = ix.y[&(i, s, k)];
                // inflow: start or previous turn, plus arcs from behind
                let mut t = vec![(one.clone(), y)];
                if s == 1 {
                    t.push((minus.clone(), ix.start[&(i, k)]));
                } else {
                    t.push((minus.clone(), x(i, i, s - 1, k).expect("turn var")));
                }
                for &j in &stops {
                    if let Some(v) = x(j, i, s, k).filter(|_| j != i) {
                        t.push((minus.clone(), v));
                    }
                }
                model.add_constraint(format!("in#{i}#{s}#{k}"), t, Sense::Eq, int(0));
                // outflow: turn, end, or arcs ahead
                let mut t = vec![(one.clone(), y), (minus.clone(), ix.end[&(i, s, k)])];
                for &j in &stops {
                    if let Some(v) = x(i, j, s, k) {
                        t.push((minus.clone(), v));
                    }
                }
                model.add_constraint(format!("out#{i}#{s}#{k}"), t, Sense::Eq, int(0));
                model.add_constraint(format!("ya#{i}#{s}#{k}"), vec![(one.clone(), g), (minus.clone(), y)], Sense::Ge, int(0));
                model.add_constraint(format!("zy#{i}#{s}#{k}"), vec![(one.clone(), z), (minus.clone(), y)], Sense::Ge, int(0));
                for &j in &stops {
                    if let Some(v) = x(i, j, s, k) {
                        model.add_constraint(format!("zx#{i}#{j}#{s}#{k}"), vec![(one.clone(), z), (minus.clone(), v)], Sense::Ge, int(0));
                    }
                }
                let (a, d) = (ix.arr[&(i, s, k)], ix.dep[&(i, s, k)]);
                model.add_constraint(format!("za#{i}#{s}#{k}"), vec![(m2.clone(), z), (minus.clone(), a)], Sense::Ge, int(0));
                model.add_constraint(format!("zd#{i}#{s}#{k}"), vec![(m2.clone(), z), (minus.clone(), d)], Sense::Ge, int(0));
                model.add_constraint(format!("dwell#{i}#{s}#{k}"), vec![(one.clone(), d), (minus.clone(), a)], Sense::Ge, int(0));
                for &j in &stops {
                    if j == i {
                        continue;
                    }
                    if let Some(v) = x(i, j, s, k) {
                        let t = inst.matrix.travel(i, j);
                        let terms = vec![(one.clone(), ix.arr[&(j, s, k)]), (minus.clone(), d), (int(-t), v)];
                        model.add_constraint(format!("drive#{i}#{j}#{s}#{k}"), terms, Sense::Ge, int(0));
                    }
                }
                if s > 1 {
                    let turn = x(i, i, s - 1, k).expect("turn var");
                    let mut t = vec![(one.clone(), a), (minus.clone(), ix.dep[&(i, s - 1, k)]), (int(-t_turn), turn)];
                    if s == 2 {
                        t.push((int(t_turn), u));
                    }
                    model.add_constraint(format!("turntime#{i}#{s}#{k}"), t, Sense::Ge, int(0));
                }
            }
            // segment loads
            if let Some(&last) = stops.last() {
                for &i in &stops[..stops.len() - 1] {
                    let (lo, hi) = (i, i + 1);
                    let covers = |r: usize| {
                        let q = &inst.requests[r];
                        let (a, b) = (q.origin.min(q.destination), q.origin.max(q.destination));
                        a <= lo && hi <= b
                    };
                    let t: Vec<_> = servable
                        .iter()
                        .filter(|&&r| covers(r))
                        .filter_map(|&r| ix.assign.get(&(r, s, k)).map(|&v| (int(inst.requests[r].load as i64), v)))
                        .collect();
                    if !t.is_empty() {
                        model.add_constraint(format!("cap#{lo}#{s}#{k}"), t, Sense::Le, int(q_max));
                    }
                }
                let _ = last;
            }
        }
        // degenerate first subline for a descending start
        model.add_constraint(format!("ustart#{k}"), vec![(one.clone(), ix.active[&(2.min(sigma), k)]), (minus.clone(), u)], Sense::Ge, int(0));
        if sigma == 1 {
            model.add_constraint(format!("unone#{k}"), vec![(one.clone(), u)], Sense::Le, int(0));
        }
        for &i in &stops {
            for &j in &stops {
                if let Some(v) = x(i, j, 1, k).filter(|_| i != j) {
                    model.add_constraint(format!("udrive#{i}#{j}#{k}"), vec![(one.clone(), v), (one.clone(), u)], Sense::Le, int(1));
                }
            }
        }
        for &r in &servable {
            if let Some(&a) = ix.assign.get(&(r, 1, k)) {
                model.add_constraint(format!("userve#{}#{k}", id(r)), vec![(one.clone(), a), (one.clone(), u)], Sense::Le, int(1));
            }
        }
        if k < kappa {
            // vehicle k starts no later on the line than vehicle k + 1
            for (pos, &i) in stops.iter().enumerate() {
                let mut t: Vec<_> = stops[..=pos].iter().map(|&j| (one.clone(), ix.start[&(j, k)])).collect();
                t.extend(stops[..=pos].iter().map(|&j| (minus.clone(), ix.start[&(j, k + 1)])));
                model.add_constraint(format!("sym#{i}#{k}"), t, Sense::Ge, int(0));
            }
        }
    }

    // Passengers.
    for &r in &servable {
        let q = &inst.requests[r];
        let (p, pb) = (ix.pickup[&r], ix.dropoff[&r]);
        let pw = prep.window(Action::pickup(r));
        let dw = prep.window(Action::dropoff(r));
        let b = q.service;
        let all: Vec<VarId> = ix.assign.iter().filter(|(key, _)| key.0 == r).map(|(_, &v)| v).collect();
        model.add_constraint(format!("once#{}", q.id), all.iter().map(|&v| (one.clone(), v)), Sense::Le, int(1));
        for (&(_, s, k), &a) in ix.assign.iter().filter(|(key, _)| key.0 == r) {
            let (yo, yd) = (ix.y[&(q.origin, s, k)], ix.y[&(q.destination, s, k)]);
            let tag = format!("{}#{s}#{k}", q.id);
            model.add_constraint(format!("visit#{tag}"), vec![(int(2), a), (minus.clone(), yo), (minus.clone(), yd)], Sense::Le, int(0));
            model.add_constraint(format!("zassign#{tag}"), vec![(one.clone(), ix.z[k - 1]), (minus.clone(), a)], Sense::Ge, int(0));
            let (ao, doo) = (ix.arr[&(q.origin, s, k)], ix.dep[&(q.origin, s, k)]);
            let (ad, dd) = (ix.arr[&(q.destination, s, k)], ix.dep[&(q.destination, s, k)]);
            // dep_o >= assign (e + b)
            model.add_constraint(format!("depearly#{tag}"), vec![(one.clone(), doo), (-rat(pw.earliest + Rat::from_integer(b)), a)], Sense::Ge, int(0));
            // arr_d <= l + M (1 - assign)
            let mm = (big_m.m2 - dw.latest).max(zero);
            model.add_constraint(format!("arrlate#{tag}"), vec![(one.clone(), ad), (rat(mm), a)], Sense::Le, rat(dw.latest + mm));
            // p >= arr_o - M (1 - assign)
            let mm = (big_m.m2 - pw.earliest).max(zero);
            model.add_constraint(format!("pick#{tag}"), vec![(one.clone(), p), (minus.clone(), ao), (-rat(mm), a)], Sense::Ge, -rat(mm));
            let mm = (big_m.m2 - dw.earliest).max(zero);
            model.add_constraint(format!("drop#{tag}"), vec![(one.clone(), pb), (minus.clone(), ad), (-rat(mm), a)], Sense::Ge, -rat(mm));
            // dep_o >= p + b - M (1 - assign)
            let mm = pw.latest + Rat::from_integer(b);
            model.add_constraint(format!("leavep#{tag}"), vec![(one.clone(), doo), (minus.clone(), p), (-rat(mm), a)], Sense::Ge, int(b) - rat(mm));
            let mm = dw.latest + Rat::from_integer(b);
            model.add_constraint(format!("leaved#{tag}"), vec![(one.clone(), dd), (minus.clone(), pb), (-rat(mm), a)], Sense::Ge, int(b) - rat(mm));
        }
        let cap = prep.max_ride(r);
        let slack = (dw.latest + Rat::from_integer(b) - pw.earliest - cap).max(zero);
        let mut t = vec![(one.clone(), pb), (minus.clone(), p)];
        t.extend(all.iter().map(|&v| (rat(slack), v)));
        model.add_constraint(format!("ride#{}", q.id), t, Sense::Le, rat(cap - Rat::from_integer(b) + slack));
    }
    for (&(a, b), &wv) in &ix.w {
        for (&(r, s, k), &va) in ix.assign.iter().filter(|(key, _)| key.0 == a) {
            let _ = r;
            if let Some(&vb) = ix.assign.get(&(b, s, k)) {
                let terms = vec![(one.clone(), wv), (minus.clone(), va), (minus.clone(), vb)];
                model.add_constraint(format!("share#{}#{}#{s}#{k}", id(a), id(b)), terms, Sense::Ge, int(-1));
            }
        }
        for r in [a, b] {
            let mut t = vec![(one.clone(), wv)];
            t.extend(ix.assign.iter().filter(|(key, _)| key.0 == r).map(|(_, &v)| (minus.clone(), v)));
            model.add_constraint(format!("wub#{}#{}#{}", id(a), id(b), id(r)), t, Sense::Le, int(0));
        }
    }
    // Same-stop order on a shared subline: `j` is served before `i`.
    let ordered = |model: &mut MilpModel, name: String, later: VarId, earlier: VarId, j: usize, later_e: Rat, earlier_l: Rat, i: usize| {
        let wv = ix.w[&(i.min(j), i.max(j))];
        let bj = prep.service(j);
        let mm = (earlier_l + Rat::from_integer(bj) - later_e).max(zero);
        // later >= earlier + b_j - M (1 - w)
        let terms = vec![(one.clone(), later), (minus.clone(), earlier), (-rat(mm), wv)];
        model.add_constraint(name, terms, Sense::Ge, int(bj) - rat(mm));
    };
    for (i, p) in prec.iter().enumerate() {
        if !prep.is_servable(i) {
            continue;
        }
        let pi = prep.window(Action::pickup(i));
        let di = prep.window(Action::dropoff(i));
        for &j in &p.oo {
            let lj = prep.window(Action::pickup(j)).latest;
            ordered(&mut model, format!("ordoo#{}#{}", id(i), id(j)), ix.pickup[&i], ix.pickup[&j], j, pi.earliest, lj, i);
        }
        for &j in &p.od {
            let lj = prep.window(Action::dropoff(j)).latest;
            ordered(&mut model, format!("ordod#{}#{}", id(i), id(j)), ix.pickup[&i], ix.dropoff[&j], j, pi.earliest, lj, i);
        }
        for &j in &p.dd {
            let lj = prep.window(Action::dropoff(j)).latest;
            ordered(&mut model, format!("orddd#{}#{}", id(i), id(j)), ix.dropoff[&i], ix.dropoff[&j], j, di.earliest, lj, i);
        }
    }
    SublineModel { model, index: ix, big_m }
}

pub fn build_subline(inst: &Instance) -> SublineModel {
    build_subline_model(inst, default_sigma(inst))
}

/// Action sequence per used vehicle: sublines in order, stops along each
/// subline, drop-offs before pick-ups at a stop.
pub fn subline_sequences(inst: &Instance, sm: &SublineModel, sol: &MilpSolution) -> Result<Vec<Vec<Action>>, DecodeError> {
    let prep = Prepared::new(inst);
    let ix = &sm.index;
    let mut seqs = Vec::new();
    for k in 1..=ix.kappa {
        let mut seq = Vec::new();
        for s in 1..=ix.sigma {
            let mut riders: Vec<usize> =
                ix.assign.iter().filter(|(key, v)| key.1 == s && key.2 == k && sol.is_one(**v)).map(|(key, _)| key.0).collect();
            if riders.is_empty() {
                continue;
            }
            riders.sort_unstable();
            let dir = subline_direction(s);
            let mut actions: Vec<Action> =
                riders.iter().flat_map(|&r| [Action::pickup(r), Action::dropoff(r)]).collect();
            let pos = |a: &Action| -> i64 {
                let st = prep.stop(*a) as i64;
                if dir == Direction::Ascending {
                    st
                } else {
                    -st
                }
            };
            actions.sort_by(|a, b| {
                pos(a)
                    .cmp(&pos(b))
                    .then(b.kind.cmp(&a.kind))
                    .then(prep.keys[a.request].cmp(&prep.keys[b.request]))
            });
            for r in &riders {
                let visits = |st: Stop| ix.y.get(&(st, s, k)).is_some_and(|&v| sol.is_one(v));
                let q = &inst.requests[*r];
                if !visits(q.origin) || !visits(q.destination) {
                    return Err(DecodeError(format!("subline {s} of vehicle {k} skips a stop of request {}", q.id)));
                }
            }
            seq.extend(actions);
        }
        if !seq.is_empty() {
            seqs.push(seq);
        }
    }
    Ok(seqs)
}

pub fn decode_subline(inst: &Instance, sm: &SublineModel, sol: &MilpSolution) -> Result<RoutePlan, DecodeError> {
    if !sol.has_solution() {
        return Ok(RoutePlan::empty(inst));
    }
    let seqs = subline_sequences(inst, sm, sol)?;
    let prep = Prepared::new(inst);
    plan_from_sequences(&prep, Mode::Lidarp, &seqs).map_err(|e| DecodeError(e.to_string()))
}
