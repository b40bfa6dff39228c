//! Event-based formulation.
//!
//! A node is an event: the last pick-up or drop-off a vehicle performed
//! together with the set of passengers aboard afterwards.  Routes are
//! circulations through a depot node.  In liDARP mode, events whose
//! passengers travel in different directions, or whose passengers could not
//! be aboard together given the stop order, are never generated.

use std::collections::HashMap;

use num_rational::BigRational;

use crate::instance::{Direction, Instance, Rat, Stop};
use crate::milp::{int, rat, MilpModel, MilpSolution, Sense, VarId};
use crate::route::{plan_from_sequences, Action, ActionKind, DecodeError, Mode, Prepared, RoutePlan};
use crate::timewin::TimeWindow;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventNode {
    /// `None` for the depot.
    pub last: Option<Action>,
    /// Request indices aboard after `last`, ascending.
    pub onboard: Vec<usize>,
    pub stop: Option<Stop>,
    /// Travel direction of the event's passengers (liDARP mode only).
    pub side: Option<Direction>,
    pub window: Option<TimeWindow>,
}

impl EventNode {
    pub fn is_depot(&self) -> bool {
        self.last.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventArc {
    pub from: usize,
    pub to: usize,
    /// Driving time including turns.
    pub travel: i64,
    pub turns: u32,
}

#[derive(Debug, Clone)]
pub struct EventGraph {
    pub mode: Mode,
    pub nodes: Vec<EventNode>,
    pub arcs: Vec<EventArc>,
    /// Nodes whose last action is the pick-up (resp. drop-off) of each request.
    pub pickup_nodes: Vec<Vec<usize>>,
    pub dropoff_nodes: Vec<Vec<usize>>,
}

pub const DEPOT: usize = 0;

/// `i` boards first and `j` boards while `i` is still aboard, judged by
/// earliest times alone.
fn can_overlap(prep: &Prepared, i: usize, j: usize) -> bool {
    let m = &prep.inst.matrix;
    let (ri, rj) = (&prep.inst.requests[i], &prep.inst.requests[j]);
    let (pi, pj) = (prep.window(Action::pickup(i)), prep.window(Action::pickup(j)));
    let di = prep.window(Action::dropoff(i));
    let reach_j = pi.earliest + Rat::from_integer(ri.service + m.travel(ri.origin, rj.origin));
    if reach_j > pj.latest {
        return false;
    }
    let board_j = reach_j.max(pj.earliest);
    board_j + Rat::from_integer(rj.service + m.travel(rj.origin, ri.destination)) <= di.latest
}

fn compatible(prep: &Prepared, i: usize, j: usize) -> bool {
    can_overlap(prep, i, j) || can_overlap(prep, j, i)
}

/// Whether `j` can be aboard when action `a` happens, by line order.
fn stop_order_ok(prep: &Prepared, a: Action, j: usize) -> bool {
    let r = a.request;
    let (qr, qj) = (&prep.inst.requests[r], &prep.inst.requests[j]);
    let dir = qr.direction();
    if qj.direction() != dir {
        return false;
    }
    // position along the direction of travel
    let pos = |s: Stop| -> i64 {
        match dir {
            Direction::Ascending => s as i64,
            Direction::Descending => -(s as i64),
        }
    };
    let (oj, dj) = (pos(qj.origin), pos(qj.destination));
    match a.kind {
        ActionKind::Pickup => {
            let or = pos(qr.origin);
            (oj < or || (oj == or && prep.keys[j] < prep.keys[r])) && or < dj
        }
        ActionKind::Dropoff => {
            let dr = pos(qr.destination);
            oj < dr && (dr < dj || (dr == dj && prep.keys[r] < prep.keys[j]))
        }
    }
}

/// All events of the instance, depot first, then in canonical order
/// (request, pick-up before drop-off, onboard sets lexicographic).
pub fn enumerate_events(inst: &Instance, mode: Mode) -> Vec<EventNode> {
    let prep = Prepared::new(inst);
    let q_max = inst.fleet.q_max;
    let mut nodes = vec![EventNode { last: None, onboard: Vec::new(), stop: None, side: None, window: None }];
    for r in 0..prep.m() {
        if !prep.is_servable(r) {
            continue;
        }
        for kind in [ActionKind::Pickup, ActionKind::Dropoff] {
            let a = Action { request: r, kind };
            let others: Vec<usize> = (0..prep.m())
                .filter(|&j| j != r && prep.is_servable(j))
                .filter(|&j| mode == Mode::Darp || stop_order_ok(&prep, a, j))
                .filter(|&j| match kind {
                    ActionKind::Pickup => can_overlap(&prep, j, r),
                    ActionKind::Dropoff => compatible(&prep, j, r),
                })
                .collect();
            let base_load = if kind == ActionKind::Pickup { inst.requests[r].load } else { 0 };
            let mut sets: Vec<Vec<usize>> = Vec::new();
            let budget = if kind == ActionKind::Pickup { q_max.saturating_sub(base_load) } else { q_max - inst.requests[r].load.min(q_max) };
            subsets(&prep, &others, 0, budget, &mut Vec::new(), &mut sets);
            for mut s in sets {
                if kind == ActionKind::Pickup {
                    s.push(r);
                    s.sort_unstable();
                }
                nodes.push(EventNode {
                    last: Some(a),
                    onboard: s,
                    stop: Some(prep.stop(a)),
                    side: (mode == Mode::Lidarp).then(|| prep.direction(r)),
                    window: Some(prep.window(a)),
                });
            }
        }
    }
    nodes
}

fn subsets(
    prep: &Prepared,
    cands: &[usize],
    from: usize,
    budget: u32,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    out.push(cur.clone());
    for k in from..cands.len() {
        let j = cands[k];
        let load = prep.inst.requests[j].load;
        if load > budget || !cur.iter().all(|&i| compatible(prep, i, j)) {
            continue;
        }
        cur.push(j);
        subsets(prep, cands, k + 1, budget - load, cur, out);
        cur.pop();
    }
}

pub fn build_event_graph(inst: &Instance, nodes: Vec<EventNode>, mode: Mode) -> EventGraph {
    let prep = Prepared::new(inst);
    let m = prep.m();
    let mut lookup: HashMap<(Action, &[usize]), usize> = HashMap::new();
    let mut pickup_nodes = vec![Vec::new(); m];
    let mut dropoff_nodes = vec![Vec::new(); m];
    for (i, n) in nodes.iter().enumerate() {
        if let Some(a) = n.last {
            lookup.insert((a, n.onboard.as_slice()), i);
            match a.kind {
                ActionKind::Pickup => pickup_nodes[a.request].push(i),
                ActionKind::Dropoff => dropoff_nodes[a.request].push(i),
            }
        }
    }
    let mut arcs = Vec::new();
    for (u, nu) in nodes.iter().enumerate() {
        let mut succ: Vec<(Action, Vec<usize>)> = Vec::new();
        for &r in &nu.onboard {
            succ.push((Action::dropoff(r), nu.onboard.iter().copied().filter(|&x| x != r).collect()));
        }
        for r in 0..m {
            if nu.onboard.contains(&r) || nu.last.is_some_and(|a| a.request == r) {
                continue;
            }
            let mut s = nu.onboard.clone();
            s.push(r);
            s.sort_unstable();
            succ.push((Action::pickup(r), s));
        }
        for (c, s) in succ {
            let Some(&v) = lookup.get(&(c, s.as_slice())) else { continue };
            match nu.last {
                None => arcs.push(EventArc { from: u, to: v, travel: 0, turns: 0 }),
                Some(a) => {
                    let Some(tr) = prep.transition(mode, a, c, nu.onboard.is_empty()) else { continue };
                    let travel = prep.transition_time(mode, tr);
                    let wu = nu.window.expect("event window");
                    let wv = nodes[v].window.expect("event window");
                    if wu.earliest + Rat::from_integer(prep.service(a.request) + travel) > wv.latest {
                        continue;
                    }
                    arcs.push(EventArc { from: u, to: v, travel, turns: tr.turns });
                }
            }
        }
        if nu.last.is_some_and(|a| a.kind == ActionKind::Dropoff) && nu.onboard.is_empty() {
            arcs.push(EventArc { from: u, to: DEPOT, travel: 0, turns: 0 });
        }
    }
    EventGraph { mode, nodes, arcs, pickup_nodes, dropoff_nodes }
}

#[derive(Debug, Clone)]
pub struct EventModel {
    pub graph: EventGraph,
    pub model: MilpModel,
    pub arc_vars: Vec<VarId>,
    pub time_vars: Vec<Option<VarId>>,
}

fn node_name(g: &EventGraph, inst: &Instance, v: usize) -> String {
    let n = &g.nodes[v];
    match n.last {
        None => "depot".into(),
        Some(a) => {
            let sign = if a.kind == ActionKind::Pickup { "+" } else { "-" };
            let on: Vec<String> = n.onboard.iter().map(|&r| inst.requests[r].id.to_string()).collect();
            format!("{}{}[{}]", inst.requests[a.request].id, sign, on.join(","))
        }
    }
}

/// The circulation MILP over an event graph.
pub fn build_event_model(inst: &Instance, graph: EventGraph) -> EventModel {
    let prep = Prepared::new(inst);
    let m = prep.m();
    let mut model = MilpModel::new();
    let arc_vars: Vec<VarId> = graph
        .arcs
        .iter()
        .map(|a| {
            let v = model.add_binary(format!("xa#{}#{}", a.from, a.to));
            model.tag(v, format!("arc {} -> {}", node_name(&graph, inst, a.from), node_name(&graph, inst, a.to)));
            v
        })
        .collect();
    let time_vars: Vec<Option<VarId>> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            n.window.map(|w| {
                let v = model.add_continuous(format!("B#{i}"), Some(rat(w.earliest)), Some(rat(w.latest)));
                model.tag(v, format!("time of {}", node_name(&graph, inst, i)));
                v
            })
        })
        .collect();

    let mut inflow: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    let mut outflow: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    for (k, a) in graph.arcs.iter().enumerate() {
        inflow[a.to].push(k);
        outflow[a.from].push(k);
    }
    let one = int(1);
    for v in 1..graph.nodes.len() {
        let terms = inflow[v]
            .iter()
            .map(|&k| (one.clone(), arc_vars[k]))
            .chain(outflow[v].iter().map(|&k| (int(-1), arc_vars[k])));
        model.add_constraint(format!("flow#{v}"), terms, Sense::Eq, int(0));
    }
    let into = |nodes: &[usize], coef: &BigRational| -> Vec<(BigRational, VarId)> {
        nodes.iter().flat_map(|&v| inflow[v].iter().map(|&k| (coef.clone(), arc_vars[k]))).collect()
    };
    for r in 0..m {
        if graph.pickup_nodes[r].is_empty() {
            continue;
        }
        let id = inst.requests[r].id;
        model.add_constraint(format!("once#{id}"), into(&graph.pickup_nodes[r], &one), Sense::Le, int(1));
        let mut t = into(&graph.pickup_nodes[r], &one);
        t.extend(into(&graph.dropoff_nodes[r], &int(-1)));
        model.add_constraint(format!("couple#{id}"), t, Sense::Eq, int(0));
    }
    model.add_constraint(
        "fleet",
        outflow[DEPOT].iter().map(|&k| (one.clone(), arc_vars[k])),
        Sense::Le,
        int(inst.fleet.kappa as i64),
    );

    for (k, a) in graph.arcs.iter().enumerate() {
        let (Some(bu), Some(bv)) = (time_vars[a.from], time_vars[a.to]) else { continue };
        let nu = &graph.nodes[a.from];
        let wu = nu.window.expect("event window");
        let wv = graph.nodes[a.to].window.expect("event window");
        let gap = Rat::from_integer(prep.service(nu.last.expect("not depot").request) + a.travel);
        let big_m = (wu.latest + gap - wv.earliest).max(Rat::from_integer(0));
        // B_v - B_u - M x >= gap - M
        model.add_constraint(
            format!("time#{}#{}", a.from, a.to),
            vec![(one.clone(), bv), (int(-1), bu), (-rat(big_m), arc_vars[k])],
            Sense::Ge,
            rat(gap - big_m),
        );
    }

    let w = &inst.weights;
    let mut objective: Vec<(BigRational, VarId)> = Vec::new();
    for r in 0..m {
        if graph.pickup_nodes[r].is_empty() {
            continue;
        }
        let id = inst.requests[r].id;
        let req = &inst.requests[r];
        let p = model.add_continuous(format!("p#{id}"), Some(int(0)), None);
        let pbar = model.add_continuous(format!("pbar#{id}"), Some(int(0)), None);
        model.tag(p, format!("pick-up time of request {id}"));
        model.tag(pbar, format!("drop-off time of request {id}"));
        let lp = prep.window(Action::pickup(r)).latest;
        for &v in &graph.pickup_nodes[r] {
            let b = time_vars[v].expect("event time");
            let e = graph.nodes[v].window.expect("event window").earliest;
            let big_m = (lp - e).max(Rat::from_integer(0));
            // p <= B_v + M (1 - y_v)
            let mut t = vec![(one.clone(), p), (int(-1), b)];
            t.extend(into(&[v], &rat(big_m)));
            model.add_constraint(format!("plink#{id}#{v}"), t, Sense::Le, rat(big_m));
        }
        for &v in &graph.dropoff_nodes[r] {
            let b = time_vars[v].expect("event time");
            let l = graph.nodes[v].window.expect("event window").latest;
            // pbar >= B_v - l_v (1 - y_v)
            let mut t = vec![(one.clone(), pbar), (int(-1), b)];
            t.extend(into(&[v], &(-rat(l))));
            model.add_constraint(format!("pbarlink#{id}#{v}"), t, Sense::Ge, -rat(l));
        }
        model.add_constraint(
            format!("ride#{id}"),
            vec![(one.clone(), pbar), (int(-1), p)],
            Sense::Le,
            rat(prep.max_ride(r) - Rat::from_integer(req.service)),
        );
        let gain = rat(w.w_accept + w.w_dist * Rat::from_integer(prep.direct(r)));
        objective.extend(into(&graph.pickup_nodes[r], &gain));
    }
    for (k, a) in graph.arcs.iter().enumerate() {
        if a.travel != 0 {
            objective.push((-rat(w.w_dist * Rat::from_integer(a.travel)), arc_vars[k]));
        }
    }
    model.set_objective(objective);
    EventModel { graph, model, arc_vars, time_vars }
}

/// Convenience: enumerate, connect and build in one go.
pub fn build_event(inst: &Instance, mode: Mode) -> EventModel {
    let nodes = enumerate_events(inst, mode);
    let graph = build_event_graph(inst, nodes, mode);
    build_event_model(inst, graph)
}

/// Action sequences of the circulation selected by `sol`.
pub fn event_sequences(em: &EventModel, sol: &MilpSolution) -> Result<Vec<Vec<Action>>, DecodeError> {
    let g = &em.graph;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); g.nodes.len()];
    for (k, a) in g.arcs.iter().enumerate() {
        if sol.is_one(em.arc_vars[k]) {
            succ[a.from].push(a.to);
        }
    }
    for (v, s) in succ.iter().enumerate().skip(1) {
        if s.len() > 1 {
            return Err(DecodeError(format!("event node {v} has {} successors", s.len())));
        }
    }
    let mut seen = vec![false; g.nodes.len()];
    let mut seqs = Vec::new();
    for &start in &succ[DEPOT] {
        let mut seq = Vec::new();
        let mut v = start;
        while v != DEPOT {
            if seen[v] {
                return Err(DecodeError(format!("event node {v} visited twice")));
            }
            seen[v] = true;
            seq.push(g.nodes[v].last.expect("non-depot node"));
            v = *succ[v].first().ok_or_else(|| DecodeError(format!("flow stops at event node {v}")))?;
        }
        seqs.push(seq);
    }
    let stray = succ.iter().enumerate().skip(1).any(|(v, s)| !s.is_empty() && !seen[v]);
    if stray {
        return Err(DecodeError("selected arcs form a cycle that avoids the depot".into()));
    }
    Ok(seqs)
}

pub fn decode_event(inst: &Instance, em: &EventModel, sol: &MilpSolution) -> Result<RoutePlan, DecodeError> {
    if !sol.has_solution() {
        return Ok(RoutePlan::empty(inst));
    }
    let seqs = event_sequences(em, sol)?;
    let prep = Prepared::new(inst);
    plan_from_sequences(&prep, em.graph.mode, &seqs).map_err(|e| DecodeError(e.to_string()))
}
