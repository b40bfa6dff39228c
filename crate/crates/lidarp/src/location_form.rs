//! Location-based formulation over the liDARP graph.
//!
//! Every stop exists twice, once per direction of travel.  A request owns a
//! pick-up and a drop-off node on its own side and two turn nodes on the
//! opposite side: the start-turn node (the vehicle stands at the origin
//! facing away and turns before boarding) and the end-turn node (the vehicle
//! turns right after the drop-off).  Three-index arc variables carry the
//! vehicle; service times and loads are shared across vehicles.

use num_rational::BigRational;

use crate::instance::{Direction, Instance, Rat, Stop};
use crate::milp::{int, rat, MilpModel, MilpSolution, Sense, VarId};
use crate::route::{plan_from_sequences, Action, ActionKind, DecodeError, Mode, Prepared, RoutePlan};
use crate::timewin::TimeWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocKind {
    Pickup,
    Dropoff,
    StartTurn,
    EndTurn,
    StartDepot,
    EndDepot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocNode {
    pub kind: LocKind,
    /// Request index; `None` for depots.
    pub request: Option<usize>,
    pub stop: Option<Stop>,
    pub side: Option<Direction>,
    /// `None` for nodes of requests that cannot be scheduled.
    pub window: Option<TimeWindow>,
    pub service: i64,
    pub load: i64,
}

/// Membership bit for edge set `E<i>`, `i` in 1..=10.
pub const fn edge_set(i: u32) -> u16 {
    1 << (i - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocArc {
    pub from: usize,
    pub to: usize,
    pub travel: i64,
    pub member_sets: u16,
}

impl LocArc {
    pub fn in_set(&self, i: u32) -> bool {
        self.member_sets & edge_set(i) != 0
    }

    pub fn is_turn(&self) -> bool {
        self.in_set(4) || self.in_set(5)
    }
}

#[derive(Debug, Clone)]
pub struct LocationGraph {
    pub nodes: Vec<LocNode>,
    pub arcs: Vec<LocArc>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    /// Indices of the arcs in `E4 ∪ E5`.
    pub turn_arcs: Vec<usize>,
    /// Latest time any vehicle may be busy; upper end of the depot windows.
    pub horizon: Rat,
}

pub const START_DEPOT: usize = 0;
pub const END_DEPOT: usize = 1;

impl LocationGraph {
    pub fn pickup(r: usize) -> usize {
        2 + 4 * r
    }

    pub fn dropoff(r: usize) -> usize {
        3 + 4 * r
    }

    pub fn start_turn(r: usize) -> usize {
        4 + 4 * r
    }

    pub fn end_turn(r: usize) -> usize {
        5 + 4 * r
    }

    pub fn arc(&self, from: usize, to: usize) -> Option<usize> {
        self.out_arcs[from].iter().copied().find(|&k| self.arcs[k].to == to)
    }

    fn is_request_node(&self, v: usize) -> bool {
        self.nodes[v].request.is_some()
    }
}

fn precedes(side: Direction, a: Stop, b: Stop) -> bool {
    match side {
        Direction::Ascending => a < b,
        Direction::Descending => a > b,
    }
}

fn node_action(n: &LocNode) -> Option<Action> {
    let r = n.request?;
    match n.kind {
        LocKind::Pickup => Some(Action::pickup(r)),
        LocKind::Dropoff => Some(Action::dropoff(r)),
        _ => None,
    }
}

pub fn build_location_graph(inst: &Instance) -> LocationGraph {
    let prep = Prepared::new(inst);
    let t_turn = inst.fleet.t_turn;
    let zero = Rat::from_integer(0);
    let tt = Rat::from_integer(t_turn);

    let depot = |kind| LocNode { kind, request: None, stop: None, side: None, window: None, service: 0, load: 0 };
    let mut nodes = vec![depot(LocKind::StartDepot), depot(LocKind::EndDepot)];
    for (r, req) in inst.requests.iter().enumerate() {
        let dir = req.direction();
        let sched = prep.schedules[r].as_ref();
        let q = req.load as i64;
        let mk = |kind, stop, side, window: Option<TimeWindow>, service, load| LocNode {
            kind,
            request: Some(r),
            stop: Some(stop),
            side: Some(side),
            window,
            service,
            load,
        };
        nodes.push(mk(LocKind::Pickup, req.origin, dir, sched.map(|s| s.pickup), req.service, q));
        nodes.push(mk(LocKind::Dropoff, req.destination, dir, sched.map(|s| s.dropoff), req.service, -q));
        let start_turn = sched.map(|s| {
            TimeWindow::new((s.pickup.earliest - tt).max(zero), (s.pickup.latest - tt).max(zero))
        });
        let shift = Rat::from_integer(req.service + t_turn);
        let end_turn = sched.map(|s| TimeWindow::new(s.dropoff.earliest + shift, s.dropoff.latest + shift));
        nodes.push(mk(LocKind::StartTurn, req.origin, dir.opposite(), start_turn, 0, 0));
        nodes.push(mk(LocKind::EndTurn, req.destination, dir.opposite(), end_turn, 0, 0));
    }
    let horizon = nodes
        .iter()
        .filter_map(|n| n.window.map(|w| w.latest + Rat::from_integer(n.service)))
        .max()
        .unwrap_or(zero);
    nodes[START_DEPOT].window = Some(TimeWindow::new(zero, horizon));
    nodes[END_DEPOT].window = Some(TimeWindow::new(zero, horizon));

    let mut arcs: Vec<LocArc> = Vec::new();
    let mut add = |from: usize, to: usize, travel: i64, set: u32| {
        if let Some(a) = arcs.iter_mut().find(|a| a.from == from && a.to == to) {
            a.member_sets |= edge_set(set);
        } else {
            arcs.push(LocArc { from, to, travel, member_sets: edge_set(set) });
        }
    };
    let servable: Vec<usize> = (0..inst.requests.len()).filter(|&r| prep.is_servable(r)).collect();
    let fits = |from: usize, to: usize, travel: i64| {
        let (a, b) = (&nodes[from], &nodes[to]);
        let (wa, wb) = (a.window.expect("window"), b.window.expect("window"));
        wa.earliest + Rat::from_integer(a.service + travel) <= wb.latest
    };

    for &r in &servable {
        add(LocationGraph::pickup(r), LocationGraph::dropoff(r), prep.direct(r), 1);
    }
    let tails = |r| [LocationGraph::pickup(r), LocationGraph::dropoff(r), LocationGraph::end_turn(r)];
    let heads = |r| [LocationGraph::pickup(r), LocationGraph::dropoff(r), LocationGraph::start_turn(r)];
    for &i in &servable {
        for &j in &servable {
            if i == j {
                continue;
            }
            for v in tails(i) {
                for w in heads(j) {
                    let (nv, nw) = (&nodes[v], &nodes[w]);
                    let side = nv.side.expect("request node");
                    if nw.side != Some(side) {
                        continue;
                    }
                    let (sv, sw) = (nv.stop.expect("stop"), nw.stop.expect("stop"));
                    let asc = side == Direction::Ascending;
                    if precedes(side, sv, sw) {
                        let travel = inst.matrix.travel(sv, sw);
                        if fits(v, w, travel) {
                            add(v, w, travel, if asc { 2 } else { 3 });
                        }
                    } else if sv == sw {
                        let ordered = match (node_action(nv), node_action(nw)) {
                            (Some(a), Some(c)) => prep.same_stop_order_ok(a, c),
                            _ => true,
                        };
                        if ordered && fits(v, w, 0) {
                            add(v, w, 0, if asc { 6 } else { 7 });
                        }
                    }
                }
            }
        }
    }
    for &r in &servable {
        let (o, d) = (LocationGraph::pickup(r), LocationGraph::dropoff(r));
        let (so, sd) = (LocationGraph::start_turn(r), LocationGraph::end_turn(r));
        add(so, o, t_turn, 4);
        add(d, sd, t_turn, 5);
    }
    add(START_DEPOT, END_DEPOT, 0, 8);
    for &r in &servable {
        add(START_DEPOT, LocationGraph::pickup(r), 0, 9);
        add(START_DEPOT, LocationGraph::start_turn(r), 0, 9);
    }
    for &r in &servable {
        add(LocationGraph::dropoff(r), END_DEPOT, 0, 10);
        add(LocationGraph::end_turn(r), END_DEPOT, 0, 10);
    }

    let mut out_arcs = vec![Vec::new(); nodes.len()];
    let mut in_arcs = vec![Vec::new(); nodes.len()];
    let mut turn_arcs = Vec::new();
    for (k, a) in arcs.iter().enumerate() {
        out_arcs[a.from].push(k);
        in_arcs[a.to].push(k);
        if a.is_turn() {
            turn_arcs.push(k);
        }
    }
    LocationGraph { nodes, arcs, out_arcs, in_arcs, turn_arcs, horizon }
}

#[derive(Debug, Clone)]
pub struct LocationModel {
    pub graph: LocationGraph,
    pub model: MilpModel,
    /// `x[arc][k]`.
    pub x: Vec<Vec<VarId>>,
    pub kappa: usize,
}

fn nonneg(v: Rat) -> Rat {
    v.max(Rat::from_integer(0))
}

pub fn build_location_model(graph: LocationGraph, inst: &Instance) -> LocationModel {
    let prep = Prepared::new(inst);
    let kappa = inst.fleet.kappa;
    let q_max = inst.fleet.q_max as i64;
    let nodes = &graph.nodes;
    let arcs = &graph.arcs;
    let mut model = MilpModel::new();
    let one = int(1);
    let minus = int(-1);

    let x: Vec<Vec<VarId>> = arcs
        .iter()
        .map(|a| {
            (1..=kappa)
                .map(|k| {
                    let v = model.add_binary(format!("x#{}#{}#{k}", a.from, a.to));
                    model.tag(v, format!("vehicle {k} drives {} -> {}", a.from, a.to));
                    v
                })
                .collect()
        })
        .collect();
    let z: Vec<VarId> = (1..=kappa)
        .map(|k| {
            let v = model.add_binary(format!("z#{k}"));
            model.tag(v, format!("vehicle {k} used"));
            v
        })
        .collect();
    let horizon = rat(graph.horizon);
    let depot_b: Vec<(VarId, VarId)> = (1..=kappa)
        .map(|k| {
            let s = model.add_continuous(format!("Bs#{k}"), Some(int(0)), Some(horizon.clone()));
            let e = model.add_continuous(format!("Be#{k}"), Some(int(0)), Some(horizon.clone()));
            model.tag(s, format!("departure of vehicle {k}"));
            model.tag(e, format!("return of vehicle {k}"));
            (s, e)
        })
        .collect();
    let mut b: Vec<Option<VarId>> = vec![None; nodes.len()];
    let mut q: Vec<Option<VarId>> = vec![None; nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        if !graph.is_request_node(i) {
            continue;
        }
        let Some(w) = n.window else { continue };
        let bv = model.add_continuous(format!("B#{i}"), Some(rat(w.earliest)), Some(rat(w.latest)));
        let qv = model.add_continuous(format!("Q#{i}"), Some(int(0)), Some(int(q_max)));
        model.tag(bv, format!("service start at node {i}"));
        model.tag(qv, format!("load leaving node {i}"));
        b[i] = Some(bv);
        q[i] = Some(qv);
    }

    let all_k = |k_arc: usize| x[k_arc].iter().map(|&v| (one.clone(), v)).collect::<Vec<_>>();
    let outflow = |i: usize, k: usize, c: &BigRational| -> Vec<(BigRational, VarId)> {
        graph.out_arcs[i].iter().map(|&a| (c.clone(), x[a][k])).collect()
    };
    let servable: Vec<usize> = (0..inst.requests.len()).filter(|&r| prep.is_servable(r)).collect();

    let w = &inst.weights;
    let mut objective: Vec<(BigRational, VarId)> = Vec::new();
    for &r in &servable {
        let o = LocationGraph::pickup(r);
        let gain = rat(w.w_accept + w.w_dist * Rat::from_integer(prep.direct(r)));
        for k in 0..kappa {
            objective.extend(outflow(o, k, &gain));
        }
    }
    for (a, arc) in arcs.iter().enumerate() {
        if arc.travel != 0 {
            let cost = -rat(w.w_dist * Rat::from_integer(arc.travel));
            objective.extend(x[a].iter().map(|&v| (cost.clone(), v)));
        }
    }
    model.set_objective(objective);

    for &r in &servable {
        let (o, d) = (LocationGraph::pickup(r), LocationGraph::dropoff(r));
        let id = inst.requests[r].id;
        let served: Vec<_> = (0..kappa).flat_map(|k| outflow(o, k, &one)).collect();
        model.add_constraint(format!("once#{id}"), served, Sense::Le, int(1));
        for k in 0..kappa {
            let mut t = outflow(o, k, &one);
            t.extend(outflow(d, k, &minus));
            model.add_constraint(format!("pair#{id}#{}", k + 1), t, Sense::Eq, int(0));
        }
    }
    for k in 0..kappa {
        let kk = k + 1;
        model.add_constraint(format!("start#{kk}"), outflow(START_DEPOT, k, &one), Sense::Eq, int(1));
        let ends = graph.in_arcs[END_DEPOT].iter().map(|&a| (one.clone(), x[a][k]));
        model.add_constraint(format!("end#{kk}"), ends, Sense::Eq, int(1));
        for i in 2..nodes.len() {
            if graph.in_arcs[i].is_empty() && graph.out_arcs[i].is_empty() {
                continue;
            }
            let mut t: Vec<_> = graph.in_arcs[i].iter().map(|&a| (one.clone(), x[a][k])).collect();
            t.extend(outflow(i, k, &minus));
            model.add_constraint(format!("flow#{i}#{kk}"), t, Sense::Eq, int(0));
        }
        // 1 - (arcs inside N_R) <= M3 * x(start, end)
        let idle = graph.arc(START_DEPOT, END_DEPOT).expect("idle arc");
        let mut t: Vec<_> = arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| graph.is_request_node(a.from) && graph.is_request_node(a.to))
            .map(|(ai, _)| (one.clone(), x[ai][k]))
            .collect();
        t.push((int(arcs.len() as i64), x[idle][k]));
        model.add_constraint(format!("unused#{kk}"), t, Sense::Ge, int(1));
    }

    // Service-time propagation, linearized with per-arc big-M.
    let time_of = |i: usize, k: usize| -> VarId {
        match i {
            START_DEPOT => depot_b[k].0,
            END_DEPOT => depot_b[k].1,
            _ => b[i].expect("time variable"),
        }
    };
    for (ai, a) in arcs.iter().enumerate() {
        let (ni, nj) = (&nodes[a.from], &nodes[a.to]);
        let (wi, wj) = (ni.window.expect("window"), nj.window.expect("window"));
        let gap = Rat::from_integer(ni.service + a.travel);
        let big_m = nonneg(wi.latest + gap - wj.earliest);
        let depot_arc = !graph.is_request_node(a.from) || !graph.is_request_node(a.to);
        if depot_arc {
            for k in 0..kappa {
                let (bi, bj) = (time_of(a.from, k), time_of(a.to, k));
                let t = vec![(one.clone(), bj), (minus.clone(), bi), (-rat(big_m), x[ai][k])];
                model.add_constraint(format!("tdepot#{}#{}#{}", a.from, a.to, k + 1), t, Sense::Ge, rat(gap - big_m));
            }
        } else {
            let (bi, bj) = (time_of(a.from, 0), time_of(a.to, 0));
            let mut t = vec![(one.clone(), bj), (minus.clone(), bi)];
            t.extend(all_k(ai).into_iter().map(|(_, v)| (-rat(big_m), v)));
            model.add_constraint(format!("time#{}#{}", a.from, a.to), t, Sense::Ge, rat(gap - big_m));
        }
    }
    // Window tightening.
    for i in 2..nodes.len() {
        let Some(bi) = b[i] else { continue };
        let wi = nodes[i].window.expect("window");
        let mut lo = vec![(one.clone(), bi)];
        for &a in &graph.in_arcs[i] {
            let j = arcs[a].from;
            let wj = nodes[j].window.expect("window");
            let c = nonneg(wj.earliest - wi.earliest + Rat::from_integer(nodes[j].service + arcs[a].travel));
            if c != Rat::from_integer(0) {
                lo.extend(x[a].iter().map(|&v| (-rat(c), v)));
            }
        }
        if lo.len() > 1 {
            model.add_constraint(format!("early#{i}"), lo, Sense::Ge, rat(wi.earliest));
        }
        let mut hi = vec![(one.clone(), bi)];
        for &a in &graph.out_arcs[i] {
            let j = arcs[a].to;
            let wj = nodes[j].window.expect("window");
            let c = nonneg(wi.latest - wj.latest + Rat::from_integer(nodes[i].service + arcs[a].travel));
            if c != Rat::from_integer(0) {
                hi.extend(x[a].iter().map(|&v| (rat(c), v)));
            }
        }
        if hi.len() > 1 {
            model.add_constraint(format!("late#{i}"), hi, Sense::Le, rat(wi.latest));
        }
    }
    // Ride times, enforced for served requests only.
    for &r in &servable {
        let req = &inst.requests[r];
        let (o, d) = (LocationGraph::pickup(r), LocationGraph::dropoff(r));
        let cap = prep.max_ride(r);
        let direct = Rat::from_integer(prep.direct(r));
        let l = model.add_continuous(format!("L#{}", req.id), Some(rat(direct.min(cap))), Some(rat(cap)));
        model.tag(l, format!("ride time of request {}", req.id));
        let (wo, wd) = (nodes[o].window.expect("window"), nodes[d].window.expect("window"));
        let service = Rat::from_integer(req.service);
        let big_m = nonneg(wd.latest + service - wo.earliest - direct.min(cap));
        // L >= B_d + b - B_o - M (1 - served)
        let mut t = vec![(one.clone(), l), (minus.clone(), b[d].expect("time")), (one.clone(), b[o].expect("time"))];
        for k in 0..kappa {
            t.extend(outflow(o, k, &-rat(big_m)));
        }
        model.add_constraint(format!("ride#{}", req.id), t, Sense::Ge, rat(service - big_m));
    }
    // Loads.
    let big_q = |load: i64| int((q_max + load).max(0));
    for &a in &graph.out_arcs[START_DEPOT] {
        let j = arcs[a].to;
        let Some(qj) = q[j] else { continue };
        if nodes[j].load == 0 {
            continue;
        }
        for k in 0..kappa {
            let t = vec![(one.clone(), qj), (int(-nodes[j].load), x[a][k])];
            model.add_constraint(format!("qstart#{j}#{}", k + 1), t, Sense::Ge, int(0));
        }
    }
    for (ai, a) in arcs.iter().enumerate() {
        let (Some(qi), Some(qj)) = (q[a.from], q[a.to]) else { continue };
        let load = nodes[a.to].load;
        let m = big_q(load);
        // Q_j >= Q_i + q_j - M (1 - x)
        let mut t = vec![(one.clone(), qj), (minus.clone(), qi)];
        t.extend(x[ai].iter().map(|&v| (-m.clone(), v)));
        model.add_constraint(format!("load#{}#{}", a.from, a.to), t, Sense::Ge, int(load) - m);
    }
    for &a in &graph.in_arcs[END_DEPOT] {
        let i = arcs[a].from;
        let Some(qi) = q[i] else { continue };
        for k in 0..kappa {
            let t = vec![(one.clone(), qi), (int(q_max), x[a][k])];
            model.add_constraint(format!("qend#{i}#{}", k + 1), t, Sense::Le, int(q_max));
        }
    }
    for &a in &graph.turn_arcs {
        let i = arcs[a].from;
        let qi = q[i].expect("load variable");
        let mut hi = vec![(one.clone(), qi)];
        hi.extend(x[a].iter().map(|&v| (int(q_max), v)));
        model.add_constraint(format!("turnhi#{}#{}", i, arcs[a].to), hi, Sense::Le, int(q_max));
        let mut lo = vec![(one.clone(), qi)];
        lo.extend(x[a].iter().map(|&v| (int(-q_max), v)));
        model.add_constraint(format!("turnlo#{}#{}", i, arcs[a].to), lo, Sense::Ge, int(-q_max));
    }
    for i in 2..nodes.len() {
        let Some(qi) = q[i] else { continue };
        let mut t = vec![(one.clone(), qi)];
        for &a in &graph.out_arcs[i] {
            t.extend(x[a].iter().map(|&v| (int(-q_max), v)));
        }
        model.add_constraint(format!("qvisit#{i}"), t, Sense::Le, int(0));
    }
    // Vehicle use and symmetry.
    let h = nodes.len() as i64;
    let coef = BigRational::new(1.into(), (h * h).into());
    let idle = graph.arc(START_DEPOT, END_DEPOT).expect("idle arc");
    for k in 0..kappa {
        let kk = k + 1;
        let mut t = vec![(one.clone(), z[k])];
        for (ai, _) in arcs.iter().enumerate().filter(|&(ai, _)| ai != idle) {
            t.push((-coef.clone(), x[ai][k]));
        }
        model.add_constraint(format!("used#{kk}"), t, Sense::Ge, int(0));
        model.add_constraint(format!("idle#{kk}"), vec![(one.clone(), z[k]), (one.clone(), x[idle][k])], Sense::Le, int(1));
        if k + 1 < kappa {
            model.add_constraint(format!("sym#{kk}"), vec![(one.clone(), z[k]), (minus.clone(), z[k + 1])], Sense::Ge, int(0));
        }
    }
    LocationModel { graph, model, x, kappa }
}

pub fn build_location(inst: &Instance) -> LocationModel {
    build_location_model(build_location_graph(inst), inst)
}

/// Action sequence per used vehicle, turn nodes skipped.
pub fn location_sequences(lm: &LocationModel, sol: &MilpSolution) -> Result<Vec<Vec<Action>>, DecodeError> {
    let g = &lm.graph;
    let mut seqs = Vec::new();
    let mut seen = vec![false; g.nodes.len()];
    for k in 0..lm.kappa {
        let mut next: Vec<Option<usize>> = vec![None; g.nodes.len()];
        for (ai, a) in g.arcs.iter().enumerate() {
            if sol.is_one(lm.x[ai][k]) {
                if next[a.from].is_some() {
                    return Err(DecodeError(format!("node {} left twice by vehicle {}", a.from, k + 1)));
                }
                next[a.from] = Some(a.to);
            }
        }
        let mut seq = Vec::new();
        let mut v = next[START_DEPOT].ok_or_else(|| DecodeError(format!("vehicle {} never departs", k + 1)))?;
        while v != END_DEPOT {
            if seen[v] {
                return Err(DecodeError(format!("node {v} visited twice")));
            }
            seen[v] = true;
            if let Some(a) = node_action(&g.nodes[v]) {
                seq.push(a);
            }
            v = next[v].ok_or_else(|| DecodeError(format!("route of vehicle {} breaks at node {v}", k + 1)))?;
        }
        if !seq.is_empty() {
            seqs.push(seq);
        }
    }
    for (ai, a) in g.arcs.iter().enumerate() {
        if a.from >= 2 && !seen[a.from] && lm.x[ai].iter().any(|&v| sol.is_one(v)) {
            return Err(DecodeError(format!("arc {} -> {} lies on no route", a.from, a.to)));
        }
    }
    Ok(seqs)
}

pub fn decode_location(inst: &Instance, lm: &LocationModel, sol: &MilpSolution) -> Result<RoutePlan, DecodeError> {
    if !sol.has_solution() {
        return Ok(RoutePlan::empty(inst));
    }
    let seqs = location_sequences(lm, sol)?;
    let prep = Prepared::new(inst);
    let plan = plan_from_sequences(&prep, Mode::Lidarp, &seqs).map_err(|e| DecodeError(e.to_string()))?;
    let picked = seqs.iter().flatten().filter(|a| a.kind == ActionKind::Pickup).count();
    if picked != plan.accepted.len() {
        return Err(DecodeError("pick-ups and accepted requests disagree".into()));
    }
    Ok(plan)
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
    fn single_request_graph() {
        let g = build_location_graph(&inst(&[(2, 5, 0)]));
        assert_eq!(g.nodes.len(), 6);
        let (o, d, so, sd) = (2, 3, 4, 5);
        assert_eq!(g.nodes[so].side, Some(Direction::Descending));
        assert_eq!(g.nodes[sd].side, Some(Direction::Descending));
        let has = |f, t, set| g.arc(f, t).is_some_and(|a| g.arcs[a].in_set(set));
        assert!(has(o, d, 1));
        assert!(has(so, o, 4));
        assert!(has(d, sd, 5));
        assert!(has(START_DEPOT, END_DEPOT, 8));
        assert!(has(START_DEPOT, o, 9) && has(START_DEPOT, so, 9));
        assert!(has(d, END_DEPOT, 10) && has(sd, END_DEPOT, 10));
        assert_eq!(g.arcs.len(), 8);
        assert_eq!(g.arcs[g.arc(so, o).unwrap()].travel, 3);
    }

    #[test]
    fn opposite_sides_are_not_linked() {
        let g = build_location_graph(&inst(&[(2, 5, 0), (6, 1, 0)]));
        let (o1, o2) = (LocationGraph::pickup(0), LocationGraph::pickup(1));
        assert!(g.arc(o1, o2).is_none() && g.arc(o2, o1).is_none());
    }

    #[test]
    fn ordered_windows_prune_backward_arcs() {
        // request 2 only starts long after request 1 has to be done
        let g = build_location_graph(&inst(&[(1, 3, 0), (4, 6, 300)]));
        let (d1, o2) = (LocationGraph::dropoff(0), LocationGraph::pickup(1));
        assert!(g.arc(d1, o2).is_some());
        for v in [LocationGraph::pickup(1), LocationGraph::dropoff(1), LocationGraph::end_turn(1)] {
            for w in [LocationGraph::pickup(0), LocationGraph::dropoff(0), LocationGraph::start_turn(0)] {
                assert!(g.arc(v, w).is_none(), "{v} -> {w}");
            }
        }
    }
}
