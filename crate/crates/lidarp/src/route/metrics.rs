use std::collections::HashMap;
use std::fmt;

use super::RoutePlan;
use crate::instance::{format_decimal, Instance, Rat};

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionMetrics {
    pub accepted_count: usize,
    /// Direct travel of accepted requests minus total driving time (turns included).
    pub saved_distance: Rat,
    pub driven: Rat,
    /// Share of driving time with nobody aboard; 0 when the fleet never moves.
    pub empty_share: f64,
    /// Mean over accepted requests of in-vehicle travel divided by direct travel.
    pub mean_detour: f64,
    /// Mean of `drop-off + b - pick-up` over accepted requests.
    pub mean_ride: f64,
    pub direction_violation_count: usize,
    pub objective: Rat,
}

impl fmt::Display for SolutionMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accepted_count={}", self.accepted_count)?;
        writeln!(f, "saved_distance={}", format_decimal(&self.saved_distance))?;
        writeln!(f, "driven={}", format_decimal(&self.driven))?;
        writeln!(f, "empty_share={:.6}", self.empty_share)?;
        writeln!(f, "mean_detour={:.6}", self.mean_detour)?;
        writeln!(f, "mean_ride={:.6}", self.mean_ride)?;
        writeln!(f, "direction_violation_count={}", self.direction_violation_count)?;
        writeln!(f, "objective={}", format_decimal(&self.objective))
    }
}

fn to_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Metrics of a plan.  Driving time counts `t_turn` for every turn flag, so
/// plans without turn flags (classical mode) pay travel time only.
pub fn metrics(inst: &Instance, plan: &RoutePlan) -> SolutionMetrics {
    let index: HashMap<u32, usize> = inst.requests.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let m = inst.requests.len();
    let mut driven = 0i64;
    let mut empty = 0i64;
    let mut aboard_travel = vec![0i64; m];
    let mut moved_away = vec![false; m];
    let mut pickup: Vec<Option<Rat>> = vec![None; m];
    let mut rides: Vec<Rat> = Vec::new();
    for route in &plan.routes {
        let mut onboard: Vec<usize> = Vec::new();
        for (j, v) in route.iter().enumerate() {
            let mut t = v.arrival;
            for id in &v.alights {
                let Some(&r) = index.get(id) else { continue };
                if let Some(p) = pickup[r] {
                    rides.push(t + Rat::from_integer(inst.requests[r].service) - p);
                }
                onboard.retain(|&x| x != r);
                t += Rat::from_integer(inst.requests[r].service);
            }
            for id in &v.boards {
                let Some(&r) = index.get(id) else { continue };
                pickup[r] = Some(t);
                onboard.push(r);
                t += Rat::from_integer(inst.requests[r].service);
            }
            let Some(next) = route.get(j + 1) else { continue };
            let travel = inst.matrix.travel(v.stop, next.stop);
            let leg = travel + if v.turn_after { inst.fleet.t_turn } else { 0 };
            driven += leg;
            if onboard.is_empty() {
                empty += leg;
            }
            for &r in &onboard {
                aboard_travel[r] += travel;
                let dir = inst.requests[r].direction();
                if v.stop != next.stop && !dir.allows(v.stop, next.stop) {
                    moved_away[r] = true;
                }
            }
        }
    }
    let accepted: Vec<usize> = plan.accepted.iter().filter_map(|id| index.get(id).copied()).collect();
    let direct_sum: i64 = accepted
        .iter()
        .map(|&r| inst.matrix.travel(inst.requests[r].origin, inst.requests[r].destination))
        .sum();
    let saved = Rat::from_integer(direct_sum - driven);
    let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let detours: Vec<f64> = accepted
        .iter()
        .map(|&r| {
            let q = &inst.requests[r];
            aboard_travel[r] as f64 / inst.matrix.travel(q.origin, q.destination) as f64
        })
        .collect();
    let rides: Vec<f64> = rides.into_iter().map(to_f64).collect();
    let w = &inst.weights;
    SolutionMetrics {
        accepted_count: accepted.len(),
        saved_distance: saved,
        driven: Rat::from_integer(driven),
        empty_share: if driven > 0 { empty as f64 / driven as f64 } else { 0.0 },
        mean_detour: mean(&detours),
        mean_ride: mean(&rides),
        direction_violation_count: accepted.iter().filter(|&&r| moved_away[r]).count(),
        objective: w.w_accept * Rat::from_integer(accepted.len() as i64) + w.w_dist * saved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{line_metric_matrix, FleetSpec, ObjectiveWeights, Request, ServiceParams, WindowType};
    use crate::route::{plan_from_sequences, Action, Mode, Prepared};

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
            FleetSpec { kappa: 1, q_max: 3, t_turn: 3 },
            ServiceParams::default(),
            ObjectiveWeights::default(),
            vec![r(1, 2, 5, 0), r(2, 7, 3, 60)],
        )
        .unwrap()
    }

    #[test]
    fn empty_plan() {
        let i = inst();
        let m = metrics(&i, &RoutePlan::empty(&i));
        assert_eq!((m.accepted_count, m.saved_distance, m.objective), (0, Rat::from_integer(0), Rat::from_integer(0)));
    }

    #[test]
    fn direct_service_then_deadhead() {
        let i = inst();
        let p = Prepared::new(&i);
        let seq = vec![Action::pickup(0), Action::dropoff(0), Action::pickup(1), Action::dropoff(1)];
        let plan = plan_from_sequences(&p, Mode::Lidarp, &[seq]).unwrap();
        let m = metrics(&i, &plan);
        // legs: 2->5 (9, loaded), 5->7 (6, empty), turn at 7 (3, empty), 7->3 (12, loaded)
        assert_eq!(m.driven, Rat::from_integer(30));
        assert_eq!(m.saved_distance, Rat::from_integer(9 + 12 - 30));
        assert!((m.empty_share - 9.0 / 30.0).abs() < 1e-12);
        assert_eq!(m.mean_detour, 1.0);
        assert_eq!(m.direction_violation_count, 0);
        assert_eq!(m.objective, Rat::from_integer(20 - 9));
    }
}
