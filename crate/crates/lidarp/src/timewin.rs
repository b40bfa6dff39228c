//! Pick-up and drop-off windows derived from a request's anchor time and the
//! service promises (maximum wait `beta`, excess factor `alpha`).

use thiserror::Error;

use crate::instance::{Instance, Rat, Request, ServiceParams, TravelMatrix, WindowType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub earliest: Rat,
    pub latest: Rat,
}

impl TimeWindow {
    pub fn new(earliest: Rat, latest: Rat) -> Self {
        TimeWindow { earliest, latest }
    }

    pub fn contains(&self, t: Rat) -> bool {
        self.earliest <= t && t <= self.latest
    }

    pub fn is_empty(&self) -> bool {
        self.earliest > self.latest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequestSchedule {
    pub pickup: TimeWindow,
    pub dropoff: TimeWindow,
    pub max_ride: Rat,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimeWinError {
    #[error("request {id}: latest drop-off {latest} is earlier than the direct travel time {direct}")]
    InfeasibleWindow { id: u32, latest: i64, direct: i64 },
}

/// `alpha * t(o, d)`, kept exact.
pub fn max_ride_time(r: &Request, matrix: &TravelMatrix, alpha: Rat) -> Rat {
    alpha * Rat::from_integer(matrix.travel(r.origin, r.destination))
}

pub fn derive_schedule(
    r: &Request,
    matrix: &TravelMatrix,
    params: &ServiceParams,
) -> Result<RequestSchedule, TimeWinError> {
    let direct = matrix.travel(r.origin, r.destination);
    let l_max = max_ride_time(r, matrix, params.alpha);
    let beta = Rat::from_integer(params.beta);
    let t = Rat::from_integer(direct);
    let zero = Rat::from_integer(0);
    let anchor = Rat::from_integer(r.anchor);
    let (pickup, dropoff) = match r.window_type {
        WindowType::EarliestPickup => (
            TimeWindow::new(anchor, anchor + beta),
            TimeWindow::new(anchor + t, anchor + beta + l_max),
        ),
        WindowType::LatestDropoff => {
            if r.anchor - direct < 0 {
                return Err(TimeWinError::InfeasibleWindow { id: r.id, latest: r.anchor, direct });
            }
            (
                TimeWindow::new((anchor - beta - l_max).max(zero), anchor - t),
                TimeWindow::new((anchor - beta).max(zero), anchor),
            )
        }
    };
    Ok(RequestSchedule { pickup, dropoff, max_ride: l_max })
}

/// Schedules for every request in instance order; `None` marks a request
/// whose windows cannot be derived (it can never be served).
pub fn derive_all(inst: &Instance) -> Vec<Option<RequestSchedule>> {
    inst.requests
        .iter()
        .map(|r| derive_schedule(r, &inst.matrix, &inst.params).ok())
        .collect()
}

/// The same-stop service order key: earlier pick-up window start first, then id.
pub fn service_key(r: &Request, sched: Option<&RequestSchedule>) -> (Rat, u32) {
    let e = sched.map(|s| s.pickup.earliest).unwrap_or_else(|| Rat::from_integer(r.anchor));
    (e, r.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{line_metric_matrix, Direction};

    fn req(wt: WindowType, anchor: i64, o: usize, d: usize) -> Request {
        Request { id: 1, origin: o, destination: d, load: 1, window_type: wt, anchor, service: 3 }
    }

    #[test]
    fn earliest_pickup_windows() {
        let m = line_metric_matrix(12, 1, 3);
        let s = derive_schedule(&req(WindowType::EarliestPickup, 100, 1, 11), &m, &ServiceParams::default()).unwrap();
        assert_eq!(s.pickup, TimeWindow::new(Rat::from_integer(100), Rat::from_integer(115)));
        assert_eq!(s.dropoff, TimeWindow::new(Rat::from_integer(110), Rat::from_integer(145)));
    }

    #[test]
    fn latest_dropoff_windows() {
        let m = line_metric_matrix(12, 1, 3);
        let s = derive_schedule(&req(WindowType::LatestDropoff, 50, 11, 1), &m, &ServiceParams::default()).unwrap();
        assert_eq!(req(WindowType::LatestDropoff, 50, 11, 1).direction(), Direction::Descending);
        assert_eq!(s.dropoff, TimeWindow::new(Rat::from_integer(35), Rat::from_integer(50)));
        assert_eq!(s.pickup, TimeWindow::new(Rat::from_integer(5), Rat::from_integer(40)));
    }

    #[test]
    fn latest_dropoff_before_direct_time_fails() {
        let m = line_metric_matrix(12, 1, 3);
        let e = derive_schedule(&req(WindowType::LatestDropoff, 5, 1, 11), &m, &ServiceParams::default());
        assert!(matches!(e, Err(TimeWinError::InfeasibleWindow { .. })));
    }

    #[test]
    fn fractional_alpha_is_exact() {
        let m = line_metric_matrix(8, 1, 3);
        let r = req(WindowType::EarliestPickup, 0, 1, 8);
        assert_eq!(max_ride_time(&r, &m, Rat::new(3, 2)), Rat::new(21, 2));
        assert_eq!(max_ride_time(&r, &m, Rat::from_integer(1)), Rat::from_integer(7));
    }
}
