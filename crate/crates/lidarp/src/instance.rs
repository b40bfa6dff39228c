//! Problem data for the line-based Dial-a-Ride problem: stops along a bus
//! line, a travel matrix, the fleet, service promises, objective weights and
//! the passenger requests.  Also hosts the LIDARP text format and the seeded
//! benchmark generator.

use std::fmt::{self, Write as _};

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Exact rational used for times and weights that may be fractional.
pub type Rat = Ratio<i64>;

/// A stop is its 1-based position along the line.
pub type Stop = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("invalid instance: {0}")]
    Invariant(String),
    #[error("a line needs at least two stops, got {0}")]
    DegenerateLine(usize),
}

fn invariant(msg: impl Into<String>) -> InstanceError {
    InstanceError::Invariant(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Ascending,
    Descending,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Ascending => Direction::Descending,
            Direction::Descending => Direction::Ascending,
        }
    }

    /// True when moving from `from` to `to` does not go against this direction.
    pub fn allows(self, from: Stop, to: Stop) -> bool {
        match self {
            Direction::Ascending => from <= to,
            Direction::Descending => from >= to,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowType {
    EarliestPickup,
    LatestDropoff,
}

/// Square matrix of integer travel minutes; `t[i][i]` holds the turn time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TravelMatrix {
    n: usize,
    t: Vec<i64>,
}

impl TravelMatrix {
    /// Builds a matrix from rows and checks every invariant.
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self, InstanceError> {
        let n = rows.len();
        if n < 2 {
            return Err(InstanceError::DegenerateLine(n));
        }
        let mut t = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(invariant(format!(
                    "matrix row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    n
                )));
            }
            t.extend_from_slice(row);
        }
        let m = TravelMatrix { n, t };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<(), InstanceError> {
        let n = self.n;
        let turn = self.get(1, 1);
        for i in 1..=n {
            for j in 1..=n {
                if self.get(i, j) < 0 {
                    return Err(invariant(format!("negative travel time t[{i}][{j}]")));
                }
            }
            if self.get(i, i) != turn {
                return Err(invariant(format!(
                    "diagonal entry t[{i}][{i}] = {} differs from turn time {turn}",
                    self.get(i, i)
                )));
            }
        }
        for i in 1..=n {
            for j in 1..=n {
                if i == j {
                    continue;
                }
                for k in 1..=n {
                    if k == i || k == j {
                        continue;
                    }
                    if self.get(i, j) > self.get(i, k) + self.get(k, j) {
                        return Err(invariant(format!(
                            "triangle inequality violated: t[{i}][{j}] = {} > t[{i}][{k}] + t[{k}][{j}] = {}",
                            self.get(i, j),
                            self.get(i, k) + self.get(k, j)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Raw entry, 1-based.  The diagonal is the turn time.
    pub fn get(&self, i: Stop, j: Stop) -> i64 {
        self.t[(i - 1) * self.n + (j - 1)]
    }

    /// Driving time between two stops; staying put costs nothing.
    pub fn travel(&self, i: Stop, j: Stop) -> i64 {
        if i == j {
            0
        } else {
            self.get(i, j)
        }
    }

    pub fn t_turn(&self) -> i64 {
        self.get(1, 1)
    }

    /// Copy of this matrix with a different turn time on the diagonal.
    pub fn with_turn_time(&self, t_turn: i64) -> TravelMatrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.t[i * self.n + i] = t_turn;
        }
        m
    }
}

/// `t[i][j] = spacing * |i - j|` with `t_turn` on the diagonal.
pub fn line_metric_matrix(n: usize, spacing: i64, t_turn: i64) -> TravelMatrix {
    let rows = (1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| {
                    if i == j {
                        t_turn
                    } else {
                        spacing * (i as i64 - j as i64).abs()
                    }
                })
                .collect()
        })
        .collect();
    TravelMatrix::from_rows(rows).expect("line metric matrices are valid")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub id: u32,
    pub origin: Stop,
    pub destination: Stop,
    pub load: u32,
    pub window_type: WindowType,
    pub anchor: i64,
    pub service: i64,
}

impl Request {
    pub fn direction(&self) -> Direction {
        direction(self)
    }
}

/// Ascending iff the origin comes before the destination on the line.
pub fn direction(r: &Request) -> Direction {
    if r.origin < r.destination {
        Direction::Ascending
    } else {
        Direction::Descending
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FleetSpec {
    pub kappa: usize,
    pub q_max: u32,
    pub t_turn: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceParams {
    pub alpha: Rat,
    pub beta: i64,
    pub horizon: i64,
}

impl Default for ServiceParams {
    fn default() -> Self {
        ServiceParams { alpha: Rat::from_integer(3), beta: 15, horizon: 480 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveWeights {
    pub w_accept: Rat,
    pub w_dist: Rat,
}

impl ObjectiveWeights {
    pub fn new(w_accept: i64, w_dist: i64) -> Self {
        ObjectiveWeights { w_accept: Rat::from_integer(w_accept), w_dist: Rat::from_integer(w_dist) }
    }
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights::new(10, 1)
    }
}

pub const DEFAULT_SERVICE_TIME: i64 = 3;
pub const DEFAULT_TURN_TIME: i64 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub matrix: TravelMatrix,
    pub fleet: FleetSpec,
    pub params: ServiceParams,
    pub weights: ObjectiveWeights,
    pub requests: Vec<Request>,
}

impl Instance {
    /// Assembles an instance and checks all cross-field invariants.
    pub fn new(
        matrix: TravelMatrix,
        fleet: FleetSpec,
        params: ServiceParams,
        weights: ObjectiveWeights,
        requests: Vec<Request>,
    ) -> Result<Self, InstanceError> {
        let inst = Instance { matrix, fleet, params, weights, requests };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n_stops(&self) -> usize {
        self.matrix.n()
    }

    pub fn stops(&self) -> impl Iterator<Item = Stop> {
        1..=self.matrix.n()
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let n = self.matrix.n();
        if n < 2 {
            return Err(InstanceError::DegenerateLine(n));
        }
        self.matrix.check()?;
        if self.fleet.kappa < 1 {
            return Err(invariant("fleet needs at least one vehicle"));
        }
        if self.fleet.q_max < 1 {
            return Err(invariant("vehicle capacity must be positive"));
        }
        if self.fleet.t_turn < 0 {
            return Err(invariant("turn time must be nonnegative"));
        }
        if self.matrix.t_turn() != self.fleet.t_turn {
            return Err(invariant(format!(
                "matrix diagonal {} does not match fleet turn time {}",
                self.matrix.t_turn(),
                self.fleet.t_turn
            )));
        }
        if self.params.alpha < Rat::from_integer(1) {
            return Err(invariant("excess factor alpha must be at least 1"));
        }
        if self.params.beta < 0 {
            return Err(invariant("maximum wait beta must be nonnegative"));
        }
        if self.params.horizon < 0 {
            return Err(invariant("horizon must be nonnegative"));
        }
        let w = &self.weights;
        if w.w_accept.is_negative() || w.w_dist.is_negative() {
            return Err(invariant("objective weights must be nonnegative"));
        }
        if w.w_accept.is_zero() && w.w_dist.is_zero() {
            return Err(invariant("objective weights cannot both be zero"));
        }
        let mut ids = std::collections::HashSet::new();
        for r in &self.requests {
            if !ids.insert(r.id) {
                return Err(invariant(format!("duplicate request id {}", r.id)));
            }
            for (what, s) in [("origin", r.origin), ("destination", r.destination)] {
                if s < 1 || s > n {
                    return Err(invariant(format!("request {}: {what} stop {s} is not in 1..{n}", r.id)));
                }
            }
            if r.origin == r.destination {
                return Err(invariant(format!("request {}: origin equals destination", r.id)));
            }
            if r.load < 1 {
                return Err(invariant(format!("request {}: load must be positive", r.id)));
            }
            if r.anchor < 0 || r.anchor > self.params.horizon {
                return Err(invariant(format!(
                    "request {}: anchor time {} outside [0, {}]",
                    r.id, r.anchor, self.params.horizon
                )));
            }
            if r.service < 0 {
                return Err(invariant(format!("request {}: negative service time", r.id)));
            }
        }
        Ok(())
    }

    /// Index of the request with the given id.
    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.requests.iter().position(|r| r.id == id)
    }

    /// Same instance with another turn time (diagonal and fleet updated together).
    pub fn with_turn_time(&self, t_turn: i64) -> Instance {
        let mut inst = self.clone();
        inst.matrix = self.matrix.with_turn_time(t_turn);
        inst.fleet.t_turn = t_turn;
        inst
    }

    pub fn with_weights(&self, weights: ObjectiveWeights) -> Instance {
        let mut inst = self.clone();
        inst.weights = weights;
        inst
    }
}

/// Renders a rational as a terminating decimal when possible, else `p/q`.
pub fn format_decimal(v: &Rat) -> String {
    let mut d = *v.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", v.numer(), v.denom());
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return v.numer().to_string();
    }
    let scale = 10i64.pow(digits);
    let scaled = v.numer() * (scale / v.denom());
    let neg = scaled < 0;
    let abs = scaled.abs();
    let int = abs / scale;
    let frac = abs % scale;
    let mut s = format!("{}{}.{:0width$}", if neg { "-" } else { "" }, int, frac, width = digits as usize);
    while s.ends_with('0') {
        s.pop();
    }
    s
}

/// Parses `12`, `-1.25` or `3/4` exactly.
pub fn parse_decimal(s: &str) -> Option<Rat> {
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.parse().ok()?;
        let q: i64 = q.parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Rat::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 15 {
        return None;
    }
    let scale = 10i64.checked_pow(frac.len() as u32)?;
    let int_v: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_v: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let num = int_v.checked_mul(scale)?.checked_add(frac_v)?;
    let v = Rat::new(num, scale);
    Some(if neg { -v } else { v })
}

struct Tokens<'a> {
    toks: Vec<(usize, usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut last_line = 1;
        for (ln, line) in text.lines().enumerate() {
            let content = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            };
            let mut offset = 0;
            for piece in content.split_whitespace() {
                let col = content[offset..].find(piece).unwrap() + offset;
                offset = col + piece.len();
                toks.push((ln + 1, col + 1, piece));
            }
            last_line = ln + 1;
        }
        Tokens { toks, pos: 0, last_line }
    }

    fn err_here(&self, msg: impl Into<String>) -> InstanceError {
        let (line, col) = match self.toks.get(self.pos) {
            Some(&(l, c, _)) => (l, c),
            None => (self.last_line, 1),
        };
        InstanceError::Syntax { line, col, msg: msg.into() }
    }

    fn next(&mut self, what: &str) -> Result<(usize, usize, &'a str), InstanceError> {
        match self.toks.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(self.err_here(format!("unexpected end of input, expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), InstanceError> {
        let (line, col, tok) = self.next(kw)?;
        if tok != kw {
            return Err(InstanceError::Syntax { line, col, msg: format!("expected `{kw}`, found `{tok}`") });
        }
        Ok(())
    }

    fn int(&mut self, what: &str) -> Result<i64, InstanceError> {
        let (line, col, tok) = self.next(what)?;
        tok.parse::<i64>().map_err(|_| InstanceError::Syntax {
            line,
            col,
            msg: format!("expected integer {what}, found `{tok}`"),
        })
    }

    fn decimal(&mut self, what: &str) -> Result<Rat, InstanceError> {
        let (line, col, tok) = self.next(what)?;
        parse_decimal(tok).ok_or_else(|| InstanceError::Syntax {
            line,
            col,
            msg: format!("expected number {what}, found `{tok}`"),
        })
    }

    fn count(&mut self, what: &str) -> Result<usize, InstanceError> {
        let (line, col, tok) = self.next(what)?;
        tok.parse::<usize>().map_err(|_| InstanceError::Syntax {
            line,
            col,
            msg: format!("expected nonnegative integer {what}, found `{tok}`"),
        })
    }
}

/// Reads an instance in the LIDARP text format and validates it.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut tk = Tokens::new(text);
    tk.keyword("LIDARP")?;
    let (line, col, version) = tk.next("format version")?;
    if version != "1" {
        return Err(InstanceError::Syntax { line, col, msg: format!("unsupported format version `{version}`") });
    }
    tk.keyword("STOPS")?;
    let n = tk.count("stop count")?;
    if n < 2 {
        return Err(InstanceError::DegenerateLine(n));
    }
    tk.keyword("MATRIX")?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            row.push(tk.int("travel time")?);
        }
        rows.push(row);
    }
    tk.keyword("FLEET")?;
    let kappa = tk.count("vehicle count")?;
    let q_max = tk.count("capacity")? as u32;
    let t_turn = tk.int("turn time")?;
    tk.keyword("PARAMS")?;
    let alpha = tk.decimal("alpha")?;
    let beta = tk.int("beta")?;
    let horizon = tk.int("horizon")?;
    let w_accept = tk.decimal("w_accept")?;
    let w_dist = tk.decimal("w_dist")?;
    tk.keyword("REQUESTS")?;
    let m = tk.count("request count")?;
    let mut requests = Vec::with_capacity(m);
    for _ in 0..m {
        let id = tk.count("request id")? as u32;
        let origin = tk.count("origin")?;
        let destination = tk.count("destination")?;
        let load = tk.count("load")? as u32;
        let (line, col, wt) = tk.next("window type")?;
        let window_type = match wt {
            "E" => WindowType::EarliestPickup,
            "L" => WindowType::LatestDropoff,
            other => {
                return Err(InstanceError::Syntax { line, col, msg: format!("window type must be E or L, found `{other}`") })
            }
        };
        let anchor = tk.int("anchor time")?;
        let service = tk.int("service time")?;
        requests.push(Request { id, origin, destination, load, window_type, anchor, service });
    }
    if tk.pos < tk.toks.len() {
        return Err(tk.err_here("trailing content after the request list"));
    }
    let matrix = TravelMatrix::from_rows(rows)?;
    Instance::new(
        matrix,
        FleetSpec { kappa, q_max, t_turn },
        ServiceParams { alpha, beta, horizon },
        ObjectiveWeights { w_accept, w_dist },
        requests,
    )
}

/// Canonical text form; `parse_instance(&format_instance(i)) == i`.
pub fn format_instance(inst: &Instance) -> String {
    let mut s = String::new();
    let n = inst.n_stops();
    writeln!(s, "LIDARP 1").unwrap();
    writeln!(s, "STOPS {n}").unwrap();
    writeln!(s, "MATRIX").unwrap();
    for i in 1..=n {
        let row: Vec<String> = (1..=n).map(|j| inst.matrix.get(i, j).to_string()).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    writeln!(s, "FLEET {} {} {}", inst.fleet.kappa, inst.fleet.q_max, inst.fleet.t_turn).unwrap();
    writeln!(
        s,
        "PARAMS {} {} {} {} {}",
        format_decimal(&inst.params.alpha),
        inst.params.beta,
        inst.params.horizon,
        format_decimal(&inst.weights.w_accept),
        format_decimal(&inst.weights.w_dist)
    )
    .unwrap();
    writeln!(s, "REQUESTS {}", inst.requests.len()).unwrap();
    for r in &inst.requests {
        let wt = match r.window_type {
            WindowType::EarliestPickup => "E",
            WindowType::LatestDropoff => "L",
        };
        writeln!(s, "{} {} {} {} {} {} {}", r.id, r.origin, r.destination, r.load, wt, r.anchor, r.service).unwrap();
    }
    s
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_instance(self))
    }
}

/// Seeded synthetic instance: uniform origin/destination pairs, alternating
/// window types (earliest pick-up first), uniform integer anchors.
#[allow(clippy::too_many_arguments)]
pub fn generate_instance(
    seed: u64,
    n_stops: usize,
    m_requests: usize,
    kappa: usize,
    q_max: u32,
    matrix: &TravelMatrix,
    params: &ServiceParams,
    weights: &ObjectiveWeights,
) -> Result<Instance, InstanceError> {
    if n_stops < 2 {
        return Err(InstanceError::DegenerateLine(n_stops));
    }
    if matrix.n() != n_stops {
        return Err(invariant(format!("matrix has {} stops, expected {n_stops}", matrix.n())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut requests = Vec::with_capacity(m_requests);
    for i in 0..m_requests {
        let (o, d) = loop {
            let o = rng.gen_range(1..=n_stops);
            let d = rng.gen_range(1..=n_stops);
            if o != d {
                break (o, d);
            }
        };
        let window_type = if i % 2 == 0 { WindowType::EarliestPickup } else { WindowType::LatestDropoff };
        let anchor = rng.gen_range(0..=params.horizon);
        requests.push(Request {
            id: i as u32 + 1,
            origin: o,
            destination: d,
            load: 1,
            window_type,
            anchor,
            service: DEFAULT_SERVICE_TIME,
        });
    }
    Instance::new(
        matrix.clone(),
        FleetSpec { kappa, q_max, t_turn: matrix.t_turn() },
        params.clone(),
        weights.clone(),
        requests,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Instance {
        let text = "LIDARP 1\nSTOPS 2\nMATRIX\n3 4\n4 3\nFLEET 1 1 3\nPARAMS 3 15 480 10 1\nREQUESTS 1\n1 1 2 1 E 0 3\n";
        parse_instance(text).unwrap()
    }

    #[test]
    fn smallest_instance_parses() {
        let inst = tiny();
        assert_eq!(inst.requests.len(), 1);
        assert_eq!(inst.requests[0].direction(), Direction::Ascending);
    }

    #[test]
    fn triangle_violation_is_rejected() {
        let text = "LIDARP 1\nSTOPS 3\nMATRIX\n0 1 100\n1 0 1\n100 1 0\nFLEET 1 1 0\nPARAMS 3 15 480 10 1\nREQUESTS 0\n";
        match parse_instance(text) {
            Err(InstanceError::Invariant(msg)) => assert!(msg.contains("triangle"), "{msg}"),
            other => panic!("expected triangle error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = "LIDARP 1\nSTOPS 2\nMATRIX\n3 x\n4 3\n";
        match parse_instance(text) {
            Err(InstanceError::Syntax { line, col, .. }) => assert_eq!((line, col), (4, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_requests_format() {
        let mut inst = tiny();
        inst.requests.clear();
        let text = format_instance(&inst);
        assert!(text.ends_with("REQUESTS 0\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn comments_are_ignored() {
        let text = "# header\nLIDARP 1\nSTOPS 2 # two stops\nMATRIX\n3 4\n4 3\nFLEET 1 1 3\nPARAMS 1.5 15 480 10 0.25\nREQUESTS 1\n1 2 1 1 L 30 3\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.params.alpha, Rat::new(3, 2));
        assert_eq!(inst.weights.w_dist, Rat::new(1, 4));
        assert_eq!(inst.requests[0].direction(), Direction::Descending);
    }

    #[test]
    fn decimals_round_trip() {
        for s in ["0", "3", "1.5", "0.25", "-2.125", "1/3"] {
            let v = parse_decimal(s).unwrap();
            assert_eq!(parse_decimal(&format_decimal(&v)).unwrap(), v);
        }
        assert_eq!(format_decimal(&Rat::new(21, 2)), "10.5");
    }

    #[test]
    fn generator_rejects_single_stop() {
        let m = line_metric_matrix(2, 1, 3);
        let err = generate_instance(1, 1, 3, 1, 1, &m, &ServiceParams::default(), &ObjectiveWeights::default());
        assert_eq!(err.unwrap_err(), InstanceError::DegenerateLine(1));
    }

    #[test]
    fn single_request_is_earliest_pickup() {
        let m = line_metric_matrix(5, 2, 3);
        let inst = generate_instance(3, 5, 1, 1, 1, &m, &ServiceParams::default(), &ObjectiveWeights::default()).unwrap();
        assert_eq!(inst.requests.len(), 1);
        assert_eq!(inst.requests[0].window_type, WindowType::EarliestPickup);
    }
}
