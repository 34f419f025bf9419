//! Problem semantics for k-server, k-taxi and chasing small sets.
//!
//! Every trace moves at most one server (or taxi) per step, and decisions are
//! recorded by index so that a trace replays bit-exactly.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::metric::{Ball, Norm, NormedSpace, Point};
use crate::net::{fmt_point, parse_point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    KServer,
    KTaxi,
    Chasing,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::KServer => "kserver",
            Problem::KTaxi => "ktaxi",
            Problem::Chasing => "chasing",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "kserver" => Ok(Problem::KServer),
            "ktaxi" => Ok(Problem::KTaxi),
            "chasing" | "chase" | "chasingsmallsets" => Ok(Problem::Chasing),
            other => Err(invalid(format!("unknown problem `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Server(Point),
    Taxi { from: Point, to: Point },
    SetChase(Vec<Point>),
}

impl Request {
    pub fn problem(&self) -> Problem {
        match self {
            Request::Server(_) => Problem::KServer,
            Request::Taxi { .. } => Problem::KTaxi,
            Request::SetChase(_) => Problem::Chasing,
        }
    }

    pub fn points(&self) -> Vec<&Point> {
        match self {
            Request::Server(p) => vec![p],
            Request::Taxi { from, to } => vec![from, to],
            Request::SetChase(ps) => ps.iter().collect(),
        }
    }

    /// Checks the payload shape and that every point lies in `ball`.
    pub fn validate(&self, ball: &Ball, k: usize) -> Result<()> {
        if let Request::SetChase(ps) = self {
            if ps.is_empty() || ps.len() > k {
                return Err(invalid(format!(
                    "chasing request must have between 1 and {k} points, got {}",
                    ps.len()
                )));
            }
        }
        self.points().into_iter().try_for_each(|p| ball.check_contains(p))
    }

    /// Text payload used in trace files.
    pub fn payload(&self) -> String {
        match self {
            Request::Server(p) => fmt_point(p),
            Request::Taxi { from, to } => format!("{}>{}", fmt_point(from), fmt_point(to)),
            Request::SetChase(ps) => ps.iter().map(|p| fmt_point(p)).collect::<Vec<_>>().join(";"),
        }
    }

    pub fn parse_payload(problem: Problem, s: &str, line: usize) -> Result<Self> {
        Ok(match problem {
            Problem::KServer => Request::Server(parse_point(s, line)?),
            Problem::KTaxi => {
                let (a, b) = s.split_once('>').ok_or_else(|| Error::Parse {
                    line,
                    msg: "taxi payload must be `a>b`".into(),
                })?;
                Request::Taxi {
                    from: parse_point(a, line)?,
                    to: parse_point(b, line)?,
                }
            }
            Problem::Chasing => Request::SetChase(
                s.split(';')
                    .map(|p| parse_point(p, line))
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

/// Server or taxi positions in id order; a single position for chasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub positions: Vec<Point>,
}

impl Configuration {
    pub fn new(positions: Vec<Point>) -> Self {
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn text(&self) -> String {
        self.positions.iter().map(|p| fmt_point(p)).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub movement: f64,
    pub detour: f64,
    pub moved: usize,
}

impl StepRecord {
    pub fn cost(&self) -> f64 {
        self.movement + self.detour
    }
}

/// Per-step costs with running totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostLedger {
    records: Vec<StepRecord>,
    movement: f64,
    detour: f64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, moved: usize, movement: f64, detour: f64) {
        debug_assert!(movement >= 0.0 && detour >= 0.0);
        self.records.push(StepRecord {
            step: self.records.len(),
            movement,
            detour,
            moved,
        });
        self.movement += movement;
        self.detour += detour;
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [StepRecord] {
        &mut self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_movement(&self) -> f64 {
        self.movement
    }

    pub fn total_detour(&self) -> f64 {
        self.detour
    }

    pub fn total(&self) -> f64 {
        self.movement + self.detour
    }

    /// Sum of step costs from step `from` on.
    pub fn total_from(&self, from: usize) -> f64 {
        self.records.iter().skip(from).map(StepRecord::cost).sum()
    }

    /// True iff the running totals equal the sums over the records.
    pub fn is_consistent(&self) -> bool {
        let m: f64 = self.records.iter().map(|r| r.movement).sum();
        let d: f64 = self.records.iter().map(|r| r.detour).sum();
        let tol = 1e-9 * (1.0 + m + d);
        self.records.iter().all(|r| r.movement >= 0.0 && r.detour >= 0.0)
            && (m - self.movement).abs() <= tol
            && (d - self.detour).abs() <= tol
    }
}

/// Moves server `id` to `r`; the cost is the distance moved.
pub fn serve_kserver(
    space: &NormedSpace,
    config: &Configuration,
    id: usize,
    r: &[f64],
) -> Result<(Configuration, f64)> {
    let from = config
        .positions
        .get(id)
        .ok_or_else(|| invalid(format!("server id {id} out of range (k = {})", config.len())))?;
    let cost = space.distance(from, r)?;
    let mut next = config.clone();
    next.positions[id] = r.to_vec();
    Ok((next, cost))
}

/// Empty run of taxi `id` to the pickup, then a free ride to the drop-off.
pub fn serve_ktaxi(
    space: &NormedSpace,
    config: &Configuration,
    id: usize,
    from: &[f64],
    to: &[f64],
) -> Result<(Configuration, f64)> {
    let at = config
        .positions
        .get(id)
        .ok_or_else(|| invalid(format!("taxi id {id} out of range (k = {})", config.len())))?;
    let cost = space.distance(at, from)?;
    space.check(to)?;
    let mut next = config.clone();
    next.positions[id] = to.to_vec();
    Ok((next, cost))
}

/// Moves the single server to `points[choice]`.
pub fn serve_chase(
    space: &NormedSpace,
    config: &Configuration,
    choice: usize,
    points: &[Point],
) -> Result<(Configuration, f64)> {
    let target = points.get(choice).ok_or_else(|| {
        invalid(format!("choice {choice} out of range for a {}-point request", points.len()))
    })?;
    let at = config
        .positions
        .first()
        .ok_or_else(|| invalid("chasing configuration is empty"))?;
    let cost = space.distance(at, target)?;
    Ok((Configuration::new(vec![target.clone()]), cost))
}

/// Serves one request with the given decision. Returns the new configuration,
/// the cost and the id of the moved server (0 for chasing).
pub fn serve(
    space: &NormedSpace,
    config: &Configuration,
    request: &Request,
    decision: usize,
) -> Result<(Configuration, f64, usize)> {
    match request {
        Request::Server(r) => serve_kserver(space, config, decision, r).map(|(c, x)| (c, x, decision)),
        Request::Taxi { from, to } => {
            serve_ktaxi(space, config, decision, from, to).map(|(c, x)| (c, x, decision))
        }
        Request::SetChase(ps) => serve_chase(space, config, decision, ps).map(|(c, x)| (c, x, 0)),
    }
}

/// Replays `decisions` from `initial` and builds the resulting ledger.
pub fn replay(
    space: &NormedSpace,
    initial: &Configuration,
    requests: &[Request],
    decisions: &[usize],
) -> Result<(Configuration, CostLedger)> {
    if requests.len() != decisions.len() {
        return Err(invalid("requests and decisions differ in length"));
    }
    let mut config = initial.clone();
    let mut ledger = CostLedger::new();
    for (req, &d) in requests.iter().zip(decisions) {
        let (next, cost, moved) = serve(space, &config, req, d)?;
        ledger.push(moved, cost, 0.0);
        config = next;
    }
    Ok((config, ledger))
}

/// True iff every request is of the right kind, is legally served by its
/// decision, and replaying reproduces the ledger exactly.
pub fn validate_trace(
    problem: Problem,
    space: &NormedSpace,
    initial: &Configuration,
    requests: &[Request],
    decisions: &[usize],
    ledger: &CostLedger,
) -> bool {
    if requests.len() != decisions.len() || ledger.len() != requests.len() {
        return false;
    }
    if requests.iter().any(|r| r.problem() != problem) {
        return false;
    }
    let Ok((_, replayed)) = replay(space, initial, requests, decisions) else {
        return false;
    };
    ledger.is_consistent()
        && replayed
            .records()
            .iter()
            .zip(ledger.records())
            .all(|(a, b)| a.moved == b.moved && a.cost() == b.cost())
}

/// A problem instance: geometry, initial configuration and the request sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub problem: Problem,
    pub k: usize,
    pub ball: Ball,
    pub initial: Configuration,
    pub requests: Vec<Request>,
}

impl Instance {
    pub fn new(
        problem: Problem,
        k: usize,
        ball: Ball,
        initial: Configuration,
        requests: Vec<Request>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        let want = if problem == Problem::Chasing { 1 } else { k };
        if initial.len() != want {
            return Err(invalid(format!(
                "initial configuration has {} positions, expected {want}",
                initial.len()
            )));
        }
        for p in &initial.positions {
            ball.check_contains(p)?;
        }
        for r in &requests {
            if r.problem() != problem {
                return Err(invalid(format!("{} request in a {problem} instance", r.problem())));
            }
            r.validate(&ball, k)?;
        }
        Ok(Self {
            problem,
            k,
            ball,
            initial,
            requests,
        })
    }

    pub fn space(&self) -> &NormedSpace {
        self.ball.space()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

/// A served instance together with its decisions, ledger and optional OPT section.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub instance: Instance,
    pub seed: u64,
    pub decisions: Vec<usize>,
    pub ledger: CostLedger,
    pub opt: Option<(f64, Vec<usize>)>,
}

impl Trace {
    /// Serves `instance` with `decisions`.
    pub fn record(instance: Instance, seed: u64, decisions: Vec<usize>) -> Result<Self> {
        let (_, ledger) = replay(instance.space(), &instance.initial, &instance.requests, &decisions)?;
        Ok(Self {
            instance,
            seed,
            decisions,
            ledger,
            opt: None,
        })
    }

    pub fn is_valid(&self) -> bool {
        let i = &self.instance;
        validate_trace(i.problem, i.space(), &i.initial, &i.requests, &self.decisions, &self.ledger)
    }

    pub fn to_text(&self) -> String {
        let i = &self.instance;
        let mut s = String::new();
        let _ = writeln!(s, "# trace");
        let _ = writeln!(s, "problem {}", i.problem);
        let _ = writeln!(s, "k {}", i.k);
        let _ = writeln!(s, "m {}", i.ball.dim());
        let _ = writeln!(s, "norm {}", i.space().norm());
        let _ = writeln!(s, "radius {}", i.ball.radius());
        let _ = writeln!(s, "center {}", fmt_point(i.ball.center()));
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "initial {}", i.initial.text());
        let _ = writeln!(s, "steps {}", i.requests.len());
        for ((req, d), rec) in i.requests.iter().zip(&self.decisions).zip(self.ledger.records()) {
            let _ = writeln!(s, "{}\t{}\t{}", req.payload(), d, rec.cost());
        }
        if let Some((cost, decisions)) = &self.opt {
            let _ = writeln!(s, "opt {cost}");
            let list: Vec<String> = decisions.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "opt_decisions {}", list.join(" "));
        }
        s
    }

    /// Parses a trace file. Step costs are taken from the file, not
    /// recomputed, so [`Trace::is_valid`] detects tampering.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let mut header = std::collections::HashMap::new();
        for (no, line) in lines.by_ref() {
            let (k, v) = line.split_once(' ').ok_or_else(|| Error::Parse {
                line: no,
                msg: format!("expected `key value`, got `{line}`"),
            })?;
            header.insert(k.to_string(), (no, v.trim().to_string()));
            if k == "steps" {
                break;
            }
        }
        let get = |k: &str| {
            header.get(k).cloned().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing header `{k}`"),
            })
        };
        let num = |k: &str| -> Result<f64> {
            let (no, v) = get(k)?;
            v.parse().map_err(|_| Error::Parse {
                line: no,
                msg: format!("bad number for `{k}`"),
            })
        };
        let problem: Problem = get("problem")?.1.parse()?;
        let k = num("k")? as usize;
        let m = num("m")? as usize;
        let norm: Norm = get("norm")?.1.parse()?;
        let radius = num("radius")?;
        let (cno, cval) = get("center")?;
        let center = parse_point(&cval, cno)?;
        let seed = get("seed")?.1.parse::<u64>().map_err(|_| Error::Parse {
            line: 0,
            msg: "bad seed".into(),
        })?;
        let (ino, ival) = get("initial")?;
        let initial = Configuration::new(
            ival.split(';')
                .map(|p| parse_point(p, ino))
                .collect::<Result<_>>()?,
        );
        let steps = num("steps")? as usize;
        let ball = Ball::new(NormedSpace::new(m, norm)?, center, radius)?;

        let mut requests = Vec::with_capacity(steps);
        let mut decisions = Vec::with_capacity(steps);
        let mut ledger = CostLedger::new();
        let mut opt_cost = None;
        let mut opt_decisions = None;
        for (no, line) in lines {
            if let Some(v) = line.strip_prefix("opt_decisions") {
                let ds = v
                    .split_whitespace()
                    .map(|d| d.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Parse {
                        line: no,
                        msg: "bad OPT decision".into(),
                    })?;
                opt_decisions = Some(ds);
                continue;
            }
            if let Some(v) = line.strip_prefix("opt ") {
                opt_cost = Some(v.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: no,
                    msg: "bad OPT cost".into(),
                })?);
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: no,
                    msg: "step line must be `payload<TAB>decision<TAB>cost`".into(),
                });
            }
            let req = Request::parse_payload(problem, fields[0], no)?;
            let d: usize = fields[1].parse().map_err(|_| Error::Parse {
                line: no,
                msg: "bad decision".into(),
            })?;
            let cost: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: no,
                msg: "bad cost".into(),
            })?;
            let moved = if problem == Problem::Chasing { 0 } else { d };
            ledger.push(moved, cost, 0.0);
            requests.push(req);
            decisions.push(d);
        }
        if requests.len() != steps {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header announces {steps} steps, found {}", requests.len()),
            });
        }
        let instance = Instance::new(problem, k, ball, initial, requests)?;
        let opt = match (opt_cost, opt_decisions) {
            (Some(c), Some(d)) => Some((c, d)),
            (None, None) => None,
            _ => {
                return Err(Error::Parse {
                    line: 0,
                    msg: "OPT section needs both `opt` and `opt_decisions`".into(),
                })
            }
        };
        Ok(Self {
            instance,
            seed,
            decisions,
            ledger,
            opt,
        })
    }
}
