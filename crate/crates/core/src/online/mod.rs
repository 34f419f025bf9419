//! Online algorithms: finite-metric algorithms running on net points, the
//! projection wrapper that lifts them to the continuous ball, and the
//! ensemble used when σ is not known.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::combiner::CombinerLogEntry;
use crate::error::{Error, Result};
use crate::net::Net;
use crate::problems::{Configuration, CostLedger, Problem, Request};

pub mod ensemble;
pub mod greedy;
pub mod marking;
pub mod wfa;
pub mod wrapper;

pub use ensemble::{build_sigma_ensemble, sigma_grid, Ensemble, SigmaMode};
pub use greedy::{DirectGreedy, FiniteGreedy};
pub use marking::Marking;
pub use wfa::{WfaMts, WorkFunction};
pub use wrapper::ProjectionWrapper;

/// A request whose points are net point ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetRequest {
    Server(usize),
    Taxi(usize, usize),
    Chase(Vec<usize>),
}

/// Decision and movement cost of one finite step. For chasing the decision
/// indexes into the request set; otherwise it is the moved server id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub decision: usize,
    pub cost: f64,
}

/// An online algorithm whose servers live on the points of a net.
pub trait FiniteOnlineAlgorithm: Send {
    fn name(&self) -> &str;
    fn problem(&self) -> Problem;
    fn net(&self) -> &Arc<Net>;
    fn step(&mut self, request: &NetRequest) -> Result<Step>;
    /// Net point ids in server order (a single id for chasing).
    fn configuration(&self) -> &[usize];
}

/// Result of serving one request in the continuous space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Served {
    pub decision: usize,
    /// Movement plus detour paid for this request.
    pub cost: f64,
    pub detour: f64,
    pub moved: usize,
}

/// An online algorithm on the continuous ball.
pub trait OnlineAlgorithm: Send {
    fn name(&self) -> String;
    fn problem(&self) -> Problem;
    fn serve(&mut self, request: &Request) -> Result<Served>;
    fn configuration(&self) -> Configuration;
    fn ledger(&self) -> &CostLedger;
    /// Cost paid before the first request (moving onto the net).
    fn initial_cost(&self) -> f64 {
        0.0
    }
    fn total_cost(&self) -> f64 {
        self.initial_cost() + self.ledger().total()
    }
    /// Combiner diagnostics, for algorithms that combine experts.
    fn combiner_log(&self) -> Option<&[CombinerLogEntry]> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiniteKind {
    Wfa,
    Greedy,
    Marking,
}

impl fmt::Display for FiniteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FiniteKind::Wfa => "wfa",
            FiniteKind::Greedy => "greedy",
            FiniteKind::Marking => "marking",
        })
    }
}

impl FromStr for FiniteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "wfa" => Ok(FiniteKind::Wfa),
            "greedy" => Ok(FiniteKind::Greedy),
            "marking" => Ok(FiniteKind::Marking),
            other => Err(Error::Config(format!("unknown finite algorithm {other:?}"))),
        }
    }
}

impl FiniteKind {
    pub fn instantiate(
        self,
        problem: Problem,
        net: Arc<Net>,
        initial: Vec<usize>,
        seed: u64,
    ) -> Result<Box<dyn FiniteOnlineAlgorithm>> {
        Ok(match (self, problem) {
            (FiniteKind::Wfa, Problem::Chasing) => {
                let start = *initial.first().ok_or_else(|| Error::Config("empty start".into()))?;
                Box::new(WfaMts::new(net, start)?)
            }
            (FiniteKind::Wfa, _) => Box::new(WorkFunction::new(problem, net, initial)?),
            (FiniteKind::Greedy, _) => Box::new(FiniteGreedy::new(problem, net, initial)?),
            (FiniteKind::Marking, Problem::KServer) => Box::new(Marking::new(net, initial, seed)?),
            (FiniteKind::Marking, p) => {
                return Err(Error::Config(format!("marking only serves k-server, not {p}")))
            }
        })
    }
}

/// Algorithm selection by name: `greedy` runs directly on the ball,
/// `wrapped:<inner>` projects onto one net, `ensemble:<inner>` combines
/// wrapped copies over a grid of σ values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmName {
    Direct,
    Wrapped(FiniteKind),
    Ensemble(FiniteKind),
}

impl fmt::Display for AlgorithmName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmName::Direct => f.write_str("greedy"),
            AlgorithmName::Wrapped(k) => write!(f, "wrapped:{k}"),
            AlgorithmName::Ensemble(k) => write!(f, "ensemble:{k}"),
        }
    }
}

impl FromStr for AlgorithmName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("wrapped:") {
            return Ok(AlgorithmName::Wrapped(inner.parse()?));
        }
        if let Some(inner) = s.strip_prefix("ensemble:") {
            return Ok(AlgorithmName::Ensemble(inner.parse()?));
        }
        match s {
            "greedy" => Ok(AlgorithmName::Direct),
            "wfa" | "marking" => Err(Error::Config(format!(
                "{s} runs on a finite metric; use wrapped:{s} or ensemble:{s}"
            ))),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Projects every point of a continuous request onto the net. Chasing sets
/// keep the first occurrence of each projected id; the second value maps each
/// projected entry back to the first original index with that projection.
pub fn project_request(net: &Net, request: &Request) -> Result<(NetRequest, Vec<usize>)> {
    Ok(match request {
        Request::Server(r) => (NetRequest::Server(net.project(r)?), Vec::new()),
        Request::Taxi { from, to } => (NetRequest::Taxi(net.project(from)?, net.project(to)?), Vec::new()),
        Request::SetChase(ps) => {
            let mut ids = Vec::with_capacity(ps.len());
            let mut origin = Vec::with_capacity(ps.len());
            for (i, p) in ps.iter().enumerate() {
                let q = net.project(p)?;
                if !ids.contains(&q) {
                    ids.push(q);
                    origin.push(i);
                }
            }
            (NetRequest::Chase(ids), origin)
        }
    })
}
