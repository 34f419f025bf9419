//! Greedy baselines: move the nearest server (or taxi) to the request, or in
//! chasing move to the nearest requested point. Ties go to the lowest id.

use std::sync::Arc;

use super::{FiniteOnlineAlgorithm, NetRequest, OnlineAlgorithm, Served, Step};
use crate::error::{invalid, Result};
use crate::metric::{Ball, Point};
use crate::net::Net;
use crate::problems::{serve, Configuration, CostLedger, Problem, Request};

/// Index of the smallest value, ties to the lowest index.
pub fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Greedy decision for a request in continuous space.
pub fn greedy_decision(ball: &Ball, config: &Configuration, request: &Request) -> usize {
    let space = ball.space();
    let here = &config.positions;
    match request {
        Request::Server(r) => argmin(here.iter().map(|x| space.dist(x, r))),
        Request::Taxi { from, .. } => argmin(here.iter().map(|x| space.dist(x, from))),
        Request::SetChase(ps) => argmin(ps.iter().map(|p| space.dist(&here[0], p))),
    }
}

#[derive(Debug, Clone)]
pub struct FiniteGreedy {
    problem: Problem,
    net: Arc<Net>,
    config: Vec<usize>,
}

impl FiniteGreedy {
    pub fn new(problem: Problem, net: Arc<Net>, initial: Vec<usize>) -> Result<Self> {
        if initial.is_empty() {
            return Err(invalid("need at least one server"));
        }
        if problem == Problem::Chasing && initial.len() != 1 {
            return Err(invalid("chasing starts from a single point"));
        }
        if let Some(&bad) = initial.iter().find(|&&i| i >= net.len()) {
            return Err(invalid(format!("initial position {bad} is not a net point")));
        }
        Ok(Self {
            problem,
            net,
            config: initial,
        })
    }

    fn check(&self, p: usize) -> Result<()> {
        if p >= self.net.len() {
            return Err(invalid(format!("request point {p} is not a net point")));
        }
        Ok(())
    }
}

impl FiniteOnlineAlgorithm for FiniteGreedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn problem(&self) -> Problem {
        self.problem
    }

    fn net(&self) -> &Arc<Net> {
        &self.net
    }

    fn step(&mut self, request: &NetRequest) -> Result<Step> {
        let net = &self.net;
        match (self.problem, request) {
            (Problem::KServer, &NetRequest::Server(r)) => {
                self.check(r)?;
                let i = argmin(self.config.iter().map(|&x| net.dist(x, r)));
                let cost = net.dist(self.config[i], r);
                self.config[i] = r;
                Ok(Step { decision: i, cost })
            }
            (Problem::KTaxi, &NetRequest::Taxi(a, b)) => {
                self.check(a)?;
                self.check(b)?;
                let i = argmin(self.config.iter().map(|&x| net.dist(x, a)));
                let cost = net.dist(self.config[i], a);
                self.config[i] = b;
                Ok(Step { decision: i, cost })
            }
            (Problem::Chasing, NetRequest::Chase(set)) => {
                if set.is_empty() {
                    return Err(invalid("empty request set"));
                }
                for &p in set {
                    self.check(p)?;
                }
                let cur = self.config[0];
                let j = argmin(set.iter().map(|&p| net.dist(cur, p)));
                let cost = net.dist(cur, set[j]);
                self.config[0] = set[j];
                Ok(Step { decision: j, cost })
            }
            (p, r) => Err(invalid(format!("{p} greedy cannot serve {r:?}"))),
        }
    }

    fn configuration(&self) -> &[usize] {
        &self.config
    }
}

/// Greedy running directly on the ball, without a net.
#[derive(Debug, Clone)]
pub struct DirectGreedy {
    problem: Problem,
    ball: Ball,
    config: Configuration,
    ledger: CostLedger,
}

impl DirectGreedy {
    pub fn new(problem: Problem, ball: Ball, initial: Vec<Point>) -> Result<Self> {
        if initial.is_empty() {
            return Err(invalid("need at least one server"));
        }
        for p in &initial {
            ball.check_contains(p)?;
        }
        Ok(Self {
            problem,
            ball,
            config: Configuration::new(initial),
            ledger: CostLedger::new(),
        })
    }
}

impl OnlineAlgorithm for DirectGreedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn problem(&self) -> Problem {
        self.problem
    }

    fn serve(&mut self, request: &Request) -> Result<Served> {
        if request.problem() != self.problem {
            return Err(invalid(format!("{} request for a {} algorithm", request.problem(), self.problem)));
        }
        let decision = greedy_decision(&self.ball, &self.config, request);
        let (next, cost, moved) = serve(self.ball.space(), &self.config, request, decision)?;
        self.config = next;
        self.ledger.push(moved, cost, 0.0);
        Ok(Served {
            decision,
            cost,
            detour: 0.0,
            moved,
        })
    }

    fn configuration(&self) -> Configuration {
        self.config.clone()
    }

    fn ledger(&self) -> &CostLedger {
        &self.ledger
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Norm, NormedSpace};

    fn unit_line() -> Ball {
        Ball::new(NormedSpace::new(1, Norm::L2).unwrap(), vec![0.5], 0.5).unwrap()
    }

    #[test]
    fn nearest_server_moves() {
        let mut g = DirectGreedy::new(Problem::KServer, unit_line(), vec![vec![0.0], vec![1.0]]).unwrap();
        let s = g.serve(&Request::Server(vec![0.4])).unwrap();
        assert_eq!(s.decision, 0);
        assert!((s.cost - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let mut g = DirectGreedy::new(Problem::KServer, unit_line(), vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(g.serve(&Request::Server(vec![0.5])).unwrap().decision, 0);
        let net = Arc::new(Net::from_points(unit_line(), 0.1, vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap());
        let mut f = FiniteGreedy::new(Problem::KServer, net, vec![2, 0]).unwrap();
        assert_eq!(f.step(&NetRequest::Server(1)).unwrap().decision, 0);
    }

    #[test]
    fn taxi_and_chasing() {
        let mut g = DirectGreedy::new(Problem::KTaxi, unit_line(), vec![vec![0.0], vec![1.0]]).unwrap();
        let s = g.serve(&Request::Taxi { from: vec![0.8], to: vec![0.1] }).unwrap();
        assert_eq!(s.decision, 1);
        assert!((s.cost - 0.2).abs() < 1e-15);
        assert_eq!(g.configuration().positions[1], vec![0.1]);

        let mut c = DirectGreedy::new(Problem::Chasing, unit_line(), vec![vec![0.0]]).unwrap();
        let s = c.serve(&Request::SetChase(vec![vec![0.8], vec![0.2]])).unwrap();
        assert_eq!(s.decision, 1);
        assert!(c.serve(&Request::Server(vec![0.1])).is_err());
    }
}
