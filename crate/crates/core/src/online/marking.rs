//! Randomized marking for k-server on a uniform metric.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FiniteOnlineAlgorithm, NetRequest, Step};
use crate::error::{invalid, Result};
use crate::net::Net;
use crate::problems::Problem;

/// Relative tolerance for treating all pairwise distances as equal.
pub const UNIFORM_TOLERANCE: f64 = 1e-9;

pub fn is_uniform(net: &Net) -> bool {
    let n = net.len();
    if n < 3 {
        return true;
    }
    let d0 = net.dist(0, 1);
    (0..n).all(|i| (i + 1..n).all(|j| (net.dist(i, j) - d0).abs() <= UNIFORM_TOLERANCE * d0))
}

#[derive(Debug, Clone)]
pub struct Marking {
    net: Arc<Net>,
    config: Vec<usize>,
    marked: Vec<bool>,
    rng: ChaCha8Rng,
}

impl Marking {
    pub fn new(net: Arc<Net>, initial: Vec<usize>, seed: u64) -> Result<Self> {
        if !is_uniform(&net) {
            return Err(invalid("marking needs a uniform metric"));
        }
        if initial.is_empty() {
            return Err(invalid("need at least one server"));
        }
        if let Some(&bad) = initial.iter().find(|&&i| i >= net.len()) {
            return Err(invalid(format!("initial position {bad} is not a net point")));
        }
        let k = initial.len();
        Ok(Self {
            net,
            config: initial,
            marked: vec![false; k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn marked(&self) -> &[bool] {
        &self.marked
    }
}

impl FiniteOnlineAlgorithm for Marking {
    fn name(&self) -> &str {
        "marking"
    }

    fn problem(&self) -> Problem {
        Problem::KServer
    }

    fn net(&self) -> &Arc<Net> {
        &self.net
    }

    fn step(&mut self, request: &NetRequest) -> Result<Step> {
        let &NetRequest::Server(r) = request else {
            return Err(invalid(format!("marking cannot serve {request:?}")));
        };
        if r >= self.net.len() {
            return Err(invalid(format!("request point {r} is not a net point")));
        }
        if let Some(i) = self.config.iter().position(|&x| x == r) {
            self.marked[i] = true;
            return Ok(Step { decision: i, cost: 0.0 });
        }
        if self.marked.iter().all(|&m| m) {
            self.marked.fill(false);
        }
        let unmarked: Vec<usize> = (0..self.config.len()).filter(|&i| !self.marked[i]).collect();
        let i = unmarked[self.rng.random_range(0..unmarked.len())];
        let cost = self.net.dist(self.config[i], r);
        self.config[i] = r;
        self.marked[i] = true;
        Ok(Step { decision: i, cost })
    }

    fn configuration(&self) -> &[usize] {
        &self.config
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Ball, Norm, NormedSpace};

    fn uniform_net(n: usize) -> Arc<Net> {
        let ball = Ball::centered(NormedSpace::new(n, Norm::Linf).unwrap(), 1.0).unwrap();
        let pts = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
        Arc::new(Net::from_points(ball, 0.1, pts).unwrap())
    }

    #[test]
    fn single_server_moves_on_every_miss() {
        let mut m = Marking::new(uniform_net(2), vec![0], 1).unwrap();
        for t in 0..10 {
            let s = m.step(&NetRequest::Server((t + 1) % 2)).unwrap();
            assert_eq!(s.cost, 1.0);
        }
    }

    #[test]
    fn covered_requests_only_mark() {
        let mut m = Marking::new(uniform_net(4), vec![0, 1, 2], 1).unwrap();
        for r in [0, 1, 0, 2] {
            assert_eq!(m.step(&NetRequest::Server(r)).unwrap().cost, 0.0);
        }
        assert_eq!(m.marked(), &[true, true, true]);
    }

    #[test]
    fn rejects_non_uniform_metric() {
        let ball = Ball::new(NormedSpace::new(1, Norm::L2).unwrap(), vec![0.5], 0.5).unwrap();
        let net = Arc::new(Net::from_points(ball, 0.1, vec![vec![0.0], vec![0.3], vec![1.0]]).unwrap());
        assert!(Marking::new(net, vec![0], 0).is_err());
    }
}
