//! Work function algorithm over the configurations of a finite metric.
//!
//! k-server and k-taxi keep one value per multiset of `k` net points
//! (`C(n+k-1, k)` entries, ranked with the combinatorial number system);
//! chasing small sets is run as a metrical task system on the `n` net points
//! with zero task cost inside the requested set and infinite cost outside.

use std::sync::Arc;

use super::{FiniteOnlineAlgorithm, NetRequest, Step};
use crate::combiner::min_matching;
use crate::error::{invalid, Result};
use crate::net::Net;
use crate::problems::Problem;

/// Largest work-function table accepted.
pub const MAX_WFA_STATES: usize = 1_000_000;

fn binomial_table(n: usize, k: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; k + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=k.min(i) {
            c[i][j] = c[i - 1][j - 1].saturating_add(if j < i { c[i - 1][j] } else { 0 });
        }
    }
    c
}

/// Number of size-`k` multisets over `n` points, saturating.
pub fn multiset_count(n: usize, k: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    binomial_table(n + k - 1, k)[n + k - 1][k]
}

#[derive(Debug, Clone)]
struct MultisetIndex {
    k: usize,
    binom: Vec<Vec<u64>>,
    states: Vec<u16>,
}

impl MultisetIndex {
    fn new(n: usize, k: usize) -> Result<Self> {
        let count = multiset_count(n, k);
        if count > MAX_WFA_STATES as u64 {
            return Err(invalid(format!(
                "work function table for n = {n}, k = {k} has {count} states (limit {MAX_WFA_STATES})"
            )));
        }
        if n > u16::MAX as usize {
            return Err(invalid("too many net points for the work function"));
        }
        let binom = binomial_table(n + k, k + 1);
        let mut idx = Self {
            k,
            binom,
            states: vec![0; count as usize * k],
        };
        let mut cur = vec![0u16; k];
        loop {
            let r = idx.rank(&cur);
            idx.states[r * k..(r + 1) * k].copy_from_slice(&cur);
            // Next non-decreasing tuple.
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(idx);
                }
                i -= 1;
                if (cur[i] as usize) + 1 < n {
                    let v = cur[i] + 1;
                    for c in cur[i..].iter_mut() {
                        *c = v;
                    }
                    break;
                }
            }
        }
    }

    fn len(&self) -> usize {
        self.states.len() / self.k
    }

    fn state(&self, r: usize) -> &[u16] {
        &self.states[r * self.k..(r + 1) * self.k]
    }

    /// Colex rank of a sorted multiset.
    fn rank(&self, sorted: &[u16]) -> usize {
        sorted
            .iter()
            .enumerate()
            .map(|(i, &c)| self.binom[c as usize + i][i + 1])
            .sum::<u64>() as usize
    }

    /// Rank of `state` with its `slot`-th element replaced by `p`.
    fn replace(&self, state: &[u16], slot: usize, p: u16) -> usize {
        let mut rank = 0;
        let mut o = 0;
        let mut placed = false;
        for (i, &c) in state.iter().enumerate() {
            if i == slot {
                continue;
            }
            if !placed && c > p {
                rank += self.binom[p as usize + o][o + 1];
                o += 1;
                placed = true;
            }
            rank += self.binom[c as usize + o][o + 1];
            o += 1;
        }
        if !placed {
            rank += self.binom[p as usize + o][o + 1];
        }
        rank as usize
    }

    fn rank_of(&self, ids: &[usize]) -> usize {
        let mut v: Vec<u16> = ids.iter().map(|&i| i as u16).collect();
        v.sort_unstable();
        self.rank(&v)
    }
}

/// WFA for k-server or k-taxi on the points of a net.
#[derive(Debug, Clone)]
pub struct WorkFunction {
    problem: Problem,
    net: Arc<Net>,
    dist: Vec<f64>,
    n: usize,
    index: MultisetIndex,
    w: Vec<f64>,
    config: Vec<usize>,
}

impl WorkFunction {
    pub fn new(problem: Problem, net: Arc<Net>, initial: Vec<usize>) -> Result<Self> {
        if problem == Problem::Chasing {
            return Err(invalid("use WfaMts for chasing small sets"));
        }
        let n = net.len();
        let k = initial.len();
        if k == 0 {
            return Err(invalid("need at least one server"));
        }
        if let Some(&bad) = initial.iter().find(|&&i| i >= n) {
            return Err(invalid(format!("initial position {bad} is not a net point")));
        }
        let index = MultisetIndex::new(n, k)?;
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = net.dist(i, j);
            }
        }
        let mut wf = Self {
            problem,
            net,
            dist,
            n,
            index,
            w: Vec::new(),
            config: initial,
        };
        let start: Vec<usize> = wf.config.clone();
        wf.w = (0..wf.index.len())
            .map(|r| wf.matching(&start, wf.index.state(r)))
            .collect();
        Ok(wf)
    }

    #[inline]
    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    fn matching(&self, a: &[usize], b: &[u16]) -> f64 {
        let costs: Vec<Vec<f64>> = a
            .iter()
            .map(|&x| b.iter().map(|&y| self.d(x, y as usize)).collect())
            .collect();
        min_matching(&costs)
    }

    pub fn states(&self) -> usize {
        self.index.len()
    }

    /// Value of the current work function at the multiset `ids`.
    pub fn value(&self, ids: &[usize]) -> f64 {
        self.w[self.index.rank_of(ids)]
    }

    /// All `(configuration, value)` pairs.
    pub fn table(&self) -> Vec<(Vec<usize>, f64)> {
        (0..self.index.len())
            .map(|r| {
                (
                    self.index.state(r).iter().map(|&c| c as usize).collect(),
                    self.w[r],
                )
            })
            .collect()
    }

    fn check_point(&self, p: usize) -> Result<u16> {
        if p >= self.n {
            return Err(invalid(format!("request point {p} is not a net point")));
        }
        Ok(p as u16)
    }

    fn step_server(&mut self, r: usize) -> Result<Step> {
        let rp = self.check_point(r)?;
        let k = self.index.k;
        let mut next = vec![0.0; self.w.len()];
        for (s, slot) in next.iter_mut().enumerate() {
            let state = self.index.state(s);
            // A configuration that already covers r keeps its value.
            if state.contains(&rp) {
                *slot = self.w[s];
                continue;
            }
            let mut best = f64::INFINITY;
            for j in 0..k {
                if j > 0 && state[j] == state[j - 1] {
                    continue;
                }
                let v = self.w[self.index.replace(state, j, rp)] + self.d(state[j] as usize, r);
                best = best.min(v);
            }
            *slot = best;
        }
        self.w = next;
        if let Some(i) = self.config.iter().position(|&x| x == r) {
            return Ok(Step { decision: i, cost: 0.0 });
        }
        let (i, _) = self.argmin_move(r, |x| self.d(x, r));
        let cost = self.d(self.config[i], r);
        self.config[i] = r;
        Ok(Step { decision: i, cost })
    }

    fn step_taxi(&mut self, a: usize, b: usize) -> Result<Step> {
        self.check_point(a)?;
        let bp = self.check_point(b)?;
        let k = self.index.k;
        // u(E) = min_y w(E - b + y) + d(y, a), for multisets E containing b.
        let mut u = vec![f64::INFINITY; self.w.len()];
        for (e, slot) in u.iter_mut().enumerate() {
            let state = self.index.state(e);
            let Some(pos) = state.iter().position(|&c| c == bp) else {
                continue;
            };
            let mut best = f64::INFINITY;
            for y in 0..self.n {
                let v = self.w[self.index.replace(state, pos, y as u16)] + self.d(y, a);
                best = best.min(v);
            }
            *slot = best;
        }
        let mut next = vec![0.0; self.w.len()];
        for (s, slot) in next.iter_mut().enumerate() {
            let state = self.index.state(s);
            let mut best = f64::INFINITY;
            for j in 0..k {
                if j > 0 && state[j] == state[j - 1] {
                    continue;
                }
                let v = u[self.index.replace(state, j, bp)] + self.d(state[j] as usize, b);
                best = best.min(v);
            }
            *slot = best;
        }
        self.w = next;
        let (i, _) = self.argmin_move(b, |x| self.d(x, a));
        let cost = self.d(self.config[i], a);
        self.config[i] = b;
        Ok(Step { decision: i, cost })
    }

    /// Server `i` minimizing `w(X - x_i + target) + move_cost(x_i)`, ties to the lowest id.
    fn argmin_move(&self, target: usize, move_cost: impl Fn(usize) -> f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        let mut ids = self.config.clone();
        for i in 0..self.config.len() {
            let x = self.config[i];
            ids[i] = target;
            let v = self.value(&ids) + move_cost(x);
            ids[i] = x;
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }
}

impl FiniteOnlineAlgorithm for WorkFunction {
    fn name(&self) -> &str {
        "wfa"
    }

    fn problem(&self) -> Problem {
        self.problem
    }

    fn net(&self) -> &Arc<Net> {
        &self.net
    }

    fn step(&mut self, request: &NetRequest) -> Result<Step> {
        match (self.problem, request) {
            (Problem::KServer, NetRequest::Server(r)) => self.step_server(*r),
            (Problem::KTaxi, NetRequest::Taxi(a, b)) => self.step_taxi(*a, *b),
            _ => Err(invalid(format!("{} WFA cannot serve {request:?}", self.problem))),
        }
    }

    fn configuration(&self) -> &[usize] {
        &self.config
    }
}

/// WFA for chasing small sets, as a metrical task system on the net points.
#[derive(Debug, Clone)]
pub struct WfaMts {
    net: Arc<Net>,
    w: Vec<f64>,
    config: [usize; 1],
}

impl WfaMts {
    pub fn new(net: Arc<Net>, start: usize) -> Result<Self> {
        if start >= net.len() {
            return Err(invalid(format!("start {start} is not a net point")));
        }
        let w = (0..net.len()).map(|s| net.dist(start, s)).collect();
        Ok(Self {
            net,
            w,
            config: [start],
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }
}

impl FiniteOnlineAlgorithm for WfaMts {
    fn name(&self) -> &str {
        "wfa"
    }

    fn problem(&self) -> Problem {
        Problem::Chasing
    }

    fn net(&self) -> &Arc<Net> {
        &self.net
    }

    fn step(&mut self, request: &NetRequest) -> Result<Step> {
        let NetRequest::Chase(set) = request else {
            return Err(invalid(format!("chasing WFA cannot serve {request:?}")));
        };
        let n = self.net.len();
        if set.is_empty() {
            return Err(invalid("empty request set"));
        }
        if let Some(&bad) = set.iter().find(|&&p| p >= n) {
            return Err(invalid(format!("request point {bad} is not a net point")));
        }
        let next: Vec<f64> = (0..n)
            .map(|s| {
                set.iter()
                    .map(|&p| self.w[p] + self.net.dist(p, s))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        self.w = next;
        let cur = self.config[0];
        let mut best = (0, f64::INFINITY);
        for (j, &p) in set.iter().enumerate() {
            let v = self.w[p] + self.net.dist(cur, p);
            if v < best.1 {
                best = (j, v);
            }
        }
        let target = set[best.0];
        let cost = self.net.dist(cur, target);
        self.config[0] = target;
        Ok(Step {
            decision: best.0,
            cost,
        })
    }

    fn configuration(&self) -> &[usize] {
        &self.config
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Ball, Norm, NormedSpace};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_net(xs: &[f64]) -> Arc<Net> {
        let ball = Ball::new(NormedSpace::new(1, Norm::L2).unwrap(), vec![0.5], 0.5).unwrap();
        Arc::new(Net::from_points(ball, 0.01, xs.iter().map(|&x| vec![x]).collect()).unwrap())
    }

    /// Uniform metric: the standard basis vectors scaled to Linf distance 1.
    fn uniform_net(n: usize) -> Arc<Net> {
        let space = NormedSpace::new(n, Norm::Linf).unwrap();
        let ball = Ball::centered(space, 1.0).unwrap();
        let pts = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Arc::new(Net::from_points(ball, 0.1, pts).unwrap())
    }

    #[test]
    fn multiset_ranking_is_a_bijection() {
        let idx = MultisetIndex::new(5, 3).unwrap();
        assert_eq!(idx.len(), 35);
        for r in 0..idx.len() {
            let s = idx.state(r);
            assert!(s.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(idx.rank(s), r);
        }
        assert_eq!(multiset_count(12, 4), 1365);
        assert!(MultisetIndex::new(40, 8).is_err());
    }

    #[test]
    fn forced_move_on_two_points() {
        let net = uniform_net(2);
        let mut wfa = WorkFunction::new(Problem::KServer, net, vec![0]).unwrap();
        let step = wfa.step(&NetRequest::Server(1)).unwrap();
        assert_eq!(step, Step { decision: 0, cost: 1.0 });
        assert_eq!(wfa.value(&[1]), 1.0);
        assert_eq!(wfa.value(&[0]), 2.0);
        assert_eq!(wfa.configuration(), &[1]);
    }

    #[test]
    fn covered_request_costs_nothing() {
        let net = line_net(&[0.0, 0.5, 1.0]);
        let mut wfa = WorkFunction::new(Problem::KServer, net, vec![0, 2]).unwrap();
        let before = wfa.table();
        let step = wfa.step(&NetRequest::Server(2)).unwrap();
        assert_eq!(step.cost, 0.0);
        assert_eq!(wfa.configuration(), &[0, 2]);
        // From the start configuration, a covered request leaves w unchanged.
        assert_eq!(before, wfa.table());
        wfa.step(&NetRequest::Server(1)).unwrap();
        let before = wfa.table();
        let step = wfa.step(&NetRequest::Server(1)).unwrap();
        assert_eq!(step.cost, 0.0);
        assert!(before.iter().zip(&wfa.table()).all(|(a, b)| b.1 >= a.1));
    }

    #[test]
    fn rejects_points_outside_net() {
        let net = line_net(&[0.0, 1.0]);
        let mut wfa = WorkFunction::new(Problem::KServer, net.clone(), vec![0]).unwrap();
        assert!(wfa.step(&NetRequest::Server(5)).is_err());
        assert!(wfa.step(&NetRequest::Taxi(0, 1)).is_err());
        let mut mts = WfaMts::new(net, 0).unwrap();
        assert!(mts.step(&NetRequest::Chase(vec![7])).is_err());
    }

    #[test]
    fn work_function_monotone_and_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..20 {
            let n = rng.random_range(2..=5);
            let k = rng.random_range(1..=3);
            let xs: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random::<f64>() * 0.5) / n as f64).collect();
            let net = line_net(&xs);
            let init: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
            let problem = if trial % 2 == 0 { Problem::KServer } else { Problem::KTaxi };
            let mut wfa = WorkFunction::new(problem, net.clone(), init).unwrap();
            for _ in 0..15 {
                let before = wfa.table();
                let req = if problem == Problem::KServer {
                    NetRequest::Server(rng.random_range(0..n))
                } else {
                    NetRequest::Taxi(rng.random_range(0..n), rng.random_range(0..n))
                };
                wfa.step(&req).unwrap();
                let after = wfa.table();
                if problem == Problem::KServer {
                    for (a, b) in before.iter().zip(&after) {
                        assert!(b.1 >= a.1 - 1e-12);
                    }
                }
                for (c1, v1) in &after {
                    for (c2, v2) in &after {
                        let costs: Vec<Vec<f64>> =
                            c1.iter().map(|&x| c2.iter().map(|&y| net.dist(x, y)).collect()).collect();
                        assert!((v1 - v2).abs() <= min_matching(&costs) + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn mts_chases_sets() {
        let net = line_net(&[0.0, 0.2, 0.8, 1.0]);
        let mut mts = WfaMts::new(net, 0).unwrap();
        let step = mts.step(&NetRequest::Chase(vec![2, 1])).unwrap();
        assert_eq!(step.decision, 1);
        assert_eq!(mts.configuration(), &[1]);
        assert!((step.cost - 0.2).abs() < 1e-12);
        let step = mts.step(&NetRequest::Chase(vec![1, 3])).unwrap();
        assert_eq!(step.cost, 0.0);
    }
}
