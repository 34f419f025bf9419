//! Hypercube instances on which every online algorithm pays about `1/(k+1)`
//! per request while an offline algorithm evicting furthest-in-future pays
//! `O(1/(k log k))`, and the experiment comparing the two.
//!
//! `M = [0,1]^m` under the max norm with `m = ⌈log₂(k+1)⌉`, `V` is the first
//! `k+1` vertices in lexicographic order, `ε = 1/(2k log₂ k)` and requests are
//! drawn uniformly from `P`, the points within `ε` of some vertex of `V`.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{invalid, Result};
use crate::metric::{Ball, Norm, NormedSpace, Point};
use crate::problems::{replay, Configuration, CostLedger, Instance, Problem, Request};

#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeInstance {
    k: usize,
    m: usize,
    epsilon: f64,
    vertices: Vec<Point>,
    ball: Ball,
}

impl HypercubeInstance {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(invalid("the hypercube instance needs k >= 2"));
        }
        let m = (usize::BITS - k.leading_zeros()) as usize;
        debug_assert!(1usize << m > k && (m == 1 || 1usize << (m - 1) < k + 1));
        let epsilon = 1.0 / (2.0 * k as f64 * (k as f64).log2());
        let vertices = (0..=k).map(|j| vertex_bits(j, m)).collect();
        let space = NormedSpace::new(m, Norm::Linf)?;
        let ball = Ball::new(space, vec![0.5; m], 0.5)?;
        Ok(Self {
            k,
            m,
            epsilon,
            vertices,
            ball,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// The unit cube, a max-norm ball of radius 1/2.
    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    /// `(k+1) · ε^m`, the volume of `P` relative to the unit cube.
    pub fn sigma(&self) -> f64 {
        (self.k + 1) as f64 * self.epsilon.powi(self.m as i32)
    }

    /// Nearest vertex of `V` and its max-norm distance, ties to the lowest index.
    pub fn nearest_vertex(&self, x: &[f64]) -> (usize, f64) {
        let space = self.ball.space();
        let mut best = (0, f64::INFINITY);
        for (j, v) in self.vertices.iter().enumerate() {
            let d = space.dist(v, x);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }

    /// Index of the vertex `x` is near, or an error if `x` is not in `P`.
    pub fn vertex_of(&self, x: &[f64]) -> Result<usize> {
        self.ball.check_contains(x)?;
        let (j, d) = self.nearest_vertex(x);
        if d > self.epsilon {
            return Err(invalid(format!("point at distance {d} from every vertex of V")));
        }
        Ok(j)
    }

    /// Uniform point near vertex `j`.
    pub fn sample_near<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Point {
        self.vertices[j]
            .iter()
            .map(|&b| {
                let u = rng.random::<f64>() * self.epsilon;
                if b == 0.0 {
                    u
                } else {
                    1.0 - u
                }
            })
            .collect()
    }

    /// Uniform point of `P`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let j = rng.random_range(0..=self.k);
        self.sample_near(j, rng)
    }

    pub fn sample_request<R: Rng + ?Sized>(&self, problem: Problem, rng: &mut R) -> Request {
        match problem {
            Problem::KServer => Request::Server(self.sample_point(rng)),
            Problem::KTaxi => {
                let j = rng.random_range(0..=self.k);
                let from = self.sample_near(j, rng);
                let to = self.sample_near(j, rng);
                Request::Taxi { from, to }
            }
            Problem::Chasing => {
                // k distinct vertices in random order, so each point is uniform on P.
                let chosen = sample(rng, self.k + 1, self.k).into_vec();
                Request::SetChase(chosen.into_iter().map(|j| self.sample_near(j, rng)).collect())
            }
        }
    }

    /// Initial configuration: servers near vertices `0..k`, or the single
    /// chasing server at vertex 0.
    pub fn initial(&self, problem: Problem) -> Configuration {
        match problem {
            Problem::Chasing => Configuration::new(vec![self.vertices[0].clone()]),
            _ => Configuration::new(self.vertices[..self.k].to_vec()),
        }
    }

    pub fn instance<R: Rng + ?Sized>(&self, problem: Problem, t: usize, rng: &mut R) -> Result<Instance> {
        let requests = (0..t).map(|_| self.sample_request(problem, rng)).collect();
        Instance::new(problem, self.k, self.ball.clone(), self.initial(problem), requests)
    }
}

fn vertex_bits(j: usize, m: usize) -> Point {
    (0..m).map(|b| ((j >> (m - 1 - b)) & 1) as f64).collect()
}

/// Next occurrence of each vertex after position `t`, from precomputed lists.
struct NextUse {
    queues: Vec<VecDeque<usize>>,
}

impl NextUse {
    fn new(n: usize, seq: &[Vec<usize>]) -> Self {
        let mut queues = vec![VecDeque::new(); n];
        for (t, vs) in seq.iter().enumerate() {
            for &v in vs {
                queues[v].push_back(t);
            }
        }
        Self { queues }
    }

    fn advance(&mut self, t: usize) {
        for q in &mut self.queues {
            while q.front().is_some_and(|&s| s <= t) {
                q.pop_front();
            }
        }
    }

    fn next(&self, v: usize) -> usize {
        self.queues[v].front().copied().unwrap_or(usize::MAX)
    }
}

/// The furthest-in-future offline strategy. Returns the cost of its service
/// and the decisions, which replay on the instance to that cost.
pub fn offline_ffd_strategy(hc: &HypercubeInstance, instance: &Instance) -> Result<(f64, Vec<usize>)> {
    let n = hc.vertex_count();
    let problem = instance.problem;
    let decisions = match problem {
        Problem::KServer | Problem::KTaxi => {
            let seq: Vec<Vec<usize>> = instance
                .requests
                .iter()
                .map(|r| match r {
                    Request::Server(x) => hc.vertex_of(x).map(|v| vec![v]),
                    Request::Taxi { from, to } => {
                        let (a, b) = (hc.vertex_of(from)?, hc.vertex_of(to)?);
                        if a != b {
                            return Err(invalid("pickup and drop-off near different vertices"));
                        }
                        Ok(vec![a])
                    }
                    Request::SetChase(_) => Err(invalid("set request in a server instance")),
                })
                .collect::<Result<_>>()?;
            let mut at: Vec<usize> = instance
                .initial
                .positions
                .iter()
                .map(|p| hc.vertex_of(p))
                .collect::<Result<_>>()?;
            let mut next = NextUse::new(n, &seq);
            let mut out = Vec::with_capacity(seq.len());
            for (t, vs) in seq.iter().enumerate() {
                next.advance(t);
                let v = vs[0];
                let i = match at.iter().position(|&u| u == v) {
                    Some(i) => i,
                    None => {
                        // Evict the server whose vertex is needed furthest in the future;
                        // a server sharing its vertex with another is free to leave.
                        let key = |i: usize| {
                            let u = at[i];
                            let dup = at.iter().filter(|&&w| w == u).count() > 1;
                            (if dup { usize::MAX } else { next.next(u) }, std::cmp::Reverse(u))
                        };
                        let mut best = (0, key(0));
                        for i in 1..at.len() {
                            let kv = key(i);
                            if kv > best.1 {
                                best = (i, kv);
                            }
                        }
                        best.0
                    }
                };
                at[i] = v;
                out.push(i);
            }
            out
        }
        Problem::Chasing => {
            // Vertex classes covered by each request set.
            let mut sets: Vec<Vec<(usize, usize)>> = Vec::with_capacity(instance.len());
            for r in &instance.requests {
                let Request::SetChase(ps) = r else {
                    return Err(invalid("point request in a chasing instance"));
                };
                sets.push(
                    ps.iter()
                        .enumerate()
                        .map(|(i, p)| hc.vertex_of(p).map(|v| (v, i)))
                        .collect::<Result<_>>()?,
                );
            }
            // Time at which each vertex is next missing from a request set.
            let mut missing: Vec<VecDeque<usize>> = vec![VecDeque::new(); n];
            for (t, s) in sets.iter().enumerate() {
                for (v, q) in missing.iter_mut().enumerate() {
                    if !s.iter().any(|&(u, _)| u == v) {
                        q.push_back(t);
                    }
                }
            }
            let mut cur = hc.vertex_of(&instance.initial.positions[0])?;
            let mut out = Vec::with_capacity(sets.len());
            for (t, s) in sets.iter().enumerate() {
                for q in &mut missing {
                    while q.front().is_some_and(|&x| x < t) {
                        q.pop_front();
                    }
                }
                if !s.iter().any(|&(u, _)| u == cur) {
                    let mut best = (0usize, None);
                    for &(u, _) in s {
                        let key = missing[u].front().copied().unwrap_or(usize::MAX);
                        let better = match best.1 {
                            None => true,
                            Some(b) => key > b || (key == b && u < best.0),
                        };
                        if better {
                            best = (u, Some(key));
                        }
                    }
                    cur = best.0;
                }
                let idx = s.iter().find(|&&(u, _)| u == cur).map(|&(_, i)| i).unwrap_or(0);
                out.push(idx);
            }
            out
        }
    };
    let (_, ledger) = replay(instance.space(), &instance.initial, &instance.requests, &decisions)?;
    Ok((ledger.total(), decisions))
}

/// Ledger of an offline decision sequence, for validation.
pub fn ffd_ledger(instance: &Instance, decisions: &[usize]) -> Result<CostLedger> {
    replay(instance.space(), &instance.initial, &instance.requests, decisions).map(|(_, l)| l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub problem: Problem,
    pub k: usize,
    pub seed: u64,
    pub algorithm: String,
    pub sigma: f64,
    pub online_cost: f64,
    pub offline_cost: f64,
    /// `exact` when the optimum was solved, `upper_bound` for the FFD cost.
    pub offline_kind: &'static str,
    pub ratio: f64,
    pub log_k_over_sigma: f64,
    pub epsilon: f64,
    pub m: usize,
    pub vertex_count: usize,
    pub steps: usize,
}

impl RatioRow {
    pub const HEADER: &'static str = "problem,k,seed,algorithm,sigma,log_k_over_sigma,epsilon,m,vertex_count,T,online_cost,offline_cost,offline_kind,ratio";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:e},{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.k,
            self.seed,
            self.algorithm,
            self.sigma,
            self.log_k_over_sigma,
            self.epsilon,
            self.m,
            self.vertex_count,
            self.steps,
            self.online_cost,
            self.offline_cost,
            self.offline_kind,
            self.ratio
        )
    }
}

/// Horizon up to which the exact optimum replaces the FFD bound.
pub const EXACT_OPT_HORIZON: usize = 12;

/// Runs each online algorithm in `algorithms` on `seeds` realizations of the
/// hypercube instance for every `k`. Algorithms that cannot be instantiated
/// at some `k` (for example a work function table that is too large) are
/// skipped for that `k`.
pub fn ratio_experiment(
    problem: Problem,
    ks: &[usize],
    t: usize,
    seeds: &[u64],
    algorithms: &[crate::online::AlgorithmName],
) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        let hc = HypercubeInstance::new(k)?;
        for &seed in seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 32));
            let inst = hc.instance(problem, t, &mut rng)?;
            let (offline_cost, offline_kind) = if t <= EXACT_OPT_HORIZON {
                (crate::offline::opt(&inst)?.cost, "exact")
            } else {
                (offline_ffd_strategy(&hc, &inst)?.0, "upper_bound")
            };
            for &name in algorithms {
                let Ok(mut alg) = lowerbound_algorithm(&hc, problem, name, seed) else {
                    continue;
                };
                for r in &inst.requests {
                    alg.serve(r)?;
                }
                let online_cost = alg.total_cost();
                rows.push(RatioRow {
                    problem,
                    k,
                    seed,
                    algorithm: alg.name(),
                    sigma: hc.sigma(),
                    online_cost,
                    offline_cost,
                    offline_kind,
                    ratio: online_cost / offline_cost,
                    log_k_over_sigma: (k as f64 / hc.sigma()).ln(),
                    epsilon: hc.epsilon(),
                    m: hc.dim(),
                    vertex_count: hc.vertex_count(),
                    steps: t,
                });
            }
        }
    }
    Ok(rows)
}

/// Online algorithm for the hypercube instance. Wrapped algorithms run on the
/// vertex set, which is an `ε`-net of `P`.
pub fn lowerbound_algorithm(
    hc: &HypercubeInstance,
    problem: Problem,
    name: crate::online::AlgorithmName,
    seed: u64,
) -> Result<Box<dyn crate::online::OnlineAlgorithm>> {
    use crate::online::{AlgorithmName, DirectGreedy, ProjectionWrapper};
    use std::sync::Arc;
    let initial = hc.initial(problem);
    Ok(match name {
        AlgorithmName::Direct => Box::new(DirectGreedy::new(problem, hc.ball().clone(), initial.positions)?),
        AlgorithmName::Wrapped(kind) => {
            let net = Arc::new(hc.vertex_net()?);
            Box::new(ProjectionWrapper::build(kind, problem, net, &initial, seed)?)
        }
        AlgorithmName::Ensemble(_) => {
            return Err(invalid("ensembles are not run on the hypercube instance"));
        }
    })
}

impl HypercubeInstance {
    /// `V` as a net of `P` with `η = ε`. Projection is only meaningful on `P`.
    pub fn vertex_net(&self) -> Result<crate::net::Net> {
        crate::net::Net::from_points(self.ball.clone(), self.epsilon, self.vertices.clone())
    }
}
