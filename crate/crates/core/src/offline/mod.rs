//! Exact offline optima: min-cost flow for k-server and k-taxi, dynamic
//! programming for chasing small sets.

pub mod flow;

use crate::error::{invalid, Result};
use crate::metric::{NormedSpace, Point};
use crate::net::Net;
use crate::problems::{replay, Configuration, Instance, Problem, Request};

use flow::{Cost, FlowNetwork};

/// Requested cost resolution inside the flow solver.
pub const COST_RESOLUTION: f64 = 1e-9;

/// Largest flow network (forward arcs) the exact oracles will build.
pub const MAX_FLOW_ARCS: usize = 6_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OptSolution {
    pub cost: f64,
    pub decisions: Vec<usize>,
}

/// Forward arcs in the request-chaining network for `t` requests and `k` servers.
pub fn flow_arc_count(t: usize, k: usize) -> usize {
    t * t.saturating_sub(1) / 2 + k * t + 2 * t + 2 * k
}

pub fn exact_feasible(problem: Problem, t: usize, k: usize) -> bool {
    match problem {
        Problem::Chasing => true,
        Problem::KServer | Problem::KTaxi => flow_arc_count(t, k) <= MAX_FLOW_ARCS,
    }
}

/// Chaining network: each server either idles or serves a time-ordered chain
/// of requests. Serving arcs cost the empty movement from the previous
/// location; every request node carries a large negative reward on its unit
/// arc so that an optimal flow covers all of them.
fn chain_opt(
    space: &NormedSpace,
    starts: &[Point],
    pickups: &[&Point],
    dropoffs: &[&Point],
) -> Result<Vec<usize>> {
    let k = starts.len();
    let t = pickups.len();
    if k == 0 {
        return Err(invalid("need at least one server"));
    }
    if t == 0 {
        return Ok(Vec::new());
    }
    let arcs = flow_arc_count(t, k);
    if arcs > MAX_FLOW_ARCS {
        return Err(invalid(format!(
            "exact OPT for T = {t}, k = {k} needs {arcs} arcs (limit {MAX_FLOW_ARCS})"
        )));
    }
    let mut max_d: f64 = 0.0;
    for s in starts {
        for p in pickups {
            max_d = max_d.max(space.dist(s, p));
        }
    }
    for b in dropoffs {
        for a in pickups {
            max_d = max_d.max(space.dist(b, a));
        }
    }
    // Keep |total cost| well inside i64 even with the covering rewards.
    let budget = (1u64 << 60) as f64 / ((t + k) as f64 * 4.0 * (max_d + 1.0));
    let scale = (1.0 / COST_RESOLUTION).min(budget);
    let c = |d: f64| -> Cost { (d * scale).round() as Cost };
    let reward: Cost = 4 * c(max_d) + 1;

    let (s, sink) = (0usize, 1usize);
    let server = |j: usize| 2 + j;
    let inn = |i: usize| 2 + k + 2 * i;
    let out = |i: usize| 3 + k + 2 * i;
    let mut net = FlowNetwork::with_capacity(2 + k + 2 * t, arcs);
    for (j, start) in starts.iter().enumerate() {
        net.add_arc(s, server(j), 1, 0);
        net.add_arc(server(j), sink, 1, 0);
        for (i, p) in pickups.iter().enumerate() {
            net.add_arc(server(j), inn(i), 1, c(space.dist(start, p)));
        }
    }
    let mut unit = Vec::with_capacity(t);
    for i in 0..t {
        unit.push(net.add_arc(inn(i), out(i), 1, -reward));
        net.add_arc(out(i), sink, 1, 0);
        for (jj, p) in pickups.iter().enumerate().skip(i + 1) {
            net.add_arc(out(i), inn(jj), 1, c(space.dist(dropoffs[i], p)));
        }
    }
    let (sent, _) = net.min_cost_flow(s, sink, k as i32)?;
    debug_assert_eq!(sent as usize, k);
    if unit.iter().any(|&a| net.flow(a) != 1) {
        return Err(invalid("flow left a request uncovered"));
    }
    let mut decisions = vec![usize::MAX; t];
    for j in 0..k {
        let mut node = server(j);
        loop {
            let next = net
                .out_arcs(node)
                .find(|&a| net.flow(a) > 0)
                .map(|a| net.head(a));
            match next {
                Some(v) if v != sink => {
                    let i = (v - 2 - k) / 2;
                    decisions[i] = j;
                    node = out(i);
                }
                _ => break,
            }
        }
    }
    debug_assert!(decisions.iter().all(|&d| d != usize::MAX));
    Ok(decisions)
}

fn finish(instance: &Instance, decisions: Vec<usize>) -> Result<OptSolution> {
    let (_, ledger) = replay(instance.space(), &instance.initial, &instance.requests, &decisions)?;
    Ok(OptSolution {
        cost: ledger.total(),
        decisions,
    })
}

/// Minimum total movement for k-server.
pub fn opt_kserver(instance: &Instance) -> Result<OptSolution> {
    let pts = instance
        .requests
        .iter()
        .map(|r| match r {
            Request::Server(p) => Ok(p),
            _ => Err(invalid("opt_kserver needs k-server requests")),
        })
        .collect::<Result<Vec<_>>>()?;
    let decisions = chain_opt(instance.space(), &instance.initial.positions, &pts, &pts)?;
    finish(instance, decisions)
}

/// Minimum total empty-run distance for k-taxi.
pub fn opt_ktaxi(instance: &Instance) -> Result<OptSolution> {
    let mut a = Vec::with_capacity(instance.len());
    let mut b = Vec::with_capacity(instance.len());
    for r in &instance.requests {
        match r {
            Request::Taxi { from, to } => {
                a.push(from);
                b.push(to);
            }
            _ => return Err(invalid("opt_ktaxi needs taxi requests")),
        }
    }
    let decisions = chain_opt(instance.space(), &instance.initial.positions, &a, &b)?;
    finish(instance, decisions)
}

/// Minimum movement for chasing small sets, by dynamic programming over the
/// chosen point of each request.
pub fn opt_chasing(instance: &Instance) -> Result<OptSolution> {
    let space = instance.space();
    let sets = instance
        .requests
        .iter()
        .map(|r| match r {
            Request::SetChase(ps) if !ps.is_empty() => Ok(ps),
            _ => Err(invalid("opt_chasing needs non-empty set requests")),
        })
        .collect::<Result<Vec<_>>>()?;
    if sets.is_empty() {
        return Ok(OptSolution {
            cost: 0.0,
            decisions: Vec::new(),
        });
    }
    let start = &instance.initial.positions[0];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(sets.len());
    let mut best: Vec<f64> = sets[0].iter().map(|p| space.dist(start, p)).collect();
    back.push(vec![0; sets[0].len()]);
    for w in sets.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        let mut next = Vec::with_capacity(cur.len());
        let mut arg = Vec::with_capacity(cur.len());
        for p in cur.iter() {
            let (mut v, mut a) = (f64::INFINITY, 0);
            for (j, q) in prev.iter().enumerate() {
                let c = best[j] + space.dist(q, p);
                if c < v {
                    v = c;
                    a = j;
                }
            }
            next.push(v);
            arg.push(a);
        }
        best = next;
        back.push(arg);
    }
    let mut choice = (0..best.len())
        .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    let mut decisions = vec![0; sets.len()];
    for t in (0..sets.len()).rev() {
        decisions[t] = choice;
        choice = back[t][choice];
    }
    finish(instance, decisions)
}

/// Exact offline optimum for any problem.
pub fn opt(instance: &Instance) -> Result<OptSolution> {
    match instance.problem {
        Problem::KServer => opt_kserver(instance),
        Problem::KTaxi => opt_ktaxi(instance),
        Problem::Chasing => opt_chasing(instance),
    }
}

/// Replaces every point of the instance by its projection onto `net`.
pub fn project_instance(instance: &Instance, net: &Net) -> Result<Instance> {
    let proj = |p: &Point| -> Result<Point> { Ok(net.point(net.project(p)?).to_vec()) };
    let initial = Configuration::new(
        instance
            .initial
            .positions
            .iter()
            .map(proj)
            .collect::<Result<_>>()?,
    );
    let requests = instance
        .requests
        .iter()
        .map(|r| {
            Ok(match r {
                Request::Server(p) => Request::Server(proj(p)?),
                Request::Taxi { from, to } => Request::Taxi {
                    from: proj(from)?,
                    to: proj(to)?,
                },
                Request::SetChase(ps) => Request::SetChase(ps.iter().map(proj).collect::<Result<_>>()?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(instance.problem, instance.k, instance.ball.clone(), initial, requests)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedOptReport {
    pub opt_original: f64,
    /// OPT_M's decisions replayed on the projected instance.
    pub shadow: f64,
    pub opt_projected: f64,
    pub eta: f64,
    pub steps: usize,
    /// `shadow ≤ OPT_M + 2ηT`
    pub shadow_within_bound: bool,
    /// `OPT_N ≤ shadow`
    pub opt_projected_le_shadow: bool,
}

impl ProjectedOptReport {
    pub fn holds(&self) -> bool {
        self.shadow_within_bound && self.opt_projected_le_shadow
    }
}

/// Compares the optimum on the original instance with the optimum on its
/// projection, through the shadow solution that follows OPT_M on the net.
pub fn opt_projected_vs_original(
    instance: &Instance,
    solution: &OptSolution,
    net: &Net,
) -> Result<ProjectedOptReport> {
    let projected = project_instance(instance, net)?;
    let (_, shadow) = replay(
        projected.space(),
        &projected.initial,
        &projected.requests,
        &solution.decisions,
    )?;
    let opt_n = opt(&projected)?;
    let t = instance.len();
    let eta = net.eta();
    let slack = 1e-9 * (1.0 + solution.cost);
    Ok(ProjectedOptReport {
        opt_original: solution.cost,
        shadow: shadow.total(),
        opt_projected: opt_n.cost,
        eta,
        steps: t,
        shadow_within_bound: shadow.total() <= solution.cost + 2.0 * eta * t as f64 + slack,
        opt_projected_le_shadow: opt_n.cost <= shadow.total() + slack,
    })
}
