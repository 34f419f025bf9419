//! Min-cost flow by successive shortest augmenting paths with node potentials.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{invalid, Result};

pub type Cost = i64;

const INF: Cost = Cost::MAX / 4;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: u32,
    cap: i32,
    cost: Cost,
}

/// Directed network with integral capacities and costs. Arc `2i` is the
/// forward arc returned by [`FlowNetwork::add_arc`], arc `2i + 1` its residual twin.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<u32>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn with_capacity(nodes: usize, arcs: usize) -> Self {
        Self {
            arcs: Vec::with_capacity(2 * arcs),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i32, cost: Cost) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc {
            to: to as u32,
            cap,
            cost,
        });
        self.arcs.push(Arc {
            to: from as u32,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(id as u32);
        self.adj[to].push(id as u32 + 1);
        id
    }

    /// Flow currently carried by forward arc `id`.
    pub fn flow(&self, id: usize) -> i32 {
        self.arcs[id ^ 1].cap
    }

    pub fn head(&self, id: usize) -> usize {
        self.arcs[id].to as usize
    }

    /// Forward arcs leaving `node`, with their ids.
    pub fn out_arcs(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[node]
            .iter()
            .map(|&a| a as usize)
            .filter(|a| a % 2 == 0)
    }

    /// Initial potentials: exact shortest distances from `source` when the
    /// positive-capacity arcs form a DAG, Bellman-Ford otherwise.
    fn initial_potentials(&self, source: usize) -> Result<Vec<Cost>> {
        let n = self.nodes();
        if self.arcs.iter().all(|a| a.cap <= 0 || a.cost >= 0) {
            return Ok(vec![0; n]);
        }
        let mut indeg = vec![0usize; n];
        for a in &self.arcs {
            if a.cap > 0 {
                indeg[a.to as usize] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &e in &self.adj[u] {
                let a = self.arcs[e as usize];
                if a.cap > 0 {
                    let v = a.to as usize;
                    indeg[v] -= 1;
                    if indeg[v] == 0 {
                        queue.push_back(v);
                    }
                }
            }
        }
        let mut dist = vec![INF; n];
        dist[source] = 0;
        if order.len() == n {
            for &u in &order {
                if dist[u] == INF {
                    continue;
                }
                for &e in &self.adj[u] {
                    let a = self.arcs[e as usize];
                    if a.cap > 0 && dist[u] + a.cost < dist[a.to as usize] {
                        dist[a.to as usize] = dist[u] + a.cost;
                    }
                }
            }
        } else {
            for round in 0..=n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == INF {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let a = self.arcs[e as usize];
                        if a.cap > 0 && dist[u] + a.cost < dist[a.to as usize] {
                            dist[a.to as usize] = dist[u] + a.cost;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
                if round == n {
                    return Err(invalid("negative cycle in flow network"));
                }
            }
        }
        Ok(dist.into_iter().map(|d| if d == INF { 0 } else { d }).collect())
    }

    /// Sends up to `amount` units from `source` to `sink` at minimum cost.
    /// Returns the flow value and its total cost.
    pub fn min_cost_flow(&mut self, source: usize, sink: usize, amount: i32) -> Result<(i32, Cost)> {
        if source == sink {
            return Err(invalid("source and sink coincide"));
        }
        let n = self.nodes();
        let mut phi = self.initial_potentials(source)?;
        let mut dist = vec![INF; n];
        let mut parent = vec![u32::MAX; n];
        let mut sent = 0;
        let mut total: Cost = 0;
        let mut heap = BinaryHeap::new();
        while sent < amount {
            dist.fill(INF);
            parent.fill(u32::MAX);
            dist[source] = 0;
            heap.clear();
            heap.push(Reverse((0, source as u32)));
            while let Some(Reverse((d, u))) = heap.pop() {
                let u = u as usize;
                if d > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    let a = self.arcs[e as usize];
                    if a.cap <= 0 {
                        continue;
                    }
                    let v = a.to as usize;
                    let nd = d + a.cost + phi[u] - phi[v];
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = e;
                        heap.push(Reverse((nd, v as u32)));
                    }
                }
            }
            if dist[sink] == INF {
                break;
            }
            for v in 0..n {
                if dist[v] < INF {
                    phi[v] += dist[v];
                }
            }
            let mut push = amount - sent;
            let mut v = sink;
            while v != source {
                let e = parent[v] as usize;
                push = push.min(self.arcs[e].cap);
                v = self.arcs[e ^ 1].to as usize;
            }
            let mut v = sink;
            while v != source {
                let e = parent[v] as usize;
                self.arcs[e].cap -= push;
                self.arcs[e ^ 1].cap += push;
                total += push as Cost * self.arcs[e].cost;
                v = self.arcs[e ^ 1].to as usize;
            }
            sent += push;
        }
        Ok((sent, total))
    }
}

/// Minimum-cost perfect matching of an `n × n` cost matrix. Returns the
/// column assigned to each row and the total cost.
pub fn min_cost_assignment(costs: &[Vec<Cost>]) -> Result<(Vec<usize>, Cost)> {
    let n = costs.len();
    if costs.iter().any(|row| row.len() != n) {
        return Err(invalid("assignment cost matrix must be square"));
    }
    let (s, t) = (2 * n, 2 * n + 1);
    let mut net = FlowNetwork::with_capacity(2 * n + 2, n * n + 2 * n);
    for i in 0..n {
        net.add_arc(s, i, 1, 0);
        net.add_arc(n + i, t, 1, 0);
    }
    let mut arc_ids = vec![vec![0; n]; n];
    for (i, row) in costs.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            arc_ids[i][j] = net.add_arc(i, n + j, 1, c);
        }
    }
    let (flow, cost) = net.min_cost_flow(s, t, n as i32)?;
    debug_assert_eq!(flow as usize, n);
    let assign = arc_ids
        .iter()
        .map(|ids| ids.iter().position(|&a| net.flow(a) > 0).unwrap_or(usize::MAX))
        .collect();
    Ok((assign, cost))
}
