//! Lifts a net algorithm to the ball: requests are projected onto the net,
//! the inner algorithm decides, and the moved server takes a detour from its
//! net point to the true request and back. Between requests every server
//! sits on the net point the inner algorithm put it on.

use std::sync::Arc;

use super::{project_request, FiniteKind, FiniteOnlineAlgorithm, NetRequest, OnlineAlgorithm, Served};
use crate::error::{invalid, Result};
use crate::metric::Point;
use crate::net::Net;
use crate::problems::{Configuration, CostLedger, Problem, Request};

/// A charged leg of movement in the ball.
pub type Leg = (Point, Point);

pub struct ProjectionWrapper {
    inner: Box<dyn FiniteOnlineAlgorithm>,
    net: Arc<Net>,
    ids: Vec<usize>,
    ledger: CostLedger,
    inner_total: f64,
    initial_cost: f64,
    legs: Option<Vec<Vec<Leg>>>,
    initial_legs: Vec<Leg>,
}

impl ProjectionWrapper {
    /// Projects `initial` onto `net` and starts `kind` from the projected ids.
    pub fn build(kind: FiniteKind, problem: Problem, net: Arc<Net>, initial: &Configuration, seed: u64) -> Result<Self> {
        let ids = initial
            .positions
            .iter()
            .map(|p| net.project(p))
            .collect::<Result<Vec<_>>>()?;
        let inner = kind.instantiate(problem, net.clone(), ids, seed)?;
        Self::new(inner, initial)
    }

    /// Wraps an inner algorithm whose configuration is the projection of `initial`.
    pub fn new(inner: Box<dyn FiniteOnlineAlgorithm>, initial: &Configuration) -> Result<Self> {
        let net = inner.net().clone();
        let ids = inner.configuration().to_vec();
        if ids.len() != initial.len() {
            return Err(invalid("inner configuration and initial configuration differ in size"));
        }
        let space = net.space();
        let mut initial_cost = 0.0;
        let mut initial_legs = Vec::new();
        for (p, &id) in initial.positions.iter().zip(&ids) {
            if net.project(p)? != id {
                return Err(invalid("inner algorithm does not start at the projected configuration"));
            }
            initial_cost += space.dist(p, net.point(id));
            initial_legs.push((p.clone(), net.point(id).to_vec()));
        }
        Ok(Self {
            inner,
            net,
            ids,
            ledger: CostLedger::new(),
            inner_total: 0.0,
            initial_cost,
            legs: None,
            initial_legs,
        })
    }

    /// Keep the charged legs of every step for replay.
    pub fn record_legs(mut self) -> Self {
        self.legs = Some(Vec::new());
        self
    }

    pub fn legs(&self) -> Option<&[Vec<Leg>]> {
        self.legs.as_deref()
    }

    pub fn initial_legs(&self) -> &[Leg] {
        &self.initial_legs
    }

    pub fn net(&self) -> &Arc<Net> {
        &self.net
    }

    pub fn eta(&self) -> f64 {
        self.net.eta()
    }

    pub fn inner_name(&self) -> &str {
        self.inner.name()
    }

    /// Total cost of the inner algorithm on the projected requests.
    pub fn inner_total(&self) -> f64 {
        self.inner_total
    }

    pub fn inner_configuration(&self) -> &[usize] {
        self.inner.configuration()
    }

    /// Net point ids of the wrapper's servers.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// The wrapper's servers sit exactly where the inner algorithm's are.
    pub fn follows_inner(&self) -> bool {
        self.ids == self.inner.configuration()
    }

    /// Serves one request. Returns the decision, the step cost and the detour.
    pub fn wrap_step(&mut self, request: &Request) -> Result<(usize, f64, f64)> {
        let s = self.serve(request)?;
        Ok((s.decision, s.cost, s.detour))
    }
}

impl OnlineAlgorithm for ProjectionWrapper {
    fn name(&self) -> String {
        format!("wrapped:{}", self.inner.name())
    }

    fn problem(&self) -> Problem {
        self.inner.problem()
    }

    fn serve(&mut self, request: &Request) -> Result<Served> {
        if request.problem() != self.problem() {
            return Err(invalid(format!("{} request for a {} algorithm", request.problem(), self.problem())));
        }
        let net = self.net.clone();
        let space = net.space();
        let (projected, origin) = project_request(&net, request)?;
        let before = self.ids.clone();
        let step = self.inner.step(&projected)?;
        let movement = step.cost;
        let mut legs: Vec<Leg> = Vec::new();
        let (decision, moved, detour) = match (request, &projected) {
            (Request::Server(r), &NetRequest::Server(q)) => {
                let i = step.decision;
                let qp = net.point(q);
                legs.push((net.point(before[i]).to_vec(), qp.to_vec()));
                legs.push((qp.to_vec(), r.clone()));
                legs.push((r.clone(), qp.to_vec()));
                self.ids[i] = q;
                (i, i, 2.0 * space.dist(qp, r))
            }
            (Request::Taxi { from, to }, &NetRequest::Taxi(qa, qb)) => {
                let i = step.decision;
                let (pa, pb) = (net.point(qa), net.point(qb));
                legs.push((net.point(before[i]).to_vec(), pa.to_vec()));
                legs.push((pa.to_vec(), from.clone()));
                legs.push((to.clone(), pb.to_vec()));
                self.ids[i] = qb;
                (i, i, space.dist(pa, from) + space.dist(to, pb))
            }
            (Request::SetChase(ps), NetRequest::Chase(qs)) => {
                let j = step.decision;
                let q = *qs
                    .get(j)
                    .ok_or_else(|| invalid(format!("inner decision {j} out of range")))?;
                let original = origin[j];
                let (qp, p) = (net.point(q), &ps[original]);
                legs.push((net.point(before[0]).to_vec(), qp.to_vec()));
                legs.push((qp.to_vec(), p.clone()));
                legs.push((p.clone(), qp.to_vec()));
                self.ids[0] = q;
                (original, 0, 2.0 * space.dist(qp, p))
            }
            _ => return Err(invalid("projected request does not match the original")),
        };
        self.inner_total += movement;
        self.ledger.push(moved, movement, detour);
        if let Some(all) = self.legs.as_mut() {
            all.push(legs);
        }
        Ok(Served {
            decision,
            cost: movement + detour,
            detour,
            moved,
        })
    }

    fn configuration(&self) -> Configuration {
        Configuration::new(self.ids.iter().map(|&i| self.net.point(i).to_vec()).collect())
    }

    fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    fn initial_cost(&self) -> f64 {
        self.initial_cost
    }
}
