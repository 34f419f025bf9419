//! Unknown σ: wrapped copies of a net algorithm tuned to `σ_i = 2^{-2^i}`,
//! plus a worst-case expert, combined by the randomized combiner.

use std::sync::Arc;

use super::{FiniteKind, OnlineAlgorithm, ProjectionWrapper, Served};
use crate::combiner::{combiner_diameter, switching_cost, CombinerLogEntry, CombinerState};
use crate::error::{invalid, Error, Result};
use crate::metric::Ball;
use crate::net::{size_bound, Net};
use crate::problems::{Configuration, CostLedger, Problem, Request};
use crate::smoothing::choose_eta;

/// Largest net the ensemble builds for one expert.
pub const MAX_EXPERT_NET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    Known(f64),
    /// σ unknown; `floor` is a lower bound on σ (required for k-taxi, may be 0 otherwise).
    Unknown { floor: f64 },
}

/// The σ values of the experts tuned to a smoothness level. For k-server and
/// chasing this is `σ_1..σ_{ℓ-1}` with `ℓ = ⌈log₂ k⌉ + 1`; for k-taxi the
/// grid continues until it reaches `floor`.
pub fn sigma_grid(problem: Problem, k: usize, mode: SigmaMode) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    match mode {
        SigmaMode::Known(s) => {
            if !(s > 0.0 && s <= 1.0) {
                return Err(invalid(format!("sigma must lie in (0, 1], got {s}")));
            }
            Ok(vec![s])
        }
        SigmaMode::Unknown { floor } => {
            let sigma_i = |i: u32| 2f64.powf(-(2f64.powi(i as i32)));
            if problem == Problem::KTaxi {
                if !(floor > 0.0 && floor <= 1.0) {
                    return Err(invalid("k-taxi with unknown sigma needs a positive sigma floor"));
                }
                let mut grid = Vec::new();
                for i in 1.. {
                    let s = sigma_i(i);
                    grid.push(s);
                    if s <= floor || s == 0.0 {
                        break;
                    }
                }
                return Ok(grid);
            }
            let ell = experts_count(k);
            Ok((1..ell as u32).map(sigma_i).collect())
        }
    }
}

/// `ℓ = ⌈log₂ k⌉ + 1`.
pub fn experts_count(k: usize) -> usize {
    (k.max(1) as f64).log2().ceil() as usize + 1
}

/// Builds a net at resolution `eta`, the singleton when `eta > R`.
pub fn net_for_eta(ball: &Ball, eta: f64) -> Result<Net> {
    if eta > ball.radius() {
        Net::singleton(ball.clone(), eta)
    } else {
        Net::build(ball.clone(), eta)
    }
}

/// One expert of an ensemble and the resolution it runs at.
pub struct Expert {
    pub sigma: Option<f64>,
    pub eta: f64,
    pub alg: ProjectionWrapper,
}

/// Wrapped `kind` at the resolution for `sigma`, coarsened by doubling `η`
/// until the net has at most [`MAX_EXPERT_NET`] points and the inner
/// algorithm accepts it.
fn coarsest_fitting(
    kind: FiniteKind,
    problem: Problem,
    k: usize,
    ball: &Ball,
    initial: &Configuration,
    eta0: f64,
    seed: u64,
) -> Result<(f64, ProjectionWrapper)> {
    let mut eta = eta0;
    loop {
        let fits = size_bound(ball.radius(), eta, ball.dim()) <= 4.0 * MAX_EXPERT_NET as f64 || eta > ball.radius();
        if fits {
            let net = net_for_eta(ball, eta)?;
            if net.len() <= MAX_EXPERT_NET {
                if let Ok(w) = ProjectionWrapper::build(kind, problem, Arc::new(net), initial, seed) {
                    return Ok((eta, w));
                }
            }
        }
        if eta > ball.radius() {
            return Err(Error::Config(format!("{kind} cannot run even on the singleton net (k = {k})")));
        }
        eta *= 2.0;
    }
}

/// Experts for `mode`. A known σ gives one expert at its own resolution
/// (which must fit). An unknown σ gives one expert per grid value, coarsened
/// if needed, plus a worst-case expert on the finest net that fits
/// (k-server and chasing only).
pub fn build_sigma_ensemble(
    kind: FiniteKind,
    problem: Problem,
    k: usize,
    ball: &Ball,
    initial: &Configuration,
    mode: SigmaMode,
    seed: u64,
) -> Result<Vec<Expert>> {
    let m = ball.dim();
    let r = ball.radius();
    let grid = sigma_grid(problem, k, mode)?;
    let mut experts = Vec::new();
    if let SigmaMode::Known(s) = mode {
        let eta = choose_eta(problem, s, k, m, r)?;
        let net = net_for_eta(ball, eta)?;
        let alg = ProjectionWrapper::build(kind, problem, Arc::new(net), initial, seed)?;
        experts.push(Expert { sigma: Some(s), eta, alg });
        return Ok(experts);
    }
    for (i, &s) in grid.iter().enumerate() {
        let eta0 = choose_eta(problem, s, k, m, r)?;
        let (eta, alg) = coarsest_fitting(kind, problem, k, ball, initial, eta0, expert_seed(seed, i))?;
        experts.push(Expert { sigma: Some(s), eta, alg });
    }
    if problem != Problem::KTaxi {
        let finest = experts.last().map(|e| e.eta).unwrap_or(r) / 2.0;
        let (eta, alg) = coarsest_fitting(kind, problem, k, ball, initial, finest.min(r), expert_seed(seed, grid.len()))?;
        experts.push(Expert { sigma: None, eta, alg });
    }
    Ok(experts)
}

fn expert_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Experts run in lockstep; the combiner decides which one the servers follow.
pub struct Ensemble {
    problem: Problem,
    ball: Ball,
    experts: Vec<Expert>,
    combiner: CombinerState,
    ledger: CostLedger,
    initial_cost: f64,
    config: Configuration,
}

impl Ensemble {
    pub fn new(problem: Problem, k: usize, ball: Ball, experts: Vec<Expert>, epsilon: f64, seed: u64) -> Result<Self> {
        if experts.is_empty() {
            return Err(invalid("ensemble needs at least one expert"));
        }
        let diam = combiner_diameter(problem, k, ball.radius());
        let combiner = CombinerState::new(experts.len(), epsilon, diam, seed)?;
        let active = combiner.active();
        let initial_cost = experts[active].alg.initial_cost();
        let config = experts[active].alg.configuration();
        Ok(Self {
            problem,
            ball,
            experts,
            combiner,
            ledger: CostLedger::new(),
            initial_cost,
            config,
        })
    }

    pub fn build(
        kind: FiniteKind,
        problem: Problem,
        k: usize,
        ball: Ball,
        initial: &Configuration,
        mode: SigmaMode,
        seed: u64,
    ) -> Result<Self> {
        let experts = build_sigma_ensemble(kind, problem, k, &ball, initial, mode, seed)?;
        Self::new(problem, k, ball, experts, 1.0, seed)
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn combiner(&self) -> &CombinerState {
        &self.combiner
    }

    pub fn set_verbose(&mut self, verbose: bool) {
        self.combiner = self.combiner.clone().with_verbose(verbose);
    }
}

impl OnlineAlgorithm for Ensemble {
    fn name(&self) -> String {
        format!("ensemble:{}", self.experts[0].alg.inner_name())
    }

    fn problem(&self) -> Problem {
        self.problem
    }

    fn serve(&mut self, request: &Request) -> Result<Served> {
        let mut outcomes = Vec::with_capacity(self.experts.len());
        for e in &mut self.experts {
            outcomes.push(e.alg.serve(request)?);
        }
        let costs: Vec<f64> = outcomes.iter().map(|s| s.cost).collect();
        let configs: Vec<Configuration> = self.experts.iter().map(|e| e.alg.configuration()).collect();
        let before = self.combiner.active();
        let space = *self.ball.space();
        let problem = self.problem;
        let step = self
            .combiner
            .step(&costs, |i, j| switching_cost(problem, &configs[i], &configs[j], &space).unwrap_or(f64::INFINITY))?;
        let followed = outcomes[before];
        let switch = step.incurred - followed.cost;
        self.config = configs[step.active].clone();
        self.ledger.push(followed.moved, followed.cost - followed.detour + switch, followed.detour);
        Ok(Served {
            decision: followed.decision,
            cost: step.incurred,
            detour: followed.detour,
            moved: followed.moved,
        })
    }

    fn configuration(&self) -> Configuration {
        self.config.clone()
    }

    fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    fn initial_cost(&self) -> f64 {
        self.initial_cost
    }

    fn combiner_log(&self) -> Option<&[CombinerLogEntry]> {
        Some(self.combiner.log())
    }
}
