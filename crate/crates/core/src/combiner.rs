//! Combining online algorithms: run ℓ experts side by side and follow one of
//! them at random, paying the configuration distance whenever the followed
//! expert changes.
//!
//! Weights follow Hedge on costs normalized by the diameter `D`,
//! `w_i ← w_i · exp(−λ · c_i / D)`. After each update the followed expert is
//! kept with probability `min(1, p'_a / p_a)` and otherwise moved to `j` with
//! probability proportional to `(p'_j − p_j)^+`. This keeps the followed
//! expert distributed exactly as the Hedge distribution while the switching
//! probability per step is the total variation between consecutive
//! distributions. With `λ` chosen so that `λ(1+λ)/(1−e^{−λ}) = 1+ε` the
//! expected cost is at most `(1+ε)·min_i cost_i + (1+λ)/(1−e^{−λ}) · D · ln ℓ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::metric::NormedSpace;
use crate::offline::flow::min_cost_assignment;
use crate::problems::{Configuration, Problem};

/// Minimum-cost perfect matching value of a square cost matrix.
pub fn min_matching(costs: &[Vec<f64>]) -> f64 {
    let n = costs.len();
    if n == 0 {
        return 0.0;
    }
    if n <= 16 {
        // dp[mask]: best cost matching rows 0..popcount(mask) onto the columns in mask.
        let mut dp = vec![f64::INFINITY; 1 << n];
        dp[0] = 0.0;
        for mask in 0usize..(1 << n) {
            let cur = dp[mask];
            if cur == f64::INFINITY {
                continue;
            }
            let row = mask.count_ones() as usize;
            if row == n {
                continue;
            }
            for (col, &c) in costs[row].iter().enumerate() {
                if mask & (1 << col) == 0 {
                    let next = mask | (1 << col);
                    let v = cur + c;
                    if v < dp[next] {
                        dp[next] = v;
                    }
                }
            }
        }
        return dp[(1 << n) - 1];
    }
    let max = costs.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let scale = 1e9f64.min((1u64 << 52) as f64 / (n as f64 * (max + 1.0)));
    let int: Vec<Vec<i64>> = costs
        .iter()
        .map(|r| r.iter().map(|&c| (c * scale).round() as i64).collect())
        .collect();
    match min_cost_assignment(&int) {
        Ok((assign, _)) => assign.iter().enumerate().map(|(i, &j)| costs[i][j]).sum(),
        Err(_) => f64::INFINITY,
    }
}

/// Distance between two configurations: the cheapest way to move every
/// server of `a` onto a distinct position of `b`.
pub fn switching_cost(
    problem: Problem,
    a: &Configuration,
    b: &Configuration,
    space: &NormedSpace,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "configurations have {} and {} positions",
            a.len(),
            b.len()
        )));
    }
    for p in a.positions.iter().chain(&b.positions) {
        space.check(p)?;
    }
    if problem == Problem::Chasing {
        if a.len() != 1 {
            return Err(invalid("chasing configurations have one position"));
        }
        return Ok(space.dist(&a.positions[0], &b.positions[0]));
    }
    let costs: Vec<Vec<f64>> = a
        .positions
        .iter()
        .map(|x| b.positions.iter().map(|y| space.dist(x, y)).collect())
        .collect();
    Ok(min_matching(&costs))
}

/// Diameter bound used by the combiner: `k · 2R` in configuration space for
/// k-server and k-taxi, `2R` for chasing.
pub fn combiner_diameter(problem: Problem, k: usize, radius: f64) -> f64 {
    match problem {
        Problem::Chasing => 2.0 * radius,
        Problem::KServer | Problem::KTaxi => k as f64 * 2.0 * radius,
    }
}

/// Hedge rate λ with `λ(1+λ)/(1−e^{−λ}) = 1 + epsilon`.
pub fn hedge_rate(epsilon: f64) -> f64 {
    let f = |x: f64| x * (1.0 + x) / (-(-x).exp_m1());
    let (mut lo, mut hi) = (1e-12, 1.0);
    while f(hi) < 1.0 + epsilon {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 1.0 + epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Additive constant of the guarantee, in units of `D · ln ℓ`.
pub fn additive_factor(epsilon: f64) -> f64 {
    let l = hedge_rate(epsilon);
    (1.0 + l) / (-(-l).exp_m1())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinerLogEntry {
    pub step: usize,
    pub active: usize,
    pub switched_from: Option<usize>,
    pub switch_cost: f64,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinerStep {
    pub active: usize,
    pub incurred: f64,
    pub switched: bool,
}

#[derive(Debug, Clone)]
pub struct CombinerState {
    log_weights: Vec<f64>,
    active: usize,
    epsilon: f64,
    rate: f64,
    diam: f64,
    rng: ChaCha8Rng,
    steps: usize,
    switches: usize,
    switching_total: f64,
    incurred_total: f64,
    verbose: bool,
    log: Vec<CombinerLogEntry>,
}

impl CombinerState {
    pub fn new(experts: usize, epsilon: f64, diam: f64, seed: u64) -> Result<Self> {
        if experts == 0 {
            return Err(invalid("combiner needs at least one expert"));
        }
        if !(epsilon > 0.0) {
            return Err(invalid("combiner learning rate must be positive"));
        }
        if !(diam > 0.0 && diam.is_finite()) {
            return Err(invalid("combiner diameter must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let active = rng.random_range(0..experts);
        Ok(Self {
            log_weights: vec![0.0; experts],
            active,
            epsilon,
            rate: hedge_rate(epsilon),
            diam,
            rng,
            steps: 0,
            switches: 0,
            switching_total: 0.0,
            incurred_total: 0.0,
            verbose: false,
            log: Vec::new(),
        })
    }

    pub fn with_verbose(mut self, verbose: bool) -> Self {
        self.verbose = verbose;
        self
    }

    pub fn experts(&self) -> usize {
        self.log_weights.len()
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn switches(&self) -> usize {
        self.switches
    }

    pub fn switching_total(&self) -> f64 {
        self.switching_total
    }

    pub fn incurred_total(&self) -> f64 {
        self.incurred_total
    }

    pub fn log(&self) -> &[CombinerLogEntry] {
        &self.log
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_weights.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    /// One step after every expert served the same request. `switch_cost(i, j)`
    /// is the distance between the post-step configurations of experts `i` and `j`.
    pub fn step(
        &mut self,
        costs: &[f64],
        switch_cost: impl Fn(usize, usize) -> f64,
    ) -> Result<CombinerStep> {
        if costs.len() != self.experts() {
            return Err(invalid(format!(
                "expected {} expert costs, got {}",
                self.experts(),
                costs.len()
            )));
        }
        if costs.iter().any(|c| !(*c >= 0.0)) {
            return Err(invalid("expert costs must be nonnegative"));
        }
        let prev_active = self.active;
        let mut incurred = costs[prev_active];
        let before = self.probabilities();
        for (lw, c) in self.log_weights.iter_mut().zip(costs) {
            *lw -= self.rate * c / self.diam;
        }
        let after = self.probabilities();

        let keep = (after[prev_active] / before[prev_active]).min(1.0);
        let mut switched = false;
        if self.experts() > 1 && self.rng.random::<f64>() >= keep {
            let gains: Vec<f64> = before
                .iter()
                .zip(&after)
                .map(|(b, a)| (a - b).max(0.0))
                .collect();
            let total: f64 = gains.iter().sum();
            if total > 0.0 {
                let mut x = self.rng.random::<f64>() * total;
                let mut pick = gains.iter().rposition(|&g| g > 0.0).unwrap_or(prev_active);
                for (j, g) in gains.iter().enumerate() {
                    if x < *g {
                        pick = j;
                        break;
                    }
                    x -= g;
                }
                if pick != prev_active {
                    let cost = switch_cost(prev_active, pick);
                    incurred += cost;
                    self.switching_total += cost;
                    self.switches += 1;
                    self.active = pick;
                    switched = true;
                }
            }
        }
        self.incurred_total += incurred;
        if self.verbose {
            self.log.push(CombinerLogEntry {
                step: self.steps,
                active: self.active,
                switched_from: switched.then_some(prev_active),
                switch_cost: if switched { incurred - costs[prev_active] } else { 0.0 },
                probabilities: after,
            });
        }
        self.steps += 1;
        Ok(CombinerStep {
            active: self.active,
            incurred,
            switched,
        })
    }
}

/// Combiner step with switching costs measured between expert configurations.
pub fn combiner_step(
    state: &mut CombinerState,
    costs: &[f64],
    configs: &[Configuration],
    problem: Problem,
    space: &NormedSpace,
) -> Result<CombinerStep> {
    if configs.len() != state.experts() {
        return Err(invalid("one configuration per expert is required"));
    }
    state.step(costs, |i, j| {
        switching_cost(problem, &configs[i], &configs[j], space).unwrap_or(f64::INFINITY)
    })
}
