//! Smoothed request generators with exact σ certificates, the offline lower
//! bounds they imply, and the net resolution derived from them.
//!
//! An instance is σ-smooth when every marginal of every request has density
//! at most `1/(σ · vol(B_M))`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::lowerbound::HypercubeInstance;
use crate::metric::{Ball, Point};
use crate::net::{fmt_point, parse_point};
use crate::problems::{Problem, Request};

/// Where the perturbation ball of a `PerturbedBase` generator is centred.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSchedule {
    /// The centre of `B_M`.
    Center,
    /// Cycles through the `2^m` sign patterns, pushed to the inner boundary.
    Corners,
    /// Follows the last realized request, pulled into the inner ball.
    Walk,
    /// Cycles through the given points.
    Points(Vec<Point>),
}

impl fmt::Display for BaseSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseSchedule::Center => f.write_str("center"),
            BaseSchedule::Corners => f.write_str("corners"),
            BaseSchedule::Walk => f.write_str("walk"),
            BaseSchedule::Points(ps) => {
                let s: Vec<String> = ps.iter().map(|p| fmt_point(p)).collect();
                f.write_str(&s.join(";"))
            }
        }
    }
}

impl FromStr for BaseSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "center" => Ok(BaseSchedule::Center),
            "corners" => Ok(BaseSchedule::Corners),
            "walk" => Ok(BaseSchedule::Walk),
            "" => Err(Error::Config("empty base schedule".into())),
            list => list
                .split(';')
                .map(|p| parse_point(p.trim(), 0))
                .collect::<Result<Vec<_>>>()
                .map(BaseSchedule::Points),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    UniformBall,
    PerturbedBase { rho: f64, base: BaseSchedule },
    LowerBoundHypercube { k: usize },
    /// Replays fixed requests; carries no σ certificate.
    Scripted { requests: Vec<Request> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorDescriptor {
    pub kind: GeneratorKind,
    pub problem: Problem,
    /// Points per chasing request; ignored for the other problems.
    pub set_size: usize,
}

impl GeneratorDescriptor {
    pub fn new(kind: GeneratorKind, problem: Problem, set_size: usize) -> Self {
        Self {
            kind,
            problem,
            set_size,
        }
    }

    pub fn uniform(problem: Problem, set_size: usize) -> Self {
        Self::new(GeneratorKind::UniformBall, problem, set_size)
    }

    /// σ if the descriptor is certified on `ball`, `None` otherwise.
    pub fn certificate(&self, ball: &Ball) -> Option<f64> {
        sigma_of_generator(self, ball).ok()
    }
}

/// The σ certified by a generator on `ball`.
pub fn sigma_of_generator(desc: &GeneratorDescriptor, ball: &Ball) -> Result<f64> {
    match &desc.kind {
        GeneratorKind::UniformBall => Ok(1.0),
        GeneratorKind::PerturbedBase { rho, .. } => {
            let r = ball.radius();
            if !(*rho > 0.0) {
                return Err(invalid("perturbation radius must be positive"));
            }
            if *rho > r {
                return Err(invalid(format!("perturbation radius {rho} exceeds the ball radius {r}")));
            }
            Ok((rho / r).powi(ball.dim() as i32))
        }
        GeneratorKind::LowerBoundHypercube { k } => {
            let hc = HypercubeInstance::new(*k)?;
            if ball != hc.ball() {
                return Err(invalid("the hypercube generator lives on the unit cube under the max norm"));
            }
            Ok(hc.sigma())
        }
        GeneratorKind::Scripted { .. } => Err(invalid("scripted requests carry no smoothness certificate")),
    }
}

fn base_point(schedule: &BaseSchedule, ball: &Ball, inner: f64, history: &[Request]) -> Result<Point> {
    let c = ball.center();
    let space = ball.space();
    let scale_to = |dir: &[f64], len: f64| -> Point {
        let n = space.norm().length(dir.iter().copied());
        if n == 0.0 {
            c.to_vec()
        } else {
            c.iter().zip(dir).map(|(ci, di)| ci + di * len / n).collect()
        }
    };
    let p = match schedule {
        BaseSchedule::Center => c.to_vec(),
        BaseSchedule::Corners => {
            let m = ball.dim();
            let t = history.len();
            let dir: Vec<f64> = (0..m)
                .map(|d| if (t >> (d % usize::BITS as usize)) & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            scale_to(&dir, inner)
        }
        BaseSchedule::Walk => match history.last() {
            None => c.to_vec(),
            Some(r) => {
                let x = r.points()[0];
                let dir: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
                let n = space.norm().length(dir.iter().copied());
                scale_to(&dir, n.min(inner))
            }
        },
        BaseSchedule::Points(ps) => {
            if ps.is_empty() {
                return Err(invalid("empty base point list"));
            }
            let p = ps[history.len() % ps.len()].clone();
            space.check(&p)?;
            p
        }
    };
    if space.dist(&p, c) > inner * (1.0 + 1e-12) + 1e-15 {
        return Err(invalid(format!(
            "base point {} lies outside the inner ball of radius {inner}",
            fmt_point(&p)
        )));
    }
    Ok(p)
}

/// Draws the next request given the realized history.
pub fn sample_request<R: Rng + ?Sized>(
    desc: &GeneratorDescriptor,
    ball: &Ball,
    history: &[Request],
    rng: &mut R,
) -> Result<Request> {
    let problem = desc.problem;
    match &desc.kind {
        GeneratorKind::Scripted { requests } => {
            let r = requests
                .get(history.len())
                .ok_or_else(|| invalid("scripted requests exhausted"))?;
            if r.problem() != problem {
                return Err(invalid("scripted request of the wrong problem"));
            }
            Ok(r.clone())
        }
        GeneratorKind::LowerBoundHypercube { k } => {
            let hc = HypercubeInstance::new(*k)?;
            Ok(hc.sample_request(problem, rng))
        }
        GeneratorKind::UniformBall => {
            let mut draw = || ball.sample_uniform(rng);
            Ok(build_request(problem, desc.set_size, &mut draw)?)
        }
        GeneratorKind::PerturbedBase { rho, base } => {
            sigma_of_generator(desc, ball)?;
            let inner = ball.radius() - rho;
            let b = base_point(base, ball, inner, history)?;
            let mut draw = || ball.sample_in(&b, *rho, rng);
            Ok(build_request(problem, desc.set_size, &mut draw)?)
        }
    }
}

fn build_request(problem: Problem, set_size: usize, draw: &mut dyn FnMut() -> Point) -> Result<Request> {
    Ok(match problem {
        Problem::KServer => Request::Server(draw()),
        Problem::KTaxi => {
            let from = draw();
            let to = draw();
            Request::Taxi { from, to }
        }
        Problem::Chasing => {
            if set_size == 0 {
                return Err(invalid("chasing requests need at least one point"));
            }
            Request::SetChase((0..set_size).map(|_| draw()).collect())
        }
    })
}

/// `horizon` requests from a fixed descriptor.
pub fn generate<R: Rng + ?Sized>(
    desc: &GeneratorDescriptor,
    ball: &Ball,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<Request>> {
    let mut history = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let r = sample_request(desc, ball, &history, rng)?;
        history.push(r);
    }
    Ok(history)
}

type Policy<'a> = Box<dyn FnMut(&[Request]) -> Option<GeneratorDescriptor> + Send + 'a>;

/// An adversary choosing each step's generator after seeing the realized
/// requests so far. It never sees the algorithm's random choices.
pub struct AdaptiveAdversary<'a> {
    declared_sigma: f64,
    policy: Policy<'a>,
}

impl<'a> AdaptiveAdversary<'a> {
    pub fn new(declared_sigma: f64, policy: impl FnMut(&[Request]) -> Option<GeneratorDescriptor> + Send + 'a) -> Self {
        Self {
            declared_sigma,
            policy: Box::new(policy),
        }
    }

    pub fn declared_sigma(&self) -> f64 {
        self.declared_sigma
    }

    /// Runs the adversary for at most `horizon` steps. Fails if a step's
    /// generator certifies less smoothness than declared.
    pub fn generate<R: Rng + ?Sized>(&mut self, ball: &Ball, horizon: usize, rng: &mut R) -> Result<Vec<Request>> {
        let mut history = Vec::new();
        while history.len() < horizon {
            let Some(desc) = (self.policy)(&history) else {
                break;
            };
            let sigma = sigma_of_generator(&desc, ball)?;
            if sigma < self.declared_sigma * (1.0 - 1e-12) {
                return Err(invalid(format!(
                    "step {} certifies sigma {sigma} below the declared {}",
                    history.len(),
                    self.declared_sigma
                )));
            }
            let r = sample_request(&desc, ball, &history, rng)?;
            history.push(r);
        }
        Ok(history)
    }
}

fn check_sigma(sigma: f64, k: usize, m: usize) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(invalid(format!("sigma must lie in (0, 1], got {sigma}")));
    }
    if k == 0 || m == 0 {
        return Err(invalid("k and m must be positive"));
    }
    Ok(())
}

/// Separation scale δ used in the offline lower bounds:
/// `R·(σ/8k)^{1/m}` for k-server and k-taxi, `R·(σ/2k²)^{1/m}` for chasing.
pub fn separation_delta(problem: Problem, sigma: f64, k: usize, m: usize, radius: f64) -> Result<f64> {
    check_sigma(sigma, k, m)?;
    let k = k as f64;
    let denom = match problem {
        Problem::KServer | Problem::KTaxi => 8.0 * k,
        Problem::Chasing => 2.0 * k * k,
    };
    Ok(radius * (sigma / denom).powf(1.0 / m as f64))
}

/// Expected offline cost per request on σ-smooth instances, up to an
/// additive constant: `δ/8` for k-server and k-taxi, `δ/2` for chasing.
pub fn opt_amortized_bound(problem: Problem, sigma: f64, k: usize, m: usize, radius: f64) -> Result<f64> {
    let delta = separation_delta(problem, sigma, k, m, radius)?;
    Ok(match problem {
        Problem::KServer | Problem::KTaxi => delta / 8.0,
        Problem::Chasing => delta / 2.0,
    })
}

/// Net resolution `η = 3δ`. Values above `R` call for the singleton net.
pub fn choose_eta(problem: Problem, sigma: f64, k: usize, m: usize, radius: f64) -> Result<f64> {
    Ok(3.0 * separation_delta(problem, sigma, k, m, radius)?)
}

/// Replays the greedy construction of a δ-separated subset over a window of
/// `4k` requests. k-server inserts a request point while the subset stays
/// δ-separated; k-taxi inserts a request when its pickup is more than δ from
/// the drop-offs of all earlier requests of the window. Returns the final size
/// and whether each step inserted.
pub fn delta_separated_growth(
    problem: Problem,
    window: &[Request],
    k: usize,
    delta: f64,
    ball: &Ball,
) -> Result<(usize, Vec<bool>)> {
    if window.len() != 4 * k {
        return Err(invalid(format!("window must hold 4k = {} requests, got {}", 4 * k, window.len())));
    }
    let space = ball.space();
    let mut kept: Vec<&[f64]> = Vec::new();
    let mut log = Vec::with_capacity(window.len());
    match problem {
        Problem::KServer => {
            for r in window {
                let Request::Server(x) = r else {
                    return Err(invalid("k-server window holds a non-server request"));
                };
                let ok = kept.iter().all(|s| space.dist(s, x) > delta);
                if ok {
                    kept.push(x);
                }
                log.push(ok);
            }
        }
        Problem::KTaxi => {
            let mut dropoffs: Vec<&[f64]> = Vec::new();
            for r in window {
                let Request::Taxi { from, to } = r else {
                    return Err(invalid("k-taxi window holds a non-taxi request"));
                };
                let ok = dropoffs.iter().all(|b| space.dist(b, from) > delta);
                if ok {
                    kept.push(from);
                }
                dropoffs.push(to);
                log.push(ok);
            }
        }
        Problem::Chasing => return Err(invalid("the separated-subset diagnostic covers k-server and k-taxi")),
    }
    Ok((kept.len(), log))
}
