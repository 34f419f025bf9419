//! Scenario files, seeded trials and sweeps, and the CSV rows they produce.
//!
//! A scenario is a flat `key = value` file with `#` comments:
//!
//! ```text
//! problem = kserver
//! k = 2
//! m = 1
//! norm = l2
//! radius = 1
//! generator = perturbed
//! rho = 0.1
//! base = walk
//! algorithm = wrapped:wfa
//! T = 500
//! seeds = 0..10
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::combiner::CombinerLogEntry;
use crate::error::{Error, Result};
use crate::lowerbound::{offline_ffd_strategy, HypercubeInstance};
use crate::metric::{Ball, Norm, NormedSpace, Point};
use crate::net::{fmt_point, parse_point, size_bound};
use crate::offline::{exact_feasible, opt};
use crate::online::ensemble::net_for_eta;
use crate::online::{AlgorithmName, DirectGreedy, Ensemble, OnlineAlgorithm, ProjectionWrapper, SigmaMode};
use crate::problems::{replay, Configuration, Instance, Problem, Trace};
use crate::smoothing::{
    choose_eta, generate, opt_amortized_bound, sigma_of_generator, BaseSchedule, GeneratorDescriptor, GeneratorKind,
};

/// Environment variable holding the number of worker threads for sweeps.
pub const WORKERS_ENV: &str = "SMOOTHED_WORKERS";

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Uniform,
    Perturbed { rho: f64, base: BaseSchedule },
    Hypercube,
    /// Replays the requests of a trace file.
    Scripted { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSpec {
    /// σ known to the algorithm: the given value, or the generator's certificate.
    Known(Option<f64>),
    Unknown { floor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub problem: Problem,
    pub k: usize,
    pub m: usize,
    pub norm: Norm,
    pub radius: f64,
    pub center: Option<Point>,
    pub generator: GeneratorSpec,
    pub algorithm: AlgorithmName,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub sigma: SigmaSpec,
    pub burn_in: usize,
    /// Points per chasing request, `k` when absent.
    pub set_size: Option<usize>,
    /// Overrides the net resolution of wrapped algorithms.
    pub eta: Option<f64>,
    /// Directory against which a relative trace path is resolved.
    pub base_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "problem", "k", "m", "norm", "radius", "center", "generator", "rho", "base", "algorithm", "T", "seeds",
    "sigma_mode", "sigma", "sigma_floor", "burn_in", "set_size", "trace", "eta",
];

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| config_err(format!("bad seed range {s:?}")))?;
        let b: u64 = b.trim().parse().map_err(|_| config_err(format!("bad seed range {s:?}")))?;
        return Ok((a..b).collect());
    }
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().map_err(|_| config_err(format!("bad seed {x:?}"))))
        .collect()
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| config_err(format!("bad value for {key}: {v:?}")))
}

/// Splits a flat key-value file into a map. Rejects unknown and repeated keys.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(config_err(format!("line {}: unknown key {k:?}", i + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(config_err(format!("line {}: duplicate key {k:?}", i + 1)));
        }
    }
    Ok(map)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let get = |k: &str| kv.get(k).map(String::as_str);
        let need = |k: &str| get(k).ok_or_else(|| config_err(format!("missing key {k}")));
        let problem: Problem = need("problem")?.parse().map_err(|_| config_err("bad problem"))?;
        let k: usize = parse_num("k", need("k")?)?;
        let generator = match get("generator").unwrap_or("uniform") {
            "uniform" => GeneratorSpec::Uniform,
            "perturbed" => GeneratorSpec::Perturbed {
                rho: parse_num("rho", need("rho")?)?,
                base: get("base").unwrap_or("center").parse().map_err(|e: Error| config_err(e.to_string()))?,
            },
            "hypercube" => GeneratorSpec::Hypercube,
            "scripted" => GeneratorSpec::Scripted {
                path: PathBuf::from(need("trace")?),
            },
            other => return Err(config_err(format!("unknown generator {other:?}"))),
        };
        let sigma = match get("sigma_mode").unwrap_or("known") {
            "known" => SigmaSpec::Known(get("sigma").map(|v| parse_num("sigma", v)).transpose()?),
            "unknown" => SigmaSpec::Unknown {
                floor: get("sigma_floor").map(|v| parse_num("sigma_floor", v)).transpose()?.unwrap_or(0.0),
            },
            other => return Err(config_err(format!("unknown sigma_mode {other:?}"))),
        };
        let center = get("center")
            .map(|v| parse_point(v, 0).map_err(|e| config_err(e.to_string())))
            .transpose()?;
        let s = Self {
            problem,
            k,
            m: get("m").map(|v| parse_num("m", v)).transpose()?.unwrap_or(1),
            norm: get("norm").unwrap_or("l2").parse().map_err(|_| config_err("bad norm"))?,
            radius: get("radius").map(|v| parse_num("radius", v)).transpose()?.unwrap_or(1.0),
            center,
            generator,
            algorithm: need("algorithm")?.parse().map_err(|e: Error| config_err(e.to_string()))?,
            horizon: parse_num("T", need("T")?)?,
            seeds: parse_seeds(get("seeds").unwrap_or("0"))?,
            sigma,
            burn_in: get("burn_in").map(|v| parse_num("burn_in", v)).transpose()?.unwrap_or(0),
            set_size: get("set_size").map(|v| parse_num("set_size", v)).transpose()?,
            eta: get("eta").map(|v| parse_num("eta", v)).transpose()?,
            base_dir: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::parse(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(config_err("k must be at least 1"));
        }
        if self.m == 0 {
            return Err(config_err("m must be at least 1"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(config_err("radius must be positive"));
        }
        if let Some(c) = &self.center {
            if c.len() != self.m {
                return Err(config_err(format!("center has {} coordinates, m = {}", c.len(), self.m)));
            }
        }
        if self.horizon == 0 {
            return Err(config_err("T must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("no seeds"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(config_err("seeds must be distinct"));
        }
        if self.burn_in >= self.horizon && !matches!(self.generator, GeneratorSpec::Scripted { .. }) {
            return Err(config_err("burn_in must be smaller than T"));
        }
        if self.set_size == Some(0) {
            return Err(config_err("set_size must be positive"));
        }
        if let SigmaSpec::Unknown { floor } = self.sigma {
            if !matches!(self.algorithm, AlgorithmName::Ensemble(_)) {
                return Err(config_err("sigma_mode = unknown needs an ensemble algorithm"));
            }
            if self.problem == Problem::KTaxi && !(floor > 0.0) {
                return Err(config_err("k-taxi with unknown sigma needs sigma_floor > 0"));
            }
        }
        if matches!(self.generator, GeneratorSpec::Hypercube) && self.k < 2 {
            return Err(config_err("the hypercube generator needs k >= 2"));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back the same scenario.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("problem", self.problem.to_string());
        kv("k", self.k.to_string());
        kv("m", self.m.to_string());
        kv("norm", self.norm.to_string());
        kv("radius", self.radius.to_string());
        if let Some(c) = &self.center {
            kv("center", fmt_point(c));
        }
        match &self.generator {
            GeneratorSpec::Uniform => kv("generator", "uniform".into()),
            GeneratorSpec::Perturbed { rho, base } => {
                kv("generator", "perturbed".into());
                kv("rho", rho.to_string());
                kv("base", base.to_string());
            }
            GeneratorSpec::Hypercube => kv("generator", "hypercube".into()),
            GeneratorSpec::Scripted { path } => {
                kv("generator", "scripted".into());
                kv("trace", path.display().to_string());
            }
        }
        kv("algorithm", self.algorithm.to_string());
        kv("T", self.horizon.to_string());
        kv("seeds", self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
        match self.sigma {
            SigmaSpec::Known(s) => {
                kv("sigma_mode", "known".into());
                if let Some(s) = s {
                    kv("sigma", s.to_string());
                }
            }
            SigmaSpec::Unknown { floor } => {
                kv("sigma_mode", "unknown".into());
                kv("sigma_floor", floor.to_string());
            }
        }
        kv("burn_in", self.burn_in.to_string());
        if let Some(s) = self.set_size {
            kv("set_size", s.to_string());
        }
        if let Some(e) = self.eta {
            kv("eta", e.to_string());
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical text, without seeds.
    pub fn hash(&self) -> String {
        let mut s = self.clone();
        s.seeds.clear();
        let digest = Sha256::digest(s.to_config_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// The ball requests are drawn from.
    pub fn ball(&self) -> Result<Ball> {
        if matches!(self.generator, GeneratorSpec::Hypercube) {
            return Ok(HypercubeInstance::new(self.k)?.ball().clone());
        }
        let space = NormedSpace::new(self.m, self.norm)?;
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; self.m]);
        Ball::new(space, center, self.radius)
    }

    pub fn descriptor(&self) -> Result<GeneratorDescriptor> {
        let kind = match &self.generator {
            GeneratorSpec::Uniform => GeneratorKind::UniformBall,
            GeneratorSpec::Perturbed { rho, base } => GeneratorKind::PerturbedBase {
                rho: *rho,
                base: base.clone(),
            },
            GeneratorSpec::Hypercube => GeneratorKind::LowerBoundHypercube { k: self.k },
            GeneratorSpec::Scripted { .. } => GeneratorKind::Scripted {
                requests: self.load_trace()?.instance.requests,
            },
        };
        Ok(GeneratorDescriptor::new(kind, self.problem, self.set_size.unwrap_or(self.k)))
    }

    fn load_trace(&self) -> Result<Trace> {
        let GeneratorSpec::Scripted { path } = &self.generator else {
            return Err(config_err("not a scripted scenario"));
        };
        let full = match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.clone(),
        };
        let text = std::fs::read_to_string(&full)
            .map_err(|e| config_err(format!("cannot read trace {}: {e}", full.display())))?;
        let trace = Trace::from_text(&text)?;
        if trace.instance.problem != self.problem {
            return Err(config_err("trace problem differs from the scenario"));
        }
        Ok(trace)
    }

    /// Initial configuration: all servers at the ball centre, or at the
    /// first `k` vertices for the hypercube generator.
    pub fn initial(&self, ball: &Ball) -> Result<Configuration> {
        if matches!(self.generator, GeneratorSpec::Hypercube) {
            return Ok(HypercubeInstance::new(self.k)?.initial(self.problem));
        }
        let n = if self.problem == Problem::Chasing { 1 } else { self.k };
        Ok(Configuration::new(vec![ball.center().to_vec(); n]))
    }

    /// The σ certificate of the generator, if it has one.
    pub fn certificate(&self) -> Result<Option<f64>> {
        if matches!(self.generator, GeneratorSpec::Scripted { .. }) {
            return Ok(None);
        }
        let ball = self.ball()?;
        sigma_of_generator(&self.descriptor()?, &ball).map(Some)
    }

    /// σ the algorithm is tuned to in known mode.
    pub fn tuning_sigma(&self) -> Result<Option<f64>> {
        match self.sigma {
            SigmaSpec::Known(Some(s)) => Ok(Some(s)),
            SigmaSpec::Known(None) => self.certificate(),
            SigmaSpec::Unknown { .. } => Ok(None),
        }
    }

    /// Net resolution for wrapped algorithms.
    pub fn net_eta(&self) -> Result<f64> {
        if let Some(e) = self.eta {
            return Ok(e);
        }
        let sigma = self
            .tuning_sigma()?
            .ok_or_else(|| config_err("no sigma to choose eta from; set sigma or eta"))?;
        let ball = self.ball()?;
        choose_eta(self.problem, sigma, self.k, ball.dim(), ball.radius())
    }

    /// Changes one axis of the scenario.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut s = self.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(config_err(format!("axis value {v} is not a positive integer")))
            }
        };
        match axis {
            Axis::Sigma => {
                if !(value > 0.0 && value <= 1.0) {
                    return Err(config_err(format!("sigma {value} outside (0, 1]")));
                }
                let rho = s.radius * value.powf(1.0 / s.m as f64);
                let base = match &s.generator {
                    GeneratorSpec::Perturbed { base, .. } => base.clone(),
                    GeneratorSpec::Uniform => BaseSchedule::Center,
                    _ => return Err(config_err("sigma sweeps need a uniform or perturbed generator")),
                };
                s.generator = GeneratorSpec::Perturbed { rho, base };
            }
            Axis::K => s.k = as_count(value)?,
            Axis::T => s.horizon = as_count(value)?,
            Axis::M => {
                s.m = as_count(value)?;
                if s.center.as_ref().is_some_and(|c| c.len() != s.m) {
                    s.center = None;
                }
            }
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Sigma,
    K,
    T,
    M,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sigma" => Ok(Axis::Sigma),
            "k" => Ok(Axis::K),
            "T" => Ok(Axis::T),
            "m" => Ok(Axis::M),
            other => Err(config_err(format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_hash: String,
    pub axis_value: Option<f64>,
    pub seed: u64,
    pub problem: Problem,
    pub k: usize,
    pub m: usize,
    pub algorithm: String,
    /// Finite algorithm filling the net slot, `none` when running directly.
    pub finite_algorithm: String,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub net_size: Option<usize>,
    pub steps: usize,
    pub burn_in: usize,
    pub online_cost: f64,
    pub opt_cost: f64,
    /// `exact` or `upper_bound`.
    pub opt_kind: &'static str,
    pub ratio: f64,
    pub opt_per_request: f64,
    pub opt_bound: Option<f64>,
    pub detour_total: f64,
    pub log_k_over_sigma: Option<f64>,
    pub runtime_ms: Option<f64>,
}

fn opt_field<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_else(|| "none".into())
}

impl ResultRow {
    pub const HEADER: &'static str = "scenario_hash,axis_value,seed,problem,k,m,algorithm,finite_algorithm,sigma,eta,net_size,T,burn_in,online_cost,opt_cost,opt_kind,ratio,opt_per_request,opt_bound,detour_total,log_k_over_sigma";

    pub fn header(with_runtime: bool) -> String {
        if with_runtime {
            format!("{},runtime_ms", Self::HEADER)
        } else {
            Self::HEADER.to_string()
        }
    }

    pub fn to_csv(&self, with_runtime: bool) -> String {
        let mut s = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario_hash,
            opt_field(&self.axis_value),
            self.seed,
            self.problem,
            self.k,
            self.m,
            self.algorithm,
            self.finite_algorithm,
            opt_field(&self.sigma),
            opt_field(&self.eta),
            opt_field(&self.net_size),
            self.steps,
            self.burn_in,
            self.online_cost,
            self.opt_cost,
            self.opt_kind,
            self.ratio,
            self.opt_per_request,
            opt_field(&self.opt_bound),
            self.detour_total,
            opt_field(&self.log_k_over_sigma),
        );
        if with_runtime {
            let _ = write!(s, ",{}", opt_field(&self.runtime_ms));
        }
        s
    }
}

pub fn to_csv(rows: &[ResultRow], with_runtime: bool) -> String {
    let mut out = ResultRow::header(with_runtime);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv(with_runtime));
        out.push('\n');
    }
    out
}

/// A row plus combiner diagnostics for ensemble runs.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub row: ResultRow,
    pub combiner_log: Option<Vec<CombinerLogEntry>>,
}

fn request_seed(seed: u64) -> u64 {
    seed
}

fn algorithm_seed(seed: u64) -> u64 {
    seed ^ 0xA1B2_C3D4_E5F6_0718
}

/// Builds the instance realized by `seed`.
pub fn realize(scenario: &Scenario, seed: u64) -> Result<Instance> {
    if let GeneratorSpec::Scripted { .. } = scenario.generator {
        let trace = scenario.load_trace()?;
        return Ok(trace.instance);
    }
    let ball = scenario.ball()?;
    let desc = scenario.descriptor()?;
    let mut rng = ChaCha8Rng::seed_from_u64(request_seed(seed));
    let requests = generate(&desc, &ball, scenario.horizon, &mut rng)?;
    let initial = scenario.initial(&ball)?;
    Instance::new(scenario.problem, scenario.k, ball, initial, requests)
}

pub fn run_trial(scenario: &Scenario, seed: u64) -> Result<ResultRow> {
    run_trial_detailed(scenario, seed, false).map(|o| o.row)
}

pub fn run_trial_detailed(scenario: &Scenario, seed: u64, verbose: bool) -> Result<TrialOutput> {
    let started = Instant::now();
    let instance = realize(scenario, seed)?;
    let ball = instance.ball.clone();
    let problem = scenario.problem;
    let alg_seed = algorithm_seed(seed);

    let mut eta = None;
    let mut net_size = None;
    let mut finite = "none".to_string();
    let mut alg: Box<dyn OnlineAlgorithm> = match scenario.algorithm {
        AlgorithmName::Direct => Box::new(DirectGreedy::new(problem, ball.clone(), instance.initial.positions.clone())?),
        AlgorithmName::Wrapped(kind) => {
            // The hypercube's vertex set is the natural net of its support.
            let net = match (&scenario.generator, scenario.eta) {
                (GeneratorSpec::Hypercube, None) => HypercubeInstance::new(scenario.k)?.vertex_net()?,
                _ => net_for_eta(&ball, scenario.net_eta()?)?,
            };
            eta = Some(net.eta());
            net_size = Some(net.len());
            finite = kind.to_string();
            Box::new(ProjectionWrapper::build(kind, problem, Arc::new(net), &instance.initial, alg_seed)?)
        }
        AlgorithmName::Ensemble(kind) => {
            let mode = match scenario.sigma {
                SigmaSpec::Unknown { floor } => SigmaMode::Unknown { floor },
                SigmaSpec::Known(_) => SigmaMode::Known(
                    scenario
                        .tuning_sigma()?
                        .ok_or_else(|| config_err("known sigma mode without a sigma"))?,
                ),
            };
            let mut ens = Ensemble::build(kind, problem, scenario.k, ball.clone(), &instance.initial, mode, alg_seed)?;
            ens.set_verbose(verbose);
            if let Some(fine) = ens.experts().iter().min_by(|a, b| a.eta.total_cmp(&b.eta)) {
                eta = Some(fine.eta);
                net_size = Some(fine.alg.net().len());
            }
            finite = kind.to_string();
            Box::new(ens)
        }
    };
    for r in &instance.requests {
        alg.serve(r)?;
    }

    let steps = instance.len();
    let burn_in = scenario.burn_in.min(steps);
    let (opt_decisions, opt_kind) = if exact_feasible(problem, steps, scenario.k) {
        (opt(&instance)?.decisions, "exact")
    } else if matches!(scenario.generator, GeneratorSpec::Hypercube) {
        let hc = HypercubeInstance::new(scenario.k)?;
        (offline_ffd_strategy(&hc, &instance)?.1, "upper_bound")
    } else {
        return Err(config_err(format!(
            "exact OPT is infeasible at T = {steps}, k = {} and no upper bound applies to this generator",
            scenario.k
        )));
    };
    let (_, opt_ledger) = replay(instance.space(), &instance.initial, &instance.requests, &opt_decisions)?;
    let opt_cost = opt_ledger.total_from(burn_in);
    let mut online_cost = alg.ledger().total_from(burn_in);
    if burn_in == 0 {
        online_cost += alg.initial_cost();
    }
    let sigma = scenario.certificate()?;
    let counted = (steps - burn_in).max(1);
    let opt_bound = sigma
        .map(|s| opt_amortized_bound(problem, s, scenario.k, ball.dim(), ball.radius()))
        .transpose()?;
    Ok(TrialOutput {
        row: ResultRow {
            scenario_hash: scenario.hash(),
            axis_value: None,
            seed,
            problem,
            k: scenario.k,
            m: ball.dim(),
            algorithm: alg.name(),
            finite_algorithm: finite,
            sigma,
            eta,
            net_size,
            steps,
            burn_in,
            online_cost,
            opt_cost,
            opt_kind,
            ratio: online_cost / opt_cost,
            opt_per_request: opt_cost / counted as f64,
            opt_bound,
            detour_total: alg.ledger().total_detour(),
            log_k_over_sigma: sigma.map(|s| (scenario.k as f64 / s).ln()),
            runtime_ms: Some(started.elapsed().as_secs_f64() * 1e3),
        },
        combiner_log: verbose.then(|| alg.combiner_log().map(<[_]>::to_vec)).flatten(),
    })
}

/// Thread pool sized by [`WORKERS_ENV`], or rayon's default.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| config_err(format!("{WORKERS_ENV} must be a positive integer")))?;
        if n == 0 {
            return Err(config_err(format!("{WORKERS_ENV} must be a positive integer")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| config_err(e.to_string()))
}

/// Runs every seed of a scenario in parallel; rows come back in seed order.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<ResultRow>> {
    let pool = worker_pool()?;
    let mut rows: Vec<ResultRow> = pool.install(|| {
        scenario
            .seeds
            .par_iter()
            .map(|&s| run_trial(scenario, s))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by_key(|r| r.seed);
    Ok(rows)
}

/// Runs the scenario at every axis value and seed. Rows are sorted by
/// (axis value, seed).
pub fn sweep(template: &Scenario, axis: Axis, values: &[f64]) -> Result<Vec<ResultRow>> {
    let scenarios = values
        .iter()
        .map(|&v| template.with_axis(axis, v).map(|s| (v, s)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(f64, &Scenario, u64)> = scenarios
        .iter()
        .flat_map(|(v, s)| s.seeds.iter().map(move |&seed| (*v, s, seed)))
        .collect();
    let pool = worker_pool()?;
    let mut rows: Vec<ResultRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, s, seed)| {
                run_trial(s, seed).map(|mut r| {
                    r.axis_value = Some(v);
                    r
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by(|a, b| {
        a.axis_value
            .unwrap_or(0.0)
            .total_cmp(&b.axis_value.unwrap_or(0.0))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

/// Parses a comma-separated list of axis values.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| parse_num("values", x))
        .collect()
}

/// Net check for a scenario: builds the net the wrapped algorithm would use
/// and tests it on `samples` uniform points of the ball.
pub fn verify_scenario_net(scenario: &Scenario, samples: usize, seed: u64) -> Result<crate::net::NetReport> {
    let ball = scenario.ball()?;
    let eta = scenario.net_eta()?;
    let net = net_for_eta(&ball, eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> = (0..samples).map(|_| ball.sample_uniform(&mut rng)).collect();
    let mut report = crate::net::verify_net(&net, pts.iter());
    if eta > ball.radius() {
        // The singleton net is dense at any η ≥ R and trivially separated.
        report.size_bound = size_bound(ball.radius(), eta, ball.dim()).max(1.0);
    }
    Ok(report)
}
