//! Worked examples with values checked against independent oracles.

mod common;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{belady_faults, brute_kserver, dist, mean_se, request_points, sample_ball};
use smoothed_core::harness::{run_trial, Scenario};
use smoothed_core::lowerbound::{lowerbound_algorithm, ratio_experiment, HypercubeInstance};
use smoothed_core::metric::{Ball, Norm, NormedSpace};
use smoothed_core::net::{verify_net, Net};
use smoothed_core::online::ensemble::net_for_eta;
use smoothed_core::online::{AlgorithmName, FiniteKind, FiniteOnlineAlgorithm, Marking, NetRequest, OnlineAlgorithm, ProjectionWrapper};
use smoothed_core::problems::{Configuration, Instance, Problem, Request};
use smoothed_core::smoothing::{
    choose_eta, generate, sigma_of_generator, BaseSchedule, GeneratorDescriptor, GeneratorKind,
};

#[test]
fn square_net_under_linf() {
    let ball = Ball::centered(NormedSpace::new(2, Norm::Linf).unwrap(), 1.0).unwrap();
    let net = Net::build(ball, 0.5).unwrap();
    assert!(net.len() <= 36);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<Vec<f64>> = (0..100_000).map(|_| sample_ball(Norm::Linf, &[0.0, 0.0], 1.0, &mut rng)).collect();
    let report = verify_net(&net, samples.iter());
    assert!(report.all_ok(), "{report:?}");
    for x in samples.iter().take(10_000) {
        let nearest = net.points().iter().map(|p| dist(Norm::Linf, x, p)).fold(f64::INFINITY, f64::min);
        assert!(nearest <= 0.5);
    }
}

/// `n` unit vectors, pairwise at Linf distance 1.
fn uniform_net(n: usize) -> Arc<Net> {
    let ball = Ball::centered(NormedSpace::new(n, Norm::Linf).unwrap(), 1.0).unwrap();
    let pts = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    Arc::new(Net::from_points(ball, 0.5, pts).unwrap())
}

#[test]
fn wfa_on_uniform_four_points_is_within_2k_minus_1_of_opt() {
    let net = uniform_net(4);
    let k = 3;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<usize> = (0..50).map(|_| rng.random_range(0..4)).collect();
        let init: Vec<usize> = (0..k).collect();
        let mut alg = FiniteKind::Wfa.instantiate(Problem::KServer, net.clone(), init.clone(), seed).unwrap();
        let cost: f64 = ids.iter().map(|&r| alg.step(&NetRequest::Server(r)).unwrap().cost).sum();
        // On a uniform metric the optimum is Belady's fault count.
        let opt = belady_faults(&init, &ids) as f64;
        assert!(cost >= opt);
        assert!(cost <= (2 * k - 1) as f64 * opt + 2.0 * k as f64, "seed {seed}: {cost} vs {opt}");
    }
}

#[test]
fn greedy_on_the_hypercube_pays_for_misses() {
    let k = 4;
    let hc = HypercubeInstance::new(k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inst = hc.instance(Problem::KServer, 10_000, &mut rng).unwrap();
    let mut alg = lowerbound_algorithm(&hc, Problem::KServer, AlgorithmName::Direct, 0).unwrap();
    let mut costs = Vec::new();
    for r in &inst.requests {
        let s = alg.serve(r).unwrap();
        assert!(s.cost >= 0.0);
        costs.push(s.cost);
    }
    let min_vertex_distance = 1.0;
    let (mean, se) = mean_se(&costs);
    assert!(mean >= (1.0 - 2.0 * hc.epsilon()) / (k as f64 + 1.0) * min_vertex_distance - 3.0 * se);
}

#[test]
fn marking_ratio_is_harmonic() {
    let k = 8;
    let net = uniform_net(k + 1);
    let init: Vec<usize> = (0..k).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pages: Vec<usize> = (0..100_000).map(|_| rng.random_range(0..=k)).collect();
    let mut alg = Marking::new(net, init.clone(), 3).unwrap();
    let cost: f64 = pages.iter().map(|&p| alg.step(&NetRequest::Server(p)).unwrap().cost).sum();
    let opt = belady_faults(&init, &pages) as f64;
    let h: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
    let ratio = cost / opt;
    assert!(ratio >= h / 2.0 && ratio <= 2.0 * h, "ratio {ratio}, H_k {h}");
}

#[test]
fn flow_opt_matches_enumeration_on_a_line() {
    let ball = Ball::new(NormedSpace::new(1, Norm::L2).unwrap(), vec![0.5], 0.5).unwrap();
    let reqs = [[0.9], [0.1], [0.5], [0.9], [0.0], [1.0]];
    let init = vec![vec![0.0], vec![1.0]];
    let inst = Instance::new(
        Problem::KServer,
        2,
        ball,
        Configuration::new(init.clone()),
        reqs.iter().map(|r| Request::Server(r.to_vec())).collect(),
    )
    .unwrap();
    let flow = smoothed_core::offline::opt(&inst).unwrap().cost;
    assert!((flow - brute_kserver(Norm::L2, &init, &request_points(&inst.requests))).abs() < 1e-9);
}

#[test]
fn perturbed_sigma_is_a_volume_ratio() {
    let line = Ball::centered(NormedSpace::new(1, Norm::L2).unwrap(), 1.0).unwrap();
    let d = GeneratorDescriptor::new(GeneratorKind::PerturbedBase { rho: 0.1, base: BaseSchedule::Center }, Problem::KServer, 1);
    assert!((sigma_of_generator(&d, &line).unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn hypercube_sigma_matches_monte_carlo_volume() {
    let hc = HypercubeInstance::new(3).unwrap();
    let eps = 1.0 / (6.0 * 3f64.log2());
    assert!((hc.epsilon() - eps).abs() < 1e-15);
    assert!((hc.sigma() - 4.0 * eps * eps).abs() < 1e-15);
    assert!((hc.sigma() - 0.04423).abs() < 1e-5);
    // Fraction of the unit square within Linf distance ε of the first four vertices.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 400_000;
    let hits: Vec<f64> = (0..n)
        .map(|_| {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let near = hc.vertices().iter().any(|v| dist(Norm::Linf, v, &x) <= eps);
            if near { 1.0 } else { 0.0 }
        })
        .collect();
    let (p, se) = mean_se(&hits);
    assert!((p - hc.sigma()).abs() <= 3.0 * se, "{p} vs {}", hc.sigma());
}

#[test]
fn hypercube_vertex_frequencies_are_uniform() {
    let hc = HypercubeInstance::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        let x = hc.sample_point(&mut rng);
        counts[hc.vertex_of(&x).unwrap()] += 1;
    }
    let p = 0.25;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    for c in counts {
        assert!((c as f64 / n as f64 - p).abs() <= 3.0 * se, "{counts:?}");
    }
}

#[test]
fn perturbed_density_respects_its_certificate() {
    let disk = Ball::centered(NormedSpace::new(2, Norm::L2).unwrap(), 1.0).unwrap();
    let d = GeneratorDescriptor::new(
        GeneratorKind::PerturbedBase { rho: 0.3, base: BaseSchedule::Points(vec![vec![0.2, -0.1]]) },
        Problem::KServer,
        1,
    );
    let sigma = sigma_of_generator(&d, &disk).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let pts: Vec<Vec<f64>> = generate(&d, &disk, n, &mut rng)
        .unwrap()
        .into_iter()
        .map(|r| r.points()[0].clone())
        .collect();
    let vol_ball = std::f64::consts::PI;
    for (lo, side) in [([0.1, -0.2], 0.1), ([0.15, -0.15], 0.05), ([-0.3, -0.3], 0.4), ([0.3, 0.0], 0.12)] {
        let inside: Vec<f64> = pts
            .iter()
            .map(|x| {
                let hit = (0..2).all(|i| x[i] >= lo[i] && x[i] <= lo[i] + side);
                if hit { 1.0 } else { 0.0 }
            })
            .collect();
        let (p, se) = mean_se(&inside);
        let cap = side * side / (sigma * vol_ball);
        assert!(p <= cap + 4.0 * se, "cell {lo:?}: {p} > {cap}");
    }
}

#[test]
fn consecutive_chasing_sets_are_rarely_close() {
    let (k, m) = (2usize, 2usize);
    let delta = (1.0 / (2.0 * (k * k) as f64)).powf(1.0 / m as f64);
    let disk = Ball::centered(NormedSpace::new(m, Norm::L2).unwrap(), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let reqs = generate(&GeneratorDescriptor::uniform(Problem::Chasing, k), &disk, 20_001, &mut rng).unwrap();
    let close: Vec<f64> = reqs
        .windows(2)
        .map(|w| {
            let hit = w[0].points().iter().any(|a| w[1].points().iter().any(|b| dist(Norm::L2, a, b) <= delta));
            if hit { 1.0 } else { 0.0 }
        })
        .collect();
    let (p, se) = mean_se(&close);
    assert!(p <= 0.5 + 3.0 * se, "{p}");
}

#[test]
fn coarse_chasing_resolution_gives_the_singleton_net() {
    let eta = choose_eta(Problem::Chasing, 1.0, 2, 2, 1.0).unwrap();
    assert!((eta - 3.0 * (1.0f64 / 8.0).sqrt()).abs() < 1e-12);
    assert!(eta > 1.0);
    let disk = Ball::centered(NormedSpace::new(2, Norm::L2).unwrap(), 1.0).unwrap();
    assert_eq!(net_for_eta(&disk, eta).unwrap().len(), 1);
}

#[test]
fn ratio_rows_report_the_hypercube_sigma() {
    let rows = ratio_experiment(Problem::KServer, &[2, 3, 5], 12, &[0, 1], &[AlgorithmName::Direct]).unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let eps = 1.0 / (2.0 * r.k as f64 * (r.k as f64).log2());
        let m = ((r.k + 1) as f64).log2().ceil() as i32;
        assert!((r.sigma - (r.k + 1) as f64 * eps.powi(m)).abs() < 1e-15);
        assert_eq!(r.offline_kind, "exact");
        assert!(r.ratio >= 1.0 - 1e-9);
    }
}

#[test]
fn harness_opt_rows_clear_the_amortized_bound() {
    let s = Scenario::parse("problem = kserver\nk = 2\nm = 1\nradius = 1\ngenerator = uniform\nalgorithm = wrapped:wfa\nT = 2000\nseeds = 0..8").unwrap();
    let mut per = Vec::new();
    let mut bound = 0.0;
    for &seed in &s.seeds {
        let row = run_trial(&s, seed).unwrap();
        bound = row.opt_bound.unwrap();
        per.push(row.opt_per_request);
    }
    assert_eq!(bound, 0.0078125);
    let (mean, se) = mean_se(&per);
    assert!(mean >= bound - 3.0 * se);
}

#[test]
fn harness_wrapped_row_detours_match_a_replay() {
    let s = Scenario::parse("problem = ktaxi\nk = 2\nm = 2\nnorm = linf\ngenerator = uniform\nalgorithm = wrapped:greedy\neta = 0.4\nT = 300\nseeds = 4").unwrap();
    let row = run_trial(&s, 4).unwrap();
    let inst = smoothed_core::harness::realize(&s, 4).unwrap();
    let net = Arc::new(Net::build(inst.ball.clone(), 0.4).unwrap());
    let mut w = ProjectionWrapper::build(FiniteKind::Greedy, Problem::KTaxi, net, &inst.initial, 0).unwrap().record_legs();
    for r in &inst.requests {
        w.serve(r).unwrap();
    }
    let leg = |l: &(Vec<f64>, Vec<f64>)| dist(Norm::Linf, &l.0, &l.1);
    let detours: f64 = w.legs().unwrap().iter().map(|s| s[1..].iter().map(leg).sum::<f64>()).sum();
    let initial: f64 = w.initial_legs().iter().map(leg).sum();
    assert!((row.detour_total - detours).abs() <= 1e-9);
    assert!((row.online_cost - (w.inner_total() + detours + initial)).abs() <= 1e-9);
}
