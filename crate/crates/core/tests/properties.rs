mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_matching, dist};
use smoothed_core::combiner::switching_cost;
use smoothed_core::harness::Scenario;
use smoothed_core::lowerbound::{ffd_ledger, offline_ffd_strategy, HypercubeInstance};
use smoothed_core::metric::{Ball, FiniteMetric, Norm, NormedSpace};
use smoothed_core::net::Net;
use smoothed_core::offline::opt;
use smoothed_core::online::{FiniteKind, FiniteOnlineAlgorithm, NetRequest, OnlineAlgorithm, ProjectionWrapper, WorkFunction};
use smoothed_core::problems::{replay, validate_trace, Configuration, CostLedger, Instance, Problem, Request};
use smoothed_core::smoothing::{choose_eta, generate, opt_amortized_bound, separation_delta, GeneratorDescriptor};

fn norm_strategy() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::L1), Just(Norm::L2), Just(Norm::Linf)]
}

fn unit_ball(m: usize, norm: Norm) -> Ball {
    Ball::centered(NormedSpace::new(m, norm).unwrap(), 1.0).unwrap()
}

/// Points of the unit ball, by rescaling raw cube points that fall outside.
fn into_ball(norm: Norm, mut x: Vec<f64>) -> Vec<f64> {
    let len = dist(norm, &x, &vec![0.0; x.len()]);
    if len > 1.0 {
        for c in &mut x {
            *c /= len * (1.0 + 1e-12);
        }
    }
    x
}

fn points(m: usize, n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, m), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn net_projection_is_nearest_and_idempotent(
        norm in norm_strategy(),
        m in 1usize..=3,
        eta in 0.3f64..0.9,
        samples in points(3, 1..=40),
    ) {
        let net = Net::build(unit_ball(m, norm), eta).unwrap();
        for i in 0..net.len() {
            prop_assert_eq!(net.project(net.point(i)).unwrap(), i);
        }
        for s in samples {
            let x = into_ball(norm, s[..m].to_vec());
            let q = net.project(&x).unwrap();
            let best = net.points().iter().map(|p| dist(norm, &x, p)).fold(f64::INFINITY, f64::min);
            prop_assert!(dist(norm, &x, net.point(q)) <= best + 1e-12);
            prop_assert!(best <= eta);
            prop_assert_eq!(net.nearest_bucketed(&x), net.nearest_brute(&x));
        }
    }

    #[test]
    fn aspect_ratio_is_scale_invariant(norm in norm_strategy(), pts in points(2, 3..=10), scale in 0.1f64..10.0) {
        let space = NormedSpace::new(2, norm).unwrap();
        let Ok(a) = FiniteMetric::new(space, pts.clone()) else { return Ok(()) };
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|c| c * scale).collect()).collect();
        let b = FiniteMetric::new(space, scaled).unwrap();
        let (ra, rb) = (a.aspect_ratio().unwrap(), b.aspect_ratio().unwrap());
        prop_assert!(ra >= 1.0);
        prop_assert!((ra - rb).abs() <= 1e-9 * ra);
    }

    #[test]
    fn empty_taxi_runs_match_kserver_ledger(
        norm in norm_strategy(),
        pts in points(2, 1..=30),
        choices in proptest::collection::vec(0usize..3, 30),
    ) {
        let space = NormedSpace::new(2, norm).unwrap();
        let init = Configuration::new(vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]]);
        let t = pts.len();
        let servers: Vec<Request> = pts.iter().cloned().map(Request::Server).collect();
        let taxis: Vec<Request> = pts.iter().map(|p| Request::Taxi { from: p.clone(), to: p.clone() }).collect();
        let (_, a) = replay(&space, &init, &servers, &choices[..t]).unwrap();
        let (_, b) = replay(&space, &init, &taxis, &choices[..t]).unwrap();
        prop_assert_eq!(a.total(), b.total());
        prop_assert!(a.records().iter().all(|r| r.cost() >= 0.0));
    }

    #[test]
    fn singleton_chasing_costs_the_path_length(norm in norm_strategy(), pts in points(2, 1..=30)) {
        let space = NormedSpace::new(2, norm).unwrap();
        let start = vec![0.0, 0.0];
        let reqs: Vec<Request> = pts.iter().map(|p| Request::SetChase(vec![p.clone()])).collect();
        let (_, ledger) = replay(&space, &Configuration::new(vec![start.clone()]), &reqs, &vec![0; pts.len()]).unwrap();
        let mut path = 0.0;
        let mut at = &start;
        for p in &pts {
            path += dist(norm, at, p);
            at = p;
        }
        prop_assert!((ledger.total() - path).abs() <= 1e-12 * (1.0 + path));
    }

    #[test]
    fn switching_cost_is_a_matching_metric(norm in norm_strategy(), a in points(2, 3..=3), b in points(2, 3..=3), c in points(2, 3..=3)) {
        let space = NormedSpace::new(2, norm).unwrap();
        let (a, b, c) = (
            Configuration::new(a.into_iter().map(|p| into_ball(norm, p)).collect()),
            Configuration::new(b.into_iter().map(|p| into_ball(norm, p)).collect()),
            Configuration::new(c.into_iter().map(|p| into_ball(norm, p)).collect()),
        );
        let d = |x: &Configuration, y: &Configuration| switching_cost(Problem::KServer, x, y, &space).unwrap();
        let costs: Vec<Vec<f64>> = a.positions.iter().map(|x| b.positions.iter().map(|y| dist(norm, x, y)).collect()).collect();
        let ab = d(&a, &b);
        prop_assert!((ab - brute_matching(&costs)).abs() <= 1e-12);
        prop_assert!(ab <= 3.0 * 2.0 + 1e-12);
        prop_assert!((ab - d(&b, &a)).abs() <= 1e-12);
        prop_assert!(d(&a, &c) <= ab + d(&b, &c) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn work_function_is_monotone_and_lipschitz(
        pts in points(2, 5..=5),
        k in 1usize..=3,
        reqs in proptest::collection::vec(0usize..5, 1..=12),
    ) {
        let ball = unit_ball(2, Norm::L2);
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| into_ball(Norm::L2, p)).collect();
        let Ok(net) = Net::from_points(ball, 1e-9, pts) else { return Ok(()) };
        let net = Arc::new(net);
        let mut wf = WorkFunction::new(Problem::KServer, net.clone(), (0..k).collect()).unwrap();
        let mut ledger = CostLedger::new();
        let mut decisions = Vec::new();
        for &r in &reqs {
            let before = wf.table();
            let s = wf.step(&NetRequest::Server(r)).unwrap();
            decisions.push(s.decision);
            ledger.push(s.decision, s.cost, 0.0);
            let after = wf.table();
            for ((c0, v0), (c1, v1)) in before.iter().zip(&after) {
                prop_assert_eq!(c0, c1);
                prop_assert!(v1 + 1e-12 >= *v0);
            }
            for (a, va) in &after {
                for (b, vb) in &after {
                    let costs: Vec<Vec<f64>> = a.iter().map(|&x| b.iter().map(|&y| net.dist(x, y)).collect()).collect();
                    prop_assert!((va - vb).abs() <= brute_matching(&costs) + 1e-9);
                }
            }
        }
        // The finite run is a legal service of the net instance.
        let requests: Vec<Request> = reqs.iter().map(|&r| Request::Server(net.point(r).to_vec())).collect();
        let init = Configuration::new((0..k).map(|i| net.point(i).to_vec()).collect());
        prop_assert!(validate_trace(Problem::KServer, net.space(), &init, &requests, &decisions, &ledger));
    }

    #[test]
    fn wrapper_follows_inner_and_bounds_detours(
        problem in prop_oneof![Just(Problem::KServer), Just(Problem::KTaxi), Just(Problem::Chasing)],
        kind in prop_oneof![Just(FiniteKind::Wfa), Just(FiniteKind::Greedy)],
        k in 1usize..=3,
        eta in 0.3f64..0.8,
        seed in 0u64..1000,
    ) {
        let ball = unit_ball(2, Norm::L2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reqs = generate(&GeneratorDescriptor::uniform(problem, k), &ball, 60, &mut rng).unwrap();
        let n = if problem == Problem::Chasing { 1 } else { k };
        let init = Configuration::new(vec![vec![0.1, -0.2]; n]);
        let net = Arc::new(Net::build(ball, eta).unwrap());
        let mut w = ProjectionWrapper::build(kind, problem, net, &init, seed).unwrap();
        for r in &reqs {
            let s = w.serve(r).unwrap();
            prop_assert!(w.follows_inner());
            prop_assert!(s.detour <= 2.0 * eta);
        }
        prop_assert!(w.ledger().is_consistent());
    }

    #[test]
    fn opt_is_monotone_and_replayable(
        problem in prop_oneof![Just(Problem::KServer), Just(Problem::KTaxi), Just(Problem::Chasing)],
        k in 1usize..=3,
        t in 1usize..=15,
        seed in 0u64..1000,
    ) {
        let ball = unit_ball(2, Norm::L1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reqs = generate(&GeneratorDescriptor::uniform(problem, k), &ball, t + 1, &mut rng).unwrap();
        let n = if problem == Problem::Chasing { 1 } else { k };
        let init = Configuration::new(vec![vec![0.0, 0.0]; n]);
        let short = Instance::new(problem, k, ball.clone(), init.clone(), reqs[..t].to_vec()).unwrap();
        let long = Instance::new(problem, k, ball, init, reqs).unwrap();
        let a = opt(&short).unwrap();
        let b = opt(&long).unwrap();
        prop_assert!(b.cost + 1e-9 >= a.cost);
        let (_, ledger) = replay(short.space(), &short.initial, &short.requests, &a.decisions).unwrap();
        prop_assert!(validate_trace(problem, short.space(), &short.initial, &short.requests, &a.decisions, &ledger));
        prop_assert!((ledger.total() - a.cost).abs() <= 1e-9);
    }

    #[test]
    fn hypercube_samples_and_ffd(
        problem in prop_oneof![Just(Problem::KServer), Just(Problem::KTaxi), Just(Problem::Chasing)],
        k in 2usize..=5,
        seed in 0u64..1000,
    ) {
        let hc = HypercubeInstance::new(k).unwrap();
        prop_assert!(hc.epsilon() <= 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = hc.instance(problem, 10, &mut rng).unwrap();
        for r in &inst.requests {
            let near: Vec<usize> = r.points().iter().map(|p| hc.vertex_of(p).unwrap()).collect();
            match r {
                Request::Taxi { .. } => prop_assert_eq!(near[0], near[1]),
                Request::SetChase(_) => {
                    let mut v = near.clone();
                    v.sort_unstable();
                    v.dedup();
                    prop_assert_eq!(v.len(), k);
                }
                Request::Server(_) => {}
            }
        }
        let (cost, decisions) = offline_ffd_strategy(&hc, &inst).unwrap();
        let ledger = ffd_ledger(&inst, &decisions).unwrap();
        prop_assert!(validate_trace(problem, inst.space(), &inst.initial, &inst.requests, &decisions, &ledger));
        prop_assert!((ledger.total() - cost).abs() <= 1e-9);
        prop_assert!(cost + 1e-9 >= opt(&inst).unwrap().cost);
    }
}

proptest! {
    #[test]
    fn eta_is_three_delta(
        problem in prop_oneof![Just(Problem::KServer), Just(Problem::KTaxi), Just(Problem::Chasing)],
        sigma in 0.001f64..=1.0,
        k in 1usize..20,
        m in 1usize..5,
        r in 0.1f64..10.0,
    ) {
        let delta = separation_delta(problem, sigma, k, m, r).unwrap();
        prop_assert_eq!(choose_eta(problem, sigma, k, m, r).unwrap(), 3.0 * delta);
        let bound = opt_amortized_bound(problem, sigma, k, m, r).unwrap();
        let div = if problem == Problem::Chasing { 2.0 } else { 8.0 };
        prop_assert_eq!(bound, delta / div);
    }

    #[test]
    fn scenario_text_round_trips(
        k in 1usize..6,
        m in 1usize..4,
        norm in prop_oneof![Just("l1"), Just("l2"), Just("linf")],
        alg in prop_oneof![Just("greedy"), Just("wrapped:wfa"), Just("wrapped:greedy"), Just("ensemble:wfa")],
        t in 1usize..10_000,
        rho in 0.01f64..1.0,
        first_seed in 0u64..100,
    ) {
        let text = format!(
            "problem = kserver\nk = {k}\nm = {m}\nnorm = {norm}\ngenerator = perturbed\nrho = {rho}\nalgorithm = {alg}\nT = {t}\nseeds = {first_seed}..{}\n",
            first_seed + 3
        );
        let s = Scenario::parse(&text).unwrap();
        let again = Scenario::parse(&s.to_config_text()).unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert_eq!(again.hash(), s.hash());
    }
}

#[test]
fn bound_grows_with_dimension_towards_r_over_8() {
    let mut last = 0.0;
    for m in 1..200 {
        let b = opt_amortized_bound(Problem::KServer, 0.5, 4, m, 1.0).unwrap();
        assert!(b >= last);
        last = b;
    }
    assert!((last - 1.0 / 8.0).abs() < 0.01);
}
