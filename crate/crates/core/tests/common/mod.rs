//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's distance, assignment or flow code.
#![allow(dead_code)]

use rand::Rng;
use smoothed_core::metric::Norm;
use smoothed_core::problems::Request;

pub fn dist(norm: Norm, x: &[f64], y: &[f64]) -> f64 {
    let d = x.iter().zip(y).map(|(a, b)| (a - b).abs());
    match norm {
        Norm::L1 => d.sum(),
        Norm::L2 => d.map(|c| c * c).sum::<f64>().sqrt(),
        Norm::Linf => d.fold(0.0, f64::max),
    }
}

/// Rejection sample from the ball, through its bounding cube.
pub fn sample_ball<R: Rng>(norm: Norm, center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = center.iter().map(|c| c + radius * rng.random_range(-1.0..=1.0)).collect();
        if dist(norm, &x, center) <= radius {
            return x;
        }
    }
}

/// Exact k-server optimum by enumerating which server serves each request.
/// Lazy solutions that move one server per request are optimal.
pub fn brute_kserver(norm: Norm, initial: &[Vec<f64>], requests: &[Vec<f64>]) -> f64 {
    fn go(norm: Norm, conf: &mut Vec<Vec<f64>>, reqs: &[Vec<f64>], acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        let Some((r, rest)) = reqs.split_first() else {
            *best = acc;
            return;
        };
        for i in 0..conf.len() {
            let old = std::mem::replace(&mut conf[i], r.clone());
            let c = dist(norm, &old, r);
            go(norm, conf, rest, acc + c, best);
            conf[i] = old;
        }
    }
    let mut best = f64::INFINITY;
    go(norm, &mut initial.to_vec(), requests, 0.0, &mut best);
    best
}

/// Exact chasing optimum by scanning every choice sequence, one point per set.
pub fn brute_chasing(norm: Norm, start: &[f64], sets: &[Vec<Vec<f64>>]) -> f64 {
    fn go(norm: Norm, at: &[f64], sets: &[Vec<Vec<f64>>], acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        let Some((s, rest)) = sets.split_first() else {
            *best = acc;
            return;
        };
        for p in s {
            go(norm, p, rest, acc + dist(norm, at, p), best);
        }
    }
    let mut best = f64::INFINITY;
    go(norm, start, sets, 0.0, &mut best);
    best
}

/// Minimum-cost perfect matching by trying every permutation.
pub fn brute_matching(costs: &[Vec<f64>]) -> f64 {
    fn go(costs: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == costs.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..costs.len() {
            if !used[j] {
                used[j] = true;
                go(costs, row + 1, used, acc + costs[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(costs, 0, &mut vec![false; costs.len()], 0.0, &mut best);
    best
}

/// Belady's furthest-in-future rule: the optimal number of faults for paging
/// with `k` slots, starting with `initial` resident.
pub fn belady_faults(initial: &[usize], pages: &[usize]) -> usize {
    let mut cache: Vec<usize> = initial.to_vec();
    let mut faults = 0;
    for (t, &p) in pages.iter().enumerate() {
        if cache.contains(&p) {
            continue;
        }
        faults += 1;
        let next_use = |q: usize| pages[t + 1..].iter().position(|&x| x == q).unwrap_or(usize::MAX);
        let (evict, _) = cache
            .iter()
            .enumerate()
            .max_by_key(|&(i, &q)| (next_use(q), std::cmp::Reverse(i)))
            .unwrap();
        cache[evict] = p;
    }
    faults
}

pub fn request_points(requests: &[Request]) -> Vec<Vec<f64>> {
    requests
        .iter()
        .map(|r| match r {
            Request::Server(x) => x.clone(),
            _ => panic!("not a server request"),
        })
        .collect()
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Prints the one-line verdict and fails the test on FAIL.
pub fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    println!("criterion {id} [{name}]: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} [{name}] failed: {detail}");
}
