#![allow(dead_code)]

use std::collections::BTreeSet;

use kkps_sim::params::{Scope, TieBreak, UpdateMode};
use kkps_sim::{InitDist, ModelParams, TopicWorld, ValueDist, WwwState};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

pub fn links_of(state: &WwwState) -> BTreeSet<(usize, usize)> {
    state.links().collect()
}

pub fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= rel * scale
}

/// What a literal restatement of the loop produced: the link set after each
/// iteration, the utility gathered during each iteration, and whether the
/// run stopped because an iteration added nothing.
pub struct ReferenceTrace {
    pub link_sets: Vec<BTreeSet<(usize, usize)>>,
    pub attained: Vec<f64>,
    pub converged: bool,
}

fn degree_count(links: &BTreeSet<(usize, usize)>, n: usize) -> Vec<usize> {
    let mut deg = vec![0usize; n];
    for &(_, d) in links {
        deg[d] += 1;
    }
    deg
}

/// Runs the loop the slow, obvious way: every quantity is recounted from
/// the link set on every pass, users are visited in index order, ranking is
/// by score descending with document index as the tie break, endorsement is
/// by utility descending with the same tie break. No shared ranking, no
/// incremental degree bookkeeping.
pub fn reference_run(world: &TopicWorld, params: &ModelParams, pseudo: &[f64]) -> ReferenceTrace {
    let m = world.m();
    let n = world.n();
    let mut links: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut link_sets = Vec::new();
    let mut attained = Vec::new();
    let mut converged = false;

    for iter in 1..=params.max_iterations {
        let before = links.len();
        let frozen = degree_count(&links, n);
        let mut gained = 0.0f64;
        for user in 0..m {
            let scores: Vec<f64> = if iter == 1 {
                pseudo.to_vec()
            } else {
                match params.update_mode {
                    UpdateMode::Synchronous => frozen.iter().map(|&d| d as f64).collect(),
                    UpdateMode::Sequential => degree_count(&links, n)
                        .iter()
                        .map(|&d| d as f64)
                        .collect(),
                }
            };
            let mut ranked: Vec<usize> = match params.scope {
                Scope::TopicRelevant => world
                    .relevant_docs(world.topic_of(user))
                    .iter()
                    .map(|&(d, _)| d)
                    .collect(),
                Scope::Global => (0..n).collect(),
            };
            ranked.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(x.cmp(&y)));
            ranked.truncate(params.a.min(ranked.len()));
            let mut useful: Vec<(usize, f64)> = ranked
                .iter()
                .map(|&d| (d, world.utility_value(user, d)))
                .filter(|&(_, u)| u > 0.0)
                .collect();
            useful.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            useful.truncate(params.b.min(useful.len()));
            for (d, u) in useful {
                gained += u;
                links.insert((user, d));
            }
        }
        link_sets.push(links.clone());
        attained.push(gained);
        if links.len() == before {
            converged = true;
            break;
        }
    }
    ReferenceTrace {
        link_sets,
        attained,
        converged,
    }
}

/// Best attainable total utility found by trying every size-b subset of
/// each user's positive utilities.
pub fn brute_force_total_utility(world: &TopicWorld, b: usize) -> f64 {
    let mut total = 0.0;
    for user in 0..world.m() {
        let utils: Vec<f64> = world.utility_row(user).iter().map(|&(_, u)| u).collect();
        let take = b.min(utils.len());
        let mut best = 0.0f64;
        best_subset_sum(&utils, take, 0, 0.0, &mut best);
        total += best;
    }
    total
}

fn best_subset_sum(utils: &[f64], take: usize, start: usize, acc: f64, best: &mut f64) {
    if take == 0 {
        if acc > *best {
            *best = acc;
        }
        return;
    }
    for i in start..=utils.len() - take {
        best_subset_sum(utils, take - 1, i + 1, acc + utils[i], best);
    }
}

pub struct TinyInstance {
    pub params: ModelParams,
    pub world: TopicWorld,
    pub pseudo: Vec<f64>,
}

/// Draws a small random instance: k <= 3 <= m <= 5 <= n <= 10, a <= 4,
/// b <= 2, mixed scope and update mode, and pseudo-scores that are
/// frequently quantized so ties actually occur.
pub fn tiny_instance(rng: &mut ChaCha12Rng) -> TinyInstance {
    let k = rng.random_range(1..=3usize);
    let m = rng.random_range(k..=5usize);
    let n = rng.random_range(m.max(2)..=10usize);
    let a = rng.random_range(1..=4usize.min(n));
    let b = rng.random_range(1..=2usize.min(a));
    let q_dist = if rng.random_bool(0.5) {
        ValueDist::Uniform01
    } else {
        ValueDist::Constant { value: 1.0 }
    };
    let scope = if rng.random_bool(0.5) {
        Scope::TopicRelevant
    } else {
        Scope::Global
    };
    let update_mode = if rng.random_bool(0.5) {
        UpdateMode::Synchronous
    } else {
        UpdateMode::Sequential
    };
    let params = ModelParams {
        k,
        m,
        n,
        a,
        b,
        q_dist,
        init_dist: InitDist::default(),
        seed: rng.random_range(0..100_000u64),
        max_iterations: 50,
        scope,
        update_mode,
        tie_break: TieBreak::Index,
    };
    let world = TopicWorld::generate(&params).expect("tiny instance parameters are valid");
    let pseudo: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(0..4) as f64 * 0.25
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    TinyInstance {
        params,
        world,
        pseudo,
    }
}

/// Exact inverse-CDF sampler for P(x) proportional to x^(-exponent) on
/// 1..=1_000_000.
pub fn sample_discrete_power_law(exponent: f64, count: usize, seed: u64) -> Vec<usize> {
    const SUPPORT: usize = 1_000_000;
    let mut cdf = Vec::with_capacity(SUPPORT);
    let mut acc = 0.0f64;
    for x in 1..=SUPPORT {
        acc += (x as f64).powf(-exponent);
        cdf.push(acc);
    }
    let norm = acc;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * norm;
            (cdf.partition_point(|&c| c < u) + 1).min(SUPPORT)
        })
        .collect()
}

/// Geometric sampler on 1, 2, ... with the given mean, via inversion.
pub fn sample_geometric(mean: f64, count: usize, seed: u64) -> Vec<usize> {
    let p = (1.0 / mean.max(1.0)).clamp(1e-6, 1.0 - 1e-9);
    let log_q = (1.0 - p).ln();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let x = ((1.0 - u).ln() / log_q).ceil();
            (x as usize).max(1)
        })
        .collect()
}
