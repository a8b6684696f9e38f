//! The link-formation loop: every iteration each user queries, receives the
//! `a` highest-scored candidate documents, and endorses the `b` of them with
//! the highest positive utility. Scores are shared pseudo-scores before any
//! links exist and document in-degrees afterwards.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis;
use crate::params::{
    stream_rng, InitDist, ModelParams, ParamError, ParamWarning, Scope, SeedStream, TieBreak,
    UpdateMode,
};
use crate::world::TopicWorld;

/// Mutable simulation state: the bipartite user-document link set, cached
/// in-degrees, the shared pre-link pseudo-scores and the iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct WwwState {
    out_links: Vec<BTreeSet<usize>>,
    indegree: Vec<usize>,
    pseudo_scores: Vec<f64>,
    iteration: usize,
    link_count: usize,
}

impl WwwState {
    /// Empty state for `m` users over `n` documents. `pseudo_scores` must
    /// have one entry per document.
    pub fn new(m: usize, n: usize, pseudo_scores: Vec<f64>) -> Self {
        assert_eq!(pseudo_scores.len(), n, "one pseudo-score per document");
        WwwState {
            out_links: vec![BTreeSet::new(); m],
            indegree: vec![0; n],
            pseudo_scores,
            iteration: 0,
            link_count: 0,
        }
    }

    /// Iterations completed so far. Zero means no user has acted yet, which
    /// is exactly when ranking still uses the pseudo-scores.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn user_count(&self) -> usize {
        self.out_links.len()
    }

    pub fn doc_count(&self) -> usize {
        self.indegree.len()
    }

    /// Current in-degree of every document.
    pub fn indegree(&self) -> &[usize] {
        &self.indegree
    }

    /// The shared per-document scores used while the graph is empty.
    pub fn pseudo_scores(&self) -> &[f64] {
        &self.pseudo_scores
    }

    /// Number of distinct links.
    pub fn link_count(&self) -> usize {
        self.link_count
    }

    pub fn has_link(&self, user: usize, doc: usize) -> bool {
        self.out_links[user].contains(&doc)
    }

    /// All links in ascending `(user, document)` order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_links
            .iter()
            .enumerate()
            .flat_map(|(user, docs)| docs.iter().map(move |&d| (user, d)))
    }

    /// In-degrees recounted from the link set, for consistency checks.
    pub fn recomputed_indegree(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.indegree.len()];
        for (_, d) in self.links() {
            deg[d] += 1;
        }
        deg
    }

    fn add_link(&mut self, user: usize, doc: usize) -> bool {
        if self.out_links[user].insert(doc) {
            self.indegree[doc] += 1;
            self.link_count += 1;
            true
        } else {
            false
        }
    }
}

/// One row of a run trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based index of the completed iteration.
    pub iteration: usize,
    /// Distinct links added during this iteration.
    pub new_links: usize,
    /// Distinct links present after this iteration.
    pub cumulative_links: usize,
    /// Sum of utilities of every endorsement made this iteration, repeats
    /// included.
    pub attained_utility: f64,
    /// `attained_utility` over the maximum total utility of the world.
    pub efficiency: f64,
}

/// Complete per-iteration history of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    /// Number of leading iterations in which every endorsement created a new
    /// link, i.e. how long the graph grew at the maximum possible rate of
    /// `m * b` links per iteration.
    pub distinct_link_iterations: usize,
    /// True when the run stopped because an iteration added no new links.
    pub converged: bool,
}

impl Trajectory {
    /// Efficiency after the final iteration, if any iterations ran.
    pub fn final_efficiency(&self) -> Option<f64> {
        self.records.last().map(|r| r.efficiency)
    }

    /// Fraction of the total efficiency improvement that had already
    /// happened by the end of `iteration` (1-based). Reports 1.0 when the
    /// run is no longer than `iteration` or never improved at all.
    pub fn improvement_captured_by(&self, iteration: usize) -> f64 {
        if self.records.len() <= 1 || self.records.len() <= iteration {
            return 1.0;
        }
        let first = self.records[0].efficiency;
        let last = self.records[self.records.len() - 1].efficiency;
        let at = self.records[iteration.max(1) - 1].efficiency;
        let span = last - first;
        if span <= f64::EPSILON {
            return 1.0;
        }
        (at - first) / span
    }
}

/// Failure while sampling initial pseudo-scores.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid {dist} distribution: {param} must be positive and finite (got {value})")]
    InvalidDistParams {
        dist: &'static str,
        param: &'static str,
        value: f64,
    },
}

/// Failure constructing or running a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("world is {wk} x {wm} x {wn} (k x m x n) but params say {pk} x {pm} x {pn}")]
    WorldMismatch {
        wk: usize,
        wm: usize,
        wn: usize,
        pk: usize,
        pm: usize,
        pn: usize,
    },
    #[error("initial score vector has {got} entries, need one per document ({expected})")]
    ScoreLength { got: usize, expected: usize },
    #[error("no user has any positive utility; endorsement is impossible")]
    ZeroTotalUtility,
}

/// Samples one shared pseudo-score per document from the configured
/// distribution. Draws exactly `params.n` values from `rng`.
pub fn initial_scores(params: &ModelParams, rng: &mut impl Rng) -> Result<Vec<f64>, DistError> {
    let n = params.n;
    match params.init_dist {
        InitDist::Uniform { max } => {
            if !(max > 0.0 && max.is_finite()) {
                return Err(DistError::InvalidDistParams {
                    dist: "uniform",
                    param: "max",
                    value: max,
                });
            }
            Ok((0..n).map(|_| rng.random::<f64>() * max).collect())
        }
        InitDist::Poisson { rate } => {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(DistError::InvalidDistParams {
                    dist: "poisson",
                    param: "rate",
                    value: rate,
                });
            }
            let dist = rand_distr::Poisson::new(rate).expect("rate checked above");
            Ok((0..n).map(|_| dist.sample(rng)).collect())
        }
        InitDist::Normal { mean, std } => {
            if !(std > 0.0 && std.is_finite()) {
                return Err(DistError::InvalidDistParams {
                    dist: "normal",
                    param: "std",
                    value: std,
                });
            }
            if !mean.is_finite() {
                return Err(DistError::InvalidDistParams {
                    dist: "normal",
                    param: "mean",
                    value: mean,
                });
            }
            let dist = rand_distr::Normal::new(mean, std).expect("std checked above");
            Ok((0..n).map(|_| dist.sample(rng).max(0.0)).collect())
        }
    }
}

/// Tie-breaking ranks for all `n` documents: position of each document in
/// the preference order used when scores are equal. Lower rank wins.
pub fn tie_ranks(params: &ModelParams, n: usize) -> Vec<usize> {
    match params.tie_break {
        TieBreak::Index => (0..n).collect(),
        TieBreak::SeededRandom => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut stream_rng(params.seed, SeedStream::TieBreak));
            let mut rank = vec![0usize; n];
            for (r, d) in order.into_iter().enumerate() {
                rank[d] = r;
            }
            rank
        }
    }
}

/// The up-to-`a` documents returned to `user`'s query, best score first.
/// At iteration zero the score of a document is its pseudo-score; from
/// iteration one onwards it is the current in-degree.
pub fn recommend(
    state: &WwwState,
    world: &TopicWorld,
    user: usize,
    params: &ModelParams,
) -> Vec<usize> {
    let tie = tie_ranks(params, world.n());
    let candidates = candidate_docs(world, user, params.scope);
    let score = |d: usize| {
        if state.iteration == 0 {
            state.pseudo_scores[d]
        } else {
            state.indegree[d] as f64
        }
    };
    rank_top(candidates, score, params.a, &tie)
}

/// The up-to-`b` recommended documents `user` endorses: those with the
/// highest positive utility, ties to the lower document index.
pub fn endorse(recs: &[usize], world: &TopicWorld, user: usize, b: usize) -> Vec<usize> {
    let identity: Vec<usize> = (0..world.n()).collect();
    endorse_ranked(recs, world, user, b, &identity)
        .into_iter()
        .map(|(d, _)| d)
        .collect()
}

fn candidate_docs(world: &TopicWorld, user: usize, scope: Scope) -> Vec<usize> {
    match scope {
        Scope::TopicRelevant => world
            .relevant_docs(world.topic_of(user))
            .iter()
            .map(|&(d, _)| d)
            .collect(),
        Scope::Global => (0..world.n()).collect(),
    }
}

fn rank_top(
    mut candidates: Vec<usize>,
    score: impl Fn(usize) -> f64,
    a: usize,
    tie: &[usize],
) -> Vec<usize> {
    candidates.sort_by(|&x, &y| score(y).total_cmp(&score(x)).then(tie[x].cmp(&tie[y])));
    candidates.truncate(a);
    candidates
}

fn endorse_ranked(
    recs: &[usize],
    world: &TopicWorld,
    user: usize,
    b: usize,
    tie: &[usize],
) -> Vec<(usize, f64)> {
    let mut picks: Vec<(usize, f64)> = recs
        .iter()
        .filter_map(|&d| {
            let u = world.utility_value(user, d);
            (u > 0.0).then_some((d, u))
        })
        .collect();
    picks.sort_by(|&(d1, u1), &(d2, u2)| u2.total_cmp(&u1).then(tie[d1].cmp(&tie[d2])));
    picks.truncate(b);
    picks
}

/// A running simulation over a borrowed world.
#[derive(Debug, Clone)]
pub struct Simulation<'w> {
    world: &'w TopicWorld,
    params: ModelParams,
    tie: Vec<usize>,
    total_utility: f64,
    warnings: Vec<ParamWarning>,
    state: WwwState,
    records: Vec<IterationRecord>,
    distinct_link_iterations: usize,
    distinct_phase_open: bool,
    converged: bool,
}

impl<'w> Simulation<'w> {
    /// Validates the parameters, draws the pseudo-scores from the seed's
    /// score stream and prepares an empty link graph.
    pub fn new(world: &'w TopicWorld, params: &ModelParams) -> Result<Self, SimError> {
        let mut rng = stream_rng(params.seed, SeedStream::InitScores);
        let scores = initial_scores(params, &mut rng)?;
        Self::with_initial_scores(world, params, scores)
    }

    /// Like [`Simulation::new`] but with explicitly supplied pseudo-scores,
    /// one per document.
    pub fn with_initial_scores(
        world: &'w TopicWorld,
        params: &ModelParams,
        scores: Vec<f64>,
    ) -> Result<Self, SimError> {
        let warnings = params.validate()?;
        if (world.k(), world.m(), world.n()) != (params.k, params.m, params.n) {
            return Err(SimError::WorldMismatch {
                wk: world.k(),
                wm: world.m(),
                wn: world.n(),
                pk: params.k,
                pm: params.m,
                pn: params.n,
            });
        }
        if scores.len() != world.n() {
            return Err(SimError::ScoreLength {
                got: scores.len(),
                expected: world.n(),
            });
        }
        let total_utility = analysis::max_total_utility(world, params.b);
        if !(total_utility > 0.0) {
            return Err(SimError::ZeroTotalUtility);
        }
        let tie = tie_ranks(params, world.n());
        let state = WwwState::new(world.m(), world.n(), scores);
        Ok(Simulation {
            world,
            params: params.clone(),
            tie,
            total_utility,
            warnings,
            state,
            records: Vec::new(),
            distinct_link_iterations: 0,
            distinct_phase_open: true,
            converged: false,
        })
    }

    pub fn state(&self) -> &WwwState {
        &self.state
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The denominator of efficiency: every user collecting its `b` best
    /// positive utilities.
    pub fn total_utility(&self) -> f64 {
        self.total_utility
    }

    /// Warnings produced by parameter validation.
    pub fn warnings(&self) -> &[ParamWarning] {
        &self.warnings
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    /// Runs one full pass over all users and returns its record.
    ///
    /// In synchronous mode every user ranks against the in-degrees from the
    /// start of the pass, so recommendations depend only on a user's topic
    /// and can be shared; in sequential mode each user sees all links added
    /// before it in the same pass.
    pub fn step(&mut self) -> IterationRecord {
        let m = self.world.m();
        let iteration0 = self.state.iteration == 0;
        let score_snapshot: Vec<f64> = if iteration0 {
            self.state.pseudo_scores.clone()
        } else {
            self.state.indegree.iter().map(|&d| d as f64).collect()
        };

        let synchronous = self.params.update_mode == UpdateMode::Synchronous || iteration0;
        let shared_recs: Option<Vec<Vec<usize>>> = if synchronous {
            Some(match self.params.scope {
                Scope::TopicRelevant => (0..self.world.k())
                    .map(|t| {
                        let cands = self.world.relevant_docs(t).iter().map(|&(d, _)| d).collect();
                        rank_top(cands, |d| score_snapshot[d], self.params.a, &self.tie)
                    })
                    .collect(),
                Scope::Global => {
                    let cands = (0..self.world.n()).collect();
                    vec![rank_top(cands, |d| score_snapshot[d], self.params.a, &self.tie)]
                }
            })
        } else {
            None
        };

        let mut new_links = 0usize;
        let mut attained = 0.0f64;
        for user in 0..m {
            let owned_recs;
            let recs: &[usize] = match &shared_recs {
                Some(by_topic) => match self.params.scope {
                    Scope::TopicRelevant => &by_topic[self.world.topic_of(user)],
                    Scope::Global => &by_topic[0],
                },
                None => {
                    owned_recs = recommend(&self.state, self.world, user, &self.params);
                    &owned_recs
                }
            };
            let picks = endorse_ranked(recs, self.world, user, self.params.b, &self.tie);
            let mut subtotal = 0.0;
            for (doc, utility) in picks {
                subtotal += utility;
                if self.state.add_link(user, doc) {
                    new_links += 1;
                }
            }
            attained += subtotal;
        }

        self.state.iteration += 1;
        let iteration = self.state.iteration;
        let cumulative_links = self.state.link_count();
        if self.distinct_phase_open {
            if cumulative_links == iteration * m * self.params.b {
                self.distinct_link_iterations = iteration;
            } else {
                self.distinct_phase_open = false;
            }
        }
        let efficiency = attained / self.total_utility;
        debug_assert!(
            efficiency <= 1.0 + 1e-9,
            "attained {attained} exceeds total utility {}",
            self.total_utility
        );
        let record = IterationRecord {
            iteration,
            new_links,
            cumulative_links,
            attained_utility: attained,
            efficiency,
        };
        self.records.push(record.clone());
        record
    }

    /// Steps until an iteration adds no new links or `max_iterations` passes
    /// have run, then returns the full trajectory.
    pub fn run(&mut self) -> Trajectory {
        while self.state.iteration < self.params.max_iterations {
            let record = self.step();
            if record.new_links == 0 {
                self.converged = true;
                break;
            }
        }
        self.trajectory()
    }

    /// The trajectory so far.
    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            records: self.records.clone(),
            distinct_link_iterations: self.distinct_link_iterations,
            converged: self.converged,
        }
    }
}

/// Everything a completed run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: WwwState,
    pub trajectory: Trajectory,
    pub total_utility: f64,
    pub warnings: Vec<ParamWarning>,
}

/// Generates nothing: runs the loop on an existing world and returns the
/// final state alongside the trajectory.
pub fn run(world: &TopicWorld, params: &ModelParams) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(world, params)?;
    let trajectory = sim.run();
    Ok(RunOutput {
        total_utility: sim.total_utility(),
        warnings: sim.warnings.clone(),
        state: sim.state,
        trajectory,
    })
}
