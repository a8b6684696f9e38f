//! Static world state: which documents are relevant to which topics, which
//! topic each user cares about, and the utility every user assigns to every
//! document.
//!
//! The document matrix has one row per topic with exactly `round(n / k)`
//! nonzero entries; the user matrix has exactly one nonzero entry per row.
//! Both are stored sparsely. Because each user has a single topic, the
//! utility of document `d` for user `i` is the product of the user's row
//! value and the document entry `(topic_of(i), d)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{stream_rng, ModelParams, ParamError, SeedStream, ValueDist};

/// Immutable world for one run: sparse topic-document relevance, one topic
/// per user, and the induced sparse utility rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicWorld {
    k: usize,
    m: usize,
    n: usize,
    doc_rows: Vec<Vec<(usize, f64)>>,
    topic_of: Vec<usize>,
    user_value: Vec<f64>,
    utility_rows: Vec<Vec<(usize, f64)>>,
}

/// Failure constructing or querying a world.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("{axis} index {index} out of range (size {len})")]
    IndexOutOfRange {
        axis: &'static str,
        index: usize,
        len: usize,
    },
    #[error("document row {row} is invalid: {reason}")]
    InvalidDocRow { row: usize, reason: String },
    #[error("user {user} is invalid: {reason}")]
    InvalidUser { user: usize, reason: String },
    #[error("component lengths disagree: {reason}")]
    LengthMismatch { reason: String },
}

impl TopicWorld {
    /// Draws a world from validated parameters. Deterministic in
    /// `(params.seed, counts, q_dist)`: the world stream of the seed is
    /// consumed in a fixed order (document rows first, then the user topic
    /// permutation, then user values).
    pub fn generate(params: &ModelParams) -> Result<Self, ParamError> {
        params.validate()?;
        let (k, m, n) = (params.k, params.m, params.n);
        let per_row = params.docs_per_topic();
        let mut rng = stream_rng(params.seed, SeedStream::World);

        let mut doc_rows = Vec::with_capacity(k);
        for _ in 0..k {
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, n, per_row).into_vec();
            picked.sort_unstable();
            let row: Vec<(usize, f64)> = picked
                .into_iter()
                .map(|d| (d, sample_value(params.q_dist, &mut rng)))
                .collect();
            doc_rows.push(row);
        }

        // Spread users over topics as evenly as possible: a shuffled
        // round-robin keeps per-topic populations within one of each other
        // while leaving the assignment random.
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let mut topic_of = vec![0usize; m];
        for (slot, user) in order.into_iter().enumerate() {
            topic_of[user] = slot % k;
        }

        let user_value: Vec<f64> = (0..m)
            .map(|_| sample_value(params.q_dist, &mut rng))
            .collect();

        Ok(Self::assemble(n, doc_rows, topic_of, user_value))
    }

    /// Builds a world from explicit components, for injected test fixtures
    /// and deserialization. Unlike [`TopicWorld::generate`] this does not
    /// require every document row to have the same number of entries, but
    /// rows must be strictly sorted by document index with positive finite
    /// values, and every user needs a valid topic and a positive value.
    pub fn from_parts(
        n: usize,
        doc_rows: Vec<Vec<(usize, f64)>>,
        topic_of: Vec<usize>,
        user_value: Vec<f64>,
    ) -> Result<Self, WorldError> {
        let k = doc_rows.len();
        let m = topic_of.len();
        if user_value.len() != m {
            return Err(WorldError::LengthMismatch {
                reason: format!(
                    "{} topic assignments but {} user values",
                    m,
                    user_value.len()
                ),
            });
        }
        for (t, row) in doc_rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(d, v) in row {
                if d >= n {
                    return Err(WorldError::InvalidDocRow {
                        row: t,
                        reason: format!("document index {d} out of range (n = {n})"),
                    });
                }
                if prev.is_some_and(|p| p >= d) {
                    return Err(WorldError::InvalidDocRow {
                        row: t,
                        reason: "entries must be strictly sorted by document index".into(),
                    });
                }
                if !(v > 0.0 && v.is_finite()) {
                    return Err(WorldError::InvalidDocRow {
                        row: t,
                        reason: format!("entry value {v} is not positive and finite"),
                    });
                }
                prev = Some(d);
            }
        }
        for (i, (&t, &v)) in topic_of.iter().zip(&user_value).enumerate() {
            if t >= k {
                return Err(WorldError::InvalidUser {
                    user: i,
                    reason: format!("topic {t} out of range (k = {k})"),
                });
            }
            if !(v > 0.0 && v.is_finite()) {
                return Err(WorldError::InvalidUser {
                    user: i,
                    reason: format!("value {v} is not positive and finite"),
                });
            }
        }
        Ok(Self::assemble(n, doc_rows, topic_of, user_value))
    }

    fn assemble(
        n: usize,
        doc_rows: Vec<Vec<(usize, f64)>>,
        topic_of: Vec<usize>,
        user_value: Vec<f64>,
    ) -> Self {
        let utility_rows: Vec<Vec<(usize, f64)>> = topic_of
            .iter()
            .zip(&user_value)
            .map(|(&t, &rv)| {
                doc_rows[t]
                    .iter()
                    .map(|&(d, dv)| (d, rv * dv))
                    .collect()
            })
            .collect();
        TopicWorld {
            k: doc_rows.len(),
            m: topic_of.len(),
            n,
            doc_rows,
            topic_of,
            user_value,
            utility_rows,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The topic user `i` cares about. Panics if out of range.
    pub fn topic_of(&self, user: usize) -> usize {
        self.topic_of[user]
    }

    /// The single nonzero value in user `i`'s row.
    pub fn user_value(&self, user: usize) -> f64 {
        self.user_value[user]
    }

    /// Documents relevant to a topic, sorted by index, with their entry
    /// values. Panics if out of range.
    pub fn relevant_docs(&self, topic: usize) -> &[(usize, f64)] {
        &self.doc_rows[topic]
    }

    /// User `i`'s positive utilities, sorted by document index.
    pub fn utility_row(&self, user: usize) -> &[(usize, f64)] {
        &self.utility_rows[user]
    }

    /// Utility of document `d` for user `i`, with bounds checking. Zero
    /// whenever the document is not relevant to the user's topic.
    pub fn utility_of(&self, user: usize, doc: usize) -> Result<f64, WorldError> {
        if user >= self.m {
            return Err(WorldError::IndexOutOfRange {
                axis: "user",
                index: user,
                len: self.m,
            });
        }
        if doc >= self.n {
            return Err(WorldError::IndexOutOfRange {
                axis: "document",
                index: doc,
                len: self.n,
            });
        }
        Ok(self.utility_value(user, doc))
    }

    /// Utility of document `d` for user `i`. Panics on out-of-range indices.
    pub fn utility_value(&self, user: usize, doc: usize) -> f64 {
        debug_assert!(doc < self.n);
        let row = &self.utility_rows[user];
        match row.binary_search_by_key(&doc, |&(d, _)| d) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Total count of nonzero utility entries across all users.
    pub fn nonzero_utility_count(&self) -> usize {
        self.utility_rows.iter().map(Vec::len).sum()
    }
}

fn sample_value(dist: ValueDist, rng: &mut impl Rng) -> f64 {
    match dist {
        // 1 - U maps the half-open [0, 1) draw onto (0, 1], keeping every
        // sampled entry strictly positive.
        ValueDist::Uniform01 => 1.0 - rng.random::<f64>(),
        ValueDist::Constant { value } => value,
    }
}

/// Sparse triplet form of a world, the JSON exchange format. Utilities are
/// included so the file is auditable on its own; loading re-derives them and
/// rejects files where the two disagree.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldTriplets {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    /// `(topic, document, value)` entries of the document matrix.
    pub documents: Vec<(usize, usize, f64)>,
    /// `(user, topic, value)` entries of the user matrix.
    pub users: Vec<(usize, usize, f64)>,
    /// `(user, document, value)` entries of the utility matrix.
    pub utilities: Vec<(usize, usize, f64)>,
}

impl WorldTriplets {
    pub fn from_world(world: &TopicWorld) -> Self {
        let documents = (0..world.k())
            .flat_map(|t| {
                world
                    .relevant_docs(t)
                    .iter()
                    .map(move |&(d, v)| (t, d, v))
            })
            .collect();
        let users = (0..world.m())
            .map(|i| (i, world.topic_of(i), world.user_value(i)))
            .collect();
        let utilities = (0..world.m())
            .flat_map(|i| {
                world
                    .utility_row(i)
                    .iter()
                    .map(move |&(d, v)| (i, d, v))
            })
            .collect();
        WorldTriplets {
            k: world.k(),
            m: world.m(),
            n: world.n(),
            documents,
            users,
            utilities,
        }
    }

    /// Rebuilds the world, checking dimensions, sortedness and that the
    /// stored utilities match the ones the document and user entries imply.
    pub fn into_world(self) -> Result<TopicWorld, WorldError> {
        let mut doc_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.k];
        for (t, d, v) in self.documents {
            if t >= self.k {
                return Err(WorldError::IndexOutOfRange {
                    axis: "topic",
                    index: t,
                    len: self.k,
                });
            }
            doc_rows[t].push((d, v));
        }
        let mut topic_of = vec![usize::MAX; self.m];
        let mut user_value = vec![0.0; self.m];
        for (i, t, v) in self.users {
            if i >= self.m {
                return Err(WorldError::IndexOutOfRange {
                    axis: "user",
                    index: i,
                    len: self.m,
                });
            }
            if topic_of[i] != usize::MAX {
                return Err(WorldError::InvalidUser {
                    user: i,
                    reason: "more than one nonzero entry in the user row".into(),
                });
            }
            topic_of[i] = t;
            user_value[i] = v;
        }
        if let Some(i) = topic_of.iter().position(|&t| t == usize::MAX) {
            return Err(WorldError::InvalidUser {
                user: i,
                reason: "no nonzero entry in the user row".into(),
            });
        }
        let world = TopicWorld::from_parts(self.n, doc_rows, topic_of, user_value)?;
        let expected: Vec<(usize, usize, f64)> = (0..world.m())
            .flat_map(|i| {
                world
                    .utility_row(i)
                    .iter()
                    .map(move |&(d, v)| (i, d, v))
            })
            .collect();
        if expected != self.utilities {
            return Err(WorldError::LengthMismatch {
                reason: "stored utilities disagree with document and user entries".into(),
            });
        }
        Ok(world)
    }
}
