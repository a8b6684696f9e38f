//! Model parameters: population sizes, distribution choices, seeding and
//! iteration policy, plus the validation rules that keep them coherent.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distribution of the nonzero entries in the document and user matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDist {
    /// Uniform on (0, 1]. The default.
    Uniform01,
    /// Every nonzero entry takes the same value. Degenerate worlds for tests.
    Constant {
        #[serde(default = "default_constant_value")]
        value: f64,
    },
}

impl Default for ValueDist {
    fn default() -> Self {
        ValueDist::Uniform01
    }
}

fn default_constant_value() -> f64 {
    1.0
}

/// Distribution of the shared per-document pseudo-scores used to rank
/// documents before any links exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitDist {
    /// Uniform on [0, max).
    Uniform {
        #[serde(default = "default_uniform_max")]
        max: f64,
    },
    /// Poisson with the given rate.
    Poisson {
        #[serde(default = "default_poisson_rate")]
        rate: f64,
    },
    /// Normal with the given mean and standard deviation; negative draws are
    /// truncated to zero.
    Normal {
        #[serde(default = "default_normal_mean")]
        mean: f64,
        #[serde(default = "default_normal_std")]
        std: f64,
    },
}

impl Default for InitDist {
    fn default() -> Self {
        InitDist::Uniform {
            max: default_uniform_max(),
        }
    }
}

impl InitDist {
    /// The default-parameter variant for a kind name, as accepted on the
    /// command line.
    pub fn from_kind(kind: &str) -> Option<Self> {
        match kind {
            "uniform" => Some(InitDist::Uniform {
                max: default_uniform_max(),
            }),
            "poisson" => Some(InitDist::Poisson {
                rate: default_poisson_rate(),
            }),
            "normal" => Some(InitDist::Normal {
                mean: default_normal_mean(),
                std: default_normal_std(),
            }),
            _ => None,
        }
    }

    /// Short label used in sweep cell names and plot legends.
    pub fn label(&self) -> &'static str {
        match self {
            InitDist::Uniform { .. } => "uniform",
            InitDist::Poisson { .. } => "poisson",
            InitDist::Normal { .. } => "normal",
        }
    }
}

fn default_uniform_max() -> f64 {
    1.0
}

fn default_poisson_rate() -> f64 {
    5.0
}

fn default_normal_mean() -> f64 {
    5.0
}

fn default_normal_std() -> f64 {
    2.0
}

/// Which documents a user's search considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// Only documents relevant to the user's topic. The default.
    #[default]
    TopicRelevant,
    /// Every document, regardless of topic.
    Global,
}

/// When in-degree changes become visible to the ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// All users in an iteration see the in-degrees from the iteration
    /// start. The default.
    #[default]
    Synchronous,
    /// Users act one at a time and see links added earlier in the same
    /// iteration.
    Sequential,
}

/// How score ties are broken when ranking documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Ascending document index. The default.
    #[default]
    Index,
    /// A fixed random permutation of document indices, derived from the seed.
    SeededRandom,
}

/// Full parameter set for one simulation run.
///
/// `k` topics, `m` users and `n` documents must satisfy `k <= m <= n`;
/// the recommendation count `a` and endorsement count `b` must satisfy
/// `b <= a <= n`. All five counts must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub a: usize,
    pub b: usize,
    #[serde(default)]
    pub q_dist: ValueDist,
    #[serde(default)]
    pub init_dist: InitDist,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub update_mode: UpdateMode,
    #[serde(default)]
    pub tie_break: TieBreak,
}

pub(crate) fn default_max_iterations() -> usize {
    50
}

/// Validation failure for a parameter set.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: usize },
    #[error("ordering violated: need {constraint} but {lhs_name} = {lhs} and {rhs_name} = {rhs}")]
    OrderingViolation {
        constraint: &'static str,
        lhs_name: &'static str,
        lhs: usize,
        rhs_name: &'static str,
        rhs: usize,
    },
    #[error("{name} value must be positive and finite (got {value})")]
    InvalidDistValue { name: &'static str, value: f64 },
}

/// Non-fatal finding reported by validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamWarning {
    /// `b` exceeds the per-topic document supply, so endorsement saturates:
    /// users cannot endorse more documents than are relevant to their topic.
    EndorsementsExceedTopicSupply { b: usize, per_topic_cap: usize },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::EndorsementsExceedTopicSupply { b, per_topic_cap } => write!(
                f,
                "b = {b} exceeds the per-topic document supply ceil(n/k) = {per_topic_cap}; \
                 endorsements saturate at the supply"
            ),
        }
    }
}

impl ModelParams {
    /// Checks the ordering chain `k <= m <= n` and `b <= a <= n`, plus
    /// positivity of all counts and of distribution values. Returns the
    /// list of non-fatal warnings on success.
    pub fn validate(&self) -> Result<Vec<ParamWarning>, ParamError> {
        for (name, value) in [
            ("k", self.k),
            ("m", self.m),
            ("n", self.n),
            ("a", self.a),
            ("b", self.b),
        ] {
            if value == 0 {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        if self.k > self.m {
            return Err(ParamError::OrderingViolation {
                constraint: "k <= m",
                lhs_name: "k",
                lhs: self.k,
                rhs_name: "m",
                rhs: self.m,
            });
        }
        if self.m > self.n {
            return Err(ParamError::OrderingViolation {
                constraint: "m <= n",
                lhs_name: "m",
                lhs: self.m,
                rhs_name: "n",
                rhs: self.n,
            });
        }
        if self.b > self.a {
            return Err(ParamError::OrderingViolation {
                constraint: "b <= a",
                lhs_name: "b",
                lhs: self.b,
                rhs_name: "a",
                rhs: self.a,
            });
        }
        if self.a > self.n {
            return Err(ParamError::OrderingViolation {
                constraint: "a <= n",
                lhs_name: "a",
                lhs: self.a,
                rhs_name: "n",
                rhs: self.n,
            });
        }
        if let ValueDist::Constant { value } = self.q_dist {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError::InvalidDistValue {
                    name: "q_dist constant",
                    value,
                });
            }
        }
        let mut warnings = Vec::new();
        let per_topic_cap = self.n.div_ceil(self.k);
        if self.b > per_topic_cap {
            warnings.push(ParamWarning::EndorsementsExceedTopicSupply {
                b: self.b,
                per_topic_cap,
            });
        }
        Ok(warnings)
    }

    /// Nonzero documents per topic row: `round(n / k)`.
    pub fn docs_per_topic(&self) -> usize {
        (self.n as f64 / self.k as f64).round() as usize
    }

    /// Upper bound on the number of distinct links the graph can ever hold:
    /// every user linking every document relevant to its topic.
    pub fn max_link_capacity(&self) -> usize {
        self.m * self.docs_per_topic()
    }
}

/// Independent PRNG streams derived from one run seed. Keeping world
/// generation, score initialization and tie permutation on separate streams
/// means changing one knob never perturbs the others.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SeedStream {
    World = 1,
    InitScores = 2,
    TieBreak = 3,
}

pub(crate) fn stream_rng(seed: u64, stream: SeedStream) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
