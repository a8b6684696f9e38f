//! Measurement of finished runs: in-degree histograms, power-law fits, the
//! utility optimum and the efficiency ratio.

mod powerlaw;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{IterationRecord, WwwState};
use crate::world::TopicWorld;

pub use powerlaw::{fit_power_law, FitError, FitMethod, PowerLawFit};

/// How many documents have each in-degree value, including degree zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    counts: BTreeMap<usize, usize>,
    total: usize,
}

impl DegreeHistogram {
    pub fn from_state(state: &WwwState) -> Self {
        Self::from_degrees(state.indegree())
    }

    pub fn from_degrees(degrees: &[usize]) -> Self {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &d in degrees {
            *counts.entry(d).or_insert(0) += 1;
        }
        DegreeHistogram {
            counts,
            total: degrees.len(),
        }
    }

    /// Buckets in ascending degree order. Only observed degrees appear.
    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn count_of(&self, degree: usize) -> usize {
        self.counts.get(&degree).copied().unwrap_or(0)
    }

    /// Number of documents covered, which always equals `n`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Number of documents with at least one link.
    pub fn positive_total(&self) -> usize {
        self.total - self.count_of(0)
    }

    /// Mean in-degree over documents with at least one link.
    pub fn positive_mean(&self) -> Option<f64> {
        let count = self.positive_total();
        if count == 0 {
            return None;
        }
        let sum: usize = self
            .counts
            .iter()
            .map(|(&degree, &c)| degree * c)
            .sum();
        Some(sum as f64 / count as f64)
    }
}

/// The efficiency denominator: every user collects the utilities of its
/// `min(b, positive count)` best documents, regardless of what any search
/// would have surfaced.
pub fn max_total_utility(world: &TopicWorld, b: usize) -> f64 {
    let mut total = 0.0;
    for user in 0..world.m() {
        let mut values: Vec<f64> = world.utility_row(user).iter().map(|&(_, v)| v).collect();
        values.sort_by(|x, y| y.total_cmp(x));
        let take = b.min(values.len());
        let subtotal: f64 = values[..take].iter().sum();
        total += subtotal;
    }
    total
}

/// Failure computing an efficiency ratio.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EfficiencyError {
    #[error("total utility must be positive (got {0})")]
    ZeroTotalUtility(f64),
}

/// Attained utility of one iteration as a fraction of the maximum total
/// utility.
pub fn efficiency(record: &IterationRecord, total_utility: f64) -> Result<f64, EfficiencyError> {
    if !(total_utility > 0.0) {
        return Err(EfficiencyError::ZeroTotalUtility(total_utility));
    }
    Ok(record.attained_utility / total_utility)
}
