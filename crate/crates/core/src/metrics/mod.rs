//! Agreement and similarity statistics.
//!
//! Every function here is pure. Undefined results (zero variance, no
//! positives, ...) come back as [`Definedness::Degenerate`] rather than a
//! silent zero so that callers aggregating over annotator pairs can skip
//! them explicitly.

mod correlation;
mod f1;
mod kappa;
mod krippendorff;
mod rouge;
pub mod special;
mod welch;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{midranks, pearson_r, spearman_rho};
pub use f1::binary_f1;
pub use kappa::{quadratic_weighted_kappa, RatingVector};
pub use krippendorff::{krippendorff_alpha, Distance};
pub use rouge::{rouge_l, rouge_l_text, tokenize, RougeScore};
pub use welch::{welch_t_test, WelchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateReason {
    /// A vector is constant, so a correlation or chance term is 0/0.
    ZeroVariance,
    /// Expected disagreement is zero.
    ZeroExpectedDisagreement,
    /// Neither prediction nor gold contains the positive class.
    NoPositives,
    /// Only one distinct value among pairable ratings.
    SingleValue,
    /// Fewer than two items remain after exclusions.
    TooFewItems,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Definedness {
    Defined,
    Degenerate(DegenerateReason),
}

/// A statistic plus the number of items it was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    /// NaN when degenerate (serialized as `null`).
    pub value: f64,
    pub n_items: usize,
    pub definedness: Definedness,
}

impl MetricValue {
    pub fn defined(value: f64, n_items: usize) -> Self {
        Self {
            value,
            n_items,
            definedness: Definedness::Defined,
        }
    }

    pub fn degenerate(reason: DegenerateReason, n_items: usize) -> Self {
        Self {
            value: f64::NAN,
            n_items,
            definedness: Definedness::Degenerate(reason),
        }
    }

    pub fn is_defined(&self) -> bool {
        self.definedness == Definedness::Defined
    }

    pub fn get(&self) -> Option<f64> {
        self.is_defined().then_some(self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },
    #[error("value {0} is not in the category set")]
    UnknownCategory(i64),
    #[error("no pairable values")]
    NoPairableValues,
    #[error("every rater pair is degenerate")]
    AllPairsDegenerate,
    #[error("empty text")]
    EmptyText,
}

pub(crate) fn check_lengths(left: usize, right: usize) -> Result<(), MetricError> {
    if left != right {
        return Err(MetricError::LengthMismatch { left, right });
    }
    Ok(())
}

/// Result of averaging a pairwise metric over all rater pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseAverage {
    pub mean: MetricValue,
    pub pairs: Vec<PairResult>,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub left: usize,
    pub right: usize,
    pub value: MetricValue,
}

/// Arithmetic mean of `metric` over every unordered pair `(i, j)`, `i < j`.
/// Degenerate pairs are skipped and counted.
pub fn pairwise_average<T, F>(raters: &[T], mut metric: F) -> Result<PairwiseAverage, MetricError>
where
    F: FnMut(&T, &T) -> Result<MetricValue, MetricError>,
{
    if raters.len() < 2 {
        return Err(MetricError::TooFewItems {
            needed: 2,
            got: raters.len(),
        });
    }
    let mut pairs = Vec::new();
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            pairs.push(PairResult {
                left: i,
                right: j,
                value: metric(&raters[i], &raters[j])?,
            });
        }
    }
    let defined: Vec<&MetricValue> = pairs
        .iter()
        .map(|p| &p.value)
        .filter(|v| v.is_defined())
        .collect();
    if defined.is_empty() {
        return Err(MetricError::AllPairsDegenerate);
    }
    let mean = defined.iter().map(|v| v.value).sum::<f64>() / defined.len() as f64;
    let n_items = defined.iter().map(|v| v.n_items).max().unwrap_or(0);
    Ok(PairwiseAverage {
        mean: MetricValue::defined(mean, n_items),
        skipped: pairs.len() - defined.len(),
        pairs,
    })
}
