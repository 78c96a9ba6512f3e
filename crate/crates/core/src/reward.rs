//! Group-normalized, weighted aggregation of dimension scores into one reward per sample.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dimensions::score_group;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::{check_finite, min_max};
use crate::types::{DimensionScores, SampleGroup};

/// Weights for Confidence, Relevance and Coherence; a point on the probability simplex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct DrmWeights<T = f64> {
    pub w_conf: T,
    pub w_rel: T,
    pub w_coh: T,
}

impl<T: Scalar> DrmWeights<T> {
    /// Validates that each weight lies in `[0, 1]` and that they sum to one.
    pub fn new(w_conf: T, w_rel: T, w_coh: T) -> Result<Self> {
        let parts = [w_conf, w_rel, w_coh];
        if parts
            .iter()
            .any(|w| !w.is_finite() || *w < T::zero() || *w > T::one())
        {
            return Err(Error::InvalidWeights(format!(
                "({w_conf}, {w_rel}, {w_coh}): each weight must lie in [0, 1]"
            )));
        }
        let total = w_conf + w_rel + w_coh;
        if (total - T::one()).abs() > T::weight_tolerance() {
            return Err(Error::InvalidWeights(format!(
                "({w_conf}, {w_rel}, {w_coh}) sums to {total}, not 1"
            )));
        }
        Ok(Self {
            w_conf,
            w_rel,
            w_coh,
        })
    }

    /// Rescales nonnegative weights so they sum to one.
    pub fn renormalized(w_conf: T, w_rel: T, w_coh: T) -> Result<Self> {
        let total = w_conf + w_rel + w_coh;
        if [w_conf, w_rel, w_coh]
            .iter()
            .any(|w| !w.is_finite() || *w < T::zero())
            || total <= T::zero()
        {
            return Err(Error::InvalidWeights(format!(
                "({w_conf}, {w_rel}, {w_coh}) cannot be renormalized"
            )));
        }
        Self::new(w_conf / total, w_rel / total, w_coh / total)
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.w_conf, self.w_rel, self.w_coh]
    }

    /// `"0.1,0.2,0.7"` style key used in reports.
    pub fn key(&self) -> String {
        format!("{},{},{}", self.w_conf, self.w_rel, self.w_coh)
    }

    /// `sum_d w_d * x_d`, written as `0.5 + sum_d w_d * (x_d - 0.5)` so that a sample at the
    /// centre of every dimension scores exactly 0.5. Clamped to `[0, 1]` against rounding.
    pub fn combine(&self, dims: &DimensionScores<T>) -> T {
        let half = T::lit(0.5);
        let value = half
            + self.w_conf * (dims.conf - half)
            + self.w_rel * (dims.rel - half)
            + self.w_coh * (dims.coh - half);
        value.max(T::zero()).min(T::one())
    }
}

impl Default for DrmWeights<f64> {
    fn default() -> Self {
        Self {
            w_conf: 0.1,
            w_rel: 0.2,
            w_coh: 0.7,
        }
    }
}

impl Default for DrmWeights<f32> {
    fn default() -> Self {
        Self {
            w_conf: 0.1,
            w_rel: 0.2,
            w_coh: 0.7,
        }
    }
}

impl<T: Scalar> fmt::Display for DrmWeights<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl<T: Scalar> FromStr for DrmWeights<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<T> = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| Error::InvalidWeights(format!("`{s}` is not a,b,c")))
            })
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b, c] => Self::new(a, b, c),
            _ => Err(Error::InvalidWeights(format!(
                "`{s}` needs exactly three values"
            ))),
        }
    }
}

/// Per-sample reward output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RewardRecord<T = f64> {
    pub instance_id: String,
    pub index: usize,
    pub dims_raw: DimensionScores<T>,
    pub dims_norm: DimensionScores<T>,
    pub drm_reward: T,
}

/// Min-max normalization within the group; constant groups map to 0.5.
pub fn normalize_within_group<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    min_max(values)
}

/// Normalizes each dimension across the group.
pub fn normalize_dimensions<T: Scalar>(
    group_scores: &[DimensionScores<T>],
) -> Result<Vec<DimensionScores<T>>> {
    if group_scores.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let column = |pick: fn(&DimensionScores<T>) -> T, what: &'static str| -> Result<Vec<T>> {
        let values: Vec<T> = group_scores.iter().map(pick).collect();
        check_finite(what, &values)?;
        normalize_within_group(&values)
    };
    let conf = column(|d| d.conf, "conf")?;
    let rel = column(|d| d.rel, "rel")?;
    let coh = column(|d| d.coh, "coh")?;
    Ok((0..group_scores.len())
        .map(|i| DimensionScores::new(conf[i], rel[i], coh[i]))
        .collect())
}

/// Rewards only, in sample order.
pub fn drm_rewards<T: Scalar>(
    group_scores: &[DimensionScores<T>],
    weights: &DrmWeights<T>,
) -> Result<Vec<T>> {
    Ok(normalize_dimensions(group_scores)?
        .iter()
        .map(|d| weights.combine(d))
        .collect())
}

/// Full reward records for one group.
pub fn drm_reward<T: Scalar>(
    instance_id: &str,
    group_scores: &[DimensionScores<T>],
    weights: &DrmWeights<T>,
) -> Result<Vec<RewardRecord<T>>> {
    let normalized = normalize_dimensions(group_scores)?;
    Ok(group_scores
        .iter()
        .zip(normalized)
        .enumerate()
        .map(|(index, (raw, norm))| RewardRecord {
            instance_id: instance_id.to_owned(),
            index,
            dims_raw: *raw,
            dims_norm: norm,
            drm_reward: weights.combine(&norm),
        })
        .collect())
}

/// Scores the group's dimensions and aggregates them.
pub fn score_rewards<T: Scalar>(
    group: &SampleGroup<T>,
    weights: &DrmWeights<T>,
) -> Result<Vec<RewardRecord<T>>> {
    drm_reward(&group.instance_id, &score_group(group)?, weights)
}
