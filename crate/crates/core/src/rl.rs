//! Group-relative advantages and the per-token loss terms that consume them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dimensions::score_group;
use crate::error::{Error, Result};
use crate::reward::DrmWeights;
use crate::scalar::Scalar;
use crate::stats::{check_finite, z_score};
use crate::types::{CorrectnessLabel, DimensionScores, SampleGroup};

/// Which signal feeds the advantage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AdvantageMode {
    Rlvr,
    Drm,
    Combined,
}

impl AdvantageMode {
    pub fn needs_labels(self) -> bool {
        self != AdvantageMode::Drm
    }

    pub fn needs_judges(self) -> bool {
        self != AdvantageMode::Rlvr
    }
}

impl fmt::Display for AdvantageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdvantageMode::Rlvr => "RLVR",
            AdvantageMode::Drm => "DRM",
            AdvantageMode::Combined => "COMBINED",
        })
    }
}

impl FromStr for AdvantageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rlvr" => Ok(AdvantageMode::Rlvr),
            "drm" => Ok(AdvantageMode::Drm),
            "combined" => Ok(AdvantageMode::Combined),
            _ => Err(Error::InvalidInput(format!(
                "unknown advantage mode `{s}` (expected rlvr, drm or combined)"
            ))),
        }
    }
}

/// Sample-level advantage; trainers broadcast it over the sample's tokens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdvantageRecord<T = f64> {
    pub instance_id: String,
    pub index: usize,
    pub mode: AdvantageMode,
    pub rlvr_adv: Option<T>,
    pub drm_adv: Option<T>,
    pub combined_adv: T,
}

/// 1 for a verified-correct answer, 0 otherwise.
pub fn verifier_reward<T: Scalar>(label: CorrectnessLabel) -> T {
    if label.is_correct() {
        T::one()
    } else {
        T::zero()
    }
}

/// `(R_i - mean) / std` with population std; zeros when the std is below 1e-8.
pub fn group_advantage<T: Scalar>(rewards: &[T]) -> Result<Vec<T>> {
    z_score(rewards)
}

/// Weighted sum of per-dimension z-scores of the raw dimension scores.
pub fn drm_advantage<T: Scalar>(
    group_scores: &[DimensionScores<T>],
    weights: &DrmWeights<T>,
) -> Result<Vec<T>> {
    if group_scores.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let column =
        |pick: fn(&DimensionScores<T>) -> T| -> Vec<T> { group_scores.iter().map(pick).collect() };
    let conf = z_score(&column(|d| d.conf))?;
    let rel = z_score(&column(|d| d.rel))?;
    let coh = z_score(&column(|d| d.coh))?;
    Ok((0..group_scores.len())
        .map(|i| weights.w_conf * conf[i] + weights.w_rel * rel[i] + weights.w_coh * coh[i])
        .collect())
}

/// Advantages for one group under `mode`. Labels are read only for `RLVR`/`COMBINED`,
/// judge scores only for `DRM`/`COMBINED`.
pub fn combined_advantage<T: Scalar>(
    group: &SampleGroup<T>,
    mode: AdvantageMode,
    weights: &DrmWeights<T>,
) -> Result<Vec<AdvantageRecord<T>>> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let rlvr = if mode.needs_labels() {
        let rewards: Vec<T> = group
            .labels()?
            .into_iter()
            .map(|l| verifier_reward(CorrectnessLabel(l)))
            .collect();
        Some(group_advantage(&rewards)?)
    } else {
        None
    };
    let drm = if mode.needs_judges() {
        Some(drm_advantage(&score_group(group)?, weights)?)
    } else {
        None
    };
    Ok((0..group.len())
        .map(|i| {
            let rlvr_adv = rlvr.as_ref().map(|v| v[i]);
            let drm_adv = drm.as_ref().map(|v| v[i]);
            let combined_adv = match mode {
                AdvantageMode::Rlvr => rlvr_adv.unwrap(),
                AdvantageMode::Drm => drm_adv.unwrap(),
                AdvantageMode::Combined => rlvr_adv.unwrap() + drm_adv.unwrap(),
            };
            AdvantageRecord {
                instance_id: group.instance_id.clone(),
                index: i,
                mode,
                rlvr_adv,
                drm_adv,
                combined_adv,
            }
        })
        .collect())
}

/// One token's contribution to the clipped objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateInputs<T = f64> {
    /// Policy / old-policy probability ratio.
    pub ratio: T,
    pub advantage: T,
    pub clip_eps: T,
    /// Per-token KL contribution.
    pub kl: T,
    pub beta: T,
}

impl<T: Scalar> SurrogateInputs<T> {
    pub fn validate(&self) -> Result<()> {
        check_finite(
            "surrogate",
            &[
                self.ratio,
                self.advantage,
                self.clip_eps,
                self.kl,
                self.beta,
            ],
        )?;
        if self.ratio <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "ratio {} must be positive",
                self.ratio
            )));
        }
        if self.clip_eps <= T::zero() || self.clip_eps >= T::one() {
            return Err(Error::InvalidInput(format!(
                "clip_eps {} must lie in (0, 1)",
                self.clip_eps
            )));
        }
        if self.kl < T::zero() || self.beta < T::zero() {
            return Err(Error::InvalidInput(
                "kl and beta must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// `min(r * A, clip(r, 1 - eps, 1 + eps) * A) - beta * kl`.
pub fn surrogate_term<T: Scalar>(inputs: &SurrogateInputs<T>) -> Result<T> {
    inputs.validate()?;
    let SurrogateInputs {
        ratio,
        advantage,
        clip_eps,
        kl,
        beta,
    } = *inputs;
    let clipped = ratio.max(T::one() - clip_eps).min(T::one() + clip_eps);
    Ok((ratio * advantage).min(clipped * advantage) - beta * kl)
}

/// `exp(d) - d - 1` with `d = logp_ref - logp_policy`; nonnegative, unbiased for KL(policy || ref).
pub fn kl_estimate<T: Scalar>(logp_policy: T, logp_ref: T) -> T {
    let d = logp_ref - logp_policy;
    // exp_m1 keeps precision when the log-probs are close.
    (d.exp_m1() - d).max(T::zero())
}

/// `-log(sigmoid(x))`, stable for large |x|.
pub fn neg_log_sigmoid<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Sequence log-probabilities for one preference pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpoInputs<T = f64> {
    pub logp_pos_policy: T,
    pub logp_pos_ref: T,
    pub logp_neg_policy: T,
    pub logp_neg_ref: T,
}

impl<T: Scalar> DpoInputs<T> {
    /// `(pos policy - pos ref) - (neg policy - neg ref)`.
    pub fn margin(&self) -> T {
        (self.logp_pos_policy - self.logp_pos_ref) - (self.logp_neg_policy - self.logp_neg_ref)
    }
}

/// DPO loss on one pair plus `lambda_sft` times the negative log-likelihood of the chosen output.
pub fn dpo_sft_loss<T: Scalar>(inputs: &DpoInputs<T>, beta: T, lambda_sft: T) -> Result<T> {
    check_finite(
        "dpo",
        &[
            inputs.logp_pos_policy,
            inputs.logp_pos_ref,
            inputs.logp_neg_policy,
            inputs.logp_neg_ref,
            beta,
            lambda_sft,
        ],
    )?;
    if beta <= T::zero() {
        return Err(Error::InvalidInput(format!("beta {beta} must be positive")));
    }
    if lambda_sft < T::zero() {
        return Err(Error::InvalidInput(format!(
            "lambda_sft {lambda_sft} must be nonnegative"
        )));
    }
    Ok(neg_log_sigmoid(beta * inputs.margin()) + lambda_sft * -inputs.logp_pos_policy)
}
