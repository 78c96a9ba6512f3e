//! Preference-pair construction from one group of samples.
//!
//! A [`SubsetRule`] decides which samples may be chosen (`pos`) and which rejected (`neg`);
//! a [`SupervisionMethod`] picks the pair inside those pools. `DRM` takes the highest reward
//! from the positive pool and the lowest from the negative pool, lowest index on ties. When
//! the pools overlap and both picks land on the same sample, the negative becomes the
//! lowest-reward sample distinct from the positive. `RLVR` draws uniformly from each pool
//! with a generator keyed by `(seed, instance_id)`, so draws do not depend on the order in
//! which groups are processed.
//!
//! Both pickers restrict their search to the declared pools, so `DRM@T+T` means the best
//! and worst *correct* samples.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::write_records;
use crate::scalar::Scalar;
use crate::stats::check_finite;
use crate::types::SampleGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubsetRule {
    #[serde(rename = "any")]
    Any,
    #[serde(rename = "T+T")]
    TrueTrue,
    #[serde(rename = "T+F")]
    TrueFalse,
    #[serde(rename = "F+F")]
    FalseFalse,
}

impl SubsetRule {
    pub const ALL: [SubsetRule; 4] = [
        SubsetRule::Any,
        SubsetRule::TrueTrue,
        SubsetRule::TrueFalse,
        SubsetRule::FalseFalse,
    ];

    pub fn needs_labels(self) -> bool {
        self != SubsetRule::Any
    }

    pub fn name(self) -> &'static str {
        match self {
            SubsetRule::Any => "any",
            SubsetRule::TrueTrue => "T+T",
            SubsetRule::TrueFalse => "T+F",
            SubsetRule::FalseFalse => "F+F",
        }
    }
}

impl fmt::Display for SubsetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubsetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "any" => Ok(SubsetRule::Any),
            "t+t" => Ok(SubsetRule::TrueTrue),
            "t+f" => Ok(SubsetRule::TrueFalse),
            "f+f" => Ok(SubsetRule::FalseFalse),
            _ => Err(Error::InvalidInput(format!(
                "unknown subset rule `{s}` (expected any, t+t, t+f or f+f)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SupervisionMethod {
    Drm,
    Rlvr { seed: u64 },
}

impl SupervisionMethod {
    pub fn name(self) -> &'static str {
        match self {
            SupervisionMethod::Drm => "DRM",
            SupervisionMethod::Rlvr { .. } => "RLVR",
        }
    }

    pub fn seed(self) -> Option<u64> {
        match self {
            SupervisionMethod::Drm => None,
            SupervisionMethod::Rlvr { seed } => Some(seed),
        }
    }

    /// `SUPERVISION@SUBSET` name, e.g. `DRM@T+F`.
    pub fn at(self, rule: SubsetRule) -> String {
        format!("{}@{}", self.name(), rule)
    }
}

impl fmt::Display for SupervisionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for SupervisionMethod {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Candidate pools for one group, as sorted sample indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pools {
    pub rule: SubsetRule,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct PreferencePair<T = f64> {
    pub instance_id: String,
    pub pos_index: usize,
    pub neg_index: usize,
    pub pos_reward: T,
    pub neg_reward: T,
    pub rule: SubsetRule,
    pub method: SupervisionMethod,
}

/// Splits the group into positive and negative pools. `Any` never reads labels.
pub fn build_subsets<T: Scalar>(group: &SampleGroup<T>, rule: SubsetRule) -> Result<Pools> {
    let all: Vec<usize> = (0..group.len()).collect();
    if !rule.needs_labels() {
        return Ok(Pools {
            rule,
            pos: all.clone(),
            neg: all,
        });
    }
    let labels = group.labels()?;
    let correct: Vec<usize> = all.iter().copied().filter(|&i| labels[i]).collect();
    let wrong: Vec<usize> = all.iter().copied().filter(|&i| !labels[i]).collect();
    let (pos, neg) = match rule {
        SubsetRule::Any => unreachable!(),
        SubsetRule::TrueTrue => (correct.clone(), correct),
        SubsetRule::TrueFalse => (correct, wrong),
        SubsetRule::FalseFalse => (wrong.clone(), wrong),
    };
    Ok(Pools { rule, pos, neg })
}

/// Deterministic generator for one instance under one seed.
pub fn instance_rng(seed: u64, instance_id: &str) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"drm-rlvr-v1");
    hasher.update(seed.to_le_bytes());
    hasher.update((instance_id.len() as u64).to_le_bytes());
    hasher.update(instance_id.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(key)
}

/// Uniform draw from `0..n` by rejection on 64-bit words; identical on every platform.
pub fn uniform_index<R: RngCore>(rng: &mut R, n: usize) -> usize {
    assert!(n > 0, "cannot draw from an empty range");
    let n = n as u64;
    // Largest multiple of n representable in u64, minus one.
    let reject_from = u64::MAX - (u64::MAX % n + 1) % n;
    loop {
        let x = rng.next_u64();
        if x <= reject_from {
            return (x % n) as usize;
        }
    }
}

/// Selects the single preference pair of the group, or `None` when no valid pair exists.
pub fn select_pair<T: Scalar>(
    group: &SampleGroup<T>,
    pools: &Pools,
    method: SupervisionMethod,
    rewards: &[T],
) -> Result<Option<PreferencePair<T>>> {
    Ok(select_pairs(group, pools, method, rewards, 1)?
        .into_iter()
        .next())
}

/// Up to `count` distinct pairs. The first pair is always the one [`select_pair`] returns.
///
/// For `DRM`, further pairs continue the same ordering: positive reward descending, then
/// positive index, then negative reward ascending, then negative index. For `RLVR`,
/// further pairs are additional draws from the same instance stream, skipping repeats.
pub fn select_pairs<T: Scalar>(
    group: &SampleGroup<T>,
    pools: &Pools,
    method: SupervisionMethod,
    rewards: &[T],
    count: usize,
) -> Result<Vec<PreferencePair<T>>> {
    if rewards.len() != group.len() {
        return Err(Error::LengthMismatch {
            expected: group.len(),
            actual: rewards.len(),
        });
    }
    check_finite("rewards", rewards)?;
    if let Some(&bad) = pools
        .pos
        .iter()
        .chain(&pools.neg)
        .find(|&&i| i >= group.len())
    {
        return Err(Error::DanglingIndex {
            instance_id: group.instance_id.clone(),
            index: bad,
        });
    }
    let picks = match method {
        SupervisionMethod::Drm => drm_picks(pools, rewards, count),
        SupervisionMethod::Rlvr { seed } => rlvr_picks(&group.instance_id, pools, seed, count),
    };
    Ok(picks
        .into_iter()
        .map(|(pos, neg)| PreferencePair {
            instance_id: group.instance_id.clone(),
            pos_index: pos,
            neg_index: neg,
            pos_reward: rewards[pos],
            neg_reward: rewards[neg],
            rule: pools.rule,
            method,
        })
        .collect())
}

fn by_reward_desc<T: Scalar>(rewards: &[T]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        rewards[b]
            .partial_cmp(&rewards[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

fn by_reward_asc<T: Scalar>(rewards: &[T]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        rewards[a]
            .partial_cmp(&rewards[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

fn drm_picks<T: Scalar>(pools: &Pools, rewards: &[T], count: usize) -> Vec<(usize, usize)> {
    let mut pos = pools.pos.clone();
    pos.sort_by(by_reward_desc(rewards));
    let mut neg = pools.neg.clone();
    neg.sort_by(by_reward_asc(rewards));
    let mut picks = Vec::new();
    'outer: for &p in &pos {
        for &n in &neg {
            if picks.len() == count {
                break 'outer;
            }
            if p != n {
                picks.push((p, n));
            }
        }
    }
    picks
}

fn rlvr_picks(instance_id: &str, pools: &Pools, seed: u64, count: usize) -> Vec<(usize, usize)> {
    let overlap = pools.pos.iter().filter(|i| pools.neg.contains(i)).count();
    let available = pools.pos.len() * pools.neg.len() - overlap;
    let wanted = count.min(available);
    let mut rng = instance_rng(seed, instance_id);
    let mut picks: Vec<(usize, usize)> = Vec::with_capacity(wanted);
    while picks.len() < wanted {
        let p = pools.pos[uniform_index(&mut rng, pools.pos.len())];
        let others: Vec<usize> = pools.neg.iter().copied().filter(|&n| n != p).collect();
        if others.is_empty() {
            continue;
        }
        let n = others[uniform_index(&mut rng, others.len())];
        if !picks.contains(&(p, n)) {
            picks.push((p, n));
        }
    }
    picks
}

/// One line of the DPO training file.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct DpoRecord<T = f64> {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub metadata: PreferencePair<T>,
}

/// Question followed by the context passages, blank-line separated.
pub fn prompt_text<T: Scalar>(group: &SampleGroup<T>, index: usize) -> String {
    let q = &group.samples[index].quadruple;
    std::iter::once(q.question.as_str())
        .chain(q.context.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Reasoning followed by the answer, blank-line separated.
pub fn output_text<T: Scalar>(group: &SampleGroup<T>, index: usize) -> String {
    let q = &group.samples[index].quadruple;
    format!("{}\n\n{}", q.reasoning, q.answer)
}

/// Resolves each pair against its group and writes DPO JSONL; returns the line count.
pub fn emit_dpo_dataset<T: Scalar, W: Write>(
    pairs: &[PreferencePair<T>],
    groups: &[SampleGroup<T>],
    sink: W,
) -> Result<usize> {
    let by_id: HashMap<&str, &SampleGroup<T>> =
        groups.iter().map(|g| (g.instance_id.as_str(), g)).collect();
    let records = pairs
        .iter()
        .map(|pair| {
            let group =
                by_id
                    .get(pair.instance_id.as_str())
                    .ok_or_else(|| Error::UnknownInstance {
                        instance_id: pair.instance_id.clone(),
                    })?;
            for index in [pair.pos_index, pair.neg_index] {
                if index >= group.len() {
                    return Err(Error::DanglingIndex {
                        instance_id: pair.instance_id.clone(),
                        index,
                    });
                }
            }
            Ok(DpoRecord {
                prompt: prompt_text(group, pair.pos_index),
                chosen: output_text(group, pair.pos_index),
                rejected: output_text(group, pair.neg_index),
                metadata: pair.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_records(records, sink)
}
