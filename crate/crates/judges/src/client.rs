//! Batched, bounded-concurrency HTTP scoring with retries.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use drm_core::{JudgeScores, SampleGroup, Scalar};
use rand::Rng;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::JudgeError;
use crate::wire::{
    coherence_item, relevance_item, CoherenceScore, RelevanceScore, ScoreItem, ScoreRequest,
    ScoreResponse,
};

/// One judge service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeEndpointConfig {
    pub base_url: String,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub batch_size: usize,
    /// First backoff ceiling; doubles per retry up to `backoff_cap`.
    #[serde(with = "secs")]
    pub backoff_base: Duration,
    #[serde(with = "secs")]
    pub backoff_cap: Duration,
}

impl Default for JudgeEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            timeout: Duration::from_secs(60),
            max_in_flight: 4,
            max_retries: 3,
            batch_size: 16,
            backoff_base: Duration::from_millis(250),
            backoff_cap: Duration::from_secs(10),
        }
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

impl JudgeEndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.base_url.is_empty() {
            return Err(JudgeError::Config("base_url is empty".into()));
        }
        reqwest::Url::parse(&self.base_url)
            .map_err(|e| JudgeError::Config(format!("base_url `{}`: {e}", self.base_url)))?;
        if self.max_in_flight == 0 {
            return Err(JudgeError::Config(
                "max_in_flight must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(JudgeError::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn score_url(&self) -> String {
        format!("{}/score", self.base_url.trim_end_matches('/'))
    }

    /// Full-jitter delay before retry number `retry` (0-based).
    fn backoff(&self, retry: u32) -> Duration {
        let ceiling = self
            .backoff_base
            .saturating_mul(1u32.checked_shl(retry).unwrap_or(u32::MAX))
            .min(self.backoff_cap);
        if ceiling.is_zero() {
            return ceiling;
        }
        ceiling.mul_f64(rand::rng().random::<f64>())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FetchOptions {
    /// Append each sample's reference answer to the reasoning sent to the coherence judge.
    pub append_reference_answer: bool,
}

/// Position of a sample that still needs scores.
#[derive(Clone, Copy, Debug)]
struct Slot {
    group: usize,
    sample: usize,
}

type BatchOutcome<S> = Result<Vec<S>, JudgeError>;

enum Attempt {
    Retry(String),
    Fatal(JudgeError),
}

/// Posts batches to one endpoint, keeping at most `max_in_flight` requests open.
struct Endpoint<'a> {
    cfg: &'a JudgeEndpointConfig,
    client: Client,
    url: String,
}

impl<'a> Endpoint<'a> {
    fn new(cfg: &'a JudgeEndpointConfig) -> Result<Self, JudgeError> {
        cfg.validate()?;
        let client = Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| JudgeError::Client(e.to_string()))?;
        Ok(Self {
            cfg,
            client,
            url: cfg.score_url(),
        })
    }

    fn post<S: DeserializeOwned>(
        &self,
        items: &[ScoreItem],
        first: (&str, usize),
    ) -> Result<Vec<S>, JudgeError> {
        let request = ScoreRequest {
            items: items.to_vec(),
        };
        let (instance_id, index) = first;
        let mut last = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                thread::sleep(self.cfg.backoff(attempt - 1));
            }
            match self.try_once::<S>(&request, items.len(), first) {
                Ok(scores) => return Ok(scores),
                Err(Attempt::Fatal(err)) => return Err(err),
                Err(Attempt::Retry(reason)) => last = reason,
            }
        }
        Err(JudgeError::Exhausted {
            instance_id: instance_id.to_owned(),
            index,
            url: self.url.clone(),
            attempts: self.cfg.max_retries + 1,
            last,
        })
    }

    fn try_once<S: DeserializeOwned>(
        &self,
        request: &ScoreRequest,
        expected: usize,
        (instance_id, index): (&str, usize),
    ) -> Result<Vec<S>, Attempt> {
        let response = self
            .client
            .post(&self.url)
            .json(request)
            .send()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status();
        let body = response.text().map_err(|e| Attempt::Retry(e.to_string()))?;
        if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
            return Err(Attempt::Retry(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(JudgeError::Rejected {
                instance_id: instance_id.to_owned(),
                index,
                url: self.url.clone(),
                status: status.as_u16(),
                body,
            }));
        }
        let schema = |message: String| {
            Attempt::Fatal(JudgeError::Schema {
                instance_id: instance_id.to_owned(),
                index,
                url: self.url.clone(),
                message,
            })
        };
        let parsed: ScoreResponse<S> =
            serde_json::from_str(&body).map_err(|e| schema(e.to_string()))?;
        if parsed.scores.len() != expected {
            return Err(schema(format!(
                "expected {expected} scores, got {}",
                parsed.scores.len()
            )));
        }
        Ok(parsed.scores)
    }

    /// Scores every item; output `i` belongs to input `i` whatever the completion order.
    fn score_all<S: DeserializeOwned + Send>(
        &self,
        items: &[ScoreItem],
        owners: &[(&str, usize)],
    ) -> Result<Vec<S>, JudgeError> {
        let batches: Vec<std::ops::Range<usize>> = (0..items.len())
            .step_by(self.cfg.batch_size)
            .map(|start| start..(start + self.cfg.batch_size).min(items.len()))
            .collect();
        let results: Vec<Mutex<Option<BatchOutcome<S>>>> =
            batches.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.cfg.max_in_flight.min(batches.len());
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let b = next.fetch_add(1, Ordering::Relaxed);
                    let Some(range) = batches.get(b) else { break };
                    let outcome = self.post::<S>(&items[range.clone()], owners[range.start]);
                    let failed = outcome.is_err();
                    *results[b].lock().unwrap() = Some(outcome);
                    if failed {
                        // Stop handing out work; batches already in flight finish.
                        next.store(batches.len(), Ordering::Relaxed);
                        break;
                    }
                });
            }
        });
        let mut scores = Vec::with_capacity(items.len());
        for slot in results {
            match slot.into_inner().unwrap() {
                Some(Ok(batch)) => scores.extend(batch),
                Some(Err(err)) => return Err(err),
                None => {}
            }
        }
        Ok(scores)
    }
}

/// Fills in judge scores for every sample that lacks them.
///
/// Samples that already carry scores are left untouched and generate no requests. Group
/// and sample order are preserved.
pub fn fetch_judge_scores<T: Scalar>(
    mut groups: Vec<SampleGroup<T>>,
    relevance_cfg: &JudgeEndpointConfig,
    coherence_cfg: &JudgeEndpointConfig,
    options: FetchOptions,
) -> Result<Vec<SampleGroup<T>>, JudgeError> {
    let slots: Vec<Slot> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, group)| {
            group
                .samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.judge.is_none())
                .map(move |(i, _)| Slot {
                    group: g,
                    sample: i,
                })
        })
        .collect();
    if slots.is_empty() {
        return Ok(groups);
    }
    let relevance = Endpoint::new(relevance_cfg)?;
    let coherence = Endpoint::new(coherence_cfg)?;

    let owners: Vec<(&str, usize)> = slots
        .iter()
        .map(|s| (groups[s.group].instance_id.as_str(), s.sample))
        .collect();
    let sample_at = |s: &Slot| &groups[s.group].samples[s.sample];
    let rel_items: Vec<ScoreItem> = slots.iter().map(|s| relevance_item(sample_at(s))).collect();
    let coh_items: Vec<ScoreItem> = slots
        .iter()
        .map(|s| coherence_item(sample_at(s), options.append_reference_answer))
        .collect();

    let rel: Vec<RelevanceScore<T>> = relevance.score_all(&rel_items, &owners)?;
    let coh: Vec<CoherenceScore<T>> = coherence.score_all(&coh_items, &owners)?;

    for ((slot, r), c) in slots.iter().zip(rel).zip(coh) {
        groups[slot.group].samples[slot.sample].judge = Some(JudgeScores::new(
            r.q_entail,
            r.d_relevance,
            r.a_entail,
            c.coherence,
        ));
    }
    Ok(groups)
}
