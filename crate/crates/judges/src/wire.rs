//! Request and response bodies of `POST {base_url}/score`.

use drm_core::{Sample, Scalar};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreItem {
    pub question: String,
    pub context: Vec<String>,
    pub reasoning: String,
    pub answer: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub items: Vec<ScoreItem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RelevanceScore<T = f64> {
    pub q_entail: T,
    pub d_relevance: T,
    pub a_entail: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CoherenceScore<T = f64> {
    pub coherence: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Serialize",
    deserialize = "S: serde::de::DeserializeOwned"
))]
pub struct ScoreResponse<S> {
    pub scores: Vec<S>,
}

/// Item for the relevance judge: the full quadruple.
pub fn relevance_item<T: Scalar>(sample: &Sample<T>) -> ScoreItem {
    let q = &sample.quadruple;
    ScoreItem {
        question: q.question.clone(),
        context: q.context.clone(),
        reasoning: q.reasoning.clone(),
        answer: q.answer.clone(),
    }
}

/// Item for the coherence judge: question and context are the prompt, the reasoning is the
/// judged response. With `append_reference`, the ground-truth answer (when present) is
/// appended to the reasoning.
pub fn coherence_item<T: Scalar>(sample: &Sample<T>, append_reference: bool) -> ScoreItem {
    let q = &sample.quadruple;
    let reasoning = match (&q.reference_answer, append_reference) {
        (Some(reference), true) => format!("{}\n\n{}", q.reasoning, reference),
        _ => q.reasoning.clone(),
    };
    ScoreItem {
        question: q.question.clone(),
        context: q.context.clone(),
        reasoning,
        answer: q.answer.clone(),
    }
}
