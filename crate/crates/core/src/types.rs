//! Domain records shared by every stage of the pipeline.
//!
//! One input line carries one sample of one instance:
//!
//! ```text
//! { "instance_id": string, "question": string, "context": [string],
//!   "reasoning": string, "answer": string,
//!   "reasoning_logprobs": [number], "answer_logprobs": [number],
//!   "judge": {"q_entail", "d_relevance", "a_entail", "coherence"} | null,
//!   "correct": boolean | null }
//! ```
//!
//! Log-probabilities are natural logs. Lines of one instance are contiguous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One model sample split into question, context, reasoning and answer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Quadruple<T = f64> {
    pub question: String,
    pub context: Vec<String>,
    pub reasoning: String,
    pub answer: String,
    pub reasoning_logprobs: Vec<T>,
    pub answer_logprobs: Vec<T>,
    /// Ground-truth answer, only consulted when coherence judging is asked to append it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_answer: Option<String>,
}

impl<T: Scalar> Quadruple<T> {
    pub fn new(
        question: impl Into<String>,
        context: Vec<String>,
        reasoning: impl Into<String>,
        answer: impl Into<String>,
        reasoning_logprobs: Vec<T>,
        answer_logprobs: Vec<T>,
    ) -> Self {
        Self {
            question: question.into(),
            context,
            reasoning: reasoning.into(),
            answer: answer.into(),
            reasoning_logprobs,
            answer_logprobs,
            reference_answer: None,
        }
    }
}

/// Raw external-judge measurements for one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct JudgeScores<T = f64> {
    /// Entailment between question and reasoning.
    pub q_entail: T,
    /// Semantic relevance between reasoning and context.
    pub d_relevance: T,
    /// Entailment of the answer by the reasoning.
    pub a_entail: T,
    /// Outcome-judge score of the reasoning.
    pub coherence: T,
}

impl<T: Scalar> JudgeScores<T> {
    pub fn new(q_entail: T, d_relevance: T, a_entail: T, coherence: T) -> Self {
        Self {
            q_entail,
            d_relevance,
            a_entail,
            coherence,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("q_entail", self.q_entail),
            ("d_relevance", self.d_relevance),
            ("a_entail", self.a_entail),
            ("coherence", self.coherence),
        ];
        for (what, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what,
                    index: 0,
                    value: value.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Verified answer correctness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrectnessLabel(pub bool);

impl CorrectnessLabel {
    pub fn is_correct(self) -> bool {
        self.0
    }
}

impl From<bool> for CorrectnessLabel {
    fn from(value: bool) -> Self {
        Self(value)
    }
}

/// A quadruple together with its optional judge scores and correctness label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Sample<T = f64> {
    #[serde(flatten)]
    pub quadruple: Quadruple<T>,
    #[serde(default)]
    pub judge: Option<JudgeScores<T>>,
    #[serde(default)]
    pub correct: Option<CorrectnessLabel>,
}

impl<T: Scalar> Sample<T> {
    pub fn new(quadruple: Quadruple<T>) -> Self {
        Self {
            quadruple,
            judge: None,
            correct: None,
        }
    }

    pub fn with_judge(mut self, judge: JudgeScores<T>) -> Self {
        self.judge = Some(judge);
        self
    }

    pub fn with_label(mut self, correct: bool) -> Self {
        self.correct = Some(CorrectnessLabel(correct));
        self
    }
}

/// All samples generated from one instance. Sample indices are the tie-break key everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGroup<T = f64> {
    pub instance_id: String,
    pub samples: Vec<Sample<T>>,
}

impl<T: Scalar> SampleGroup<T> {
    pub fn new(instance_id: impl Into<String>, samples: Vec<Sample<T>>) -> Self {
        Self {
            instance_id: instance_id.into(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Correctness labels in sample order, failing on the first unlabeled sample.
    pub fn labels(&self) -> Result<Vec<bool>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(index, s)| {
                s.correct
                    .map(CorrectnessLabel::is_correct)
                    .ok_or(Error::MissingLabel { index })
            })
            .collect()
    }

    /// Whether every sample already carries judge scores.
    pub fn is_judged(&self) -> bool {
        self.samples.iter().all(|s| s.judge.is_some())
    }

    /// Borrowed line views in sample order, ready for [`crate::io::write_records`].
    pub fn lines(&self) -> impl Iterator<Item = SampleLineRef<'_, T>> {
        self.samples.iter().map(move |sample| SampleLineRef {
            instance_id: &self.instance_id,
            sample,
        })
    }
}

/// One input line as read from disk.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SampleLine<T = f64> {
    pub instance_id: String,
    #[serde(flatten)]
    pub sample: Sample<T>,
}

/// One input line as written to disk.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct SampleLineRef<'a, T = f64> {
    pub instance_id: &'a str,
    #[serde(flatten)]
    pub sample: &'a Sample<T>,
}

/// The three raw (or normalized) dimension scores of one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DimensionScores<T = f64> {
    pub conf: T,
    pub rel: T,
    pub coh: T,
}

impl<T: Scalar> DimensionScores<T> {
    pub fn new(conf: T, rel: T, coh: T) -> Self {
        Self { conf, rel, coh }
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.conf, self.rel, self.coh]
    }

    pub fn from_array([conf, rel, coh]: [T; 3]) -> Self {
        Self { conf, rel, coh }
    }
}
