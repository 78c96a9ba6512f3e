//! Raw Confidence, Relevance and Coherence scores.
//!
//! Confidence is the mean token log-probability of the reasoning plus the summed token
//! log-probability of the answer. Relevance combines three judge metrics (question
//! entailment, context relevance, answer entailment) by min-max normalizing each within
//! the group and averaging. Coherence is the outcome judge's score, passed through.
//!
//! A metric that is constant across the group normalizes to 0.5, so singleton groups
//! always get relevance 0.5. An empty context is not special-cased: the judge is
//! expected to return a number for it like any other query.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::min_max;
use crate::types::{DimensionScores, Sample, SampleGroup};

fn check_logprobs<T: Scalar>(part: &'static str, logprobs: &[T]) -> Result<()> {
    if logprobs.is_empty() {
        return Err(Error::EmptyLogprobs { part });
    }
    for (index, &lp) in logprobs.iter().enumerate() {
        if !lp.is_finite() {
            return Err(Error::NonFinite {
                what: part,
                index,
                value: lp.as_f64(),
            });
        }
        if lp > T::zero() {
            return Err(Error::PositiveLogprob {
                part,
                index,
                value: lp.as_f64(),
            });
        }
    }
    Ok(())
}

/// `mean(reasoning_logprobs) + sum(answer_logprobs)`.
pub fn confidence_score<T: Scalar>(reasoning_logprobs: &[T], answer_logprobs: &[T]) -> Result<T> {
    check_logprobs("reasoning", reasoning_logprobs)?;
    check_logprobs("answer", answer_logprobs)?;
    let reasoning_mean = reasoning_logprobs.iter().copied().sum::<T>()
        / T::from_usize(reasoning_logprobs.len()).unwrap();
    let answer_sum = answer_logprobs.iter().copied().sum::<T>();
    Ok(reasoning_mean + answer_sum)
}

/// Per-sample relevance: the mean of the three within-group min-max normalized metrics.
pub fn relevance_scores<T: Scalar>(group: &SampleGroup<T>) -> Result<Vec<T>> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let judges = group
        .samples
        .iter()
        .enumerate()
        .map(|(index, s)| s.judge.ok_or(Error::MissingJudge { index }))
        .collect::<Result<Vec<_>>>()?;
    let q: Vec<T> = judges.iter().map(|j| j.q_entail).collect();
    let d: Vec<T> = judges.iter().map(|j| j.d_relevance).collect();
    let a: Vec<T> = judges.iter().map(|j| j.a_entail).collect();
    let (q, d, a) = (
        min_max(&q).map_err(rename("q_entail"))?,
        min_max(&d).map_err(rename("d_relevance"))?,
        min_max(&a).map_err(rename("a_entail"))?,
    );
    let three = T::lit(3.0);
    Ok((0..group.len())
        .map(|i| (q[i] + d[i] + a[i]) / three)
        .collect())
}

fn rename(what: &'static str) -> impl Fn(Error) -> Error {
    move |err| match err {
        Error::NonFinite { index, value, .. } => Error::AtSample {
            index,
            source: Box::new(Error::NonFinite {
                what,
                index: 0,
                value,
            }),
        },
        other => other,
    }
}

/// The judge's coherence score, unchanged.
pub fn coherence_score<T: Scalar>(sample: &Sample<T>) -> Result<T> {
    let judge = sample.judge.ok_or(Error::MissingJudge { index: 0 })?;
    if !judge.coherence.is_finite() {
        return Err(Error::NonFinite {
            what: "coherence",
            index: 0,
            value: judge.coherence.as_f64(),
        });
    }
    Ok(judge.coherence)
}

/// Raw dimension scores for every sample of the group, in sample order.
pub fn score_group<T: Scalar>(group: &SampleGroup<T>) -> Result<Vec<DimensionScores<T>>> {
    let relevance = relevance_scores(group)?;
    group
        .samples
        .iter()
        .zip(relevance)
        .enumerate()
        .map(|(index, (sample, rel))| {
            let q = &sample.quadruple;
            let conf = confidence_score(&q.reasoning_logprobs, &q.answer_logprobs)
                .map_err(Error::at_sample(index))?;
            let coh = coherence_score(sample).map_err(|err| match err {
                Error::MissingJudge { .. } => Error::MissingJudge { index },
                other => Error::at_sample(index)(other),
            })?;
            Ok(DimensionScores::new(conf, rel, coh))
        })
        .collect()
}
