//! Best-of-N selection accuracy and simplex grid search over [`DrmWeights`].

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dimensions::score_group;
use crate::error::{Error, Result};
use crate::reward::{normalize_dimensions, DrmWeights};
use crate::scalar::Scalar;
use crate::stats::argmax;
use crate::types::{DimensionScores, SampleGroup};

/// Outcome of best-of-N selection over a set of groups.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    pub n_instances: usize,
    pub correct_selections: usize,
    pub accuracy: f64,
    /// Accuracy per weight triple, keyed `"w_conf,w_rel,w_coh"`.
    pub per_weighting: BTreeMap<String, f64>,
    /// Expected accuracy of picking a sample uniformly at random.
    pub baseline_random: f64,
}

/// One evaluated grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GridPoint<T = f64> {
    pub weights: DrmWeights<T>,
    pub correct_selections: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GridSearchResult<T = f64> {
    pub best_weights: DrmWeights<T>,
    pub report: SelectionReport,
    pub table: Vec<GridPoint<T>>,
}

/// A group reduced to what selection needs: normalized dimensions and labels.
#[derive(Clone, Debug)]
struct Prepared<T> {
    normalized: Vec<DimensionScores<T>>,
    labels: Vec<bool>,
}

fn prepare<T: Scalar>(group: &SampleGroup<T>) -> Result<Prepared<T>> {
    let labels = group.labels()?;
    let normalized = normalize_dimensions(&score_group(group)?)?;
    Ok(Prepared { normalized, labels })
}

fn prepare_all<T: Scalar>(groups: &[SampleGroup<T>]) -> Result<Vec<Prepared<T>>> {
    groups.par_iter().map(prepare).collect()
}

fn best_index<T: Scalar>(normalized: &[DimensionScores<T>], weights: &DrmWeights<T>) -> usize {
    let rewards: Vec<T> = normalized.iter().map(|d| weights.combine(d)).collect();
    argmax(&rewards).expect("prepared groups are nonempty")
}

fn count_correct<T: Scalar>(prepared: &[Prepared<T>], weights: &DrmWeights<T>) -> usize {
    prepared
        .par_iter()
        .filter(|p| p.labels[best_index(&p.normalized, weights)])
        .count()
}

fn baseline(prepared: &[Prepared<impl Scalar>]) -> f64 {
    if prepared.is_empty() {
        return 0.0;
    }
    let total: f64 = prepared
        .iter()
        .map(|p| p.labels.iter().filter(|&&l| l).count() as f64 / p.labels.len() as f64)
        .sum();
    total / prepared.len() as f64
}

fn ratio(correct: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        correct as f64 / n as f64
    }
}

/// Index of the highest-reward sample, lowest index on ties.
pub fn select_best<T: Scalar>(group: &SampleGroup<T>, weights: &DrmWeights<T>) -> Result<usize> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let normalized = normalize_dimensions(&score_group(group)?)?;
    Ok(best_index(&normalized, weights))
}

/// Fraction of groups whose selected sample is labeled correct.
pub fn selection_accuracy<T: Scalar>(
    groups: &[SampleGroup<T>],
    weights: &DrmWeights<T>,
) -> Result<SelectionReport> {
    let prepared = prepare_all(groups)?;
    let correct = count_correct(&prepared, weights);
    let accuracy = ratio(correct, prepared.len());
    Ok(SelectionReport {
        n_instances: prepared.len(),
        correct_selections: correct,
        accuracy,
        per_weighting: BTreeMap::from([(weights.key(), accuracy)]),
        baseline_random: baseline(&prepared),
    })
}

/// All simplex points whose coordinates are multiples of `step`, ordered by
/// `(w_conf, w_rel)` ascending.
pub fn simplex_grid<T: Scalar>(step: f64) -> Result<Vec<DrmWeights<T>>> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidStep(step));
    }
    let divisions = (1.0 / step).round();
    if (divisions * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidStep(step));
    }
    let n = divisions as usize;
    let denom = T::from_usize(n).unwrap();
    let mut points = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 0..=n {
        for j in 0..=(n - i) {
            let k = n - i - j;
            let w = |c: usize| T::from_usize(c).unwrap() / denom;
            points.push(DrmWeights::new(w(i), w(j), w(k))?);
        }
    }
    Ok(points)
}

/// Evaluates every grid point and returns the most accurate one. Ties go to higher
/// `w_coh`, then higher `w_rel`, then higher `w_conf`.
pub fn grid_search<T: Scalar>(groups: &[SampleGroup<T>], step: f64) -> Result<GridSearchResult<T>> {
    let grid = simplex_grid::<T>(step)?;
    let prepared = prepare_all(groups)?;
    let n = prepared.len();
    let table: Vec<GridPoint<T>> = grid
        .into_iter()
        .map(|weights| {
            let correct = count_correct(&prepared, &weights);
            GridPoint {
                weights,
                correct_selections: correct,
                accuracy: ratio(correct, n),
            }
        })
        .collect();
    let best = table
        .iter()
        .max_by(|a, b| {
            a.correct_selections
                .cmp(&b.correct_selections)
                .then(a.weights.w_coh.partial_cmp(&b.weights.w_coh).unwrap())
                .then(a.weights.w_rel.partial_cmp(&b.weights.w_rel).unwrap())
                .then(a.weights.w_conf.partial_cmp(&b.weights.w_conf).unwrap())
        })
        .expect("grid is nonempty");
    let report = SelectionReport {
        n_instances: n,
        correct_selections: best.correct_selections,
        accuracy: best.accuracy,
        per_weighting: table
            .iter()
            .map(|p| (p.weights.key(), p.accuracy))
            .collect(),
        baseline_random: baseline(&prepared),
    };
    Ok(GridSearchResult {
        best_weights: best.weights,
        report,
        table,
    })
}

/// Plot-ready CSV: `w_conf,w_rel,w_coh,accuracy`, one row per grid point.
pub fn write_table_csv<T: Scalar, W: Write>(
    table: &[GridPoint<T>],
    mut sink: W,
) -> std::io::Result<()> {
    writeln!(sink, "w_conf,w_rel,w_coh,accuracy")?;
    for p in table {
        writeln!(
            sink,
            "{},{},{},{}",
            p.weights.w_conf, p.weights.w_rel, p.weights.w_coh, p.accuracy
        )?;
    }
    sink.flush()
}
