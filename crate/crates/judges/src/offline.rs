//! Joins precomputed judge scores onto sample groups.
//!
//! Score file: one `{"instance_id": string, "index": integer, "judge": {...}}` per line.
//! Entries for samples not present in the groups are ignored.

use std::collections::HashMap;
use std::io::BufRead;

use drm_core::{JudgeScores, SampleGroup, Scalar};
use serde::{Deserialize, Serialize};

use crate::error::JudgeError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScoreLine<T = f64> {
    pub instance_id: String,
    pub index: usize,
    pub judge: JudgeScores<T>,
}

pub fn read_score_file<T: Scalar, R: BufRead>(
    reader: R,
) -> Result<HashMap<(String, usize), JudgeScores<T>>, JudgeError> {
    let mut scores = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| JudgeError::ScoreRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ScoreLine<T> =
            serde_json::from_str(&line).map_err(|e| JudgeError::ScoreRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        let key = (entry.instance_id, entry.index);
        if scores.contains_key(&key) {
            return Err(JudgeError::DuplicateScore {
                instance_id: key.0,
                index: key.1,
            });
        }
        scores.insert(key, entry.judge);
    }
    Ok(scores)
}

/// Replaces every sample's judge scores with the file's entry for `(instance_id, index)`.
pub fn load_offline_scores<T: Scalar, R: BufRead>(
    mut groups: Vec<SampleGroup<T>>,
    score_file: R,
) -> Result<Vec<SampleGroup<T>>, JudgeError> {
    let mut scores = read_score_file::<T, R>(score_file)?;
    for group in &mut groups {
        for (index, sample) in group.samples.iter_mut().enumerate() {
            let key = (group.instance_id.clone(), index);
            match scores.remove(&key) {
                Some(judge) => sample.judge = Some(judge),
                None => {
                    return Err(JudgeError::MissingScore {
                        instance_id: key.0,
                        index,
                    })
                }
            }
        }
    }
    Ok(groups)
}
