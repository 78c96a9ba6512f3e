//! Judge scores for [`drm_core`] sample groups.
//!
//! Scores come either from two HTTP services (a relevance judge returning
//! `q_entail`/`d_relevance`/`a_entail` and a coherence judge returning `coherence`) or from
//! an offline JSONL score file keyed by `(instance_id, index)`.

pub mod client;
pub mod error;
pub mod offline;
pub mod stub;
pub mod wire;

pub use client::{fetch_judge_scores, FetchOptions, JudgeEndpointConfig};
pub use error::JudgeError;
pub use offline::load_offline_scores;
