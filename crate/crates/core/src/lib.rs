//! Dimension-level reasoning rewards.
//!
//! A sample of an LLM is split into question, context, reasoning and answer. Each sample is
//! scored along three dimensions (Confidence from token log-probabilities, Relevance and
//! Coherence from external judges); the dimensions are normalized within the sample's group
//! and combined by a weight triple into a reward in `[0, 1]`. On top of that reward the crate
//! builds DPO preference pairs, GRPO-style advantages and best-of-N evaluation.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`). Record types default
//! to `f64`; the `*F32` aliases below name the single-precision variants.

pub mod dimensions;
pub mod error;
pub mod eval;
pub mod io;
pub mod pairs;
pub mod reward;
pub mod rl;
pub mod scalar;
pub mod stats;
pub mod types;

pub use error::{Error, ErrorKind, Result};
pub use eval::{GridSearchResult, SelectionReport};
pub use pairs::{Pools, PreferencePair, SubsetRule, SupervisionMethod};
pub use reward::{DrmWeights, RewardRecord};
pub use rl::{AdvantageMode, AdvantageRecord, SurrogateInputs};
pub use scalar::Scalar;
pub use types::{CorrectnessLabel, DimensionScores, JudgeScores, Quadruple, Sample, SampleGroup};

pub type QuadrupleF32 = Quadruple<f32>;
pub type JudgeScoresF32 = JudgeScores<f32>;
pub type SampleF32 = Sample<f32>;
pub type SampleGroupF32 = SampleGroup<f32>;
pub type DimensionScoresF32 = DimensionScores<f32>;
pub type DrmWeightsF32 = DrmWeights<f32>;
pub type RewardRecordF32 = RewardRecord<f32>;
pub type PreferencePairF32 = PreferencePair<f32>;
pub type AdvantageRecordF32 = AdvantageRecord<f32>;
