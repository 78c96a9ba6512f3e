use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "drm",
    version,
    about = "Dimension-level reasoning rewards: scoring, preference pairs, advantages and best-of-N evaluation",
    after_help = "Exit codes: 0 success, 2 I/O error, 3 malformed input, 4 judge failure, 5 invalid value."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Input JSONL (stdin when omitted)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// TOML file with defaults and judge endpoints
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for group-level parallelism (0 = one per core)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for random pair selection
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attach judge scores and write per-sample dimension scores and rewards
    Score(ScoreArgs),
    /// Build a DPO preference dataset
    BuildPairs(BuildPairsArgs),
    /// Write per-sample group-relative advantages
    Advantages(AdvantagesArgs),
    /// Evaluate every weight triple on a simplex grid and write a CSV table
    GridSearch(GridSearchArgs),
    /// Best-of-N selection accuracy for one weight triple
    EvalSelect(EvalSelectArgs),
}

/// Where missing judge scores come from.
#[derive(Debug, Default, Args)]
pub struct JudgeArgs {
    /// Relevance judge base URL (overrides the config file)
    #[arg(long)]
    pub relevance_url: Option<String>,
    /// Coherence judge base URL (overrides the config file)
    #[arg(long)]
    pub coherence_url: Option<String>,
    /// JSONL file of precomputed judge scores keyed by instance_id and index
    #[arg(long)]
    pub offline_scores: Option<PathBuf>,
    /// Append each sample's reference answer to the reasoning sent to the coherence judge
    #[arg(long)]
    pub append_reference_answer: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Weights as w_conf,w_rel,w_coh
    #[arg(long)]
    pub weights: Option<String>,
    #[command(flatten)]
    pub judges: JudgeArgs,
}

#[derive(Debug, Args)]
pub struct BuildPairsArgs {
    /// Subset rule: any, t+t, t+f or f+f
    #[arg(long)]
    pub rule: Option<String>,
    /// Supervision method: drm or rlvr
    #[arg(long)]
    pub method: Option<String>,
    /// Weights as w_conf,w_rel,w_coh
    #[arg(long)]
    pub weights: Option<String>,
    /// Maximum number of pairs per instance
    #[arg(long)]
    pub pairs_per_instance: Option<usize>,
    /// Write a JSON manifest with pair counts here
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub judges: JudgeArgs,
}

#[derive(Debug, Args)]
pub struct AdvantagesArgs {
    /// Advantage mode: rlvr, drm or combined
    #[arg(long)]
    pub mode: Option<String>,
    /// Weights as w_conf,w_rel,w_coh
    #[arg(long)]
    pub weights: Option<String>,
    #[command(flatten)]
    pub judges: JudgeArgs,
}

#[derive(Debug, Args)]
pub struct GridSearchArgs {
    /// Grid resolution; 1/step must be an integer
    #[arg(long)]
    pub step: Option<f64>,
    /// Also write the full JSON result here
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub judges: JudgeArgs,
}

#[derive(Debug, Args)]
pub struct EvalSelectArgs {
    /// Weights as w_conf,w_rel,w_coh
    #[arg(long)]
    pub weights: Option<String>,
    /// Also write a one-row CSV (weights and accuracy) here
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub judges: JudgeArgs,
}
