use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use drm_core::dimensions::score_group;
use drm_core::eval::{grid_search, selection_accuracy, write_table_csv, GridPoint};
use drm_core::io::{read_all_groups, write_records};
use drm_core::pairs::{build_subsets, emit_dpo_dataset, select_pairs};
use drm_core::reward::{drm_rewards, score_rewards};
use drm_core::rl::{combined_advantage, verifier_reward};
use drm_core::types::SampleLineRef;
use drm_core::{
    CorrectnessLabel, DimensionScores, DrmWeights, PreferencePair, SampleGroup, SubsetRule,
    SupervisionMethod,
};
use drm_judges::{fetch_judge_scores, load_offline_scores};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    AdvantagesArgs, BuildPairsArgs, EvalSelectArgs, GridSearchArgs, JudgeArgs, ScoreArgs,
};
use crate::config::{JudgeSource, Settings};
use crate::failure::Failure;

fn open_input(settings: &Settings) -> Result<Box<dyn io::BufRead>, Failure> {
    let reader: Box<dyn Read> = match &settings.input {
        Some(path) => Box::new(File::open(path).map_err(|e| Failure::opening(path, e))?),
        None => Box::new(io::stdin().lock()),
    };
    Ok(Box::new(BufReader::new(reader)))
}

fn create(path: &Path) -> Result<Box<dyn Write>, Failure> {
    let file = File::create(path).map_err(|e| Failure::opening(path, e))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn open_output(settings: &Settings) -> Result<Box<dyn Write>, Failure> {
    match &settings.output {
        Some(path) => create(path),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<(), Failure> {
    let mut sink = create(path)?;
    let value = serde_json::to_value(value).map_err(|e| Failure::schema(e.to_string()))?;
    let text = serde_json::to_string_pretty(&value).map_err(|e| Failure::schema(e.to_string()))?;
    writeln!(sink, "{text}")
        .and_then(|_| sink.flush())
        .map_err(|e| Failure::opening(path, e))
}

/// Reads every group and orders them by instance_id so output order never depends on input
/// order or scheduling.
fn read_sorted(settings: &Settings) -> Result<Vec<SampleGroup>, Failure> {
    let mut groups = read_all_groups(open_input(settings)?)?;
    groups.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(groups)
}

/// Attaches judge scores from the configured source. With `required`, a sample left without
/// scores is a judge failure.
fn attach_judges(
    groups: Vec<SampleGroup>,
    source: &JudgeSource,
    required: bool,
) -> Result<Vec<SampleGroup>, Failure> {
    let groups = match source {
        JudgeSource::None => groups,
        JudgeSource::Offline(path) => {
            let file = File::open(path).map_err(|e| Failure::opening(path, e))?;
            load_offline_scores(groups, BufReader::new(file))?
        }
        JudgeSource::Endpoints {
            relevance,
            coherence,
            options,
        } => fetch_judge_scores(groups, relevance, coherence, *options)?,
    };
    if required {
        let missing: usize = groups
            .iter()
            .map(|g| g.samples.iter().filter(|s| s.judge.is_none()).count())
            .sum();
        if missing > 0 {
            return Err(Failure::judge(format!(
                "{missing} samples have no judge scores and no judge endpoints or offline score file are configured"
            )));
        }
    }
    Ok(groups)
}

fn load_groups(
    settings: &Settings,
    judges: &JudgeArgs,
    required: bool,
) -> Result<Vec<SampleGroup>, Failure> {
    let source = settings.judge_source(judges)?;
    attach_judges(read_sorted(settings)?, &source, required)
}

/// Runs `f` on every group in parallel and returns the results in group order, or the
/// first failure (by group order) after reporting all of them on stderr.
fn per_group<R: Send>(
    groups: &[SampleGroup],
    f: impl Fn(&SampleGroup) -> Result<R, Failure> + Sync,
) -> Result<Vec<R>, Failure> {
    let results: Vec<Result<R, Failure>> = groups
        .par_iter()
        .map(|g| f(g).map_err(|e| e.in_instance(&g.instance_id)))
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let mut out = Vec::with_capacity(results.len());
    let mut first = None;
    for result in results {
        match result {
            Ok(value) => out.push(value),
            Err(err) => {
                if failures > 1 {
                    eprintln!("error: {err}");
                }
                first.get_or_insert(err);
            }
        }
    }
    match first {
        None => Ok(out),
        Some(err) if failures > 1 => Err(Failure {
            code: err.code,
            message: format!("{failures} groups failed; first: {}", err.message),
        }),
        Some(err) => Err(err),
    }
}

fn sample_count(groups: &[SampleGroup]) -> usize {
    groups.iter().map(SampleGroup::len).sum()
}

/// Input line extended with its dimension scores and reward; valid input for every command.
#[derive(Serialize)]
struct ScoredLine<'a> {
    #[serde(flatten)]
    line: SampleLineRef<'a>,
    index: usize,
    dims_raw: DimensionScores,
    dims_norm: DimensionScores,
    drm_reward: f64,
}

pub fn score(settings: &Settings, args: &ScoreArgs) -> Result<(), Failure> {
    let weights = settings.weights(args.weights.as_deref())?;
    let groups = load_groups(settings, &args.judges, true)?;
    let results: Vec<_> = groups
        .par_iter()
        .map(|g| {
            score_rewards(g, &weights).map_err(|e| Failure::from(e).in_instance(&g.instance_id))
        })
        .collect();

    let mut sink = open_output(settings)?;
    let mut failures = Vec::new();
    let mut written = 0;
    for (group, result) in groups.iter().zip(results) {
        match result {
            Ok(records) => {
                let lines = group.lines().zip(records).map(|(line, r)| ScoredLine {
                    line,
                    index: r.index,
                    dims_raw: r.dims_raw,
                    dims_norm: r.dims_norm,
                    drm_reward: r.drm_reward,
                });
                written += write_records(lines, &mut sink)?;
            }
            Err(err) => {
                eprintln!("error: {err}");
                failures.push(err);
            }
        }
    }
    eprintln!(
        "score: {} groups, {} samples, {} records written, {} failed groups",
        groups.len(),
        sample_count(&groups),
        written,
        failures.len()
    );
    match failures.into_iter().next() {
        None => Ok(()),
        Some(first) => Err(first),
    }
}

/// Rewards that drive pair selection and are recorded in the pair metadata. DRM uses the
/// weighted dimension reward. RLVR uses the verifier reward, or zeros when labels are absent.
fn pair_rewards(
    group: &SampleGroup,
    method: SupervisionMethod,
    weights: &DrmWeights,
) -> Result<Vec<f64>, Failure> {
    match method {
        SupervisionMethod::Drm => Ok(drm_rewards(&score_group(group)?, weights)?),
        SupervisionMethod::Rlvr { .. } => Ok(match group.labels() {
            Ok(labels) => labels
                .into_iter()
                .map(|l| verifier_reward(CorrectnessLabel(l)))
                .collect(),
            Err(_) => vec![0.0; group.len()],
        }),
    }
}

#[derive(Serialize)]
struct PairManifest {
    name: String,
    method: SupervisionMethod,
    rule: SubsetRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<String>,
    pairs_per_instance: usize,
    groups: usize,
    groups_without_pair: usize,
    pairs: usize,
    /// Pair count the same method would produce under each subset rule; null when the rule
    /// needs labels that some group lacks.
    counts_by_rule: BTreeMap<String, Option<usize>>,
    warnings: Vec<String>,
}

pub fn build_pairs(settings: &Settings, args: &BuildPairsArgs) -> Result<(), Failure> {
    let rule = settings.rule(args.rule.as_deref())?;
    let method = settings.method(args.method.as_deref())?;
    let weights = settings.weights(args.weights.as_deref())?;
    let per_instance = settings.pairs_per_instance(args.pairs_per_instance)?;
    let needs_judges = method == SupervisionMethod::Drm;
    let groups = load_groups(settings, &args.judges, needs_judges)?;

    // Per group: pairs under the requested rule, and pair counts under every rule.
    let selected = per_group(&groups, |group| {
        let rewards = pair_rewards(group, method, &weights)?;
        let pairs_for = |r: SubsetRule| -> Result<Vec<PreferencePair>, Failure> {
            let pools = build_subsets(group, r)?;
            Ok(select_pairs(group, &pools, method, &rewards, per_instance)?)
        };
        let pairs = pairs_for(rule)?;
        let counts: Vec<Option<usize>> = SubsetRule::ALL
            .iter()
            .map(|&r| pairs_for(r).ok().map(|p| p.len()))
            .collect();
        Ok((pairs, counts))
    })?;

    let mut counts_by_rule: BTreeMap<String, Option<usize>> = BTreeMap::new();
    for (k, r) in SubsetRule::ALL.iter().enumerate() {
        let total = selected
            .iter()
            .map(|(_, counts)| counts[k])
            .sum::<Option<usize>>();
        counts_by_rule.insert(r.name().to_owned(), total);
    }
    let groups_without_pair = selected.iter().filter(|(p, _)| p.is_empty()).count();
    let pairs: Vec<PreferencePair> = selected.into_iter().flat_map(|(p, _)| p).collect();

    let written = emit_dpo_dataset(&pairs, &groups, open_output(settings)?)?;
    let name = method.at(rule);
    let mut warnings = Vec::new();
    if written == 0 {
        warnings.push(format!(
            "{name} produced no pairs from {} groups",
            groups.len()
        ));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "build-pairs {name}: {} groups, {} samples, {written} pairs, {groups_without_pair} groups without a pair",
        groups.len(),
        sample_count(&groups)
    );
    if let Some(path) = &args.manifest {
        let manifest = PairManifest {
            name,
            method,
            rule,
            seed: method.seed(),
            weights: needs_judges.then(|| weights.key()),
            pairs_per_instance: per_instance,
            groups: groups.len(),
            groups_without_pair,
            pairs: written,
            counts_by_rule,
            warnings,
        };
        write_json(&manifest, path)?;
    }
    Ok(())
}

pub fn advantages(settings: &Settings, args: &AdvantagesArgs) -> Result<(), Failure> {
    let mode = settings.mode(args.mode.as_deref())?;
    let weights = settings.weights(args.weights.as_deref())?;
    let groups = load_groups(settings, &args.judges, mode.needs_judges())?;
    let records = per_group(&groups, |g| Ok(combined_advantage(g, mode, &weights)?))?;
    let written = write_records(records.iter().flatten(), open_output(settings)?)?;
    eprintln!(
        "advantages {mode}: {} groups, {} samples, {written} records",
        groups.len(),
        sample_count(&groups)
    );
    Ok(())
}

pub fn grid_search_cmd(settings: &Settings, args: &GridSearchArgs) -> Result<(), Failure> {
    let step = settings.step(args.step);
    let groups = load_groups(settings, &args.judges, true)?;
    let result = grid_search(&groups, step)?;
    let mut sink = open_output(settings)?;
    write_table_csv(&result.table, &mut sink).map_err(|e| Failure::io(e.to_string()))?;
    if let Some(path) = &args.report {
        write_json(&result, path)?;
    }
    eprintln!(
        "grid-search step {step}: {} points, best {} accuracy {} (random baseline {})",
        result.table.len(),
        result.best_weights,
        result.report.accuracy,
        result.report.baseline_random
    );
    Ok(())
}

pub fn eval_select(settings: &Settings, args: &EvalSelectArgs) -> Result<(), Failure> {
    let weights = settings.weights(args.weights.as_deref())?;
    let groups = load_groups(settings, &args.judges, true)?;
    let report = selection_accuracy(&groups, &weights)?;
    let mut sink = open_output(settings)?;
    let value = serde_json::to_value(&report).map_err(|e| Failure::schema(e.to_string()))?;
    let text = serde_json::to_string_pretty(&value).map_err(|e| Failure::schema(e.to_string()))?;
    writeln!(sink, "{text}")
        .and_then(|_| sink.flush())
        .map_err(|e| Failure::io(e.to_string()))?;
    if let Some(path) = &args.csv {
        let row = GridPoint {
            weights,
            correct_selections: report.correct_selections,
            accuracy: report.accuracy,
        };
        write_table_csv(&[row], create(path)?).map_err(|e| Failure::opening(path, e))?;
    }
    eprintln!(
        "eval-select {weights}: {} instances, accuracy {} (random baseline {})",
        report.n_instances, report.accuracy, report.baseline_random
    );
    Ok(())
}
