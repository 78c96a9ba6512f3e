use drm_core::dimensions::{confidence_score, relevance_scores, score_group};
use drm_core::eval::{grid_search, select_best, selection_accuracy};
use drm_core::io::{read_all_groups, write_groups};
use drm_core::pairs::{build_subsets, select_pair};
use drm_core::reward::drm_rewards;
use drm_core::rl::{
    combined_advantage, dpo_sft_loss, drm_advantage, group_advantage, kl_estimate, surrogate_term,
    DpoInputs,
};
use drm_core::stats::{mean, population_std};
use drm_core::{
    AdvantageMode, DimensionScores, DrmWeights, JudgeScores, Quadruple, Sample, SampleGroup,
    SubsetRule, SupervisionMethod, SurrogateInputs,
};
use proptest::prelude::*;

fn logprobs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0..=0.0f64, 1..12)
}

fn judge() -> impl Strategy<Value = JudgeScores> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -10.0..10.0f64)
        .prop_map(|(q, d, a, c)| JudgeScores::new(q, d, a, c))
}

fn sample() -> impl Strategy<Value = Sample> {
    (
        "[a-z ]{0,12}",
        prop::collection::vec("[a-z]{0,6}", 0..3),
        "[a-zA-Z0-9 .\n\"]{0,20}",
        "[a-z0-9]{0,5}",
        logprobs(),
        logprobs(),
        prop::option::of(judge()),
        prop::option::of(any::<bool>()),
    )
        .prop_map(|(q, ctx, r, a, rl, al, judge, correct)| Sample {
            quadruple: Quadruple::new(q, ctx, r, a, rl, al),
            judge,
            correct: correct.map(Into::into),
        })
}

fn scored_sample() -> impl Strategy<Value = Sample> {
    (logprobs(), logprobs(), judge(), any::<bool>()).prop_map(|(rl, al, j, c)| {
        Sample::new(Quadruple::new("q", vec!["d".into()], "r", "a", rl, al))
            .with_judge(j)
            .with_label(c)
    })
}

fn scored_group(max: usize) -> impl Strategy<Value = SampleGroup> {
    prop::collection::vec(scored_sample(), 1..=max).prop_map(|s| SampleGroup::new("g", s))
}

fn weights() -> impl Strategy<Value = DrmWeights> {
    (0u32..=10, 0u32..=10).prop_filter_map("simplex", |(a, b)| {
        (a + b <= 10).then(|| {
            DrmWeights::new(a as f64 / 10.0, b as f64 / 10.0, (10 - a - b) as f64 / 10.0).unwrap()
        })
    })
}

fn dims_vec(max: usize) -> impl Strategy<Value = Vec<DimensionScores>> {
    prop::collection::vec(
        (-30.0..0.0f64, 0.0..1.0f64, -5.0..5.0f64)
            .prop_map(|(c, r, h)| DimensionScores::new(c, r, h)),
        1..=max,
    )
}

fn metric_mut(j: &mut JudgeScores, metric: usize) -> &mut f64 {
    match metric {
        0 => &mut j.q_entail,
        1 => &mut j.d_relevance,
        _ => &mut j.a_entail,
    }
}

fn permute<T: Clone>(items: &[T], order: &[usize]) -> Vec<T> {
    order.iter().map(|&i| items[i].clone()).collect()
}

proptest! {
    #[test]
    fn jsonl_round_trip(groups in prop::collection::vec(prop::collection::vec(sample(), 1..5), 0..4)) {
        let groups: Vec<SampleGroup> = groups
            .into_iter()
            .enumerate()
            .map(|(i, s)| SampleGroup::new(format!("inst-{i}"), s))
            .collect();
        let mut buf = Vec::new();
        write_groups(&groups, &mut buf).unwrap();
        let back: Vec<SampleGroup> = read_all_groups(buf.as_slice()).unwrap();
        prop_assert_eq!(back, groups);
    }

    #[test]
    fn confidence_is_linear(r in logprobs(), a in logprobs(), c in 0.0..4.0f64) {
        let base = confidence_score(&r, &a).unwrap();
        let rs: Vec<f64> = r.iter().map(|x| x * c).collect();
        let as_: Vec<f64> = a.iter().map(|x| x * c).collect();
        let scaled = confidence_score(&rs, &as_).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-9 * (1.0 + base.abs() * c));
    }

    #[test]
    fn relevance_value_invariant_under_positive_affine(
        group in scored_group(8), scale in 0.1..10.0f64, shift in -5.0..5.0f64, metric in 0usize..3,
    ) {
        let before = relevance_scores(&group).unwrap();
        let mut moved = group.clone();
        for s in &mut moved.samples {
            let j = s.judge.as_mut().unwrap();
            let field = metric_mut(j, metric);
            *field = *field * scale + shift;
        }
        let after = relevance_scores(&moved).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn relevance_argmax_invariant_under_monotone_map(group in scored_group(8), metric in 0usize..3) {
        // Only the transformed metric varies, so relevance ranks by it alone.
        let mut single = group.clone();
        for s in &mut single.samples {
            let j = s.judge.as_mut().unwrap();
            let keep = [j.q_entail, j.d_relevance, j.a_entail][metric];
            *j = JudgeScores::new(0.0, 0.0, 0.0, j.coherence);
            *metric_mut(j, metric) = keep;
        }
        let before = relevance_scores(&single).unwrap();
        let mut mapped = single.clone();
        for s in &mut mapped.samples {
            let j = s.judge.as_mut().unwrap();
            let field = metric_mut(j, metric);
            *field = field.exp() + field.powi(3);
        }
        let after = relevance_scores(&mapped).unwrap();
        prop_assert_eq!(drm_core::stats::argmax(&before), drm_core::stats::argmax(&after));
    }

    #[test]
    fn score_group_is_permutation_equivariant(group in scored_group(7), seed in any::<u64>()) {
        let n = group.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = drm_core::pairs::instance_rng(seed, "perm");
        for i in (1..n).rev() {
            order.swap(i, drm_core::pairs::uniform_index(&mut rng, i + 1));
        }
        let base = score_group(&group).unwrap();
        let shuffled = SampleGroup::new("g", permute(&group.samples, &order));
        prop_assert_eq!(score_group(&shuffled).unwrap(), permute(&base, &order));
    }

    #[test]
    fn rewards_in_unit_interval(dims in dims_vec(10), w in weights()) {
        for r in drm_rewards(&dims, &w).unwrap() {
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn reward_argmax_affine_invariant(dims in dims_vec(10), w in weights(), dim in 0usize..3, a in 0.01..50.0f64, b in -20.0..20.0f64) {
        let moved: Vec<DimensionScores> = dims.iter().map(|d| {
            let mut v = d.as_array();
            v[dim] = a * v[dim] + b;
            DimensionScores::from_array(v)
        }).collect();
        let before = drm_rewards(&dims, &w).unwrap();
        let after = drm_rewards(&moved, &w).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn raising_a_score_never_lowers_its_reward(dims in dims_vec(8), w in weights(), who in any::<prop::sample::Index>(), dim in 0usize..3, bump in 0.0..3.0f64) {
        let i = who.index(dims.len());
        let before = drm_rewards(&dims, &w).unwrap()[i];
        let mut raised = dims.clone();
        let mut v = raised[i].as_array();
        v[dim] += bump;
        raised[i] = DimensionScores::from_array(v);
        let after = drm_rewards(&raised, &w).unwrap()[i];
        prop_assert!(after >= before - 1e-12, "{} < {}", after, before);
    }

    #[test]
    fn group_advantage_standardizes(rewards in prop::collection::vec(-100.0..100.0f64, 2..33)) {
        prop_assume!(population_std(&rewards) >= 1e-6);
        let adv = group_advantage(&rewards).unwrap();
        prop_assert!(mean(&adv).abs() < 1e-9);
        prop_assert!((population_std(&adv) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn drm_advantage_affine_invariant(dims in dims_vec(10), w in weights(), dim in 0usize..3, a in 0.01..50.0f64, b in -20.0..20.0f64) {
        let moved: Vec<DimensionScores> = dims.iter().map(|d| {
            let mut v = d.as_array();
            v[dim] = a * v[dim] + b;
            DimensionScores::from_array(v)
        }).collect();
        let before = drm_advantage(&dims, &w).unwrap();
        let after = drm_advantage(&moved, &w).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn combined_is_sum_of_parts(group in scored_group(10), w in weights()) {
        let combined = combined_advantage(&group, AdvantageMode::Combined, &w).unwrap();
        let rlvr = combined_advantage(&group, AdvantageMode::Rlvr, &w).unwrap();
        let drm = combined_advantage(&group, AdvantageMode::Drm, &w).unwrap();
        for ((c, r), d) in combined.iter().zip(&rlvr).zip(&drm) {
            prop_assert!((c.combined_adv - (r.combined_adv + d.combined_adv)).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_unclipped_inside_trust_region(ratio in 0.8..1.2f64, adv in -5.0..5.0f64) {
        let v = surrogate_term(&SurrogateInputs { ratio, advantage: adv, clip_eps: 0.2, kl: 0.0, beta: 0.0 }).unwrap();
        prop_assert_eq!(v, ratio * adv);
    }

    #[test]
    fn kl_estimate_nonnegative(p in -30.0..0.0f64, q in -30.0..0.0f64) {
        prop_assert!(kl_estimate(p, q) >= 0.0);
    }

    #[test]
    fn dpo_loss_decreases_with_margin(m in -50.0..50.0f64, dm in 0.01..10.0f64) {
        let at = |margin: f64| dpo_sft_loss(&DpoInputs { logp_pos_policy: margin, logp_pos_ref: 0.0, logp_neg_policy: 0.0, logp_neg_ref: 0.0 }, 0.1, 0.0).unwrap();
        prop_assert!(at(m + dm) < at(m));
    }

    #[test]
    fn t_f_pairs_respect_labels(group in scored_group(8), seed in any::<u64>(), rewards in prop::collection::vec(0.0..1.0f64, 8)) {
        let pools = build_subsets(&group, SubsetRule::TrueFalse).unwrap();
        let labels = group.labels().unwrap();
        for method in [SupervisionMethod::Drm, SupervisionMethod::Rlvr { seed }] {
            if let Some(p) = select_pair(&group, &pools, method, &rewards[..group.len()]).unwrap() {
                prop_assert!(labels[p.pos_index] && !labels[p.neg_index]);
            }
        }
    }

    #[test]
    fn select_best_affine_invariant(group in scored_group(8), w in weights(), a in 0.1..10.0f64, b in -3.0..3.0f64) {
        let before = select_best(&group, &w).unwrap();
        let mut moved = group.clone();
        for s in &mut moved.samples {
            let j = s.judge.as_mut().unwrap();
            j.coherence = a * j.coherence + b;
        }
        prop_assert_eq!(select_best(&moved, &w).unwrap(), before);
    }

    #[test]
    fn accuracy_ignores_group_order(groups in prop::collection::vec(scored_group(5), 1..6), w in weights()) {
        let forward = selection_accuracy(&groups, &w).unwrap();
        let mut reversed = groups.clone();
        reversed.reverse();
        let backward = selection_accuracy(&reversed, &w).unwrap();
        prop_assert_eq!(forward.correct_selections, backward.correct_selections);
        prop_assert!((forward.baseline_random - backward.baseline_random).abs() < 1e-12);
    }
}

#[test]
fn drm_at_any_never_reads_labels() {
    let samples = (0..4)
        .map(|i| {
            Sample::new(Quadruple::new(
                "q",
                vec![],
                "r",
                "a",
                vec![-(i as f64) - 0.5],
                vec![-1.0],
            ))
            .with_judge(JudgeScores::new(
                0.1 * i as f64,
                0.0,
                0.0,
                1.0 - 0.2 * i as f64,
            ))
        })
        .collect();
    let group = SampleGroup::new("nolabels", samples);
    let rewards = drm_rewards(&score_group(&group).unwrap(), &DrmWeights::default()).unwrap();
    let pools = build_subsets(&group, SubsetRule::Any).unwrap();
    let pair = select_pair(&group, &pools, SupervisionMethod::Drm, &rewards)
        .unwrap()
        .unwrap();
    assert_eq!((pair.pos_index, pair.neg_index), (0, 3));
}

#[test]
fn grid_best_dominates_every_point() {
    let runner_groups: Vec<SampleGroup> = (0..12)
        .map(|g| {
            let samples = (0..5)
                .map(|i| {
                    let x = ((g * 7 + i * 13) % 11) as f64;
                    Sample::new(Quadruple::new(
                        "q",
                        vec![],
                        "r",
                        "a",
                        vec![-x / 3.0 - 0.1],
                        vec![-(i as f64) * 0.2],
                    ))
                    .with_judge(JudgeScores::new(
                        x,
                        (i * g % 5) as f64,
                        1.0,
                        ((g + i) % 4) as f64,
                    ))
                    .with_label((g + 2 * i) % 3 == 0)
                })
                .collect();
            SampleGroup::new(format!("g{g}"), samples)
        })
        .collect();
    let result = grid_search(&runner_groups, 0.1).unwrap();
    for point in &result.table {
        let direct = selection_accuracy(&runner_groups, &point.weights).unwrap();
        assert_eq!(direct.accuracy, point.accuracy);
        assert!(result.report.accuracy >= direct.accuracy);
    }
}

#[test]
fn dpo_slope_matches_analytic_derivative() {
    let beta = 0.1;
    let loss = |m: f64| {
        dpo_sft_loss(
            &DpoInputs {
                logp_pos_policy: m - 3.0,
                logp_pos_ref: -3.0,
                logp_neg_policy: -4.0,
                logp_neg_ref: -4.0,
            },
            beta,
            0.0,
        )
        .unwrap()
    };
    for m in [-20.0, -3.5, 0.0, 1.7, 25.0] {
        let h = 1e-4;
        let numeric = (loss(m + h) - loss(m - h)) / (2.0 * h);
        let analytic = -beta / (1.0 + (beta * m).exp());
        assert!(
            (numeric - analytic).abs() < 1e-5,
            "m={m}: {numeric} vs {analytic}"
        );
    }
}

#[test]
fn f32_pipeline_matches_f64_within_single_precision() {
    let dims64 = [
        DimensionScores::new(-1.5, 0.2, 3.0),
        DimensionScores::new(-0.5, 0.8, 1.0),
        DimensionScores::new(-2.5, 0.5, 2.0),
    ];
    let dims32: Vec<DimensionScores<f32>> = dims64
        .iter()
        .map(|d| DimensionScores::new(d.conf as f32, d.rel as f32, d.coh as f32))
        .collect();
    let r64 = drm_rewards(&dims64, &DrmWeights::default()).unwrap();
    let r32 = drm_rewards(&dims32, &DrmWeights::<f32>::default()).unwrap();
    for (a, b) in r64.iter().zip(&r32) {
        assert!((a - *b as f64).abs() < 1e-6);
    }
    let a64 = drm_advantage(&dims64, &DrmWeights::default()).unwrap();
    let a32 = drm_advantage(&dims32, &DrmWeights::<f32>::default()).unwrap();
    for (a, b) in a64.iter().zip(&a32) {
        assert!((a - *b as f64).abs() < 1e-5);
    }
}
