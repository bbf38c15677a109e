use proptest::prelude::*;

use lre_core::cda::{augment_pool, plan_masks, NgramFillModel, SpanSamplerConfig};
use lre_core::data::{
    mark_entities, parse_corpus, render_corpus, stratified_split, Corpus, LabelId, LabelInventory,
    RelationMention, Span, SplitSpec,
};
use lre_core::eval::{pca2, score, PredictionSet, TrajectorySnapshot};
use lre_core::girl::{reward, run_episode, GirlConfig, GirlState, UnlabeledItem};
use lre_core::model::{
    encode, forward, pretrain_with_history, Architecture, EncoderConfig, GradientVector,
    LabeledEncoding, PolicyParameters, RelationalEncoding, SgdConfig,
};

fn arch() -> impl Strategy<Value = Architecture> {
    (2usize..6, 1usize..5, prop_oneof![Just(0usize), 1usize..5]).prop_map(|(k, half, hidden)| {
        Architecture {
            num_labels: k,
            input_dim: 2 * half,
            hidden_dim: hidden,
        }
    })
}

fn params_and_input() -> impl Strategy<Value = (PolicyParameters, RelationalEncoding)> {
    arch().prop_flat_map(|a| {
        (
            prop::collection::vec(-3.0f64..3.0, a.param_count()),
            prop::collection::vec(-2.0f64..2.0, a.input_dim),
        )
            .prop_map(move |(theta, h)| {
                (
                    PolicyParameters::from_flat(a, theta).unwrap(),
                    RelationalEncoding::from_vec(h).unwrap(),
                )
            })
    })
}

fn words(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 2..max_len)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn mention() -> impl Strategy<Value = RelationMention> {
    (words(30), any::<prop::sample::Index>(), any::<prop::sample::Index>(), 1usize..3, 1usize..3)
        .prop_filter_map("entities overlap", |(tokens, i, j, l1, l2)| {
            let n = tokens.len();
            let (l1, l2) = (l1.min(n), l2.min(n));
            let s1 = i.index(n - l1 + 1);
            let s2 = j.index(n - l2 + 1);
            let (e1, e2) = (Span::new(s1, s1 + l1), Span::new(s2, s2 + l2));
            if e1.overlaps(&e2) {
                return None;
            }
            RelationMention::new(tokens, e1, e2, Some(LabelId(1))).ok()
        })
}

fn inventory(k: usize) -> LabelInventory {
    let names: Vec<String> = (0..k).map(|c| format!("r{c}")).collect();
    LabelInventory::new(names, "r0").unwrap()
}

fn pairs(k: usize) -> impl Strategy<Value = Vec<(LabelId, LabelId)>> {
    prop::collection::vec((0..k, 0..k), 0..40)
        .prop_map(|v| v.into_iter().map(|(g, p)| (LabelId(g), LabelId(p))).collect())
}

fn labeled_set(a: Architecture, n: usize) -> impl Strategy<Value = Vec<LabeledEncoding>> {
    prop::collection::vec(
        (prop::collection::vec(-1.0f64..1.0, a.input_dim), 0..a.num_labels),
        n,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(h, y)| (RelationalEncoding::from_vec(h).unwrap(), LabelId(y)))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn forward_is_a_distribution((params, h) in params_and_input()) {
        let p = forward(&params, &h);
        prop_assert!(p.as_slice().iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reward_ignores_positive_scaling(
        a in prop::collection::vec(-1.0f64..1.0, 1..16),
        b in prop::collection::vec(-1.0f64..1.0, 1..16),
        c1 in 0.01f64..100.0,
        c2 in 0.01f64..100.0,
    ) {
        let d = a.len().min(b.len());
        let (a, b) = (a[..d].to_vec(), b[..d].to_vec());
        let base = reward(&GradientVector::from_vec(a.clone()), &GradientVector::from_vec(b.clone())).unwrap();
        let scaled = reward(
            &GradientVector::from_vec(a.iter().map(|x| x * c1).collect()),
            &GradientVector::from_vec(b.iter().map(|x| x * c2).collect()),
        ).unwrap();
        prop_assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn episodes_only_accept_above_threshold_and_grow_the_labeled_set(
        (theta, labeled, pool) in arch().prop_flat_map(|a| (
            prop::collection::vec(-1.0f64..1.0, a.param_count()).prop_map(move |t| PolicyParameters::from_flat(a, t).unwrap()),
            labeled_set(a, 6),
            labeled_set(a, 40),
        )),
        lambda in -0.5f64..0.5,
        seed in any::<u64>(),
    ) {
        let cfg = GirlConfig { lambda, seed, rl_step_size: 0.1, ..Default::default() };
        let items: Vec<UnlabeledItem> = pool
            .into_iter()
            .enumerate()
            .map(|(source, (encoding, _))| UnlabeledItem { source, encoding })
            .collect();
        let mut state = GirlState::new(theta, labeled).unwrap();
        let mut accepted = 0;
        for batch in items.chunks(cfg.episode_len) {
            let before = state.labeled().len();
            let report;
            (state, report) = run_episode(state, batch, &cfg).unwrap();
            for step in &report.steps {
                prop_assert_eq!(step.sample.accepted, step.sample.reward > lambda);
                accepted += usize::from(step.sample.accepted);
            }
            prop_assert!(state.labeled().len() >= before);
        }
        prop_assert_eq!(state.n_effective(), 6 + accepted);
    }

    #[test]
    fn split_is_disjoint_and_covering(
        labels in prop::collection::vec(0usize..4, 40..200),
        l in 0.05f64..0.4,
        u in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let mentions: Vec<RelationMention> = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let tokens = vec![format!("t{i}"), "x".into(), "y".into()];
                RelationMention::new(tokens, Span::new(0, 1), Span::new(2, 3), Some(LabelId(y))).unwrap()
            })
            .collect();
        let corpus = Corpus::new(inventory(4), mentions).unwrap();
        let Ok(split) = stratified_split(&corpus, &SplitSpec::new(l, u, seed).unwrap()) else {
            return Ok(());
        };
        let mut seen: Vec<String> = [&split.labeled, &split.unlabeled, &split.rest]
            .iter()
            .flat_map(|c| c.mentions().iter().map(|m| m.tokens()[0].clone()))
            .collect();
        prop_assert_eq!(seen.len(), corpus.len());
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), corpus.len());
    }

    #[test]
    fn mask_plans_respect_entities_and_budget(m in mention(), frac in 0.05f64..1.0, seed in any::<u64>()) {
        let cfg = SpanSamplerConfig { budget_fraction: frac, seed, ..Default::default() };
        let maskable = (0..m.tokens().len()).filter(|&t| !m.in_entity(t)).count();
        match plan_masks(&m, &cfg) {
            Ok(plan) => {
                let positions = plan.masked_positions();
                prop_assert!(positions.iter().all(|&p| !m.in_entity(p)));
                prop_assert!(positions.len() <= (frac * maskable as f64).ceil() as usize);
                let mut sorted = positions.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), positions.len());
            }
            Err(_) => prop_assert_eq!(maskable, 0),
        }
    }

    #[test]
    fn augmented_pools_round_trip(ms in prop::collection::vec(mention(), 1..12), n_out in 0usize..20, seed in any::<u64>()) {
        let corpus = Corpus::new(inventory(3), ms).unwrap();
        let model = NgramFillModel::train(&corpus).unwrap();
        let cfg = SpanSamplerConfig { seed, ..Default::default() };
        if let Ok(pool) = augment_pool(&corpus, n_out, &cfg, &model) {
            prop_assert_eq!(pool.len(), n_out);
            prop_assert!(pool.mentions().iter().all(|m| m.gold().is_none()));
            let text = render_corpus(&pool);
            prop_assert_eq!(parse_corpus(&text).unwrap(), pool);
        }
    }

    #[test]
    fn score_ignores_order(p in pairs(4), rotate in any::<prop::sample::Index>()) {
        let inv = inventory(4);
        let mut shuffled = p.clone();
        if !shuffled.is_empty() {
            let k = rotate.index(shuffled.len());
            shuffled.rotate_left(k);
            shuffled.reverse();
        }
        let a = score(&PredictionSet::new(p, &inv).unwrap());
        let b = score(&PredictionSet::new(shuffled, &inv).unwrap());
        prop_assert_eq!(a.ok(), b.ok());
    }

    #[test]
    fn correct_no_relation_is_inert_and_false_positives_cost_precision(p in pairs(4), wrong in 1usize..4) {
        let inv = inventory(4);
        let nr = inv.no_relation();
        let set = PredictionSet::new(p, &inv).unwrap();
        let Ok(base) = score(&set) else { return Ok(()); };
        let mut more = set.clone();
        more.push(nr, nr);
        prop_assert_eq!(score(&more).unwrap(), base);
        let mut fp = set.clone();
        fp.push(nr, LabelId(wrong));
        let after = score(&fp).unwrap();
        if base.precision > 0.0 {
            prop_assert!(after.precision < base.precision);
        } else {
            prop_assert_eq!(after.precision, 0.0);
        }
    }

    #[test]
    fn pca_ignores_translation(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 4..12),
        shift in prop::collection::vec(-100.0f64..100.0, 4),
    ) {
        let snaps = |offset: &[f64]| -> Vec<TrajectorySnapshot> {
            rows.iter()
                .enumerate()
                .map(|(i, r)| TrajectorySnapshot {
                    segment: 0,
                    episode: i,
                    theta: r.iter().zip(offset).map(|(x, o)| x + o).collect(),
                })
                .collect()
        };
        let (Ok(a), Ok(b)) = (pca2(&snaps(&[0.0; 4])), pca2(&snaps(&shift))) else {
            return Ok(());
        };
        // Skip near-degenerate spectra, where the components are ill-defined.
        let ev = &a.explained;
        prop_assume!(ev[0] - ev[1] > 1e-3 && ev[1] > 1e-3);
        prop_assume!(ev[0] + ev[1] < 1.0 - 1e-3 || ev[1] > 0.05);
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert!((p[0] - q[0]).abs() < 1e-6 && (p[1] - q[1]).abs() < 1e-6, "{:?} vs {:?}", p, q);
        }
    }

    #[test]
    fn tokens_outside_the_windows_do_not_matter(
        m in mention(),
        pad in words(10),
        pad2 in words(10),
    ) {
        let cfg = EncoderConfig { h_r: 16, ..Default::default() };
        // Put the padding far outside both entities' context windows.
        let gap: Vec<String> = (0..cfg.context_window).map(|_| "z".to_string()).collect();
        let build = |pad: &[String]| {
            let mut tokens = pad.to_vec();
            tokens.extend(gap.iter().cloned());
            tokens.extend(m.tokens().iter().cloned());
            tokens.extend(gap.iter().cloned());
            tokens.extend(pad.iter().cloned());
            let off = pad.len() + gap.len();
            let shift = |s: Span| Span::new(s.start + off, s.end + off);
            RelationMention::new(tokens, shift(m.e1()), shift(m.e2()), None).unwrap()
        };
        let a = encode(&mark_entities(&build(&pad)), &cfg);
        let b = encode(&mark_entities(&build(&pad2)), &cfg);
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pretraining_lowers_the_loss(
        (theta, data) in (2usize..5, 1usize..4).prop_flat_map(|(k, half)| {
            let a = Architecture { num_labels: k, input_dim: 2 * half, hidden_dim: 0 };
            (
                prop::collection::vec(-0.5f64..0.5, a.param_count()).prop_map(move |t| PolicyParameters::from_flat(a, t).unwrap()),
                labeled_set(a, 24),
            )
        }),
        seed in any::<u64>(),
    ) {
        let sgd = SgdConfig { step_size: 0.05, epochs: 20, batch: 8, seed };
        let (_, history) = pretrain_with_history(&theta, &data, &sgd);
        prop_assert!(history.last().unwrap() < history.first().unwrap(), "{:?}", history);
    }
}
