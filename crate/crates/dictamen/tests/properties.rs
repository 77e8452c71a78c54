//! Property suites: exhaustive chi-square verification, fold-grouping
//! invariants over randomized instances, leakage audits, unit-norm checks,
//! and text-normalization properties.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dictamen::corpus::{collapse_whitespace, normalize, strip_citations, CitationPolicy, Corpus};
use dictamen::features::{chi_square, ExtractedUnits, FeatureConfig, FeatureGroup, FeatureSpace};
use dictamen::protocol::{grouped_stratified_kfold, loo_training_pool};
use dictamen::segmentation::{merge_short_sentences, split_sentences, unit_from_text};
use dictamen::synth::{synth_corpus, SynthSpec};

/// Chi-square from expected cell counts: sum of (O-E)^2 / E, zero when a
/// marginal vanishes. An independent route to the same quantity as the
/// product formula in the implementation.
fn chi_square_oracle(n11: u64, n10: u64, n01: u64, n00: u64) -> f64 {
    let n = (n11 + n10 + n01 + n00) as f64;
    let pos = (n11 + n10) as f64;
    let neg = (n01 + n00) as f64;
    let present = (n11 + n01) as f64;
    let absent = (n10 + n00) as f64;
    if pos == 0.0 || neg == 0.0 || present == 0.0 || absent == 0.0 {
        return 0.0;
    }
    let observed = [n11 as f64, n10 as f64, n01 as f64, n00 as f64];
    let expected = [
        pos * present / n,
        pos * absent / n,
        neg * present / n,
        neg * absent / n,
    ];
    observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum()
}

#[test]
fn chi_square_matches_oracle_on_all_corpora_up_to_eight_units() {
    // Every corpus of n <= 8 units is a pair of bitmasks: which units are
    // positive, and which contain the feature.
    let mut cases = 0u64;
    for n in 1..=8u32 {
        for labels in 0..(1u32 << n) {
            for presence in 0..(1u32 << n) {
                let n11 = (labels & presence).count_ones() as u64;
                let n10 = (labels & !presence & ((1 << n) - 1)).count_ones() as u64;
                let n01 = (!labels & presence & ((1 << n) - 1)).count_ones() as u64;
                let n00 = n as u64 - n11 - n10 - n01;
                let got = chi_square(n11, n10, n01, n00);
                let want = chi_square_oracle(n11, n10, n01, n00);
                assert!(
                    (got - want).abs() <= 1e-10 * (1.0 + want),
                    "n={n} labels={labels:b} presence={presence:b}: {got} vs {want}"
                );
                cases += 1;
            }
        }
    }
    assert!(cases > 80_000);
}

#[test]
fn fold_grouping_invariant_over_one_thousand_randomized_instances() {
    use dictamen::segmentation::{LabelledUnit, UnitKind};
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for instance in 0..1000 {
        let k = rng.random_range(2..=10usize);
        let n_groups = rng.random_range(k..=120usize);
        let n_positive = rng.random_range(0..=n_groups);
        let seed: u64 = rng.random();

        let mut units = Vec::new();
        for g in 0..n_groups {
            let author = if g < n_positive { "pos" } else { "neg" };
            let n_units = rng.random_range(1..=4usize);
            for s in 0..n_units {
                units.push(LabelledUnit {
                    unit_id: format!("g{g}-u{s}"),
                    group_id: format!("g{g}"),
                    author: author.into(),
                    kind: if s == 0 {
                        UnitKind::WholeDocument
                    } else {
                        UnitKind::Segment
                    },
                    text: String::new(),
                    normalized: String::new(),
                    sentence_word_counts: vec![],
                });
            }
        }

        let folds = grouped_stratified_kfold(&units, "pos", k, seed)
            .unwrap_or_else(|e| panic!("instance {instance}: {e}"));

        // Folds partition the groups.
        assert_eq!(folds.group_to_fold.len(), n_groups);
        let mut pos_per_fold = vec![0i64; k];
        let mut neg_per_fold = vec![0i64; k];
        for g in 0..n_groups {
            let fold = folds.fold_of(&format!("g{g}")).expect("group assigned");
            assert!(fold < k);
            if g < n_positive {
                pos_per_fold[fold] += 1;
            } else {
                neg_per_fold[fold] += 1;
            }
        }
        // No group split across folds: every unit of a group sees the same
        // fold because assignment is by group id.
        for u in &units {
            assert_eq!(folds.fold_of(&u.group_id), folds.fold_of(&u.group_id));
        }
        // Stratification at group level: counts differ by at most one.
        for counts in [&pos_per_fold, &neg_per_fold] {
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            assert!(max - min <= 1, "instance {instance}: spread {counts:?}");
        }
    }
}

#[test]
fn leakage_audit_heldout_perturbation_leaves_feature_space_bit_identical() {
    let spec = SynthSpec::tiny(21);
    let corpus = synth_corpus(&spec);
    let heldout = corpus.documents[2].doc_id.clone();

    let mut perturbed = corpus.clone();
    perturbed.documents[2].raw_text = "Totaliter alius textus est hic, nihil commune habens. \
         Alter sensus additur ut perturbatio magna fiat. \
         Tertia sententia quoque noua est et mirabilis ualde."
        .to_string();

    let fit = |c: &Corpus| -> FeatureSpace {
        let units = dictamen::segmentation::expand_corpus(c, CitationPolicy::default()).unwrap();
        let config = FeatureConfig::default();
        let extracted = ExtractedUnits::extract(&units, &config);
        let pool = loo_training_pool(&units, &heldout);
        let positive: Vec<bool> = units.iter().map(|u| u.author == "Albus").collect();
        FeatureSpace::fit(&extracted, &pool, &positive, "Albus").unwrap()
    };

    let space_a = fit(&corpus);
    let space_b = fit(&perturbed);
    assert_eq!(space_a, space_b);

    // Control: fitting WITH the held-out document included must differ.
    let units = dictamen::segmentation::expand_corpus(&corpus, CitationPolicy::default()).unwrap();
    let config = FeatureConfig::default();
    let extracted = ExtractedUnits::extract(&units, &config);
    let all: Vec<usize> = (0..units.len()).collect();
    let positive: Vec<bool> = units.iter().map(|u| u.author == "Albus").collect();
    let space_full = FeatureSpace::fit(&extracted, &all, &positive, "Albus").unwrap();
    assert_ne!(space_a, space_full);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent_and_clean(text in "\\PC{0,200}") {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once), once.clone());
        prop_assert!(once.chars().all(|c| c == ' ' || (c.is_alphanumeric() && !c.is_uppercase())));
        prop_assert!(!once.contains('v'));
    }

    #[test]
    fn keep_policy_removes_exactly_the_marker_characters(
        words in prop::collection::vec(("[a-z]{1,8}", 0..3u8), 1..40)
    ) {
        // Build a text of single-space-separated words, some wrapped in
        // citation markers; with the keep policy the output is the input
        // minus exactly the marker characters.
        let mut input = String::new();
        let mut expected = String::new();
        for (i, (word, kind)) in words.iter().enumerate() {
            if i > 0 {
                input.push(' ');
                expected.push(' ');
            }
            match kind {
                1 => { input.push('*'); input.push_str(word); input.push('*'); }
                2 => { input.push('{'); input.push_str(word); input.push('}'); }
                _ => input.push_str(word),
            }
            expected.push_str(word);
        }
        let out = strip_citations(&input, CitationPolicy::keep_all()).unwrap();
        prop_assert_eq!(out, expected);
    }

    #[test]
    fn merged_sentences_respect_the_minimum(
        counts in prop::collection::vec(1..20usize, 1..30)
    ) {
        let sentences: Vec<_> = counts
            .iter()
            .map(|&n| split_sentences(&vec!["uox"; n].join(" ")).remove(0))
            .collect();
        let total: usize = counts.iter().sum();
        let merged = merge_short_sentences(sentences, 8).unwrap();
        let merged_total: usize = merged.iter().map(|s| s.word_count).sum();
        prop_assert_eq!(merged_total, total);
        if total >= 8 {
            prop_assert!(merged.iter().all(|s| s.word_count >= 8));
        } else {
            prop_assert_eq!(merged.len(), 1);
        }
    }

    #[test]
    fn split_then_join_reconstructs_collapsed_text(
        text in "[a-zA-Z .!?;\\n]{0,300}"
    ) {
        let collapsed = collapse_whitespace(&text);
        let parts: Vec<String> = split_sentences(&text).into_iter().map(|s| s.text).collect();
        prop_assert_eq!(parts.join(" "), collapsed);
    }

    #[test]
    fn every_transformed_vector_has_unit_norm_groups(
        texts in prop::collection::vec("[a-u ]{10,120}", 2..6),
        pos_idx in 0..2usize,
    ) {
        let units: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let author = if i == pos_idx { "pos" } else { "neg" };
                unit_from_text(&format!("d{i}"), author, t, CitationPolicy::default()).unwrap()
            })
            .collect();
        prop_assume!(units[pos_idx].normalized.split_whitespace().count() > 0);
        let space = dictamen::features::fit_feature_space(&units, "pos", &FeatureConfig::default());
        prop_assume!(space.is_ok());
        let space = space.unwrap();
        for u in &units {
            let v = space.transform_unit(u);
            for group in FeatureGroup::ALL {
                let norm = v.group_norm(group);
                prop_assert!(
                    norm == 0.0 || (norm - 1.0).abs() < 1e-9,
                    "group {:?} norm {}", group, norm
                );
            }
        }
    }
}
