//! End-to-end pipeline tests on synthetic corpora: expansion bookkeeping,
//! the leave-one-out protocol, and disputed-document verification.

use dictamen::corpus::CitationPolicy;
use dictamen::features::FeatureConfig;
use dictamen::learners::Learner;
use dictamen::protocol::{
    loo_author_verification, loo_training_pool, run_full_evaluation, verify_disputed, Grid,
    PreparedCorpus, ProtocolConfig,
};
use dictamen::segmentation::{expand_corpus, UnitKind};
use dictamen::synth::{authored_text, forged_text, synth_corpus, SynthSpec};

fn reduced_config(learner: Learner, seed: u64) -> ProtocolConfig {
    ProtocolConfig::new(learner, seed).with_grid(Grid::reduced(learner))
}

#[test]
fn expansion_bookkeeping_holds() {
    let corpus = synth_corpus(&SynthSpec::desk_scale(11));
    let units = expand_corpus(&corpus, CitationPolicy::default()).unwrap();

    // One whole-document unit per document.
    let whole: Vec<_> = units
        .iter()
        .filter(|u| u.kind == UnitKind::WholeDocument)
        .collect();
    assert_eq!(whole.len(), corpus.documents.len());

    // Group closure: every unit's group is a real document id, and the
    // segment word counts of a document partition its merged sentences.
    for doc in &corpus.documents {
        let segments: Vec<_> = units
            .iter()
            .filter(|u| u.kind == UnitKind::Segment && u.group_id == doc.doc_id)
            .collect();
        let whole_unit = units
            .iter()
            .find(|u| u.kind == UnitKind::WholeDocument && u.group_id == doc.doc_id)
            .unwrap();
        if !segments.is_empty() {
            let seg_sentences: usize = segments.iter().map(|u| u.sentence_word_counts.len()).sum();
            assert_eq!(seg_sentences, whole_unit.sentence_word_counts.len());
            let seg_words: usize = segments.iter().flat_map(|u| &u.sentence_word_counts).sum();
            let whole_words: usize = whole_unit.sentence_word_counts.iter().sum();
            assert_eq!(seg_words, whole_words);
        }
    }

    // Non-overlap: each document's tokens are covered exactly once by its
    // segments (same multiset of words, same order).
    for doc in corpus.documents.iter().take(10) {
        let whole_unit = units
            .iter()
            .find(|u| u.kind == UnitKind::WholeDocument && u.group_id == doc.doc_id)
            .unwrap();
        let seg_concat: Vec<&str> = units
            .iter()
            .filter(|u| u.kind == UnitKind::Segment && u.group_id == doc.doc_id)
            .flat_map(|u| u.text.split_whitespace())
            .collect();
        if !seg_concat.is_empty() {
            let whole_tokens: Vec<&str> = whole_unit.text.split_whitespace().collect();
            assert_eq!(seg_concat, whole_tokens);
        }
    }

    // Determinism.
    let again = expand_corpus(&corpus, CitationPolicy::default()).unwrap();
    assert_eq!(units, again);
}

#[test]
fn splitter_matches_the_hand_annotated_oracle() {
    let paragraph = include_str!("fixtures/sentences_oracle.txt");
    let expected: Vec<&str> = include_str!("fixtures/sentences_oracle.expected.txt")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .collect();
    assert_eq!(expected.len(), 20);
    let got: Vec<String> = dictamen::segmentation::split_sentences(paragraph)
        .into_iter()
        .map(|s| s.text)
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn single_three_sentence_document_yields_one_unit() {
    use dictamen::corpus::{Corpus, Document, Genre};
    let text = "Prima sententia de rebus multis hic scripta est. \
                Secunda sententia de aliis rebus sequitur statim. \
                Tertia sententia totum librum breuiter concludit.";
    let corpus = Corpus {
        name: "one".into(),
        documents: vec![Document {
            doc_id: "solo_d1".into(),
            author: "solo".into(),
            title: "solo_d1".into(),
            genre: Genre::Epistolary,
            raw_text: text.into(),
            word_count: text.split_whitespace().count(),
        }],
        miscellanea_authors: Default::default(),
    };
    let units = expand_corpus(&corpus, CitationPolicy::default()).unwrap();
    assert_eq!(units.len(), 1);
    assert_eq!(units[0].kind, UnitKind::WholeDocument);
}

#[test]
fn loo_pool_never_contains_the_heldout_group() {
    let corpus = synth_corpus(&SynthSpec::tiny(2));
    let units = expand_corpus(&corpus, CitationPolicy::default()).unwrap();
    for doc in &corpus.documents {
        let pool = loo_training_pool(&units, &doc.doc_id);
        assert!(pool.iter().all(|&i| units[i].group_id != doc.doc_id));
        let pool_plus_group =
            pool.len() + units.iter().filter(|u| u.group_id == doc.doc_id).count();
        assert_eq!(pool_plus_group, units.len());
    }
}

#[test]
fn loo_verification_counts_and_quality() {
    let corpus = synth_corpus(&SynthSpec::tiny(4));
    let prepared = PreparedCorpus::prepare(
        &corpus,
        CitationPolicy::default(),
        &FeatureConfig::default(),
    )
    .unwrap();
    let config = reduced_config(Learner::LogisticRegression, 4);
    let results = loo_author_verification(&prepared, "Albus", &config).unwrap();

    // One decision per document, not per unit.
    assert_eq!(results.len(), corpus.documents.len());

    // The verifier separates clearly styled synthetic authors well.
    let correct = results
        .iter()
        .filter(|r| {
            let truth = r.doc_id.starts_with("Albus");
            r.decision == truth
        })
        .count();
    assert!(
        correct as f64 >= 0.8 * results.len() as f64,
        "only {correct}/{} correct",
        results.len()
    );
}

#[test]
fn ineligible_authors_are_rejected() {
    let corpus = synth_corpus(&SynthSpec::desk_scale(8));
    let prepared = PreparedCorpus::prepare(
        &corpus,
        CitationPolicy::default(),
        &FeatureConfig::default(),
    )
    .unwrap();
    let config = reduced_config(Learner::LogisticRegression, 8);
    // Single-document author.
    assert!(loo_author_verification(&prepared, "Ennia", &config).is_err());
    // Miscellanea label.
    assert!(loo_author_verification(&prepared, "Misc", &config).is_err());
    // Unknown author.
    assert!(loo_author_verification(&prepared, "Nemo", &config).is_err());
}

#[test]
fn full_evaluation_covers_every_eligible_author_and_document() {
    let corpus = synth_corpus(&SynthSpec::tiny(6));
    let prepared = PreparedCorpus::prepare(
        &corpus,
        CitationPolicy::default(),
        &FeatureConfig::default(),
    )
    .unwrap();
    let config = reduced_config(Learner::LogisticRegression, 6);
    let report = run_full_evaluation(&prepared, &config).unwrap();

    let eligible = corpus.eligible_authors();
    assert_eq!(
        report.decisions.len(),
        eligible.len() * corpus.documents.len()
    );
    assert_eq!(report.per_author.len(), eligible.len());
    for score in &report.per_author {
        assert_eq!(score.counts.total() as usize, corpus.documents.len());
    }
    // Confident separation on the synthetic styles.
    assert!(report.macro_f1 > 0.7, "macro F1 {}", report.macro_f1);
    assert!(report.accuracy > 0.85, "accuracy {}", report.accuracy);
}

#[test]
fn disputed_document_verification_distinguishes_forgeries() {
    let spec = SynthSpec::tiny(10);
    let corpus = synth_corpus(&spec);
    let prepared = PreparedCorpus::prepare(
        &corpus,
        CitationPolicy::default(),
        &FeatureConfig::default(),
    )
    .unwrap();
    let config = reduced_config(Learner::LogisticRegression, 10);

    let forged = forged_text(&spec, 77);
    let verdict = verify_disputed(
        &prepared,
        "Albus",
        "disputed-forgery",
        &forged,
        CitationPolicy::default(),
        &config,
    )
    .unwrap();
    assert!(
        !verdict.decision,
        "forgery accepted with p={}",
        verdict.posterior
    );

    let genuine = authored_text(&spec, "Albus", 78);
    let verdict = verify_disputed(
        &prepared,
        "Albus",
        "disputed-genuine",
        &genuine,
        CitationPolicy::default(),
        &config,
    )
    .unwrap();
    assert!(
        verdict.decision,
        "genuine text rejected with p={}",
        verdict.posterior
    );
}

#[test]
fn two_document_author_takes_the_fallback_hyperparameter() {
    let corpus = synth_corpus(&SynthSpec::desk_scale(12));
    let prepared = PreparedCorpus::prepare(
        &corpus,
        CitationPolicy::default(),
        &FeatureConfig::default(),
    )
    .unwrap();
    let config = reduced_config(Learner::LogisticRegression, 12);
    // Drusus has exactly two documents: whenever one is held out, a single
    // positive group remains and grid search must yield to the fixed C.
    let results = loo_author_verification(&prepared, "Drusus", &config).unwrap();
    for r in results.iter().filter(|r| r.doc_id.starts_with("Drusus")) {
        assert_eq!(r.hyperparameter, 0.1, "doc {}", r.doc_id);
    }

    // For naive Bayes the same bypass fixes alpha instead.
    let mnb = reduced_config(Learner::MultinomialNb, 12);
    let results = loo_author_verification(&prepared, "Drusus", &mnb).unwrap();
    for r in results.iter().filter(|r| r.doc_id.starts_with("Drusus")) {
        assert_eq!(r.hyperparameter, 0.001, "doc {}", r.doc_id);
    }
}

#[test]
fn all_three_learners_run_the_whole_protocol() {
    let corpus = synth_corpus(&SynthSpec::tiny(15));
    let prepared = PreparedCorpus::prepare(
        &corpus,
        CitationPolicy::default(),
        &FeatureConfig::default(),
    )
    .unwrap();
    for learner in [Learner::LinearSvm, Learner::MultinomialNb] {
        let mut config = reduced_config(learner, 15);
        // The SVM subgradient descent needs no 1000-iteration budget to
        // reach decision-grade weights on the tiny corpus.
        config.max_iterations = 200;
        let report = run_full_evaluation(&prepared, &config).unwrap();
        assert_eq!(
            report.decisions.len(),
            corpus.eligible_authors().len() * corpus.documents.len(),
            "{learner}"
        );
        assert!(
            report.accuracy > 0.7,
            "{learner}: accuracy {}",
            report.accuracy
        );
    }
}

#[test]
fn chosen_hyperparameters_come_from_the_grid() {
    let corpus = synth_corpus(&SynthSpec::tiny(14));
    let prepared = PreparedCorpus::prepare(
        &corpus,
        CitationPolicy::default(),
        &FeatureConfig::default(),
    )
    .unwrap();
    let config = reduced_config(Learner::LogisticRegression, 14);
    let results = loo_author_verification(&prepared, "Bruna", &config).unwrap();
    for r in &results {
        let in_grid = config.grid.values.contains(&r.hyperparameter);
        let is_fallback = r.hyperparameter == 0.1;
        assert!(
            in_grid || is_fallback,
            "doc {}: C = {}",
            r.doc_id,
            r.hyperparameter
        );
    }
}
