//! Authorship verification for medieval Latin texts.
//!
//! Given a corpus of texts of known authorship and a candidate author, the
//! pipeline answers one question per document: did the candidate write it?
//! The answer is a binary decision with a calibrated posterior probability.
//!
//! The stages, in order:
//!
//! 1. [`corpus`] — load and validate the texts, strip marked citations,
//!    normalize orthography (lowercase, `v`→`u`, punctuation removal).
//! 2. [`segmentation`] — split into sentences, merge short ones, expand each
//!    document into labelled units (the document itself plus three-sentence
//!    segments) that share a group id.
//! 3. [`features`] — the six-group feature space: character and word n-grams
//!    (chi-square selected, tf-idf weighted) plus function words, verbal
//!    endings, word lengths and sentence lengths, each group L2-normalized.
//! 4. [`learners`] — logistic regression, linear SVM and multinomial naive
//!    Bayes, all trained in-house, all reporting posteriors.
//! 5. [`protocol`] — grouped stratified cross-validation for hyperparameter
//!    search, the leave-one-out verification protocol, and verification of
//!    disputed documents.
//! 6. [`metrics`] — F1 (with its degenerate branch), vanilla accuracy, and
//!    macro/micro aggregation.
//!
//! The [`synth`] module generates deterministic synthetic corpora with
//! per-author stylistic signatures, used by the test suite and handy for
//! experimentation without the published datasets.

pub mod corpus;
pub mod features;
pub mod learners;
pub mod metrics;
pub mod protocol;
pub mod segmentation;
pub mod synth;
