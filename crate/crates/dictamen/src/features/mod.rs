//! The six-group stylometric feature space.
//!
//! Groups 1-2 (character n-grams, word n-grams) are open vocabularies with a
//! sparse distribution; they go through chi-square selection and tf-idf
//! weighting. Groups 3-6 are closed: a 74-entry function-word lexicon, a
//! 245-entry verbal-ending lexicon, word-length bins 1..=23 and
//! sentence-length bins 3..=70. Each group is L2-normalized on its own, so
//! no group drowns out the others just by having more columns.

mod space;

pub use space::{
    chi_square, fit_feature_space, select_top_fraction, tfidf_ltc, BoundSpace, FeatureSpace,
    FeatureVector, GroupOffsets, SelectedFeature,
};

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::segmentation::LabelledUnit;

pub const FUNCTION_WORDS: &str = include_str!("../../resources/function_words.txt");
pub const VERBAL_ENDINGS: &str = include_str!("../../resources/verbal_endings.txt");

pub const WORD_LENGTH_MAX: usize = 23;
pub const SENTENCE_LENGTH_MIN: usize = 3;
pub const SENTENCE_LENGTH_MAX: usize = 70;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("lexicon {name} has {actual} entries, expected {expected}")]
    LexiconSize {
        name: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("lexicon {name} entry {entry:?} is empty or contains whitespace")]
    LexiconEntry { name: &'static str, entry: String },
    #[error("no unit by positive author {0} in the training pool")]
    NoPositiveUnits(String),
}

/// The six feature groups, in their fixed global order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureGroup {
    CharNgrams,
    WordNgrams,
    FunctionWords,
    VerbalEndings,
    WordLengths,
    SentenceLengths,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::CharNgrams,
        FeatureGroup::WordNgrams,
        FeatureGroup::FunctionWords,
        FeatureGroup::VerbalEndings,
        FeatureGroup::WordLengths,
        FeatureGroup::SentenceLengths,
    ];
}

/// Parameters of the feature space; lexicons are configuration, validated by
/// count against the sizes they are declared with.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub char_ngram_sizes: Vec<usize>,
    pub word_ngram_sizes: Vec<usize>,
    pub function_words: Vec<String>,
    pub verbal_endings: Vec<String>,
    pub selection_fraction: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::with_lexicons(FUNCTION_WORDS, VERBAL_ENDINGS, 74, 245)
            .expect("embedded lexicons are valid")
    }
}

impl FeatureConfig {
    /// Build a config from lexicon file contents (one entry per line,
    /// `#` comments allowed), checking the entry counts.
    pub fn with_lexicons(
        function_words: &str,
        verbal_endings: &str,
        expected_function_words: usize,
        expected_verbal_endings: usize,
    ) -> Result<Self, FeatureError> {
        let function_words =
            parse_lexicon(function_words, "function_words", expected_function_words)?;
        let verbal_endings =
            parse_lexicon(verbal_endings, "verbal_endings", expected_verbal_endings)?;
        Ok(FeatureConfig {
            char_ngram_sizes: vec![3, 4, 5],
            word_ngram_sizes: vec![1, 2],
            function_words,
            verbal_endings,
            selection_fraction: 0.10,
        })
    }
}

fn parse_lexicon(
    text: &str,
    name: &'static str,
    expected: usize,
) -> Result<Vec<String>, FeatureError> {
    let mut entries = Vec::new();
    for line in text.lines() {
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        if entry.split_whitespace().count() != 1 {
            return Err(FeatureError::LexiconEntry {
                name,
                entry: entry.to_string(),
            });
        }
        entries.push(entry.to_string());
    }
    if entries.len() != expected {
        return Err(FeatureError::LexiconSize {
            name,
            expected,
            actual: entries.len(),
        });
    }
    Ok(entries)
}

/// Raw per-group counts of one unit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupCounts {
    pub char_ngrams: BTreeMap<String, u32>,
    pub word_ngrams: BTreeMap<String, u32>,
    pub function_words: Vec<u32>,
    pub verbal_endings: Vec<u32>,
    pub word_lengths: Vec<u32>,
    pub sentence_lengths: Vec<u32>,
}

/// Count all six feature groups on one unit.
///
/// Character n-grams run over the normalized text with its single spaces, so
/// an n-gram may span a word boundary; there is no padding at the text ends.
/// Verbal endings match as word suffixes with a non-empty stem. Word lengths
/// above the top bin clip into it; sentence lengths clip at both ends.
pub fn count_features(unit: &LabelledUnit, config: &FeatureConfig) -> GroupCounts {
    let text = unit.normalized.as_str();
    let mut counts = GroupCounts {
        function_words: vec![0; config.function_words.len()],
        verbal_endings: vec![0; config.verbal_endings.len()],
        word_lengths: vec![0; WORD_LENGTH_MAX],
        sentence_lengths: vec![0; SENTENCE_LENGTH_MAX - SENTENCE_LENGTH_MIN + 1],
        ..GroupCounts::default()
    };

    for_each_char_ngram(text, &config.char_ngram_sizes, |gram| {
        *counts.char_ngrams.entry(gram.to_string()).or_insert(0) += 1;
    });

    let tokens: Vec<&str> = text.split_whitespace().collect();
    for_each_word_ngram(&tokens, &config.word_ngram_sizes, |gram| {
        *counts.word_ngrams.entry(gram.to_string()).or_insert(0) += 1;
    });

    let fw_index = lexicon_index(&config.function_words);
    let ve_index = lexicon_index(&config.verbal_endings);
    let ve_lengths = distinct_lengths(&config.verbal_endings);
    for token in &tokens {
        if let Some(&i) = fw_index.get(token) {
            counts.function_words[i] += 1;
        }
        for_each_suffix_match(token, &ve_lengths, &ve_index, |i| {
            counts.verbal_endings[i] += 1;
        });
        let len = token.chars().count().min(WORD_LENGTH_MAX);
        if len >= 1 {
            counts.word_lengths[len - 1] += 1;
        }
    }

    for &wc in &unit.sentence_word_counts {
        let clipped = wc.clamp(SENTENCE_LENGTH_MIN, SENTENCE_LENGTH_MAX);
        counts.sentence_lengths[clipped - SENTENCE_LENGTH_MIN] += 1;
    }

    counts
}

fn lexicon_index(entries: &[String]) -> HashMap<&str, usize> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect()
}

fn distinct_lengths(entries: &[String]) -> Vec<usize> {
    let mut lengths: Vec<usize> = entries.iter().map(|e| e.len()).collect();
    lengths.sort_unstable();
    lengths.dedup();
    lengths
}

fn for_each_char_ngram(text: &str, sizes: &[usize], mut f: impl FnMut(&str)) {
    let boundaries: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let n_chars = boundaries.len().saturating_sub(1);
    for &n in sizes {
        if n == 0 || n > n_chars {
            continue;
        }
        for start in 0..=(n_chars - n) {
            f(&text[boundaries[start]..boundaries[start + n]]);
        }
    }
}

fn for_each_word_ngram(tokens: &[&str], sizes: &[usize], mut f: impl FnMut(&str)) {
    let mut scratch = String::new();
    for &n in sizes {
        if n == 0 || n > tokens.len() {
            continue;
        }
        for window in tokens.windows(n) {
            if n == 1 {
                f(window[0]);
            } else {
                scratch.clear();
                for (i, tok) in window.iter().enumerate() {
                    if i > 0 {
                        scratch.push(' ');
                    }
                    scratch.push_str(tok);
                }
                f(&scratch);
            }
        }
    }
}

/// Call `f` once per lexicon ending that is a proper suffix of `token`.
fn for_each_suffix_match(
    token: &str,
    lengths: &[usize],
    index: &HashMap<&str, usize>,
    mut f: impl FnMut(usize),
) {
    for &len in lengths {
        if token.len() > len && token.is_char_boundary(token.len() - len) {
            if let Some(&i) = index.get(&token[token.len() - len..]) {
                f(i);
            }
        }
    }
}

/// Interned sparse-feature vocabulary shared by all units of a corpus.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    strings: Vec<String>,
    map: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.map.get(s) {
            return id;
        }
        let id = self.strings.len() as u32;
        self.strings.push(s.to_string());
        self.map.insert(s.to_string(), id);
        id
    }

    pub fn get(&self, s: &str) -> Option<u32> {
        self.map.get(s).copied()
    }

    pub fn resolve(&self, id: u32) -> &str {
        &self.strings[id as usize]
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

/// Counts of one unit with sparse features interned as symbol ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitCounts {
    pub char_counts: Vec<(u32, u32)>,
    pub word_counts: Vec<(u32, u32)>,
    pub function_words: Vec<u32>,
    pub verbal_endings: Vec<u32>,
    pub word_lengths: Vec<u32>,
    pub sentence_lengths: Vec<u32>,
}

/// Per-corpus feature-count cache.
///
/// The evaluation protocol refits the feature space once per held-out
/// document; recounting n-grams every time would dominate the runtime, so
/// the counts are computed once here and every fit works from symbol ids.
#[derive(Debug, Clone)]
pub struct ExtractedUnits {
    pub char_vocab: Interner,
    pub word_vocab: Interner,
    pub units: Vec<UnitCounts>,
    pub config: FeatureConfig,
}

impl ExtractedUnits {
    pub fn extract(units: &[LabelledUnit], config: &FeatureConfig) -> Self {
        let mut char_vocab = Interner::default();
        let mut word_vocab = Interner::default();
        let mut out = Vec::with_capacity(units.len());
        for unit in units {
            let counts = count_features(unit, config);
            let mut char_counts: Vec<(u32, u32)> = counts
                .char_ngrams
                .iter()
                .map(|(gram, &c)| (char_vocab.intern(gram), c))
                .collect();
            char_counts.sort_unstable_by_key(|&(sym, _)| sym);
            let mut word_counts: Vec<(u32, u32)> = counts
                .word_ngrams
                .iter()
                .map(|(gram, &c)| (word_vocab.intern(gram), c))
                .collect();
            word_counts.sort_unstable_by_key(|&(sym, _)| sym);
            out.push(UnitCounts {
                char_counts,
                word_counts,
                function_words: counts.function_words,
                verbal_endings: counts.verbal_endings,
                word_lengths: counts.word_lengths,
                sentence_lengths: counts.sentence_lengths,
            });
        }
        ExtractedUnits {
            char_vocab,
            word_vocab,
            units: out,
            config: config.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::normalize;
    use crate::segmentation::{LabelledUnit, UnitKind};

    fn unit(text: &str, sentence_word_counts: Vec<usize>) -> LabelledUnit {
        LabelledUnit {
            unit_id: "t".into(),
            group_id: "t".into(),
            author: "a".into(),
            kind: UnitKind::WholeDocument,
            text: text.into(),
            normalized: normalize(text),
            sentence_word_counts,
        }
    }

    #[test]
    fn embedded_lexicons_have_the_declared_sizes() {
        let config = FeatureConfig::default();
        assert_eq!(config.function_words.len(), 74);
        assert_eq!(config.verbal_endings.len(), 245);
        // Entries are normalized: lowercase, no `v`.
        for entry in config.function_words.iter().chain(&config.verbal_endings) {
            assert!(!entry.contains('v') && *entry == entry.to_lowercase());
        }
    }

    #[test]
    fn wrong_lexicon_size_is_rejected() {
        let err = FeatureConfig::with_lexicons("et\nnon\n", VERBAL_ENDINGS, 74, 245);
        assert!(matches!(err, Err(FeatureError::LexiconSize { .. })));
    }

    #[test]
    fn char_trigrams_span_spaces_without_padding() {
        let config = FeatureConfig {
            char_ngram_sizes: vec![3],
            ..FeatureConfig::default()
        };
        let counts = count_features(&unit("ab ab", vec![2]), &config);
        let expected: BTreeMap<String, u32> = [("ab ", 1), ("b a", 1), (" ab", 1)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        assert_eq!(counts.char_ngrams, expected);
    }

    #[test]
    fn function_words_count_exact_tokens() {
        let config = FeatureConfig::default();
        let counts = count_features(&unit("et non et", vec![3]), &config);
        let et = config
            .function_words
            .iter()
            .position(|w| w == "et")
            .unwrap();
        let non = config
            .function_words
            .iter()
            .position(|w| w == "non")
            .unwrap();
        assert_eq!(counts.function_words[et], 2);
        assert_eq!(counts.function_words[non], 1);
    }

    #[test]
    fn verbal_ending_matches_word_suffix_once() {
        let config = FeatureConfig::default();
        // "amaverunt" normalizes to "amauerunt", whose suffix is "erunt".
        let counts = count_features(&unit("amaverunt", vec![1]), &config);
        let erunt = config
            .verbal_endings
            .iter()
            .position(|e| e == "erunt")
            .unwrap();
        assert_eq!(counts.verbal_endings[erunt], 1);
    }

    #[test]
    fn ending_needs_a_nonempty_stem() {
        let config = FeatureConfig::default();
        // The bare token "erunt" equals the ending, so it does not match it.
        let counts = count_features(&unit("erunt", vec![1]), &config);
        let erunt = config
            .verbal_endings
            .iter()
            .position(|e| e == "erunt")
            .unwrap();
        assert_eq!(counts.verbal_endings[erunt], 0);
    }

    #[test]
    fn word_lengths_clip_into_the_top_bin() {
        let config = FeatureConfig::default();
        let long = "u".repeat(30);
        let counts = count_features(&unit(&format!("ab {long}"), vec![2]), &config);
        assert_eq!(counts.word_lengths[1], 1); // "ab"
        assert_eq!(counts.word_lengths[WORD_LENGTH_MAX - 1], 1);
    }

    #[test]
    fn sentence_lengths_clip_at_both_ends() {
        let config = FeatureConfig::default();
        let counts = count_features(&unit("breuis", vec![1, 35, 200]), &config);
        assert_eq!(counts.sentence_lengths[0], 1); // clipped up to 3
        assert_eq!(counts.sentence_lengths[35 - SENTENCE_LENGTH_MIN], 1);
        assert_eq!(
            counts.sentence_lengths[SENTENCE_LENGTH_MAX - SENTENCE_LENGTH_MIN],
            1
        );
    }

    #[test]
    fn word_bigrams_join_adjacent_tokens() {
        let config = FeatureConfig::default();
        let counts = count_features(&unit("ueni uidi uici", vec![3]), &config);
        assert_eq!(counts.word_ngrams.get("ueni uidi"), Some(&1));
        assert_eq!(counts.word_ngrams.get("uidi uici"), Some(&1));
        assert_eq!(counts.word_ngrams.get("ueni"), Some(&1));
    }

    #[test]
    fn extraction_preserves_counts_through_interning() {
        let config = FeatureConfig::default();
        let units = vec![unit("et non et", vec![3]), unit("non sed non", vec![3])];
        let extracted = ExtractedUnits::extract(&units, &config);
        assert_eq!(extracted.units.len(), 2);
        let et = extracted.word_vocab.get("et").unwrap();
        let count = extracted.units[0]
            .word_counts
            .iter()
            .find(|&&(sym, _)| sym == et)
            .map(|&(_, c)| c);
        assert_eq!(count, Some(2));
    }
}
