//! Sentence splitting, short-sentence merging, and expansion of a corpus
//! into labelled units.
//!
//! Each document contributes itself as one unit plus a set of segments, each
//! segment being three consecutive (merged) sentences. Units remember the
//! document they came from through `group_id`, which is what keeps document
//! material together during cross-validation.
//!
//! Splitting runs on cased, punctuated text; the orthographic normalization
//! that erases punctuation is applied per unit afterwards, so sentence
//! lengths stay observable.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    collapse_whitespace, count_words, normalize, strip_citations, CitationPolicy, Corpus,
    MarkerError,
};

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("cannot merge an empty sentence list")]
    EmptySentences,
    #[error("document {doc_id}: {source}")]
    BadDocument { doc_id: String, source: MarkerError },
    #[error("unit dump failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub word_count: usize,
}

impl Sentence {
    fn new(text: String) -> Self {
        let word_count = count_words(&text);
        Sentence { text, word_count }
    }

    fn absorb(&mut self, other: &Sentence) {
        self.text.push(' ');
        self.text.push_str(&other.text);
        self.word_count += other.word_count;
    }
}

/// Default minimum sentence length in words; shorter sentences are merged.
pub const MIN_SENTENCE_WORDS: usize = 8;
/// Default number of consecutive sentences per segment.
pub const SEGMENT_WINDOW: usize = 3;

/// Rule-based splitter: a sentence ends at a run of terminator characters,
/// unless the run is a `.` directly after a listed abbreviation.
///
/// Editions of medieval texts punctuate editorially, so the rules stay
/// simple and configurable rather than linguistically ambitious.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    pub terminators: BTreeSet<char>,
    pub abbreviations: BTreeSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        let abbreviations = [
            "cap", "cf", "cfr", "etc", "ibid", "lib", "no", "p", "par", "s", "u", "uid", "v",
            "vid", "uol", "vol",
        ];
        SentenceSplitter {
            terminators: ['.', '!', '?', ';'].into_iter().collect(),
            abbreviations: abbreviations.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SentenceSplitter {
    /// Split `text` into sentences.
    ///
    /// Whitespace inside each sentence is collapsed; joining the returned
    /// texts with single spaces reproduces `collapse_whitespace(text)`.
    /// Text without any terminator comes back as a single sentence.
    pub fn split(&self, text: &str) -> Vec<Sentence> {
        let chars: Vec<char> = text.chars().collect();
        let mut sentences = Vec::new();
        let mut current = String::new();
        let mut last_word = String::new();
        let mut i = 0usize;

        while i < chars.len() {
            let ch = chars[i];
            current.push(ch);
            if ch.is_alphabetic() {
                last_word.push(ch.to_lowercase().next().unwrap_or(ch));
            } else if !self.terminators.contains(&ch) {
                last_word.clear();
            }

            if self.terminators.contains(&ch) {
                // Consume the whole terminator run ("..", "?!", ...).
                let mut run_has_strong = ch != '.';
                while i + 1 < chars.len() && self.terminators.contains(&chars[i + 1]) {
                    i += 1;
                    current.push(chars[i]);
                    run_has_strong |= chars[i] != '.';
                }
                // A boundary needs following whitespace (or end of text);
                // this keeps numbers like "p.12" and stray dots intact.
                let at_boundary = i + 1 >= chars.len() || chars[i + 1].is_whitespace();
                let abbreviation_guard = !run_has_strong && self.abbreviations.contains(&last_word);
                last_word.clear();
                if at_boundary && !abbreviation_guard {
                    push_sentence(&mut sentences, &mut current);
                }
            }
            i += 1;
        }
        push_sentence(&mut sentences, &mut current);
        sentences
    }
}

fn push_sentence(sentences: &mut Vec<Sentence>, current: &mut String) {
    let text = collapse_whitespace(current);
    current.clear();
    if !text.is_empty() {
        sentences.push(Sentence::new(text));
    }
}

/// Convenience wrapper over the default splitter.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    SentenceSplitter::default().split(text)
}

/// Merge sentences shorter than `min_words` into their neighbours.
///
/// Merging runs left to right, repeatedly: a short sentence absorbs the next
/// one until long enough. A short remainder at the end merges backward into
/// the previous sentence. The single exception to the output guarantee is a
/// text whose total length is below `min_words`.
pub fn merge_short_sentences(
    sentences: Vec<Sentence>,
    min_words: usize,
) -> Result<Vec<Sentence>, SegmentationError> {
    if sentences.is_empty() {
        return Err(SegmentationError::EmptySentences);
    }
    let mut merged: Vec<Sentence> = Vec::with_capacity(sentences.len());
    let mut pending: Option<Sentence> = None;
    for sentence in sentences {
        let current = match pending.take() {
            Some(mut p) => {
                p.absorb(&sentence);
                p
            }
            None => sentence,
        };
        if current.word_count >= min_words {
            merged.push(current);
        } else {
            pending = Some(current);
        }
    }
    if let Some(rest) = pending {
        match merged.last_mut() {
            Some(prev) => prev.absorb(&rest),
            None => merged.push(rest),
        }
    }
    Ok(merged)
}

/// Group sentences into consecutive non-overlapping windows.
///
/// A trailing remainder shorter than `window` is appended to the final
/// segment instead of forming a stub. Texts with at most `window` sentences
/// yield no segments at all: the whole document already covers them.
pub fn make_segments(sentences: &[Sentence], window: usize) -> Vec<Vec<Sentence>> {
    if window == 0 || sentences.len() <= window {
        return Vec::new();
    }
    let full_windows = sentences.len() / window;
    let mut segments = Vec::with_capacity(full_windows);
    for w in 0..full_windows {
        let start = w * window;
        let end = if w + 1 == full_windows {
            sentences.len()
        } else {
            start + window
        };
        segments.push(sentences[start..end].to_vec());
    }
    segments
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitKind {
    WholeDocument,
    Segment,
}

impl UnitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnitKind::WholeDocument => "whole_document",
            UnitKind::Segment => "segment",
        }
    }
}

/// One training/test unit: a whole document or a three-sentence segment.
///
/// `text` is citation-stripped but still cased and punctuated; `normalized`
/// is the lowercased, u-normalized, punctuation-free form that the feature
/// counters consume. Sentence word counts are kept so sentence-length
/// features survive normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledUnit {
    pub unit_id: String,
    pub group_id: String,
    pub author: String,
    pub kind: UnitKind,
    pub text: String,
    pub normalized: String,
    pub sentence_word_counts: Vec<usize>,
}

impl LabelledUnit {
    pub fn word_count(&self) -> usize {
        count_words(&self.text)
    }
}

/// Build a labelled unit directly from free text, outside any corpus.
///
/// This is the path a disputed document takes: same citation stripping, same
/// splitting and merging, same normalization as every training unit.
pub fn unit_from_text(
    unit_id: &str,
    author_hint: &str,
    text: &str,
    policy: CitationPolicy,
) -> Result<LabelledUnit, SegmentationError> {
    let stripped =
        strip_citations(text, policy).map_err(|source| SegmentationError::BadDocument {
            doc_id: unit_id.to_string(),
            source,
        })?;
    let sentences = split_sentences(&stripped);
    let merged = if sentences.is_empty() {
        Vec::new()
    } else {
        merge_short_sentences(sentences, MIN_SENTENCE_WORDS)?
    };
    Ok(LabelledUnit {
        unit_id: unit_id.to_string(),
        group_id: unit_id.to_string(),
        author: author_hint.to_string(),
        kind: UnitKind::WholeDocument,
        normalized: normalize(&stripped),
        sentence_word_counts: merged.iter().map(|s| s.word_count).collect(),
        text: stripped,
    })
}

/// Expand a corpus into labelled units: one whole-document unit per document
/// followed by its segments, in deterministic corpus order.
pub fn expand_corpus(
    corpus: &Corpus,
    policy: CitationPolicy,
) -> Result<Vec<LabelledUnit>, SegmentationError> {
    let splitter = SentenceSplitter::default();
    let mut units = Vec::new();
    for doc in &corpus.documents {
        let stripped = strip_citations(&doc.raw_text, policy).map_err(|source| {
            SegmentationError::BadDocument {
                doc_id: doc.doc_id.clone(),
                source,
            }
        })?;
        let sentences = splitter.split(&stripped);
        let merged = if sentences.is_empty() {
            Vec::new()
        } else {
            merge_short_sentences(sentences, MIN_SENTENCE_WORDS)?
        };

        units.push(LabelledUnit {
            unit_id: doc.doc_id.clone(),
            group_id: doc.doc_id.clone(),
            author: doc.author.clone(),
            kind: UnitKind::WholeDocument,
            normalized: normalize(&stripped),
            sentence_word_counts: merged.iter().map(|s| s.word_count).collect(),
            text: stripped,
        });

        for (idx, segment) in make_segments(&merged, SEGMENT_WINDOW).iter().enumerate() {
            let text = segment
                .iter()
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            units.push(LabelledUnit {
                unit_id: format!("{}#s{idx:03}", doc.doc_id),
                group_id: doc.doc_id.clone(),
                author: doc.author.clone(),
                kind: UnitKind::Segment,
                normalized: normalize(&text),
                sentence_word_counts: segment.iter().map(|s| s.word_count).collect(),
                text,
            });
        }
    }
    Ok(units)
}

/// Debug dump: `unit_id,group_id,author,kind,word_count`.
pub fn write_units_csv<W: Write>(
    units: &[LabelledUnit],
    mut out: W,
) -> Result<(), SegmentationError> {
    writeln!(out, "unit_id,group_id,author,kind,word_count")?;
    for u in units {
        writeln!(
            out,
            "{},{},{},{},{}",
            u.unit_id,
            u.group_id,
            u.author,
            u.kind.as_str(),
            u.word_count()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(words: usize) -> Sentence {
        Sentence::new(vec!["uerbum"; words].join(" "))
    }

    #[test]
    fn splits_on_terminators() {
        let out = split_sentences("a b c. d e f! g");
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].text, "a b c.");
        assert_eq!(out[1].text, "d e f!");
        assert_eq!(out[2].text, "g");
    }

    #[test]
    fn no_terminator_yields_one_sentence() {
        let out = split_sentences("no terminator here");
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].word_count, 3);
    }

    #[test]
    fn terminator_runs_do_not_split_twice() {
        let out = split_sentences("quid est?! nescio...");
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].text, "quid est?!");
    }

    #[test]
    fn abbreviations_do_not_end_sentences() {
        let out = split_sentences("uide cap. tertium. deinde lege");
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].text, "uide cap. tertium.");
    }

    #[test]
    fn joined_sentences_reconstruct_collapsed_input() {
        let text = "Prima  sententia hic est. Secunda\nsequitur!  Tertia; et quarta restat";
        let parts: Vec<String> = split_sentences(text).into_iter().map(|s| s.text).collect();
        assert_eq!(parts.join(" "), collapse_whitespace(text));
    }

    #[test]
    fn merge_short_forward() {
        let merged = merge_short_sentences(vec![sent(2), sent(9)], 8).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].word_count, 11);
    }

    #[test]
    fn merge_last_short_backward() {
        let merged = merge_short_sentences(vec![sent(9), sent(2)], 8).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].word_count, 11);
    }

    #[test]
    fn merge_leaves_long_sentences_alone() {
        let merged = merge_short_sentences(vec![sent(9), sent(10)], 8).unwrap();
        assert_eq!(
            merged.iter().map(|s| s.word_count).collect::<Vec<_>>(),
            vec![9, 10]
        );
    }

    #[test]
    fn merge_cascades_left_to_right() {
        let merged = merge_short_sentences(vec![sent(2), sent(3), sent(9)], 8).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].word_count, 14);
    }

    #[test]
    fn merge_rejects_empty_input() {
        assert!(merge_short_sentences(Vec::new(), 8).is_err());
    }

    #[test]
    fn whole_text_shorter_than_minimum_survives() {
        let merged = merge_short_sentences(vec![sent(2), sent(3)], 8).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].word_count, 5);
    }

    #[test]
    fn ten_sentences_make_segments_of_3_3_4() {
        let sentences: Vec<Sentence> = (0..10).map(|_| sent(9)).collect();
        let segments = make_segments(&sentences, 3);
        assert_eq!(
            segments.iter().map(|s| s.len()).collect::<Vec<_>>(),
            vec![3, 3, 4]
        );
    }

    #[test]
    fn three_sentences_make_no_segments() {
        let sentences: Vec<Sentence> = (0..3).map(|_| sent(9)).collect();
        assert!(make_segments(&sentences, 3).is_empty());
    }

    #[test]
    fn five_sentences_make_one_extended_segment() {
        let sentences: Vec<Sentence> = (0..5).map(|_| sent(9)).collect();
        let segments = make_segments(&sentences, 3);
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].len(), 5);
    }

    #[test]
    fn unit_csv_dump_lists_each_unit() {
        let unit = LabelledUnit {
            unit_id: "d1#s000".into(),
            group_id: "d1".into(),
            author: "a".into(),
            kind: UnitKind::Segment,
            text: "tres uerba hic".into(),
            normalized: "tres uerba hic".into(),
            sentence_word_counts: vec![3],
        };
        let mut buf = Vec::new();
        write_units_csv(&[unit], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "unit_id,group_id,author,kind,word_count\nd1#s000,d1,a,segment,3\n"
        );
    }
}
