//! Fitting the feature space on a training pool: chi-square selection over
//! the sparse groups, tf-idf weighting, per-group L2 normalization.

use std::collections::BTreeMap;

use super::{
    count_features, ExtractedUnits, FeatureConfig, FeatureError, FeatureGroup, SENTENCE_LENGTH_MAX,
    SENTENCE_LENGTH_MIN, WORD_LENGTH_MAX,
};
use crate::segmentation::LabelledUnit;

/// Chi-square association between a feature and the positive class, on the
/// event space of documents.
///
/// `present_pos` counts training units of the positive class containing the
/// feature at least once, `absent_pos` those not containing it; the `_neg`
/// pair does the same for the rest. Returns 0 whenever a marginal is zero
/// (a feature present in every unit, absent everywhere, or a single-class
/// pool carries no signal).
pub fn chi_square(present_pos: u64, absent_pos: u64, present_neg: u64, absent_neg: u64) -> f64 {
    let n11 = present_pos as f64;
    let n10 = absent_pos as f64;
    let n01 = present_neg as f64;
    let n00 = absent_neg as f64;
    let n = n11 + n10 + n01 + n00;
    let present = n11 + n01;
    let absent = n10 + n00;
    let positive = n11 + n10;
    let negative = n01 + n00;
    let denom = present * absent * positive * negative;
    if denom == 0.0 {
        return 0.0;
    }
    let diff = n11 * n00 - n10 * n01;
    n * diff * diff / denom
}

/// Keep the ⌈fraction·|vocabulary|⌉ highest-scoring features; ties at the
/// cutoff go to the lexicographically smaller feature string.
pub fn select_top_fraction(scores: &BTreeMap<String, f64>, fraction: f64) -> Vec<String> {
    let mut ranked: Vec<(&str, f64)> = scores
        .iter()
        .map(|(name, &score)| (name.as_str(), score))
        .collect();
    let k = top_k(ranked.len(), fraction);
    rank_features(&mut ranked);
    ranked.truncate(k);
    let mut selected: Vec<String> = ranked
        .into_iter()
        .map(|(name, _)| name.to_string())
        .collect();
    selected.sort_unstable();
    selected
}

fn top_k(vocabulary: usize, fraction: f64) -> usize {
    ((vocabulary as f64 * fraction).ceil() as usize).min(vocabulary)
}

fn rank_features(ranked: &mut [(&str, f64)]) {
    ranked.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(b.0))
    });
}

/// tf-idf in the "ltc" flavour: `(1 + ln tf) · ln(N/df)` for tf ≥ 1, else 0.
///
/// The cosine step of "ltc" is realized downstream by the per-group L2
/// normalization, so it does not appear here. Selected features always have
/// df ≥ 1, hence no smoothing.
pub fn tfidf_ltc(raw_count: u32, df: usize, n_docs: usize) -> f64 {
    if raw_count == 0 || df == 0 || n_docs == 0 {
        return 0.0;
    }
    let tf = 1.0 + (raw_count as f64).ln();
    let idf = (n_docs as f64 / df as f64).ln();
    tf * idf
}

/// One selected sparse feature with its inverse document frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedFeature {
    pub idf: f64,
}

/// Start offset and width of each group inside the global index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupOffsets {
    pub spans: [(u32, u32); 6],
}

impl GroupOffsets {
    pub fn of(&self, group: FeatureGroup) -> (u32, u32) {
        self.spans[group as usize]
    }

    pub fn dimension(&self) -> u32 {
        let (start, len) = self.spans[5];
        start + len
    }
}

/// A fitted feature space: selected sparse vocabularies with idf statistics,
/// plus the fixed dense layout.
///
/// Keyed by feature string, not by any per-corpus symbol table, so two fits
/// on the same training pool compare equal no matter which corpus cache they
/// were run against.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    pub config: FeatureConfig,
    pub n_train_docs: usize,
    /// Selected char n-grams in lexicographic order; position = column.
    pub char_selected: BTreeMap<String, SelectedFeature>,
    pub word_selected: BTreeMap<String, SelectedFeature>,
    pub offsets: GroupOffsets,
}

impl FeatureSpace {
    /// Fit on the training units designated by `train_idx`.
    ///
    /// `positive` flags each unit of the underlying corpus; vocabularies,
    /// chi-square scores and document frequencies all come from the training
    /// units alone.
    pub fn fit(
        extracted: &ExtractedUnits,
        train_idx: &[usize],
        positive: &[bool],
        positive_author: &str,
    ) -> Result<FeatureSpace, FeatureError> {
        let n_train = train_idx.len();
        let pos_total = train_idx.iter().filter(|&&i| positive[i]).count();
        if pos_total == 0 {
            return Err(FeatureError::NoPositiveUnits(positive_author.to_string()));
        }
        let neg_total = n_train - pos_total;

        let char_selected = fit_sparse_group(
            extracted.char_vocab.len(),
            train_idx,
            positive,
            |i| &extracted.units[i].char_counts,
            |sym| extracted.char_vocab.resolve(sym),
            pos_total as u64,
            neg_total as u64,
            extracted.config.selection_fraction,
            n_train,
        );
        let word_selected = fit_sparse_group(
            extracted.word_vocab.len(),
            train_idx,
            positive,
            |i| &extracted.units[i].word_counts,
            |sym| extracted.word_vocab.resolve(sym),
            pos_total as u64,
            neg_total as u64,
            extracted.config.selection_fraction,
            n_train,
        );

        let config = extracted.config.clone();
        let offsets = layout(
            char_selected.len() as u32,
            word_selected.len() as u32,
            &config,
        );
        Ok(FeatureSpace {
            config,
            n_train_docs: n_train,
            char_selected,
            word_selected,
            offsets,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.offsets.dimension()
    }

    /// Resolve selected feature strings to cache symbols for fast transforms.
    pub fn bind<'a>(&'a self, extracted: &'a ExtractedUnits) -> BoundSpace<'a> {
        let mut char_lookup = vec![None; extracted.char_vocab.len()];
        for (col, (feature, sel)) in self.char_selected.iter().enumerate() {
            if let Some(sym) = extracted.char_vocab.get(feature) {
                char_lookup[sym as usize] = Some((col as u32, sel.idf));
            }
        }
        let mut word_lookup = vec![None; extracted.word_vocab.len()];
        for (col, (feature, sel)) in self.word_selected.iter().enumerate() {
            if let Some(sym) = extracted.word_vocab.get(feature) {
                word_lookup[sym as usize] = Some((col as u32, sel.idf));
            }
        }
        BoundSpace {
            space: self,
            extracted,
            char_lookup,
            word_lookup,
        }
    }

    /// Transform a free-standing unit (not part of any cache).
    pub fn transform_unit(&self, unit: &LabelledUnit) -> FeatureVector {
        let counts = count_features(unit, &self.config);
        let mut entries = Vec::new();

        let char_weighted =
            self.char_selected
                .iter()
                .enumerate()
                .filter_map(|(col, (feature, sel))| {
                    counts
                        .char_ngrams
                        .get(feature)
                        .map(|&tf| (col as u32, (1.0 + (tf as f64).ln()) * sel.idf))
                });
        push_group(
            &mut entries,
            self.offsets.of(FeatureGroup::CharNgrams),
            char_weighted,
        );

        let word_weighted =
            self.word_selected
                .iter()
                .enumerate()
                .filter_map(|(col, (feature, sel))| {
                    counts
                        .word_ngrams
                        .get(feature)
                        .map(|&tf| (col as u32, (1.0 + (tf as f64).ln()) * sel.idf))
                });
        push_group(
            &mut entries,
            self.offsets.of(FeatureGroup::WordNgrams),
            word_weighted,
        );

        self.push_dense(
            &mut entries,
            FeatureGroup::FunctionWords,
            &counts.function_words,
        );
        self.push_dense(
            &mut entries,
            FeatureGroup::VerbalEndings,
            &counts.verbal_endings,
        );
        self.push_dense(
            &mut entries,
            FeatureGroup::WordLengths,
            &counts.word_lengths,
        );
        self.push_dense(
            &mut entries,
            FeatureGroup::SentenceLengths,
            &counts.sentence_lengths,
        );

        FeatureVector {
            dimension: self.dimension(),
            entries,
            offsets: self.offsets,
        }
    }

    fn push_dense(&self, entries: &mut Vec<(u32, f64)>, group: FeatureGroup, counts: &[u32]) {
        let weighted = counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (i as u32, c as f64));
        push_group(entries, self.offsets.of(group), weighted);
    }
}

/// Dense groups come after the two sparse ones, in fixed order and width.
fn layout(n_char: u32, n_word: u32, config: &FeatureConfig) -> GroupOffsets {
    let widths = [
        n_char,
        n_word,
        config.function_words.len() as u32,
        config.verbal_endings.len() as u32,
        WORD_LENGTH_MAX as u32,
        (SENTENCE_LENGTH_MAX - SENTENCE_LENGTH_MIN + 1) as u32,
    ];
    let mut spans = [(0u32, 0u32); 6];
    let mut start = 0u32;
    for (span, width) in spans.iter_mut().zip(widths) {
        *span = (start, width);
        start += width;
    }
    GroupOffsets { spans }
}

/// L2-normalize a group and append it at its global offset.
///
/// Entries are sorted by column before the norm is accumulated, so the same
/// group always sums in the same order no matter how the caller produced it.
fn push_group(
    entries: &mut Vec<(u32, f64)>,
    (start, _len): (u32, u32),
    weighted: impl Iterator<Item = (u32, f64)>,
) {
    let group_start = entries.len();
    for (col, w) in weighted {
        if w != 0.0 {
            entries.push((start + col, w));
        }
    }
    entries[group_start..].sort_unstable_by_key(|&(col, _)| col);
    let norm = entries[group_start..]
        .iter()
        .map(|&(_, w)| w * w)
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        for entry in &mut entries[group_start..] {
            entry.1 /= norm;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_sparse_group<'a>(
    vocab_size: usize,
    train_idx: &[usize],
    positive: &[bool],
    counts_of: impl Fn(usize) -> &'a [(u32, u32)],
    resolve: impl Fn(u32) -> &'a str,
    pos_total: u64,
    neg_total: u64,
    fraction: f64,
    n_train: usize,
) -> BTreeMap<String, SelectedFeature> {
    let mut df_all = vec![0u32; vocab_size];
    let mut df_pos = vec![0u32; vocab_size];
    for &i in train_idx {
        let is_pos = positive[i];
        for &(sym, _count) in counts_of(i) {
            df_all[sym as usize] += 1;
            if is_pos {
                df_pos[sym as usize] += 1;
            }
        }
    }

    let mut ranked: Vec<(&str, f64, u32)> = Vec::new();
    for sym in 0..vocab_size as u32 {
        let df = df_all[sym as usize];
        if df == 0 {
            continue; // not part of the training vocabulary
        }
        let present_pos = df_pos[sym as usize] as u64;
        let present_neg = df as u64 - present_pos;
        let score = chi_square(
            present_pos,
            pos_total - present_pos,
            present_neg,
            neg_total - present_neg,
        );
        ranked.push((resolve(sym), score, df));
    }

    let k = top_k(ranked.len(), fraction);
    ranked.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(b.0))
    });
    ranked.truncate(k);

    ranked
        .into_iter()
        .map(|(feature, _score, df)| {
            let idf = (n_train as f64 / df as f64).ln();
            (feature.to_string(), SelectedFeature { idf })
        })
        .collect()
}

/// Convenience wrapper: extract and fit in one call.
///
/// The evaluation protocol uses the cached [`ExtractedUnits`] path instead;
/// this one suits single fits and tests.
pub fn fit_feature_space(
    units: &[LabelledUnit],
    positive_author: &str,
    config: &FeatureConfig,
) -> Result<FeatureSpace, FeatureError> {
    let extracted = ExtractedUnits::extract(units, config);
    let train_idx: Vec<usize> = (0..units.len()).collect();
    let positive: Vec<bool> = units.iter().map(|u| u.author == positive_author).collect();
    FeatureSpace::fit(&extracted, &train_idx, &positive, positive_author)
}

/// A feature space bound to a corpus cache for fast transforms.
pub struct BoundSpace<'a> {
    space: &'a FeatureSpace,
    extracted: &'a ExtractedUnits,
    char_lookup: Vec<Option<(u32, f64)>>,
    word_lookup: Vec<Option<(u32, f64)>>,
}

impl BoundSpace<'_> {
    pub fn space(&self) -> &FeatureSpace {
        self.space
    }

    pub fn transform(&self, unit_idx: usize) -> FeatureVector {
        let unit = &self.extracted.units[unit_idx];
        let mut entries =
            Vec::with_capacity(unit.char_counts.len() / 8 + unit.word_counts.len() / 8 + 64);

        let offsets = self.space.offsets;
        let char_weighted = unit.char_counts.iter().filter_map(|&(sym, tf)| {
            self.char_lookup[sym as usize].map(|(col, idf)| (col, (1.0 + (tf as f64).ln()) * idf))
        });
        push_group(
            &mut entries,
            offsets.of(FeatureGroup::CharNgrams),
            char_weighted,
        );

        let word_weighted = unit.word_counts.iter().filter_map(|&(sym, tf)| {
            self.word_lookup[sym as usize].map(|(col, idf)| (col, (1.0 + (tf as f64).ln()) * idf))
        });
        push_group(
            &mut entries,
            offsets.of(FeatureGroup::WordNgrams),
            word_weighted,
        );

        self.space.push_dense(
            &mut entries,
            FeatureGroup::FunctionWords,
            &unit.function_words,
        );
        self.space.push_dense(
            &mut entries,
            FeatureGroup::VerbalEndings,
            &unit.verbal_endings,
        );
        self.space
            .push_dense(&mut entries, FeatureGroup::WordLengths, &unit.word_lengths);
        self.space.push_dense(
            &mut entries,
            FeatureGroup::SentenceLengths,
            &unit.sentence_lengths,
        );

        FeatureVector {
            dimension: self.space.dimension(),
            entries,
            offsets,
        }
    }
}

/// Sparse weighted vector over the global feature space, partitioned into
/// the six group subranges, each of unit L2 norm when nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dimension: u32,
    /// (global column, weight), sorted by column, weights nonzero.
    pub entries: Vec<(u32, f64)>,
    pub offsets: GroupOffsets,
}

impl AsRef<FeatureVector> for FeatureVector {
    fn as_ref(&self) -> &FeatureVector {
        self
    }
}

impl FeatureVector {
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| w * dense[i as usize])
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// L2 norm of one group subvector.
    pub fn group_norm(&self, group: FeatureGroup) -> f64 {
        let (start, len) = self.offsets.of(group);
        self.entries
            .iter()
            .filter(|&&(i, _)| i >= start && i < start + len)
            .map(|&(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }
}
