//! Confusion-count bookkeeping and the evaluation measures used throughout:
//! F1 with its degenerate all-zero branch, vanilla accuracy, and the
//! macro/micro aggregation over per-author verifiers.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("accuracy is undefined on zero predictions")]
    EmptyCounts,
    #[error("cannot aggregate an empty author list")]
    EmptyAggregate,
    #[error("report I/O failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Outcome counts of one binary verifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    /// Record one decision against the true label.
    pub fn record(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Elementwise sum, used for micro-averaged ("pooled") measures.
    pub fn pooled<'a>(counts: impl IntoIterator<Item = &'a ConfusionCounts>) -> ConfusionCounts {
        counts
            .into_iter()
            .fold(ConfusionCounts::default(), |acc, c| ConfusionCounts {
                tp: acc.tp + c.tp,
                fp: acc.fp + c.fp,
                fn_: acc.fn_ + c.fn_,
                tn: acc.tn + c.tn,
            })
    }
}

/// F1 = 2TP / (2TP + FP + FN), defined as 1 when TP = FP = FN = 0.
///
/// The degenerate branch makes a verifier that correctly rejects every
/// negative on an all-negative evaluation score 1 rather than 0/0.
pub fn f1(c: ConfusionCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        2.0 * c.tp as f64 / denom as f64
    }
}

/// Vanilla accuracy: correct predictions over all predictions.
pub fn accuracy(c: ConfusionCounts) -> Result<f64, MetricsError> {
    let total = c.total();
    if total == 0 {
        return Err(MetricsError::EmptyCounts);
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}

/// Macro F1, micro F1 and pooled accuracy over per-author counts.
///
/// Macro averages the per-author F1 values; micro applies F1 to the pooled
/// counts. For accuracy the macro and micro variants coincide whenever every
/// author is evaluated on the same number of documents, so a single value is
/// returned.
pub fn aggregate(
    per_author: &[(String, ConfusionCounts)],
) -> Result<(f64, f64, f64), MetricsError> {
    if per_author.is_empty() {
        return Err(MetricsError::EmptyAggregate);
    }
    let macro_f1 = per_author.iter().map(|(_, c)| f1(*c)).sum::<f64>() / per_author.len() as f64;
    let pooled = ConfusionCounts::pooled(per_author.iter().map(|(_, c)| c));
    let micro_f1 = f1(pooled);
    let acc = accuracy(pooled)?;
    Ok((macro_f1, micro_f1, acc))
}

/// One verification decision, as recorded in the decisions CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub author: String,
    pub doc_id: String,
    pub truth: bool,
    pub predicted: bool,
    pub posterior: f64,
    pub hyperparameter: f64,
}

/// Per-author scores plus the aggregate measures for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub corpus: String,
    pub learner: String,
    pub per_author: Vec<AuthorScore>,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub accuracy: f64,
    pub decisions: Vec<DecisionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorScore {
    pub author: String,
    pub counts: ConfusionCounts,
    pub f1: f64,
    pub accuracy: f64,
}

impl EvaluationReport {
    /// Assemble a report from raw decision records.
    ///
    /// Per-author counts are rebuilt from the records, so the pooled counts
    /// equal the sum of the per-author counts by construction.
    pub fn from_decisions(
        corpus: &str,
        learner: &str,
        decisions: Vec<DecisionRecord>,
    ) -> Result<Self, MetricsError> {
        let mut authors: Vec<String> = decisions.iter().map(|d| d.author.clone()).collect();
        authors.sort();
        authors.dedup();

        let mut per_author = Vec::with_capacity(authors.len());
        for author in &authors {
            let mut counts = ConfusionCounts::default();
            for d in decisions.iter().filter(|d| &d.author == author) {
                counts.record(d.truth, d.predicted);
            }
            per_author.push(AuthorScore {
                author: author.clone(),
                counts,
                f1: f1(counts),
                accuracy: accuracy(counts)?,
            });
        }
        let pairs: Vec<(String, ConfusionCounts)> = per_author
            .iter()
            .map(|s| (s.author.clone(), s.counts))
            .collect();
        let (macro_f1, micro_f1, acc) = aggregate(&pairs)?;
        Ok(EvaluationReport {
            corpus: corpus.to_string(),
            learner: learner.to_string(),
            per_author,
            macro_f1,
            micro_f1,
            accuracy: acc,
            decisions,
        })
    }

    /// Write the decisions CSV: `author,doc_id,true,predicted,posterior,hyperparameter`.
    pub fn write_decisions_csv<W: Write>(&self, mut out: W) -> Result<(), MetricsError> {
        writeln!(out, "author,doc_id,true,predicted,posterior,hyperparameter")?;
        for d in &self.decisions {
            writeln!(
                out,
                "{},{},{},{},{:.6},{}",
                csv_field(&d.author),
                csv_field(&d.doc_id),
                if d.truth { "Yes" } else { "No" },
                if d.predicted { "Yes" } else { "No" },
                d.posterior,
                d.hyperparameter,
            )?;
        }
        Ok(())
    }

    /// Write the per-author summary CSV with the aggregate row last.
    ///
    /// Scores are printed to 3 decimal places; full precision stays internal.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<(), MetricsError> {
        writeln!(out, "author,tp,fp,fn,tn,f1,accuracy")?;
        for s in &self.per_author {
            writeln!(
                out,
                "{},{},{},{},{},{:.3},{:.3}",
                csv_field(&s.author),
                s.counts.tp,
                s.counts.fp,
                s.counts.fn_,
                s.counts.tn,
                s.f1,
                s.accuracy,
            )?;
        }
        writeln!(out, "(all),,,,,{:.3},{:.3}", self.macro_f1, self.accuracy)?;
        writeln!(out, "(micro-f1),,,,,{:.3},", self.micro_f1)?;
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "corpus={} learner={}", self.corpus, self.learner)?;
        for s in &self.per_author {
            writeln!(f, "  {:<28} F1={:.3} Acc={:.3}", s.author, s.f1, s.accuracy)?;
        }
        write!(
            f,
            "  macro-F1={:.3} micro-F1={:.3} Acc={:.3}",
            self.macro_f1, self.micro_f1, self.accuracy
        )
    }
}
