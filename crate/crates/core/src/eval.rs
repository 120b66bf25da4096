//! Scoring: per-class and pooled precision / recall / F1.
//!
//! The no-punctuation class is deliberately excluded from every metric — it
//! dominates the slots and would swamp the numbers. A predicted glyph in an
//! empty slot costs precision (false positive), a missed glyph costs recall
//! (false negative), and a wrong glyph costs both. "Overall" pools the raw
//! counts of the three punctuation classes (micro average), so per-class
//! recalls weighted by their support reproduce the overall recall exactly.

use serde::{Deserialize, Serialize};

use crate::lang::Lang;
use crate::slotmask::{LabeledSequence, PunctClass};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("reference and prediction set sizes differ: {refs} vs {preds}")]
    CountMismatch { refs: usize, preds: usize },
    #[error("sequence pair {pair}: lengths differ ({refs} vs {preds} slots)")]
    LengthMismatch {
        pair: usize,
        refs: usize,
        preds: usize,
    },
    #[error("sequence pair {pair}: word sequences differ at word {word}")]
    WordMismatch { pair: usize, word: usize },
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ClassCounts {
    /// Reference slots of this class (true positives plus misses).
    pub fn support(&self) -> u64 {
        self.true_pos + self.false_neg
    }

    /// True when the class occurred in neither references nor predictions.
    pub fn is_empty(&self) -> bool {
        self.true_pos == 0 && self.false_pos == 0 && self.false_neg == 0
    }
}

/// Slot-level confusion tallies for the three punctuation classes.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub comma: ClassCounts,
    pub period: ClassCounts,
    pub question: ClassCounts,
}

impl ConfusionCounts {
    fn class_mut(&mut self, class: PunctClass) -> &mut ClassCounts {
        match class {
            PunctClass::C => &mut self.comma,
            PunctClass::P => &mut self.period,
            PunctClass::Q => &mut self.question,
            PunctClass::O => unreachable!("O is never tallied"),
        }
    }

    /// Tallies one aligned slot.
    pub fn observe(&mut self, reference: PunctClass, predicted: PunctClass) {
        if reference == predicted {
            if reference != PunctClass::O {
                self.class_mut(reference).true_pos += 1;
            }
            return;
        }
        if predicted != PunctClass::O {
            self.class_mut(predicted).false_pos += 1;
        }
        if reference != PunctClass::O {
            self.class_mut(reference).false_neg += 1;
        }
    }

    /// Tallies a pair of aligned label sequences.
    pub fn observe_all(&mut self, reference: &[PunctClass], predicted: &[PunctClass]) {
        debug_assert_eq!(reference.len(), predicted.len());
        for (&r, &p) in reference.iter().zip(predicted) {
            self.observe(r, p);
        }
    }

    fn pooled(&self) -> ClassCounts {
        ClassCounts {
            true_pos: self.comma.true_pos + self.period.true_pos + self.question.true_pos,
            false_pos: self.comma.false_pos + self.period.false_pos + self.question.false_pos,
            false_neg: self.comma.false_neg + self.period.false_neg + self.question.false_neg,
        }
    }
}

/// Scores predictions against references. The two sets must align exactly:
/// same number of sequences, and pairwise identical word sequences.
pub fn score(
    references: &[LabeledSequence],
    predictions: &[LabeledSequence],
) -> Result<ConfusionCounts, EvalError> {
    if references.len() != predictions.len() {
        return Err(EvalError::CountMismatch {
            refs: references.len(),
            preds: predictions.len(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (pair, (r, p)) in references.iter().zip(predictions).enumerate() {
        if r.len() != p.len() {
            return Err(EvalError::LengthMismatch {
                pair,
                refs: r.len(),
                preds: p.len(),
            });
        }
        if let Some(word) = (0..r.len()).find(|&i| r.words[i] != p.words[i]) {
            return Err(EvalError::WordMismatch { pair, word });
        }
        counts.observe_all(&r.labels, &p.labels);
    }
    Ok(counts)
}

/// Precision, recall and F1 as fractions in [0, 1]. Undefined ratios
/// (zero denominators) are 0 by convention.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(c: ClassCounts) -> Prf {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(c.true_pos, c.true_pos + c.false_pos);
        let recall = ratio(c.true_pos, c.true_pos + c.false_neg);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }

    /// "PR/RC/F1" as percentages with one decimal.
    pub fn cell(&self) -> String {
        format!(
            "{:.1}/{:.1}/{:.1}",
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0
        )
    }
}

/// Support-weighted mean of per-class recalls. Because "Overall" is a micro
/// average, this is exactly the overall recall — a useful arithmetic
/// cross-check for published per-class numbers.
pub fn pooled_recall(parts: &[(f64, u64)]) -> f64 {
    let total: u64 = parts.iter().map(|&(_, support)| support).sum();
    if total == 0 {
        return 0.0;
    }
    parts
        .iter()
        .map(|&(recall, support)| recall * support as f64)
        .sum::<f64>()
        / total as f64
}

/// Full evaluation result for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub period: Prf,
    pub comma: Prf,
    pub question: Prf,
    pub overall: Prf,
    pub counts: ConfusionCounts,
}

impl EvalReport {
    pub fn from_counts(counts: ConfusionCounts) -> EvalReport {
        EvalReport {
            period: Prf::from_counts(counts.period),
            comma: Prf::from_counts(counts.comma),
            question: Prf::from_counts(counts.question),
            overall: Prf::from_counts(counts.pooled()),
            counts,
        }
    }
}

/// Signed percentage-point differences between two runs (first minus second).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaReport {
    pub period: Prf,
    pub comma: Prf,
    pub question: Prf,
    pub overall: Prf,
}

/// Compares two runs; every metric is `a - b` in percentage points.
pub fn compare_runs(a: &EvalReport, b: &EvalReport) -> DeltaReport {
    let diff = |x: Prf, y: Prf| Prf {
        precision: (x.precision - y.precision) * 100.0,
        recall: (x.recall - y.recall) * 100.0,
        f1: (x.f1 - y.f1) * 100.0,
    };
    DeltaReport {
        period: diff(a.period, b.period),
        comma: diff(a.comma, b.comma),
        question: diff(a.question, b.question),
        overall: diff(a.overall, b.overall),
    }
}

const COLUMNS: [&str; 4] = ["period", "comma", "question", "overall"];

/// Renders named reports as a table, one row per run, cells as PR/RC/F1
/// percentages. Classes with no reference slots and no predictions are
/// flagged with `*` and a footnote.
pub fn render_table(rows: &[(String, EvalReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<16}", "run"));
    for col in COLUMNS {
        out.push_str(&format!(" {col:>18}"));
    }
    out.push('\n');
    let mut footnote = false;
    for (name, report) in rows {
        out.push_str(&format!("{name:<16}"));
        let cells = [
            (report.period, report.counts.period.is_empty()),
            (report.comma, report.counts.comma.is_empty()),
            (report.question, report.counts.question.is_empty()),
            (report.overall, report.counts.pooled().is_empty()),
        ];
        for (prf, empty) in cells {
            let mut cell = prf.cell();
            if empty {
                cell.push('*');
                footnote = true;
            }
            out.push_str(&format!(" {cell:>18}"));
        }
        out.push('\n');
    }
    if footnote {
        out.push_str("* no slots of this class in references or predictions; 0.0 by convention\n");
    }
    out
}

/// Renders a delta report with explicit signs, e.g. `+17.2`.
pub fn render_delta(name: &str, delta: &DeltaReport) -> String {
    let cell = |p: Prf| format!("{:+.1}/{:+.1}/{:+.1}", p.precision, p.recall, p.f1);
    let mut out = String::new();
    out.push_str(&format!("{:<16}", "comparison"));
    for col in COLUMNS {
        out.push_str(&format!(" {col:>18}"));
    }
    out.push('\n');
    out.push_str(&format!("{name:<16}"));
    for p in [delta.period, delta.comma, delta.question, delta.overall] {
        out.push_str(&format!(" {:>18}", cell(p)));
    }
    out.push('\n');
    out
}

/// Published reference scores (percentages) shipped with the crate for the
/// `compare` command; versioned so reports can name what they were compared
/// against.
#[derive(Debug, Clone, Deserialize)]
pub struct BaselineTable {
    pub version: u32,
    pub systems: Vec<BaselineRow>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BaselineRow {
    pub system: String,
    pub lang: Lang,
    /// [precision, recall, f1] percentages per class.
    pub period: [f64; 3],
    pub comma: [f64; 3],
    pub question: [f64; 3],
    pub overall: [f64; 3],
}

pub fn builtin_baselines() -> BaselineTable {
    serde_json::from_str(include_str!("../data/baselines.json")).expect("bundled baselines parse")
}
