//! Punctuating text of arbitrary length.
//!
//! The classifier sees at most a fixed number of slots per pass, so longer
//! word sequences are cut into overlapping windows. Each slot is then taken
//! from the window whose span centers it best: the ownership boundary between
//! two consecutive windows is the midpoint of their overlap, which partitions
//! the slots exactly and keeps every prediction away from window edges, where
//! one-sided context makes it weakest.
//!
//! Input text is reduced to its spoken form first — any punctuation already
//! present is stripped (and counted, so callers can warn about it) before
//! segmentation and prediction.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::lang::Lang;
use crate::model::{ModelError, PunctModel};
use crate::segment::{SegmentError, Segmenter};
use crate::slotmask::{apply_labels, is_class_glyph, PunctClass, SlotError};
use crate::textnorm::{lowercase_if_latin, map_punctuation};

#[derive(Debug, thiserror::Error)]
pub enum InferError {
    #[error("window/overlap of {window}/{overlap} slots is invalid: the window must hold at least one slot beyond the overlap")]
    BadPolicy { window: usize, overlap: usize },
    #[error("window of {window} slots exceeds the predictor limit of {limit}")]
    WindowTooLarge { window: usize, limit: usize },
    #[error("predictor returned {got} labels for a {want}-slot window")]
    LabelCount { want: usize, got: usize },
    #[error("{path}: not valid UTF-8 at byte {position}")]
    InvalidUtf8 { path: PathBuf, position: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Slot(#[from] SlotError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that labels the slots of one window of words.
pub trait SlotPredictor {
    /// One class per word-boundary slot; must return exactly `words.len()`
    /// labels.
    fn predict(&self, lang: Lang, words: &[String]) -> Result<Vec<PunctClass>, InferError>;
    /// Largest window, in slots, a single call may receive.
    fn max_slots(&self) -> usize;
}

impl SlotPredictor for PunctModel {
    fn predict(&self, _lang: Lang, words: &[String]) -> Result<Vec<PunctClass>, InferError> {
        Ok(PunctModel::predict(self, words)?)
    }

    fn max_slots(&self) -> usize {
        // BOS/EOS take two tokens; each slot costs a word plus its mask.
        self.encoder.max_tokens().saturating_sub(2) / 2
    }
}

/// How long inputs are windowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowPolicy {
    pub window_slots: usize,
    pub overlap_slots: usize,
}

/// Default overlap between consecutive windows, in slots (32 slots, i.e. 64
/// encoder tokens at two tokens per slot).
pub const DEFAULT_OVERLAP_SLOTS: usize = 32;

impl WindowPolicy {
    pub fn new(window_slots: usize, overlap_slots: usize) -> Result<WindowPolicy, InferError> {
        if window_slots == 0 || overlap_slots >= window_slots {
            return Err(InferError::BadPolicy {
                window: window_slots,
                overlap: overlap_slots,
            });
        }
        Ok(WindowPolicy {
            window_slots,
            overlap_slots,
        })
    }

    /// Full-width windows for a predictor, with the default overlap (scaled
    /// down for very small predictors).
    pub fn for_predictor(predictor: &dyn SlotPredictor) -> WindowPolicy {
        let window = predictor.max_slots().max(1);
        WindowPolicy {
            window_slots: window,
            overlap_slots: DEFAULT_OVERLAP_SLOTS.min(window / 2),
        }
    }

    fn stride(&self) -> usize {
        self.window_slots - self.overlap_slots
    }

    /// Window spans `[start, end)` covering `n` slots. The last window is
    /// pushed flush against the end so it keeps full width (and therefore
    /// full left context) even when that deepens its overlap.
    pub fn spans(&self, n: usize) -> Vec<(usize, usize)> {
        if n == 0 {
            return Vec::new();
        }
        if n <= self.window_slots {
            return vec![(0, n)];
        }
        let mut spans = Vec::new();
        let mut start = 0;
        loop {
            if start + self.window_slots >= n {
                spans.push((n - self.window_slots, n));
                return spans;
            }
            spans.push((start, start + self.window_slots));
            start += self.stride();
        }
    }

    /// The slot range each window owns: consecutive windows split their
    /// overlap at its midpoint. The ranges partition `0..n`.
    pub fn owned_ranges(&self, n: usize) -> Vec<(usize, usize)> {
        let spans = self.spans(n);
        let mut ranges = Vec::with_capacity(spans.len());
        for (i, &(start, end)) in spans.iter().enumerate() {
            let own_from = if i == 0 {
                0
            } else {
                (start + spans[i - 1].1) / 2
            };
            let own_to = if i + 1 == spans.len() {
                n
            } else {
                (spans[i + 1].0 + end) / 2
            };
            ranges.push((own_from, own_to));
        }
        ranges
    }
}

/// Labels every slot of `words`, windowing as needed and stitching window
/// outputs by central ownership.
pub fn predict_windowed(
    predictor: &dyn SlotPredictor,
    lang: Lang,
    words: &[String],
    policy: &WindowPolicy,
) -> Result<Vec<PunctClass>, InferError> {
    if policy.window_slots > predictor.max_slots() {
        return Err(InferError::WindowTooLarge {
            window: policy.window_slots,
            limit: predictor.max_slots(),
        });
    }
    let n = words.len();
    let spans = policy.spans(n);
    let ranges = policy.owned_ranges(n);
    let mut labels = vec![PunctClass::O; n];
    for (&(start, end), &(own_from, own_to)) in spans.iter().zip(&ranges) {
        let predicted = predictor.predict(lang, &words[start..end])?;
        if predicted.len() != end - start {
            return Err(InferError::LabelCount {
                want: end - start,
                got: predicted.len(),
            });
        }
        labels[own_from..own_to].copy_from_slice(&predicted[own_from - start..own_to - start]);
    }
    Ok(labels)
}

/// One punctuated string plus what happened along the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Punctuated {
    pub text: String,
    pub slots: usize,
    /// Punctuation glyphs that were already present in the input and were
    /// stripped before prediction — nonzero means the input was not bare
    /// transcript text and callers should warn.
    pub stripped_glyphs: usize,
    /// Predicted commas, periods and question marks.
    pub commas: usize,
    pub periods: usize,
    pub questions: usize,
}

/// Punctuates one string: strips any existing punctuation, lowercases Latin
/// scripts, segments, predicts with windowing and renders the glyphs back in.
pub fn punctuate(
    text: &str,
    segmenter: &Segmenter<'_>,
    predictor: &dyn SlotPredictor,
    policy: &WindowPolicy,
) -> Result<Punctuated, InferError> {
    let lang = segmenter.lang();
    let mapped = map_punctuation(text, lang);
    let stripped_glyphs = mapped.chars().filter(|&c| is_class_glyph(c)).count();
    let mut bare = String::with_capacity(mapped.len());
    for c in mapped.chars() {
        if is_class_glyph(c) {
            bare.push_str(lang.separator());
        } else {
            bare.push(c);
        }
    }
    let bare = lowercase_if_latin(&bare, lang);
    let bare = bare.split_whitespace().collect::<Vec<_>>().join(" ");

    let words = segmenter.words(&bare)?;
    let labels = predict_windowed(predictor, lang, &words, policy)?;
    let counts = |class: PunctClass| labels.iter().filter(|&&l| l == class).count();
    Ok(Punctuated {
        text: apply_labels(&words, &labels, lang)?,
        slots: words.len(),
        stripped_glyphs,
        commas: counts(PunctClass::C),
        periods: counts(PunctClass::P),
        questions: counts(PunctClass::Q),
    })
}

/// Run summary for a whole file.
#[derive(Debug, Clone, Serialize)]
pub struct FileSummary {
    pub lines: usize,
    pub slots: usize,
    pub stripped_glyphs: usize,
    pub commas: usize,
    pub periods: usize,
    pub questions: usize,
    pub elapsed_secs: f64,
    pub slots_per_sec: f64,
}

/// Punctuates `input` line by line into `output` and returns the summary.
/// Empty lines pass through unchanged.
pub fn punctuate_file(
    input: &Path,
    output: &Path,
    segmenter: &Segmenter<'_>,
    predictor: &dyn SlotPredictor,
    policy: &WindowPolicy,
) -> Result<FileSummary, InferError> {
    let bytes = std::fs::read(input)?;
    let text = String::from_utf8(bytes).map_err(|e| InferError::InvalidUtf8 {
        path: input.to_path_buf(),
        position: e.utf8_error().valid_up_to(),
    })?;

    let started = Instant::now();
    let mut writer = std::io::BufWriter::new(std::fs::File::create(output)?);
    let mut summary = FileSummary {
        lines: 0,
        slots: 0,
        stripped_glyphs: 0,
        commas: 0,
        periods: 0,
        questions: 0,
        elapsed_secs: 0.0,
        slots_per_sec: 0.0,
    };
    for line in text.lines() {
        summary.lines += 1;
        if line.trim().is_empty() {
            writeln!(writer)?;
            continue;
        }
        let result = punctuate(line, segmenter, predictor, policy)?;
        writeln!(writer, "{}", result.text)?;
        summary.slots += result.slots;
        summary.stripped_glyphs += result.stripped_glyphs;
        summary.commas += result.commas;
        summary.periods += result.periods;
        summary.questions += result.questions;
    }
    writer.flush()?;
    summary.elapsed_secs = started.elapsed().as_secs_f64();
    summary.slots_per_sec = if summary.elapsed_secs > 0.0 {
        summary.slots as f64 / summary.elapsed_secs
    } else {
        0.0
    };
    Ok(summary)
}
