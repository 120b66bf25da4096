//! Slot-filling view of punctuated text.
//!
//! Every word boundary is a slot that carries one of four classes: no
//! punctuation, comma, period (full stop) or question mark. A punctuated
//! string and a `(words, labels)` pair are two renderings of the same thing,
//! and this module converts between them. It also renders the masked form
//! fed to the encoder (one mask token after every word) and reads/writes the
//! JSON-lines interchange format used by the dataset and evaluation tooling.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::lang::Lang;
use crate::segment::Segmenter;

/// Sentinel that stands in for a slot in rendered masked text.
pub const MASK: &str = "<mask>";

/// Punctuation class of a single slot.
///
/// The variant order is also the class-index order used by the model head
/// and the tie-break order for prediction (lower index wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PunctClass {
    /// No punctuation: a plain space (en/ms) or nothing at all (zh).
    O,
    /// Comma.
    C,
    /// Period / full stop.
    P,
    /// Question mark.
    Q,
}

impl PunctClass {
    pub const ALL: [PunctClass; 4] = [PunctClass::O, PunctClass::C, PunctClass::P, PunctClass::Q];

    pub fn index(self) -> usize {
        match self {
            PunctClass::O => 0,
            PunctClass::C => 1,
            PunctClass::P => 2,
            PunctClass::Q => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<PunctClass> {
        PunctClass::ALL.get(i).copied()
    }

    /// Glyph this class renders as in the given language. `None` for `O`.
    pub fn glyph(self, lang: Lang) -> Option<&'static str> {
        let fullwidth = matches!(lang, Lang::Zh);
        match self {
            PunctClass::O => None,
            PunctClass::C => Some(if fullwidth { "，" } else { "," }),
            PunctClass::P => Some(if fullwidth { "。" } else { "." }),
            PunctClass::Q => Some(if fullwidth { "？" } else { "?" }),
        }
    }

    /// Class of a punctuation character, accepting both half- and full-width
    /// forms regardless of language. `None` if the character is not one of
    /// the six class glyphs.
    pub fn from_char(c: char) -> Option<PunctClass> {
        match c {
            ',' | '，' => Some(PunctClass::C),
            '.' | '。' => Some(PunctClass::P),
            '?' | '？' => Some(PunctClass::Q),
            _ => None,
        }
    }

    /// True for a sentence-final class (period or question mark).
    pub fn is_terminal(self) -> bool {
        matches!(self, PunctClass::P | PunctClass::Q)
    }
}

/// True if `c` is one of the six glyphs the four classes can render as.
pub fn is_class_glyph(c: char) -> bool {
    PunctClass::from_char(c).is_some()
}

#[derive(Debug, thiserror::Error)]
pub enum SlotError {
    #[error("got {words} words but {labels} labels")]
    LengthMismatch { words: usize, labels: usize },
    #[error("empty word at position {index}")]
    EmptyWord { index: usize },
    #[error("word {word:?} contains whitespace or a punctuation glyph")]
    InvalidWord { word: String },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Segment(#[from] crate::segment::SegmentError),
}

/// A sequence of words with one punctuation label per word.
///
/// This is the interchange record: serialized as one JSON object per line,
/// `{"lang": "en", "words": [...], "labels": ["O", "C", ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub lang: Lang,
    pub words: Vec<String>,
    pub labels: Vec<PunctClass>,
}

impl LabeledSequence {
    /// Builds a sequence, checking the invariants: one label per word and no
    /// whitespace or class glyph inside any word.
    pub fn new(
        lang: Lang,
        words: Vec<String>,
        labels: Vec<PunctClass>,
    ) -> Result<LabeledSequence, SlotError> {
        if words.len() != labels.len() {
            return Err(SlotError::LengthMismatch {
                words: words.len(),
                labels: labels.len(),
            });
        }
        for (index, word) in words.iter().enumerate() {
            if word.is_empty() {
                return Err(SlotError::EmptyWord { index });
            }
            if word.chars().any(|c| c.is_whitespace() || is_class_glyph(c)) {
                return Err(SlotError::InvalidWord { word: word.clone() });
            }
        }
        Ok(LabeledSequence {
            lang,
            words,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Number of sentence terminals (period or question labels).
    pub fn sentence_terminals(&self) -> usize {
        self.labels.iter().filter(|l| l.is_terminal()).count()
    }

    /// Renders the punctuated string this sequence describes.
    pub fn render(&self) -> String {
        apply_labels(&self.words, &self.labels, self.lang)
            .expect("words/labels length checked at construction")
    }
}

/// Renders words and labels back into punctuated text: each word is followed
/// by its label's glyph (if any) and the language separator; no trailing
/// separator.
pub fn apply_labels(
    words: &[String],
    labels: &[PunctClass],
    lang: Lang,
) -> Result<String, SlotError> {
    if words.len() != labels.len() {
        return Err(SlotError::LengthMismatch {
            words: words.len(),
            labels: labels.len(),
        });
    }
    let sep = lang.separator();
    let mut out = String::new();
    for (i, (word, label)) in words.iter().zip(labels).enumerate() {
        out.push_str(word);
        if let Some(glyph) = label.glyph(lang) {
            out.push_str(glyph);
        }
        if i + 1 < words.len() {
            out.push_str(sep);
        }
    }
    Ok(out)
}

/// Result of reading labels out of punctuated text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub seq: LabeledSequence,
    /// Glyphs that appeared before any word (dropped) plus glyphs that
    /// followed an already-labeled slot (collapsed into the first one).
    pub dropped_glyphs: usize,
}

/// Reads the slot labels out of normalized punctuated text.
///
/// Label `i` is the class of the glyph following word `i`, `O` if there is
/// none. Consecutive glyphs collapse to the first; glyphs before the first
/// word are dropped. Both cases are tallied in `dropped_glyphs` so callers
/// can warn. Word boundaries come from the segmenter (whitespace for en/ms,
/// lexicon or subword units for zh).
pub fn extract_labels(text: &str, segmenter: &Segmenter<'_>) -> Result<Extraction, SlotError> {
    let lang = segmenter.lang();
    let mut words: Vec<String> = Vec::new();
    let mut labels: Vec<PunctClass> = Vec::new();
    let mut dropped = 0usize;

    // Split into maximal glyph-free runs, remembering the glyph after each.
    let mut run = String::new();
    let flush = |run: &mut String,
                 glyph: Option<PunctClass>,
                 words: &mut Vec<String>,
                 labels: &mut Vec<PunctClass>,
                 dropped: &mut usize|
     -> Result<(), SlotError> {
        let chunk = std::mem::take(run);
        let segmented = segmenter.words(&chunk)?;
        if segmented.is_empty() {
            // A glyph with no word in front of it: either leading punctuation
            // or a repeat after an already-punctuated slot.
            if glyph.is_some() {
                *dropped += 1;
            }
            return Ok(());
        }
        let n = segmented.len();
        for (i, w) in segmented.into_iter().enumerate() {
            words.push(w);
            let label = if i + 1 == n {
                glyph.unwrap_or(PunctClass::O)
            } else {
                PunctClass::O
            };
            labels.push(label);
        }
        Ok(())
    };

    for c in text.chars() {
        if let Some(class) = PunctClass::from_char(c) {
            flush(&mut run, Some(class), &mut words, &mut labels, &mut dropped)?;
        } else {
            run.push(c);
        }
    }
    flush(&mut run, None, &mut words, &mut labels, &mut dropped)?;

    let seq = LabeledSequence::new(lang, words, labels)?;
    Ok(Extraction {
        seq,
        dropped_glyphs: dropped,
    })
}

/// A rendered masked input: one mask sentinel after every word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSample {
    pub lang: Lang,
    pub text: String,
    pub slots: usize,
}

/// Renders the encoder input for a sequence: `w1 <mask> w2 <mask> … wn <mask>`.
/// The slot count always equals the word count.
pub fn build_masked_input(seq: &LabeledSequence) -> MaskedSample {
    let mut text = String::new();
    for (i, word) in seq.words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        text.push_str(word);
        text.push(' ');
        text.push_str(MASK);
    }
    MaskedSample {
        lang: seq.lang,
        text,
        slots: seq.words.len(),
    }
}

/// Writes sequences as JSON lines.
pub fn write_jsonl<W: Write>(seqs: &[LabeledSequence], mut w: W) -> Result<(), SlotError> {
    for seq in seqs {
        serde_json::to_writer(&mut w, seq).map_err(|e| SlotError::Parse { line: 0, source: e })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads sequences from JSON lines, validating the per-record invariants.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<LabeledSequence>, SlotError> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: LabeledSequence = serde_json::from_str(&line).map_err(|e| SlotError::Parse {
            line: idx + 1,
            source: e,
        })?;
        out.push(LabeledSequence::new(raw.lang, raw.words, raw.labels)?);
    }
    Ok(out)
}
