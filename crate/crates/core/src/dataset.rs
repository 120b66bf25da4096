//! Corpus plumbing.
//!
//! Articles come in as plain text, get normalized and converted to labeled
//! sequences (one per article), and from there the usual dataset operations
//! apply: filtering out too-short articles, article-level train/valid/test
//! splits, question oversampling for the training split, shuffle-merging the
//! per-language sets, and cutting sequences into encoder-sized windows.
//! Everything random is seeded; runs are bit-reproducible.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::lang::Lang;
use crate::seed::rng_for;
use crate::segment::{Segmenter, SubwordSplitter};
use crate::slotmask::{extract_labels, LabeledSequence, PunctClass, SlotError};
use crate::textnorm::{normalize, NormError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Valid,
    Test,
}

impl std::fmt::Display for SplitRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitRole::Train => "train",
            SplitRole::Valid => "valid",
            SplitRole::Test => "test",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("split ratios must be non-negative and sum to 1 (got {0}, {1}, {2})")]
    BadRatios(f64, f64, f64),
    #[error("oversampling multiplier must be >= 1 (got {0})")]
    MultiplierTooSmall(f64),
    #[error("corpus has no question-ending sentences to oversample from")]
    EmptyQuestionPool,
    #[error("question oversampling is train-only; refusing to touch the {0} split")]
    OversampleGuard(SplitRole),
    #[error("window size must be at least one slot")]
    BadWindow,
    #[error("word {word:?} alone needs {need} tokens but the window budget is {budget}")]
    OversizeToken {
        word: String,
        need: usize,
        budget: usize,
    },
    #[error("article {id:?} is empty")]
    EmptyArticle { id: String },
    #[error("{path}: invalid UTF-8 at byte {position}")]
    InvalidUtf8 { path: PathBuf, position: usize },
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Slot(#[from] SlotError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One raw input document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: String,
    pub lang: Lang,
    pub text: String,
}

impl Article {
    pub fn new(
        id: impl Into<String>,
        lang: Lang,
        text: impl Into<String>,
    ) -> Result<Article, DatasetError> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(DatasetError::EmptyArticle { id });
        }
        Ok(Article { id, lang, text })
    }
}

fn read_utf8(path: &Path) -> Result<String, DatasetError> {
    let bytes = std::fs::read(path)?;
    String::from_utf8(bytes).map_err(|e| DatasetError::InvalidUtf8 {
        path: path.to_path_buf(),
        position: e.utf8_error().valid_up_to(),
    })
}

/// Reads articles from a directory (one file per article, sorted by name) or
/// from a single file (articles separated by blank lines).
pub fn read_articles(path: &Path, lang: Lang) -> Result<Vec<Article>, DatasetError> {
    let mut articles = Vec::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            let id = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.display().to_string());
            articles.push(Article::new(id, lang, read_utf8(&file)?)?);
        }
    } else {
        let text = read_utf8(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".to_string());
        for (idx, block) in text.split("\n\n").map(str::trim).enumerate() {
            if block.is_empty() {
                continue;
            }
            articles.push(Article::new(format!("{stem}#{idx}"), lang, block)?);
        }
    }
    Ok(articles)
}

/// Normalizes each article and extracts its label sequence. Returns one
/// sequence per article plus the total count of dropped stray glyphs.
pub fn prepare_articles(
    articles: &[Article],
    segmenter: &Segmenter<'_>,
) -> Result<(Vec<LabeledSequence>, usize), DatasetError> {
    let mut seqs = Vec::with_capacity(articles.len());
    let mut dropped = 0;
    for article in articles {
        debug_assert_eq!(article.lang, segmenter.lang());
        let normalized = normalize(&article.text, article.lang)?;
        let extraction = extract_labels(&normalized, segmenter)?;
        dropped += extraction.dropped_glyphs;
        seqs.push(extraction.seq);
    }
    Ok((seqs, dropped))
}

/// Keeps articles with more than two sentences (periods + question marks).
pub fn filter_articles(seqs: Vec<LabeledSequence>) -> Vec<LabeledSequence> {
    seqs.into_iter()
        .filter(|s| s.sentence_terminals() > 2)
        .collect()
}

/// Re-expresses word-segmented sequences with subword units: every word is
/// split, interior boundaries get the empty class, and the word's label moves
/// to its last piece. This is the data view for the segmentation ablation —
/// same text, more slots, word boundaries no longer explicit.
pub fn subword_view(
    seqs: &[LabeledSequence],
    splitter: &dyn SubwordSplitter,
) -> Result<Vec<LabeledSequence>, DatasetError> {
    let mut out = Vec::with_capacity(seqs.len());
    for seq in seqs {
        let mut words = Vec::with_capacity(seq.words.len());
        let mut labels = Vec::with_capacity(seq.labels.len());
        for (word, &label) in seq.words.iter().zip(&seq.labels) {
            let pieces = splitter.split(word);
            debug_assert!(!pieces.is_empty(), "splitter dropped {word:?}");
            let last = pieces.len() - 1;
            for (i, piece) in pieces.into_iter().enumerate() {
                words.push(piece);
                labels.push(if i == last { label } else { PunctClass::O });
            }
        }
        out.push(LabeledSequence::new(seq.lang, words, labels)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<SplitRatios, DatasetError> {
        let ok = train >= 0.0
            && valid >= 0.0
            && test >= 0.0
            && (train + valid + test - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(DatasetError::BadRatios(train, valid, test));
        }
        Ok(SplitRatios { train, valid, test })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSets<T> {
    pub train: Vec<T>,
    pub valid: Vec<T>,
    pub test: Vec<T>,
}

/// Shuffles (seeded) and splits whole items — an item is typically one
/// article, so articles never straddle splits. Valid and test sizes round
/// down; the remainder goes to train.
pub fn split_articles<T>(mut items: Vec<T>, ratios: &SplitRatios, seed: u64) -> SplitSets<T> {
    let mut rng = rng_for(seed, "split");
    items.shuffle(&mut rng);
    let n = items.len();
    let n_valid = (ratios.valid * n as f64).floor() as usize;
    let n_test = (ratios.test * n as f64).floor() as usize;
    let test = items.split_off(n - n_test);
    let valid = items.split_off(n - n_test - n_valid);
    SplitSets {
        train: items,
        valid,
        test,
    }
}

/// Merges per-language datasets into one seeded shuffle.
pub fn shuffle_merge<T>(datasets: Vec<Vec<T>>, seed: u64) -> Vec<T> {
    let mut merged: Vec<T> = datasets.into_iter().flatten().collect();
    let mut rng = rng_for(seed, "shuffle-merge");
    merged.shuffle(&mut rng);
    merged
}

fn sentence_spans(labels: &[PunctClass]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, label) in labels.iter().enumerate() {
        if label.is_terminal() {
            spans.push((start, i + 1));
            start = i + 1;
        }
    }
    spans
}

/// Oversamples question-ending sentences in the training split: draws from
/// the pool of Q-ending sentences (with replacement) and splices copies in at
/// uniformly random sentence boundaries until the question count reaches
/// `multiplier` times the original. Train-only by contract.
pub fn oversample_questions(
    mut seqs: Vec<LabeledSequence>,
    multiplier: f64,
    seed: u64,
    role: SplitRole,
) -> Result<Vec<LabeledSequence>, DatasetError> {
    if role != SplitRole::Train {
        return Err(DatasetError::OversampleGuard(role));
    }
    if multiplier < 1.0 {
        return Err(DatasetError::MultiplierTooSmall(multiplier));
    }

    let mut pool: Vec<(Vec<String>, Vec<PunctClass>)> = Vec::new();
    let mut questions = 0u64;
    for seq in &seqs {
        for &(start, end) in &sentence_spans(&seq.labels) {
            if seq.labels[end - 1] == PunctClass::Q {
                questions += 1;
                pool.push((
                    seq.words[start..end].to_vec(),
                    seq.labels[start..end].to_vec(),
                ));
            }
        }
    }
    if pool.is_empty() {
        if multiplier > 1.0 {
            return Err(DatasetError::EmptyQuestionPool);
        }
        return Ok(seqs);
    }

    let target = multiplier * questions as f64;
    let mut rng = rng_for(seed, "oversample");
    while (questions as f64) < target {
        let (words, labels) = pool[rng.gen_range(0..pool.len())].clone();
        // All sentence boundaries across the split: article starts, the point
        // after every terminal, and article ends.
        let mut boundaries: Vec<(usize, usize)> = Vec::new();
        for (ai, seq) in seqs.iter().enumerate() {
            let mut cuts = vec![0];
            cuts.extend(sentence_spans(&seq.labels).iter().map(|&(_, end)| end));
            if *cuts.last().expect("starts with 0") != seq.len() {
                cuts.push(seq.len());
            }
            boundaries.extend(cuts.into_iter().map(|c| (ai, c)));
        }
        let (ai, at) = boundaries[rng.gen_range(0..boundaries.len())];
        let seq = &mut seqs[ai];
        seq.words.splice(at..at, words);
        seq.labels.splice(at..at, labels);
        questions += 1;
    }
    Ok(seqs)
}

/// Cuts each sequence into consecutive windows of at most `max_slots` words.
pub fn window_samples(
    seqs: &[LabeledSequence],
    max_slots: usize,
) -> Result<Vec<LabeledSequence>, DatasetError> {
    if max_slots == 0 {
        return Err(DatasetError::BadWindow);
    }
    let mut out = Vec::new();
    for seq in seqs {
        for (words, labels) in seq
            .words
            .chunks(max_slots)
            .zip(seq.labels.chunks(max_slots))
        {
            out.push(LabeledSequence {
                lang: seq.lang,
                words: words.to_vec(),
                labels: labels.to_vec(),
            });
        }
    }
    Ok(out)
}

/// Like [`window_samples`], but measures words with the encoder tokenizer so
/// each window's encoded length (subword pieces + one mask per word + two
/// specials) fits in `token_budget`. A single word that cannot fit on its own
/// is an error rather than a silently truncated sample.
pub fn window_samples_measured(
    seqs: &[LabeledSequence],
    token_budget: usize,
    piece_count: &dyn Fn(&str) -> usize,
) -> Result<Vec<LabeledSequence>, DatasetError> {
    const SPECIALS: usize = 2;
    let mut out = Vec::new();
    for seq in seqs {
        let mut words: Vec<String> = Vec::new();
        let mut labels: Vec<PunctClass> = Vec::new();
        let mut used = SPECIALS;
        for (word, &label) in seq.words.iter().zip(&seq.labels) {
            let need = piece_count(word) + 1; // pieces plus the mask slot
            if SPECIALS + need > token_budget {
                return Err(DatasetError::OversizeToken {
                    word: word.clone(),
                    need: SPECIALS + need,
                    budget: token_budget,
                });
            }
            if used + need > token_budget {
                out.push(LabeledSequence {
                    lang: seq.lang,
                    words: std::mem::take(&mut words),
                    labels: std::mem::take(&mut labels),
                });
                used = SPECIALS;
            }
            words.push(word.clone());
            labels.push(label);
            used += need;
        }
        if !words.is_empty() {
            out.push(LabeledSequence {
                lang: seq.lang,
                words,
                labels,
            });
        }
    }
    Ok(out)
}

/// Label and word counts for one set of sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    pub sequences: usize,
    pub words: u64,
    pub periods: u64,
    pub questions: u64,
    pub commas: u64,
}

pub fn corpus_stats(seqs: &[LabeledSequence]) -> CorpusStats {
    let mut stats = CorpusStats {
        sequences: seqs.len(),
        ..CorpusStats::default()
    };
    for seq in seqs {
        stats.words += seq.words.len() as u64;
        for label in &seq.labels {
            match label {
                PunctClass::P => stats.periods += 1,
                PunctClass::Q => stats.questions += 1,
                PunctClass::C => stats.commas += 1,
                PunctClass::O => {}
            }
        }
    }
    stats
}

/// Renders rows of per-split stats as a plain text table.
pub fn render_stats_table(rows: &[(String, CorpusStats)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
        "split", "articles", "words", "period", "question", "comma"
    ));
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<18} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
            name, s.sequences, s.words, s.periods, s.questions, s.commas
        ));
    }
    out
}
