//! Word segmentation.
//!
//! Latin-script text (en/ms) splits on whitespace. Mandarin has no spaces, so
//! word mode runs a dictionary DP: every substring that is a lexicon entry is
//! an edge, each path is scored by the sum of log unigram probabilities, and
//! the best-scoring path wins. Characters outside the lexicon become
//! single-character words with a floor frequency of 1.
//!
//! Subword mode skips the dictionary entirely and defers boundary choice to
//! the encoder tokenizer attached at the pipeline level.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lang::Lang;

#[derive(Debug, thiserror::Error)]
pub enum SegmentError {
    #[error("word-mode segmentation of unspaced text needs a lexicon")]
    MissingLexicon,
    #[error("subword mode needs an encoder tokenizer attached to the pipeline")]
    MissingSplitter,
    #[error("lexicon entry {word:?}: {reason}")]
    InvalidEntry { word: String, reason: &'static str },
    #[error("lexicon line {line}: {reason}")]
    ParseLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Unigram lexicon: word -> frequency, plus the total mass used to turn
/// frequencies into probabilities.
///
/// Two invariants are maintained at construction: every character of every
/// entry is itself an entry (missing ones are added with frequency 1, so any
/// substring can always be covered by single-character edges), and `total`
/// is the sum of all frequencies including those floors.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, u64>,
    total: u64,
    max_chars: usize,
}

impl Lexicon {
    pub fn from_entries<I, S>(entries: I) -> Result<Lexicon, SegmentError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut map: HashMap<String, u64> = HashMap::new();
        for (word, freq) in entries {
            let word = word.into();
            if word.is_empty() {
                return Err(SegmentError::InvalidEntry {
                    word,
                    reason: "empty word",
                });
            }
            if word.chars().any(char::is_whitespace) {
                return Err(SegmentError::InvalidEntry {
                    word,
                    reason: "contains whitespace",
                });
            }
            if freq == 0 {
                return Err(SegmentError::InvalidEntry {
                    word,
                    reason: "frequency must be positive",
                });
            }
            if map.insert(word.clone(), freq).is_some() {
                return Err(SegmentError::InvalidEntry {
                    word,
                    reason: "duplicate entry",
                });
            }
        }
        // Close over characters: every char of every entry is itself an entry.
        let chars: Vec<String> = map
            .keys()
            .flat_map(|w| w.chars())
            .map(String::from)
            .collect();
        for c in chars {
            map.entry(c).or_insert(1);
        }
        let total = map.values().sum();
        let max_chars = map.keys().map(|w| w.chars().count()).max().unwrap_or(1);
        Ok(Lexicon {
            entries: map,
            total,
            max_chars,
        })
    }

    /// Parses the plain-text format: one `word<TAB>frequency` per line,
    /// `#` starts a comment line, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Lexicon, SegmentError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, freq) = line
                .split_once('\t')
                .ok_or_else(|| SegmentError::ParseLine {
                    line: idx + 1,
                    reason: "expected word<TAB>frequency".to_string(),
                })?;
            let freq: u64 = freq.trim().parse().map_err(|e| SegmentError::ParseLine {
                line: idx + 1,
                reason: format!("bad frequency {freq:?}: {e}"),
            })?;
            entries.push((word.to_string(), freq));
        }
        Lexicon::from_entries(entries)
    }

    pub fn from_path(path: &Path) -> Result<Lexicon, SegmentError> {
        Lexicon::parse(&std::fs::read_to_string(path)?)
    }

    /// Small Mandarin starter lexicon bundled with the crate — enough for
    /// demos and tests; swap in a full dictionary via `from_path` for real
    /// corpora.
    pub fn builtin_zh() -> Lexicon {
        Lexicon::parse(include_str!("../data/lexicon_zh.tsv")).expect("bundled lexicon parses")
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.entries.get(word).copied()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_word_chars(&self) -> usize {
        self.max_chars
    }

    /// Log probability of one segmentation edge. Out-of-lexicon words get the
    /// floor frequency 1 (only reachable for single characters).
    fn edge_score(&self, word: &str) -> f64 {
        let freq = self.get(word).unwrap_or(1);
        (freq as f64).ln() - (self.total as f64).ln()
    }
}

/// Splits on Unicode whitespace; runs of whitespace count as one boundary.
pub fn segment_whitespace(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

/// Segments unspaced text by maximizing the sum of log unigram probabilities
/// over dictionary words, with out-of-lexicon characters as floor-frequency
/// singletons.
///
/// Score ties are broken toward the longer final word, applied recursively
/// right to left: the DP keeps the smallest-start predecessor on equal
/// scores, and the path is recovered from the right.
pub fn segment_cjk(text: &str, lexicon: &Lexicon) -> Vec<String> {
    let offsets: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let n = offsets.len() - 1;
    if n == 0 {
        return Vec::new();
    }

    // best[j] = (score of best segmentation of chars[..j], start of its last word)
    let window = lexicon.max_word_chars().max(1);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(n + 1);
    best.push((0.0, 0));
    for j in 1..=n {
        let mut top: Option<(f64, usize)> = None;
        for i in j.saturating_sub(window)..j {
            let word = &text[offsets[i]..offsets[j]];
            // Multi-character edges must be lexicon entries; single
            // characters always have the floor.
            if j - i > 1 && lexicon.get(word).is_none() {
                continue;
            }
            let score = best[i].0 + lexicon.edge_score(word);
            // Strictly-greater keeps the smallest i on ties, i.e. the longer
            // final word for this prefix.
            if top.map_or(true, |(s, _)| score > s) {
                top = Some((score, i));
            }
        }
        best.push(top.expect("single-character edge always exists"));
    }

    let mut bounds = vec![n];
    let mut j = n;
    while j > 0 {
        j = best[j].1;
        bounds.push(j);
    }
    bounds.reverse();
    bounds
        .windows(2)
        .map(|w| text[offsets[w[0]]..offsets[w[1]]].to_string())
        .collect()
}

/// How word boundaries (and therefore slots) are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentationMode {
    /// Slot after every word (whitespace or dictionary segmentation).
    Word,
    /// Slot after every encoder tokenizer unit.
    Subword,
}

impl fmt::Display for SegmentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentationMode::Word => "word",
            SegmentationMode::Subword => "subword",
        })
    }
}

impl FromStr for SegmentationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "word" => Ok(SegmentationMode::Word),
            "subword" => Ok(SegmentationMode::Subword),
            other => Err(format!(
                "unknown segmentation mode {other:?} (expected word or subword)"
            )),
        }
    }
}

/// Output of [`segment`]: either concrete words, or text whose unit
/// boundaries are deferred to the encoder tokenizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segmented {
    Words(Vec<String>),
    Deferred(String),
}

impl Segmented {
    pub fn resolve(self, splitter: &dyn SubwordSplitter) -> Vec<String> {
        match self {
            Segmented::Words(words) => words,
            Segmented::Deferred(text) => splitter.split(&text),
        }
    }
}

/// Splits raw text per the segmentation mode. Word mode yields words right
/// away; subword mode defers to whichever tokenizer the pipeline attaches.
pub fn segment(
    text: &str,
    lang: Lang,
    mode: SegmentationMode,
    lexicon: Option<&Lexicon>,
) -> Result<Segmented, SegmentError> {
    match mode {
        SegmentationMode::Subword => Ok(Segmented::Deferred(text.to_string())),
        SegmentationMode::Word => {
            if lang.is_spaced() {
                return Ok(Segmented::Words(segment_whitespace(text)));
            }
            let lexicon = lexicon.ok_or(SegmentError::MissingLexicon)?;
            let mut words = Vec::new();
            // Unspaced text may still contain spaces around embedded Latin;
            // whitespace is always a boundary.
            for chunk in text.split_whitespace() {
                words.extend(segment_cjk(chunk, lexicon));
            }
            Ok(Segmented::Words(words))
        }
    }
}

/// Splits text into slot units at subword granularity. Implemented by the
/// encoder tokenizer; units must be non-empty with no whitespace inside.
pub trait SubwordSplitter {
    fn split(&self, text: &str) -> Vec<String>;
}

/// Character-granularity splitter: CJK characters become their own units,
/// anything else groups into whitespace-delimited chunks. This mirrors what
/// a subword vocabulary does to Chinese text, where pieces are mostly single
/// characters.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharSplitter;

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2A6DF)
}

impl SubwordSplitter for CharSplitter {
    fn split(&self, text: &str) -> Vec<String> {
        let mut units = Vec::new();
        for chunk in text.split_whitespace() {
            let mut run = String::new();
            for c in chunk.chars() {
                if is_cjk(c) {
                    if !run.is_empty() {
                        units.push(std::mem::take(&mut run));
                    }
                    units.push(c.to_string());
                } else {
                    run.push(c);
                }
            }
            if !run.is_empty() {
                units.push(run);
            }
        }
        units
    }
}

/// Bundles language, mode, lexicon and (optionally) a subword tokenizer so
/// the rest of the pipeline can turn glyph-free text into slot units without
/// re-threading the choices everywhere.
#[derive(Clone, Copy)]
pub struct Segmenter<'a> {
    lang: Lang,
    mode: SegmentationMode,
    lexicon: Option<&'a Lexicon>,
    splitter: Option<&'a dyn SubwordSplitter>,
}

impl<'a> Segmenter<'a> {
    pub fn new(lang: Lang, mode: SegmentationMode, lexicon: Option<&'a Lexicon>) -> Segmenter<'a> {
        Segmenter {
            lang,
            mode,
            lexicon,
            splitter: None,
        }
    }

    pub fn with_splitter(mut self, splitter: &'a dyn SubwordSplitter) -> Segmenter<'a> {
        self.splitter = Some(splitter);
        self
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }

    pub fn mode(&self) -> SegmentationMode {
        self.mode
    }

    pub fn words(&self, text: &str) -> Result<Vec<String>, SegmentError> {
        match segment(text, self.lang, self.mode, self.lexicon)? {
            Segmented::Words(words) => Ok(words),
            Segmented::Deferred(text) => {
                let splitter = self.splitter.ok_or(SegmentError::MissingSplitter)?;
                Ok(splitter.split(&text))
            }
        }
    }
}

impl fmt::Debug for Segmenter<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Segmenter")
            .field("lang", &self.lang)
            .field("mode", &self.mode)
            .field("lexicon", &self.lexicon.map(|l| l.len()))
            .field("splitter", &self.splitter.is_some())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_lexicon() -> Lexicon {
        Lexicon::from_entries([("ab", 5u64), ("a", 2), ("b", 2), ("c", 1)]).unwrap()
    }

    #[test]
    fn lexicon_totals_and_floors() {
        let lex = toy_lexicon();
        // All characters were already entries; total is the plain sum.
        assert_eq!(lex.total(), 10);

        let lex = Lexicon::from_entries([("你好", 50u64), ("吗", 20)]).unwrap();
        // 你 and 好 get added with floor frequency 1.
        assert_eq!(lex.get("你"), Some(1));
        assert_eq!(lex.get("好"), Some(1));
        assert_eq!(lex.total(), 72);
        assert_eq!(lex.max_word_chars(), 2);
    }

    #[test]
    fn lexicon_rejects_bad_entries() {
        assert!(Lexicon::from_entries([("", 1u64)]).is_err());
        assert!(Lexicon::from_entries([("a", 0u64)]).is_err());
        assert!(Lexicon::from_entries([("a", 1u64), ("a", 2)]).is_err());
        assert!(Lexicon::from_entries([("a b", 1u64)]).is_err());
    }

    #[test]
    fn lexicon_parse_format() {
        let lex = Lexicon::parse("# comment\n你好\t50\n\n吗\t20\n").unwrap();
        assert_eq!(lex.get("你好"), Some(50));
        assert_eq!(lex.total(), 72);

        assert!(Lexicon::parse("你好 50").is_err());
        assert!(Lexicon::parse("你好\tfifty").is_err());
    }

    #[test]
    fn whitespace_segmentation() {
        assert_eq!(segment_whitespace("hello  world"), vec!["hello", "world"]);
        assert_eq!(segment_whitespace("  "), Vec::<String>::new());
        assert_eq!(segment_whitespace(""), Vec::<String>::new());
    }

    #[test]
    fn dictionary_dp_prefers_high_probability_path() {
        let lex = toy_lexicon();
        assert_eq!(segment_cjk("abc", &lex), vec!["ab", "c"]);
    }

    #[test]
    fn dictionary_dp_oov_chars_become_singletons() {
        let lex = toy_lexicon();
        assert_eq!(segment_cjk("xyz", &lex), vec!["x", "y", "z"]);
        assert_eq!(segment_cjk("", &lex), Vec::<String>::new());
    }

    #[test]
    fn dictionary_dp_tie_prefers_longer_final_word() {
        // [a|ba] and [ab|a] score identically; the tie goes to the longer
        // final word.
        let lex = Lexicon::from_entries([("a", 1u64), ("b", 1), ("ab", 5), ("ba", 5)]).unwrap();
        assert_eq!(segment_cjk("aba", &lex), vec!["a", "ba"]);
    }

    #[test]
    fn dictionary_dp_is_lossless() {
        let lex = toy_lexicon();
        for text in ["abcabc", "aaa", "cab", "xbax"] {
            let words = segment_cjk(text, &lex);
            assert_eq!(words.concat(), text);
        }
    }

    #[test]
    fn segment_dispatch() {
        let lex = toy_lexicon();
        assert_eq!(
            segment("hello world", Lang::En, SegmentationMode::Word, None).unwrap(),
            Segmented::Words(vec!["hello".into(), "world".into()])
        );
        assert_eq!(
            segment("abc", Lang::Zh, SegmentationMode::Word, Some(&lex)).unwrap(),
            Segmented::Words(vec!["ab".into(), "c".into()])
        );
        assert!(matches!(
            segment("abc", Lang::Zh, SegmentationMode::Word, None),
            Err(SegmentError::MissingLexicon)
        ));
        assert_eq!(
            segment("abc", Lang::Zh, SegmentationMode::Subword, None).unwrap(),
            Segmented::Deferred("abc".into())
        );
    }

    #[test]
    fn builtin_lexicon_segments_common_phrases() {
        let lex = Lexicon::builtin_zh();
        assert!(lex.len() > 100);
        assert_eq!(segment_cjk("你好吗", &lex), vec!["你好", "吗"]);
        assert_eq!(
            segment_cjk("我们喜欢学习", &lex),
            vec!["我们", "喜欢", "学习"]
        );
    }

    #[test]
    fn char_splitter_units() {
        let s = CharSplitter;
        assert_eq!(s.split("你好吗"), vec!["你", "好", "吗"]);
        assert_eq!(s.split("abc 你好"), vec!["abc", "你", "好"]);
        assert_eq!(s.split("ok你ok"), vec!["ok", "你", "ok"]);
    }

    #[test]
    fn segmenter_requires_splitter_for_subword() {
        let seg = Segmenter::new(Lang::Zh, SegmentationMode::Subword, None);
        assert!(matches!(
            seg.words("你好"),
            Err(SegmentError::MissingSplitter)
        ));

        let splitter = CharSplitter;
        let seg = seg.with_splitter(&splitter);
        assert_eq!(seg.words("你好").unwrap(), vec!["你", "好"]);
    }
}
