//! Shared fixtures for the integration suites: a brute-force segmentation
//! oracle, a synthetic three-language grammar whose punctuation is decidable
//! from local context, and a deterministic stub predictor.

use maskpunct_core::inference::{InferError, SlotPredictor};
use maskpunct_core::seed::rng_for;
use maskpunct_core::segment::Lexicon;
use maskpunct_core::slotmask::{LabeledSequence, PunctClass};
use maskpunct_core::Lang;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Brute-force reference for the dictionary segmenter.
///
/// For every prefix it enumerates all 2^(j-1) boundary subsets and keeps the
/// maximum left-to-right fold of `ln(freq) - ln(total)` over valid pieces
/// (multi-character pieces must be lexicon entries; single characters fall
/// back to frequency 1). The winning path is then recovered from the right,
/// taking at each position the smallest predecessor whose enumerated best
/// prefix plus the closing edge is maximal — the documented tie rule (the
/// longer final word wins, applied recursively). Every score comes from
/// exhaustive enumeration; only the selection rule is shared with the
/// production code, and that rule is exactly what is under test.
pub fn brute_force_segment(text: &str, lexicon: &Lexicon) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(n <= 20, "brute force is exponential; keep inputs short");
    let piece = |i: usize, j: usize| chars[i..j].iter().collect::<String>();
    let edge = |i: usize, j: usize| -> Option<f64> {
        let word = piece(i, j);
        match lexicon.get(&word) {
            None if j - i > 1 => None,
            hit => {
                let freq = hit.unwrap_or(1);
                Some((freq as f64).ln() - (lexicon.total() as f64).ln())
            }
        }
    };

    // best_fold[j]: the best score over all valid segmentations of the first
    // j characters, by exhaustive enumeration.
    let mut best_fold = vec![f64::NEG_INFINITY; n + 1];
    best_fold[0] = 0.0;
    for j in 1..=n {
        for mask in 0u32..(1 << (j - 1)) {
            let mut bounds = vec![0];
            bounds.extend((1..j).filter(|b| mask & (1 << (b - 1)) != 0));
            bounds.push(j);

            let mut score = 0.0;
            let mut valid = true;
            for pair in bounds.windows(2) {
                match edge(pair[0], pair[1]) {
                    Some(e) => score += e,
                    None => {
                        valid = false;
                        break;
                    }
                }
            }
            if valid && score > best_fold[j] {
                best_fold[j] = score;
            }
        }
        assert!(best_fold[j].is_finite(), "singletons always segment");
    }

    let mut bounds = vec![n];
    let mut j = n;
    while j > 0 {
        let mut pick: Option<(f64, usize)> = None;
        for i in 0..j {
            let Some(e) = edge(i, j) else { continue };
            let score = best_fold[i] + e;
            if pick.is_none_or(|(top, _)| score > top) {
                pick = Some((score, i));
            }
        }
        j = pick.expect("single-character edge always exists").1;
        bounds.push(j);
    }
    bounds.reverse();
    bounds
        .windows(2)
        .map(|pair| piece(pair[0], pair[1]))
        .collect()
}

/// One synthetic language: five-word sentences where the final word decides
/// period versus question mark and a mid-sentence conjunction puts a comma on
/// the slot before it. Every label is decidable from the token next to its
/// slot, so a small encoder can reach perfect held-out scores.
pub struct ToyGrammar {
    pub lang: Lang,
    pub fillers: &'static [&'static str],
    pub conjunctions: &'static [&'static str],
    pub question_cues: &'static [&'static str],
    pub statement_finals: &'static [&'static str],
}

pub fn toy_english() -> ToyGrammar {
    ToyGrammar {
        lang: Lang::En,
        fillers: &["alpha", "bravo", "delta", "echo", "kilo", "lima"],
        conjunctions: &["and", "but"],
        question_cues: &["right", "eh"],
        statement_finals: &["stop", "over"],
    }
}

pub fn toy_malay() -> ToyGrammar {
    ToyGrammar {
        lang: Lang::Ms,
        fillers: &["batu", "kayu", "ikan", "pasar", "jalan", "rumah"],
        conjunctions: &["dan", "tetapi"],
        question_cues: &["kah", "mana"],
        statement_finals: &["habis", "tamat"],
    }
}

/// The Mandarin analogue mixes one- and two-character words and deliberately
/// reuses characters across categories: the filler 和平 starts with the
/// conjunction 和, and the filler 小了 ends with the same character as the
/// statement finals 大了/完了. Word-level slots see distinct tokens; character
/// -level slots see ambiguous local contexts and lose the fixed sentence
/// length, which is what the segmentation ablation measures.
pub fn toy_mandarin() -> ToyGrammar {
    ToyGrammar {
        lang: Lang::Zh,
        fillers: &["一", "二三", "四", "五六", "小了", "和平"],
        conjunctions: &["和", "也"],
        question_cues: &["好吗", "呢"],
        statement_finals: &["大了", "完了"],
    }
}

fn pick(rng: &mut ChaCha8Rng, options: &[&str]) -> String {
    options[rng.gen_range(0..options.len())].to_string()
}

/// Generates `articles` sequences of `sentences_each` five-word sentences.
pub fn generate(
    grammar: &ToyGrammar,
    articles: usize,
    sentences_each: usize,
    seed: u64,
) -> Vec<LabeledSequence> {
    let mut rng = rng_for(seed, &format!("toy-{}", grammar.lang.code()));
    (0..articles)
        .map(|_| {
            let mut words = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..sentences_each {
                let start = words.len();
                // A conjunction may appear at sentence position 2 or 3; the
                // slot before it is the comma.
                let conj_at = rng.gen_bool(0.6).then(|| rng.gen_range(2..=3));
                for pos in 0..4 {
                    let word = if Some(pos) == conj_at {
                        pick(&mut rng, grammar.conjunctions)
                    } else {
                        pick(&mut rng, grammar.fillers)
                    };
                    words.push(word);
                    labels.push(PunctClass::O);
                }
                let question = rng.gen_bool(0.35);
                words.push(pick(
                    &mut rng,
                    if question {
                        grammar.question_cues
                    } else {
                        grammar.statement_finals
                    },
                ));
                labels.push(if question {
                    PunctClass::Q
                } else {
                    PunctClass::P
                });
                if let Some(at) = conj_at {
                    labels[start + at - 1] = PunctClass::C;
                }
            }
            LabeledSequence::new(grammar.lang, words, labels)
                .expect("toy grammar emits valid sequences")
        })
        .collect()
}

/// Deterministic per-word predictor: the word itself names its slot label
/// (`wo`/`wc`/`wp`/`wq`). Order-insensitive by construction, so any window
/// stitching artifact shows up as a label difference. `max` is the windowing
/// capacity it advertises; the mapping itself works at any length, which is
/// what lets a windowed run be compared against one unwindowed call.
pub struct WordCodedStub {
    pub max: usize,
}

impl SlotPredictor for WordCodedStub {
    fn predict(&self, _lang: Lang, words: &[String]) -> Result<Vec<PunctClass>, InferError> {
        Ok(words
            .iter()
            .map(|word| match word.as_str() {
                "wc" => PunctClass::C,
                "wp" => PunctClass::P,
                "wq" => PunctClass::Q,
                _ => PunctClass::O,
            })
            .collect())
    }

    fn max_slots(&self) -> usize {
        self.max
    }
}
