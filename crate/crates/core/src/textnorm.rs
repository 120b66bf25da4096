//! Text normalization.
//!
//! Raw transcripts and news text carry a much richer punctuation inventory
//! than the four slot classes, plus digits, currency symbols and URLs that an
//! ASR system would never emit. This module funnels everything into the
//! canonical form the rest of the pipeline works on:
//!
//! * punctuation is mapped into the class glyphs (`, . ?` half-width for
//!   en/ms, `， 。 ？` full-width for zh) or deleted,
//! * Latin-script text is lowercased,
//! * Malay text gets inverse text normalization: digits become number words,
//!   currency amounts are spelled out, URLs and phone numbers are verbalized.

use std::path::Path;
use std::sync::OnceLock;

use regex::{Captures, Regex};

use crate::lang::Lang;
use crate::slotmask::is_class_glyph;

#[derive(Debug, thiserror::Error)]
pub enum NormError {
    #[error(
        "cannot normalize token {span:?}: number exceeds the supported magnitude (must be < 10^15)"
    )]
    UnnormalizableToken { span: String },
    #[error("mapping table: {0}")]
    BadMapping(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Characters the punctuation mapper is allowed to touch: anything here that
/// no rule rewrites (and that is not already a class glyph) gets deleted.
fn is_punctuation_char(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '¡' | '¿' | '«' | '»' | '·' | '§')
        || matches!(c as u32,
            0x2000..=0x206F       // general punctuation: dashes, curly quotes, ellipsis
            | 0x3001..=0x303F     // CJK punctuation: 、。〈〉「」 and friends
            | 0xFE50..=0xFE6F     // small form variants
            | 0xFF01..=0xFF0F     // fullwidth ！＂＃…／ (digits excluded)
            | 0xFF1A..=0xFF20     // fullwidth ：；＜…＠
            | 0xFF3B..=0xFF40     // fullwidth ［＼］…｀
            | 0xFF5B..=0xFF65) // fullwidth ｛｜｝～ plus halfwidth CJK punct
}

/// Ordered rewrite rules applied longest-source-first at each position.
/// Sources are punctuation strings; targets are a single class glyph or empty
/// (= delete). Any other punctuation character is deleted.
#[derive(Debug, Clone)]
pub struct MappingTable {
    // Sorted by source byte length, descending, so a rule whose source is a
    // strict prefix of another can never shadow it.
    rules: Vec<(String, String)>,
}

impl MappingTable {
    pub fn new(rules: Vec<(String, String)>) -> Result<MappingTable, NormError> {
        for (source, target) in &rules {
            if source.is_empty() {
                return Err(NormError::BadMapping("empty source".to_string()));
            }
            if source.chars().any(char::is_whitespace) {
                return Err(NormError::BadMapping(format!(
                    "source {source:?} contains whitespace"
                )));
            }
            let mut target_chars = target.chars();
            match (target_chars.next(), target_chars.next()) {
                (None, _) => {}
                (Some(c), None) if is_class_glyph(c) => {}
                _ => {
                    return Err(NormError::BadMapping(format!(
                        "target {target:?} must be empty or one of , . ? ， 。 ？"
                    )))
                }
            }
        }
        let mut rules = rules;
        rules.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
        Ok(MappingTable { rules })
    }

    /// Built-in table for a language. Half-width glyphs are canonical for
    /// en/ms, full-width for zh; the opposite width is folded over so the
    /// output is width-consistent.
    pub fn default_for(lang: Lang) -> &'static MappingTable {
        static LATIN: OnceLock<MappingTable> = OnceLock::new();
        static HAN: OnceLock<MappingTable> = OnceLock::new();
        let build = |fullwidth: bool| {
            let (comma, period, question) = if fullwidth {
                ("，", "。", "？")
            } else {
                (",", ".", "?")
            };
            let rules = [
                ("？！", question),
                ("！？", question),
                ("?!", question),
                ("!?", question),
                ("……", period),
                ("...", period),
                ("…", period),
                ("!", period),
                ("！", period),
                (";", comma),
                ("；", comma),
                (":", comma),
                ("：", comma),
                // Width folding of the class glyphs themselves.
                (",", comma),
                ("，", comma),
                (".", period),
                ("。", period),
                ("?", question),
                ("？", question),
            ];
            MappingTable::new(
                rules
                    .iter()
                    .map(|(s, t)| (s.to_string(), t.to_string()))
                    .collect(),
            )
            .expect("built-in table is valid")
        };
        match lang {
            Lang::Zh => HAN.get_or_init(|| build(true)),
            Lang::En | Lang::Ms => LATIN.get_or_init(|| build(false)),
        }
    }

    /// Parses an override table: one `source<TAB>target` per line, empty
    /// target deletes, `#` starts a comment.
    pub fn parse(text: &str) -> Result<MappingTable, NormError> {
        let mut rules = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (source, target) = line.split_once('\t').ok_or_else(|| {
                NormError::BadMapping(format!("line {}: expected source<TAB>target", idx + 1))
            })?;
            rules.push((source.trim().to_string(), target.trim().to_string()));
        }
        MappingTable::new(rules)
    }

    pub fn from_path(path: &Path) -> Result<MappingTable, NormError> {
        MappingTable::parse(&std::fs::read_to_string(path)?)
    }

    /// Rewrites `text`: rule matches are replaced (longest source first),
    /// class glyphs pass through, all other punctuation is deleted. Applied
    /// to fixpoint, since a rewrite can form a new source across what used to
    /// be a boundary ("!!!" becomes "..." which is itself an ellipsis).
    pub fn apply(&self, text: &str) -> String {
        let mut current = self.apply_once(text);
        loop {
            let next = self.apply_once(&current);
            if next == current {
                return current;
            }
            current = next;
        }
    }

    fn apply_once(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        'outer: while !rest.is_empty() {
            for (source, target) in &self.rules {
                if let Some(tail) = rest.strip_prefix(source.as_str()) {
                    out.push_str(target);
                    rest = tail;
                    continue 'outer;
                }
            }
            let c = rest.chars().next().expect("rest is non-empty");
            if is_class_glyph(c) || !is_punctuation_char(c) {
                out.push(c);
            }
            rest = &rest[c.len_utf8()..];
        }
        out
    }
}

/// Maps punctuation into the class glyphs with the language's default table.
pub fn map_punctuation(text: &str, lang: Lang) -> String {
    MappingTable::default_for(lang).apply(text)
}

/// Lowercases Latin-script text. Mandarin passes through unchanged so the
/// pipeline never rewrites Han text it does not understand.
pub fn lowercase_if_latin(text: &str, lang: Lang) -> String {
    match lang {
        Lang::En | Lang::Ms => text.to_lowercase(),
        Lang::Zh => text.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Malay inverse text normalization

const UNITS: [&str; 10] = [
    "kosong", "satu", "dua", "tiga", "empat", "lima", "enam", "tujuh", "lapan", "sembilan",
];

const CARDINAL_LIMIT: u64 = 1_000_000_000_000_000; // 10^15

fn under_hundred(n: u64) -> String {
    debug_assert!(n >= 1 && n <= 99);
    match n {
        1..=9 => UNITS[n as usize].to_string(),
        10 => "sepuluh".to_string(),
        11 => "sebelas".to_string(),
        12..=19 => format!("{} belas", UNITS[(n - 10) as usize]),
        _ => {
            let tens = format!("{} puluh", UNITS[(n / 10) as usize]);
            if n % 10 == 0 {
                tens
            } else {
                format!("{} {}", tens, UNITS[(n % 10) as usize])
            }
        }
    }
}

fn under_thousand(n: u64) -> String {
    debug_assert!(n >= 1 && n <= 999);
    let mut parts = Vec::new();
    match n / 100 {
        0 => {}
        1 => parts.push("seratus".to_string()),
        h => parts.push(format!("{} ratus", UNITS[h as usize])),
    }
    if n % 100 > 0 {
        parts.push(under_hundred(n % 100));
    }
    parts.join(" ")
}

/// Spells a number as Malay cardinal words. Supported up to but excluding
/// 10^15; anything larger is an error so callers can surface the offending
/// span instead of emitting nonsense.
pub fn malay_cardinal(n: u64) -> Result<String, NormError> {
    if n >= CARDINAL_LIMIT {
        return Err(NormError::UnnormalizableToken {
            span: n.to_string(),
        });
    }
    if n == 0 {
        return Ok("kosong".to_string());
    }
    let scales: [(u64, &str); 4] = [
        (1_000_000_000_000, "trilion"),
        (1_000_000_000, "bilion"),
        (1_000_000, "juta"),
        (1_000, "ribu"),
    ];
    let mut parts = Vec::new();
    for (scale, name) in scales {
        let group = n / scale % 1000;
        if group == 0 {
            continue;
        }
        if scale == 1_000 && group == 1 {
            parts.push("seribu".to_string());
        } else {
            parts.push(format!("{} {}", under_thousand(group), name));
        }
    }
    if n % 1000 > 0 {
        parts.push(under_thousand(n % 1000));
    }
    Ok(parts.join(" "))
}

/// Reads a digit string out one digit at a time ("012" -> "kosong satu dua").
/// Non-digit characters are skipped.
pub fn malay_digits(digits: &str) -> String {
    digits
        .chars()
        .filter_map(|c| c.to_digit(10).map(|d| UNITS[d as usize]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn re(pattern: &str, cell: &'static OnceLock<Regex>) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static regex compiles"))
}

/// `Regex::replace_all` with a fallible replacement closure.
fn replace_all_try(
    re: &Regex,
    text: &str,
    mut rep: impl FnMut(&Captures<'_>) -> Result<String, NormError>,
) -> Result<String, NormError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in re.captures_iter(text) {
        let m = caps.get(0).expect("whole match");
        out.push_str(&text[last..m.start()]);
        out.push_str(&rep(&caps)?);
        last = m.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

fn cardinal_of_digits(digits: &str) -> Result<String, NormError> {
    let n: u64 = digits.parse().map_err(|_| NormError::UnnormalizableToken {
        span: digits.to_string(),
    })?;
    malay_cardinal(n).map_err(|_| NormError::UnnormalizableToken {
        span: digits.to_string(),
    })
}

/// Inverse text normalization for Malay: verbalizes what an ASR system would
/// have spoken. Digits become cardinal words ("tahun 2020" -> "tahun dua ribu
/// dua puluh"), currency is read amount-first ("RM50" -> "lima puluh
/// ringgit"), URLs keep their host with dots spoken as "dot", phone numbers
/// are read digit by digit. The output contains no ASCII digits.
pub fn normalize_malay(text: &str) -> Result<String, NormError> {
    static URL: OnceLock<Regex> = OnceLock::new();
    static CURRENCY: OnceLock<Regex> = OnceLock::new();
    static PERCENT: OnceLock<Regex> = OnceLock::new();
    static PHONE: OnceLock<Regex> = OnceLock::new();
    static DECIMAL: OnceLock<Regex> = OnceLock::new();
    static INTEGER: OnceLock<Regex> = OnceLock::new();

    // URLs: keep the host, speak the dots.
    let mut out = replace_all_try(
        re(r"(?i)\b(?:https?://|www\.)\S+", &URL),
        text,
        |caps: &Captures<'_>| {
            let m = caps.get(0).expect("whole match").as_str();
            // Leave trailing sentence punctuation in place.
            let core_len = m.trim_end_matches(|c: char| c.is_ascii_punctuation()).len();
            let (core, trailing) = m.split_at(core_len);
            let host = core
                .trim_start_matches("https://")
                .trim_start_matches("http://")
                .trim_start_matches("HTTPS://")
                .trim_start_matches("HTTP://");
            let host: &str = host
                .split(|c| matches!(c, '/' | '?' | '#' | ':'))
                .next()
                .unwrap_or(host);
            let spoken = host
                .split('.')
                .filter(|p| !p.is_empty())
                .collect::<Vec<_>>()
                .join(" dot ");
            Ok(format!("{spoken}{trailing}"))
        },
    )?;

    // Currency: amount words, then the unit; cents if present.
    out = replace_all_try(
        re(
            r"(RM|MYR|S\$|\$)\s?(\d+(?:,\d{3})*)(?:\.(\d{1,2}))?",
            &CURRENCY,
        ),
        &out,
        |caps: &Captures<'_>| {
            let unit = match &caps[1] {
                "RM" | "MYR" => "ringgit",
                _ => "dolar",
            };
            let whole: String = caps[2].chars().filter(|c| *c != ',').collect();
            let whole_n: u64 = whole.parse().map_err(|_| NormError::UnnormalizableToken {
                span: caps[0].to_string(),
            })?;
            let cents = match caps.get(3) {
                None => 0,
                Some(c) if c.as_str().len() == 1 => c.as_str().parse::<u64>().unwrap() * 10,
                Some(c) => c.as_str().parse::<u64>().unwrap(),
            };
            let mut parts = Vec::new();
            if whole_n > 0 || cents == 0 {
                parts.push(format!("{} {}", malay_cardinal(whole_n)?, unit));
            }
            if cents > 0 {
                parts.push(format!("{} sen", malay_cardinal(cents)?));
            }
            Ok(parts.join(" "))
        },
    )?;

    // Percentages.
    out = replace_all_try(
        re(r"(\d+(?:,\d{3})*)(?:\.(\d+))?\s?%", &PERCENT),
        &out,
        |caps: &Captures<'_>| {
            let whole: String = caps[1].chars().filter(|c| *c != ',').collect();
            let mut spoken = cardinal_of_digits(&whole)?;
            if let Some(frac) = caps.get(2) {
                spoken = format!("{} perpuluhan {}", spoken, malay_digits(frac.as_str()));
            }
            Ok(format!("{spoken} peratus"))
        },
    )?;

    // Phone numbers: leading + or 0, at least seven digits, read digit by
    // digit. Anything that looks close but has too few digits is left for
    // the number passes below.
    out = replace_all_try(
        re(r"\+[\d-]{5,}\d|\b0[\d-]{5,}\d", &PHONE),
        &out,
        |caps: &Captures<'_>| {
            let m = caps.get(0).expect("whole match").as_str();
            if m.chars().filter(char::is_ascii_digit).count() >= 7 {
                Ok(malay_digits(m))
            } else {
                Ok(m.to_string())
            }
        },
    )?;

    // Decimal numbers: integer part as a cardinal, fraction digit by digit.
    out = replace_all_try(
        re(r"(\d+(?:,\d{3})*)\.(\d+)", &DECIMAL),
        &out,
        |caps: &Captures<'_>| {
            let whole: String = caps[1].chars().filter(|c| *c != ',').collect();
            Ok(format!(
                "{} perpuluhan {}",
                cardinal_of_digits(&whole)?,
                malay_digits(&caps[2])
            ))
        },
    )?;

    // Remaining integers. Leading zeros read digit by digit ("007"), the
    // rest as cardinals.
    out = replace_all_try(
        re(r"\d+(?:,\d{3})*", &INTEGER),
        &out,
        |caps: &Captures<'_>| {
            let digits: String = caps[0].chars().filter(|c| *c != ',').collect();
            if digits.len() > 1 && digits.starts_with('0') {
                Ok(malay_digits(&digits))
            } else {
                cardinal_of_digits(&digits)
            }
        },
    )?;

    debug_assert!(
        !out.contains(|c: char| c.is_ascii_digit()),
        "digit survived normalization: {out:?}"
    );
    Ok(collapse_spaces(&out))
}

/// Collapses runs of spaces/tabs within each line and trims line edges.
/// Newlines are preserved.
fn collapse_spaces(text: &str) -> String {
    text.split('\n')
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reduces punctuated text to what an ASR system would emit: punctuation
/// mapped then removed, Latin text lowercased, whitespace collapsed.
pub fn strip_to_asr_form(text: &str, lang: Lang) -> String {
    let mapped = map_punctuation(text, lang);
    let mut no_glyphs = String::with_capacity(mapped.len());
    for c in mapped.chars() {
        if is_class_glyph(c) {
            // A boundary in spaced scripts; nothing at all in zh.
            no_glyphs.push_str(lang.separator());
        } else {
            no_glyphs.push(c);
        }
    }
    let lowered = lowercase_if_latin(&no_glyphs, lang);
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Full normalization for one language: Malay ITN (ms only), punctuation
/// mapping, lowercasing, whitespace cleanup.
pub fn normalize(text: &str, lang: Lang) -> Result<String, NormError> {
    let verbalized = match lang {
        Lang::Ms => normalize_malay(text)?,
        _ => text.to_string(),
    };
    let mapped = map_punctuation(&verbalized, lang);
    let lowered = lowercase_if_latin(&mapped, lang);
    Ok(collapse_spaces(&lowered))
}
