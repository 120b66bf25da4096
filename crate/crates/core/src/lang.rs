//! Language tags for the three supported languages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the three languages the toolkit handles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Zh,
    Ms,
}

impl Lang {
    pub const ALL: [Lang; 3] = [Lang::En, Lang::Zh, Lang::Ms];

    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Zh => "zh",
            Lang::Ms => "ms",
        }
    }

    /// Separator inserted between words when text is rendered back out.
    /// Mandarin is written without spaces; the Latin-script languages get one.
    pub fn separator(self) -> &'static str {
        match self {
            Lang::Zh => "",
            Lang::En | Lang::Ms => " ",
        }
    }

    /// Whether words are delimited by whitespace in running text.
    pub fn is_spaced(self) -> bool {
        !matches!(self, Lang::Zh)
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language code {0:?} (expected en, zh or ms)")]
pub struct UnknownLanguage(pub String);

impl FromStr for Lang {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" => Ok(Lang::En),
            "zh" => Ok(Lang::Zh),
            "ms" => Ok(Lang::Ms),
            other => Err(UnknownLanguage(other.to_string())),
        }
    }
}
