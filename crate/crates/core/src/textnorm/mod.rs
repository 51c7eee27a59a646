//! Text normalization: lowercase, diacritic folding, non-alphanumeric
//! removal, tokenization, stopword removal, Dutch Snowball stemming and a
//! final `.`-token filter, applied in that order.
//!
//! The last step is a no-op once non-alphanumerics are gone; it stays so the
//! pipeline keeps its seven documented steps.

mod stem;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::util;

pub use stem::stem;

/// Frozen snapshot of the default NLTK Dutch stopword list (101 entries).
pub const DUTCH_STOPWORDS: &str = include_str!("../../resources/dutch_stopwords.txt");

#[derive(Debug, Clone)]
pub struct NormalizationResources {
    stopwords: HashSet<String>,
    checksum: String,
}

impl NormalizationResources {
    pub fn dutch() -> Self {
        Self::from_list(DUTCH_STOPWORDS).expect("bundled stopword list is non-empty")
    }

    /// Parse a stopword list, one word per line. Entries are lowercased and
    /// folded so they compare against normalized tokens.
    pub fn from_list(list: &str) -> Result<Self> {
        let stopwords: HashSet<String> = list
            .lines()
            .map(|l| fold_diacritics(&l.trim().to_lowercase()))
            .filter(|l| !l.is_empty())
            .collect();
        if stopwords.is_empty() {
            return Err(Error::InvalidInput("stopword list is empty".into()));
        }
        let checksum = format!("{:x}", Sha256::digest(list.as_bytes()));
        Ok(NormalizationResources {
            stopwords,
            checksum,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_list(&text)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn stopwords(&self) -> impl Iterator<Item = &str> {
        self.stopwords.iter().map(String::as_str)
    }

    /// SHA-256 of the stopword list as loaded, recorded in run manifests.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Map letters with diacritics in Latin-1 Supplement and Latin Extended-A
/// to their base letter. Everything else passes through.
pub fn fold_diacritics(text: &str) -> String {
    text.chars().map(fold_char).collect()
}

fn fold_char(c: char) -> char {
    match c {
        'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' | 'Ā' | 'Ă' | 'Ą' => 'A',
        'Ç' | 'Ć' | 'Ĉ' | 'Ċ' | 'Č' => 'C',
        'Ď' | 'Đ' => 'D',
        'È' | 'É' | 'Ê' | 'Ë' | 'Ē' | 'Ĕ' | 'Ė' | 'Ę' | 'Ě' => 'E',
        'Ĝ' | 'Ğ' | 'Ġ' | 'Ģ' => 'G',
        'Ĥ' | 'Ħ' => 'H',
        'Ì' | 'Í' | 'Î' | 'Ï' | 'Ĩ' | 'Ī' | 'Ĭ' | 'Į' | 'İ' => 'I',
        'Ĵ' => 'J',
        'Ķ' => 'K',
        'Ĺ' | 'Ļ' | 'Ľ' | 'Ł' => 'L',
        'Ñ' | 'Ń' | 'Ņ' | 'Ň' => 'N',
        'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' | 'Ō' | 'Ŏ' | 'Ő' | 'Ø' => 'O',
        'Ŕ' | 'Ŗ' | 'Ř' => 'R',
        'Ś' | 'Ŝ' | 'Ş' | 'Š' => 'S',
        'Ţ' | 'Ť' => 'T',
        'Ù' | 'Ú' | 'Û' | 'Ü' | 'Ũ' | 'Ū' | 'Ŭ' | 'Ů' | 'Ű' | 'Ų' => 'U',
        'Ŵ' => 'W',
        'Ý' | 'Ŷ' | 'Ÿ' => 'Y',
        'Ź' | 'Ż' | 'Ž' => 'Z',
        'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' | 'ā' | 'ă' | 'ą' => 'a',
        'ç' | 'ć' | 'ĉ' | 'ċ' | 'č' => 'c',
        'ď' | 'đ' => 'd',
        'è' | 'é' | 'ê' | 'ë' | 'ē' | 'ĕ' | 'ė' | 'ę' | 'ě' => 'e',
        'ĝ' | 'ğ' | 'ġ' | 'ģ' => 'g',
        'ĥ' | 'ħ' => 'h',
        'ì' | 'í' | 'î' | 'ï' | 'ĩ' | 'ī' | 'ĭ' | 'į' => 'i',
        'ĵ' => 'j',
        'ķ' => 'k',
        'ĺ' | 'ļ' | 'ľ' | 'ł' => 'l',
        'ñ' | 'ń' | 'ņ' | 'ň' => 'n',
        'ò' | 'ó' | 'ô' | 'õ' | 'ö' | 'ō' | 'ŏ' | 'ő' | 'ø' => 'o',
        'ŕ' | 'ŗ' | 'ř' => 'r',
        'ś' | 'ŝ' | 'ş' | 'š' => 's',
        'ţ' | 'ť' => 't',
        'ù' | 'ú' | 'û' | 'ü' | 'ũ' | 'ū' | 'ŭ' | 'ů' | 'ű' | 'ų' => 'u',
        'ŵ' => 'w',
        'ý' | 'ÿ' | 'ŷ' => 'y',
        'ź' | 'ż' | 'ž' => 'z',
        other => other,
    }
}

fn is_combining_mark(c: char) -> bool {
    ('\u{0300}'..='\u{036F}').contains(&c)
}

/// Run the full pipeline on one text.
pub fn normalize(text: &str, resources: &NormalizationResources) -> Vec<String> {
    let lowered = text.to_lowercase();
    let folded = fold_diacritics(&lowered);
    // Combining marks left over from lowercasing (e.g. U+0130) are dropped
    // rather than split on.
    let cleaned: String = folded
        .chars()
        .filter(|&c| !is_combining_mark(c))
        .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| !resources.is_stopword(t))
        .map(stem)
        .filter(|t| !t.is_empty() && t != ".")
        .collect()
}

pub fn normalize_doc(doc_id: &str, text: &str, resources: &NormalizationResources) -> TokenDoc {
    TokenDoc {
        doc_id: doc_id.to_string(),
        tokens: normalize(text, resources),
    }
}

pub fn write_token_docs(path: &Path, docs: &[TokenDoc]) -> Result<()> {
    util::write_jsonl(path, docs)
}

pub fn read_token_docs(path: &Path) -> Result<Vec<TokenDoc>> {
    util::read_lines(path)?
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
