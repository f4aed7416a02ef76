use std::fmt;

use compact_str::CompactString;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters allowed after the three-character category.
pub const MAX_EXTENSION_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Annotation {
    None,
    /// Underlying disease (`†`).
    Dagger,
    /// Manifestation in a particular organ or site (`*`).
    Asterisk,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Icd10Code {
    pub chapter_letter: char,
    pub category_digits: CompactString,
    pub extension: CompactString,
    pub annotation: Annotation,
}

pub fn parse_icd10(raw: &str) -> Result<Icd10Code> {
    let mut s = raw.trim().to_string();
    let has_dagger = s.contains('†');
    let has_asterisk = s.contains('*');
    if has_dagger && has_asterisk {
        return Err(Error::icd(raw, "dagger and asterisk are mutually exclusive"));
    }
    let annotation = match s.chars().last() {
        Some('†') => Annotation::Dagger,
        Some('*') => Annotation::Asterisk,
        _ if has_dagger || has_asterisk => return Err(Error::icd(raw, "annotation must be the final character")),
        _ => Annotation::None,
    };
    if annotation != Annotation::None {
        s.pop();
    }
    if !s.is_ascii() {
        return Err(Error::icd(raw, "non-ASCII character"));
    }
    let s = s.to_ascii_uppercase();
    let body = match s.find('.') {
        None => s,
        Some(3) if s.len() > 4 && !s[4..].contains('.') => s.replacen('.', "", 1),
        Some(_) => return Err(Error::icd(raw, "decimal point must follow the category")),
    };
    if body.len() < 3 {
        return Err(Error::icd(raw, "too short"));
    }
    if body.len() > 3 + MAX_EXTENSION_LEN {
        return Err(Error::icd(raw, "too long"));
    }
    let b = body.as_bytes();
    if !b[0].is_ascii_alphabetic() {
        return Err(Error::icd(raw, "first character must be alphabetic"));
    }
    if !(b[1].is_ascii_digit() && b[2].is_ascii_digit()) {
        return Err(Error::icd(raw, "characters 2-3 must be digits"));
    }
    if !b[3..].iter().all(u8::is_ascii_alphanumeric) {
        return Err(Error::icd(raw, "extension must be alphanumeric"));
    }
    Ok(Icd10Code {
        chapter_letter: b[0] as char,
        category_digits: body[1..3].into(),
        extension: body[3..].into(),
        annotation,
    })
}

impl Icd10Code {
    /// Three-character category, e.g. `A17`.
    pub fn category(&self) -> String {
        format!("{}{}", self.chapter_letter, self.category_digits)
    }

    /// Undotted, unannotated form used for lookups.
    pub fn canonical(&self) -> String {
        format!("{}{}{}", self.chapter_letter, self.category_digits, self.extension)
    }

    fn mark(&self) -> &'static str {
        match self.annotation {
            Annotation::None => "",
            Annotation::Dagger => "†",
            Annotation::Asterisk => "*",
        }
    }

    pub fn render(&self, dotted: bool) -> String {
        if dotted && !self.extension.is_empty() {
            format!("{}.{}{}", self.category(), self.extension, self.mark())
        } else {
            format!("{}{}", self.canonical(), self.mark())
        }
    }
}

impl fmt::Display for Icd10Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(true))
    }
}

impl std::str::FromStr for Icd10Code {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_icd10(s)
    }
}
