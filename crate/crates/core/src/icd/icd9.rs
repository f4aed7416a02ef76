use std::fmt;

use compact_str::CompactString;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Icd9Kind {
    Numeric,
    /// External causes of injury, `E` followed by three digits.
    E,
    /// Supplementary factors, `V` followed by two digits.
    V,
}

impl Icd9Kind {
    fn of_prefix(c: char) -> Option<Icd9Kind> {
        match c {
            '0'..='9' => Some(Icd9Kind::Numeric),
            'E' => Some(Icd9Kind::E),
            'V' => Some(Icd9Kind::V),
            _ => None,
        }
    }

    /// Length of the category including any letter prefix.
    pub fn category_len(&self) -> usize {
        match self {
            Icd9Kind::E => 4,
            _ => 3,
        }
    }

    /// Longest allowed subclassification.
    pub fn max_sub_len(&self) -> usize {
        match self {
            Icd9Kind::E => 1,
            _ => 2,
        }
    }
}

/// A structurally valid ICD-9-CM diagnosis code.
///
/// The category is the three-digit stem (with its `E`/`V` letter when
/// present); the subclassification is up to two further digits. `padded`
/// records a trailing `X` used to fill the fourth position when no
/// subdivision exists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Icd9Code {
    pub kind: Icd9Kind,
    pub category: CompactString,
    pub subclassification: CompactString,
    pub padded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderStyle {
    Dotted,
    Undotted,
    Padded4,
}

/// Parse dotted (`401.9`) or undotted (`4019`) ICD-9 codes, including `E`
/// and `V` codes and `X` padding (`401X`).
pub fn parse_icd9(raw: &str) -> Result<Icd9Code> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::icd(raw, "empty code"));
    }
    let upper = trimmed.to_ascii_uppercase();
    let first = upper.chars().next().unwrap();
    let kind = Icd9Kind::of_prefix(first).ok_or_else(|| Error::icd(raw, format!("invalid leading character {first:?}")))?;
    let cat_len = kind.category_len();

    let body: String = match upper.find('.') {
        None => upper.clone(),
        Some(pos) => {
            if pos != cat_len {
                return Err(Error::icd(raw, format!("decimal point must follow position {cat_len}")));
            }
            if upper.len() == pos + 1 || upper[pos + 1..].contains('.') {
                return Err(Error::icd(raw, "misplaced decimal point"));
            }
            upper.replacen('.', "", 1)
        }
    };
    if !body.is_ascii() {
        return Err(Error::icd(raw, "non-ASCII character"));
    }
    if body.len() < cat_len {
        return Err(Error::icd(raw, "too short"));
    }
    if body.len() > cat_len + kind.max_sub_len() {
        return Err(Error::icd(raw, "too long"));
    }
    let (category, rest) = body.split_at(cat_len);
    let digits_from = usize::from(kind != Icd9Kind::Numeric);
    if !category[digits_from..].bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::icd(raw, "non-digit in category"));
    }
    if kind == Icd9Kind::Numeric && category == "000" {
        return Err(Error::icd(raw, "category 000 does not exist"));
    }
    let (subclassification, padded) = if rest == "X" && kind != Icd9Kind::E {
        ("", true)
    } else if rest.bytes().all(|b| b.is_ascii_digit()) {
        (rest, false)
    } else {
        return Err(Error::icd(raw, "non-digit in subclassification"));
    };
    Ok(Icd9Code {
        kind,
        category: category.into(),
        subclassification: subclassification.into(),
        padded,
    })
}

impl Icd9Code {
    /// Undotted code without `X` padding; the storage and lookup form.
    pub fn canonical(&self) -> String {
        format!("{}{}", self.category, self.subclassification)
    }

    pub fn render(&self, style: RenderStyle) -> String {
        let x = if self.padded { "X" } else { "" };
        match style {
            RenderStyle::Undotted => format!("{}{}{x}", self.category, self.subclassification),
            RenderStyle::Dotted => {
                if self.subclassification.is_empty() && !self.padded {
                    self.category.to_string()
                } else {
                    format!("{}.{}{x}", self.category, self.subclassification)
                }
            }
            RenderStyle::Padded4 => {
                if self.subclassification.is_empty() && self.kind != Icd9Kind::E {
                    format!("{}X", self.category)
                } else {
                    self.render(RenderStyle::Undotted)
                }
            }
        }
    }
}

pub fn render_icd9(code: &Icd9Code, style: RenderStyle) -> String {
    code.render(style)
}

impl fmt::Display for Icd9Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(RenderStyle::Dotted))
    }
}

impl std::str::FromStr for Icd9Code {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_icd9(s)
    }
}

/// Kind of a bare category bound such as `401`, `V30` or `E880`.
fn category_bound(raw: &str) -> Result<(Icd9Kind, String)> {
    let code = parse_icd9(raw)?;
    if !code.subclassification.is_empty() || code.padded {
        return Err(Error::Usage(format!("range bound {raw:?} must be a bare category")));
    }
    Ok((code.kind, code.category.to_string()))
}

/// Whether `code`'s category lies in `[lo, hi]` (inclusive, category level).
///
/// Bounds of a different kind from the code (an `E` code against a numeric
/// range, say) are a usage error rather than `false`.
pub fn code_in_range(code: &Icd9Code, lo: &str, hi: &str) -> Result<bool> {
    let (lo_kind, lo) = category_bound(lo)?;
    let (hi_kind, hi) = category_bound(hi)?;
    if lo_kind != hi_kind {
        return Err(Error::Usage(format!("range bounds {lo} and {hi} are of different kinds")));
    }
    if lo > hi {
        return Err(Error::Usage(format!("empty range {lo}..{hi}")));
    }
    if code.kind != lo_kind {
        return Err(Error::Usage(format!(
            "cannot compare {:?} code {code} with {:?} range {lo}..{hi}",
            code.kind, lo_kind
        )));
    }
    Ok(lo.as_str() <= code.category.as_str() && code.category.as_str() <= hi.as_str())
}
