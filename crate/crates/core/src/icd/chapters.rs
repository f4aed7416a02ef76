use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Icd10Code, Icd9Code, IcdCode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Revision {
    Icd9,
    Icd10,
}

impl fmt::Display for Revision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Revision::Icd9 => "icd9",
            Revision::Icd10 => "icd10",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chapter {
    pub revision: Revision,
    pub range_lo: String,
    pub range_hi: String,
    pub title: String,
}

impl Chapter {
    fn contains(&self, category: &str) -> bool {
        same_shape(&self.range_lo, category) && self.range_lo.as_str() <= category && category <= self.range_hi.as_str()
    }
}

/// Two categories are comparable when they share length and letter prefix
/// class (digit vs. letter in the first position).
fn same_shape(a: &str, b: &str) -> bool {
    let first_is_digit = |s: &str| s.as_bytes().first().is_some_and(u8::is_ascii_digit);
    let letter = |s: &str| s.chars().next().filter(|c| c.is_ascii_alphabetic());
    a.len() == b.len() && first_is_digit(a) == first_is_digit(b) && (first_is_digit(a) || letter(a).is_some())
}

/// Ordered code ranges and their chapter titles for both revisions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChapterTable {
    chapters: Vec<Chapter>,
}

#[derive(Deserialize)]
struct Row {
    revision: Revision,
    range_lo: String,
    range_hi: String,
    title: String,
}

impl ChapterTable {
    pub fn from_csv_str(data: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(data.as_bytes());
        let mut chapters = Vec::new();
        for row in reader.deserialize() {
            let row: Row = row?;
            chapters.push(Chapter {
                revision: row.revision,
                range_lo: row.range_lo.trim().to_ascii_uppercase(),
                range_hi: row.range_hi.trim().to_ascii_uppercase(),
                title: row.title,
            });
        }
        let table = ChapterTable { chapters };
        table.validate()?;
        Ok(table)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&data)
    }

    pub fn chapters(&self, revision: Revision) -> impl Iterator<Item = &Chapter> {
        self.chapters.iter().filter(move |c| c.revision == revision)
    }

    /// Ranges must be well formed and pairwise disjoint within a revision.
    pub fn validate(&self) -> Result<()> {
        for c in &self.chapters {
            if !same_shape(&c.range_lo, &c.range_hi) || c.range_lo > c.range_hi {
                return Err(Error::Config(format!(
                    "malformed chapter range {}..{} ({})",
                    c.range_lo, c.range_hi, c.title
                )));
            }
            let ok = match c.revision {
                Revision::Icd9 => super::parse_icd9(&c.range_lo).is_ok() && super::parse_icd9(&c.range_hi).is_ok(),
                Revision::Icd10 => c.range_lo.len() == 3 && super::parse_icd10(&c.range_lo).is_ok() && super::parse_icd10(&c.range_hi).is_ok(),
            };
            if !ok {
                return Err(Error::Config(format!("chapter range {}..{} is not a valid {} category", c.range_lo, c.range_hi, c.revision)));
            }
        }
        for (i, a) in self.chapters.iter().enumerate() {
            for b in &self.chapters[i + 1..] {
                if a.revision == b.revision
                    && same_shape(&a.range_lo, &b.range_lo)
                    && a.range_lo <= b.range_hi
                    && b.range_lo <= a.range_hi
                {
                    return Err(Error::Config(format!(
                        "chapter ranges {}..{} and {}..{} overlap",
                        a.range_lo, a.range_hi, b.range_lo, b.range_hi
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn chapter_of_category(&self, revision: Revision, category: &str) -> Result<&Chapter> {
        let mut hits = self.chapters(revision).filter(|c| c.contains(category));
        match (hits.next(), hits.next()) {
            (Some(c), None) => Ok(c),
            (None, _) => Err(Error::Classification(format!("{category} lies outside every {revision} chapter"))),
            (Some(_), Some(_)) => Err(Error::Classification(format!("{category} matches several chapters"))),
        }
    }

    pub fn chapter_of_icd9(&self, code: &Icd9Code) -> Result<&Chapter> {
        self.chapter_of_category(Revision::Icd9, &code.category)
    }

    pub fn chapter_of_icd10(&self, code: &Icd10Code) -> Result<&Chapter> {
        self.chapter_of_category(Revision::Icd10, &code.category())
    }

    pub fn chapter_of(&self, code: &IcdCode) -> Result<&Chapter> {
        match code {
            IcdCode::Icd9(c) => self.chapter_of_icd9(c),
            IcdCode::Icd10(c) => self.chapter_of_icd10(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icd::{parse_icd10, parse_icd9, IcdResources};

    #[test]
    fn hypertension_is_circulatory() {
        let t = &IcdResources::builtin().chapters;
        let ch = t.chapter_of_icd9(&parse_icd9("401").unwrap()).unwrap();
        assert_eq!(ch.title, "Diseases of the circulatory system");
        let ch10 = t.chapter_of_icd10(&parse_icd10("I10").unwrap()).unwrap();
        assert_eq!(ch10.title, "Diseases of the circulatory system");
    }

    #[test]
    fn lower_bounds_are_inclusive() {
        let t = &IcdResources::builtin().chapters;
        for rev in [Revision::Icd9, Revision::Icd10] {
            for c in t.chapters(rev) {
                assert_eq!(t.chapter_of_category(rev, &c.range_lo).unwrap(), c);
                assert_eq!(t.chapter_of_category(rev, &c.range_hi).unwrap(), c);
            }
        }
        assert_eq!(t.chapter_of_icd9(&parse_icd9("001").unwrap()).unwrap().range_lo, "001");
    }

    #[test]
    fn chapter_counts() {
        let t = &IcdResources::builtin().chapters;
        // 17 numbered chapters plus the V and E supplementary classifications.
        assert_eq!(t.chapters(Revision::Icd9).count(), 19);
        // 21 chapters plus the special-purpose U block.
        assert_eq!(t.chapters(Revision::Icd10).count(), 22);
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let csv = "revision,range_lo,range_hi,title\nicd9,001,139,a\nicd9,100,239,b\n";
        assert!(matches!(ChapterTable::from_csv_str(csv), Err(Error::Config(_))));
        let csv = "revision,range_lo,range_hi,title\nicd9,001,139,a\n";
        let t = ChapterTable::from_csv_str(csv).unwrap();
        assert!(matches!(t.chapter_of_icd9(&parse_icd9("401").unwrap()), Err(Error::Classification(_))));
    }
}
