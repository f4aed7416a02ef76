//! ICD-9 and ICD-10 grammars, chapter classification, cross-revision mapping
//! and comorbidity flagging.

mod chapters;
mod comorbidity;
mod dictionary;
mod icd10;
mod icd9;
mod mapping;

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::Serialize;

pub use chapters::{Chapter, ChapterTable, Revision};
pub use comorbidity::{
    comorbidity_flags, CodeMatcher, ComorbidityCategory, ComorbidityFlags, ComorbidityTable, COMORBIDITY_CATEGORIES,
};
pub use dictionary::{CodeDescription, DescriptionTable, DescriptorFlags, DualCodingTable, PairCheck};
pub use icd10::{parse_icd10, Annotation, Icd10Code, MAX_EXTENSION_LEN};
pub use icd9::{code_in_range, parse_icd9, render_icd9, Icd9Code, Icd9Kind, RenderStyle};
pub use mapping::CodeMapping;

use crate::error::{Error, Result};

pub const CHAPTERS_FILE: &str = "icd_chapters.csv";
pub const MAPPING_FILE: &str = "icd9_icd10_map.csv";
pub const COMORBIDITY_FILE: &str = "elixhauser_ahrq.csv";
pub const DESCRIPTIONS_FILE: &str = "icd9_descriptions.csv";
pub const DUAL_CODING_FILE: &str = "icd10_dual_coding.csv";

const BUILTIN_CHAPTERS: &str = include_str!("../../data/icd_chapters.csv");
const BUILTIN_MAPPING: &str = include_str!("../../data/icd9_icd10_map.csv");
const BUILTIN_COMORBIDITY: &str = include_str!("../../data/elixhauser_ahrq.csv");
const BUILTIN_DESCRIPTIONS: &str = include_str!("../../data/icd9_descriptions.csv");
const BUILTIN_DUAL_CODING: &str = include_str!("../../data/icd10_dual_coding.csv");

/// A parsed code of either revision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "revision", rename_all = "lowercase")]
pub enum IcdCode {
    Icd9(Icd9Code),
    Icd10(Icd10Code),
}

impl IcdCode {
    pub fn revision(&self) -> Revision {
        match self {
            IcdCode::Icd9(_) => Revision::Icd9,
            IcdCode::Icd10(_) => Revision::Icd10,
        }
    }

    pub fn canonical(&self) -> String {
        match self {
            IcdCode::Icd9(c) => c.canonical(),
            IcdCode::Icd10(c) => c.canonical(),
        }
    }
}

impl fmt::Display for IcdCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IcdCode::Icd9(c) => c.fmt(f),
            IcdCode::Icd10(c) => c.fmt(f),
        }
    }
}

/// Parse as ICD-9 first, falling back to ICD-10. `V30` and `E001` style
/// strings are valid in both grammars and resolve to ICD-9.
pub fn parse_any(raw: &str) -> Result<IcdCode> {
    match parse_icd9(raw) {
        Ok(c) => Ok(IcdCode::Icd9(c)),
        Err(e9) => parse_icd10(raw).map(IcdCode::Icd10).map_err(|_| e9),
    }
}

/// Parse in the requested revision.
pub fn parse_in(raw: &str, revision: Revision) -> Result<IcdCode> {
    match revision {
        Revision::Icd9 => parse_icd9(raw).map(IcdCode::Icd9),
        Revision::Icd10 => parse_icd10(raw).map(IcdCode::Icd10),
    }
}

/// All reference tables used by the ICD operations.
#[derive(Debug, Clone)]
pub struct IcdResources {
    pub chapters: ChapterTable,
    pub mapping: CodeMapping,
    pub comorbidities: ComorbidityTable,
    pub descriptions: DescriptionTable,
    pub dual_coding: DualCodingTable,
}

impl IcdResources {
    /// Tables compiled into the binary.
    pub fn builtin() -> &'static IcdResources {
        static BUILTIN: OnceLock<IcdResources> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            IcdResources {
                chapters: ChapterTable::from_csv_str(BUILTIN_CHAPTERS).expect("builtin chapter table"),
                mapping: CodeMapping::from_csv_str(BUILTIN_MAPPING).expect("builtin mapping table"),
                comorbidities: ComorbidityTable::from_csv_str(BUILTIN_COMORBIDITY).expect("builtin comorbidity table"),
                descriptions: DescriptionTable::from_csv_str(BUILTIN_DESCRIPTIONS).expect("builtin descriptions"),
                dual_coding: DualCodingTable::from_csv_str(BUILTIN_DUAL_CODING).expect("builtin dual coding table"),
            }
        })
    }

    /// Load tables from `dir`, using the built-in copy for any file not present.
    pub fn from_dir(dir: &Path) -> Result<IcdResources> {
        if !dir.is_dir() {
            let e = std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory");
            return Err(Error::io(dir, e));
        }
        let builtin = Self::builtin();
        let path = |name: &str| Some(dir.join(name)).filter(|p| p.is_file());
        Ok(IcdResources {
            chapters: match path(CHAPTERS_FILE) {
                Some(p) => ChapterTable::from_path(&p)?,
                None => builtin.chapters.clone(),
            },
            mapping: match path(MAPPING_FILE) {
                Some(p) => CodeMapping::from_path(&p)?,
                None => builtin.mapping.clone(),
            },
            comorbidities: match path(COMORBIDITY_FILE) {
                Some(p) => ComorbidityTable::from_path(&p)?,
                None => builtin.comorbidities.clone(),
            },
            descriptions: match path(DESCRIPTIONS_FILE) {
                Some(p) => DescriptionTable::from_path(&p)?,
                None => builtin.descriptions.clone(),
            },
            dual_coding: match path(DUAL_CODING_FILE) {
                Some(p) => DualCodingTable::from_path(&p)?,
                None => builtin.dual_coding.clone(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_any_prefers_icd9() {
        assert_eq!(parse_any("V300").unwrap().revision(), Revision::Icd9);
        assert_eq!(parse_any("I48.91").unwrap().revision(), Revision::Icd10);
        assert!(parse_any("").is_err());
    }

    #[test]
    fn builtin_resources_load() {
        let r = IcdResources::builtin();
        assert!(!r.mapping.is_empty());
        assert!(!r.descriptions.is_empty());
    }
}
