use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_icd10, parse_icd9, Annotation, Icd10Code, Icd9Code};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorFlags {
    /// "Not Otherwise Specified"
    pub nos: bool,
    /// "Not Elsewhere Classified"
    pub nec: bool,
}

impl DescriptorFlags {
    pub fn from_description(text: &str) -> DescriptorFlags {
        let mut flags = DescriptorFlags::default();
        for token in text.split(|c: char| !c.is_ascii_alphanumeric()) {
            match token {
                "NOS" => flags.nos = true,
                "NEC" => flags.nec = true,
                _ => {}
            }
        }
        flags
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeDescription {
    pub code: String,
    pub description: String,
    pub flags: DescriptorFlags,
}

/// ICD-9 code descriptions keyed by canonical code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DescriptionTable {
    entries: BTreeMap<String, CodeDescription>,
}

#[derive(Deserialize)]
struct DescriptionRow {
    icd9: String,
    description: String,
}

impl DescriptionTable {
    pub fn from_csv_str(data: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for row in csv::Reader::from_reader(data.as_bytes()).deserialize() {
            let row: DescriptionRow = row?;
            let code = parse_icd9(&row.icd9)?.canonical();
            let flags = DescriptorFlags::from_description(&row.description);
            entries.insert(
                code.clone(),
                CodeDescription {
                    code,
                    description: row.description,
                    flags,
                },
            );
        }
        Ok(DescriptionTable { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&data)
    }

    pub fn get(&self, code: &Icd9Code) -> Option<&CodeDescription> {
        self.entries.get(&code.canonical())
    }

    /// Description for a raw stored code; unparseable or unknown codes yield `None`.
    pub fn describe(&self, raw: &str) -> Option<&str> {
        let code = parse_icd9(raw).ok()?;
        self.get(&code).map(|d| d.description.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Known dagger (underlying disease) to asterisk (manifestation) pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualCodingTable {
    pairs: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
struct DualRow {
    dagger: String,
    asterisk: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCheck {
    Known,
    Unknown,
    /// Annotations are missing or on the wrong side of the pair.
    Misannotated,
}

impl DualCodingTable {
    pub fn from_csv_str(data: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for row in csv::Reader::from_reader(data.as_bytes()).deserialize() {
            let row: DualRow = row?;
            let d = parse_icd10(&row.dagger)?.canonical();
            let a = parse_icd10(&row.asterisk)?.canonical();
            let list = pairs.entry(d).or_default();
            if !list.contains(&a) {
                list.push(a);
                list.sort();
            }
        }
        Ok(DualCodingTable { pairs })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&data)
    }

    pub fn manifestations_of(&self, dagger: &Icd10Code) -> &[String] {
        self.pairs.get(&dagger.canonical()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn check_pair(&self, dagger: &Icd10Code, asterisk: &Icd10Code) -> PairCheck {
        let annotated = |c: &Icd10Code, a| c.annotation == Annotation::None || c.annotation == a;
        if !annotated(dagger, Annotation::Dagger) || !annotated(asterisk, Annotation::Asterisk) {
            return PairCheck::Misannotated;
        }
        if self.manifestations_of(dagger).contains(&asterisk.canonical()) {
            PairCheck::Known
        } else {
            PairCheck::Unknown
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icd::IcdResources;

    #[test]
    fn descriptor_flags_follow_markers() {
        assert_eq!(DescriptorFlags::from_description("Unspecified septicemia"), DescriptorFlags::default());
        let f = DescriptorFlags::from_description("Pneumonia, organism NOS");
        assert!(f.nos && !f.nec);
        let f = DescriptorFlags::from_description("Other disorders of kidney NEC");
        assert!(f.nec && !f.nos);
        assert!(!DescriptorFlags::from_description("Anosmia").nos);
    }

    #[test]
    fn shipped_descriptions_load() {
        let d = &IcdResources::builtin().descriptions;
        assert!(d.describe("401.9").is_some());
        assert!(d.describe("not a code").is_none());
    }

    #[test]
    fn dual_pairs() {
        let t = &IcdResources::builtin().dual_coding;
        let dagger = parse_icd10("A17.0†").unwrap();
        let ast = parse_icd10("G01*").unwrap();
        assert_eq!(t.check_pair(&dagger, &ast), PairCheck::Known);
        assert_eq!(t.check_pair(&ast, &dagger), PairCheck::Misannotated);
        assert_eq!(t.check_pair(&dagger, &parse_icd10("H36").unwrap()), PairCheck::Unknown);
    }
}
