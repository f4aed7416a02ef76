use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use super::{parse_icd10, parse_icd9, Icd10Code, Icd9Code};
use crate::error::{Error, Result};

/// Directed ICD-9 → ICD-10 multimap and its exact transpose.
///
/// Codes are keyed by their canonical undotted form. Flags are carried
/// through from the source file uninterpreted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CodeMapping {
    forward: BTreeMap<String, BTreeSet<String>>,
    reverse: BTreeMap<String, BTreeSet<String>>,
    flags: BTreeMap<(String, String), String>,
}

#[derive(Deserialize)]
struct Row {
    icd9: String,
    icd10: String,
    #[serde(default)]
    flags: String,
}

impl CodeMapping {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut m = CodeMapping::default();
        for (a, b) in pairs {
            m.insert(a, b, "")?;
        }
        Ok(m)
    }

    pub fn from_csv_str(data: &str) -> Result<Self> {
        let mut m = CodeMapping::default();
        for row in csv::Reader::from_reader(data.as_bytes()).deserialize() {
            let row: Row = row?;
            m.insert(&row.icd9, &row.icd10, &row.flags)?;
        }
        Ok(m)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&data)
    }

    fn insert(&mut self, icd9: &str, icd10: &str, flags: &str) -> Result<()> {
        let src = parse_icd9(icd9)?.canonical();
        let dst = parse_icd10(icd10)?.canonical();
        self.forward.entry(src.clone()).or_default().insert(dst.clone());
        self.reverse.entry(dst.clone()).or_default().insert(src.clone());
        self.flags.insert((src, dst), flags.trim().to_string());
        Ok(())
    }

    /// ICD-10 targets of an ICD-9 code, ordered by code string. Unmapped
    /// codes yield an empty list.
    pub fn map_icd9(&self, code: &Icd9Code) -> Vec<Icd10Code> {
        self.forward
            .get(&code.canonical())
            .into_iter()
            .flatten()
            .filter_map(|c| parse_icd10(c).ok())
            .collect()
    }

    /// ICD-9 sources of an ICD-10 code, ordered by code string.
    pub fn map_icd10(&self, code: &Icd10Code) -> Vec<Icd9Code> {
        self.reverse
            .get(&code.canonical())
            .into_iter()
            .flatten()
            .filter_map(|c| parse_icd9(c).ok())
            .collect()
    }

    pub fn flags(&self, icd9: &Icd9Code, icd10: &Icd10Code) -> Option<&str> {
        self.flags.get(&(icd9.canonical(), icd10.canonical())).map(String::as_str)
    }

    pub fn forward_entries(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.forward.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn reverse_entries(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.reverse.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}
