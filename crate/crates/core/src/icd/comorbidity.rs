use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_icd9, Icd9Code};
use crate::error::{Error, Result};
use crate::store::DiagnosisRecord;

pub const COMORBIDITY_CATEGORIES: usize = 29;

/// A single prefix (`428`) or category-level range (`425.4-425.9`), both
/// compared against undotted codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeMatcher {
    Prefix(String),
    Range { lo: String, hi: String },
}

impl CodeMatcher {
    pub fn parse(raw: &str) -> Result<CodeMatcher> {
        let undot = |s: &str| -> Result<String> {
            let s = s.trim();
            parse_icd9(s)?;
            Ok(s.replace('.', "").to_ascii_uppercase())
        };
        match raw.split_once('-') {
            None => Ok(CodeMatcher::Prefix(undot(raw)?)),
            Some((lo, hi)) => {
                let (lo, hi) = (undot(lo)?, undot(hi)?);
                if lo.len() != hi.len() || lo > hi {
                    return Err(Error::Config(format!("bad comorbidity range {raw:?}")));
                }
                Ok(CodeMatcher::Range { lo, hi })
            }
        }
    }

    pub fn matches(&self, canonical: &str) -> bool {
        match self {
            CodeMatcher::Prefix(p) => canonical.starts_with(p.as_str()),
            CodeMatcher::Range { lo, hi } => canonical
                .get(..lo.len())
                .is_some_and(|head| lo.as_str() <= head && head <= hi.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComorbidityCategory {
    pub name: String,
    pub matchers: Vec<CodeMatcher>,
}

impl ComorbidityCategory {
    pub fn matches(&self, code: &Icd9Code) -> bool {
        let canonical = code.canonical();
        self.matchers.iter().any(|m| m.matches(&canonical))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComorbidityTable {
    categories: Vec<ComorbidityCategory>,
}

#[derive(Deserialize)]
struct Row {
    category: String,
    prefix_or_range: String,
}

impl ComorbidityTable {
    pub fn new(categories: Vec<ComorbidityCategory>) -> Result<Self> {
        if categories.len() != COMORBIDITY_CATEGORIES {
            return Err(Error::Config(format!(
                "comorbidity table needs exactly {COMORBIDITY_CATEGORIES} categories, found {}",
                categories.len()
            )));
        }
        let mut names: Vec<&str> = categories.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate comorbidity category {}", w[0])));
        }
        Ok(ComorbidityTable { categories })
    }

    /// Rows for one category must be contiguous; a category name reappearing
    /// after another category is reported as a duplicate.
    pub fn from_csv_str(data: &str) -> Result<Self> {
        let mut categories: Vec<ComorbidityCategory> = Vec::new();
        for row in csv::Reader::from_reader(data.as_bytes()).deserialize() {
            let row: Row = row?;
            let matcher = CodeMatcher::parse(&row.prefix_or_range)?;
            match categories.last_mut() {
                Some(last) if last.name == row.category => last.matchers.push(matcher),
                _ => categories.push(ComorbidityCategory {
                    name: row.category,
                    matchers: vec![matcher],
                }),
            }
        }
        Self::new(categories)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&data)
    }

    pub fn categories(&self) -> &[ComorbidityCategory] {
        &self.categories
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComorbidityFlags {
    pub flags: Vec<bool>,
    /// Diagnosis codes that failed to parse and were ignored.
    pub skipped: usize,
}

impl ComorbidityFlags {
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Flag each category for which any diagnosis matches one of its entries.
pub fn comorbidity_flags<'a>(
    diagnoses: impl IntoIterator<Item = &'a DiagnosisRecord>,
    table: &ComorbidityTable,
) -> ComorbidityFlags {
    let mut flags = vec![false; table.categories.len()];
    let mut skipped = 0;
    for d in diagnoses {
        let Ok(code) = parse_icd9(&d.icd9_code) else {
            skipped += 1;
            continue;
        };
        let canonical = code.canonical();
        for (flag, cat) in flags.iter_mut().zip(&table.categories) {
            if !*flag && cat.matchers.iter().any(|m| m.matches(&canonical)) {
                *flag = true;
            }
        }
    }
    ComorbidityFlags { flags, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icd::IcdResources;

    fn dx(code: &str) -> DiagnosisRecord {
        DiagnosisRecord {
            subject_id: 1,
            hadm_id: 1,
            seq_num: 1,
            icd9_code: code.into(),
        }
    }

    #[test]
    fn shipped_table_has_29_unique_categories() {
        let t = &IcdResources::builtin().comorbidities;
        assert_eq!(t.categories().len(), 29);
    }

    #[test]
    fn empty_list_all_false() {
        let t = &IcdResources::builtin().comorbidities;
        let f = comorbidity_flags(&[], t);
        assert_eq!(f.flags, vec![false; 29]);
        assert_eq!(f.skipped, 0);
    }

    #[test]
    fn single_code_single_flag() {
        let t = &IcdResources::builtin().comorbidities;
        let f = comorbidity_flags(&[dx("4280")], t);
        assert_eq!(f.count(), 1);
        assert!(f.flags[t.index_of("congestive_heart_failure").unwrap()]);

        let f = comorbidity_flags(&[dx("4255")], t);
        assert!(f.flags[t.index_of("congestive_heart_failure").unwrap()]);
        // 425.5 is also alcoholic cardiomyopathy.
        assert!(f.flags[t.index_of("alcohol_abuse").unwrap()]);
    }

    #[test]
    fn bad_codes_are_counted_not_fatal() {
        let t = &IcdResources::builtin().comorbidities;
        let f = comorbidity_flags(&[dx("XYZ"), dx("4019")], t);
        assert_eq!(f.skipped, 1);
        assert!(f.flags[t.index_of("hypertension").unwrap()]);
    }

    #[test]
    fn wrong_category_count_rejected() {
        let csv = "category,prefix_or_range\nchf,428\n";
        assert!(matches!(ComorbidityTable::from_csv_str(csv), Err(Error::Config(_))));
    }

    #[test]
    fn range_matching_uses_bound_width() {
        let m = CodeMatcher::parse("425.4-425.9").unwrap();
        assert!(m.matches("4254"));
        assert!(m.matches("42599"));
        assert!(!m.matches("4253"));
        assert!(!m.matches("425"));
        let m = CodeMatcher::parse("394-397").unwrap();
        assert!(m.matches("3970"));
        assert!(!m.matches("398"));
    }
}
