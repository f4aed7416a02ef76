use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::descriptive::{AGE_BIN_YEARS, ELDERLY_BIN};
use super::filter::{CohortFilter, MinAge};
use super::outcomes::first_icu_unit;
use super::report::{Binner, HistogramReport};
use crate::error::{Error, Result};
use crate::icd::{code_in_range, parse_icd9, IcdResources};
use crate::store::{CareUnit, EhrStore, SubjectId};
use crate::time::{age_at, DEFAULT_ELDERLY_SENTINEL};

pub const HYPERTENSION_RANGE: (&str, &str) = ("401", "405");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeRangeReport {
    pub range_lo: String,
    pub range_hi: String,
    pub patients: u64,
    pub histogram: HistogramReport,
}

/// Distinct patients with at least one diagnosis whose ICD-9 category lies in
/// `[lo, hi]` at an admission where they met the age bound.
///
/// Age is computed at hospital admission. The histogram uses the age at the
/// first such admission; obfuscated ages go to the `>89` bin. Diagnoses of
/// another code kind or that fail to parse never match.
pub fn patients_with_code_range(store: &EhrStore, lo: &str, hi: &str, min_age: MinAge) -> Result<CodeRangeReport> {
    let probe = parse_icd9(lo).map_err(|e| Error::Usage(format!("invalid range bound: {e}")))?;
    code_in_range(&probe, lo, hi)?;
    let mut first: BTreeMap<SubjectId, (chrono::NaiveDateTime, crate::time::Age)> = BTreeMap::new();
    for a in store.admissions() {
        let Some(p) = store.patient(a.subject_id) else { continue };
        let age = age_at(&p.dob, &a.admittime, DEFAULT_ELDERLY_SENTINEL);
        if !min_age.admits(age.years) {
            continue;
        }
        let hit = store.diagnoses_of_admission(a.hadm_id).any(|d| {
            parse_icd9(&d.icd9_code)
                .ok()
                .filter(|c| c.kind == probe.kind)
                .is_some_and(|c| code_in_range(&c, lo, hi).unwrap_or(false))
        });
        if hit {
            let e = first.entry(a.subject_id).or_insert((a.admittime, age));
            if a.admittime < e.0 {
                *e = (a.admittime, age);
            }
        }
    }
    let mut binner = Binner::new(0.0, 90.0, AGE_BIN_YEARS, Some(ELDERLY_BIN));
    for (_, age) in first.values() {
        if age.obfuscated {
            binner.add_extra();
        } else {
            binner.add(age.years);
        }
    }
    let definition = format!(
        "unit of analysis: patient; any diagnosis with category in [{lo}, {hi}]; age at hospital admission {min_age}; \
         histogram age at first qualifying admission"
    );
    Ok(CodeRangeReport {
        range_lo: lo.to_string(),
        range_hi: hi.to_string(),
        patients: first.len() as u64,
        histogram: binner.finish("age_years", None, definition),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCode {
    pub rank: usize,
    pub code: String,
    pub count: u64,
    pub description: Option<String>,
    pub chapter: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCodes {
    pub unit: CareUnit,
    pub admissions: u64,
    pub codes: Vec<RankedCode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopCodesReport {
    pub k: usize,
    pub definition: String,
    pub units: Vec<UnitCodes>,
}

impl TopCodesReport {
    pub fn unit(&self, unit: CareUnit) -> Option<&UnitCodes> {
        self.units.iter().find(|u| u.unit == unit)
    }
}

/// Canonical (undotted) form of a stored code, or the trimmed raw text when
/// it does not parse.
fn canonical_code(raw: &str) -> String {
    parse_icd9(raw).map_or_else(|_| raw.trim().to_string(), |c| c.canonical())
}

/// The `k` most frequent primary diagnoses (`seq_num` 1) per first ICU unit
/// among admissions passing `filter`, judged on age at hospital admission.
/// Ties go to the smaller code string.
pub fn top_k_primary_codes_by_unit(
    store: &EhrStore,
    k: usize,
    filter: &CohortFilter,
    resources: &IcdResources,
) -> Result<TopCodesReport> {
    if k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    filter.validate()?;
    let mut counts: BTreeMap<CareUnit, (u64, HashMap<String, u64>)> = BTreeMap::new();
    for a in store.admissions() {
        let Some(p) = store.patient(a.subject_id) else { continue };
        let Some(unit) = first_icu_unit(store, a.hadm_id) else { continue };
        if !filter.admits(filter.age(&p.dob, &a.admittime), Some(unit), p.gender) {
            continue;
        }
        let Some(primary) = store.diagnoses_of_admission(a.hadm_id).find(|d| d.seq_num == 1) else {
            continue;
        };
        let entry = counts.entry(unit).or_default();
        entry.0 += 1;
        *entry.1.entry(canonical_code(&primary.icd9_code)).or_default() += 1;
    }
    let units = counts
        .into_iter()
        .map(|(unit, (admissions, codes))| {
            let mut ranked: Vec<(String, u64)> = codes.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(k);
            let codes = ranked
                .into_iter()
                .enumerate()
                .map(|(i, (code, count))| {
                    let parsed = parse_icd9(&code).ok();
                    RankedCode {
                        rank: i + 1,
                        description: parsed
                            .as_ref()
                            .and_then(|c| resources.descriptions.get(c))
                            .map(|d| d.description.clone()),
                        chapter: parsed
                            .as_ref()
                            .and_then(|c| resources.chapters.chapter_of_icd9(c).ok())
                            .map(|c| c.title.clone()),
                        code,
                        count,
                    }
                })
                .collect();
            UnitCodes { unit, admissions, codes }
        })
        .collect();
    Ok(TopCodesReport {
        k,
        definition: format!(
            "unit of analysis: hospital admission; primary diagnosis (seq_num = 1); stratified by first ICU unit; \
             ties broken by code ascending; {}",
            filter.describe("hospital admission")
        ),
        units,
    })
}
