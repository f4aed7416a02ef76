use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::filter::CohortFilter;
use super::report::{Bin, Binner, HistogramReport};
use crate::error::Result;
use crate::store::{CareUnit, EhrStore, IcuStayRecord};

pub const AGE_BIN_YEARS: f64 = 5.0;
pub const ELDERLY_BIN: &str = ">89";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    Patients,
    HospitalAdmissions,
    IcuStays,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Age,
    Gender,
}

/// ICU stays passing the filter, judged on age at ICU admission and the
/// stay's first care unit.
pub fn qualifying_stays<'a>(store: &'a EhrStore, filter: &'a CohortFilter) -> impl Iterator<Item = &'a IcuStayRecord> + 'a {
    store.icustays().iter().filter(move |s| {
        store
            .patient(s.subject_id)
            .is_some_and(|p| filter.admits(filter.age(&p.dob, &s.intime), Some(s.first_careunit), p.gender))
    })
}

/// Distinct patients, admissions or ICU stays with at least one qualifying stay.
pub fn count_distinct(store: &EhrStore, entity: Entity, filter: &CohortFilter) -> Result<u64> {
    filter.validate()?;
    let stays = qualifying_stays(store, filter);
    Ok(match entity {
        Entity::IcuStays => stays.map(|s| s.icustay_id).collect::<HashSet<_>>().len() as u64,
        Entity::HospitalAdmissions => stays.map(|s| s.hadm_id).collect::<HashSet<_>>().len() as u64,
        Entity::Patients => stays.map(|s| s.subject_id).collect::<HashSet<_>>().len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicReport {
    pub dimension: Dimension,
    pub definition: String,
    pub by_unit: Vec<HistogramReport>,
}

impl DemographicReport {
    pub fn unit(&self, unit: CareUnit) -> Option<&HistogramReport> {
        self.by_unit.iter().find(|h| h.stratum.as_deref() == Some(unit.as_str()))
    }
}

/// Age or gender distribution of qualifying ICU stays, one histogram per
/// first care unit. Ages are taken at ICU admission; obfuscated ages fall in
/// a dedicated `>89` bin.
pub fn demographic_distribution(store: &EhrStore, dimension: Dimension, filter: &CohortFilter) -> Result<DemographicReport> {
    filter.validate()?;
    let definition = format!(
        "unit of analysis: ICU stay; stratified by first care unit; {}",
        filter.describe("ICU admission")
    );
    let mut by_unit = Vec::new();
    match dimension {
        Dimension::Age => {
            let mut binners: BTreeMap<CareUnit, Binner> = BTreeMap::new();
            for s in qualifying_stays(store, filter) {
                let p = store.patient(s.subject_id).expect("qualifying stay has patient");
                let age = crate::time::age_at(&p.dob, &s.intime, filter.elderly_sentinel);
                let b = binners
                    .entry(s.first_careunit)
                    .or_insert_with(|| Binner::new(0.0, 90.0, AGE_BIN_YEARS, Some(ELDERLY_BIN)));
                if age.obfuscated {
                    b.add_extra();
                } else {
                    b.add(age.years);
                }
            }
            for (unit, b) in binners {
                by_unit.push(b.finish("age_years", Some(unit.to_string()), definition.clone()));
            }
        }
        Dimension::Gender => {
            let mut counts: BTreeMap<CareUnit, [u64; 2]> = BTreeMap::new();
            for s in qualifying_stays(store, filter) {
                let p = store.patient(s.subject_id).expect("qualifying stay has patient");
                counts.entry(s.first_careunit).or_default()[p.gender as usize] += 1;
            }
            for (unit, [m, f]) in counts {
                let bin = |label: &str, count| Bin {
                    label: label.into(),
                    lo: None,
                    hi: None,
                    count,
                };
                by_unit.push(HistogramReport {
                    dimension: "gender".into(),
                    stratum: Some(unit.to_string()),
                    definition: definition.clone(),
                    bins: vec![bin("F", f), bin("M", m)],
                });
            }
        }
    }
    Ok(DemographicReport {
        dimension,
        definition,
        by_unit,
    })
}
