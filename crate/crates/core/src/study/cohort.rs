use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::csv_string;
use crate::error::Result;
use crate::icd::{parse_icd9, CodeMatcher};
use crate::store::{CareUnit, EhrStore, HadmId, IcuStayId, IcuStayRecord, SubjectId};
use crate::time::{age_years, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub remaining: u64,
    /// Surviving ICU stays, ascending.
    #[serde(skip)]
    pub members: Vec<IcuStayId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortFlowchart {
    pub stages: Vec<Stage>,
}

impl CohortFlowchart {
    pub fn initial(&self) -> u64 {
        self.stages.first().map_or(0, |s| s.remaining)
    }

    pub fn final_count(&self) -> u64 {
        self.stages.last().map_or(0, |s| s.remaining)
    }

    /// Stays removed by each stage after the first.
    pub fn removals(&self) -> Vec<u64> {
        self.stages
            .windows(2)
            .map(|w| w[0].remaining.saturating_sub(w[1].remaining))
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.stages.windows(2).all(|w| w[1].remaining <= w[0].remaining)
    }

    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            stage: &'a str,
            count: u64,
        }
        csv_string(self.stages.iter().map(|s| Row {
            stage: &s.name,
            count: s.remaining,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyStay {
    pub icustay_id: IcuStayId,
    pub hadm_id: HadmId,
    pub subject_id: SubjectId,
    pub unit: CareUnit,
    pub intime: Timestamp,
    pub outtime: Timestamp,
    /// Earliest ventilation event on the stay.
    pub vent_onset: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub stays: Vec<StudyStay>,
    pub flowchart: CohortFlowchart,
    pub warnings: Vec<String>,
}

pub(crate) fn has_code(store: &EhrStore, hadm: HadmId, matchers: &[CodeMatcher]) -> bool {
    store.diagnoses_of_admission(hadm).any(|d| {
        parse_icd9(&d.icd9_code).is_ok_and(|c| {
            let canonical = c.canonical();
            matchers.iter().any(|m| m.matches(&canonical))
        })
    })
}

/// Earliest ventilation event charted on the stay.
pub fn ventilation_onset(store: &EhrStore, stay: IcuStayId, config: &StudyConfig) -> Option<Timestamp> {
    store
        .chart_events_of_stay(stay)
        .filter(|e| config.ventilation_items.contains(&e.itemid))
        .map(|e| e.charttime)
        .min()
}

/// Staged study cohort, one row per ICU stay.
///
/// Stages, in order: adults with at least one input event on the stay; the
/// patient's first ICU stay when it lasts at least the minimum stay;
/// ventilation starting within the vent window of ICU admission; no sepsis
/// diagnosis on the admission; no vasopressor input on the stay; no arterial
/// catheter charted on the admission before ICU admission; first care unit
/// not excluded.
pub fn build_cohort(store: &EhrStore, config: &StudyConfig) -> Result<Cohort> {
    config.validate()?;
    let sepsis = config.sepsis_matchers()?;
    let mut first_stay: BTreeMap<SubjectId, (Timestamp, IcuStayId)> = BTreeMap::new();
    for s in store.icustays() {
        let key = (s.intime, s.icustay_id);
        first_stay
            .entry(s.subject_id)
            .and_modify(|k| *k = (*k).min(key))
            .or_insert(key);
    }

    let mut stays: Vec<&IcuStayRecord> = store.icustays().iter().collect();
    stays.sort_by_key(|s| s.icustay_id);
    let mut flowchart = CohortFlowchart::default();
    let mut record = |name: String, stays: &[&IcuStayRecord]| {
        flowchart.stages.push(Stage {
            name,
            remaining: stays.len() as u64,
            members: stays.iter().map(|s| s.icustay_id).collect(),
        });
    };

    stays.retain(|s| {
        store
            .patient(s.subject_id)
            .is_some_and(|p| age_years(&p.dob, &s.intime) > config.adult_min_age)
            && store.input_events_of_stay(s.icustay_id).next().is_some()
    });
    record(format!("adults older than {} with administration records", config.adult_min_age), &stays);

    let min_stay = Duration::hours(config.min_stay_hours);
    stays.retain(|s| first_stay[&s.subject_id].1 == s.icustay_id && s.outtime - s.intime >= min_stay);
    record(format!("first ICU stay per patient lasting at least {} h", config.min_stay_hours), &stays);

    let window = Duration::hours(config.vent_window_hours);
    let mut onsets = BTreeMap::new();
    stays.retain(|s| match ventilation_onset(store, s.icustay_id, config) {
        Some(t) if t <= s.intime + window => {
            onsets.insert(s.icustay_id, t);
            true
        }
        _ => false,
    });
    record(format!("ventilated within {} h of ICU admission", config.vent_window_hours), &stays);

    stays.retain(|s| !has_code(store, s.hadm_id, &sepsis));
    record("no sepsis diagnosis".into(), &stays);

    stays.retain(|s| {
        !store
            .input_events_of_stay(s.icustay_id)
            .any(|e| config.vasopressor_items.contains(&e.itemid))
    });
    record("no vasopressor administration".into(), &stays);

    stays.retain(|s| {
        !store
            .chart_events_of_admission(s.hadm_id)
            .any(|e| config.iac_items.contains(&e.itemid) && e.charttime < s.intime)
    });
    record("no arterial catheter before ICU admission".into(), &stays);

    stays.retain(|s| !config.excluded_units.contains(&s.first_careunit));
    let excluded: Vec<&str> = config.excluded_units.iter().map(|u| u.as_str()).collect();
    record(format!("first care unit not in {}", excluded.join(", ")), &stays);

    let mut warnings = Vec::new();
    if stays.is_empty() {
        warnings.push("study cohort is empty after all inclusion stages".to_string());
    }
    Ok(Cohort {
        stays: stays
            .iter()
            .map(|s| StudyStay {
                icustay_id: s.icustay_id,
                hadm_id: s.hadm_id,
                subject_id: s.subject_id,
                unit: s.first_careunit,
                intime: s.intime,
                outtime: s.outtime,
                vent_onset: onsets[&s.icustay_id],
            })
            .collect(),
        flowchart,
        warnings,
    })
}

/// Treatment label per stay: an arterial catheter charted on the stay at or
/// after ventilation onset.
pub fn assign_groups(store: &EhrStore, stays: &[StudyStay], config: &StudyConfig) -> Vec<bool> {
    stays
        .iter()
        .map(|s| {
            store
                .chart_events_of_stay(s.icustay_id)
                .any(|e| config.iac_items.contains(&e.itemid) && e.charttime >= s.vent_onset)
        })
        .collect()
}
