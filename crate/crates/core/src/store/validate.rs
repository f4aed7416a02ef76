use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use chrono::Duration;
use serde::Serialize;

use super::records::*;
use super::{EhrStore, TableName, Tables};
use crate::time::days_between;

const SAMPLE_CAP: usize = 50;
const LOS_TOLERANCE_DAYS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateKey,
    ForeignKey,
    UnknownItem,
    TimeOrdering,
    ExpireFlag,
    StayWindow,
    LengthOfStay,
    SeqNum,
    ValueParse,
    EmptyLabel,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub table: TableName,
    /// Zero-based row position within the table.
    pub row: usize,
    pub message: String,
}

/// Per-invariant violation counts, with a capped sample of the findings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IntegrityReport {
    pub counts: BTreeMap<ViolationKind, usize>,
    pub violations: Vec<Violation>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

struct Collector {
    report: IntegrityReport,
    cap: usize,
}

impl Collector {
    fn push(&mut self, kind: ViolationKind, table: TableName, row: usize, message: impl FnOnce() -> String) {
        *self.report.counts.entry(kind).or_default() += 1;
        if self.report.violations.len() < self.cap {
            self.report.violations.push(Violation {
                kind,
                table,
                row,
                message: message(),
            });
        }
    }
}

/// Check every store invariant. The report is empty iff the store is valid.
pub fn validate_store(store: &EhrStore) -> IntegrityReport {
    check_tables(store.tables(), SAMPLE_CAP)
}

/// [`validate_store`] on tables that have not been frozen into a store.
pub fn validate_tables(tables: &Tables) -> IntegrityReport {
    check_tables(tables, SAMPLE_CAP)
}

pub(crate) fn check_tables(t: &Tables, cap: usize) -> IntegrityReport {
    use TableName as T;
    use ViolationKind as V;
    let mut c = Collector {
        report: IntegrityReport::default(),
        cap,
    };

    let mut subjects = HashSet::new();
    for (i, p) in t.patients.iter().enumerate() {
        if !subjects.insert(p.subject_id) {
            c.push(V::DuplicateKey, T::Patients, i, || format!("duplicate SUBJECT_ID {}", p.subject_id));
        }
        if matches!(p.dod, Some(d) if d < p.dob) {
            c.push(V::TimeOrdering, T::Patients, i, || format!("subject {}: DOD before DOB", p.subject_id));
        }
        if p.expire_flag != p.dod.is_some() {
            c.push(V::ExpireFlag, T::Patients, i, || {
                format!("subject {}: EXPIRE_FLAG disagrees with DOD", p.subject_id)
            });
        }
    }

    let mut admissions: HashMap<HadmId, &AdmissionRecord> = HashMap::new();
    for (i, a) in t.admissions.iter().enumerate() {
        if admissions.insert(a.hadm_id, a).is_some() {
            c.push(V::DuplicateKey, T::Admissions, i, || format!("duplicate HADM_ID {}", a.hadm_id));
        }
        if !subjects.contains(&a.subject_id) {
            c.push(V::ForeignKey, T::Admissions, i, || {
                format!("admission {} references missing subject {}", a.hadm_id, a.subject_id)
            });
        }
        if a.dischtime < a.admittime {
            c.push(V::TimeOrdering, T::Admissions, i, || format!("admission {}: DISCHTIME before ADMITTIME", a.hadm_id));
        }
        let died_inside = matches!(a.deathtime, Some(d) if a.admittime <= d && d <= a.dischtime);
        if a.hospital_expire_flag != died_inside {
            c.push(V::ExpireFlag, T::Admissions, i, || {
                format!("admission {}: HOSPITAL_EXPIRE_FLAG disagrees with DEATHTIME", a.hadm_id)
            });
        }
    }

    let mut stays: HashMap<IcuStayId, &IcuStayRecord> = HashMap::new();
    for (i, s) in t.icustays.iter().enumerate() {
        if stays.insert(s.icustay_id, s).is_some() {
            c.push(V::DuplicateKey, T::IcuStays, i, || format!("duplicate ICUSTAY_ID {}", s.icustay_id));
        }
        match admissions.get(&s.hadm_id) {
            Some(a) if a.subject_id == s.subject_id => {
                let slack = Duration::hours(24);
                if s.intime < a.admittime - slack || s.outtime > a.dischtime + slack {
                    c.push(V::StayWindow, T::IcuStays, i, || {
                        format!("icustay {} lies outside admission {} window", s.icustay_id, a.hadm_id)
                    });
                }
            }
            _ => c.push(V::ForeignKey, T::IcuStays, i, || {
                format!("icustay {} references missing admission {}", s.icustay_id, s.hadm_id)
            }),
        }
        if s.outtime < s.intime {
            c.push(V::TimeOrdering, T::IcuStays, i, || format!("icustay {}: OUTTIME before INTIME", s.icustay_id));
        }
        let los = days_between(&s.intime, &s.outtime);
        if s.los_days < 0.0 || (s.los_days - los).abs() > LOS_TOLERANCE_DAYS {
            c.push(V::LengthOfStay, T::IcuStays, i, || {
                format!("icustay {}: LOS {} != {los:.6}", s.icustay_id, s.los_days)
            });
        }
    }

    let mut items = HashSet::new();
    for (i, item) in t.items.iter().enumerate() {
        if !items.insert(item.itemid) {
            c.push(V::DuplicateKey, T::Items, i, || format!("duplicate ITEMID {}", item.itemid));
        }
        if item.label.trim().is_empty() {
            c.push(V::EmptyLabel, T::Items, i, || format!("item {} has an empty label", item.itemid));
        }
    }

    let keys = |subject: SubjectId, hadm: HadmId, stay: Option<IcuStayId>| -> Result<(), String> {
        match admissions.get(&hadm) {
            Some(a) if a.subject_id == subject => {}
            Some(_) => return Err(format!("admission {hadm} does not belong to subject {subject}")),
            None => return Err(format!("missing admission {hadm}")),
        }
        if let Some(id) = stay {
            match stays.get(&id) {
                Some(s) if s.hadm_id == hadm => {}
                Some(_) => return Err(format!("icustay {id} does not belong to admission {hadm}")),
                None => return Err(format!("missing icustay {id}")),
            }
        }
        Ok(())
    };

    for (table, rows) in [
        (T::ChartEvents, &t.chartevents),
        (T::LabEvents, &t.labevents),
        (T::OutputEvents, &t.outputevents),
    ] {
        for (i, e) in rows.iter().enumerate() {
            if let Err(m) = keys(e.subject_id, e.hadm_id, e.icustay_id) {
                c.push(V::ForeignKey, table, i, || m);
            }
            if !items.contains(&e.itemid) {
                c.push(V::UnknownItem, table, i, || format!("unknown ITEMID {}", e.itemid));
            }
            if let Some(num) = e.valuenum {
                let ok = e
                    .value
                    .trim()
                    .parse::<f64>()
                    .map(|v| v == num || (v - num).abs() <= 1e-9 * num.abs().max(1.0))
                    .unwrap_or(false);
                if !ok {
                    c.push(V::ValueParse, table, i, || format!("VALUENUM {num} does not parse from {:?}", e.value));
                }
            }
        }
    }

    for (i, e) in t.inputevents.iter().enumerate() {
        if let Err(m) = keys(e.subject_id, e.hadm_id, e.icustay_id) {
            c.push(V::ForeignKey, T::InputEvents, i, || m);
        }
        if !items.contains(&e.itemid) {
            c.push(V::UnknownItem, T::InputEvents, i, || format!("unknown ITEMID {}", e.itemid));
        }
        if e.endtime < e.starttime {
            c.push(V::TimeOrdering, T::InputEvents, i, || "ENDTIME before STARTTIME".to_string());
        }
    }

    for (table, rows) in [(T::Diagnoses, &t.diagnoses), (T::Procedures, &t.procedures)] {
        let mut pairs = HashSet::new();
        let mut by_hadm: BTreeMap<HadmId, Vec<(u32, usize)>> = BTreeMap::new();
        for (i, d) in rows.iter().enumerate() {
            if let Err(m) = keys(d.subject_id, d.hadm_id, None) {
                c.push(V::ForeignKey, table, i, || m);
            }
            if !pairs.insert((d.hadm_id, d.seq_num)) {
                c.push(V::DuplicateKey, table, i, || {
                    format!("duplicate (HADM_ID, SEQ_NUM) = ({}, {})", d.hadm_id, d.seq_num)
                });
            }
            by_hadm.entry(d.hadm_id).or_default().push((d.seq_num, i));
        }
        for (hadm, mut seqs) in by_hadm {
            seqs.sort_unstable();
            seqs.dedup_by_key(|s| s.0);
            if seqs.iter().enumerate().any(|(k, &(s, _))| s != k as u32 + 1) {
                let row = seqs[0].1;
                c.push(V::SeqNum, table, row, || format!("admission {hadm}: SEQ_NUM not contiguous from 1"));
            }
        }
    }

    for (i, r) in t.transfers.iter().enumerate() {
        if let Err(m) = keys(r.subject_id, r.hadm_id, r.icustay_id) {
            c.push(V::ForeignKey, T::Transfers, i, || m);
        }
        if matches!(r.outtime, Some(o) if o < r.intime) {
            c.push(V::TimeOrdering, T::Transfers, i, || "OUTTIME before INTIME".to_string());
        }
    }
    for (i, r) in t.callouts.iter().enumerate() {
        if let Err(m) = keys(r.subject_id, r.hadm_id, None) {
            c.push(V::ForeignKey, T::Callout, i, || m);
        }
        if matches!(r.discharge_time, Some(o) if o < r.callout_time) {
            c.push(V::TimeOrdering, T::Callout, i, || "OUTCOMETIME before CREATETIME".to_string());
        }
    }

    c.report
}
