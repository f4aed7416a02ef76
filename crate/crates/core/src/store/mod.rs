//! Relational model for the core ICU tables, with secondary indexes.
//!
//! Eleven tables are implemented (plus the optional callout table): the ones
//! the query catalogue touches. A store is assembled from [`Tables`] and
//! frozen into an [`EhrStore`], after which it is read-only and may be shared
//! across threads freely.

mod builder;
mod csvio;
mod records;
mod validate;

use std::collections::HashMap;

pub use builder::{ts, StoreBuilder};
pub use csvio::{ingest_csv, read_tables, write_csv, IngestReport, Strictness, TableName};
pub use records::*;
pub use validate::{validate_store, validate_tables, IntegrityReport, Violation, ViolationKind};

use crate::time::Timestamp;

/// Raw table contents. Row order is significant and preserved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    pub patients: Vec<PatientRecord>,
    pub admissions: Vec<AdmissionRecord>,
    pub icustays: Vec<IcuStayRecord>,
    pub chartevents: Vec<ChartEvent>,
    pub labevents: Vec<LabEvent>,
    pub outputevents: Vec<OutputEvent>,
    pub inputevents: Vec<InputEvent>,
    pub diagnoses: Vec<DiagnosisRecord>,
    pub procedures: Vec<ProcedureRecord>,
    pub items: Vec<DictionaryItem>,
    pub transfers: Vec<TransferRecord>,
    pub callouts: Vec<CalloutRecord>,
}

impl Tables {
    pub fn freeze(self) -> EhrStore {
        EhrStore::freeze(self)
    }
}

type Postings = HashMap<i64, Vec<u32>>;

#[derive(Debug, Default)]
struct Indexes {
    patient: HashMap<SubjectId, u32>,
    admission: HashMap<HadmId, u32>,
    icustay: HashMap<IcuStayId, u32>,
    item: HashMap<ItemId, u32>,
    admissions_by_subject: Postings,
    icustays_by_subject: Postings,
    icustays_by_hadm: Postings,
    chart_by_stay: Postings,
    chart_by_hadm: Postings,
    output_by_stay: Postings,
    input_by_stay: Postings,
    input_by_hadm: Postings,
    lab_by_hadm: Postings,
    diagnoses_by_hadm: Postings,
    procedures_by_hadm: Postings,
    transfers_by_hadm: Postings,
}

fn post<T>(rows: &[T], key: impl Fn(&T) -> Option<i64>) -> Postings {
    let mut map: Postings = HashMap::new();
    for (i, row) in rows.iter().enumerate() {
        if let Some(k) = key(row) {
            map.entry(k).or_default().push(i as u32);
        }
    }
    map
}

fn unique<T>(rows: &[T], key: impl Fn(&T) -> i64) -> HashMap<i64, u32> {
    let mut map = HashMap::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        // First occurrence wins; duplicates are reported by validation.
        map.entry(key(row)).or_insert(i as u32);
    }
    map
}

/// Immutable store with all secondary indexes built.
#[derive(Debug)]
pub struct EhrStore {
    tables: Tables,
    idx: Indexes,
}

impl EhrStore {
    pub fn freeze(tables: Tables) -> EhrStore {
        let t = &tables;
        let mut idx = Indexes {
            patient: unique(&t.patients, |r| r.subject_id),
            admission: unique(&t.admissions, |r| r.hadm_id),
            icustay: unique(&t.icustays, |r| r.icustay_id),
            item: unique(&t.items, |r| r.itemid),
            admissions_by_subject: post(&t.admissions, |r| Some(r.subject_id)),
            icustays_by_subject: post(&t.icustays, |r| Some(r.subject_id)),
            icustays_by_hadm: post(&t.icustays, |r| Some(r.hadm_id)),
            chart_by_stay: post(&t.chartevents, |r| r.icustay_id),
            chart_by_hadm: post(&t.chartevents, |r| Some(r.hadm_id)),
            output_by_stay: post(&t.outputevents, |r| r.icustay_id),
            input_by_stay: post(&t.inputevents, |r| r.icustay_id),
            input_by_hadm: post(&t.inputevents, |r| Some(r.hadm_id)),
            lab_by_hadm: post(&t.labevents, |r| Some(r.hadm_id)),
            diagnoses_by_hadm: post(&t.diagnoses, |r| Some(r.hadm_id)),
            procedures_by_hadm: post(&t.procedures, |r| Some(r.hadm_id)),
            transfers_by_hadm: post(&t.transfers, |r| Some(r.hadm_id)),
        };
        for list in idx.diagnoses_by_hadm.values_mut() {
            list.sort_by_key(|&i| t.diagnoses[i as usize].seq_num);
        }
        for list in idx.procedures_by_hadm.values_mut() {
            list.sort_by_key(|&i| t.procedures[i as usize].seq_num);
        }
        for list in idx.icustays_by_hadm.values_mut() {
            list.sort_by_key(|&i| (t.icustays[i as usize].intime, t.icustays[i as usize].icustay_id));
        }
        for list in idx.icustays_by_subject.values_mut() {
            list.sort_by_key(|&i| (t.icustays[i as usize].intime, t.icustays[i as usize].icustay_id));
        }
        for list in idx.admissions_by_subject.values_mut() {
            list.sort_by_key(|&i| (t.admissions[i as usize].admittime, t.admissions[i as usize].hadm_id));
        }
        EhrStore { tables, idx }
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn into_tables(self) -> Tables {
        self.tables
    }

    pub fn patients(&self) -> &[PatientRecord] {
        &self.tables.patients
    }

    pub fn admissions(&self) -> &[AdmissionRecord] {
        &self.tables.admissions
    }

    pub fn icustays(&self) -> &[IcuStayRecord] {
        &self.tables.icustays
    }

    pub fn items(&self) -> &[DictionaryItem] {
        &self.tables.items
    }

    pub fn patient(&self, id: SubjectId) -> Option<&PatientRecord> {
        self.idx.patient.get(&id).map(|&i| &self.tables.patients[i as usize])
    }

    pub fn admission(&self, id: HadmId) -> Option<&AdmissionRecord> {
        self.idx.admission.get(&id).map(|&i| &self.tables.admissions[i as usize])
    }

    pub fn icustay(&self, id: IcuStayId) -> Option<&IcuStayRecord> {
        self.idx.icustay.get(&id).map(|&i| &self.tables.icustays[i as usize])
    }

    pub fn item(&self, id: ItemId) -> Option<&DictionaryItem> {
        self.idx.item.get(&id).map(|&i| &self.tables.items[i as usize])
    }

    /// Admissions of a patient ordered by admission time.
    pub fn admissions_of(&self, subject: SubjectId) -> impl Iterator<Item = &AdmissionRecord> {
        gather(&self.idx.admissions_by_subject, subject, &self.tables.admissions)
    }

    /// ICU stays of a patient ordered by intime.
    pub fn icustays_of_subject(&self, subject: SubjectId) -> impl Iterator<Item = &IcuStayRecord> {
        gather(&self.idx.icustays_by_subject, subject, &self.tables.icustays)
    }

    /// ICU stays of an admission ordered by intime.
    pub fn icustays_of_admission(&self, hadm: HadmId) -> impl Iterator<Item = &IcuStayRecord> {
        gather(&self.idx.icustays_by_hadm, hadm, &self.tables.icustays)
    }

    pub fn chart_events_of_stay(&self, stay: IcuStayId) -> impl Iterator<Item = &ChartEvent> {
        gather(&self.idx.chart_by_stay, stay, &self.tables.chartevents)
    }

    pub fn chart_events_of_admission(&self, hadm: HadmId) -> impl Iterator<Item = &ChartEvent> {
        gather(&self.idx.chart_by_hadm, hadm, &self.tables.chartevents)
    }

    pub fn output_events_of_stay(&self, stay: IcuStayId) -> impl Iterator<Item = &OutputEvent> {
        gather(&self.idx.output_by_stay, stay, &self.tables.outputevents)
    }

    pub fn input_events_of_stay(&self, stay: IcuStayId) -> impl Iterator<Item = &InputEvent> {
        gather(&self.idx.input_by_stay, stay, &self.tables.inputevents)
    }

    pub fn input_events_of_admission(&self, hadm: HadmId) -> impl Iterator<Item = &InputEvent> {
        gather(&self.idx.input_by_hadm, hadm, &self.tables.inputevents)
    }

    pub fn lab_events_of_admission(&self, hadm: HadmId) -> impl Iterator<Item = &LabEvent> {
        gather(&self.idx.lab_by_hadm, hadm, &self.tables.labevents)
    }

    /// Diagnoses of an admission ordered by priority (`seq_num`).
    pub fn diagnoses_of_admission(&self, hadm: HadmId) -> impl Iterator<Item = &DiagnosisRecord> {
        gather(&self.idx.diagnoses_by_hadm, hadm, &self.tables.diagnoses)
    }

    pub fn procedures_of_admission(&self, hadm: HadmId) -> impl Iterator<Item = &ProcedureRecord> {
        gather(&self.idx.procedures_by_hadm, hadm, &self.tables.procedures)
    }

    pub fn transfers_of_admission(&self, hadm: HadmId) -> impl Iterator<Item = &TransferRecord> {
        gather(&self.idx.transfers_by_hadm, hadm, &self.tables.transfers)
    }

    /// Best available death time for a patient, optionally in the context of
    /// one admission: the hospital `deathtime` wins when the admission
    /// recorded one, otherwise the merged `dod`.
    pub fn death_time(&self, subject: SubjectId, admission: Option<&AdmissionRecord>) -> Option<Timestamp> {
        if let Some(t) = admission.and_then(|a| a.deathtime) {
            return Some(t);
        }
        self.patient(subject).and_then(|p| p.dod)
    }

    pub fn row_counts(&self) -> Vec<(TableName, usize)> {
        let t = &self.tables;
        vec![
            (TableName::Patients, t.patients.len()),
            (TableName::Admissions, t.admissions.len()),
            (TableName::IcuStays, t.icustays.len()),
            (TableName::ChartEvents, t.chartevents.len()),
            (TableName::LabEvents, t.labevents.len()),
            (TableName::OutputEvents, t.outputevents.len()),
            (TableName::InputEvents, t.inputevents.len()),
            (TableName::Diagnoses, t.diagnoses.len()),
            (TableName::Procedures, t.procedures.len()),
            (TableName::Items, t.items.len()),
            (TableName::Transfers, t.transfers.len()),
            (TableName::Callout, t.callouts.len()),
        ]
    }
}

fn gather<'a, T>(index: &'a Postings, key: i64, rows: &'a [T]) -> impl Iterator<Item = &'a T> + 'a {
    index
        .get(&key)
        .map(|v| v.as_slice())
        .unwrap_or(&[])
        .iter()
        .map(move |&i| &rows[i as usize])
}

#[cfg(test)]
mod tests;
