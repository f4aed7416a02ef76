//! Incremental construction of small stores, mainly for fixtures and examples.

use compact_str::CompactString;

use super::*;
use crate::items::default_dictionary;
use crate::time::{parse_timestamp, Timestamp};

/// Parse a `YYYY-MM-DD HH:MM:SS` literal, panicking on malformed input.
pub fn ts(raw: &str) -> Timestamp {
    parse_timestamp(raw).unwrap_or_else(|e| panic!("bad timestamp literal {raw:?}: {e}"))
}

/// Builds [`Tables`] row by row, filling foreign keys from the parent rows.
///
/// Starts with the default item dictionary. Methods panic when a parent row
/// is missing.
#[derive(Debug, Clone)]
pub struct StoreBuilder {
    tables: Tables,
}

impl Default for StoreBuilder {
    fn default() -> Self {
        StoreBuilder {
            tables: Tables {
                items: default_dictionary(),
                ..Tables::default()
            },
        }
    }
}

impl StoreBuilder {
    pub fn new() -> Self {
        StoreBuilder::default()
    }

    pub fn patient(mut self, subject_id: SubjectId, gender: Gender, dob: &str) -> Self {
        self.tables.patients.push(PatientRecord {
            subject_id,
            gender,
            dob: ts(dob),
            dod: None,
            dod_hosp: None,
            expire_flag: false,
        });
        self
    }

    pub fn admission(mut self, hadm_id: HadmId, subject_id: SubjectId, admittime: &str, dischtime: &str) -> Self {
        self.tables.admissions.push(AdmissionRecord {
            hadm_id,
            subject_id,
            admittime: ts(admittime),
            dischtime: ts(dischtime),
            deathtime: None,
            admission_type: AdmissionType::Emergency,
            diagnosis: String::new(),
            hospital_expire_flag: false,
        });
        self
    }

    pub fn icustay(mut self, icustay_id: IcuStayId, hadm_id: HadmId, unit: CareUnit, intime: &str, outtime: &str) -> Self {
        let subject_id = self.subject_of(hadm_id);
        let (intime, outtime) = (ts(intime), ts(outtime));
        self.tables.icustays.push(IcuStayRecord {
            icustay_id,
            hadm_id,
            subject_id,
            first_careunit: unit,
            last_careunit: unit,
            intime,
            outtime,
            los_days: crate::time::days_between(&intime, &outtime),
        });
        self
    }

    /// Record a death outside hospital: sets `dod` and `expire_flag` only.
    pub fn death(mut self, subject_id: SubjectId, at: &str) -> Self {
        let p = self.patient_mut(subject_id);
        p.dod = Some(ts(at));
        p.expire_flag = true;
        self
    }

    /// Record an in-hospital death: sets the admission's deathtime and flag,
    /// moves discharge to the death time and fills the patient's `dod`.
    pub fn hospital_death(mut self, hadm_id: HadmId, at: &str) -> Self {
        let t = ts(at);
        let a = self
            .tables
            .admissions
            .iter_mut()
            .find(|a| a.hadm_id == hadm_id)
            .unwrap_or_else(|| panic!("no admission {hadm_id}"));
        a.deathtime = Some(t);
        a.dischtime = t;
        a.hospital_expire_flag = true;
        let subject = a.subject_id;
        let p = self.patient_mut(subject);
        p.dod = Some(t);
        p.dod_hosp = Some(t);
        p.expire_flag = true;
        self
    }

    /// Append a diagnosis with the next `seq_num` for the admission.
    pub fn diagnosis(mut self, hadm_id: HadmId, code: &str) -> Self {
        let subject_id = self.subject_of(hadm_id);
        let seq_num = self.tables.diagnoses.iter().filter(|d| d.hadm_id == hadm_id).count() as u32 + 1;
        self.tables.diagnoses.push(CodedRecord {
            subject_id,
            hadm_id,
            seq_num,
            icd9_code: code.into(),
        });
        self
    }

    pub fn procedure(mut self, hadm_id: HadmId, code: &str) -> Self {
        let subject_id = self.subject_of(hadm_id);
        let seq_num = self.tables.procedures.iter().filter(|d| d.hadm_id == hadm_id).count() as u32 + 1;
        self.tables.procedures.push(CodedRecord {
            subject_id,
            hadm_id,
            seq_num,
            icd9_code: code.into(),
        });
        self
    }

    fn measurement(&self, hadm_id: HadmId, icustay_id: Option<IcuStayId>, itemid: ItemId, at: &str, value: &str) -> MeasurementEvent {
        MeasurementEvent {
            subject_id: self.subject_of(hadm_id),
            hadm_id,
            icustay_id,
            itemid,
            charttime: ts(at),
            value: CompactString::from(value),
            valuenum: value.trim().parse().ok(),
            valueuom: self.unit_of(itemid),
        }
    }

    /// Chart event on an ICU stay. Numeric text also fills `valuenum`.
    pub fn chart(mut self, icustay_id: IcuStayId, itemid: ItemId, at: &str, value: &str) -> Self {
        let hadm = self.hadm_of(icustay_id);
        let e = self.measurement(hadm, Some(icustay_id), itemid, at, value);
        self.tables.chartevents.push(e);
        self
    }

    /// Lab event on an admission, linked to no ICU stay.
    pub fn lab(mut self, hadm_id: HadmId, itemid: ItemId, at: &str, value: &str) -> Self {
        let e = self.measurement(hadm_id, None, itemid, at, value);
        self.tables.labevents.push(e);
        self
    }

    pub fn output(mut self, icustay_id: IcuStayId, itemid: ItemId, at: &str, value: &str) -> Self {
        let hadm = self.hadm_of(icustay_id);
        let e = self.measurement(hadm, Some(icustay_id), itemid, at, value);
        self.tables.outputevents.push(e);
        self
    }

    pub fn input(mut self, icustay_id: IcuStayId, itemid: ItemId, start: &str, end: &str, amount: f64) -> Self {
        let hadm_id = self.hadm_of(icustay_id);
        let unit = self.unit_of(itemid);
        self.tables.inputevents.push(InputEvent {
            subject_id: self.subject_of(hadm_id),
            hadm_id,
            icustay_id: Some(icustay_id),
            itemid,
            starttime: ts(start),
            endtime: ts(end),
            amount,
            amountuom: unit,
            rate: None,
            rateuom: CompactString::default(),
        });
        self
    }

    pub fn item(mut self, itemid: ItemId, label: &str) -> Self {
        self.tables.items.push(DictionaryItem {
            itemid,
            label: label.into(),
            category: String::new(),
            unitname: String::new(),
        });
        self
    }

    /// Direct access for edits the builder methods do not cover.
    pub fn tables_mut(&mut self) -> &mut Tables {
        &mut self.tables
    }

    pub fn tables(self) -> Tables {
        self.tables
    }

    pub fn build(self) -> EhrStore {
        self.tables.freeze()
    }

    fn subject_of(&self, hadm_id: HadmId) -> SubjectId {
        self.tables
            .admissions
            .iter()
            .find(|a| a.hadm_id == hadm_id)
            .unwrap_or_else(|| panic!("no admission {hadm_id}"))
            .subject_id
    }

    fn hadm_of(&self, icustay_id: IcuStayId) -> HadmId {
        self.tables
            .icustays
            .iter()
            .find(|s| s.icustay_id == icustay_id)
            .unwrap_or_else(|| panic!("no ICU stay {icustay_id}"))
            .hadm_id
    }

    fn unit_of(&self, itemid: ItemId) -> CompactString {
        self.tables
            .items
            .iter()
            .find(|i| i.itemid == itemid)
            .map(|i| CompactString::from(i.unitname.as_str()))
            .unwrap_or_default()
    }

    fn patient_mut(&mut self, subject_id: SubjectId) -> &mut PatientRecord {
        self.tables
            .patients
            .iter_mut()
            .find(|p| p.subject_id == subject_id)
            .unwrap_or_else(|| panic!("no patient {subject_id}"))
    }
}
