use std::fmt;
use std::str::FromStr;

use compact_str::CompactString;
use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

pub type SubjectId = i64;
pub type HadmId = i64;
pub type IcuStayId = i64;
pub type ItemId = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "M" => Ok(Gender::M),
            "F" => Ok(Gender::F),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::M => "M",
            Gender::F => "F",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AdmissionType {
    Emergency,
    Elective,
    Urgent,
    Newborn,
}

impl FromStr for AdmissionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "EMERGENCY" => Ok(Self::Emergency),
            "ELECTIVE" => Ok(Self::Elective),
            "URGENT" => Ok(Self::Urgent),
            "NEWBORN" => Ok(Self::Newborn),
            other => Err(format!("unknown admission type {other:?}")),
        }
    }
}

impl fmt::Display for AdmissionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Emergency => "EMERGENCY",
            Self::Elective => "ELECTIVE",
            Self::Urgent => "URGENT",
            Self::Newborn => "NEWBORN",
        })
    }
}

/// Critical care unit types. Closed set; anything else is rejected at
/// ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CareUnit {
    MICU,
    SICU,
    CCU,
    CSRU,
    TSICU,
    NICU,
}

impl CareUnit {
    pub const ALL: [CareUnit; 6] = [
        CareUnit::MICU,
        CareUnit::SICU,
        CareUnit::CCU,
        CareUnit::CSRU,
        CareUnit::TSICU,
        CareUnit::NICU,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CareUnit::MICU => "MICU",
            CareUnit::SICU => "SICU",
            CareUnit::CCU => "CCU",
            CareUnit::CSRU => "CSRU",
            CareUnit::TSICU => "TSICU",
            CareUnit::NICU => "NICU",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl FromStr for CareUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CareUnit::ALL
            .into_iter()
            .find(|u| u.as_str() == s)
            .ok_or_else(|| format!("unknown care unit {s:?}"))
    }
}

impl fmt::Display for CareUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A transfer endpoint: either an ICU of known type or a free-text ward.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    Icu(CareUnit),
    Ward(CompactString),
}

impl Location {
    pub fn parse(raw: &str) -> Location {
        match raw.parse::<CareUnit>() {
            Ok(unit) => Location::Icu(unit),
            Err(_) => Location::Ward(raw.into()),
        }
    }

    pub fn care_unit(&self) -> Option<CareUnit> {
        match self {
            Location::Icu(u) => Some(*u),
            Location::Ward(_) => None,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Icu(u) => u.fmt(f),
            Location::Ward(w) => f.write_str(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub subject_id: SubjectId,
    pub gender: Gender,
    pub dob: Timestamp,
    /// Merged date of death from hospital and external sources.
    pub dod: Option<Timestamp>,
    pub dod_hosp: Option<Timestamp>,
    pub expire_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionRecord {
    pub hadm_id: HadmId,
    pub subject_id: SubjectId,
    pub admittime: Timestamp,
    pub dischtime: Timestamp,
    pub deathtime: Option<Timestamp>,
    pub admission_type: AdmissionType,
    pub diagnosis: String,
    pub hospital_expire_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcuStayRecord {
    pub icustay_id: IcuStayId,
    pub hadm_id: HadmId,
    pub subject_id: SubjectId,
    pub first_careunit: CareUnit,
    pub last_careunit: CareUnit,
    pub intime: Timestamp,
    pub outtime: Timestamp,
    /// Fractional days between intime and outtime.
    pub los_days: f64,
}

/// A timestamped observation. Shared by the chart, lab and output tables.
///
/// Lab events normally carry no ICU stay link; they belong to the hospital
/// admission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub subject_id: SubjectId,
    pub hadm_id: HadmId,
    pub icustay_id: Option<IcuStayId>,
    pub itemid: ItemId,
    pub charttime: Timestamp,
    pub value: CompactString,
    pub valuenum: Option<f64>,
    pub valueuom: CompactString,
}

pub type ChartEvent = MeasurementEvent;
pub type LabEvent = MeasurementEvent;
pub type OutputEvent = MeasurementEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    pub subject_id: SubjectId,
    pub hadm_id: HadmId,
    pub icustay_id: Option<IcuStayId>,
    pub itemid: ItemId,
    pub starttime: Timestamp,
    pub endtime: Timestamp,
    pub amount: f64,
    pub amountuom: CompactString,
    pub rate: Option<f64>,
    pub rateuom: CompactString,
}

/// One coded diagnosis or procedure. `seq_num` 1 is the primary code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedRecord {
    pub subject_id: SubjectId,
    pub hadm_id: HadmId,
    pub seq_num: u32,
    pub icd9_code: CompactString,
}

pub type DiagnosisRecord = CodedRecord;
pub type ProcedureRecord = CodedRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryItem {
    pub itemid: ItemId,
    pub label: String,
    pub category: String,
    pub unitname: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub subject_id: SubjectId,
    pub hadm_id: HadmId,
    pub icustay_id: Option<IcuStayId>,
    pub prev_careunit: Option<Location>,
    pub curr_careunit: Option<Location>,
    pub intime: Timestamp,
    pub outtime: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalloutRecord {
    pub subject_id: SubjectId,
    pub hadm_id: HadmId,
    pub curr_careunit: Option<Location>,
    pub callout_time: Timestamp,
    pub discharge_time: Option<Timestamp>,
}
