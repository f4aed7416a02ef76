//! Date-shift de-identification, elderly age obfuscation and text scrubbing.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration};
use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{EhrStore, SubjectId, TableName, Tables};
use crate::time::{days_between, Timestamp, DAYS_PER_YEAR, ELDERLY_THRESHOLD_YEARS};

pub const DEFAULT_DRIFT_DAYS: f64 = 15.0;
pub const ELDERLY_RAW_AGE_YEARS: i64 = 300;
pub const REMOVED: &str = "[REMOVED]";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    /// Inclusive year range the first admission of each subject is moved into.
    pub window_start: i32,
    pub window_end: i32,
    /// Bound on |offset mod 365.25| in days.
    pub drift_days: f64,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        ShiftConfig {
            window_start: 2100,
            window_end: 2200,
            drift_days: DEFAULT_DRIFT_DAYS,
        }
    }
}

impl ShiftConfig {
    /// Whole-year shifts that move `reference_year` into the window.
    fn year_range(&self, reference_year: i32) -> Result<(i64, i64)> {
        if self.window_end - self.window_start < 2 {
            return Err(Error::Config(format!(
                "shift window {}:{} spans fewer than 2 years",
                self.window_start, self.window_end
            )));
        }
        // A 7-day grid always has a point within 3.5 days of any target.
        if !(self.drift_days >= 3.5) {
            return Err(Error::Config(format!(
                "drift bound {} days cannot be met by whole-week offsets",
                self.drift_days
            )));
        }
        let lo = i64::from(self.window_start - reference_year).max(1);
        let hi = i64::from(self.window_end - reference_year);
        if lo > hi {
            return Err(Error::Config(format!(
                "shift window {}:{} does not lie after reference year {reference_year}",
                self.window_start, self.window_end
            )));
        }
        Ok((lo, hi))
    }
}

/// Per-subject forward offsets in whole days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateShiftPlan {
    pub seed: u64,
    pub window: (i32, i32),
    pub offsets: BTreeMap<SubjectId, i64>,
}

impl DateShiftPlan {
    pub fn offset(&self, subject: SubjectId) -> Option<i64> {
        self.offsets.get(&subject).copied()
    }
}

/// Deviation of an offset from the nearest whole number of years, in days.
pub fn seasonal_drift(offset_days: i64) -> f64 {
    let r = (offset_days as f64).rem_euclid(DAYS_PER_YEAR);
    r.min(DAYS_PER_YEAR - r)
}

/// Offsets for `(subject, reference year)` pairs; each subject's reference
/// year lands in the window.
pub fn assign_offsets(
    subjects: impl IntoIterator<Item = (SubjectId, i32)>,
    seed: u64,
    config: &ShiftConfig,
) -> Result<DateShiftPlan> {
    let slack = config.drift_days - 3.5;
    let mut offsets = BTreeMap::new();
    for (subject, reference_year) in subjects {
        let (lo, hi) = config.year_range(reference_year)?;
        let mut rng = crate::rng::substream(seed, subject as u64);
        let years = rng.gen_range(lo..=hi);
        let jitter = if slack > 0.0 { rng.gen_range(-slack..=slack) } else { 0.0 };
        let weeks = ((years as f64 * DAYS_PER_YEAR + jitter) / 7.0).round() as i64;
        offsets.insert(subject, 7 * weeks);
    }
    Ok(DateShiftPlan {
        seed,
        window: (config.window_start, config.window_end),
        offsets,
    })
}

/// Year of the subject's earliest admission, or of the birth date for a
/// subject without admissions.
pub fn reference_year(store: &EhrStore, subject: SubjectId) -> Option<i32> {
    store
        .admissions_of(subject)
        .map(|a| a.admittime)
        .min()
        .or_else(|| store.patient(subject).map(|p| p.dob))
        .map(|t| t.year())
}

fn missing(table: TableName, line: usize, subject: SubjectId) -> Error {
    Error::Integrity {
        table: table.file_stem(),
        line: line as u64 + 2,
        message: format!("subject {subject} has no entry in the shift plan"),
    }
}

/// Move every timestamp of each subject forward by that subject's offset.
pub fn apply_shift(store: &EhrStore, plan: &DateShiftPlan) -> Result<EhrStore> {
    let mut t: Tables = store.tables().clone();
    let delta = |table: TableName, line: usize, subject: SubjectId| -> Result<Duration> {
        plan.offset(subject)
            .map(Duration::days)
            .ok_or_else(|| missing(table, line, subject))
    };
    fn shift(ts: &mut Timestamp, d: Duration) {
        *ts += d;
    }
    fn shift_opt(ts: &mut Option<Timestamp>, d: Duration) {
        if let Some(ts) = ts {
            *ts += d;
        }
    }

    for (i, r) in t.patients.iter_mut().enumerate() {
        let d = delta(TableName::Patients, i, r.subject_id)?;
        shift(&mut r.dob, d);
        shift_opt(&mut r.dod, d);
        shift_opt(&mut r.dod_hosp, d);
    }
    for (i, r) in t.admissions.iter_mut().enumerate() {
        let d = delta(TableName::Admissions, i, r.subject_id)?;
        shift(&mut r.admittime, d);
        shift(&mut r.dischtime, d);
        shift_opt(&mut r.deathtime, d);
    }
    for (i, r) in t.icustays.iter_mut().enumerate() {
        let d = delta(TableName::IcuStays, i, r.subject_id)?;
        shift(&mut r.intime, d);
        shift(&mut r.outtime, d);
    }
    for (table, rows) in [
        (TableName::ChartEvents, &mut t.chartevents),
        (TableName::LabEvents, &mut t.labevents),
        (TableName::OutputEvents, &mut t.outputevents),
    ] {
        for (i, r) in rows.iter_mut().enumerate() {
            let d = delta(table, i, r.subject_id)?;
            shift(&mut r.charttime, d);
        }
    }
    for (i, r) in t.inputevents.iter_mut().enumerate() {
        let d = delta(TableName::InputEvents, i, r.subject_id)?;
        shift(&mut r.starttime, d);
        shift(&mut r.endtime, d);
    }
    for (i, r) in t.transfers.iter_mut().enumerate() {
        let d = delta(TableName::Transfers, i, r.subject_id)?;
        shift(&mut r.intime, d);
        shift_opt(&mut r.outtime, d);
    }
    for (i, r) in t.callouts.iter_mut().enumerate() {
        let d = delta(TableName::Callout, i, r.subject_id)?;
        shift(&mut r.callout_time, d);
        shift_opt(&mut r.discharge_time, d);
    }
    Ok(t.freeze())
}

/// Move the birth date of every patient older than 89 at first admission so
/// that their raw age at that admission is 300 years. Returns the new store
/// and the number of patients altered.
pub fn obfuscate_elderly(store: &EhrStore) -> (EhrStore, usize) {
    let mut t = store.tables().clone();
    let mut altered = 0;
    for p in &mut t.patients {
        let Some(first) = store.admissions_of(p.subject_id).map(|a| a.admittime).min() else {
            continue;
        };
        if days_between(&p.dob, &first) / DAYS_PER_YEAR > ELDERLY_THRESHOLD_YEARS {
            let days = (ELDERLY_RAW_AGE_YEARS as f64 * DAYS_PER_YEAR).round() as i64;
            p.dob = first - Duration::days(days);
            altered += 1;
        }
    }
    (t.freeze(), altered)
}

/// Identifier patterns removed from free text.
#[derive(Debug, Clone)]
pub struct ScrubPatterns {
    patterns: Vec<Regex>,
}

const PHONE: &str = r"(?:\(\d{3}\)\s?|\b\d{3}[-. ])?\b\d{3}-\d{4}\b";
const ADDRESS: &str = r"\b\d{1,5}(?:\s+[A-Z][A-Za-z]+){1,3}\s+(?:Street|St|Avenue|Ave|Road|Rd|Boulevard|Blvd|Lane|Ln|Drive|Court|Ct|Way)\b\.?";

impl Default for ScrubPatterns {
    fn default() -> Self {
        ScrubPatterns::new(&[]).expect("builtin patterns")
    }
}

impl ScrubPatterns {
    /// Phone and street-address patterns plus whole-word matches of `names`.
    pub fn new(names: &[String]) -> Result<ScrubPatterns> {
        let mut patterns = vec![Regex::new(PHONE).unwrap(), Regex::new(ADDRESS).unwrap()];
        let names: Vec<String> = names
            .iter()
            .map(|n| n.trim())
            .filter(|n| !n.is_empty() && !REMOVED.contains(*n))
            .map(regex::escape)
            .collect();
        if !names.is_empty() {
            let re = Regex::new(&format!(r"\b(?:{})\b", names.join("|")))
                .map_err(|e| Error::Config(format!("name pattern: {e}")))?;
            patterns.push(re);
        }
        Ok(ScrubPatterns { patterns })
    }

    pub fn phone_only() -> ScrubPatterns {
        ScrubPatterns {
            patterns: vec![Regex::new(PHONE).unwrap()],
        }
    }
}

/// Replace every pattern occurrence with `[REMOVED]`. Returns the scrubbed
/// text and the number of replacements. Replacement is repeated until no
/// pattern matches, so scrubbing is idempotent.
pub fn scrub_text(text: &str, patterns: &ScrubPatterns) -> (String, usize) {
    let mut out = text.to_string();
    let mut count = 0;
    loop {
        let before = count;
        for re in &patterns.patterns {
            let n = re.find_iter(&out).count();
            if n > 0 {
                count += n;
                out = re.replace_all(&out, REMOVED).into_owned();
            }
        }
        if count == before {
            return (out, count);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeidConfig {
    pub seed: u64,
    pub shift: ShiftConfig,
    pub names: Vec<String>,
    pub obfuscate_elderly: bool,
}

impl Default for DeidConfig {
    fn default() -> Self {
        DeidConfig {
            seed: 0,
            shift: ShiftConfig::default(),
            names: Vec::new(),
            obfuscate_elderly: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeidReport {
    pub seed: u64,
    pub window: (i32, i32),
    pub drift_days: f64,
    pub subjects_shifted: usize,
    pub elderly_obfuscated: usize,
    pub fields_scrubbed: BTreeMap<String, usize>,
    pub max_seasonal_drift_days: f64,
}

fn scrub_tables(t: &mut Tables, patterns: &ScrubPatterns) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    let mut n = 0;
    for a in &mut t.admissions {
        let (s, k) = scrub_text(&a.diagnosis, patterns);
        if k > 0 {
            a.diagnosis = s;
            n += k;
        }
    }
    counts.insert(TableName::Admissions.file_stem().to_string(), n);
    for (table, rows) in [
        (TableName::ChartEvents, &mut t.chartevents),
        (TableName::LabEvents, &mut t.labevents),
    ] {
        let mut n = 0;
        for r in rows.iter_mut().filter(|r| r.valuenum.is_none()) {
            let (s, k) = scrub_text(&r.value, patterns);
            if k > 0 {
                r.value = s.into();
                n += k;
            }
        }
        counts.insert(table.file_stem().to_string(), n);
    }
    counts
}

/// Obfuscate elderly ages, shift all dates and scrub free text.
pub fn deidentify(store: &EhrStore, config: &DeidConfig) -> Result<(EhrStore, DeidReport)> {
    let patterns = ScrubPatterns::new(&config.names)?;
    let subjects = store.patients().iter().map(|p| {
        let year = reference_year(store, p.subject_id).unwrap_or(config.shift.window_start - 1);
        (p.subject_id, year)
    });
    let plan = assign_offsets(subjects.collect::<Vec<_>>(), config.seed, &config.shift)?;
    let (aged, elderly) = if config.obfuscate_elderly {
        obfuscate_elderly(store)
    } else {
        (EhrStore::freeze(store.tables().clone()), 0)
    };
    let shifted = apply_shift(&aged, &plan)?;
    let mut tables = shifted.into_tables();
    let fields_scrubbed = scrub_tables(&mut tables, &patterns);
    let report = DeidReport {
        seed: config.seed,
        window: plan.window,
        drift_days: config.shift.drift_days,
        subjects_shifted: plan.offsets.len(),
        elderly_obfuscated: elderly,
        fields_scrubbed,
        max_seasonal_drift_days: plan.offsets.values().map(|&o| seasonal_drift(o)).fold(0.0, f64::max),
    };
    Ok((tables.freeze(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::*;
    use crate::time::{age_years, parse_timestamp};
    use chrono::Timelike;

    fn ts(s: &str) -> Timestamp {
        parse_timestamp(s).unwrap()
    }

    fn store(dob: &str, admit: &str) -> EhrStore {
        let t = Tables {
            patients: vec![PatientRecord {
                subject_id: 1,
                gender: Gender::F,
                dob: ts(dob),
                dod: None,
                dod_hosp: None,
                expire_flag: false,
            }],
            admissions: vec![AdmissionRecord {
                hadm_id: 10,
                subject_id: 1,
                admittime: ts(admit),
                dischtime: ts(admit) + Duration::days(3),
                deathtime: None,
                admission_type: AdmissionType::Emergency,
                diagnosis: "CHEST PAIN".into(),
                hospital_expire_flag: false,
            }],
            ..Tables::default()
        };
        t.freeze()
    }

    #[test]
    fn single_subject_offset() {
        let plan = assign_offsets([(1, 2005)], 42, &ShiftConfig::default()).unwrap();
        let o = plan.offset(1).unwrap();
        assert!(o > 0);
        assert_eq!(o % 7, 0);
        assert!(seasonal_drift(o) <= 15.0);
        let year = 2005 + (o as f64 / DAYS_PER_YEAR).round() as i32;
        assert!((2100..=2200).contains(&year));
    }

    #[test]
    fn plans_are_deterministic() {
        let cfg = ShiftConfig::default();
        let a = assign_offsets((1..50).map(|s| (s, 2005)), 7, &cfg).unwrap();
        let b = assign_offsets((1..50).map(|s| (s, 2005)), 7, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = assign_offsets((1..50).map(|s| (s, 2005)), 8, &cfg).unwrap();
        assert_ne!(a.offsets, c.offsets);
    }

    #[test]
    fn narrow_window_rejected() {
        let cfg = ShiftConfig {
            window_start: 2100,
            window_end: 2101,
            ..ShiftConfig::default()
        };
        assert!(matches!(assign_offsets([(1, 2005)], 0, &cfg), Err(Error::Config(_))));
        let cfg = ShiftConfig {
            drift_days: 2.0,
            ..ShiftConfig::default()
        };
        assert!(matches!(assign_offsets([(1, 2005)], 0, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn shift_preserves_interval_weekday_and_clock() {
        let s = store("1950-03-01 00:00:00", "2008-06-02 14:05:00");
        let plan = assign_offsets([(1, 2008)], 3, &ShiftConfig::default()).unwrap();
        let out = apply_shift(&s, &plan).unwrap();
        let (a, b) = (&s.admissions()[0], &out.admissions()[0]);
        assert_eq!(b.dischtime - b.admittime, Duration::days(3));
        assert_eq!(a.admittime.weekday(), b.admittime.weekday());
        assert_eq!(a.admittime.time(), b.admittime.time());
        assert_eq!(b.admittime.hour(), 14);
    }

    #[test]
    fn missing_subject_is_integrity_error() {
        let s = store("1950-03-01 00:00:00", "2008-06-02 14:05:00");
        let plan = assign_offsets([(2, 2008)], 3, &ShiftConfig::default()).unwrap();
        assert!(matches!(apply_shift(&s, &plan), Err(Error::Integrity { .. })));
    }

    #[test]
    fn elderly_obfuscation_threshold() {
        let s = store("1910-01-01 00:00:00", "2002-01-01 00:00:00");
        let (out, n) = obfuscate_elderly(&s);
        assert_eq!(n, 1);
        let raw = days_between(&out.patients()[0].dob, &out.admissions()[0].admittime) / DAYS_PER_YEAR;
        assert!((raw - 300.0).abs() < 0.1);
        assert_eq!(age_years(&out.patients()[0].dob, &out.admissions()[0].admittime), 91.4);

        // 89 years exactly: 89 * 365.25 days
        let admit = ts("1950-01-01 00:00:00") + Duration::days(32507) + Duration::hours(6);
        let s = store("1950-01-01 00:00:00", &crate::time::format_timestamp(&admit));
        assert_eq!(days_between(&s.patients()[0].dob, &admit) / DAYS_PER_YEAR, 89.0);
        let (_, n) = obfuscate_elderly(&s);
        assert_eq!(n, 0);
    }

    #[test]
    fn scrub_examples() {
        let (s, n) = scrub_text("called Dr. SMITH at 555-0100", &ScrubPatterns::phone_only());
        assert_eq!(s, "called Dr. SMITH at [REMOVED]");
        assert_eq!(n, 1);
        let (s, n) = scrub_text("no identifiers here", &ScrubPatterns::default());
        assert_eq!((s.as_str(), n), ("no identifiers here", 0));
        let p = ScrubPatterns::new(&["SMITH".to_string()]).unwrap();
        let (s, _) = scrub_text("Dr. SMITH lives at 12 Elm Street, (617) 555-0100", &p);
        assert_eq!(s, "Dr. [REMOVED] lives at [REMOVED], [REMOVED]");
    }

    #[test]
    fn deidentify_reports_counts() {
        let mut t = store("1950-03-01 00:00:00", "2008-06-02 14:05:00").into_tables();
        t.admissions[0].diagnosis = "FALL; CALL 555-0199".into();
        let (out, report) = deidentify(&t.freeze(), &DeidConfig::default()).unwrap();
        assert_eq!(report.subjects_shifted, 1);
        assert_eq!(report.fields_scrubbed["ADMISSIONS"], 1);
        assert_eq!(out.admissions()[0].diagnosis, "FALL; CALL [REMOVED]");
        assert!(out.admissions()[0].admittime.year() >= 2100);
    }

    proptest::proptest! {
        #[test]
        fn scrub_is_idempotent(s in "[A-Za-z0-9 ().,-]{0,60}") {
            let p = ScrubPatterns::new(&["Jones".to_string(), "Li".to_string()]).unwrap();
            let (once, _) = scrub_text(&s, &p);
            let (twice, n) = scrub_text(&once, &p);
            proptest::prop_assert_eq!(&once, &twice);
            proptest::prop_assert_eq!(n, 0);
        }

        #[test]
        fn offsets_satisfy_invariants(seed in proptest::prelude::any::<u64>(), reference in 1990i32..2090) {
            let plan = assign_offsets((0..20).map(|s| (s, reference)), seed, &ShiftConfig::default()).unwrap();
            for &o in plan.offsets.values() {
                proptest::prop_assert!(o > 0 && o % 7 == 0);
                proptest::prop_assert!(seasonal_drift(o) <= 15.0);
            }
        }
    }
}
