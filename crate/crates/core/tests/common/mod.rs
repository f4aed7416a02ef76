//! Naive full-scan reference implementations shared by the integration tests
//! and the acceptance harness. Nothing here touches the store indexes.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use ehrforge::analytics::{CohortFilter, MinAge};
use ehrforge::icd::parse_icd9;
use ehrforge::store::{AdmissionRecord, CareUnit, EhrStore, Gender, IcuStayRecord, PatientRecord, Tables};
use ehrforge::study::StudyConfig;
use ehrforge::time::Timestamp;

const SENTINEL: f64 = 91.4;

pub struct NaiveAge {
    pub years: f64,
    pub obfuscated: bool,
}

pub fn age(dob: &Timestamp, at: &Timestamp) -> NaiveAge {
    let years = (*at - *dob).num_seconds() as f64 / 86_400.0 / 365.25;
    if years > 89.0 {
        NaiveAge { years: SENTINEL, obfuscated: true }
    } else {
        NaiveAge { years, obfuscated: false }
    }
}

pub fn patient<'a>(t: &'a Tables, id: i64) -> Option<&'a PatientRecord> {
    t.patients.iter().find(|p| p.subject_id == id)
}

pub fn admission<'a>(t: &'a Tables, id: i64) -> Option<&'a AdmissionRecord> {
    t.admissions.iter().find(|a| a.hadm_id == id)
}

pub fn first_unit(t: &Tables, hadm: i64) -> Option<CareUnit> {
    t.icustays
        .iter()
        .filter(|s| s.hadm_id == hadm)
        .min_by_key(|s| (s.intime, s.icustay_id))
        .map(|s| s.first_careunit)
}

pub fn death_time(t: &Tables, subject: i64, adm: Option<&AdmissionRecord>) -> Option<Timestamp> {
    adm.and_then(|a| a.deathtime).or_else(|| patient(t, subject).and_then(|p| p.dod))
}

fn admits(f: &CohortFilter, age: f64, unit: Option<CareUnit>, gender: Gender) -> bool {
    let min_ok = match f.min_age {
        None => true,
        Some(MinAge::Over(a)) => age > a,
        Some(MinAge::AtLeast(a)) => age >= a,
    };
    let max_ok = f.max_age.map_or(true, |m| age <= m);
    let unit_ok = f.units.is_empty() || unit.is_some_and(|u| f.units.contains(&u));
    let gender_ok = f.gender.map_or(true, |g| g == gender);
    min_ok && max_ok && unit_ok && gender_ok
}

pub fn stays<'a>(t: &'a Tables, f: &CohortFilter) -> Vec<&'a IcuStayRecord> {
    t.icustays
        .iter()
        .filter(|s| {
            patient(t, s.subject_id).is_some_and(|p| admits(f, age(&p.dob, &s.intime).years, Some(s.first_careunit), p.gender))
        })
        .collect()
}

pub fn admissions<'a>(t: &'a Tables, f: &CohortFilter) -> Vec<(&'a AdmissionRecord, Option<CareUnit>)> {
    t.admissions
        .iter()
        .filter_map(|a| {
            let p = patient(t, a.subject_id)?;
            let unit = first_unit(t, a.hadm_id);
            admits(f, age(&p.dob, &a.admittime).years, unit, p.gender).then_some((a, unit))
        })
        .collect()
}

/// (patients, admissions, ICU stays) with a qualifying stay.
pub fn counts(t: &Tables, f: &CohortFilter) -> (u64, u64, u64) {
    let s = stays(t, f);
    let n = |ids: BTreeSet<i64>| ids.len() as u64;
    (
        n(s.iter().map(|s| s.subject_id).collect()),
        n(s.iter().map(|s| s.hadm_id).collect()),
        n(s.iter().map(|s| s.icustay_id).collect()),
    )
}

/// Age histogram per first unit as (label, count) with a trailing `>89` bin.
pub fn age_histograms(t: &Tables, f: &CohortFilter) -> BTreeMap<String, Vec<(String, u64)>> {
    let mut raw: BTreeMap<String, (Vec<u64>, u64)> = BTreeMap::new();
    for s in stays(t, f) {
        let p = patient(t, s.subject_id).unwrap();
        let a = age(&p.dob, &s.intime);
        let e = raw.entry(s.first_careunit.to_string()).or_insert((vec![0; 18], 0));
        if a.obfuscated {
            e.1 += 1;
        } else {
            let i = (a.years / 5.0).floor().max(0.0) as usize;
            if i >= e.0.len() {
                e.0.resize(i + 1, 0);
            }
            e.0[i] += 1;
        }
    }
    raw.into_iter()
        .map(|(unit, (bins, elderly))| {
            let mut v: Vec<(String, u64)> = bins
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("[{},{})", i as f64 * 5.0, (i + 1) as f64 * 5.0), *c))
                .collect();
            v.push((">89".into(), elderly));
            (unit, v)
        })
        .collect()
}

/// (F, M) stay counts per first unit.
pub fn gender_counts(t: &Tables, f: &CohortFilter) -> BTreeMap<String, (u64, u64)> {
    let mut out: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for s in stays(t, f) {
        let p = patient(t, s.subject_id).unwrap();
        let e = out.entry(s.first_careunit.to_string()).or_default();
        match p.gender {
            Gender::F => e.0 += 1,
            Gender::M => e.1 += 1,
        }
    }
    out
}

/// (numerator, denominator) per stratum key.
pub type Rates = BTreeMap<String, (u64, u64)>;

fn bump(r: &mut Rates, key: String, event: bool) {
    let e = r.entry(key).or_default();
    e.0 += u64::from(event);
    e.1 += 1;
}

fn key(unit: Option<CareUnit>) -> String {
    unit.map_or_else(|| "NO_ICU".to_string(), |u| u.to_string())
}

pub fn icu_mortality(t: &Tables, f: &CohortFilter, boundary_hours: i64) -> Rates {
    let margin = Duration::hours(boundary_hours);
    let mut r = Rates::new();
    for s in stays(t, f) {
        let died = death_time(t, s.subject_id, admission(t, s.hadm_id))
            .is_some_and(|d| s.intime - margin <= d && d <= s.outtime + margin);
        bump(&mut r, s.first_careunit.to_string(), died);
    }
    r
}

pub fn hospital_mortality(t: &Tables, f: &CohortFilter) -> Rates {
    let mut r = Rates::new();
    for (a, unit) in admissions(t, f) {
        bump(&mut r, key(unit), a.hospital_expire_flag);
    }
    r
}

pub fn mortality_within(t: &Tables, days: i64, f: &CohortFilter) -> Rates {
    let mut r = Rates::new();
    for (a, unit) in admissions(t, f) {
        let died = death_time(t, a.subject_id, Some(a)).is_some_and(|d| a.admittime <= d && d <= a.admittime + Duration::days(days));
        bump(&mut r, key(unit), died);
    }
    r
}

pub struct NaiveLos {
    pub values: Vec<f64>,
    pub multi: u64,
    pub negative: u64,
}

pub fn hospital_los(t: &Tables, f: &CohortFilter, one_stay: bool) -> NaiveLos {
    let mut out = NaiveLos { values: Vec::new(), multi: 0, negative: 0 };
    for (a, _) in admissions(t, f) {
        if one_stay && t.icustays.iter().filter(|s| s.hadm_id == a.hadm_id).count() >= 2 {
            out.multi += 1;
            continue;
        }
        let los = (a.dischtime - a.admittime).num_seconds() as f64 / 86_400.0;
        if los < 0.0 {
            out.negative += 1;
        } else {
            out.values.push(los);
        }
    }
    out
}

/// Primary code counts per unit, most frequent first, ties by code.
pub fn top_codes(t: &Tables, k: usize, f: &CohortFilter) -> BTreeMap<String, (u64, Vec<(String, u64)>)> {
    let mut raw: BTreeMap<String, (u64, BTreeMap<String, u64>)> = BTreeMap::new();
    for (a, unit) in admissions(t, f) {
        let Some(unit) = unit else { continue };
        let primary = t.diagnoses.iter().filter(|d| d.hadm_id == a.hadm_id && d.seq_num == 1).next();
        let Some(d) = primary else { continue };
        let code = parse_icd9(&d.icd9_code).map_or_else(|_| d.icd9_code.trim().to_string(), |c| c.canonical());
        let e = raw.entry(unit.to_string()).or_default();
        e.0 += 1;
        *e.1.entry(code).or_default() += 1;
    }
    raw.into_iter()
        .map(|(u, (n, codes))| {
            let mut v: Vec<(String, u64)> = codes.into_iter().collect();
            v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            v.truncate(k);
            (u, (n, v))
        })
        .collect()
}

/// Numeric ICD-9 category of a stored code, if any.
fn numeric_category(raw: &str) -> Option<u32> {
    let s: String = raw.trim().chars().filter(|c| *c != '.').collect();
    if s.len() < 3 || !s.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s[..3].parse().ok()
}

/// Patients with a numeric diagnosis category in `[lo, hi]` at an admission
/// meeting the inclusive age bound, with the age of the first such admission.
pub fn code_range(t: &Tables, lo: u32, hi: u32, min_age: f64) -> BTreeMap<i64, (Timestamp, f64, bool)> {
    let mut out: BTreeMap<i64, (Timestamp, f64, bool)> = BTreeMap::new();
    for a in &t.admissions {
        let Some(p) = patient(t, a.subject_id) else { continue };
        let ag = age(&p.dob, &a.admittime);
        if ag.years < min_age {
            continue;
        }
        let hit = t
            .diagnoses
            .iter()
            .any(|d| d.hadm_id == a.hadm_id && numeric_category(&d.icd9_code).is_some_and(|c| lo <= c && c <= hi));
        if hit && out.get(&a.subject_id).map_or(true, |e| a.admittime < e.0) {
            out.insert(a.subject_id, (a.admittime, ag.years, ag.obfuscated));
        }
    }
    out
}

fn sepsis(code: &str) -> bool {
    let c: String = code.trim().chars().filter(|c| *c != '.').collect();
    c.starts_with("038") || c.starts_with("99591") || c.starts_with("99592") || c.starts_with("78552")
}

/// Surviving ICU stay ids after each cohort stage, for the default study
/// configuration.
pub fn cohort_stages(t: &Tables, cfg: &StudyConfig) -> Vec<Vec<i64>> {
    assert_eq!(cfg.sepsis_codes, ["038", "995.91", "995.92", "785.52"], "oracle assumes the default sepsis codes");
    let mut ids: Vec<&IcuStayRecord> = t.icustays.iter().collect();
    ids.sort_by_key(|s| s.icustay_id);
    let mut stages = Vec::new();
    let snapshot = |v: &Vec<&IcuStayRecord>| v.iter().map(|s| s.icustay_id).collect::<Vec<_>>();

    ids.retain(|s| {
        let adult = patient(t, s.subject_id).is_some_and(|p| age(&p.dob, &s.intime).years > cfg.adult_min_age);
        adult && t.inputevents.iter().any(|e| e.icustay_id == Some(s.icustay_id))
    });
    stages.push(snapshot(&ids));

    ids.retain(|s| {
        let first = t
            .icustays
            .iter()
            .filter(|o| o.subject_id == s.subject_id)
            .min_by_key(|o| (o.intime, o.icustay_id))
            .unwrap();
        first.icustay_id == s.icustay_id && s.outtime - s.intime >= Duration::hours(cfg.min_stay_hours)
    });
    stages.push(snapshot(&ids));

    ids.retain(|s| {
        t.chartevents
            .iter()
            .filter(|e| e.icustay_id == Some(s.icustay_id) && cfg.ventilation_items.contains(&e.itemid))
            .map(|e| e.charttime)
            .min()
            .is_some_and(|onset| onset <= s.intime + Duration::hours(cfg.vent_window_hours))
    });
    stages.push(snapshot(&ids));

    ids.retain(|s| !t.diagnoses.iter().any(|d| d.hadm_id == s.hadm_id && sepsis(&d.icd9_code)));
    stages.push(snapshot(&ids));

    ids.retain(|s| {
        !t.inputevents
            .iter()
            .any(|e| e.icustay_id == Some(s.icustay_id) && cfg.vasopressor_items.contains(&e.itemid))
    });
    stages.push(snapshot(&ids));

    ids.retain(|s| {
        !t.chartevents
            .iter()
            .any(|e| e.hadm_id == s.hadm_id && cfg.iac_items.contains(&e.itemid) && e.charttime < s.intime)
    });
    stages.push(snapshot(&ids));

    ids.retain(|s| !cfg.excluded_units.contains(&s.first_careunit));
    stages.push(snapshot(&ids));
    stages
}

/// Treatment flag for each stay of the final stage.
pub fn treatment(t: &Tables, cfg: &StudyConfig, stay: i64) -> bool {
    let onset = t
        .chartevents
        .iter()
        .filter(|e| e.icustay_id == Some(stay) && cfg.ventilation_items.contains(&e.itemid))
        .map(|e| e.charttime)
        .min()
        .expect("cohort stay is ventilated");
    t.chartevents
        .iter()
        .any(|e| e.icustay_id == Some(stay) && cfg.iac_items.contains(&e.itemid) && e.charttime >= onset)
}

pub fn filters() -> Vec<CohortFilter> {
    vec![
        CohortFilter::all(),
        CohortFilter::adult(),
        CohortFilter::older_than(60.0),
        CohortFilter::at_least(45.0).with_max_age(75.0),
        CohortFilter::adult().with_units(&[CareUnit::MICU, CareUnit::SICU]),
        CohortFilter::all().with_gender(Gender::F),
    ]
}

/// Differences between the library and the oracles on one store; empty when
/// everything agrees.
pub fn analytics_mismatches(store: &EhrStore) -> Vec<String> {
    use ehrforge::analytics::{self as an, Dimension, Entity};
    let t = store.tables();
    let res = ehrforge::icd::IcdResources::builtin();
    let mut bad = Vec::new();
    let mut check = |what: String, ok: bool| {
        if !ok {
            bad.push(what);
        }
    };
    let rates = |r: &ehrforge::analytics::OutcomeReport| -> Rates {
        r.strata.iter().map(|s| (s.key.clone(), (s.numerator, s.denominator))).collect()
    };
    for (fi, f) in filters().iter().enumerate() {
        let (p, a, s) = counts(t, f);
        let got = (
            an::count_distinct(store, Entity::Patients, f).unwrap(),
            an::count_distinct(store, Entity::HospitalAdmissions, f).unwrap(),
            an::count_distinct(store, Entity::IcuStays, f).unwrap(),
        );
        check(format!("count_distinct filter {fi}"), got == (p, a, s));

        let ages = an::demographic_distribution(store, Dimension::Age, f).unwrap();
        let got: BTreeMap<String, Vec<(String, u64)>> = ages
            .by_unit
            .iter()
            .map(|h| (h.stratum.clone().unwrap(), h.bins.iter().map(|b| (b.label.clone(), b.count)).collect()))
            .collect();
        check(format!("age distribution filter {fi}"), got == age_histograms(t, f));

        let genders = an::demographic_distribution(store, Dimension::Gender, f).unwrap();
        let got: BTreeMap<String, (u64, u64)> = genders
            .by_unit
            .iter()
            .map(|h| (h.stratum.clone().unwrap(), (h.count("F"), h.count("M"))))
            .collect();
        check(format!("gender distribution filter {fi}"), got == gender_counts(t, f));

        for hours in [0, 6, 24] {
            let r = an::icu_mortality(store, f, hours).unwrap();
            check(format!("icu_mortality {hours}h filter {fi}"), rates(&r) == icu_mortality(t, f, hours));
        }
        let r = an::hospital_mortality(store, f).unwrap();
        check(format!("hospital_mortality filter {fi}"), rates(&r) == hospital_mortality(t, f));
        for days in [28, 30, 365] {
            let r = an::mortality_within(store, days, f).unwrap();
            check(format!("mortality_within {days}d filter {fi}"), rates(&r) == mortality_within(t, days, f));
        }

        for one in [false, true] {
            let r = an::hospital_los(store, f, one).unwrap();
            let mut o = hospital_los(t, f, one);
            o.values.sort_by(f64::total_cmp);
            let n = o.values.len();
            let same_summary = r.summary.n == n as u64
                && (n == 0
                    || (r.summary.mean == o.values.iter().sum::<f64>() / n as f64
                        && r.summary.min == o.values[0]
                        && r.summary.max == o.values[n - 1]
                        && r.summary.median
                            == if n % 2 == 1 { o.values[n / 2] } else { (o.values[n / 2 - 1] + o.values[n / 2]) / 2.0 }));
            let mut bins: Vec<u64> = vec![0; 1];
            for v in &o.values {
                let i = v.floor() as usize;
                if i >= bins.len() {
                    bins.resize(i + 1, 0);
                }
                bins[i] += 1;
            }
            let got_bins: Vec<u64> = r.histogram.bins.iter().map(|b| b.count).collect();
            check(
                format!("hospital_los one_stay={one} filter {fi}"),
                same_summary && got_bins == bins && r.excluded_multi_stay == o.multi && r.excluded_negative == o.negative,
            );
        }

        let r = an::top_k_primary_codes_by_unit(store, 5, f, res).unwrap();
        let got: BTreeMap<String, (u64, Vec<(String, u64)>)> = r
            .units
            .iter()
            .map(|u| (u.unit.to_string(), (u.admissions, u.codes.iter().map(|c| (c.code.clone(), c.count)).collect())))
            .collect();
        check(format!("top_k_primary_codes filter {fi}"), got == top_codes(t, 5, f));
    }

    for (lo, hi, min_age) in [(401, 405, 0.0), (401, 405, 45.0), (390, 459, 16.0), (1, 999, 0.0)] {
        let r = an::patients_with_code_range(store, &format!("{lo:03}"), &format!("{hi:03}"), MinAge::AtLeast(min_age)).unwrap();
        let o = code_range(t, lo, hi, min_age);
        let mut elderly = 0;
        let mut bins = vec![0u64; 18];
        for (_, years, obf) in o.values() {
            if *obf {
                elderly += 1;
            } else {
                let i = (years / 5.0).floor().max(0.0) as usize;
                if i >= bins.len() {
                    bins.resize(i + 1, 0);
                }
                bins[i] += 1;
            }
        }
        bins.push(elderly);
        let got_bins: Vec<u64> = r.histogram.bins.iter().map(|b| b.count).collect();
        check(
            format!("patients_with_code_range {lo}-{hi} age>={min_age}"),
            r.patients == o.len() as u64 && got_bins == bins,
        );
    }
    bad
}

/// Differences between the cohort stages and their oracle; empty when equal.
pub fn cohort_mismatches(store: &EhrStore, cfg: &StudyConfig) -> Vec<String> {
    let t = store.tables();
    let cohort = ehrforge::study::build_cohort(store, cfg).unwrap();
    let oracle = cohort_stages(t, cfg);
    let mut bad = Vec::new();
    if cohort.flowchart.stages.len() != oracle.len() {
        bad.push(format!("{} stages, oracle has {}", cohort.flowchart.stages.len(), oracle.len()));
        return bad;
    }
    for (i, (stage, expect)) in cohort.flowchart.stages.iter().zip(&oracle).enumerate() {
        if &stage.members != expect || stage.remaining != expect.len() as u64 {
            bad.push(format!("stage {} ({}): {} vs oracle {}", i + 1, stage.name, stage.remaining, expect.len()));
        }
    }
    let groups = ehrforge::study::assign_groups(store, &cohort.stays, cfg);
    for (s, g) in cohort.stays.iter().zip(groups) {
        if g != treatment(t, cfg, s.icustay_id) {
            bad.push(format!("treatment flag of stay {}", s.icustay_id));
        }
    }
    bad
}

pub mod icd {
    use ehrforge::icd::{Annotation, ChapterTable, CodeMapping, Icd10Code, Icd9Code, Icd9Kind, Revision};
    use rand::Rng;

    fn digits(rng: &mut impl Rng, n: usize) -> String {
        (0..n).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect()
    }

    pub fn random_icd9(rng: &mut impl Rng) -> Icd9Code {
        let (kind, category) = match rng.gen_range(0..3) {
            0 => (Icd9Kind::Numeric, format!("{:03}", rng.gen_range(1..=999))),
            1 => (Icd9Kind::V, format!("V{:02}", rng.gen_range(0..=99))),
            _ => (Icd9Kind::E, format!("E{:03}", rng.gen_range(0..=999))),
        };
        let max_sub = if kind == Icd9Kind::E { 1 } else { 2 };
        let len = rng.gen_range(0..=max_sub);
        let sub = digits(rng, len);
        let padded = kind != Icd9Kind::E && sub.is_empty() && rng.gen_bool(0.5);
        Icd9Code {
            kind,
            category: category.into(),
            subclassification: sub.into(),
            padded,
        }
    }

    pub fn random_icd10(rng: &mut impl Rng) -> Icd10Code {
        let letter = char::from(b'A' + rng.gen_range(0..26u8));
        let ext_len = rng.gen_range(0..=4);
        let extension: String = (0..ext_len)
            .map(|_| {
                if rng.gen_bool(0.8) {
                    char::from(b'0' + rng.gen_range(0..10u8))
                } else {
                    char::from(b'A' + rng.gen_range(0..26u8))
                }
            })
            .collect();
        let annotation = match rng.gen_range(0..6) {
            0 => Annotation::Dagger,
            1 => Annotation::Asterisk,
            _ => Annotation::None,
        };
        Icd10Code {
            chapter_letter: letter,
            category_digits: digits(rng, 2).into(),
            extension: extension.into(),
            annotation,
        }
    }

    /// Every ICD-9 and ICD-10 category.
    pub fn category_space() -> Vec<(Revision, String)> {
        let mut v = Vec::new();
        v.extend((1..=999).map(|n| (Revision::Icd9, format!("{n:03}"))));
        v.extend((0..=99).map(|n| (Revision::Icd9, format!("V{n:02}"))));
        v.extend((0..=999).map(|n| (Revision::Icd9, format!("E{n:03}"))));
        for letter in b'A'..=b'Z' {
            v.extend((0..=99).map(|n| (Revision::Icd10, format!("{}{n:02}", letter as char))));
        }
        v
    }

    /// Sort key placing a category on a single line: letter prefix class,
    /// letter, number.
    fn key(category: &str) -> (u8, u32) {
        let first = category.as_bytes()[0];
        if first.is_ascii_digit() {
            (0, category.parse().unwrap())
        } else {
            (first, category[1..].parse().unwrap())
        }
    }

    fn ordinal(category: &str) -> u32 {
        let (letter, n) = key(category);
        u32::from(letter) * 1000 + n
    }

    /// Categories in no chapter or in more than one, each with the library's
    /// answer when it disagrees with the brute-force scan.
    pub fn chapter_failures(table: &ChapterTable) -> Vec<String> {
        let mut bad = Vec::new();
        for (rev, cat) in category_space() {
            let hits: Vec<_> = table
                .chapters(rev)
                .filter(|c| {
                    let e_code = |s: &str| s.starts_with('E') && s.len() == 4;
                    e_code(&c.range_lo) == e_code(&cat)
                        && (rev == Revision::Icd10 || key(&c.range_lo).0 == key(&cat).0)
                        && ordinal(&c.range_lo) <= ordinal(&cat)
                        && ordinal(&cat) <= ordinal(&c.range_hi)
                })
                .collect();
            let lib = table.chapter_of_category(rev, &cat).ok();
            if hits.len() != 1 || lib != Some(hits[0]) {
                bad.push(format!("{rev} {cat}: {} chapters", hits.len()));
            }
        }
        bad
    }

    /// Mapping rows whose inverse lookup does not contain the source code.
    pub fn transpose_failures(mapping: &CodeMapping, csv_text: &str) -> (usize, Vec<String>) {
        let mut bad = Vec::new();
        let mut rows = 0;
        for line in csv_text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            rows += 1;
            let mut f = line.split(',');
            let (i9, i10) = (f.next().unwrap().trim(), f.next().unwrap().trim());
            let c9 = ehrforge::icd::parse_icd9(i9).unwrap();
            let c10 = ehrforge::icd::parse_icd10(i10).unwrap();
            let forward: Vec<String> = mapping.map_icd9(&c9).iter().map(|c| c.canonical()).collect();
            let backward: Vec<String> = mapping.map_icd10(&c10).iter().map(|c| c.canonical()).collect();
            if !forward.contains(&c10.canonical()) || !backward.contains(&c9.canonical()) {
                bad.push(format!("{i9} <-> {i10}"));
            }
        }
        (rows, bad)
    }
}

pub mod study {
    use ehrforge::study::{logit, subset_fitness, Design, MatchResult};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// `n` rows of independent standard normal columns `x1..xp`.
    pub fn normal_design(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Design {
        let columns: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        Design::new((1..=p).map(|i| format!("x{i}")).collect(), columns, n).unwrap()
    }

    /// Labels drawn from `sigmoid(intercept + sum beta_j x_j)`.
    pub fn labels(design: &Design, intercept: f64, beta: &[f64], rng: &mut ChaCha8Rng) -> Vec<bool> {
        (0..design.rows)
            .map(|i| {
                let eta = intercept + beta.iter().zip(&design.columns).map(|(b, c)| b * c[i]).sum::<f64>();
                rng.gen_bool(sigmoid(eta))
            })
            .collect()
    }

    /// Log-likelihood written out directly.
    pub fn log_likelihood(design: &Design, y: &[bool], params: &[f64]) -> f64 {
        (0..design.rows)
            .map(|i| {
                let eta = params[0] + design.columns.iter().zip(&params[1..]).map(|(c, b)| b * c[i]).sum::<f64>();
                let p = sigmoid(eta);
                if y[i] {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            })
            .sum()
    }

    /// Relative error between the library gradient and central differences
    /// on a random instance.
    pub fn gradient_relative_error(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.gen_range(1..=6);
        let design = normal_design(rng.gen_range(20..200), p, &mut rng);
        let y: Vec<bool> = (0..design.rows).map(|_| rng.gen_bool(0.4)).collect();
        let params: Vec<f64> = (0..=p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = ehrforge::study::gradient(&design, &y, params[0], &params[1..]);
        let h = 1e-5;
        let fd: Vec<f64> = (0..=p)
            .map(|j| {
                let (mut up, mut down) = (params.clone(), params.clone());
                up[j] += h;
                down[j] -= h;
                (log_likelihood(&design, &y, &up) - log_likelihood(&design, &y, &down)) / (2.0 * h)
            })
            .collect();
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        diff / norm
    }

    /// Best subset fitness by enumerating every subset.
    pub fn exhaustive_best(design: &Design, y: &[bool], folds: usize, penalty: f64) -> f64 {
        let p = design.columns.len();
        (0..1u32 << p)
            .map(|mask| {
                let genes: Vec<bool> = (0..p).map(|j| mask & (1 << j) != 0).collect();
                subset_fitness(design, y, &genes, folds, penalty).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Five-feature selection instance: two informative columns, three noise.
    pub fn selection_instance(seed: u64) -> (Design, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let design = normal_design(240, 5, &mut rng);
        let y = labels(&design, -0.3, &[1.2, 0.0, -0.8, 0.0, 0.0], &mut rng);
        (design, y)
    }

    /// Largest number of treated/control pairs within `caliper` on the logit
    /// scale, by augmenting paths.
    pub fn maximum_matching(treated: &[f64], controls: &[f64], caliper: f64) -> usize {
        fn augment(t: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
            for &c in &adj[t] {
                if !seen[c] {
                    seen[c] = true;
                    if owner[c].map_or(true, |o| augment(o, adj, seen, owner)) {
                        owner[c] = Some(t);
                        return true;
                    }
                }
            }
            false
        }
        let adj: Vec<Vec<usize>> = treated
            .iter()
            .map(|t| (0..controls.len()).filter(|&c| (t - controls[c]).abs() <= caliper).collect())
            .collect();
        let mut owner = vec![None; controls.len()];
        (0..treated.len())
            .filter(|&t| augment(t, &adj, &mut vec![false; controls.len()], &mut owner))
            .count()
    }

    /// Sample standard deviation of pooled logits times `multiplier`.
    pub fn caliper(scores: &[f64], multiplier: f64) -> f64 {
        let l: Vec<f64> = scores.iter().map(|&s| logit(s)).collect();
        let m = l.iter().sum::<f64>() / l.len() as f64;
        let var = l.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (l.len() - 1) as f64;
        multiplier * var.sqrt()
    }

    /// Difference in means over the pooled standard deviation.
    pub fn smd(treated: &[f64], control: &[f64]) -> f64 {
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64)
        };
        let ((mt, vt), (mc, vc)) = (stats(treated), stats(control));
        (mt - mc) / ((vt + vc) / 2.0).sqrt()
    }

    pub struct Balance {
        pub pre: Vec<f64>,
        pub post: Vec<f64>,
        pub pairs: usize,
    }

    /// Confounded treatment assignment on three covariates, propensity fit,
    /// caliper matching and balance before and after.
    pub fn confounded_balance(seed: u64) -> Balance {
        use ehrforge::study::{fit_propensity, match_cohorts, Scored};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let design = normal_design(3000, 3, &mut rng);
        let treated = labels(&design, -1.0, &[0.8, 0.4, 0.0], &mut rng);
        let model = fit_propensity(&design, &treated, 5).unwrap();
        let scores = model.scores(&design).unwrap();
        let scored = |flag: bool| -> Vec<Scored> {
            (0..design.rows)
                .filter(|&i| treated[i] == flag)
                .map(|i| Scored { icustay_id: i as i64, score: scores[i] })
                .collect()
        };
        let m: MatchResult = match_cohorts(&scored(true), &scored(false), 0.2).unwrap();
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for col in &design.columns {
            let split = |flag: bool| -> Vec<f64> { (0..design.rows).filter(|&i| treated[i] == flag).map(|i| col[i]).collect() };
            pre.push(smd(&split(true), &split(false)));
            let t: Vec<f64> = m.pairs.iter().map(|p| col[p.treated as usize]).collect();
            let c: Vec<f64> = m.pairs.iter().map(|p| col[p.control as usize]).collect();
            post.push(smd(&t, &c));
        }
        Balance { pre, post, pairs: m.pairs.len() }
    }
}

pub mod deid {
    use std::collections::BTreeMap;

    use chrono::{Datelike, Timelike};
    use ehrforge::store::{EhrStore, Tables};
    use ehrforge::time::Timestamp;

    /// Every timestamp with its subject, in table and row order. Birth dates are
    /// included only when asked.
    pub fn stamps(t: &Tables, with_dob: bool) -> Vec<(i64, Timestamp)> {
        let mut v = Vec::new();
        for p in &t.patients {
            if with_dob {
                v.push((p.subject_id, p.dob));
            }
            v.extend(p.dod.iter().chain(&p.dod_hosp).map(|d| (p.subject_id, *d)));
        }
        for a in &t.admissions {
            v.extend([a.admittime, a.dischtime].iter().chain(&a.deathtime).map(|d| (a.subject_id, *d)));
        }
        for s in &t.icustays {
            v.extend([(s.subject_id, s.intime), (s.subject_id, s.outtime)]);
        }
        for e in t.chartevents.iter().chain(&t.labevents).chain(&t.outputevents) {
            v.push((e.subject_id, e.charttime));
        }
        for e in &t.inputevents {
            v.extend([(e.subject_id, e.starttime), (e.subject_id, e.endtime)]);
        }
        for r in &t.transfers {
            v.push((r.subject_id, r.intime));
            v.extend(r.outtime.map(|o| (r.subject_id, o)));
        }
        for r in &t.callouts {
            v.push((r.subject_id, r.callout_time));
            v.extend(r.discharge_time.map(|o| (r.subject_id, o)));
        }
        v
    }

    fn sorted_gaps(stamps: &[(i64, Timestamp)]) -> BTreeMap<i64, Vec<i64>> {
        let mut by_subject: BTreeMap<i64, Vec<Timestamp>> = BTreeMap::new();
        for (s, t) in stamps {
            by_subject.entry(*s).or_default().push(*t);
        }
        by_subject
            .into_iter()
            .map(|(s, mut ts)| {
                ts.sort();
                (s, ts.windows(2).map(|w| (w[1] - w[0]).num_seconds()).collect())
            })
            .collect()
    }

    pub fn drift(offset_days: i64) -> f64 {
        let years = (offset_days as f64 / 365.25).round();
        (offset_days as f64 - years * 365.25).abs()
    }

    /// Per-subject offsets in seconds, or the first broken invariant.
    pub fn offsets(store: &EhrStore, out: &EhrStore, with_dob: bool) -> Result<BTreeMap<i64, i64>, String> {
        let before = stamps(store.tables(), with_dob);
        let after = stamps(out.tables(), with_dob);
        if before.len() != after.len() {
            return Err(format!("{} timestamps became {}", before.len(), after.len()));
        }
        if sorted_gaps(&before) != sorted_gaps(&after) {
            return Err("within-subject intervals changed".into());
        }
        let mut offsets: BTreeMap<i64, i64> = BTreeMap::new();
        for ((s, a), (s2, b)) in before.iter().zip(&after) {
            if s != s2 {
                return Err(format!("row of subject {s} now belongs to {s2}"));
            }
            if a.weekday() != b.weekday() || a.num_seconds_from_midnight() != b.num_seconds_from_midnight() {
                return Err(format!("subject {s}: {a} became {b}"));
            }
            let d = (*b - *a).num_seconds();
            if *offsets.entry(*s).or_insert(d) != d {
                return Err(format!("subject {s} shifted unevenly"));
            }
        }
        Ok(offsets)
    }

    /// Broken invariants between a store and its de-identified copy.
    pub fn violations(store: &EhrStore, out: &EhrStore, with_dob: bool) -> Vec<String> {
        match offsets(store, out, with_dob) {
            Err(e) => vec![e],
            Ok(offsets) => offsets
                .into_iter()
                .filter_map(|(s, secs)| {
                    let days = secs / 86_400;
                    if secs % 86_400 != 0 {
                        Some(format!("subject {s}: offset of {secs} s is not whole days"))
                    } else if drift(days) > 15.0 {
                        Some(format!("subject {s} drifts {} days", drift(days)))
                    } else {
                        None
                    }
                })
                .collect(),
        }
    }
}
