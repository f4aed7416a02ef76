use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use super::grouping::{script_icu_grouping, IcuInterval, StayGroup};
use super::spec::{LosParams, PopulationSpec, VitalParams};
use crate::error::Result;
use crate::store::{AdmissionType, CareUnit, Gender, HadmId, IcuStayId, SubjectId};
use crate::time::{Timestamp, DAYS_PER_YEAR};

pub const SEPSIS_CODES: [(&str, f64); 4] = [("0389", 0.5), ("99591", 0.2), ("99592", 0.2), ("78552", 0.1)];
pub const HYPERTENSION_CODES: [(&str, f64); 3] = [("4019", 0.8), ("4011", 0.1), ("40390", 0.1)];

/// Per-stay physiological baselines around which readings are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baseline {
    pub heart_rate: f64,
    pub spo2: f64,
    pub resp_rate: f64,
    pub gcs: f64,
    pub lactate: f64,
    pub creatinine: f64,
    pub wbc: f64,
    pub hemoglobin: f64,
    pub potassium: f64,
    pub magnesium: f64,
}

/// Internal event plan for one ICU stay.
#[derive(Debug, Clone, PartialEq)]
pub struct StayScript {
    pub icustay_id: IcuStayId,
    pub group: StayGroup,
    pub baseline: Baseline,
    pub ventilation: Option<(Timestamp, Timestamp)>,
    pub iac_time: Option<Timestamp>,
    pub iac_before_vent: Option<Timestamp>,
    pub vasopressor: bool,
    pub routine_inputs: bool,
    /// Set when a planted death truncated this stay.
    pub died_in_icu: bool,
}

impl StayScript {
    pub fn unit(&self) -> CareUnit {
        self.group.first_careunit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionPlan {
    pub hadm_id: HadmId,
    pub admittime: Timestamp,
    pub dischtime: Timestamp,
    pub deathtime: Option<Timestamp>,
    pub admission_type: AdmissionType,
    pub intervals: Vec<IcuInterval>,
    pub stays: Vec<StayScript>,
    pub diagnoses: Vec<String>,
    pub iac_pre_icu: Option<Timestamp>,
}

impl AdmissionPlan {
    pub fn first_unit(&self) -> CareUnit {
        self.stays[0].unit()
    }

    pub fn last_outtime(&self) -> Timestamp {
        self.stays.last().map(|s| s.group.outtime).unwrap_or(self.admittime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeathKind {
    Icu,
    IcuBoundary,
    Ward,
    Within30Days,
    WithinYear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedDeath {
    pub time: Timestamp,
    pub kind: DeathKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientPlan {
    pub subject_id: SubjectId,
    pub gender: Gender,
    pub dob: Timestamp,
    pub neonate: bool,
    pub admissions: Vec<AdmissionPlan>,
    pub death: Option<PlannedDeath>,
}

pub(crate) fn subject_id(index: usize) -> SubjectId {
    10_000 + index as SubjectId
}

pub(crate) fn hours(h: f64) -> Duration {
    Duration::seconds((h * 3600.0).round() as i64)
}

pub(crate) fn days(d: f64) -> Duration {
    Duration::seconds((d * 86_400.0).round() as i64)
}

pub(crate) fn uniform_hours(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Duration {
    if hi <= lo {
        return hours(lo);
    }
    hours(rng.gen_range(lo..hi))
}

pub(crate) fn draw(rng: &mut ChaCha8Rng, p: &VitalParams) -> f64 {
    let v = p.mean + p.between_sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
    v.clamp(p.min, p.max)
}

fn lognormal_days(rng: &mut ChaCha8Rng, p: &LosParams) -> f64 {
    if p.sigma == 0.0 {
        return p.median_days;
    }
    LogNormal::new(p.median_days.ln(), p.sigma).expect("validated").sample(rng)
}

pub(crate) fn weighted<'a, T>(rng: &mut ChaCha8Rng, items: &'a [(T, f64)]) -> &'a T {
    &items.choose_weighted(rng, |(_, w)| *w).expect("validated weights").0
}

fn truncated_age(rng: &mut ChaCha8Rng, spec: &PopulationSpec) -> f64 {
    let normal = Normal::new(spec.age_mean, spec.age_sd).expect("validated");
    loop {
        let a: f64 = normal.sample(rng);
        if (spec.age_min..=spec.age_max).contains(&a) {
            return a;
        }
    }
}

fn minute(t: Timestamp) -> Timestamp {
    t - Duration::seconds(t.and_utc().timestamp().rem_euclid(60))
}

fn random_time_in_years(rng: &mut ChaCha8Rng, years: (i32, i32)) -> Timestamp {
    let start = NaiveDate::from_ymd_opt(years.0, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let end = NaiveDate::from_ymd_opt(years.1 + 1, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let span = (end - start).num_minutes();
    start + Duration::minutes(rng.gen_range(0..span))
}

pub(crate) struct IdCounter {
    pub next_hadm: HadmId,
    pub next_stay: IcuStayId,
}

impl Default for IdCounter {
    fn default() -> Self {
        IdCounter {
            next_hadm: 100_000,
            next_stay: 200_000,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn choose_unit(rng: &mut ChaCha8Rng, spec: &PopulationSpec) -> CareUnit {
    let mix: Vec<(CareUnit, f64)> = spec.careunit_mix.iter().map(|(u, p)| (*u, *p)).collect();
    *weighted(rng, &mix)
}

fn diagnoses_for(rng: &mut ChaCha8Rng, spec: &PopulationSpec, unit: CareUnit, age: f64) -> Vec<String> {
    let mut codes: Vec<String> = Vec::new();
    let profile = &spec.diagnosis_profiles[&unit];
    let sepsis = rng.gen_bool(spec.sepsis_prevalence);
    let sepsis_code = weighted(rng, &SEPSIS_CODES).to_string();
    if sepsis && unit == CareUnit::MICU && rng.gen_bool(0.5) {
        codes.push(sepsis_code.clone());
    }
    codes.push(weighted(rng, profile).clone());
    if sepsis && !codes.contains(&sepsis_code) {
        codes.push(sepsis_code);
    }
    let decade = ((age / 10.0) as usize).min(spec.hypertension_by_decade.len().saturating_sub(1));
    if let Some(&p) = spec.hypertension_by_decade.get(decade) {
        if rng.gen_bool(p) {
            codes.push(weighted(rng, &HYPERTENSION_CODES).to_string());
        }
    }
    for (code, p) in &spec.secondary_codes {
        if rng.gen_bool(*p) && !codes.contains(code) {
            codes.push(code.clone());
        }
    }
    codes
}

fn baseline(rng: &mut ChaCha8Rng, spec: &PopulationSpec) -> Baseline {
    let (v, l) = (&spec.vitals, &spec.labs);
    Baseline {
        heart_rate: draw(rng, &v.heart_rate),
        spo2: draw(rng, &v.spo2),
        resp_rate: draw(rng, &v.resp_rate),
        gcs: draw(rng, &v.gcs),
        lactate: draw(rng, &l.lactate),
        creatinine: draw(rng, &l.creatinine),
        wbc: draw(rng, &l.wbc),
        hemoglobin: draw(rng, &l.hemoglobin),
        potassium: draw(rng, &l.potassium),
        magnesium: draw(rng, &l.magnesium),
    }
}

/// One ICU episode before grouping: its intervals plus clinical script.
struct Episode {
    intervals: Vec<IcuInterval>,
    baseline: Baseline,
    ventilation: Option<(Timestamp, Timestamp)>,
    iac_time: Option<Timestamp>,
    iac_before_vent: Option<Timestamp>,
    vasopressor: bool,
    routine_inputs: bool,
}

fn episode(
    rng: &mut ChaCha8Rng,
    spec: &PopulationSpec,
    unit: CareUnit,
    intime: Timestamp,
    age: f64,
    chf: bool,
) -> Episode {
    let base = baseline(rng, spec);
    let mut los_h = lognormal_days(rng, &spec.los[&unit]).max(2.0 / 24.0) * 24.0;

    let r: f64 = rng.gen();
    let mut ventilation = None;
    if r < spec.ventilation_within_24h {
        let onset_h = rng.gen_range(1.0..20.0f64).min(0.5 * los_h);
        ventilation = Some(onset_h);
    } else if r < spec.ventilation_within_24h + spec.ventilation_late && los_h > 26.0 {
        ventilation = Some(rng.gen_range(25.0..los_h.max(25.5)).min(los_h - 0.5));
    }

    let mut iac_offset = None;
    if let Some(onset_h) = ventilation {
        let (v, l, iac) = (&spec.vitals, &spec.labs, &spec.iac);
        let logit = iac.intercept
            + iac.lactate * (base.lactate - l.lactate.mean) / l.lactate.between_sd
            + iac.heart_rate * (base.heart_rate - v.heart_rate.mean) / v.heart_rate.between_sd
            + iac.spo2 * (base.spo2 - v.spo2.mean) / v.spo2.between_sd
            + iac.age * (age - spec.age_mean) / spec.age_sd
            + if chf { iac.chf } else { 0.0 };
        if rng.gen_bool(sigmoid(logit)) {
            los_h *= iac.los_multiplier;
            iac_offset = Some(onset_h + rng.gen_range(0.0..6.0));
        }
    }
    let outtime_h = los_h;
    let ventilation = ventilation.map(|onset_h| {
        let dur = lognormal_days(rng, &LosParams { median_days: 1.2, sigma: 0.8 }) * 24.0;
        let end_h = (onset_h + dur.max(1.0)).min(outtime_h);
        (intime + hours(onset_h), intime + hours(end_h))
    });
    let iac_time = iac_offset
        .filter(|&h| h < outtime_h - 1.0 / 60.0)
        .map(|h| intime + hours(h));
    let iac_before_vent = match ventilation {
        Some((onset, _)) if iac_time.is_none() && rng.gen_bool(spec.iac.before_vent_probability) => {
            let gap = (onset - intime).num_seconds();
            (gap > 60).then(|| intime + Duration::seconds(rng.gen_range(0..gap)))
        }
        _ => None,
    };
    let vasopressor = rng.gen_bool(spec.vasopressor_probability);
    let routine_inputs = rng.gen_bool(spec.input_probability);

    let mut outtime = intime + hours(outtime_h);
    let mut intervals = vec![IcuInterval { unit, start: intime, end: outtime }];
    if los_h > 6.0 && rng.gen_bool(spec.unit_change_probability) {
        let split = intime + hours(los_h * rng.gen_range(0.3..0.7));
        let other = choose_unit(rng, spec);
        intervals = vec![
            IcuInterval { unit, start: intime, end: split },
            IcuInterval { unit: other, start: split, end: outtime },
        ];
    } else if los_h > 6.0 && rng.gen_bool(spec.icu_bounce_probability) {
        // Short ward interlude inside one stay; the remaining ICU time follows it.
        let split = intime + hours(los_h * rng.gen_range(0.3..0.7));
        let gap = uniform_hours(rng, 2.0, 20.0);
        outtime += gap;
        intervals = vec![
            IcuInterval { unit, start: intime, end: split },
            IcuInterval { unit, start: split + gap, end: outtime },
        ];
    }
    // Events scripted for the period after a bounce must still fall inside an interval.
    let shift_past_gap = |t: Timestamp| match intervals.as_slice() {
        [a, b] if t > a.end && t < b.start => b.start,
        [a, b] if t >= b.start && a.unit == b.unit => t + (b.start - a.end),
        _ => t,
    };
    let ventilation = ventilation.map(|(s, e)| {
        let s2 = shift_past_gap(s);
        (s2, shift_past_gap(e).max(s2))
    });
    let iac_time = iac_time.map(shift_past_gap).filter(|&t| t < outtime);
    let iac_before_vent = iac_before_vent.filter(|&t| ventilation.is_some_and(|(s, _)| t < s));
    Episode {
        intervals,
        baseline: base,
        ventilation,
        iac_time,
        iac_before_vent,
        vasopressor,
        routine_inputs,
    }
}

/// Structure of one patient: admissions, ICU episodes and scripts. Deaths
/// are planted afterwards across the population.
pub(crate) fn plan_patient(
    index: usize,
    spec: &PopulationSpec,
    ids: &mut IdCounter,
    rng: &mut ChaCha8Rng,
) -> Result<PatientPlan> {
    let subject_id = subject_id(index);
    let neonate = spec.neonate_fraction > 0.0 && rng.gen_bool(spec.neonate_fraction);
    let age = if neonate { rng.gen_range(0.0..2.0) / DAYS_PER_YEAR } else { truncated_age(rng, spec) };
    let gender = if rng.gen_bool(spec.female_fraction) { Gender::F } else { Gender::M };
    let first_admit = random_time_in_years(rng, spec.first_admission_years);
    let dob = minute(first_admit - days(age * DAYS_PER_YEAR));

    let mut n_adm = 1;
    while !neonate && n_adm < spec.max_admissions && rng.gen_bool(spec.readmission_probability) {
        n_adm += 1;
    }

    let mut admissions = Vec::with_capacity(n_adm as usize);
    let mut admittime = first_admit;
    for _ in 0..n_adm {
        let age_now = (admittime - dob).num_seconds() as f64 / 86_400.0 / DAYS_PER_YEAR;
        let unit = if neonate { CareUnit::NICU } else { choose_unit(rng, spec) };
        let diagnoses = diagnoses_for(rng, spec, unit, age_now);
        let chf = diagnoses.iter().any(|c| c.starts_with("428"));
        let admission_type = if neonate {
            AdmissionType::Newborn
        } else {
            let types = [
                (AdmissionType::Emergency, 0.8),
                (AdmissionType::Elective, if unit == CareUnit::CSRU { 0.35 } else { 0.08 }),
                (AdmissionType::Urgent, 0.06),
            ];
            *weighted(rng, &types)
        };
        let (lo, hi) = spec.hospital_pre_icu_hours;
        let pre = uniform_hours(rng, lo, hi);
        let intime = minute(admittime + pre);
        let iac_pre_icu = (pre > Duration::minutes(30) && rng.gen_bool(spec.iac.pre_icu_probability))
            .then(|| admittime + Duration::seconds(rng.gen_range(0..(pre.num_seconds() - 60))));

        let mut episodes = vec![episode(rng, spec, unit, intime, age_now, chf)];
        if !neonate && rng.gen_bool(spec.second_icu_episode_probability) {
            let prev_out = episodes[0].intervals.last().unwrap().end;
            let start = minute(prev_out + uniform_hours(rng, 30.0, 96.0));
            let unit2 = choose_unit(rng, spec);
            episodes.push(episode(rng, spec, unit2, start, age_now, chf));
        }

        let intervals: Vec<IcuInterval> = episodes.iter().flat_map(|e| e.intervals.iter().copied()).collect();
        let groups = script_icu_grouping(&intervals)?;
        let mut stays = Vec::with_capacity(groups.len());
        let mut ep_iter = episodes.into_iter();
        for group in groups {
            let ep = ep_iter.next().expect("one group per episode");
            let icustay_id = ids.next_stay;
            ids.next_stay += 1;
            stays.push(StayScript {
                icustay_id,
                group,
                baseline: ep.baseline,
                ventilation: ep.ventilation,
                iac_time: ep.iac_time,
                iac_before_vent: ep.iac_before_vent,
                vasopressor: ep.vasopressor,
                routine_inputs: ep.routine_inputs,
                died_in_icu: false,
            });
        }
        let last_out = stays.last().unwrap().group.outtime;
        let post = lognormal_days(rng, &spec.hospital_post_icu_days).max(0.25);
        let dischtime = minute(last_out + days(post));
        let hadm_id = ids.next_hadm;
        ids.next_hadm += 1;
        admissions.push(AdmissionPlan {
            hadm_id,
            admittime,
            dischtime,
            deathtime: None,
            admission_type,
            intervals,
            stays,
            diagnoses,
            iac_pre_icu,
        });
        admittime = minute(dischtime + days(rng.gen_range(5.0..400.0)));
    }
    Ok(PatientPlan {
        subject_id,
        gender,
        dob,
        neonate,
        admissions,
        death: None,
    })
}
