use chrono::Duration;
use compact_str::{format_compact, CompactString};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::plan::{hours, AdmissionPlan, DeathKind, PatientPlan, StayScript};
use super::spec::{PopulationSpec, VitalParams};
use crate::icd::IcdResources;
use crate::items::*;
use crate::store::{
    AdmissionRecord, CalloutRecord, CodedRecord, IcuStayRecord, InputEvent, ItemId, Location, MeasurementEvent,
    PatientRecord, Tables, TransferRecord,
};
use crate::time::{days_between, Timestamp};

const VENT_MODES: [&str; 3] = ["CMV/ASSIST/AutoFlow", "CPAP/PSV", "SIMV/PSV/AutoFlow"];
const CODE_STATUSES: [(&str, f64); 3] = [("Full code", 0.85), ("DNR (do not resuscitate)", 0.1), ("DNI (do not intubate)", 0.05)];

struct Ctx<'a> {
    tables: &'a mut Tables,
    rng: &'a mut ChaCha8Rng,
    spec: &'a PopulationSpec,
    subject_id: i64,
}

fn noisy(rng: &mut ChaCha8Rng, base: f64, p: &VitalParams) -> f64 {
    let v = base + p.within_sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
    v.clamp(p.min, p.max)
}

/// A numeric reading stored with `decimals` places; the numeric column is
/// parsed back from the text so the two always agree.
fn reading(v: f64, decimals: usize) -> (CompactString, Option<f64>) {
    let text = format_compact!("{:.*}", decimals, v);
    let num = text.parse::<f64>().ok();
    (text, num)
}

impl Ctx<'_> {
    fn measurement(
        &self,
        hadm_id: i64,
        icustay_id: Option<i64>,
        itemid: ItemId,
        charttime: Timestamp,
        value: (CompactString, Option<f64>),
        uom: &str,
    ) -> MeasurementEvent {
        MeasurementEvent {
            subject_id: self.subject_id,
            hadm_id,
            icustay_id,
            itemid,
            charttime,
            value: value.0,
            valuenum: value.1,
            valueuom: uom.into(),
        }
    }

    fn chart(&mut self, hadm: i64, stay: i64, item: ItemId, t: Timestamp, value: (CompactString, Option<f64>), uom: &str) {
        let e = self.measurement(hadm, Some(stay), item, t, value, uom);
        self.tables.chartevents.push(e);
    }

    fn lab(&mut self, hadm: i64, item: ItemId, t: Timestamp, value: (CompactString, Option<f64>), uom: &str) {
        let e = self.measurement(hadm, None, item, t, value, uom);
        self.tables.labevents.push(e);
    }

    #[allow(clippy::too_many_arguments)]
    fn input(&mut self, hadm: i64, stay: i64, item: ItemId, start: Timestamp, end: Timestamp, amount: f64, uom: &str, rate: Option<(f64, &str)>) {
        self.tables.inputevents.push(InputEvent {
            subject_id: self.subject_id,
            hadm_id: hadm,
            icustay_id: Some(stay),
            itemid: item,
            starttime: start,
            endtime: end,
            amount: (amount * 100.0).round() / 100.0,
            amountuom: uom.into(),
            rate: rate.map(|r| (r.0 * 1000.0).round() / 1000.0),
            rateuom: rate.map(|r| r.1).unwrap_or("").into(),
        });
    }

    fn lab_panel(&mut self, adm: &AdmissionPlan, stay: &StayScript, t: Timestamp, chart_copy: Option<i64>) {
        let b = &stay.baseline;
        let l = &self.spec.labs;
        let panel = [
            (LAB_LACTATE, noisy(self.rng, b.lactate, &l.lactate), 1, "mmol/L"),
            (LAB_CREATININE, noisy(self.rng, b.creatinine, &l.creatinine), 1, "mg/dL"),
            (LAB_WBC, noisy(self.rng, b.wbc, &l.wbc), 1, "K/uL"),
            (LAB_HEMOGLOBIN, noisy(self.rng, b.hemoglobin, &l.hemoglobin), 1, "g/dL"),
            (LAB_POTASSIUM, noisy(self.rng, b.potassium, &l.potassium), 1, "mEq/L"),
            (LAB_MAGNESIUM, noisy(self.rng, b.magnesium, &l.magnesium), 1, "mg/dL"),
        ];
        for (item, v, dec, uom) in panel {
            self.lab(adm.hadm_id, item, t, reading(v, dec), uom);
        }
        let Some(icustay) = chart_copy else { return };
        // Bedside copies of magnesium and potassium, sometimes transcribed wrongly.
        for (chart_item, v, p) in [
            (CHART_MAGNESIUM, panel[5].1, l.magnesium),
            (CHART_POTASSIUM, panel[4].1, l.potassium),
        ] {
            let at = t + Duration::minutes(self.rng.gen_range(5..45));
            if at > stay.group.outtime {
                continue;
            }
            let copied = if self.rng.gen_bool(self.spec.labs.chart_copy_discrepancy) {
                let delta = p.between_sd * self.rng.gen_range(0.5..1.5) * if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (v + delta).clamp(p.min, p.max)
            } else {
                v
            };
            let uom = if chart_item == CHART_MAGNESIUM { "mg/dL" } else { "mEq/L" };
            self.chart(adm.hadm_id, icustay, chart_item, at, reading(copied, 1), uom);
        }
    }

    fn stay_events(&mut self, adm: &AdmissionPlan, stay: &StayScript) {
        let (hadm, id) = (adm.hadm_id, stay.icustay_id);
        let intime = stay.group.intime;
        let outtime = stay.group.outtime;
        let spec = self.spec;
        let in_icu = |t: Timestamp| {
            t <= outtime
                && stay.group.members.iter().any(|&m| {
                    let iv = &adm.intervals[m];
                    iv.start <= t && t <= iv.end
                })
        };

        // Vital signs, hourly from ICU admission.
        let v = &spec.vitals;
        let b = stay.baseline;
        let horizon = (outtime - intime).num_hours().min(i64::from(v.max_hours));
        for h in 0..=horizon {
            let t = intime + Duration::hours(h);
            if !in_icu(t) {
                continue;
            }
            let hr = noisy(self.rng, b.heart_rate, &v.heart_rate);
            let spo2 = noisy(self.rng, b.spo2, &v.spo2);
            let rr = noisy(self.rng, b.resp_rate, &v.resp_rate);
            self.chart(hadm, id, HEART_RATE, t, reading(hr, 0), "bpm");
            self.chart(hadm, id, SPO2, t, reading(spo2, 0), "%");
            self.chart(hadm, id, RESP_RATE, t, reading(rr, 0), "insp/min");
            if h % i64::from(v.gcs_every_hours) == 0 {
                let gcs = noisy(self.rng, b.gcs, &v.gcs).round().clamp(3.0, 15.0);
                self.chart(hadm, id, GCS_TOTAL, t, reading(gcs, 0), "points");
            }
        }
        let status = super::plan::weighted(self.rng, &CODE_STATUSES);
        self.chart(hadm, id, CODE_STATUS, intime, ((*status).into(), None), "");

        if let Some((onset, end)) = stay.ventilation.filter(|(s, _)| *s <= outtime) {
            let end = end.min(outtime);
            let mode = VENT_MODES[self.rng.gen_range(0..VENT_MODES.len())];
            let mut t = onset;
            while t < end {
                if in_icu(t) {
                    self.chart(hadm, id, VENT_MODE, t, (mode.into(), None), "");
                }
                t += Duration::hours(4);
            }
            if in_icu(end) {
                self.chart(hadm, id, VENT_MODE, end, (mode.into(), None), "");
            }
            let mut s = onset;
            while s < end {
                let e = (s + Duration::hours(12)).min(end);
                let h = (e - s).num_seconds() as f64 / 3600.0;
                let prop_rate = self.rng.gen_range(20.0..80.0);
                self.input(hadm, id, PROPOFOL, s, e, prop_rate * h, "mg", Some((prop_rate, "mg/hour")));
                let fent_rate = self.rng.gen_range(25.0..150.0);
                self.input(hadm, id, FENTANYL, s, e, fent_rate * h, "mcg", Some((fent_rate, "mcg/hour")));
                s = e;
            }
        }
        for t in [stay.iac_before_vent, stay.iac_time].into_iter().flatten() {
            if t <= outtime {
                self.chart(hadm, id, ARTERIAL_LINE, t, ("Placed".into(), None), "");
            }
        }

        // Labs: daily panel from shortly after ICU admission.
        let mut t = intime + Duration::minutes(30);
        while t < outtime {
            self.lab_panel(adm, stay, t, Some(id));
            t += Duration::hours(24);
        }

        // Blood gases: arterial sampling intensifies once a catheter is in place.
        let (art_base, art_line) = spec.arterial_gases_per_day;
        let gases = |rng: &mut ChaCha8Rng, per_day: f64, from: Timestamp, to: Timestamp| -> Vec<Timestamp> {
            let span = (to - from).num_seconds();
            if span <= 0 || per_day <= 0.0 {
                return Vec::new();
            }
            let mean = per_day * span as f64 / 86_400.0;
            let n = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
            let mut ts: Vec<Timestamp> = (0..n).map(|_| from + Duration::seconds(rng.gen_range(0..=span))).collect();
            ts.sort();
            ts
        };
        let line_from = stay.iac_time.filter(|t| *t < outtime).unwrap_or(outtime);
        let mut draws: Vec<(Timestamp, &str)> = Vec::new();
        draws.extend(gases(self.rng, art_base, intime, line_from).into_iter().map(|t| (t, ARTERIAL_SPECIMEN)));
        draws.extend(gases(self.rng, art_line, line_from, outtime).into_iter().map(|t| (t, ARTERIAL_SPECIMEN)));
        draws.extend(gases(self.rng, spec.venous_gases_per_day, intime, outtime).into_iter().map(|t| (t, VENOUS_SPECIMEN)));
        for (t, kind) in draws {
            self.lab(hadm, LAB_SPECIMEN_TYPE, t, (kind.into(), None), "");
            let ph = 7.38 + 0.06 * self.rng.sample::<f64, _>(rand_distr::StandardNormal);
            self.lab(hadm, LAB_PH, t, reading(ph, 2), "units");
            let po2 = if kind == ARTERIAL_SPECIMEN { self.rng.gen_range(60.0..160.0) } else { self.rng.gen_range(25.0..50.0) };
            self.lab(hadm, LAB_PO2, t, reading(po2, 0), "mm Hg");
        }

        // Fluids, insulin and vasopressors.
        if stay.routine_inputs {
            let mut s = intime + Duration::minutes(15);
            while s < outtime {
                let e = (s + Duration::hours(8)).min(outtime);
                let h = (e - s).num_seconds() as f64 / 3600.0;
                self.input(hadm, id, NACL, s, e, 125.0 * h, "mL", Some((125.0, "mL/hour")));
                s += Duration::hours(12);
            }
            if adm.diagnoses.iter().any(|c| c.starts_with("250")) {
                let mut s = intime + Duration::hours(1);
                while s < outtime {
                    let units = self.rng.gen_range(2..12) as f64;
                    self.input(hadm, id, INSULIN, s, s, units, "units", None);
                    s += Duration::hours(6);
                }
            }
        }
        if stay.vasopressor {
            let drug = VASOPRESSORS[self.rng.gen_range(0..VASOPRESSORS.len())];
            let window = (outtime - intime).num_seconds().clamp(1, 24 * 3600);
            let s = intime + Duration::seconds(self.rng.gen_range(0..window));
            let e = (s + hours(self.rng.gen_range(4.0..36.0))).min(outtime);
            let h = (e - s).num_seconds() as f64 / 3600.0;
            let rate = self.rng.gen_range(0.5..6.0);
            self.input(hadm, id, drug, s, e, rate * h, "mg", Some((rate, "mg/hour")));
        }

        // Urine output every six hours.
        let mut t = intime + Duration::hours(2);
        while t <= outtime {
            if in_icu(t) {
                let ml = self.rng.gen_range(50.0..400.0f64).round();
                let e = self.measurement(hadm, Some(id), FOLEY, t, reading(ml, 0), "mL");
                self.tables.outputevents.push(e);
            }
            t += Duration::hours(6);
        }
    }
}

fn ward_name(adm: &AdmissionPlan) -> CompactString {
    match adm.first_unit() {
        crate::store::CareUnit::SICU | crate::store::CareUnit::TSICU | crate::store::CareUnit::CSRU => "SURG".into(),
        crate::store::CareUnit::NICU => "NWARD".into(),
        _ => "MED".into(),
    }
}

fn transfers(ctx: &mut Ctx<'_>, adm: &AdmissionPlan) {
    let ward = Location::Ward(ward_name(adm));
    let mut rows: Vec<(Option<i64>, Location, Timestamp, Timestamp)> = Vec::new();
    let mut cursor = adm.admittime;
    for stay in &adm.stays {
        for &m in &stay.group.members {
            let iv = adm.intervals[m];
            if iv.start > cursor {
                rows.push((None, ward.clone(), cursor, iv.start));
            }
            rows.push((Some(stay.icustay_id), Location::Icu(iv.unit), iv.start, iv.end));
            cursor = iv.end;
        }
    }
    if adm.dischtime > cursor {
        rows.push((None, ward, cursor, adm.dischtime));
    }
    let mut prev: Option<Location> = None;
    for (icustay_id, loc, intime, outtime) in rows {
        ctx.tables.transfers.push(TransferRecord {
            subject_id: ctx.subject_id,
            hadm_id: adm.hadm_id,
            icustay_id,
            prev_careunit: prev.clone(),
            curr_careunit: Some(loc.clone()),
            intime,
            outtime: Some(outtime),
        });
        prev = Some(loc);
    }
}

pub(crate) fn emit_patient(p: &PatientPlan, spec: &PopulationSpec, tables: &mut Tables, rng: &mut ChaCha8Rng) {
    let descriptions = &IcdResources::builtin().descriptions;
    let dod = p.death.map(|d| d.time);
    let in_hospital = p
        .death
        .is_some_and(|d| matches!(d.kind, DeathKind::Icu | DeathKind::IcuBoundary | DeathKind::Ward));
    tables.patients.push(PatientRecord {
        subject_id: p.subject_id,
        gender: p.gender,
        dob: p.dob,
        dod,
        dod_hosp: if in_hospital { dod } else { None },
        expire_flag: dod.is_some(),
    });
    let mut ctx = Ctx {
        tables,
        rng,
        spec,
        subject_id: p.subject_id,
    };
    for adm in &p.admissions {
        let primary = &adm.diagnoses[0];
        ctx.tables.admissions.push(AdmissionRecord {
            hadm_id: adm.hadm_id,
            subject_id: p.subject_id,
            admittime: adm.admittime,
            dischtime: adm.dischtime,
            deathtime: adm.deathtime,
            admission_type: adm.admission_type,
            diagnosis: descriptions.describe(primary).unwrap_or(primary).to_uppercase(),
            hospital_expire_flag: adm.deathtime.is_some(),
        });
        for (i, code) in adm.diagnoses.iter().enumerate() {
            ctx.tables.diagnoses.push(CodedRecord {
                subject_id: p.subject_id,
                hadm_id: adm.hadm_id,
                seq_num: i as u32 + 1,
                icd9_code: code.as_str().into(),
            });
        }
        let mut procedures: Vec<&str> = Vec::new();
        for stay in &adm.stays {
            if let Some((s, e)) = stay.ventilation.filter(|(s, _)| *s <= stay.group.outtime) {
                let long = (e.min(stay.group.outtime) - s) >= Duration::hours(96);
                procedures.push(if long { "9672" } else { "9671" });
            }
            if stay.iac_time.is_some_and(|t| t <= stay.group.outtime) {
                procedures.push("3891");
            }
        }
        procedures.dedup();
        for (i, code) in procedures.into_iter().enumerate() {
            ctx.tables.procedures.push(CodedRecord {
                subject_id: p.subject_id,
                hadm_id: adm.hadm_id,
                seq_num: i as u32 + 1,
                icd9_code: code.into(),
            });
        }

        // Admission laboratory panel, drawn before any ICU transfer.
        if let Some(first) = adm.stays.first() {
            let t = adm.admittime + Duration::minutes(10);
            ctx.lab_panel(adm, first, t, None);
        }
        if let Some(t) = adm.iac_pre_icu {
            let e = ctx.measurement(adm.hadm_id, None, ARTERIAL_LINE, t, ("Placed".into(), None), "");
            ctx.tables.chartevents.push(e);
        }

        for stay in &adm.stays {
            ctx.tables.icustays.push(IcuStayRecord {
                icustay_id: stay.icustay_id,
                hadm_id: adm.hadm_id,
                subject_id: p.subject_id,
                first_careunit: stay.group.first_careunit,
                last_careunit: stay.group.last_careunit,
                intime: stay.group.intime,
                outtime: stay.group.outtime,
                los_days: days_between(&stay.group.intime, &stay.group.outtime),
            });
            ctx.stay_events(adm, stay);
            if !stay.died_in_icu {
                let span = (stay.group.outtime - stay.group.intime).num_seconds();
                let lead = ctx.rng.gen_range(3600..=8 * 3600).min(span);
                ctx.tables.callouts.push(CalloutRecord {
                    subject_id: p.subject_id,
                    hadm_id: adm.hadm_id,
                    curr_careunit: Some(Location::Icu(stay.group.last_careunit)),
                    callout_time: stay.group.outtime - Duration::seconds(lead),
                    discharge_time: Some(stay.group.outtime),
                });
            }
        }
        transfers(&mut ctx, adm);
    }
}
