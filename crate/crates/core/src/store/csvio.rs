//! CSV ingestion and export using MIMIC-style file and column names.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use csv::StringRecord;
use serde::Serialize;

use super::records::*;
use super::validate::check_tables;
use super::{EhrStore, Tables};
use crate::error::{Error, Result};
use crate::time::{format_timestamp, parse_timestamp, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TableName {
    Patients,
    Admissions,
    IcuStays,
    ChartEvents,
    LabEvents,
    OutputEvents,
    InputEvents,
    Diagnoses,
    Procedures,
    Items,
    Transfers,
    Callout,
}

impl TableName {
    pub const ALL: [TableName; 12] = [
        TableName::Patients,
        TableName::Admissions,
        TableName::IcuStays,
        TableName::ChartEvents,
        TableName::LabEvents,
        TableName::OutputEvents,
        TableName::InputEvents,
        TableName::Diagnoses,
        TableName::Procedures,
        TableName::Items,
        TableName::Transfers,
        TableName::Callout,
    ];

    pub fn file_stem(&self) -> &'static str {
        match self {
            TableName::Patients => "PATIENTS",
            TableName::Admissions => "ADMISSIONS",
            TableName::IcuStays => "ICUSTAYS",
            TableName::ChartEvents => "CHARTEVENTS",
            TableName::LabEvents => "LABEVENTS",
            TableName::OutputEvents => "OUTPUTEVENTS",
            TableName::InputEvents => "INPUTEVENTS_MV",
            TableName::Diagnoses => "DIAGNOSES_ICD",
            TableName::Procedures => "PROCEDURES_ICD",
            TableName::Items => "D_ITEMS",
            TableName::Transfers => "TRANSFERS",
            TableName::Callout => "CALLOUT",
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.file_stem())
    }

    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            TableName::Patients => &["SUBJECT_ID", "GENDER", "DOB", "DOD", "DOD_HOSP", "EXPIRE_FLAG"],
            TableName::Admissions => &[
                "SUBJECT_ID",
                "HADM_ID",
                "ADMITTIME",
                "DISCHTIME",
                "DEATHTIME",
                "ADMISSION_TYPE",
                "DIAGNOSIS",
                "HOSPITAL_EXPIRE_FLAG",
            ],
            TableName::IcuStays => &[
                "SUBJECT_ID",
                "HADM_ID",
                "ICUSTAY_ID",
                "FIRST_CAREUNIT",
                "LAST_CAREUNIT",
                "INTIME",
                "OUTTIME",
                "LOS",
            ],
            TableName::ChartEvents => &[
                "SUBJECT_ID",
                "HADM_ID",
                "ICUSTAY_ID",
                "ITEMID",
                "CHARTTIME",
                "VALUE",
                "VALUENUM",
                "VALUEUOM",
            ],
            TableName::LabEvents => &["SUBJECT_ID", "HADM_ID", "ITEMID", "CHARTTIME", "VALUE", "VALUENUM", "VALUEUOM"],
            TableName::OutputEvents => &["SUBJECT_ID", "HADM_ID", "ICUSTAY_ID", "ITEMID", "CHARTTIME", "VALUE", "VALUEUOM"],
            TableName::InputEvents => &[
                "SUBJECT_ID",
                "HADM_ID",
                "ICUSTAY_ID",
                "ITEMID",
                "STARTTIME",
                "ENDTIME",
                "AMOUNT",
                "AMOUNTUOM",
                "RATE",
                "RATEUOM",
            ],
            TableName::Diagnoses | TableName::Procedures => &["SUBJECT_ID", "HADM_ID", "SEQ_NUM", "ICD9_CODE"],
            TableName::Items => &["ITEMID", "LABEL", "CATEGORY", "UNITNAME"],
            TableName::Transfers => &[
                "SUBJECT_ID",
                "HADM_ID",
                "ICUSTAY_ID",
                "PREV_CAREUNIT",
                "CURR_CAREUNIT",
                "INTIME",
                "OUTTIME",
            ],
            TableName::Callout => &["SUBJECT_ID", "HADM_ID", "CURR_CAREUNIT", "CREATETIME", "OUTCOMETIME"],
        }
    }
}

impl fmt::Display for TableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Fail on the first integrity violation.
    Strict,
    /// Drop rows with unresolvable keys, renumber diagnosis priorities.
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows: BTreeMap<String, usize>,
    pub dropped: BTreeMap<String, usize>,
    /// Admissions whose diagnosis or procedure priorities were renumbered.
    pub renumbered_admissions: usize,
}

impl IngestReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }
}

// ---------------------------------------------------------------------------
// Reading

struct Row<'a> {
    table: TableName,
    line: u64,
    rec: &'a StringRecord,
    cols: &'a [usize],
}

impl<'a> Row<'a> {
    fn err(&self, message: String) -> Error {
        Error::Row {
            table: self.table.file_stem(),
            line: self.line,
            message,
        }
    }

    fn raw(&self, c: usize) -> &'a str {
        match self.cols[c] {
            usize::MAX => "",
            i => self.rec.get(i).unwrap_or(""),
        }
    }

    fn name(&self, c: usize) -> &'static str {
        self.table.columns()[c]
    }

    fn req_str(&self, c: usize) -> Result<&'a str> {
        match self.raw(c) {
            "" => Err(self.err(format!("{} is required", self.name(c)))),
            s => Ok(s),
        }
    }

    fn opt_str(&self, c: usize) -> Option<&'a str> {
        match self.raw(c) {
            "" => None,
            s => Some(s),
        }
    }

    fn req_i64(&self, c: usize) -> Result<i64> {
        let s = self.req_str(c)?;
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("{} is not an integer: {s:?}", self.name(c))))
    }

    fn opt_i64(&self, c: usize) -> Result<Option<i64>> {
        self.opt_str(c)
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| self.err(format!("{} is not an integer: {s:?}", self.name(c))))
            })
            .transpose()
    }

    fn req_f64(&self, c: usize) -> Result<f64> {
        let s = self.req_str(c)?;
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("{} is not a number: {s:?}", self.name(c))))
    }

    fn opt_f64(&self, c: usize) -> Result<Option<f64>> {
        self.opt_str(c)
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| self.err(format!("{} is not a number: {s:?}", self.name(c))))
            })
            .transpose()
    }

    fn req_ts(&self, c: usize) -> Result<Timestamp> {
        let s = self.req_str(c)?;
        parse_timestamp(s).map_err(|_| self.err(format!("malformed timestamp in {}: {s:?}", self.name(c))))
    }

    fn opt_ts(&self, c: usize) -> Result<Option<Timestamp>> {
        self.opt_str(c)
            .map(|s| parse_timestamp(s).map_err(|_| self.err(format!("malformed timestamp in {}: {s:?}", self.name(c)))))
            .transpose()
    }

    fn flag(&self, c: usize) -> Result<bool> {
        match self.req_str(c)?.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(self.err(format!("{} must be 0 or 1, got {s:?}", self.name(c)))),
        }
    }

    fn parsed<T: std::str::FromStr<Err = String>>(&self, c: usize) -> Result<T> {
        self.req_str(c)?.trim().parse().map_err(|e: String| self.err(e))
    }
}

/// Columns that may be absent from a file (their values read as null).
fn optional_column(table: TableName, col: &str) -> bool {
    matches!(
        (table, col),
        (_, "DOD_HOSP") | (TableName::ChartEvents | TableName::OutputEvents | TableName::InputEvents, "ICUSTAY_ID")
    )
}

fn read_table<T>(
    dir: &Path,
    table: TableName,
    lines: &mut Vec<u64>,
    mut parse: impl FnMut(&Row<'_>) -> Result<T>,
) -> Result<Option<Vec<T>>> {
    let path = dir.join(table.file_name());
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::with_capacity(1 << 20, file));
    let headers = reader.headers()?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let mut cols = Vec::with_capacity(table.columns().len());
    for &name in table.columns() {
        match position.get(name) {
            Some(&i) => cols.push(i),
            None if optional_column(table, name) => cols.push(usize::MAX),
            None => {
                return Err(Error::Row {
                    table: table.file_stem(),
                    line: 1,
                    message: format!("missing column {name}"),
                })
            }
        }
    }
    let mut out = Vec::new();
    let mut rec = StringRecord::new();
    loop {
        let line = reader.position().line();
        if !reader.read_record(&mut rec)? {
            break;
        }
        let row = Row {
            table,
            line,
            rec: &rec,
            cols: &cols,
        };
        out.push(parse(&row)?);
        lines.push(line);
    }
    Ok(Some(out))
}

fn required<T>(dir: &Path, table: TableName, v: Option<Vec<T>>) -> Result<Vec<T>> {
    v.ok_or_else(|| Error::MissingTable {
        table: table.file_stem(),
        path: dir.join(table.file_name()),
    })
}

fn location(raw: Option<&str>) -> Option<Location> {
    raw.map(Location::parse)
}

fn measurement(r: &Row<'_>, with_stay: bool, valuenum_col: Option<usize>) -> Result<MeasurementEvent> {
    // Column layouts: chart = SUBJECT,HADM,ICUSTAY,ITEMID,CHARTTIME,VALUE,VALUENUM,VALUEUOM
    //                 lab   = SUBJECT,HADM,ITEMID,CHARTTIME,VALUE,VALUENUM,VALUEUOM
    //                 output= SUBJECT,HADM,ICUSTAY,ITEMID,CHARTTIME,VALUE,VALUEUOM
    let off = usize::from(with_stay);
    let value = r.opt_str(3 + off + 1).unwrap_or("");
    let valuenum = match valuenum_col {
        Some(c) => r.opt_f64(c)?,
        None => match value.trim() {
            "" => None,
            v => Some(v.parse().map_err(|_| r.err(format!("VALUE is not a number: {v:?}")))?),
        },
    };
    let uom_col = r.cols.len() - 1;
    Ok(MeasurementEvent {
        subject_id: r.req_i64(0)?,
        hadm_id: r.req_i64(1)?,
        icustay_id: if with_stay { r.opt_i64(2)? } else { None },
        itemid: r.req_i64(2 + off)?,
        charttime: r.req_ts(3 + off)?,
        value: value.into(),
        valuenum,
        valueuom: r.opt_str(uom_col).unwrap_or("").into(),
    })
}

fn read_all(dir: &Path, lines: &mut HashMap<TableName, Vec<u64>>) -> Result<Tables> {
    let mut l = |t: TableName| -> Vec<u64> { lines.remove(&t).unwrap_or_default() };
    let mut put = Vec::new();

    let mut ln = l(TableName::Patients);
    let patients = read_table(dir, TableName::Patients, &mut ln, |r| {
        Ok(PatientRecord {
            subject_id: r.req_i64(0)?,
            gender: r.parsed(1)?,
            dob: r.req_ts(2)?,
            dod: r.opt_ts(3)?,
            dod_hosp: r.opt_ts(4)?,
            expire_flag: r.flag(5)?,
        })
    })?;
    let patients = required(dir, TableName::Patients, patients)?;
    put.push((TableName::Patients, ln));

    let mut ln = l(TableName::Admissions);
    let admissions = read_table(dir, TableName::Admissions, &mut ln, |r| {
        Ok(AdmissionRecord {
            subject_id: r.req_i64(0)?,
            hadm_id: r.req_i64(1)?,
            admittime: r.req_ts(2)?,
            dischtime: r.req_ts(3)?,
            deathtime: r.opt_ts(4)?,
            admission_type: r.parsed(5)?,
            diagnosis: r.opt_str(6).unwrap_or("").to_string(),
            hospital_expire_flag: r.flag(7)?,
        })
    })?;
    let admissions = required(dir, TableName::Admissions, admissions)?;
    put.push((TableName::Admissions, ln));

    let mut ln = l(TableName::IcuStays);
    let icustays = read_table(dir, TableName::IcuStays, &mut ln, |r| {
        Ok(IcuStayRecord {
            subject_id: r.req_i64(0)?,
            hadm_id: r.req_i64(1)?,
            icustay_id: r.req_i64(2)?,
            first_careunit: r.parsed(3)?,
            last_careunit: r.parsed(4)?,
            intime: r.req_ts(5)?,
            outtime: r.req_ts(6)?,
            los_days: r.req_f64(7)?,
        })
    })?;
    let icustays = required(dir, TableName::IcuStays, icustays)?;
    put.push((TableName::IcuStays, ln));

    let mut ln = l(TableName::ChartEvents);
    let chartevents = read_table(dir, TableName::ChartEvents, &mut ln, |r| measurement(r, true, Some(6)))?;
    let chartevents = required(dir, TableName::ChartEvents, chartevents)?;
    put.push((TableName::ChartEvents, ln));

    let mut ln = l(TableName::LabEvents);
    let labevents = read_table(dir, TableName::LabEvents, &mut ln, |r| measurement(r, false, Some(5)))?;
    let labevents = required(dir, TableName::LabEvents, labevents)?;
    put.push((TableName::LabEvents, ln));

    let mut ln = l(TableName::OutputEvents);
    let outputevents = read_table(dir, TableName::OutputEvents, &mut ln, |r| measurement(r, true, None))?;
    let outputevents = required(dir, TableName::OutputEvents, outputevents)?;
    put.push((TableName::OutputEvents, ln));

    let mut ln = l(TableName::InputEvents);
    let inputevents = read_table(dir, TableName::InputEvents, &mut ln, |r| {
        Ok(InputEvent {
            subject_id: r.req_i64(0)?,
            hadm_id: r.req_i64(1)?,
            icustay_id: r.opt_i64(2)?,
            itemid: r.req_i64(3)?,
            starttime: r.req_ts(4)?,
            endtime: r.req_ts(5)?,
            amount: r.req_f64(6)?,
            amountuom: r.opt_str(7).unwrap_or("").into(),
            rate: r.opt_f64(8)?,
            rateuom: r.opt_str(9).unwrap_or("").into(),
        })
    })?;
    let inputevents = required(dir, TableName::InputEvents, inputevents)?;
    put.push((TableName::InputEvents, ln));

    let coded = |r: &Row<'_>| -> Result<CodedRecord> {
        let seq = r.req_i64(2)?;
        if seq < 1 || seq > u32::MAX as i64 {
            return Err(r.err(format!("SEQ_NUM must be a positive integer, got {seq}")));
        }
        Ok(CodedRecord {
            subject_id: r.req_i64(0)?,
            hadm_id: r.req_i64(1)?,
            seq_num: seq as u32,
            icd9_code: r.req_str(3)?.trim().into(),
        })
    };
    let mut ln = l(TableName::Diagnoses);
    let diagnoses = required(dir, TableName::Diagnoses, read_table(dir, TableName::Diagnoses, &mut ln, coded)?)?;
    put.push((TableName::Diagnoses, ln));
    let mut ln = l(TableName::Procedures);
    let procedures = required(dir, TableName::Procedures, read_table(dir, TableName::Procedures, &mut ln, coded)?)?;
    put.push((TableName::Procedures, ln));

    let mut ln = l(TableName::Items);
    let items = read_table(dir, TableName::Items, &mut ln, |r| {
        Ok(DictionaryItem {
            itemid: r.req_i64(0)?,
            label: r.opt_str(1).unwrap_or("").to_string(),
            category: r.opt_str(2).unwrap_or("").to_string(),
            unitname: r.opt_str(3).unwrap_or("").to_string(),
        })
    })?;
    let items = required(dir, TableName::Items, items)?;
    put.push((TableName::Items, ln));

    let mut ln = l(TableName::Transfers);
    let transfers = read_table(dir, TableName::Transfers, &mut ln, |r| {
        Ok(TransferRecord {
            subject_id: r.req_i64(0)?,
            hadm_id: r.req_i64(1)?,
            icustay_id: r.opt_i64(2)?,
            prev_careunit: location(r.opt_str(3)),
            curr_careunit: location(r.opt_str(4)),
            intime: r.req_ts(5)?,
            outtime: r.opt_ts(6)?,
        })
    })?;
    let transfers = required(dir, TableName::Transfers, transfers)?;
    put.push((TableName::Transfers, ln));

    let mut ln = l(TableName::Callout);
    let callouts = read_table(dir, TableName::Callout, &mut ln, |r| {
        Ok(CalloutRecord {
            subject_id: r.req_i64(0)?,
            hadm_id: r.req_i64(1)?,
            curr_careunit: location(r.opt_str(2)),
            callout_time: r.req_ts(3)?,
            discharge_time: r.opt_ts(4)?,
        })
    })?
    .unwrap_or_default();
    put.push((TableName::Callout, ln));

    lines.extend(put);
    Ok(Tables {
        patients,
        admissions,
        icustays,
        chartevents,
        labevents,
        outputevents,
        inputevents,
        diagnoses,
        procedures,
        items,
        transfers,
        callouts,
    })
}

/// Load a directory of table CSVs into a frozen store.
///
/// In [`Strictness::Strict`] mode any integrity violation aborts ingestion
/// with an error naming the table and line. In lenient mode rows whose keys
/// do not resolve are dropped (and counted) and diagnosis priorities are
/// renumbered to be contiguous.
pub fn ingest_csv(dir: &Path, strictness: Strictness) -> Result<(EhrStore, IngestReport)> {
    let mut lines = HashMap::new();
    let mut tables = read_all(dir, &mut lines)?;
    let mut report = IngestReport::default();

    match strictness {
        Strictness::Strict => {
            if let Some(v) = check_tables(&tables, 1).violations.into_iter().next() {
                let line = lines.get(&v.table).and_then(|l| l.get(v.row)).copied().unwrap_or(0);
                return Err(Error::Integrity {
                    table: v.table.file_stem(),
                    line,
                    message: v.message,
                });
            }
        }
        Strictness::Lenient => {
            report.renumbered_admissions = repair(&mut tables, &mut report.dropped);
        }
    }
    let store = EhrStore::freeze(tables);
    for (name, n) in store.row_counts() {
        report.rows.insert(name.file_stem().to_string(), n);
    }
    Ok((store, report))
}

/// Read every table from `dir` without integrity checks or repair.
pub fn read_tables(dir: &Path) -> Result<Tables> {
    read_all(dir, &mut HashMap::new())
}

fn retain_counted<T>(
    rows: &mut Vec<T>,
    table: TableName,
    dropped: &mut BTreeMap<String, usize>,
    mut keep: impl FnMut(&T) -> bool,
) {
    let before = rows.len();
    rows.retain(|r| keep(r));
    let n = before - rows.len();
    if n > 0 {
        *dropped.entry(table.file_stem().to_string()).or_default() += n;
    }
}

/// Lenient-mode repair: drop unresolvable rows, cascade through dependent
/// tables, renumber coded-record priorities. Returns how many admissions had
/// their priorities renumbered.
fn repair(t: &mut Tables, dropped: &mut BTreeMap<String, usize>) -> usize {
    let mut seen = HashSet::new();
    retain_counted(&mut t.patients, TableName::Patients, dropped, |p| seen.insert(p.subject_id));
    let subjects = seen;

    let mut hadm_owner: HashMap<HadmId, SubjectId> = HashMap::new();
    retain_counted(&mut t.admissions, TableName::Admissions, dropped, |a| {
        subjects.contains(&a.subject_id) && hadm_owner.insert(a.hadm_id, a.subject_id).is_none()
    });

    let mut stay_owner: HashMap<IcuStayId, HadmId> = HashMap::new();
    retain_counted(&mut t.icustays, TableName::IcuStays, dropped, |s| {
        hadm_owner.get(&s.hadm_id) == Some(&s.subject_id) && stay_owner.insert(s.icustay_id, s.hadm_id).is_none()
    });

    let mut item_ids = HashSet::new();
    retain_counted(&mut t.items, TableName::Items, dropped, |i| item_ids.insert(i.itemid));

    let keys_ok = |subject: SubjectId, hadm: HadmId, stay: Option<IcuStayId>| {
        hadm_owner.get(&hadm) == Some(&subject) && stay.map_or(true, |s| stay_owner.get(&s) == Some(&hadm))
    };
    retain_counted(&mut t.chartevents, TableName::ChartEvents, dropped, |e| {
        keys_ok(e.subject_id, e.hadm_id, e.icustay_id) && item_ids.contains(&e.itemid)
    });
    retain_counted(&mut t.labevents, TableName::LabEvents, dropped, |e| {
        keys_ok(e.subject_id, e.hadm_id, e.icustay_id) && item_ids.contains(&e.itemid)
    });
    retain_counted(&mut t.outputevents, TableName::OutputEvents, dropped, |e| {
        keys_ok(e.subject_id, e.hadm_id, e.icustay_id) && item_ids.contains(&e.itemid)
    });
    retain_counted(&mut t.inputevents, TableName::InputEvents, dropped, |e| {
        keys_ok(e.subject_id, e.hadm_id, e.icustay_id) && item_ids.contains(&e.itemid)
    });
    retain_counted(&mut t.transfers, TableName::Transfers, dropped, |e| {
        keys_ok(e.subject_id, e.hadm_id, e.icustay_id)
    });
    retain_counted(&mut t.callouts, TableName::Callout, dropped, |e| keys_ok(e.subject_id, e.hadm_id, None));

    let mut renumbered = HashSet::new();
    for (rows, table) in [
        (&mut t.diagnoses, TableName::Diagnoses),
        (&mut t.procedures, TableName::Procedures),
    ] {
        let mut pairs = HashSet::new();
        retain_counted(rows, table, dropped, |d| {
            keys_ok(d.subject_id, d.hadm_id, None) && pairs.insert((d.hadm_id, d.seq_num))
        });
        let mut by_hadm: BTreeMap<HadmId, Vec<usize>> = BTreeMap::new();
        for (i, d) in rows.iter().enumerate() {
            by_hadm.entry(d.hadm_id).or_default().push(i);
        }
        for (hadm, mut idx) in by_hadm {
            idx.sort_by_key(|&i| rows[i].seq_num);
            for (rank, &i) in idx.iter().enumerate() {
                let want = rank as u32 + 1;
                if rows[i].seq_num != want {
                    rows[i].seq_num = want;
                    renumbered.insert(hadm);
                }
            }
        }
    }
    renumbered.len()
}

// ---------------------------------------------------------------------------
// Writing

fn ts(t: &Timestamp) -> String {
    format_timestamp(t)
}

fn opt_ts(t: &Option<Timestamp>) -> String {
    t.as_ref().map(format_timestamp).unwrap_or_default()
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn write_table<T>(
    dir: &Path,
    table: TableName,
    rows: &[T],
    mut record: impl FnMut(&T) -> Vec<String>,
) -> Result<()> {
    let path = dir.join(table.file_name());
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::WriterBuilder::new().from_writer(BufWriter::with_capacity(1 << 20, file));
    w.write_record(table.columns())?;
    for row in rows {
        w.write_record(record(row))?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Export every table (including CALLOUT) as MIMIC-style CSV into `dir`.
/// Output bytes are a pure function of the store contents.
pub fn write_csv(store: &EhrStore, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let t = store.tables();
    write_table(dir, TableName::Patients, &t.patients, |p| {
        vec![
            p.subject_id.to_string(),
            p.gender.to_string(),
            ts(&p.dob),
            opt_ts(&p.dod),
            opt_ts(&p.dod_hosp),
            flag(p.expire_flag).into(),
        ]
    })?;
    write_table(dir, TableName::Admissions, &t.admissions, |a| {
        vec![
            a.subject_id.to_string(),
            a.hadm_id.to_string(),
            ts(&a.admittime),
            ts(&a.dischtime),
            opt_ts(&a.deathtime),
            a.admission_type.to_string(),
            a.diagnosis.clone(),
            flag(a.hospital_expire_flag).into(),
        ]
    })?;
    write_table(dir, TableName::IcuStays, &t.icustays, |s| {
        vec![
            s.subject_id.to_string(),
            s.hadm_id.to_string(),
            s.icustay_id.to_string(),
            s.first_careunit.to_string(),
            s.last_careunit.to_string(),
            ts(&s.intime),
            ts(&s.outtime),
            s.los_days.to_string(),
        ]
    })?;
    write_table(dir, TableName::ChartEvents, &t.chartevents, |e| {
        vec![
            e.subject_id.to_string(),
            e.hadm_id.to_string(),
            opt(&e.icustay_id),
            e.itemid.to_string(),
            ts(&e.charttime),
            e.value.to_string(),
            opt(&e.valuenum),
            e.valueuom.to_string(),
        ]
    })?;
    write_table(dir, TableName::LabEvents, &t.labevents, |e| {
        vec![
            e.subject_id.to_string(),
            e.hadm_id.to_string(),
            e.itemid.to_string(),
            ts(&e.charttime),
            e.value.to_string(),
            opt(&e.valuenum),
            e.valueuom.to_string(),
        ]
    })?;
    write_table(dir, TableName::OutputEvents, &t.outputevents, |e| {
        vec![
            e.subject_id.to_string(),
            e.hadm_id.to_string(),
            opt(&e.icustay_id),
            e.itemid.to_string(),
            ts(&e.charttime),
            e.value.to_string(),
            e.valueuom.to_string(),
        ]
    })?;
    write_table(dir, TableName::InputEvents, &t.inputevents, |e| {
        vec![
            e.subject_id.to_string(),
            e.hadm_id.to_string(),
            opt(&e.icustay_id),
            e.itemid.to_string(),
            ts(&e.starttime),
            ts(&e.endtime),
            e.amount.to_string(),
            e.amountuom.to_string(),
            opt(&e.rate),
            e.rateuom.to_string(),
        ]
    })?;
    let coded = |d: &CodedRecord| {
        vec![
            d.subject_id.to_string(),
            d.hadm_id.to_string(),
            d.seq_num.to_string(),
            d.icd9_code.to_string(),
        ]
    };
    write_table(dir, TableName::Diagnoses, &t.diagnoses, coded)?;
    write_table(dir, TableName::Procedures, &t.procedures, coded)?;
    write_table(dir, TableName::Items, &t.items, |i| {
        vec![i.itemid.to_string(), i.label.clone(), i.category.clone(), i.unitname.clone()]
    })?;
    write_table(dir, TableName::Transfers, &t.transfers, |r| {
        vec![
            r.subject_id.to_string(),
            r.hadm_id.to_string(),
            opt(&r.icustay_id),
            opt(&r.prev_careunit),
            opt(&r.curr_careunit),
            ts(&r.intime),
            opt_ts(&r.outtime),
        ]
    })?;
    write_table(dir, TableName::Callout, &t.callouts, |c| {
        vec![
            c.subject_id.to_string(),
            c.hadm_id.to_string(),
            opt(&c.curr_careunit),
            ts(&c.callout_time),
            opt_ts(&c.discharge_time),
        ]
    })?;
    Ok(TableName::ALL.iter().map(|t| dir.join(t.file_name())).collect())
}
