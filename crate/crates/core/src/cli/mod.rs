//! The `ehrforge` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 integrity failure.

mod args;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

pub use args::{Cli, Command, Format, DATA_DIR_ENV, DEFAULT_SEED};
pub use output::{payload_csv, ReportEnvelope, StagedDir, TOOL};

use crate::analytics::{self, Dimension, Entity, MinAge};
use crate::deid::{deidentify, DeidConfig, ShiftConfig};
use crate::error::{Error, ErrorClass, Result};
use crate::icd::{parse_any, parse_in, IcdCode, IcdResources, Revision};
use crate::store::{ingest_csv, read_tables, validate_tables, write_csv, EhrStore, Strictness};
use crate::study::{run_study, Artifact, StudyConfig};
use crate::synthgen::{generate, PopulationSpec};
use crate::timeline::{assemble_timeline, extract_events, EventSelector, LabelEquivalence, ReconcileConfig};
use args::{CodesCommand, DeidCommand, IcdCommand, OutcomeKind, RevisionArg, StudyCommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTEGRITY: i32 = 3;
const DEFAULT_PATIENTS: usize = 20_000;

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Integrity => EXIT_INTEGRITY,
    }
}

/// Result of one command: the report and the exit code to use after
/// printing it.
struct Outcome {
    envelope: ReportEnvelope,
    code: i32,
}

impl From<ReportEnvelope> for Outcome {
    fn from(envelope: ReportEnvelope) -> Self {
        Outcome { envelope, code: EXIT_OK }
    }
}

/// Parse `args` (program name first), execute, print the report to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{e}");
                    return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_USAGE } else { EXIT_OK };
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let invocation: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = execute(&cli, &invocation).and_then(|o| {
        let text = match cli.format {
            Format::Json => o.envelope.to_json()?,
            Format::Csv => payload_csv(&o.envelope.payload)?,
        };
        Ok((text, o.code))
    });
    match result {
        Ok((text, code)) => {
            if let Err(e) = out.write_all(text.as_bytes()) {
                let _ = writeln!(err, "error: writing report: {e}");
                return EXIT_DATA;
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(e.class())
        }
    }
}

fn load_store(cli: &Cli) -> Result<EhrStore> {
    Ok(ingest_csv(cli.data_dir()?, Strictness::Strict)?.0)
}

fn resources(cli: &Cli) -> Result<IcdResources> {
    match &cli.icd_dir {
        Some(dir) => IcdResources::from_dir(dir),
        None => Ok(IcdResources::builtin().clone()),
    }
}

fn execute(cli: &Cli, invocation: &[String]) -> Result<Outcome> {
    let seed = cli.seed();
    let envelope = |definition: String, payload: serde_json::Value| ReportEnvelope::new(invocation, seed, definition, payload);
    Ok(match &cli.command {
        Command::Generate { patients, spec, out } => {
            let mut spec = match spec {
                Some(path) => PopulationSpec::from_json_file(path)?,
                None => PopulationSpec::with_patients(DEFAULT_PATIENTS, seed),
            };
            if let Some(n) = patients {
                spec.n_patients = *n;
            }
            if cli.seed.is_some() {
                spec.seed = seed;
            }
            spec.validate()?;
            let (store, truth) = generate(&spec)?;
            let staged = StagedDir::new(out)?;
            write_csv(&store, staged.path())?;
            let rows: std::collections::BTreeMap<String, usize> =
                store.row_counts().into_iter().map(|(t, n)| (t.file_stem().to_string(), n)).collect();
            let mut env = ReportEnvelope::new(
                invocation,
                spec.seed,
                format!("synthetic population of {} patients", spec.n_patients),
                json!({ "rows": rows, "ground_truth": truth }),
            )?;
            std::fs::write(staged.path().join("ground_truth.json"), env.to_json()?)
                .map_err(|e| Error::io(staged.path().join("ground_truth.json"), e))?;
            staged.commit()?;
            env = env.counter("patients", spec.n_patients as u64);
            env.into()
        }
        Command::Ingest { lenient } => {
            let strictness = if *lenient { Strictness::Lenient } else { Strictness::Strict };
            let (_, report) = ingest_csv(cli.data_dir()?, strictness)?;
            let dropped = report.total_dropped() as u64;
            let renumbered = report.renumbered_admissions as u64;
            envelope(format!("ingestion ({})", serde_json::to_value(strictness)?.as_str().unwrap_or("")), serde_json::to_value(report)?)?
                .counter("dropped_rows", dropped)
                .counter("renumbered_admissions", renumbered)
                .into()
        }
        Command::Validate => {
            let tables = read_tables(cli.data_dir()?)?;
            let report = validate_tables(&tables);
            let total = report.total() as u64;
            let env = envelope("integrity rules over all tables".into(), serde_json::to_value(&report)?)?.counter("violations", total);
            Outcome {
                envelope: env,
                code: if report.is_clean() { EXIT_OK } else { EXIT_INTEGRITY },
            }
        }
        Command::Deid(DeidCommand::Apply {
            out,
            names,
            window,
            drift_days,
            keep_elderly,
        }) => {
            let (start, end) = window
                .split_once(':')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Error::Usage(format!("--window expects START:END, got {window:?}")))?;
            let config = DeidConfig {
                seed,
                shift: ShiftConfig {
                    window_start: start,
                    window_end: end,
                    drift_days: *drift_days,
                },
                names: names.clone(),
                obfuscate_elderly: !keep_elderly,
            };
            let store = load_store(cli)?;
            let (shifted, report) = deidentify(&store, &config)?;
            let staged = StagedDir::new(out)?;
            write_csv(&shifted, staged.path())?;
            staged.commit()?;
            let scrubbed: usize = report.fields_scrubbed.values().sum();
            let elderly = report.elderly_obfuscated as u64;
            envelope(
                format!("date shift into {start}:{end}, seasonal drift <= {drift_days} days"),
                serde_json::to_value(report)?,
            )?
            .counter("elderly_obfuscated", elderly)
            .counter("fields_scrubbed", scrubbed as u64)
            .into()
        }
        Command::Describe { filter } => {
            let store = load_store(cli)?;
            let f = filter.to_filter(None);
            let count = |e| analytics::count_distinct(&store, e, &f);
            let payload = json!({
                "patients": count(Entity::Patients)?,
                "hospital_admissions": count(Entity::HospitalAdmissions)?,
                "icu_stays": count(Entity::IcuStays)?,
                "age": analytics::demographic_distribution(&store, Dimension::Age, &f)?,
                "gender": analytics::demographic_distribution(&store, Dimension::Gender, &f)?,
            });
            envelope(format!("unit of analysis: ICU stay; {}", f.describe("ICU admission")), payload)?.into()
        }
        Command::Outcomes {
            kind,
            horizon_days,
            boundary_hours,
            one_icustay,
            filter,
        } => {
            let store = load_store(cli)?;
            let f = filter.to_filter(Some(analytics::ADULT_MIN_AGE));
            match kind {
                OutcomeKind::Los => {
                    let r = analytics::hospital_los(&store, &f, *one_icustay)?;
                    let (multi, negative) = (r.excluded_multi_stay, r.excluded_negative);
                    let def = r.histogram.definition.clone();
                    envelope(def, serde_json::to_value(r)?)?
                        .counter("excluded_multi_stay", multi)
                        .counter("excluded_negative", negative)
                        .into()
                }
                _ => {
                    let r = match kind {
                        OutcomeKind::IcuMortality => analytics::icu_mortality(&store, &f, *boundary_hours)?,
                        OutcomeKind::HospitalMortality => analytics::hospital_mortality(&store, &f)?,
                        _ => analytics::mortality_within(&store, *horizon_days, &f)?,
                    };
                    envelope(r.definition.clone(), serde_json::to_value(r)?)?.into()
                }
            }
        }
        Command::Codes(CodesCommand::Top { k, filter }) => {
            let store = load_store(cli)?;
            let f = filter.to_filter(Some(analytics::ADULT_MIN_AGE));
            let r = analytics::top_k_primary_codes_by_unit(&store, *k, &f, &resources(cli)?)?;
            envelope(r.definition.clone(), serde_json::to_value(r)?)?.into()
        }
        Command::Codes(CodesCommand::Range { lo, hi, min_age }) => {
            let store = load_store(cli)?;
            let r = analytics::patients_with_code_range(&store, lo, hi, MinAge::AtLeast(*min_age))?;
            let def = r.histogram.definition.clone();
            envelope(def, serde_json::to_value(r)?)?.into()
        }
        Command::Patient {
            icustay,
            events,
            lab_window,
            equivalence,
        } => {
            let store = load_store(cli)?;
            let selector = EventSelector::from(*events);
            if selector == EventSelector::All {
                let equiv = match equivalence {
                    Some(path) => LabelEquivalence::from_path(path)?,
                    None => LabelEquivalence::builtin().clone(),
                };
                let t = assemble_timeline(&store, *icustay, (*lab_window).into(), &equiv, &ReconcileConfig::default())?;
                let (conflicts, unknown) = (t.conflicts.len() as u64, t.unknown_items);
                envelope(format!("timeline of ICU stay {icustay}; hours since ICU admission"), serde_json::to_value(t)?)?
                    .counter("chart_values_replaced", conflicts)
                    .counter("unknown_item_events", unknown)
                    .into()
            } else {
                let x = extract_events(&store, *icustay, selector, (*lab_window).into())?;
                let unknown = x.unknown_items;
                envelope(format!("events of ICU stay {icustay}; hours since ICU admission"), serde_json::to_value(x)?)?
                    .counter("unknown_item_events", unknown)
                    .into()
            }
        }
        Command::Icd(cmd) => icd(cmd, &resources(cli)?, &envelope)?.into(),
        Command::Study(StudyCommand::Run { config, out }) => study(cli, config, out, invocation)?.into(),
    })
}

fn parse_code(code: &str, revision: Option<RevisionArg>) -> Result<IcdCode> {
    match revision {
        Some(RevisionArg::Icd9) => parse_in(code, Revision::Icd9),
        Some(RevisionArg::Icd10) => parse_in(code, Revision::Icd10),
        None => parse_any(code),
    }
}

fn icd(
    cmd: &IcdCommand,
    res: &IcdResources,
    envelope: &dyn Fn(String, serde_json::Value) -> Result<ReportEnvelope>,
) -> Result<ReportEnvelope> {
    match cmd {
        IcdCommand::Lookup { code, revision } => {
            let c = parse_code(code, *revision)?;
            let description = match &c {
                IcdCode::Icd9(c9) => res.descriptions.get(c9).map(|d| d.description.clone()),
                IcdCode::Icd10(_) => None,
            };
            let chapter = res.chapters.chapter_of(&c).ok().cloned();
            envelope(
                format!("{} code lookup", c.revision()),
                json!({
                    "input": code,
                    "revision": c.revision(),
                    "canonical": c.canonical(),
                    "display": c.to_string(),
                    "parsed": c,
                    "description": description,
                    "chapter": chapter,
                }),
            )
        }
        IcdCommand::Map { code, revision } => {
            let c = parse_code(code, *revision)?;
            let targets: Vec<serde_json::Value> = match &c {
                IcdCode::Icd9(c9) => res
                    .mapping
                    .map_icd9(c9)
                    .iter()
                    .map(|t| json!({ "code": t.canonical(), "display": t.to_string(), "flags": res.mapping.flags(c9, t) }))
                    .collect(),
                IcdCode::Icd10(c10) => res
                    .mapping
                    .map_icd10(c10)
                    .iter()
                    .map(|s| json!({ "code": s.canonical(), "display": s.to_string(), "flags": res.mapping.flags(s, c10) }))
                    .collect(),
            };
            let def = format!("{} to {} mapping", c.revision(), match c.revision() {
                Revision::Icd9 => Revision::Icd10,
                Revision::Icd10 => Revision::Icd9,
            });
            envelope(def, json!({ "input": code, "canonical": c.canonical(), "targets": targets }))
        }
        IcdCommand::Chapter { code, revision } => {
            let c = parse_code(code, *revision)?;
            let chapter = res.chapters.chapter_of(&c)?;
            envelope(
                format!("{} chapter assignment", c.revision()),
                json!({ "input": code, "canonical": c.canonical(), "chapter": chapter }),
            )
        }
    }
}

fn study(cli: &Cli, config: &Path, out: &Path, invocation: &[String]) -> Result<ReportEnvelope> {
    let mut cfg = StudyConfig::from_path(config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let store = load_store(cli)?;
    let run = run_study(&store, &cfg, &resources(cli)?)?;
    let definition = format!(
        "unit of analysis: ICU stay; {}-day mortality from ICU admission; caliper {} x SD of logit propensity",
        cfg.horizon_days, cfg.caliper_multiplier
    );
    let staged = StagedDir::new(out)?;
    for artifact in run.artifacts()? {
        let path = staged.path().join(artifact.name());
        let body = match artifact {
            Artifact::Csv { body, .. } => body,
            Artifact::Json { body, .. } => ReportEnvelope::new(invocation, cfg.seed, definition.clone(), body)?.to_json()?,
        };
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    staged.commit()?;
    let imputed: usize = run.imputed.values().sum();
    let o = &run.outcomes;
    let payload = json!({
        "flowchart": run.flowchart.stages,
        "treated": run.treated,
        "control": run.control,
        "pairs": o.pairs,
        "unmatched_treated": run.matching.unmatched_treated,
        "selected_covariates": run.feature_selection.selected,
        "cv_auc": run.model.cv_auc,
        "mortality": o.mortality,
        "icu_discharge_alive": o.icu_discharge_alive,
        "warnings": run.warnings,
    });
    Ok(ReportEnvelope::new(invocation, cfg.seed, definition, payload)?
        .counter("imputed_values", imputed as u64)
        .counter("unmatched_treated", run.matching.unmatched_treated as u64))
}
