use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytics::{CohortFilter, MinAge};
use crate::error::{Error, Result};
use crate::store::{CareUnit, Gender};
use crate::timeline::{EventSelector, LabWindow};

pub const DATA_DIR_ENV: &str = "EHRFORGE_DATA_DIR";
/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "ehrforge", version, about = "Synthetic ICU records, de-identification, cohort analytics and the arterial catheter study")]
pub struct Cli {
    /// Report format; CSV emits the payload only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for every random choice of the invocation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory of MIMIC-style CSV tables.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    pub data: Option<PathBuf>,
    /// Directory overriding the built-in ICD reference tables.
    #[arg(long, global = true)]
    pub icd_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn data_dir(&self) -> Result<&PathBuf> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("--data or {DATA_DIR_ENV} is required")))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic population and write it as CSV tables.
    Generate {
        /// Population size; overrides the population spec file. Defaults to 20000.
        #[arg(long)]
        patients: Option<usize>,
        /// Population spec (JSON); its seed is replaced by --seed when given.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load the tables and report row counts.
    Ingest {
        /// Drop rows with unresolvable keys instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Check every integrity rule and report violation counts.
    Validate,
    /// De-identification.
    #[command(subcommand)]
    Deid(DeidCommand),
    /// Entity counts and age and gender distributions.
    Describe {
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Mortality and length-of-stay queries.
    Outcomes {
        #[arg(long, value_enum)]
        kind: OutcomeKind,
        /// Horizon for --kind mortality.
        #[arg(long, default_value_t = 30)]
        horizon_days: i64,
        /// Margin around the ICU stay for --kind icu-mortality.
        #[arg(long, default_value_t = crate::analytics::DEFAULT_BOUNDARY_HOURS)]
        boundary_hours: i64,
        /// For --kind los: keep only admissions with at most one ICU stay.
        #[arg(long)]
        one_icustay: bool,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Diagnosis code queries.
    #[command(subcommand)]
    Codes(CodesCommand),
    /// Timeline of one ICU stay.
    Patient {
        #[arg(long)]
        icustay: i64,
        #[arg(long, value_enum, default_value_t = EventsArg::All)]
        events: EventsArg,
        #[arg(long, value_enum, default_value_t = LabWindowArg::Admission)]
        lab_window: LabWindowArg,
        /// Chart-to-lab label equivalence CSV.
        #[arg(long)]
        equivalence: Option<PathBuf>,
    },
    /// ICD code utilities.
    #[command(subcommand)]
    Icd(IcdCommand),
    /// Arterial catheter cohort study.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Debug, Subcommand)]
pub enum DeidCommand {
    /// Shift dates, obfuscate elderly ages and scrub text; write the result.
    Apply {
        #[arg(long)]
        out: PathBuf,
        /// Names to scrub from free text; repeatable.
        #[arg(long = "name")]
        names: Vec<String>,
        /// Target year window as START:END.
        #[arg(long, default_value = "2100:2200")]
        window: String,
        #[arg(long, default_value_t = crate::deid::DEFAULT_DRIFT_DAYS)]
        drift_days: f64,
        /// Keep ages above 89 as they are.
        #[arg(long)]
        keep_elderly: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum CodesCommand {
    /// Most frequent primary diagnoses per first ICU unit.
    Top {
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Patients with a diagnosis in an ICD-9 category range.
    Range {
        #[arg(long)]
        lo: String,
        #[arg(long)]
        hi: String,
        /// Inclusive lower age bound at hospital admission.
        #[arg(long, default_value_t = 0.0)]
        min_age: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum IcdCommand {
    /// Parse a code and report its description and chapter.
    Lookup {
        code: String,
        #[arg(long, value_enum)]
        revision: Option<RevisionArg>,
    },
    /// Map a code to the other revision.
    Map {
        code: String,
        #[arg(long, value_enum)]
        revision: Option<RevisionArg>,
    },
    /// Chapter of a code.
    Chapter {
        code: String,
        #[arg(long, value_enum)]
        revision: Option<RevisionArg>,
    },
}

#[derive(Debug, Subcommand)]
pub enum StudyCommand {
    /// Run the full study and write its artifacts.
    Run {
        /// Study configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutcomeKind {
    IcuMortality,
    HospitalMortality,
    Mortality,
    Los,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EventsArg {
    Chart,
    Lab,
    Input,
    Output,
    All,
}

impl From<EventsArg> for EventSelector {
    fn from(e: EventsArg) -> Self {
        match e {
            EventsArg::Chart => EventSelector::Chart,
            EventsArg::Lab => EventSelector::Lab,
            EventsArg::Input => EventSelector::Input,
            EventsArg::Output => EventSelector::Output,
            EventsArg::All => EventSelector::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabWindowArg {
    Admission,
    IcuStay,
}

impl From<LabWindowArg> for LabWindow {
    fn from(w: LabWindowArg) -> Self {
        match w {
            LabWindowArg::Admission => LabWindow::Admission,
            LabWindowArg::IcuStay => LabWindow::IcuStay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RevisionArg {
    Icd9,
    Icd10,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FilterArgs {
    /// Keep patients older than this (strict).
    #[arg(long)]
    pub min_age: Option<f64>,
    /// Keep patients at most this old.
    #[arg(long)]
    pub max_age: Option<f64>,
    /// First ICU unit; repeatable.
    #[arg(long = "unit", value_parser = parse_unit)]
    pub units: Vec<CareUnit>,
    #[arg(long, value_parser = parse_gender)]
    pub gender: Option<Gender>,
}

fn parse_unit(raw: &str) -> std::result::Result<CareUnit, String> {
    raw.to_ascii_uppercase().parse()
}

fn parse_gender(raw: &str) -> std::result::Result<Gender, String> {
    raw.to_ascii_uppercase().parse()
}

impl FilterArgs {
    /// The filter, with `default_min_age` as a strict bound when none is given.
    pub fn to_filter(&self, default_min_age: Option<f64>) -> CohortFilter {
        CohortFilter {
            min_age: self.min_age.or(default_min_age).map(MinAge::Over),
            max_age: self.max_age,
            units: self.units.clone(),
            gender: self.gender,
            ..CohortFilter::default()
        }
    }
}
