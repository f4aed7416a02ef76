//! Dictionary item identifiers used by the generator and the default study
//! configuration, following MIMIC-III MetaVision numbering where one exists.

use crate::store::{DictionaryItem, ItemId};

pub const HEART_RATE: ItemId = 220045;
pub const SPO2: ItemId = 220277;
pub const RESP_RATE: ItemId = 220210;
pub const GCS_TOTAL: ItemId = 198;
pub const CODE_STATUS: ItemId = 128;
pub const VENT_MODE: ItemId = 223849;
pub const ARTERIAL_LINE: ItemId = 225752;
pub const CHART_MAGNESIUM: ItemId = 220635;
pub const CHART_POTASSIUM: ItemId = 227442;

pub const LAB_MAGNESIUM: ItemId = 50960;
pub const LAB_POTASSIUM: ItemId = 50971;
pub const LAB_CREATININE: ItemId = 50912;
pub const LAB_WBC: ItemId = 51301;
pub const LAB_HEMOGLOBIN: ItemId = 51222;
pub const LAB_LACTATE: ItemId = 50813;
pub const LAB_PH: ItemId = 50820;
pub const LAB_PO2: ItemId = 50821;
pub const LAB_PCO2: ItemId = 50818;
pub const LAB_SPECIMEN_TYPE: ItemId = 50800;

pub const NACL: ItemId = 225158;
pub const PROPOFOL: ItemId = 222168;
pub const FENTANYL: ItemId = 221744;
pub const INSULIN: ItemId = 223258;
pub const NOREPINEPHRINE: ItemId = 221906;
pub const EPINEPHRINE: ItemId = 221289;
pub const DOPAMINE: ItemId = 221662;
pub const VASOPRESSIN: ItemId = 222315;
pub const PHENYLEPHRINE: ItemId = 221749;

pub const FOLEY: ItemId = 226559;
pub const VOID: ItemId = 226560;

pub const VASOPRESSORS: [ItemId; 5] = [NOREPINEPHRINE, EPINEPHRINE, DOPAMINE, VASOPRESSIN, PHENYLEPHRINE];

/// Specimen-type values marking arterial and venous blood gases.
pub const ARTERIAL_SPECIMEN: &str = "ART";
pub const VENOUS_SPECIMEN: &str = "VEN";

const DEFAULT_ITEMS: &[(ItemId, &str, &str, &str)] = &[
    (GCS_TOTAL, "GCS Total", "Neurological", "points"),
    (CODE_STATUS, "Code Status", "Adm History/FHPA", ""),
    (HEART_RATE, "Heart Rate", "Routine Vital Signs", "bpm"),
    (RESP_RATE, "Respiratory Rate", "Respiratory", "insp/min"),
    (SPO2, "O2 saturation pulseoxymetry", "Respiratory", "%"),
    (CHART_MAGNESIUM, "Magnesium", "Labs", "mg/dL"),
    (CHART_POTASSIUM, "Potassium", "Labs", "mEq/L"),
    (VENT_MODE, "Ventilator Mode", "Respiratory", ""),
    (ARTERIAL_LINE, "Arterial Line", "Access Lines - Invasive", ""),
    (LAB_SPECIMEN_TYPE, "Specimen Type", "Blood Gas", ""),
    (LAB_LACTATE, "Lactate", "Blood Gas", "mmol/L"),
    (LAB_PCO2, "pCO2", "Blood Gas", "mm Hg"),
    (LAB_PH, "pH", "Blood Gas", "units"),
    (LAB_PO2, "pO2", "Blood Gas", "mm Hg"),
    (LAB_CREATININE, "Creatinine", "Chemistry", "mg/dL"),
    (LAB_MAGNESIUM, "Magnesium", "Chemistry", "mg/dL"),
    (LAB_POTASSIUM, "Potassium", "Chemistry", "mEq/L"),
    (LAB_HEMOGLOBIN, "Hemoglobin", "Hematology", "g/dL"),
    (LAB_WBC, "WBC Count", "Hematology", "K/uL"),
    (NACL, "NaCl 0.9%", "Fluids/Intake", "mL"),
    (EPINEPHRINE, "Epinephrine", "Medications", "mg"),
    (DOPAMINE, "Dopamine", "Medications", "mg"),
    (FENTANYL, "Fentanyl", "Medications", "mcg"),
    (PHENYLEPHRINE, "Phenylephrine", "Medications", "mg"),
    (NOREPINEPHRINE, "Norepinephrine", "Medications", "mg"),
    (PROPOFOL, "Propofol", "Medications", "mg"),
    (VASOPRESSIN, "Vasopressin", "Medications", "units"),
    (INSULIN, "Insulin - Regular", "Medications", "units"),
    (FOLEY, "Foley", "Output", "mL"),
    (VOID, "Void", "Output", "mL"),
];

/// Dictionary rows for every item the generator emits, ordered by item id.
pub fn default_dictionary() -> Vec<DictionaryItem> {
    let mut items: Vec<DictionaryItem> = DEFAULT_ITEMS
        .iter()
        .map(|&(itemid, label, category, unitname)| DictionaryItem {
            itemid,
            label: label.to_string(),
            category: category.to_string(),
            unitname: unitname.to_string(),
        })
        .collect();
    items.sort_by_key(|i| i.itemid);
    items
}
