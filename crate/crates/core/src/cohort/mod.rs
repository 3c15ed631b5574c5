//! ICU stay data model, synthetic cohort generator and JSON Lines storage.

mod generator;
mod io;
mod variables;
mod vocab;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use generator::{generate_cohort, CohortConfig};
pub use io::{read_cohort, write_cohort, Cohort, CohortHeader};
pub use variables::{Variable, VariableKind};
pub use vocab::{Vocabulary, MARKER_WORDS, NULL_NOTE, PAD, RISK_WORDS};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ethnicity {
    White,
    Black,
    Asian,
    Other,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 4] = [
        Ethnicity::White,
        Ethnicity::Black,
        Ethnicity::Asian,
        Ethnicity::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Medications {
    pub diuretics: bool,
    pub nsaid: bool,
    pub radiocontrast: bool,
    pub angiotensin: bool,
}

impl Medications {
    pub const NAMES: [&'static str; 4] = ["diuretics", "nsaid", "radiocontrast", "angiotensin"];

    pub fn as_array(&self) -> [bool; 4] {
        [
            self.diuretics,
            self.nsaid,
            self.radiocontrast,
            self.angiotensin,
        ]
    }

    pub fn from_array(a: [bool; 4]) -> Self {
        Self {
            diuretics: a[0],
            nsaid: a[1],
            radiocontrast: a[2],
            angiotensin: a[3],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comorbidities {
    pub chf: bool,
    pub peripheral_vascular: bool,
    pub hypertension: bool,
    pub diabetes: bool,
    pub liver_disease: bool,
    pub mi: bool,
    pub cad: bool,
    pub cirrhosis: bool,
    pub jaundice: bool,
}

impl Comorbidities {
    pub const NAMES: [&'static str; 9] = [
        "chf",
        "peripheral_vascular",
        "hypertension",
        "diabetes",
        "liver_disease",
        "mi",
        "cad",
        "cirrhosis",
        "jaundice",
    ];

    pub fn as_array(&self) -> [bool; 9] {
        [
            self.chf,
            self.peripheral_vascular,
            self.hypertension,
            self.diabetes,
            self.liver_disease,
            self.mi,
            self.cad,
            self.cirrhosis,
            self.jaundice,
        ]
    }

    pub fn from_array(a: [bool; 9]) -> Self {
        Self {
            chf: a[0],
            peripheral_vascular: a[1],
            hypertension: a[2],
            diabetes: a[3],
            liver_disease: a[4],
            mi: a[5],
            cad: a[6],
            cirrhosis: a[7],
            jaundice: a[8],
        }
    }
}

/// Time-ordered measurements of one variable; offsets are hours since admission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSeries {
    pub variable: Variable,
    pub points: Vec<(f64, f64)>,
}

impl EventSeries {
    pub fn new(variable: Variable, points: Vec<(f64, f64)>) -> Self {
        Self { variable, points }
    }

    pub fn empty(variable: Variable) -> Self {
        Self::new(variable, Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Points with offsets in `[start, end)`.
    pub fn between(&self, start: f64, end: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .filter(move |(t, _)| *t >= start && *t < end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicalNote {
    pub offset_hours: f64,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcuStay {
    pub stay_id: String,
    pub patient_id: String,
    pub age: f64,
    pub sex: Sex,
    pub ethnicity: Ethnicity,
    pub weight_kg: Option<f64>,
    pub medications: Medications,
    pub comorbidities: Comorbidities,
    pub los_hours: f64,
    /// Renal replacement therapy was initiated during the stay.
    pub rrt: bool,
    pub chart_series: BTreeMap<Variable, EventSeries>,
    pub lab_series: BTreeMap<Variable, EventSeries>,
    pub notes: Vec<ClinicalNote>,
    /// Generator ground truth (1, 2 or 3). Never used as a model input.
    pub planted_subtype: Option<u8>,
}

impl IcuStay {
    pub fn series(&self, v: Variable) -> Option<&EventSeries> {
        match v.kind() {
            VariableKind::Chart => self.chart_series.get(&v),
            VariableKind::Lab => self.lab_series.get(&v),
        }
    }

    pub fn all_series(&self) -> impl Iterator<Item = &EventSeries> {
        self.chart_series.values().chain(self.lab_series.values())
    }

    /// Checks the structural invariants of a stay.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Schema(format!("stay {}: {msg}", self.stay_id)));
        if !(self.age > 0.0) {
            return bad(format!("age must be positive, got {}", self.age));
        }
        if let Some(w) = self.weight_kg {
            if !(w > 0.0) {
                return bad(format!("weight must be positive, got {w}"));
            }
        }
        if !(self.los_hours > 0.0) {
            return bad(format!(
                "length of stay must be positive, got {}",
                self.los_hours
            ));
        }
        if let Some(s) = self.planted_subtype {
            if !(1..=3).contains(&s) {
                return bad(format!("planted subtype {s} outside 1..=3"));
            }
        }
        for (map, kind) in [
            (&self.chart_series, VariableKind::Chart),
            (&self.lab_series, VariableKind::Lab),
        ] {
            for (key, series) in map {
                if *key != series.variable || key.kind() != kind {
                    return bad(format!("series `{}` filed under the wrong key", key.name()));
                }
                let mut prev = f64::NEG_INFINITY;
                for &(t, v) in &series.points {
                    if !(t >= 0.0 && t < self.los_hours) {
                        return bad(format!("{} offset {t} outside the stay", key.name()));
                    }
                    if t <= prev {
                        return bad(format!("{} offsets not strictly increasing", key.name()));
                    }
                    if !v.is_finite() {
                        return bad(format!("{} has a non-finite value", key.name()));
                    }
                    prev = t;
                }
            }
        }
        for note in &self.notes {
            if note.tokens.is_empty() {
                return bad("note with no tokens".into());
            }
            if !(note.offset_hours >= 0.0 && note.offset_hours < self.los_hours) {
                return bad(format!(
                    "note offset {} outside the stay",
                    note.offset_hours
                ));
            }
        }
        Ok(())
    }
}
