use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    Chart,
    Lab,
}

/// Time-dependent structured variables. Urine is a rate in mL/kg/h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    DiasBp,
    Glucose,
    HeartRate,
    MeanBp,
    RespRate,
    SpO2,
    SysBp,
    Temp,
    Bicarbonate,
    Bun,
    Calcium,
    Chloride,
    Creatinine,
    Hemoglobin,
    Inr,
    Platelet,
    Potassium,
    Pt,
    Ptt,
    Wbc,
    Urine,
}

impl Variable {
    pub const ALL: [Variable; 21] = [
        Variable::DiasBp,
        Variable::Glucose,
        Variable::HeartRate,
        Variable::MeanBp,
        Variable::RespRate,
        Variable::SpO2,
        Variable::SysBp,
        Variable::Temp,
        Variable::Bicarbonate,
        Variable::Bun,
        Variable::Calcium,
        Variable::Chloride,
        Variable::Creatinine,
        Variable::Hemoglobin,
        Variable::Inr,
        Variable::Platelet,
        Variable::Potassium,
        Variable::Pt,
        Variable::Ptt,
        Variable::Wbc,
        Variable::Urine,
    ];

    pub const COUNT: usize = 21;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn kind(self) -> VariableKind {
        if self.index() < Variable::Bicarbonate.index() {
            VariableKind::Chart
        } else {
            VariableKind::Lab
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::DiasBp => "dias_bp",
            Variable::Glucose => "glucose",
            Variable::HeartRate => "heart_rate",
            Variable::MeanBp => "mean_bp",
            Variable::RespRate => "resp_rate",
            Variable::SpO2 => "sp_o2",
            Variable::SysBp => "sys_bp",
            Variable::Temp => "temp",
            Variable::Bicarbonate => "bicarbonate",
            Variable::Bun => "bun",
            Variable::Calcium => "calcium",
            Variable::Chloride => "chloride",
            Variable::Creatinine => "creatinine",
            Variable::Hemoglobin => "hemoglobin",
            Variable::Inr => "inr",
            Variable::Platelet => "platelet",
            Variable::Potassium => "potassium",
            Variable::Pt => "pt",
            Variable::Ptt => "ptt",
            Variable::Wbc => "wbc",
            Variable::Urine => "urine",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variable::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown variable `{s}`")))
    }
}
