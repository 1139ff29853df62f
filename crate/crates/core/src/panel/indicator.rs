use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of daily indicators tracked per region.
pub const INDICATOR_COUNT: usize = 16;

/// Catalogue names, in indicator order X1..X16.
pub const INDICATOR_NAMES: [&str; INDICATOR_COUNT] = [
    "Hospitalized with symptoms",
    "Intensive care",
    "ICU daily admissions",
    "Home quarantine",
    "Total positive",
    "Discharged healed",
    "Deceased",
    "Cases confirmed by PCR",
    "Cases confirmed by RAT",
    "Total cases",
    "Increase in total cases",
    "People tested",
    "PCR",
    "RAT",
    "Total swabs",
    "Increase in total swabs",
];

/// One of the sixteen indicators, `X1`..`X16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IndicatorId(u8);

impl IndicatorId {
    /// `index` is 1-based, as in `X1`.
    pub fn new(index: u8) -> Option<Self> {
        (1..=INDICATOR_COUNT as u8)
            .contains(&index)
            .then_some(IndicatorId(index))
    }

    pub fn from_position(pos: usize) -> Self {
        assert!(pos < INDICATOR_COUNT, "indicator position {pos} out of range");
        IndicatorId(pos as u8 + 1)
    }

    pub fn all() -> impl Iterator<Item = IndicatorId> {
        (1..=INDICATOR_COUNT as u8).map(IndicatorId)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// 0-based position into indicator vectors.
    pub fn position(self) -> usize {
        self.0 as usize - 1
    }

    pub fn name(self) -> &'static str {
        INDICATOR_NAMES[self.position()]
    }
}

impl fmt::Display for IndicatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

impl FromStr for IndicatorId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix('X')
            .or_else(|| s.strip_prefix('x'))
            .ok_or_else(|| format!("indicator id '{s}' must look like X1..X16"))?;
        digits
            .parse::<u8>()
            .ok()
            .and_then(IndicatorId::new)
            .ok_or_else(|| format!("indicator id '{s}' must look like X1..X16"))
    }
}

impl TryFrom<String> for IndicatorId {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<IndicatorId> for String {
    fn from(id: IndicatorId) -> String {
        id.to_string()
    }
}

/// Ordered risk level. `L < M < H`, codes 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskLevel {
    L,
    M,
    H,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 3] = [RiskLevel::L, RiskLevel::M, RiskLevel::H];

    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    /// 0-based category index, used for probability vectors.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RiskLevel::L => "L",
            RiskLevel::M => "M",
            RiskLevel::H => "H",
        };
        f.write_str(s)
    }
}

impl FromStr for RiskLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "L" | "l" | "1" => Ok(RiskLevel::L),
            "M" | "m" | "2" => Ok(RiskLevel::M),
            "H" | "h" | "3" => Ok(RiskLevel::H),
            other => Err(format!("unknown risk level '{other}'")),
        }
    }
}
