//! Typed rows of the policy and claim tables.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Binary target: did the policy produce at least one claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NoClaim = 0,
    Claim = 1,
}

impl Label {
    pub fn from_claim_count(claim_nb: u32) -> Self {
        if claim_nb > 0 {
            Label::Claim
        } else {
            Label::NoClaim
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Label::NoClaim),
            1 => Some(Label::Claim),
            _ => None,
        }
    }

    pub fn as_bit(self) -> u8 {
        self as u8
    }

    pub fn other(self) -> Self {
        match self {
            Label::NoClaim => Label::Claim,
            Label::Claim => Label::NoClaim,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::NoClaim => f.write_str("without claims"),
            Label::Claim => f.write_str("with claims"),
        }
    }
}

/// Declares a closed category set with a canonical token per variant and
/// any number of accepted aliases.
macro_rules! category {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $token:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }

            pub fn parse(raw: &str) -> Option<Self> {
                let raw = raw.trim();
                $(
                    if raw.eq_ignore_ascii_case($token) $(|| raw.eq_ignore_ascii_case($alias))* {
                        return Some($name::$variant);
                    }
                )+
                None
            }

            pub fn accepted() -> String {
                [$($token),+].join(", ")
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }
    };
}

category!(
    /// Coverage tier, from third-party liability only (`Mini`) to all claims (`Maxi`).
    Coverage {
        Mini => "Mini",
        Median1 => "Median1",
        Median2 => "Median2",
        Maxi => "Maxi",
    }
);

category!(PayFrequency {
    Annual => "Yearly" | "Annual" | "Annually",
    Biannual => "Biannual" | "Bi-annual" | "Biannually",
    Quarterly => "Quarterly",
    Monthly => "Monthly",
});

category!(Usage {
    WorkPrivate => "WorkPrivate",
    Retired => "Retired",
    Professional => "Professional",
    AllTrips => "AllTrips",
});

category!(Sex {
    M => "M" | "Male",
    F => "F" | "Female",
});

category!(Fuel {
    Diesel => "Diesel",
    Gasoline => "Gasoline",
    Hybrid => "Hybrid",
});

category!(VehicleType {
    Tourism => "Tourism",
    Commercial => "Commercial",
});

pub(crate) fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "yes" | "y" | "true" | "1" => Some(true),
        "no" | "n" | "false" | "0" => Some(false),
        _ => None,
    }
}

pub(crate) fn flag_token(flag: bool) -> &'static str {
    if flag {
        "Yes"
    } else {
        "No"
    }
}

/// One row of the policy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub id_policy: String,
    pub pol_bonus: f64,
    pub pol_coverage: Coverage,
    pub pol_duration: u32,
    pub pol_sit_duration: u32,
    pub pol_pay_freq: PayFrequency,
    pub pol_payd: bool,
    pub pol_usage: Usage,
    pub pol_insee_code: String,
    pub drv_drv2: bool,
    pub drv_age1: u32,
    /// Zero when there is no secondary driver.
    pub drv_age2: u32,
    pub drv_sex1: Sex,
    /// `None` when there is no secondary driver.
    pub drv_sex2: Option<Sex>,
    pub drv_age_lic1: u32,
    pub drv_age_lic2: u32,
    pub vh_age: Option<u32>,
    pub vh_cyl: f64,
    pub vh_din: f64,
    pub vh_fuel: Fuel,
    pub vh_make: String,
    pub vh_model: String,
    pub vh_sale_begin: u32,
    pub vh_sale_end: u32,
    pub vh_speed: f64,
    pub vh_type: VehicleType,
    pub vh_value: f64,
    pub vh_weight: f64,
}

/// How a column of the policy table participates in modelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    /// Free text or identifiers (ids, makes, models, INSEE codes).
    Text,
}

/// Policy-table columns in table order, with their kind.
pub const POLICY_COLUMNS: &[(&str, FeatureKind)] = &[
    ("id_policy", FeatureKind::Text),
    ("pol_bonus", FeatureKind::Numeric),
    ("pol_coverage", FeatureKind::Categorical),
    ("pol_duration", FeatureKind::Numeric),
    ("pol_sit_duration", FeatureKind::Numeric),
    ("pol_pay_freq", FeatureKind::Categorical),
    ("pol_payd", FeatureKind::Categorical),
    ("pol_usage", FeatureKind::Categorical),
    ("pol_insee_code", FeatureKind::Text),
    ("drv_drv2", FeatureKind::Categorical),
    ("drv_age1", FeatureKind::Numeric),
    ("drv_age2", FeatureKind::Numeric),
    ("drv_sex1", FeatureKind::Categorical),
    ("drv_sex2", FeatureKind::Categorical),
    ("drv_age_lic1", FeatureKind::Numeric),
    ("drv_age_lic2", FeatureKind::Numeric),
    ("vh_age", FeatureKind::Numeric),
    ("vh_cyl", FeatureKind::Numeric),
    ("vh_din", FeatureKind::Numeric),
    ("vh_fuel", FeatureKind::Categorical),
    ("vh_make", FeatureKind::Text),
    ("vh_model", FeatureKind::Text),
    ("vh_sale_begin", FeatureKind::Numeric),
    ("vh_sale_end", FeatureKind::Numeric),
    ("vh_speed", FeatureKind::Numeric),
    ("vh_type", FeatureKind::Categorical),
    ("vh_value", FeatureKind::Numeric),
    ("vh_weight", FeatureKind::Numeric),
];

pub fn feature_kind(name: &str) -> Option<FeatureKind> {
    POLICY_COLUMNS
        .iter()
        .find(|(column, _)| *column == name)
        .map(|(_, kind)| *kind)
}

/// Category token used for an absent secondary driver.
pub const NO_SECOND_DRIVER: &str = "none";

/// A single cell of a policy row, viewed generically.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue<'a> {
    Number(f64),
    Category(&'static str),
    Text(&'a str),
    Missing,
}

impl<'a> FeatureValue<'a> {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            FeatureValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    /// Renders the cell as it appears in a CSV file.
    pub fn to_cell(&self) -> String {
        match self {
            FeatureValue::Number(v) => format_number(*v),
            FeatureValue::Category(token) => (*token).to_string(),
            FeatureValue::Text(text) => (*text).to_string(),
            FeatureValue::Missing => String::new(),
        }
    }
}

pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl PolicyRecord {
    /// Looks a column up by its table name.
    pub fn feature(&self, name: &str) -> Option<FeatureValue<'_>> {
        use FeatureValue::*;
        let value = match name {
            "id_policy" => Text(&self.id_policy),
            "pol_bonus" => Number(self.pol_bonus),
            "pol_coverage" => Category(self.pol_coverage.token()),
            "pol_duration" => Number(self.pol_duration as f64),
            "pol_sit_duration" => Number(self.pol_sit_duration as f64),
            "pol_pay_freq" => Category(self.pol_pay_freq.token()),
            "pol_payd" => Category(flag_token(self.pol_payd)),
            "pol_usage" => Category(self.pol_usage.token()),
            "pol_insee_code" => Text(&self.pol_insee_code),
            "drv_drv2" => Category(flag_token(self.drv_drv2)),
            "drv_age1" => Number(self.drv_age1 as f64),
            "drv_age2" => Number(self.drv_age2 as f64),
            "drv_sex1" => Category(self.drv_sex1.token()),
            "drv_sex2" => Category(self.drv_sex2.map_or(NO_SECOND_DRIVER, Sex::token)),
            "drv_age_lic1" => Number(self.drv_age_lic1 as f64),
            "drv_age_lic2" => Number(self.drv_age_lic2 as f64),
            "vh_age" => self.vh_age.map_or(Missing, |age| Number(age as f64)),
            "vh_cyl" => Number(self.vh_cyl),
            "vh_din" => Number(self.vh_din),
            "vh_fuel" => Category(self.vh_fuel.token()),
            "vh_make" => Text(&self.vh_make),
            "vh_model" => Text(&self.vh_model),
            "vh_sale_begin" => Number(self.vh_sale_begin as f64),
            "vh_sale_end" => Number(self.vh_sale_end as f64),
            "vh_speed" => Number(self.vh_speed),
            "vh_type" => Category(self.vh_type.token()),
            "vh_value" => Number(self.vh_value),
            "vh_weight" => Number(self.vh_weight),
            _ => return None,
        };
        Some(value)
    }

    /// Cells in [`POLICY_COLUMNS`] order. Absent secondary-driver fields are
    /// written blank so that a re-parse yields the same record.
    pub fn to_cells(&self) -> Vec<String> {
        POLICY_COLUMNS
            .iter()
            .map(|(name, _)| {
                if !self.drv_drv2 && matches!(*name, "drv_sex2") && self.drv_sex2.is_none() {
                    return String::new();
                }
                self.feature(name)
                    .expect("every listed column is addressable")
                    .to_cell()
            })
            .collect()
    }
}

/// One row of the claim table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id_client: String,
    pub id_vehicle: String,
    pub claim_nb: u32,
    pub claim_amount: f64,
}

pub const CLAIM_AMOUNT_RANGE: (f64, f64) = (-2_000.0, 300_000.0);
pub const BONUS_RANGE: (f64, f64) = (0.5, 3.5);

/// A policy joined with its aggregate claim experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub policy: PolicyRecord,
    pub claim_nb: u32,
    pub claim_amount: f64,
    pub label: Label,
}

/// Merged table: one row per policy, in policy-table order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub rows: Vec<LabeledRow>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|row| row.label).collect()
    }

    pub fn total_claims(&self) -> u64 {
        self.rows.iter().map(|row| row.claim_nb as u64).sum()
    }

    pub fn total_amount(&self) -> f64 {
        self.rows.iter().map(|row| row.claim_amount).sum()
    }

    /// Share of rows labelled [`Label::Claim`].
    pub fn claim_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let claims = self.rows.iter().filter(|row| row.label == Label::Claim).count();
        claims as f64 / self.rows.len() as f64
    }
}
