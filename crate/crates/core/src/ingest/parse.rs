//! CSV readers for the policy, claim and merged tables.

use super::record::*;
use super::IngestError;
use csv::{ReaderBuilder, StringRecord};
use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

/// Separator used between client and vehicle ids when building policy keys.
pub const DEFAULT_ID_SEPARATOR: &str = "-";

fn open(path: &Path) -> Result<std::fs::File, IngestError> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Column lookup for one header row.
struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &StringRecord) -> Self {
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, name)| (name.trim().trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        Columns { index }
    }

    fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn require(&self, name: &str) -> Result<usize, IngestError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    }
}

/// Cell accessor bound to one data row, producing located errors.
struct Cells<'r> {
    record: &'r StringRecord,
    columns: &'r Columns,
    line: u64,
}

impl<'r> Cells<'r> {
    fn raw(&self, column: &str) -> Result<&'r str, IngestError> {
        let i = self.columns.require(column)?;
        Ok(self.record.get(i).unwrap_or("").trim())
    }

    fn fail(&self, column: &str, message: impl Into<String>) -> IngestError {
        IngestError::Field {
            line: self.line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn text(&self, column: &str) -> Result<String, IngestError> {
        Ok(self.raw(column)?.to_string())
    }

    fn optional_number(&self, column: &str) -> Result<Option<f64>, IngestError> {
        let raw = self.raw(column)?;
        if is_missing(raw) {
            return Ok(None);
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.fail(column, format!("cannot parse {raw:?} as a number"))),
        }
    }

    fn number(&self, column: &str) -> Result<f64, IngestError> {
        self.optional_number(column)?
            .ok_or_else(|| self.fail(column, "missing value"))
    }

    fn optional_count(&self, column: &str) -> Result<Option<u32>, IngestError> {
        match self.optional_number(column)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(Some(v as u32)),
            Some(v) => Err(self.fail(column, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn count(&self, column: &str) -> Result<u32, IngestError> {
        self.optional_count(column)?
            .ok_or_else(|| self.fail(column, "missing value"))
    }

    fn category<T>(
        &self,
        column: &str,
        parse: fn(&str) -> Option<T>,
        accepted: fn() -> String,
    ) -> Result<T, IngestError> {
        let raw = self.raw(column)?;
        parse(raw).ok_or_else(|| {
            self.fail(column, format!("unknown category {raw:?}; expected one of {}", accepted()))
        })
    }

    fn flag(&self, column: &str) -> Result<bool, IngestError> {
        let raw = self.raw(column)?;
        parse_flag(raw).ok_or_else(|| self.fail(column, format!("expected Yes/No, got {raw:?}")))
    }
}

fn is_missing(raw: &str) -> bool {
    raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan")
}

/// Builds the policy key from a client id and a vehicle id.
pub fn build_policy_id(id_client: &str, id_vehicle: &str) -> Result<String, IngestError> {
    build_policy_id_with(id_client, id_vehicle, DEFAULT_ID_SEPARATOR)
}

pub fn build_policy_id_with(
    id_client: &str,
    id_vehicle: &str,
    separator: &str,
) -> Result<String, IngestError> {
    let (client, vehicle) = (id_client.trim(), id_vehicle.trim());
    if client.is_empty() {
        return Err(IngestError::EmptyKeyComponent("id_client"));
    }
    if vehicle.is_empty() {
        return Err(IngestError::EmptyKeyComponent("id_vehicle"));
    }
    Ok(format!("{client}{separator}{vehicle}"))
}

/// INSEE codes exported through numeric tooling lose their leading zero
/// (`01004` becomes `1004`); restore it.
fn normalize_insee(raw: &str) -> String {
    if raw.len() == 4 && raw.bytes().all(|b| b.is_ascii_digit()) {
        format!("0{raw}")
    } else {
        raw.to_uppercase()
    }
}

fn policy_from_row(cells: &Cells<'_>, separator: &str) -> Result<PolicyRecord, IngestError> {
    let id_policy = if cells.columns.has("id_policy") {
        cells.text("id_policy")?
    } else {
        build_policy_id_with(&cells.text("id_client")?, &cells.text("id_vehicle")?, separator)
            .map_err(|e| cells.fail("id_policy", e.to_string()))?
    };
    if id_policy.is_empty() {
        return Err(cells.fail("id_policy", "empty policy id"));
    }

    let pol_bonus = cells.number("pol_bonus")?;
    if !(BONUS_RANGE.0..=BONUS_RANGE.1).contains(&pol_bonus) {
        return Err(cells.fail(
            "pol_bonus",
            format!("{pol_bonus} outside [{}, {}]", BONUS_RANGE.0, BONUS_RANGE.1),
        ));
    }

    let drv_drv2 = cells.flag("drv_drv2")?;
    // Second-driver fields may be blank (or zero-coded) without a second driver.
    let (drv_age2, drv_age_lic2, drv_sex2) = if drv_drv2 {
        (
            cells.count("drv_age2")?,
            cells.count("drv_age_lic2")?,
            Some(cells.category("drv_sex2", Sex::parse, Sex::accepted)?),
        )
    } else {
        let sex_raw = cells.raw("drv_sex2")?;
        let sex = if is_missing(sex_raw) || sex_raw == "0" || sex_raw.eq_ignore_ascii_case(NO_SECOND_DRIVER) {
            None
        } else {
            Some(cells.category("drv_sex2", Sex::parse, Sex::accepted)?)
        };
        (
            cells.optional_count("drv_age2")?.unwrap_or(0),
            cells.optional_count("drv_age_lic2")?.unwrap_or(0),
            sex,
        )
    };

    let insee = normalize_insee(cells.raw("pol_insee_code")?);
    if insee.chars().count() != 5 {
        return Err(cells.fail("pol_insee_code", format!("expected 5 characters, got {insee:?}")));
    }

    Ok(PolicyRecord {
        id_policy,
        pol_bonus,
        pol_coverage: cells.category("pol_coverage", Coverage::parse, Coverage::accepted)?,
        pol_duration: cells.count("pol_duration")?,
        pol_sit_duration: cells.count("pol_sit_duration")?,
        pol_pay_freq: cells.category("pol_pay_freq", PayFrequency::parse, PayFrequency::accepted)?,
        pol_payd: cells.flag("pol_payd")?,
        pol_usage: cells.category("pol_usage", Usage::parse, Usage::accepted)?,
        pol_insee_code: insee,
        drv_drv2,
        drv_age1: cells.count("drv_age1")?,
        drv_age2,
        drv_sex1: cells.category("drv_sex1", Sex::parse, Sex::accepted)?,
        drv_sex2,
        drv_age_lic1: cells.count("drv_age_lic1")?,
        drv_age_lic2,
        vh_age: cells.optional_count("vh_age")?,
        vh_cyl: cells.number("vh_cyl")?,
        vh_din: cells.number("vh_din")?,
        vh_fuel: cells.category("vh_fuel", Fuel::parse, Fuel::accepted)?,
        vh_make: cells.text("vh_make")?,
        vh_model: cells.text("vh_model")?,
        vh_sale_begin: cells.count("vh_sale_begin")?,
        vh_sale_end: cells.count("vh_sale_end")?,
        vh_speed: cells.number("vh_speed")?,
        vh_type: cells.category("vh_type", VehicleType::parse, VehicleType::accepted)?,
        vh_value: cells.number("vh_value")?,
        vh_weight: cells.number("vh_weight")?,
    })
}

fn check_policy_headers(columns: &Columns) -> Result<(), IngestError> {
    for (name, _) in POLICY_COLUMNS {
        if *name == "id_policy" && !columns.has(name) {
            // Derivable from the client/vehicle pair.
            columns.require("id_client")?;
            columns.require("id_vehicle")?;
            continue;
        }
        columns.require(name)?;
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::None)
        .from_reader(input)
}

fn records<R: Read>(
    rdr: &mut csv::Reader<R>,
) -> impl Iterator<Item = Result<(u64, StringRecord), IngestError>> + '_ {
    rdr.records().map(|result| {
        result
            .map(|record| {
                let line = record.position().map_or(0, |p| p.line());
                (line, record)
            })
            .map_err(IngestError::from_csv)
    })
}

/// Parses a policy table from any reader.
pub fn read_policies<R: Read>(input: R) -> Result<Vec<PolicyRecord>, IngestError> {
    read_policies_with(input, DEFAULT_ID_SEPARATOR)
}

pub fn read_policies_with<R: Read>(input: R, separator: &str) -> Result<Vec<PolicyRecord>, IngestError> {
    let mut rdr = reader(input);
    let columns = Columns::new(rdr.headers().map_err(IngestError::from_csv)?);
    check_policy_headers(&columns)?;

    let mut seen = HashSet::new();
    let mut policies = Vec::new();
    for item in records(&mut rdr) {
        let (line, record) = item?;
        let cells = Cells { record: &record, columns: &columns, line };
        let policy = policy_from_row(&cells, separator)?;
        if !seen.insert(policy.id_policy.clone()) {
            return Err(IngestError::DuplicatePolicy { line, id: policy.id_policy });
        }
        policies.push(policy);
    }
    Ok(policies)
}

/// Parses the policy CSV at `path`.
pub fn parse_policy_csv(path: impl AsRef<Path>) -> Result<Vec<PolicyRecord>, IngestError> {
    read_policies(open(path.as_ref())?)
}

/// Parses a claim table. `claim_nb` defaults to one claim per row when the
/// column is absent.
pub fn read_claims<R: Read>(input: R) -> Result<Vec<ClaimRecord>, IngestError> {
    let mut rdr = reader(input);
    let columns = Columns::new(rdr.headers().map_err(IngestError::from_csv)?);
    for name in ["id_client", "id_vehicle", "claim_amount"] {
        columns.require(name)?;
    }
    let has_count = columns.has("claim_nb");

    let mut claims = Vec::new();
    for item in records(&mut rdr) {
        let (line, record) = item?;
        let cells = Cells { record: &record, columns: &columns, line };
        let claim_amount = cells.number("claim_amount")?;
        if !(CLAIM_AMOUNT_RANGE.0..=CLAIM_AMOUNT_RANGE.1).contains(&claim_amount) {
            return Err(cells.fail(
                "claim_amount",
                format!(
                    "{claim_amount} outside [{}, {}]",
                    CLAIM_AMOUNT_RANGE.0, CLAIM_AMOUNT_RANGE.1
                ),
            ));
        }
        let claim_nb = if has_count { cells.count("claim_nb")? } else { 1 };
        claims.push(ClaimRecord {
            id_client: cells.text("id_client")?,
            id_vehicle: cells.text("id_vehicle")?,
            claim_nb,
            claim_amount,
        });
    }
    Ok(claims)
}

pub fn parse_claim_csv(path: impl AsRef<Path>) -> Result<Vec<ClaimRecord>, IngestError> {
    read_claims(open(path.as_ref())?)
}

/// Column names appended to the policy columns in a merged-table dump.
pub const MERGED_EXTRA_COLUMNS: [&str; 3] = ["claim_nb", "claim_amount", "label"];

/// Writes the merged table as CSV: policy columns, then claim totals and label.
pub fn write_labeled_csv<W: std::io::Write>(
    dataset: &LabeledDataset,
    output: W,
) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(output);
    let header: Vec<&str> = POLICY_COLUMNS
        .iter()
        .map(|(name, _)| *name)
        .chain(MERGED_EXTRA_COLUMNS)
        .collect();
    wtr.write_record(&header).map_err(IngestError::from_csv)?;
    for row in &dataset.rows {
        let mut cells = row.policy.to_cells();
        cells.push(row.claim_nb.to_string());
        cells.push(format!("{}", row.claim_amount));
        cells.push(row.label.as_bit().to_string());
        wtr.write_record(&cells).map_err(IngestError::from_csv)?;
    }
    wtr.flush().map_err(|source| IngestError::Io {
        path: "<output>".into(),
        source,
    })
}

/// Reads a dump produced by [`write_labeled_csv`], re-checking the label invariants.
pub fn read_labeled_csv<R: Read>(input: R) -> Result<LabeledDataset, IngestError> {
    let mut rdr = reader(input);
    let columns = Columns::new(rdr.headers().map_err(IngestError::from_csv)?);
    check_policy_headers(&columns)?;
    for name in MERGED_EXTRA_COLUMNS {
        columns.require(name)?;
    }

    let mut rows = Vec::new();
    for item in records(&mut rdr) {
        let (line, record) = item?;
        let cells = Cells { record: &record, columns: &columns, line };
        let policy = policy_from_row(&cells, DEFAULT_ID_SEPARATOR)?;
        let claim_nb = cells.count("claim_nb")?;
        let claim_amount = cells.number("claim_amount")?;
        let label = cells.count("label")?;
        let label = u8::try_from(label)
            .ok()
            .and_then(Label::from_bit)
            .ok_or_else(|| cells.fail("label", "expected 0 or 1"))?;
        if label != Label::from_claim_count(claim_nb) {
            return Err(cells.fail("label", "label disagrees with claim_nb"));
        }
        rows.push(LabeledRow { policy, claim_nb, claim_amount, label });
    }
    Ok(LabeledDataset { rows })
}

pub fn parse_labeled_csv(path: impl AsRef<Path>) -> Result<LabeledDataset, IngestError> {
    read_labeled_csv(open(path.as_ref())?)
}
