use super::PreprocessError;
use crate::ingest::{feature_kind, FeatureKind, FeatureValue, Label, LabeledDataset, POLICY_COLUMNS};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;

/// Categorical features expanded into indicator columns by default.
pub const DEFAULT_CATEGORICAL: &[&str] = &[
    "pol_coverage",
    "pol_pay_freq",
    "pol_payd",
    "pol_usage",
    "drv_drv2",
    "drv_sex1",
    "vh_fuel",
    "vh_type",
];

/// Continuous features used for modelling and for the correlation heatmap.
pub const DEFAULT_NUMERIC: &[&str] = &[
    "pol_bonus",
    "pol_duration",
    "pol_sit_duration",
    "drv_age1",
    "drv_age2",
    "drv_age_lic1",
    "drv_age_lic2",
    "vh_age",
    "vh_cyl",
    "vh_din",
    "vh_sale_begin",
    "vh_sale_end",
    "vh_speed",
    "vh_value",
    "vh_weight",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Dummy { category: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: String,
    pub source_feature: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// Column layout of an encoded design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<SchemaColumn>,
}

/// Which policy features enter the design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            numeric: DEFAULT_NUMERIC.iter().map(|s| s.to_string()).collect(),
            categorical: DEFAULT_CATEGORICAL.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn table_position(name: &str) -> usize {
    POLICY_COLUMNS
        .iter()
        .position(|(column, _)| *column == name)
        .unwrap_or(usize::MAX)
}

impl FeatureSchema {
    /// Learns the column layout from a dataset: numeric features in table
    /// order, then one indicator per observed category, grouped by feature
    /// (table order) with categories sorted lexically.
    pub fn fit(dataset: &LabeledDataset, options: &EncodeOptions) -> Result<Self, PreprocessError> {
        let mut numeric: Vec<&str> = Vec::new();
        for name in &options.numeric {
            match feature_kind(name) {
                Some(FeatureKind::Numeric) => numeric.push(name),
                Some(_) => return Err(PreprocessError::NotNumeric(name.clone())),
                None => return Err(PreprocessError::UnknownFeature(name.clone())),
            }
        }
        let mut categorical: Vec<&str> = Vec::new();
        for name in &options.categorical {
            match feature_kind(name) {
                Some(FeatureKind::Categorical) => categorical.push(name),
                Some(_) => return Err(PreprocessError::NotCategorical(name.clone())),
                None => return Err(PreprocessError::UnknownFeature(name.clone())),
            }
        }
        numeric.sort_by_key(|name| table_position(name));
        numeric.dedup();
        categorical.sort_by_key(|name| table_position(name));
        categorical.dedup();

        let mut columns: Vec<SchemaColumn> = numeric
            .iter()
            .map(|name| SchemaColumn {
                name: name.to_string(),
                source_feature: name.to_string(),
                kind: ColumnKind::Numeric,
            })
            .collect();
        for feature in categorical {
            let tokens: BTreeSet<&str> = dataset
                .rows
                .iter()
                .filter_map(|row| match row.policy.feature(feature) {
                    Some(FeatureValue::Category(token)) => Some(token),
                    _ => None,
                })
                .collect();
            columns.extend(tokens.into_iter().map(|token| SchemaColumn {
                name: format!("{feature}_{token}"),
                source_feature: feature.to_string(),
                kind: ColumnKind::Dummy { category: token.to_string() },
            }));
        }
        Ok(FeatureSchema { columns })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Stable content hash, used to pair saved models with their inputs.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex(&Sha256::digest(json))
    }

    /// Encodes a dataset under this frozen layout.
    pub fn transform(&self, dataset: &LabeledDataset) -> Result<EncodedMatrix, PreprocessError> {
        let n = dataset.len();
        let p = self.columns.len();
        let mut values = Array2::<f64>::zeros((n, p));

        // Group dummy columns by source feature so each row is checked once per feature.
        let mut groups: Vec<(&str, Vec<(usize, &str)>)> = Vec::new();
        for (j, column) in self.columns.iter().enumerate() {
            if let ColumnKind::Dummy { category } = &column.kind {
                match groups.last_mut() {
                    Some((feature, members)) if *feature == column.source_feature => {
                        members.push((j, category))
                    }
                    _ => groups.push((&column.source_feature, vec![(j, category)])),
                }
            }
        }

        for (i, (row, mut out)) in dataset.rows.iter().zip(values.axis_iter_mut(Axis(0))).enumerate() {
            for (j, column) in self.columns.iter().enumerate() {
                if column.kind == ColumnKind::Numeric {
                    let value = row
                        .policy
                        .feature(&column.source_feature)
                        .ok_or_else(|| PreprocessError::UnknownFeature(column.source_feature.clone()))?;
                    out[j] = value.as_number().ok_or_else(|| PreprocessError::MissingValue {
                        row: i,
                        feature: column.source_feature.clone(),
                    })?;
                }
            }
            for (feature, members) in &groups {
                let token = match row.policy.feature(feature) {
                    Some(FeatureValue::Category(token)) => token,
                    _ => return Err(PreprocessError::NotCategorical(feature.to_string())),
                };
                let (j, _) = members.iter().find(|(_, category)| *category == token).ok_or_else(|| {
                    PreprocessError::UnseenCategory {
                        feature: feature.to_string(),
                        category: token.to_string(),
                    }
                })?;
                out[*j] = 1.0;
            }
        }

        Ok(EncodedMatrix {
            values,
            schema: self.clone(),
            labels: dataset.labels(),
        })
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Numeric design matrix with its column layout and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub values: Array2<f64>,
    pub schema: FeatureSchema,
    pub labels: Vec<Label>,
}

impl EncodedMatrix {
    pub fn new(values: Array2<f64>, schema: FeatureSchema, labels: Vec<Label>) -> Result<Self, PreprocessError> {
        if values.ncols() != schema.len() {
            return Err(PreprocessError::SchemaMismatch(format!(
                "{} columns but schema has {}",
                values.ncols(),
                schema.len()
            )));
        }
        if values.nrows() != labels.len() {
            return Err(PreprocessError::SchemaMismatch(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PreprocessError::NonFinite);
        }
        Ok(EncodedMatrix { values, schema, labels })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, indices: &[usize]) -> EncodedMatrix {
        EncodedMatrix {
            values: self.values.select(Axis(0), indices),
            schema: self.schema.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Writes the matrix as CSV (feature columns then `label`).
    pub fn write_csv<W: std::io::Write>(&self, output: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(output);
        let mut header: Vec<&str> = self.schema.names();
        header.push("label");
        wtr.write_record(&header)?;
        for (row, label) in self.values.rows().into_iter().zip(&self.labels) {
            let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            cells.push(label.as_bit().to_string());
            wtr.write_record(&cells)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Fits a schema on `dataset` and encodes it.
pub fn one_hot_encode(dataset: &LabeledDataset, options: &EncodeOptions) -> Result<EncodedMatrix, PreprocessError> {
    FeatureSchema::fit(dataset, options)?.transform(dataset)
}
