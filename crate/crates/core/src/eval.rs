//! Confusion matrices, derived metrics, and sweep reports.
//!
//! Which class counts as "positive" is always explicit. Paper-style
//! reproduction runs use [`Label::NoClaim`], so that the large no-claim class
//! sits in the TP cell.

use crate::ingest::Label;
use crate::knn::{KSweepRow, KnnError, KnnModel};
use crate::logreg::{LogregError, LogregModel, PathPoint};
use crate::preprocess::{EncodedMatrix, FeatureSchema};
use ndarray::Array2;
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("actual and predicted lengths differ: {actual} vs {predicted}")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("test matrix layout does not match the model's schema")]
    SchemaMismatch,
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Logreg(#[from] LogregError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub positive_class: Label,
}

/// A ratio that may be undefined because its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Defined(f64),
    Undefined,
}

impl Metric {
    fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Defined(v) => Some(v),
            Metric::Undefined => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Defined(v) => write!(f, "{v:.4}"),
            Metric::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(deserializer)?.map_or(Metric::Undefined, Metric::Defined))
    }
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Same counts seen from the other class.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
            positive_class: self.positive_class.other(),
        }
    }

    /// `TP / (TP + FP)`
    pub fn precision(&self) -> Metric {
        Metric::ratio(self.tp, self.tp + self.fp)
    }

    /// `TP / (TP + FN)`
    pub fn recall(&self) -> Metric {
        Metric::ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> Metric {
        Metric::ratio(self.tp + self.tn, self.total())
    }

    /// Rows are actual classes, columns predicted, positive class first.
    pub fn to_table(&self) -> String {
        let pos = self.positive_class;
        let neg = pos.other();
        let head = ["", "predicted", ""];
        let rows = [
            [String::new(), pos.to_string(), neg.to_string()],
            [format!("actual {pos}"), format!("TP: {}", self.tp), format!("FN: {}", self.fn_)],
            [format!("actual {neg}"), format!("FP: {}", self.fp), format!("TN: {}", self.tn)],
        ];
        let widths: Vec<usize> = (0..3)
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0).max(head[c].len()))
            .collect();
        let mut out = String::new();
        for row in rows {
            let line: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
            out.push_str(line.join(" | ").trim_end());
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(actual: &[Label], predicted: &[Label], positive_class: Label) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix { tp: 0, fn_: 0, fp: 0, tn: 0, positive_class };
    for (&a, &p) in actual.iter().zip(predicted) {
        match (a == positive_class, p == positive_class) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

pub fn precision(cm: &ConfusionMatrix) -> Metric {
    cm.precision()
}

pub fn recall(cm: &ConfusionMatrix) -> Metric {
    cm.recall()
}

pub fn accuracy(cm: &ConfusionMatrix) -> Metric {
    cm.accuracy()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub rows: u64,
    pub accuracy: Metric,
    pub precision: Metric,
    pub recall: Metric,
    pub matrix: ConfusionMatrix,
    /// Predictions decided by a tie in the vote (KNN only).
    pub vote_ties: u64,
}

impl MetricsReport {
    pub fn from_predictions(
        model: impl Into<String>,
        actual: &[Label],
        predicted: &[Label],
        positive_class: Label,
    ) -> Result<Self, EvalError> {
        let matrix = confusion_matrix(actual, predicted, positive_class)?;
        Ok(MetricsReport {
            model: model.into(),
            rows: matrix.total(),
            accuracy: matrix.accuracy(),
            precision: matrix.precision(),
            recall: matrix.recall(),
            matrix,
            vote_ties: 0,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "model: {}\nrows: {}\npositive class: {}\n\n{}\naccuracy:  {}\nprecision: {}\nrecall:    {}\n",
            self.model,
            self.rows,
            self.matrix.positive_class,
            self.matrix.to_table(),
            self.accuracy,
            self.precision,
            self.recall
        );
        if self.vote_ties > 0 {
            out.push_str(&format!("vote ties resolved to \"{}\": {}\n", Label::NoClaim, self.vote_ties));
        }
        out
    }
}

/// Anything that labels rows of an encoded matrix.
pub trait Classifier {
    fn schema(&self) -> &FeatureSchema;
    fn describe(&self) -> String;
    /// Predicted labels and the number of tie-decided votes.
    fn classify(&self, x: &Array2<f64>, threads: usize) -> Result<(Vec<Label>, u64), EvalError>;
}

impl Classifier for KnnModel {
    fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    fn describe(&self) -> String {
        let weighting = match self.weighting {
            crate::knn::Weighting::Uniform => "uniform",
            crate::knn::Weighting::InverseDistance => "inverse-distance",
        };
        format!("knn(k={}, metric={}, weights={weighting})", self.k, self.metric)
    }

    fn classify(&self, x: &Array2<f64>, threads: usize) -> Result<(Vec<Label>, u64), EvalError> {
        let predictions = self.predict_detailed(x, threads)?;
        let ties = predictions.iter().filter(|p| p.tie).count() as u64;
        Ok((predictions.into_iter().map(|p| p.label).collect(), ties))
    }
}

impl Classifier for LogregModel {
    fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    fn describe(&self) -> String {
        format!("logreg(penalty={}, lambda={}, C={})", self.penalty, self.lambda, self.c())
    }

    fn classify(&self, x: &Array2<f64>, _threads: usize) -> Result<(Vec<Label>, u64), EvalError> {
        Ok((self.predict(x)?, 0))
    }
}

/// Scores a model on a labelled matrix.
pub fn evaluate<M: Classifier + ?Sized>(
    model: &M,
    test: &EncodedMatrix,
    positive_class: Label,
    threads: usize,
) -> Result<MetricsReport, EvalError> {
    if test.nrows() == 0 {
        return Err(EvalError::Empty);
    }
    if model.schema() != &test.schema {
        return Err(EvalError::SchemaMismatch);
    }
    let (predicted, ties) = model.classify(&test.values, threads)?;
    let mut report = MetricsReport::from_predictions(model.describe(), &test.labels, &predicted, positive_class)?;
    report.vote_ties = ties;
    Ok(report)
}

/// `k,train_accuracy,test_accuracy`
pub fn write_k_sweep_csv<W: Write>(rows: &[KSweepRow], output: W) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record(["k", "train_accuracy", "test_accuracy"])?;
    for row in rows {
        wtr.write_record([row.k.to_string(), row.train_accuracy.to_string(), row.test_accuracy.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Accuracy of a fitted model at one regularisation strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CSweepRow {
    pub c: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// `C,train_accuracy,test_accuracy`
pub fn write_c_sweep_csv<W: Write>(rows: &[CSweepRow], output: W) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record(["C", "train_accuracy", "test_accuracy"])?;
    for row in rows {
        wtr.write_record([row.c.to_string(), row.train_accuracy.to_string(), row.test_accuracy.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// `C,intercept,<one column per coefficient>`
pub fn write_path_csv<W: Write>(path: &[PathPoint], schema: &FeatureSchema, output: W) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(output);
    let mut header = vec!["C".to_string(), "intercept".to_string()];
    header.extend(schema.names().into_iter().map(String::from));
    wtr.write_record(&header)?;
    for point in path {
        let mut cells = vec![point.c.to_string(), point.intercept.to_string()];
        cells.extend(point.weights.iter().map(|w| w.to_string()));
        wtr.write_record(&cells)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(bits: &[u8]) -> Vec<Label> {
        bits.iter().map(|&b| Label::from_bit(b).unwrap()).collect()
    }

    #[test]
    fn all_correct_single_class_fills_one_cell() {
        let y = labels(&[0; 9]);
        let cm = confusion_matrix(&y, &y, Label::NoClaim).unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (9, 0, 0, 0));
        let cm = confusion_matrix(&y, &y, Label::Claim).unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (0, 0, 0, 9));
    }

    #[test]
    fn cells_follow_the_positive_class() {
        let actual = labels(&[1, 1, 0, 0, 0]);
        let predicted = labels(&[1, 0, 1, 0, 0]);
        let cm = confusion_matrix(&actual, &predicted, Label::Claim).unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (1, 1, 1, 2));
        assert_eq!(cm.swapped(), confusion_matrix(&actual, &predicted, Label::NoClaim).unwrap());
    }

    #[test]
    fn published_knn_cells_give_published_ratios() {
        let cm = ConfusionMatrix { tp: 21_804, fn_: 8, fp: 3_188, tn: 0, positive_class: Label::NoClaim };
        let precision = cm.precision().value().unwrap();
        let recall = cm.recall().value().unwrap();
        assert!((precision - 0.872).abs() < 5e-4, "{precision}");
        assert!((recall - 0.9996).abs() < 5e-5, "{recall}");
        assert_eq!(format!("{precision:.2}"), "0.87");
    }

    #[test]
    fn perfect_classifier() {
        let y = labels(&[1, 0, 1, 1, 0]);
        let cm = confusion_matrix(&y, &y, Label::Claim).unwrap();
        assert_eq!(cm.precision(), Metric::Defined(1.0));
        assert_eq!(cm.recall(), Metric::Defined(1.0));
        assert_eq!(cm.accuracy(), Metric::Defined(1.0));
    }

    #[test]
    fn zero_denominator_is_undefined() {
        let cm = ConfusionMatrix { tp: 0, fn_: 4, fp: 0, tn: 6, positive_class: Label::Claim };
        assert_eq!(cm.precision(), Metric::Undefined);
        assert_eq!(cm.recall(), Metric::Defined(0.0));
        assert_eq!(serde_json::to_string(&cm.precision()).unwrap(), "null");
    }

    #[test]
    fn input_errors() {
        assert!(matches!(confusion_matrix(&[], &[], Label::Claim), Err(EvalError::Empty)));
        assert!(matches!(
            confusion_matrix(&labels(&[0, 1]), &labels(&[0]), Label::Claim),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn majority_baseline_on_87_13() {
        let mut actual = labels(&[0; 87]);
        actual.extend(labels(&[1; 13]));
        let predicted = labels(&[0; 100]);
        let report = MetricsReport::from_predictions("constant", &actual, &predicted, Label::NoClaim).unwrap();
        assert_eq!(report.accuracy, Metric::Defined(0.87));
        assert_eq!(report.matrix.tn, 0);
        assert_eq!(report.matrix.fn_, 0);
        assert!(report.to_text().contains("TP: 87"));
    }

    #[test]
    fn json_uses_fn_key() {
        let cm = ConfusionMatrix { tp: 1, fn_: 2, fp: 3, tn: 4, positive_class: Label::NoClaim };
        let json = serde_json::to_string(&cm).unwrap();
        assert!(json.contains("\"fn\":2"), "{json}");
    }
}
