//! Binary confusion matrix and the rates derived from it.
//!
//! A rate whose denominator is zero is undefined (`None`) and left out of
//! both the text table and the JSON report.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn scaled(&self, k: u64) -> Self {
        ConfusionMatrix::new(self.tp * k, self.fp * k, self.fn_ * k, self.tn * k)
    }
}

/// Tallies predictions against labels; both must be 0/1 and equally long.
pub fn confusion(preds: &[u8], labels: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Invalid("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&p, &y)) in preds.iter().zip(labels).enumerate() {
        match (p, y) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            (0, 0) => cm.tn += 1,
            _ => {
                return Err(Error::Invalid(format!(
                    "entry {i}: ({p}, {y}) is not binary"
                )))
            }
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

/// `(1+β²)·P·R / (β²·P + R)`, taken as 0 when `P = R = 0`.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> Option<f64> {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den != 0.0 {
        Some((1.0 + b2) * precision * recall / den)
    } else if precision == 0.0 && recall == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub specificity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub npv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fpr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fdr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fnr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// `2TP / (2TP + FP + FN)`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    pub beta: f64,
    /// F-beta from precision and recall.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcc: Option<f64>,
}

pub fn derive_metrics(cm: &ConfusionMatrix, beta: f64) -> MetricsReport {
    let ConfusionMatrix { tp, fp, fn_, tn } = *cm;
    let sensitivity = ratio(tp, tp + fn_);
    let precision = ratio(tp, tp + fp);
    let f_beta = match (precision, sensitivity) {
        (Some(p), Some(r)) => f_beta(p, r, beta),
        _ => None,
    };
    let mcc = {
        let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
        let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        (den != 0.0).then(|| ((tp * tn - fp * fn_) / den).clamp(-1.0, 1.0))
    };
    MetricsReport {
        confusion: *cm,
        sensitivity,
        specificity: ratio(tn, tn + fp),
        precision,
        npv: ratio(tn, tn + fn_),
        fpr: ratio(fp, fp + tn),
        fdr: ratio(fp, fp + tp),
        fnr: ratio(fn_, fn_ + tp),
        accuracy: ratio(tp + tn, cm.total()),
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
        beta,
        f_beta,
        mcc,
    }
}

impl MetricsReport {
    /// `(measure, value, derivation)` rows in table order; undefined rows are skipped.
    pub fn rows(&self) -> Vec<(String, f64, &'static str)> {
        let mut rows: Vec<(String, Option<f64>, &'static str)> = vec![
            (
                "Sensitivity".into(),
                self.sensitivity,
                "TPR = TP / (TP + FN)",
            ),
            (
                "Specificity".into(),
                self.specificity,
                "SPC = TN / (FP + TN)",
            ),
            ("Precision".into(), self.precision, "PPV = TP / (TP + FP)"),
            (
                "Negative Predictive Value".into(),
                self.npv,
                "NPV = TN / (TN + FN)",
            ),
            (
                "False Positive Rate".into(),
                self.fpr,
                "FPR = FP / (FP + TN)",
            ),
            (
                "False Discovery Rate".into(),
                self.fdr,
                "FDR = FP / (FP + TP)",
            ),
            (
                "False Negative Rate".into(),
                self.fnr,
                "FNR = FN / (FN + TP)",
            ),
            (
                "Accuracy".into(),
                self.accuracy,
                "ACC = (TP + TN) / (P + N)",
            ),
            ("F1 Score".into(), self.f1, "F1 = 2TP / (2TP + FP + FN)"),
        ];
        if self.beta != 1.0 {
            rows.push((
                format!("F-beta (beta = {})", self.beta),
                self.f_beta,
                "(1 + b^2) PPV TPR / (b^2 PPV + TPR)",
            ));
        }
        rows.push((
            "Matthews Correlation Coefficient".into(),
            self.mcc,
            "(TP TN - FP FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN))",
        ));
        rows.into_iter()
            .filter_map(|(name, value, derivation)| value.map(|v| (name, v, derivation)))
            .collect()
    }

    pub fn to_table(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MetricsReport {
    /// Aligned text table, values to four decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.rows();
        let width = rows
            .iter()
            .map(|(n, _, _)| n.len())
            .max()
            .unwrap_or(0)
            .max("Measure".len());
        writeln!(f, "{:<width$}  {:>6}  Derivation", "Measure", "Value")?;
        for (name, value, derivation) in rows {
            writeln!(f, "{name:<width$}  {value:>6.4}  {derivation}")?;
        }
        Ok(())
    }
}
