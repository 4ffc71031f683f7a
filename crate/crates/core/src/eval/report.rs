use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::metrics::{cpc, pearson, r_squared, PairedSeries};
use super::EvalError;
use crate::flows::FlowMatrix;
use crate::models::{ModelKind, Predictions, StackedFit};

/// Scores of one model on one evaluation set. Metrics that are undefined
/// (constant series) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelMetrics {
    pub n: usize,
    pub pearson: Option<f64>,
    pub r_squared: Option<f64>,
    pub cpc: Option<f64>,
}

impl ModelMetrics {
    /// Scores `pred` against every entry of `truth`.
    pub fn score(truth: &FlowMatrix, pred: &FlowMatrix) -> Self {
        let series = PairedSeries::on_keys(truth, pred, truth.keys());
        ModelMetrics {
            n: series.len(),
            pearson: pearson(&series).ok(),
            r_squared: r_squared(&series).ok(),
            cpc: cpc(pred, truth).ok(),
        }
    }
}

/// Parameters and training losses of one fit inside a harness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldDetail {
    pub label: String,
    pub n_test: usize,
    #[serde(flatten)]
    pub fit: StackedFit,
}

/// Plot-ready table. Undefined cells are `None` (JSON `null`, empty in CSV).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Curve {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Curve {
    pub fn new(columns: &[&str]) -> Self {
        Curve { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EvalError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.columns)?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub scheme: String,
    pub seed: u64,
    /// Ground-truth flows taking part in the evaluation.
    pub n_entries: usize,
    /// Ground-truth flows left out (co-located endpoints).
    pub n_excluded: usize,
    /// Metrics per evaluation set (e.g. `all`, `west_to_east`, `pooled`)
    /// and model.
    pub metrics: BTreeMap<String, BTreeMap<ModelKind, ModelMetrics>>,
    pub folds: Vec<FoldDetail>,
    pub curves: BTreeMap<String, Curve>,
    pub notes: Vec<String>,
    /// Held-out predictions, when the scheme produces one per entry.
    #[serde(skip)]
    pub predictions: Predictions,
}

impl EvalReport {
    pub fn new(scheme: &str, seed: u64) -> Self {
        EvalReport { scheme: scheme.to_owned(), seed, ..Default::default() }
    }

    pub(crate) fn score_set(&mut self, set: &str, truth: &FlowMatrix, preds: &Predictions) {
        let scores = preds
            .iter()
            .map(|(kind, pred)| (*kind, ModelMetrics::score(truth, pred)))
            .collect();
        self.metrics.insert(set.to_owned(), scores);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<(), EvalError> {
        writer.write_all(self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn metric(&self, set: &str, kind: ModelKind) -> Option<&ModelMetrics> {
        self.metrics.get(set)?.get(&kind)
    }
}
