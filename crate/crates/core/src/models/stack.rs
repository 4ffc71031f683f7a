use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    fit_gravity, fit_hybrid, fit_trace_scale, loss, predict_gravity, predict_hybrid, DeterrenceKind, GravityParams,
    HybridParams, ModelError, ModelKind,
};
use crate::flows::{DistanceTable, FlowMatrix};
use crate::ingest::PopulationTable;
use crate::NodePair;

/// Everything a fit needs besides the ground truth.
#[derive(Debug, Clone, Copy)]
pub struct ModelInputs<'a> {
    pub population: &'a PopulationTable,
    pub distances: &'a DistanceTable,
    pub trace_flows: &'a FlowMatrix,
    pub kind: DeterrenceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainLoss {
    pub gravity: f64,
    pub trace: f64,
    pub hybrid: f64,
}

/// Two-stage fit: the gravity law alone on log flows, then the stacking
/// weights of gravity and trace flows on raw flows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StackedFit {
    pub gravity: GravityParams,
    pub hybrid: HybridParams,
    /// Scale `c` of the trace-only predictor `c·F`.
    pub trace_scale: f64,
    pub train_loss: TrainLoss,
    pub n_train: usize,
    /// Training flows dropped because their endpoints are co-located.
    pub n_excluded: usize,
}

pub type Predictions = BTreeMap<ModelKind, FlowMatrix>;

pub fn fit_stack(train: &FlowMatrix, inputs: &ModelInputs<'_>) -> Result<StackedFit, ModelError> {
    let gfit = fit_gravity(train, inputs.population, inputs.distances, inputs.kind)?;
    let usable = if gfit.excluded.is_empty() {
        train.clone()
    } else {
        train.restrict(|pair, _| !gfit.excluded.contains(pair))
    };
    let g = predict_gravity(&gfit.params, inputs.population, inputs.distances, usable.keys())?;
    let hybrid = fit_hybrid(&usable, &g, inputs.trace_flows, gfit.params)?;
    let trace_scale = fit_trace_scale(&usable, inputs.trace_flows)?;
    let h = predict_hybrid(&hybrid, &g, inputs.trace_flows, usable.keys())?;
    let train_loss = TrainLoss {
        gravity: loss(&usable, &g),
        trace: loss(&usable, &scaled_trace(inputs.trace_flows, trace_scale, usable.keys())),
        hybrid: loss(&usable, &h),
    };
    Ok(StackedFit {
        gravity: gfit.params,
        hybrid,
        trace_scale,
        train_loss,
        n_train: usable.len(),
        n_excluded: gfit.excluded.len(),
    })
}

fn scaled_trace<'a>(f: &FlowMatrix, c: f64, pairs: impl IntoIterator<Item = &'a NodePair>) -> FlowMatrix {
    let mut out = FlowMatrix::new();
    for pair in pairs {
        let v = (c * f.weight(pair)).max(0.0);
        out.set(pair.0.clone(), pair.1.clone(), v).expect("finite non-negative weight");
    }
    out
}

impl StackedFit {
    /// Predictions of all three models on `pairs`.
    pub fn predict(&self, pairs: &[NodePair], inputs: &ModelInputs<'_>) -> Result<Predictions, ModelError> {
        let g = predict_gravity(&self.gravity, inputs.population, inputs.distances, pairs)?;
        let h = predict_hybrid(&self.hybrid, &g, inputs.trace_flows, pairs)?;
        let t = scaled_trace(inputs.trace_flows, self.trace_scale, pairs);
        Ok(BTreeMap::from([(ModelKind::Gravity, g), (ModelKind::Trace, t), (ModelKind::Hybrid, h)]))
    }
}
