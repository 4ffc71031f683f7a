//! The gravity law, the stacked hybrid model and their least-squares fits.

mod gravity;
mod hybrid;
pub mod linalg;
mod stack;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{NodeId, NodePair};

pub use gravity::{fit_gravity, predict_gravity, GravityFit};
pub use hybrid::{fit_hybrid, fit_trace_scale, loss, predict_hybrid};
pub use stack::{fit_stack, ModelInputs, Predictions, StackedFit, TrainLoss};

/// Minimum number of positive flows for a gravity fit (four unknowns).
pub const MIN_GRAVITY_ENTRIES: usize = 4;
/// Minimum number of positive flows for the two stacking weights.
pub const MIN_HYBRID_ENTRIES: usize = 2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no population for node {0}")]
    MissingPopulation(NodeId),
    #[error("no distance for {0}->{1}")]
    MissingDistance(NodeId, NodeId),
    #[error("distance {km} for {}->{} must be positive", .pair.0, .pair.1)]
    NonPositiveDistance { pair: NodePair, km: f64 },
    #[error("prediction requested for self-pair {0}")]
    SelfPair(NodeId),
    #[error("need at least {needed} positive flows, found {found}")]
    TooFewEntries { needed: usize, found: usize },
    #[error("rank-deficient gravity design: collinear columns [{}] (condition number {condition:e})", .columns.join(", "))]
    RankDeficient { columns: Vec<String>, condition: f64 },
    #[error("gravity and trace predictions are collinear on the training support")]
    Collinear,
    #[error("trace flows are zero on every training entry")]
    EmptyTrace,
    #[error("no gravity prediction for {}->{}", .0.0, .0.1)]
    MissingPrediction(NodePair),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Distance-decay factor of the gravity law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeterrenceKind {
    /// `d^(-β)`, used for air travel.
    Power,
    /// `exp(-β·d)`, used for commuting.
    Exponential,
}

impl DeterrenceKind {
    pub fn factor(self, beta: f64, km: f64) -> f64 {
        match self {
            DeterrenceKind::Power => km.powf(-beta),
            DeterrenceKind::Exponential => (-beta * km).exp(),
        }
    }

    /// Regressor multiplying `-β` in the log-linear form.
    pub(crate) fn log_regressor(self, km: f64) -> f64 {
        match self {
            DeterrenceKind::Power => km.ln(),
            DeterrenceKind::Exponential => km,
        }
    }
}

impl fmt::Display for DeterrenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeterrenceKind::Power => "power",
            DeterrenceKind::Exponential => "exponential",
        })
    }
}

/// `g_ij = K · P_i^alpha · P_j^gamma · f(d_ij)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGravity")]
pub struct GravityParams {
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub kind: DeterrenceKind,
}

#[derive(Deserialize)]
struct RawGravity {
    #[serde(rename = "K")]
    k: f64,
    alpha: f64,
    gamma: f64,
    beta: f64,
    kind: DeterrenceKind,
}

impl TryFrom<RawGravity> for GravityParams {
    type Error = ModelError;

    fn try_from(r: RawGravity) -> Result<Self, ModelError> {
        GravityParams::new(r.k, r.alpha, r.gamma, r.beta, r.kind)
    }
}

impl GravityParams {
    pub fn new(k: f64, alpha: f64, gamma: f64, beta: f64, kind: DeterrenceKind) -> Result<Self, ModelError> {
        let p = GravityParams { k, alpha, gamma, beta, kind };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(ModelError::InvalidParams(format!("K must be finite and positive, got {}", self.k)));
        }
        if ![self.alpha, self.gamma, self.beta].iter().all(|v| v.is_finite()) {
            return Err(ModelError::InvalidParams("exponents must be finite".into()));
        }
        Ok(())
    }
}

/// `h_ij = A · g_ij + B · f_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub gravity: GravityParams,
}

/// The three predictors compared throughout evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gravity,
    Trace,
    Hybrid,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Gravity, ModelKind::Trace, ModelKind::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gravity => "gravity",
            ModelKind::Trace => "trace",
            ModelKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_json_shape() {
        let g = GravityParams::new(3.0, 0.8, 0.6, 2.0, DeterrenceKind::Power).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"K":3.0,"alpha":0.8,"gamma":0.6,"beta":2.0,"kind":"power"}"#);
        let h = HybridParams { a: 1.5, b: -0.25, gravity: g };
        let json = serde_json::to_string(&h).unwrap();
        assert!(json.starts_with(r#"{"A":1.5,"B":-0.25,"gravity":{"K":3.0"#));
        let back: HybridParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GravityParams::new(0.0, 1.0, 1.0, 1.0, DeterrenceKind::Power).is_err());
        assert!(GravityParams::new(1.0, f64::NAN, 1.0, 1.0, DeterrenceKind::Power).is_err());
        let bad = r#"{"K":-1.0,"alpha":0.8,"gamma":0.6,"beta":2.0,"kind":"exponential"}"#;
        assert!(serde_json::from_str::<GravityParams>(bad).is_err());
    }

    #[test]
    fn deterrence_factors() {
        assert_eq!(DeterrenceKind::Power.factor(2.0, 10.0), 0.01);
        assert_eq!(DeterrenceKind::Exponential.factor(0.0, 10.0), 1.0);
        assert!((DeterrenceKind::Exponential.factor(0.02, 100.0) - (-2.0f64).exp()).abs() < 1e-15);
    }
}
