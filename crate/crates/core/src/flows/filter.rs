use serde::{Deserialize, Serialize};

use super::{DistanceTable, FlowError, FlowMatrix};
use crate::eval::{pearson, PairedSeries};

/// Keeps entries whose distance lies in the closed interval
/// `[min_km, max_km]`; a missing bound is unbounded on that side.
pub fn filter_by_distance(
    m: &FlowMatrix,
    d: &DistanceTable,
    min_km: Option<f64>,
    max_km: Option<f64>,
) -> Result<FlowMatrix, FlowError> {
    let bad = |b: Option<f64>| b.is_some_and(f64::is_nan);
    if bad(min_km) || bad(max_km) || matches!((min_km, max_km), (Some(lo), Some(hi)) if lo > hi) {
        return Err(FlowError::InvalidBounds { min: min_km, max: max_km });
    }
    let lo = min_km.unwrap_or(f64::NEG_INFINITY);
    let hi = max_km.unwrap_or(f64::INFINITY);
    let mut keep = Vec::with_capacity(m.len());
    for ((o, dst), _) in m.iter() {
        let km = d.require(o, dst)?;
        keep.push(lo <= km && km <= hi);
    }
    let mut flags = keep.into_iter();
    Ok(m.restrict(|_, _| flags.next().unwrap_or(false)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Keep trace flows at or above the candidate distance (air travel).
    MinThreshold,
    /// Keep trace flows at or below the candidate distance (commuting).
    MaxThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub best_threshold: f64,
    pub best_pearson: f64,
    /// One point per candidate, in input order; `None` where the filtered
    /// series is constant and the correlation is undefined.
    pub curve: Vec<(f64, Option<f64>)>,
}

/// Picks the distance threshold that maximises the Pearson correlation
/// between the distance-filtered trace flows and the ground truth.
///
/// Correlation runs over the union of both supports, absent entries read as
/// zero. Ties go to the smallest threshold.
pub fn calibrate_threshold(
    f: &FlowMatrix,
    truth: &FlowMatrix,
    d: &DistanceTable,
    candidates: &[f64],
    mode: ThresholdMode,
) -> Result<Calibration, FlowError> {
    if candidates.is_empty() {
        return Err(FlowError::NoCandidates);
    }
    let mut curve = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, f64)> = None;
    for &t in candidates {
        let filtered = match mode {
            ThresholdMode::MinThreshold => filter_by_distance(f, d, Some(t), None)?,
            ThresholdMode::MaxThreshold => filter_by_distance(f, d, None, Some(t))?,
        };
        let rho = pearson(&PairedSeries::union(truth, &filtered)).ok();
        if let Some(r) = rho {
            let better = match best {
                None => true,
                Some((bt, br)) => r > br || (r == br && t < bt),
            };
            if better {
                best = Some((t, r));
            }
        }
        curve.push((t, rho));
    }
    let (best_threshold, best_pearson) = best.ok_or(FlowError::DegenerateCalibration)?;
    Ok(Calibration { best_threshold, best_pearson, curve })
}
