use super::EvalError;
use crate::flows::FlowMatrix;
use crate::NodePair;

/// Aligned (truth, prediction) values over a common set of node pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairedSeries {
    truth: Vec<f64>,
    pred: Vec<f64>,
}

impl PairedSeries {
    pub fn new(truth: Vec<f64>, pred: Vec<f64>) -> Result<Self, EvalError> {
        if truth.len() != pred.len() {
            return Err(EvalError::LengthMismatch { truth: truth.len(), pred: pred.len() });
        }
        Ok(PairedSeries { truth, pred })
    }

    /// Values of both matrices on `keys`, absent entries read as zero.
    pub fn on_keys<'a>(truth: &FlowMatrix, pred: &FlowMatrix, keys: impl IntoIterator<Item = &'a NodePair>) -> Self {
        let (truth, pred) = keys.into_iter().map(|k| (truth.weight(k), pred.weight(k))).unzip();
        PairedSeries { truth, pred }
    }

    /// Values over the union of both supports.
    pub fn union(truth: &FlowMatrix, pred: &FlowMatrix) -> Self {
        let mut keys: Vec<&NodePair> = truth.keys().chain(pred.keys().filter(|k| !truth.contains(k))).collect();
        keys.sort();
        Self::on_keys(truth, pred, keys)
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn pred(&self) -> &[f64] {
        &self.pred
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }
}

/// Sample Pearson correlation, accumulated in one pass with running
/// co-moments.
pub fn pearson(s: &PairedSeries) -> Result<f64, EvalError> {
    if s.len() < 2 {
        return Err(EvalError::TooShort(s.len()));
    }
    let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (&x, &y)) in s.truth.iter().zip(&s.pred).enumerate() {
        let n = (i + 1) as f64;
        let dx = x - mx;
        let dy = y - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (x - mx);
        syy += dy * (y - my);
        sxy += dx * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Coefficient of determination `1 − SS_res / SS_tot` on raw values.
pub fn r_squared(s: &PairedSeries) -> Result<f64, EvalError> {
    if s.len() < 2 {
        return Err(EvalError::TooShort(s.len()));
    }
    let mean = s.truth.iter().sum::<f64>() / s.len() as f64;
    let ss_tot: f64 = s.truth.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    let ss_res: f64 = s.truth.iter().zip(&s.pred).map(|(y, h)| (y - h).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Common part of commuters: `2·Σ min(h, y) / (Σ h + Σ y)` over the union
/// of supports.
pub fn cpc(h: &FlowMatrix, y: &FlowMatrix) -> Result<f64, EvalError> {
    if h.is_empty() && y.is_empty() {
        return Err(EvalError::BothEmpty);
    }
    let common = h.iter().fold(0.0, |acc, (k, hv)| acc + hv.min(y.weight(k)));
    Ok(2.0 * common / (h.total() + y.total()))
}

/// Linear-interpolation quantile of already sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    match sorted.len() {
        0 => None,
        1 => Some(sorted[0]),
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
        }
    }
}
