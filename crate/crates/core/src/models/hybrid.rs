use super::linalg::least_squares;
use super::{GravityParams, HybridParams, ModelError, MIN_HYBRID_ENTRIES};
use crate::flows::FlowMatrix;
use crate::NodePair;

/// Stacking weights `(A, B)` minimising `Σ (y − A·g − B·f)²` over the
/// positive entries of `truth`, without intercept. `f` reads absent entries
/// as zero; `g` must cover the whole support.
pub fn fit_hybrid(
    truth: &FlowMatrix,
    g: &FlowMatrix,
    f: &FlowMatrix,
    gravity: GravityParams,
) -> Result<HybridParams, ModelError> {
    let mut rows = Vec::with_capacity(truth.len());
    let mut y = Vec::with_capacity(truth.len());
    for (pair, value) in truth.iter() {
        if !g.contains(pair) {
            return Err(ModelError::MissingPrediction(pair.clone()));
        }
        rows.push([g.weight(pair), f.weight(pair)]);
        y.push(value);
    }
    if rows.len() < MIN_HYBRID_ENTRIES {
        return Err(ModelError::TooFewEntries { needed: MIN_HYBRID_ENTRIES, found: rows.len() });
    }
    let [a, b] = least_squares(&rows, &y).map_err(|_| ModelError::Collinear)?;
    Ok(HybridParams { a, b, gravity })
}

/// Best scalar `c` for the trace-only predictor `c·F` over the support of
/// `truth`.
pub fn fit_trace_scale(truth: &FlowMatrix, f: &FlowMatrix) -> Result<f64, ModelError> {
    let (mut yf, mut ff) = (0.0, 0.0);
    for (pair, y) in truth.iter() {
        let fv = f.weight(pair);
        yf += y * fv;
        ff += fv * fv;
    }
    if ff == 0.0 {
        return Err(ModelError::EmptyTrace);
    }
    Ok(yf / ff)
}

/// `A·g + B·f` on the given pairs. Negative values are clamped to zero and
/// zero values are left out of the sparse result.
pub fn predict_hybrid<'a>(
    params: &HybridParams,
    g: &FlowMatrix,
    f: &FlowMatrix,
    pairs: impl IntoIterator<Item = &'a NodePair>,
) -> Result<FlowMatrix, ModelError> {
    let mut out = FlowMatrix::new();
    for pair in pairs {
        if !g.contains(pair) {
            return Err(ModelError::MissingPrediction(pair.clone()));
        }
        let h = (params.a * g.weight(pair) + params.b * f.weight(pair)).max(0.0);
        out.set(pair.0.clone(), pair.1.clone(), h)
            .map_err(|e| ModelError::InvalidParams(e.to_string()))?;
    }
    Ok(out)
}

/// Frobenius norm of `truth − pred` restricted to the positive entries of
/// `truth`.
pub fn loss(truth: &FlowMatrix, pred: &FlowMatrix) -> f64 {
    truth
        .iter()
        .fold(0.0, |acc, (pair, y)| acc + (y - pred.weight(pair)).powi(2))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::DeterrenceKind;
    use crate::NodeId;

    fn gp() -> GravityParams {
        GravityParams::new(1.0, 1.0, 1.0, 1.0, DeterrenceKind::Power).unwrap()
    }

    fn pair(i: usize) -> NodePair {
        (NodeId::new(format!("o{i}")), NodeId::new(format!("d{i}")))
    }

    fn matrix(values: &[f64]) -> FlowMatrix {
        let mut m = FlowMatrix::new();
        for (i, &v) in values.iter().enumerate() {
            let (o, d) = pair(i);
            m.add(o, d, v).unwrap();
        }
        m
    }

    #[test]
    fn exact_components() {
        let g = matrix(&[1.0, 2.0, 3.0, 4.0]);
        let f = matrix(&[5.0, 1.0, 0.0, 2.0]);
        let h = fit_hybrid(&g, &g, &f, gp()).unwrap();
        assert!((h.a - 1.0).abs() < 1e-12 && h.b.abs() < 1e-12);
        let h = fit_hybrid(&f, &g, &f, gp()).unwrap();
        assert!(h.a.abs() < 1e-12 && (h.b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_and_short_inputs() {
        let g = matrix(&[1.0, 2.0, 3.0]);
        let f = matrix(&[2.0, 4.0, 6.0]);
        let y = matrix(&[1.0, 1.0, 1.0]);
        assert!(matches!(fit_hybrid(&y, &g, &f, gp()), Err(ModelError::Collinear)));
        assert!(matches!(fit_hybrid(&y, &g, &FlowMatrix::new(), gp()), Err(ModelError::Collinear)));
        let one = matrix(&[1.0]);
        assert!(matches!(fit_hybrid(&one, &g, &f, gp()), Err(ModelError::TooFewEntries { .. })));
        let short_g = matrix(&[1.0]);
        assert!(matches!(fit_hybrid(&y, &short_g, &f, gp()), Err(ModelError::MissingPrediction(_))));
    }

    #[test]
    fn projections_and_linearity() {
        let g = matrix(&[4.0, 1.0]);
        let f = matrix(&[6.0]);
        let pairs: Vec<NodePair> = (0..2).map(pair).collect();
        let only_g = predict_hybrid(&HybridParams { a: 1.0, b: 0.0, gravity: gp() }, &g, &f, &pairs).unwrap();
        assert_eq!(only_g, g);
        let only_f = predict_hybrid(&HybridParams { a: 0.0, b: 1.0, gravity: gp() }, &g, &f, &pairs).unwrap();
        assert_eq!(only_f.len(), 1);
        assert_eq!(only_f.weight(&pair(0)), 6.0);
        assert_eq!(only_f.weight(&pair(1)), 0.0);
        let sum = predict_hybrid(&HybridParams { a: 1.0, b: 1.0, gravity: gp() }, &g, &f, &pairs).unwrap();
        assert_eq!(sum.weight(&pair(0)), 10.0);
    }

    #[test]
    fn negative_predictions_clamp_to_zero() {
        let g = matrix(&[1.0, 5.0]);
        let f = matrix(&[3.0, 1.0]);
        let pairs: Vec<NodePair> = (0..2).map(pair).collect();
        let h = predict_hybrid(&HybridParams { a: 1.0, b: -1.0, gravity: gp() }, &g, &f, &pairs).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.weight(&pair(1)), 4.0);
    }

    #[test]
    fn loss_values() {
        let y = matrix(&[3.0, 4.0]);
        assert_eq!(loss(&y, &y), 0.0);
        assert_eq!(loss(&matrix(&[3.0]), &FlowMatrix::new()), 3.0);
        assert_eq!(loss(&y, &FlowMatrix::new()), 5.0);
    }

    #[test]
    fn trace_scale() {
        let f = matrix(&[1.0, 2.0]);
        let y = matrix(&[3.0, 6.0]);
        assert!((fit_trace_scale(&y, &f).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(fit_trace_scale(&y, &FlowMatrix::new()), Err(ModelError::EmptyTrace)));
    }
}
