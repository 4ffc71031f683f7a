use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{quantile_sorted, r_squared, PairedSeries};
use super::report::{Curve, EvalReport, FoldDetail};
use super::EvalError;
use crate::flows::FlowMatrix;
use crate::geo::GeoPoint;
use crate::models::{fit_stack, ModelInputs, ModelKind, Predictions, MIN_GRAVITY_ENTRIES};
use crate::{NodeId, NodePair};

/// Ground truth minus the flows between co-located nodes, which the gravity
/// law cannot score.
fn usable_truth(truth: &FlowMatrix, inputs: &ModelInputs<'_>) -> Result<(FlowMatrix, usize), EvalError> {
    let mut excluded = BTreeSet::new();
    for ((o, d), _) in truth.iter() {
        if inputs.distances.require(o, d)? <= 0.0 {
            excluded.insert((o.clone(), d.clone()));
        }
    }
    let kept = truth.restrict(|pair, _| !excluded.contains(pair));
    Ok((kept, excluded.len()))
}

fn merge_into(all: &mut Predictions, fold: Predictions) {
    for (kind, m) in fold {
        let target = all.entry(kind).or_default();
        for ((o, d), w) in m.iter() {
            target.add(o.clone(), d.clone(), w).expect("fold predictions are valid flows");
        }
    }
}

fn exclusion_note(report: &mut EvalReport, n: usize) {
    report.n_excluded = n;
    if n > 0 {
        report
            .notes
            .push(format!("{n} ground-truth flows between co-located nodes were left out"));
    }
}

/// K-fold cross-validation over the positive entries of `truth`.
///
/// Entries are shuffled with a ChaCha8 generator seeded by `seed` and cut
/// into `k` contiguous chunks whose sizes differ by at most one. Each entry
/// is predicted exactly once, by models fitted without it.
pub fn kfold_cv(truth: &FlowMatrix, inputs: &ModelInputs<'_>, k: usize, seed: u64) -> Result<EvalReport, EvalError> {
    let (truth, n_excluded) = usable_truth(truth, inputs)?;
    let mut keys: Vec<NodePair> = truth.keys().cloned().collect();
    if k < 2 || keys.len() < k {
        return Err(EvalError::InvalidFolds { k, entries: keys.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    keys.shuffle(&mut rng);

    let mut report = EvalReport::new("kfold", seed);
    report.n_entries = keys.len();
    exclusion_note(&mut report, n_excluded);

    let (base, extra) = (keys.len() / k, keys.len() % k);
    let mut start = 0;
    let mut all = Predictions::new();
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let test = &keys[start..start + size];
        start += size;
        let held_out: BTreeSet<&NodePair> = test.iter().collect();
        let train = truth.restrict(|pair, _| !held_out.contains(pair));
        let label = format!("fold {}", fold + 1);
        let fit = fit_stack(&train, inputs).map_err(|source| EvalError::Fit { label: label.clone(), source })?;
        let preds = fit.predict(test, inputs).map_err(|source| EvalError::Fit { label: label.clone(), source })?;
        merge_into(&mut all, preds);
        report.folds.push(FoldDetail { label, n_test: test.len(), fit });
    }
    report.score_set("all", &truth, &all);
    report.predictions = all;
    Ok(report)
}

/// Geographic two-fold validation. Nodes with longitude below `meridian_lon`
/// form the west half, the rest the east half. Flows crossing the meridian
/// are discarded; models are trained on one half and tested on the other,
/// in both directions.
pub fn spatial_cv(
    truth: &FlowMatrix,
    locations: &BTreeMap<NodeId, GeoPoint>,
    inputs: &ModelInputs<'_>,
    meridian_lon: f64,
) -> Result<EvalReport, EvalError> {
    let (truth, n_excluded) = usable_truth(truth, inputs)?;
    let is_west = |node: &NodeId| -> Result<bool, EvalError> {
        let p = locations.get(node).ok_or_else(|| EvalError::MissingLocation(node.clone()))?;
        Ok(p.lon() < meridian_lon)
    };
    let mut side = BTreeMap::new();
    for ((o, d), _) in truth.iter() {
        let (wo, wd) = (is_west(o)?, is_west(d)?);
        if wo == wd {
            side.insert((o.clone(), d.clone()), wo);
        }
    }
    let crossing = truth.len() - side.len();
    let west = truth.restrict(|pair, _| side.get(pair) == Some(&true));
    let east = truth.restrict(|pair, _| side.get(pair) == Some(&false));
    for (name, half) in [("west", &west), ("east", &east)] {
        if half.len() < MIN_GRAVITY_ENTRIES {
            return Err(EvalError::SparseHalf { half: name, flows: half.len(), needed: MIN_GRAVITY_ENTRIES });
        }
    }

    let mut report = EvalReport::new("spatial", 0);
    report.n_entries = west.len() + east.len();
    exclusion_note(&mut report, n_excluded);
    report.notes.push(format!("meridian {meridian_lon}; {crossing} crossing flows discarded"));

    let mut pooled = Predictions::new();
    for (label, train, test) in [("west_to_east", &west, &east), ("east_to_west", &east, &west)] {
        let fail = |source| EvalError::Fit { label: label.to_owned(), source };
        let fit = fit_stack(train, inputs).map_err(fail)?;
        let pairs: Vec<NodePair> = test.keys().cloned().collect();
        let preds = fit.predict(&pairs, inputs).map_err(fail)?;
        report.score_set(label, test, &preds);
        merge_into(&mut pooled, preds);
        report.folds.push(FoldDetail { label: label.to_owned(), n_test: pairs.len(), fit });
    }
    let both = truth.restrict(|pair, _| side.contains_key(pair));
    report.score_set("pooled", &both, &pooled);
    report.predictions = pooled;
    Ok(report)
}

/// Repeated random subsampling: for each training fraction, `repeats`
/// random training sets of that size are drawn without replacement, and r²
/// is measured on the complement. Each model gets a curve of
/// `(fraction, n_train, mean r², first quartile, third quartile)`.
pub fn learning_curve(
    truth: &FlowMatrix,
    inputs: &ModelInputs<'_>,
    fractions: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if repeats == 0 {
        return Err(EvalError::InvalidRepeats);
    }
    if fractions.is_empty() || fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::Unsorted("fractions"));
    }
    let (truth, n_excluded) = usable_truth(truth, inputs)?;
    let n = truth.len();
    let sizes = fractions
        .iter()
        .map(|&fraction| {
            let n_train = (fraction * n as f64).round() as usize;
            if !(fraction > 0.0 && fraction < 1.0) {
                Err(EvalError::InvalidFraction { fraction, reason: "must lie in (0, 1)".into() })
            } else if n_train < MIN_GRAVITY_ENTRIES || n - n_train < 2 {
                Err(EvalError::InvalidFraction {
                    fraction,
                    reason: format!(
                        "{n_train} training and {} test flows out of {n}; need at least {MIN_GRAVITY_ENTRIES} and 2",
                        n - n_train
                    ),
                })
            } else {
                Ok(n_train)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = EvalReport::new("learning-curve", seed);
    report.n_entries = n;
    exclusion_note(&mut report, n_excluded);
    let mut curves: BTreeMap<ModelKind, Curve> = ModelKind::ALL
        .iter()
        .map(|&k| (k, Curve::new(&["fraction", "n_train", "mean_r2", "q1_r2", "q3_r2"])))
        .collect();

    let base: Vec<NodePair> = truth.keys().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (&fraction, &n_train) in fractions.iter().zip(&sizes) {
        let mut scores: BTreeMap<ModelKind, Vec<f64>> = BTreeMap::new();
        for _ in 0..repeats {
            let mut keys = base.clone();
            keys.shuffle(&mut rng);
            let chosen: BTreeSet<&NodePair> = keys[..n_train].iter().collect();
            let train = truth.restrict(|pair, _| chosen.contains(pair));
            let test = truth.restrict(|pair, _| !chosen.contains(pair));
            let fail = |source| EvalError::FractionFit { fraction, source };
            let fit = fit_stack(&train, inputs).map_err(fail)?;
            let pairs: Vec<NodePair> = test.keys().cloned().collect();
            let preds = fit.predict(&pairs, inputs).map_err(fail)?;
            for (kind, pred) in preds {
                let r2 = r_squared(&PairedSeries::on_keys(&test, &pred, &pairs))
                    .map_err(|e| EvalError::InvalidFraction { fraction, reason: format!("test set: {e}") })?;
                scores.entry(kind).or_default().push(r2);
            }
        }
        for (kind, mut values) in scores {
            values.sort_by(f64::total_cmp);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            curves.get_mut(&kind).expect("all models present").push(vec![
                Some(fraction),
                Some(n_train as f64),
                Some(mean),
                quantile_sorted(&values, 0.25),
                quantile_sorted(&values, 0.75),
            ]);
        }
    }
    report.curves = curves.into_iter().map(|(k, c)| (format!("learning_curve_{k}"), c)).collect();
    Ok(report)
}
