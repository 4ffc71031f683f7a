use super::linalg::least_squares;
use super::{DeterrenceKind, GravityParams, ModelError, MIN_GRAVITY_ENTRIES};
use crate::flows::{DistanceTable, FlowMatrix};
use crate::ingest::PopulationTable;
use crate::{NodeId, NodePair};

const COLUMN_NAMES: [&str; 4] = ["log K (intercept)", "log P_origin", "log P_destination", "distance term"];

fn population(pop: &PopulationTable, node: &NodeId) -> Result<f64, ModelError> {
    pop.get(node).ok_or_else(|| ModelError::MissingPopulation(node.clone()))
}

fn distance(d: &DistanceTable, o: &NodeId, dst: &NodeId) -> Result<f64, ModelError> {
    d.get(o, dst).ok_or_else(|| ModelError::MissingDistance(o.clone(), dst.clone()))
}

/// Evaluates the gravity law on exactly the requested pairs.
pub fn predict_gravity<'a>(
    params: &GravityParams,
    pop: &PopulationTable,
    d: &DistanceTable,
    pairs: impl IntoIterator<Item = &'a NodePair>,
) -> Result<FlowMatrix, ModelError> {
    params.validate()?;
    let mut out = FlowMatrix::new();
    for (o, dst) in pairs {
        if o == dst {
            return Err(ModelError::SelfPair(o.clone()));
        }
        let km = distance(d, o, dst)?;
        if km <= 0.0 {
            return Err(ModelError::NonPositiveDistance { pair: (o.clone(), dst.clone()), km });
        }
        let value = params.k
            * population(pop, o)?.powf(params.alpha)
            * population(pop, dst)?.powf(params.gamma)
            * params.kind.factor(params.beta, km);
        out.set(o.clone(), dst.clone(), value)
            .map_err(|e| ModelError::InvalidParams(e.to_string()))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravityFit {
    pub params: GravityParams,
    /// Number of flows the regression used.
    pub used: usize,
    /// Flows left out because their endpoints are zero kilometers apart.
    pub excluded: Vec<NodePair>,
}

/// Ordinary least squares of
/// `log y = log K + alpha·log P_i + gamma·log P_j − beta·t(d)`
/// over the positive entries of `truth`, where `t(d)` is `log d` for the
/// power law and `d` for the exponential.
pub fn fit_gravity(
    truth: &FlowMatrix,
    pop: &PopulationTable,
    d: &DistanceTable,
    kind: DeterrenceKind,
) -> Result<GravityFit, ModelError> {
    let mut rows = Vec::with_capacity(truth.len());
    let mut target = Vec::with_capacity(truth.len());
    let mut excluded = Vec::new();
    for ((o, dst), y) in truth.iter() {
        let km = distance(d, o, dst)?;
        if km <= 0.0 {
            excluded.push((o.clone(), dst.clone()));
            continue;
        }
        rows.push([
            1.0,
            population(pop, o)?.ln(),
            population(pop, dst)?.ln(),
            -kind.log_regressor(km),
        ]);
        target.push(y.ln());
    }
    if rows.len() < MIN_GRAVITY_ENTRIES {
        return Err(ModelError::TooFewEntries { needed: MIN_GRAVITY_ENTRIES, found: rows.len() });
    }
    let coef = least_squares(&rows, &target).map_err(|e| ModelError::RankDeficient {
        columns: e.columns.iter().map(|&j| COLUMN_NAMES[j].to_owned()).collect(),
        condition: e.condition,
    })?;
    let params = GravityParams::new(coef[0].exp(), coef[1], coef[2], coef[3], kind)?;
    Ok(GravityFit { params, used: rows.len(), excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;

    fn n(s: &str) -> NodeId {
        NodeId::from(s)
    }

    fn two_nodes(pi: f64, pj: f64, km: f64) -> (PopulationTable, DistanceTable) {
        let pop = [(n("i"), pi), (n("j"), pj)].into_iter().collect();
        let d = DistanceTable::from_entries([(n("i"), n("j"), km)]).unwrap();
        (pop, d)
    }

    #[test]
    fn degenerate_parameters_give_unit_flows() {
        let (pop, d) = two_nodes(10.0, 5.0, 10.0);
        let p = GravityParams::new(1.0, 0.0, 0.0, 0.0, DeterrenceKind::Power).unwrap();
        let pairs = [(n("i"), n("j")), (n("j"), n("i"))];
        let g = predict_gravity(&p, &pop, &d, &pairs).unwrap();
        assert!(g.iter().all(|(_, w)| w == 1.0));
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn direct_arithmetic() {
        let (pop, d) = two_nodes(10.0, 5.0, 10.0);
        let p = GravityParams::new(2.0, 1.0, 1.0, 2.0, DeterrenceKind::Power).unwrap();
        let g = predict_gravity(&p, &pop, &d, &[(n("i"), n("j"))]).unwrap();
        assert!((g.get(&n("i"), &n("j")) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swap_symmetry_follows_exponents() {
        let (pop, d) = two_nodes(10.0, 5.0, 10.0);
        let pairs = [(n("i"), n("j")), (n("j"), n("i"))];
        let asym = GravityParams::new(2.0, 1.0, 0.5, 2.0, DeterrenceKind::Power).unwrap();
        let g = predict_gravity(&asym, &pop, &d, &pairs).unwrap();
        assert_ne!(g.get(&n("i"), &n("j")), g.get(&n("j"), &n("i")));
        let sym = GravityParams::new(2.0, 0.7, 0.7, 2.0, DeterrenceKind::Exponential).unwrap();
        let g = predict_gravity(&sym, &pop, &d, &pairs).unwrap();
        assert_eq!(g.get(&n("i"), &n("j")), g.get(&n("j"), &n("i")));
    }

    #[test]
    fn prediction_errors_name_the_pair() {
        let (pop, d) = two_nodes(10.0, 5.0, 10.0);
        let p = GravityParams::new(1.0, 1.0, 1.0, 1.0, DeterrenceKind::Power).unwrap();
        let err = predict_gravity(&p, &pop, &d, &[(n("i"), n("k"))]).unwrap_err();
        assert!(matches!(err, ModelError::MissingDistance(_, ref b) if b.as_str() == "k"));
        let sparse_pop: PopulationTable = [(n("i"), 1.0)].into_iter().collect();
        let err = predict_gravity(&p, &sparse_pop, &d, &[(n("i"), n("j"))]).unwrap_err();
        assert!(matches!(err, ModelError::MissingPopulation(ref x) if x.as_str() == "j"));
        assert!(matches!(predict_gravity(&p, &pop, &d, &[(n("i"), n("i"))]), Err(ModelError::SelfPair(_))));
        let (pop0, d0) = two_nodes(10.0, 5.0, 0.0);
        assert!(matches!(
            predict_gravity(&p, &pop0, &d0, &[(n("i"), n("j"))]),
            Err(ModelError::NonPositiveDistance { .. })
        ));
    }

    fn grid_world(count: usize) -> (Vec<NodeId>, PopulationTable, DistanceTable) {
        let ids: Vec<NodeId> = (0..count).map(|i| NodeId::new(format!("n{i:02}"))).collect();
        let pts: Vec<GeoPoint> = (0..count)
            .map(|i| GeoPoint::new(30.0 + (i % 4) as f64 * 2.1, -120.0 + (i / 4) as f64 * 3.3 + i as f64 * 0.01).unwrap())
            .collect();
        let pop = ids.iter().enumerate().map(|(i, id)| (id.clone(), 1000.0 * (i as f64 + 1.5).powf(1.7))).collect();
        let d = DistanceTable::from_points(ids.iter().zip(&pts));
        (ids, pop, d)
    }

    #[test]
    fn constant_target_gives_zero_exponents() {
        let (ids, pop, d) = grid_world(8);
        let mut truth = FlowMatrix::new();
        for a in &ids {
            for b in &ids {
                if a != b {
                    truth.add(a.clone(), b.clone(), 42.0).unwrap();
                }
            }
        }
        let fit = fit_gravity(&truth, &pop, &d, DeterrenceKind::Power).unwrap();
        assert!((fit.params.k - 42.0).abs() < 1e-9);
        for v in [fit.params.alpha, fit.params.gamma, fit.params.beta] {
            assert!(v.abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn identical_populations_are_collinear_with_intercept() {
        let (ids, _, d) = grid_world(6);
        let pop: PopulationTable = ids.iter().map(|id| (id.clone(), 500.0)).collect();
        let mut truth = FlowMatrix::new();
        for (k, a) in ids.iter().enumerate() {
            for b in &ids {
                if a != b {
                    truth.add(a.clone(), b.clone(), 1.0 + k as f64).unwrap();
                }
            }
        }
        let err = fit_gravity(&truth, &pop, &d, DeterrenceKind::Power).unwrap_err();
        let ModelError::RankDeficient { columns, .. } = &err else { panic!("{err}") };
        assert!(columns.contains(&COLUMN_NAMES[0].to_owned()));
        assert!(columns.contains(&COLUMN_NAMES[1].to_owned()));
        assert!(err.to_string().contains("collinear"));
    }

    #[test]
    fn too_few_and_zero_distance() {
        let (ids, pop, _) = grid_world(4);
        let mut entries = Vec::new();
        for a in &ids {
            for b in &ids {
                if a < b {
                    entries.push((a.clone(), b.clone(), if a.as_str() == "n00" { 0.0 } else { 5.0 }));
                }
            }
        }
        let d = DistanceTable::from_entries(entries).unwrap();
        let mut truth = FlowMatrix::new();
        truth.add(ids[0].clone(), ids[1].clone(), 3.0).unwrap();
        truth.add(ids[1].clone(), ids[2].clone(), 3.0).unwrap();
        let err = fit_gravity(&truth, &pop, &d, DeterrenceKind::Exponential).unwrap_err();
        assert!(matches!(err, ModelError::TooFewEntries { needed: 4, found: 1 }));
    }
}
