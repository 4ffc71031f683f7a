use std::collections::BTreeMap;

use serde::Serialize;

use super::metrics::{cpc, quantile_sorted, r_squared, PairedSeries};
use super::report::Curve;
use super::EvalError;
use crate::flows::{DistanceTable, FlowMatrix};
use crate::ingest::PopulationTable;
use crate::models::{ModelKind, Predictions};
use crate::NodePair;

/// Fewest surviving entries for which a thresholded r² is reported.
pub const MIN_THRESHOLD_ENTRIES: usize = 3;

fn check_ascending(values: &[f64], what: &'static str, min_len: usize) -> Result<(), EvalError> {
    if values.len() < min_len
        || values.iter().any(|v| !v.is_finite())
        || values.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(EvalError::Unsorted(what));
    }
    Ok(())
}

/// Bin of `x` for ascending `edges`: `[e_k, e_{k+1})`, the last bin closed.
pub(crate) fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len().checked_sub(1)?;
    if last == 0 || !(x >= edges[0] && x <= edges[last]) {
        return None;
    }
    let k = edges.partition_point(|&e| e <= x);
    Some(k.min(last) - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub n: usize,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ThresholdedR2 {
    pub points: BTreeMap<ModelKind, Vec<ThresholdPoint>>,
    /// Thresholds leaving fewer than three entries, or a constant truth.
    pub omitted: Vec<f64>,
}

impl ThresholdedR2 {
    pub fn curve(&self, kind: ModelKind) -> Curve {
        let mut c = Curve::new(&["threshold", "n", "r2"]);
        for p in self.points.get(&kind).into_iter().flatten() {
            c.push(vec![Some(p.threshold), Some(p.n as f64), Some(p.r_squared)]);
        }
        c
    }
}

/// r² of each prediction restricted to the truth entries strictly above
/// each threshold.
pub fn thresholded_r2(truth: &FlowMatrix, preds: &Predictions, thresholds: &[f64]) -> Result<ThresholdedR2, EvalError> {
    check_ascending(thresholds, "thresholds", 1)?;
    let mut out = ThresholdedR2::default();
    for &t in thresholds {
        let keys: Vec<&NodePair> = truth.iter().filter(|&(_, y)| y > t).map(|(k, _)| k).collect();
        let mut scored = Vec::new();
        if keys.len() >= MIN_THRESHOLD_ENTRIES {
            for (kind, pred) in preds {
                match r_squared(&PairedSeries::on_keys(truth, pred, keys.iter().copied())) {
                    Ok(r2) => scored.push((*kind, r2)),
                    Err(_) => break,
                }
            }
        }
        if scored.len() == preds.len() && !scored.is_empty() {
            for (kind, r2) in scored {
                out.points.entry(kind).or_default().push(ThresholdPoint { threshold: t, n: keys.len(), r_squared: r2 });
            }
        } else {
            out.omitted.push(t);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioBin {
    pub lo_km: f64,
    pub hi_km: f64,
    pub n: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCurve {
    pub bins: Vec<RatioBin>,
    /// Selected entries with unknown distance or outside every bin.
    pub unplaced: usize,
}

impl RatioCurve {
    pub fn curve(&self) -> Curve {
        let mut c = Curve::new(&["lo_km", "hi_km", "n", "median", "q1", "q3"]);
        for b in &self.bins {
            c.push(vec![Some(b.lo_km), Some(b.hi_km), Some(b.n as f64), b.median, b.q1, b.q3]);
        }
        c
    }
}

/// Median and quartiles of `pred / truth` per distance bin, over the truth
/// entries strictly above `min_flow`.
pub fn ratio_vs_distance(
    truth: &FlowMatrix,
    pred: &FlowMatrix,
    d: &DistanceTable,
    min_flow: f64,
    edges: &[f64],
) -> Result<RatioCurve, EvalError> {
    check_ascending(edges, "distance bin edges", 2)?;
    let mut ratios = vec![Vec::new(); edges.len() - 1];
    let mut unplaced = 0;
    for ((o, dst), y) in truth.iter() {
        if y <= min_flow {
            continue;
        }
        match d.get(o, dst).and_then(|km| bin_index(edges, km)) {
            Some(b) => ratios[b].push(pred.get(o, dst) / y),
            None => unplaced += 1,
        }
    }
    let bins = ratios
        .into_iter()
        .enumerate()
        .map(|(b, mut r)| {
            r.sort_by(f64::total_cmp);
            RatioBin {
                lo_km: edges[b],
                hi_km: edges[b + 1],
                n: r.len(),
                median: quantile_sorted(&r, 0.5),
                q1: quantile_sorted(&r, 0.25),
                q3: quantile_sorted(&r, 0.75),
            }
        })
        .collect();
    Ok(RatioCurve { bins, unplaced })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpcCell {
    pub distance_bin: usize,
    pub population_bin: usize,
    /// Truth entries falling in the cell.
    pub n: usize,
    pub cpc: BTreeMap<ModelKind, Option<f64>>,
    /// Hybrid minus gravity CPC, when both are defined.
    pub difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpcGrid {
    pub distance_edges: Vec<f64>,
    pub population_edges: Vec<f64>,
    pub cells: Vec<CpcCell>,
    /// Entries with unknown distance or population, or outside the grid.
    pub unplaced: usize,
}

impl CpcGrid {
    pub fn curve(&self) -> Curve {
        let mut columns = vec!["d_lo_km", "d_hi_km", "pop_lo", "pop_hi", "n"];
        columns.extend(ModelKind::ALL.iter().map(|k| k.name()));
        columns.push("hybrid_minus_gravity");
        let mut c = Curve::new(&columns);
        for cell in &self.cells {
            let (i, j) = (cell.distance_bin, cell.population_bin);
            let mut row = vec![
                Some(self.distance_edges[i]),
                Some(self.distance_edges[i + 1]),
                Some(self.population_edges[j]),
                Some(self.population_edges[j + 1]),
                Some(cell.n as f64),
            ];
            row.extend(ModelKind::ALL.iter().map(|k| cell.cpc.get(k).copied().flatten()));
            row.push(cell.difference);
            c.push(row);
        }
        c
    }
}

/// CPC per model inside each (distance, destination population) cell.
/// A cell holds every pair of the truth or prediction supports whose
/// distance and destination population fall in it.
pub fn cpc_grid(
    truth: &FlowMatrix,
    preds: &Predictions,
    d: &DistanceTable,
    pop: &PopulationTable,
    distance_edges: &[f64],
    population_edges: &[f64],
) -> Result<CpcGrid, EvalError> {
    check_ascending(distance_edges, "distance bin edges", 2)?;
    check_ascending(population_edges, "population bin edges", 2)?;
    let (nd, np) = (distance_edges.len() - 1, population_edges.len() - 1);

    let mut keys: Vec<&NodePair> = truth.keys().chain(preds.values().flat_map(|m| m.keys())).collect();
    keys.sort();
    keys.dedup();
    let mut cell_of = BTreeMap::new();
    let mut unplaced = 0;
    for key in keys {
        let placed = d
            .get(&key.0, &key.1)
            .and_then(|km| bin_index(distance_edges, km))
            .zip(pop.get(&key.1).and_then(|p| bin_index(population_edges, p)));
        match placed {
            Some(cell) => {
                cell_of.insert(key.clone(), cell);
            }
            None => unplaced += truth.contains(key) as usize,
        }
    }

    let mut cells = Vec::with_capacity(nd * np);
    for i in 0..nd {
        for j in 0..np {
            let inside = |pair: &NodePair, _: f64| cell_of.get(pair) == Some(&(i, j));
            let y = truth.restrict(inside);
            let cpc: BTreeMap<ModelKind, Option<f64>> =
                preds.iter().map(|(kind, h)| (*kind, cpc(&h.restrict(inside), &y).ok())).collect();
            let at = |k| cpc.get(&k).copied().flatten();
            let difference = at(ModelKind::Hybrid).zip(at(ModelKind::Gravity)).map(|(h, g)| h - g);
            cells.push(CpcCell { distance_bin: i, population_bin: j, n: y.len(), cpc, difference });
        }
    }
    Ok(CpcGrid {
        distance_edges: distance_edges.to_vec(),
        population_edges: population_edges.to_vec(),
        cells,
        unplaced,
    })
}

/// Flow-weighted complementary cumulative distribution of trip distance:
/// one row `(km, share of flow at distance ≥ km)` per distinct distance.
/// Entries with unknown distance are skipped.
pub fn trip_distance_ccdf(flows: &FlowMatrix, d: &DistanceTable) -> Curve {
    let mut pts: Vec<(f64, f64)> = flows.iter().filter_map(|((o, dst), w)| Some((d.get(o, dst)?, w))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut c = Curve::new(&["km", "ccdf"]);
    let mut remaining = total;
    let mut i = 0;
    while i < pts.len() {
        let km = pts[i].0;
        c.push(vec![Some(km), Some(remaining / total)]);
        while i < pts.len() && pts[i].0 == km {
            remaining -= pts[i].1;
            i += 1;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NodeId;

    fn id(s: &str) -> NodeId {
        NodeId::new(s)
    }

    fn world() -> (FlowMatrix, DistanceTable, PopulationTable) {
        let mut y = FlowMatrix::new();
        let mut entries = Vec::new();
        for (o, d, w, km) in [
            ("a", "b", 50.0, 100.0),
            ("b", "a", 150.0, 100.0),
            ("a", "c", 300.0, 800.0),
            ("c", "b", 100.0, 600.0),
            ("b", "c", 250.0, 600.0),
        ] {
            y.add(id(o), id(d), w).unwrap();
            entries.push((id(o), id(d), km));
        }
        entries.push((id("c"), id("a"), 800.0));
        let pop = [(id("a"), 10.0), (id("b"), 1000.0), (id("c"), 50.0)].into_iter().collect();
        (y, DistanceTable::from_entries(entries).unwrap(), pop)
    }

    #[test]
    fn bins_are_half_open_with_closed_end() {
        let e = [0.0, 10.0, 20.0];
        assert_eq!(bin_index(&e, 0.0), Some(0));
        assert_eq!(bin_index(&e, 10.0), Some(1));
        assert_eq!(bin_index(&e, 20.0), Some(1));
        assert_eq!(bin_index(&e, 20.5), None);
        assert_eq!(bin_index(&e, -1.0), None);
        assert_eq!(bin_index(&e, f64::NAN), None);
    }

    #[test]
    fn threshold_zero_is_plain_r2() {
        let (y, _, _) = world();
        let pred = y.scaled(0.9);
        let preds: Predictions = [(ModelKind::Hybrid, pred.clone())].into_iter().collect();
        let t = thresholded_r2(&y, &preds, &[0.0, 120.0, 1e6]).unwrap();
        let full = r_squared(&PairedSeries::on_keys(&y, &pred, y.keys())).unwrap();
        let pts = &t.points[&ModelKind::Hybrid];
        assert_eq!(pts[0].r_squared, full);
        assert_eq!(pts[0].n, 5);
        assert_eq!(pts[1].n, 3);
        assert_eq!(t.omitted, vec![1e6]);
    }

    #[test]
    fn ratio_medians() {
        let (y, d, _) = world();
        let r = ratio_vs_distance(&y, &y.scaled(0.5), &d, 100.0, &[0.0, 500.0, 1000.0]).unwrap();
        // the 100-passenger flow sits exactly at the cut and is left out
        assert_eq!(r.bins[0].n, 1);
        assert_eq!(r.bins[1].n, 2);
        assert!(r.bins.iter().all(|b| b.median == Some(0.5)));
        assert_eq!(r.unplaced, 0);
        let empty = ratio_vs_distance(&y, &y, &d, 1e9, &[0.0, 1.0]).unwrap();
        assert_eq!(empty.bins[0].median, None);
    }

    #[test]
    fn single_cell_matches_global_cpc() {
        let (y, d, pop) = world();
        let h = y.scaled(2.0);
        let preds: Predictions = [(ModelKind::Gravity, h.clone()), (ModelKind::Hybrid, h.clone())].into_iter().collect();
        let g = cpc_grid(&y, &preds, &d, &pop, &[0.0, 1000.0], &[0.0, 1e4]).unwrap();
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0].cpc[&ModelKind::Hybrid], Some(cpc(&h, &y).unwrap()));
        assert_eq!(g.cells[0].difference, Some(0.0));
    }

    #[test]
    fn ccdf_starts_at_one() {
        let (y, d, _) = world();
        let c = trip_distance_ccdf(&y, &d);
        assert_eq!(c.rows[0], vec![Some(100.0), Some(1.0)]);
        assert_eq!(c.rows.len(), 3);
        assert_eq!(c.rows[2], vec![Some(800.0), Some(300.0 / 850.0)]);
    }

    #[test]
    fn rejects_unsorted_edges() {
        let (y, d, _) = world();
        assert!(ratio_vs_distance(&y, &y, &d, 0.0, &[5.0, 1.0]).is_err());
    }
}
