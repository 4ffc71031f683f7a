//! Synthetic worlds and reference implementations shared by the
//! integration tests. Everything here is written independently of the
//! library code it checks.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mobflow::flows::{DistanceTable, FlowMatrix};
use mobflow::geo::GeoPoint;
use mobflow::ingest::PopulationTable;
use mobflow::models::{DeterrenceKind, ModelInputs};
use mobflow::NodeId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn id(s: &str) -> NodeId {
    NodeId::new(s)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct World {
    pub nodes: Vec<NodeId>,
    pub locations: BTreeMap<NodeId, GeoPoint>,
    pub population: PopulationTable,
    pub distances: DistanceTable,
}

/// `n` nodes over the continental US, half of them on each side of 102°W.
pub fn world(n: usize, seed: u64) -> World {
    let mut r = rng(seed);
    let mut locations = BTreeMap::new();
    let mut population = PopulationTable::new();
    let mut nodes = Vec::new();
    for i in 0..n {
        let node = id(&format!("n{i:03}"));
        let lon = if i % 2 == 0 { r.random_range(-124.0..-103.0) } else { r.random_range(-101.0..-68.0) };
        let lat = r.random_range(26.0..48.0);
        locations.insert(node.clone(), GeoPoint::new(lat, lon).unwrap());
        population.add(node.clone(), 10f64.powf(r.random_range(4.0..7.0))).unwrap();
        nodes.push(node);
    }
    let distances = DistanceTable::from_points(locations.iter());
    World { nodes, locations, population, distances }
}

pub fn deterrence(kind: DeterrenceKind, beta: f64, km: f64) -> f64 {
    match kind {
        DeterrenceKind::Power => km.powf(-beta),
        DeterrenceKind::Exponential => (-beta * km).exp(),
    }
}

/// Every ordered pair of distinct nodes, flows from the gravity law.
pub fn gravity_truth(w: &World, k: f64, alpha: f64, gamma: f64, beta: f64, kind: DeterrenceKind) -> FlowMatrix {
    let mut m = FlowMatrix::new();
    for o in &w.nodes {
        for d in &w.nodes {
            if o != d {
                let km = w.distances.get(o, d).unwrap();
                let y = k
                    * w.population.get(o).unwrap().powf(alpha)
                    * w.population.get(d).unwrap().powf(gamma)
                    * deterrence(kind, beta, km);
                m.add(o.clone(), d.clone(), y).unwrap();
            }
        }
    }
    m
}

/// Random trace counts on about `density` of the ordered pairs.
pub fn random_traces(w: &World, density: f64, seed: u64) -> FlowMatrix {
    let mut r = rng(seed);
    let mut m = FlowMatrix::new();
    for o in &w.nodes {
        for d in &w.nodes {
            if o != d && r.random_bool(density) {
                m.add(o.clone(), d.clone(), r.random_range(1..200) as f64).unwrap();
            }
        }
    }
    m
}

pub fn inputs<'a>(w: &'a World, trace: &'a FlowMatrix, kind: DeterrenceKind) -> ModelInputs<'a> {
    ModelInputs { population: &w.population, distances: &w.distances, trace_flows: trace, kind }
}

/// Textbook two-pass sample correlation.
pub fn pearson_two_pass(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

pub fn r_squared_textbook(y: &[f64], h: &[f64]) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let ss_res: f64 = y.iter().zip(h).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Least squares through nalgebra's SVD.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let a = nalgebra::DMatrix::from_row_slice(rows.len(), p, &flat);
    let b = nalgebra::DVector::from_column_slice(y);
    a.svd(true, true).solve(&b, 1e-14).unwrap().iter().copied().collect()
}

/// Regression rows and targets of the log-linear gravity law.
pub fn gravity_design(w: &World, truth: &FlowMatrix, kind: DeterrenceKind) -> (Vec<Vec<f64>>, Vec<f64>) {
    truth
        .iter()
        .map(|((o, d), y)| {
            let km = w.distances.get(o, d).unwrap();
            let t = match kind {
                DeterrenceKind::Power => km.ln(),
                DeterrenceKind::Exponential => km,
            };
            (vec![1.0, w.population.get(o).unwrap().ln(), w.population.get(d).unwrap().ln(), -t], y.ln())
        })
        .unzip()
}

/// Closed-form `(A, B)` of the two-regressor least squares without
/// intercept, by Cramer's rule on the normal equations.
pub fn cramer_2x2(g: &[f64], f: &[f64], y: &[f64]) -> (f64, f64) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, z)| x * z).sum::<f64>();
    let (gg, ff, gf, gy, fy) = (dot(g, g), dot(f, f), dot(g, f), dot(g, y), dot(f, y));
    let det = gg * ff - gf * gf;
    ((gy * ff - gf * fy) / det, (gg * fy - gf * gy) / det)
}

pub fn entries(m: &FlowMatrix) -> Vec<((NodeId, NodeId), f64)> {
    m.iter().map(|(k, v)| (k.clone(), v)).collect()
}
