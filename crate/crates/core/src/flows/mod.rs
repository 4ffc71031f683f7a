//! Sparse origin-destination flow matrices and how they are built.

mod build;
mod distance;
mod filter;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use thiserror::Error;

use crate::{NodeId, NodePair};

pub use build::{build_air_truth, build_commute_truth, build_trace_flows, TraceFlows};
pub use distance::DistanceTable;
pub use filter::{calibrate_threshold, filter_by_distance, Calibration, ThresholdMode};

pub const FLOW_HEADER: [&str; 3] = ["origin", "destination", "weight"];
pub const DISTANCE_HEADER: [&str; 3] = ["origin", "destination", "km"];

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("self-loop at {0}; flow matrices have a zero diagonal")]
    Diagonal(NodeId),
    #[error("weight {weight} for {}->{} is not a finite non-negative number", .pair.0, .pair.1)]
    InvalidWeight { pair: NodePair, weight: f64 },
    #[error("no distance for {0}->{1}; flows and distances come from different tessellations")]
    MissingDistance(NodeId, NodeId),
    #[error("invalid distance {km} for {a}->{b}")]
    InvalidDistance { a: NodeId, b: NodeId, km: f64 },
    #[error("invalid distance bounds: min {min:?}, max {max:?}")]
    InvalidBounds { min: Option<f64>, max: Option<f64> },
    #[error("no threshold candidates given")]
    NoCandidates,
    #[error("every threshold candidate gives a constant series; correlation undefined")]
    DegenerateCalibration,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Directed weighted graph of trips between nodes.
///
/// Only strictly positive weights are stored and the diagonal is always
/// empty. Iteration order is by (origin, destination).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowMatrix {
    nodes: BTreeSet<NodeId>,
    entries: BTreeMap<NodePair, f64>,
}

impl FlowMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_nodes(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        FlowMatrix { nodes: nodes.into_iter().collect(), entries: BTreeMap::new() }
    }

    pub fn add_node(&mut self, node: NodeId) {
        self.nodes.insert(node);
    }

    fn check(origin: &NodeId, destination: &NodeId, weight: f64) -> Result<(), FlowError> {
        if origin == destination {
            return Err(FlowError::Diagonal(origin.clone()));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(FlowError::InvalidWeight { pair: (origin.clone(), destination.clone()), weight });
        }
        Ok(())
    }

    /// Accumulates `weight` onto the entry. Zero weights only register nodes.
    pub fn add(&mut self, origin: NodeId, destination: NodeId, weight: f64) -> Result<(), FlowError> {
        Self::check(&origin, &destination, weight)?;
        self.nodes.insert(origin.clone());
        self.nodes.insert(destination.clone());
        if weight > 0.0 {
            *self.entries.entry((origin, destination)).or_insert(0.0) += weight;
        }
        Ok(())
    }

    /// Sets the entry, removing it when `weight` is zero.
    pub fn set(&mut self, origin: NodeId, destination: NodeId, weight: f64) -> Result<(), FlowError> {
        Self::check(&origin, &destination, weight)?;
        self.nodes.insert(origin.clone());
        self.nodes.insert(destination.clone());
        if weight > 0.0 {
            self.entries.insert((origin, destination), weight);
        } else {
            self.entries.remove(&(origin, destination));
        }
        Ok(())
    }

    /// Weight of the entry, zero when absent.
    pub fn get(&self, origin: &NodeId, destination: &NodeId) -> f64 {
        // BTreeMap<(A, B), _> cannot be queried with borrowed halves without a clone.
        self.entries
            .get(&(origin.clone(), destination.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn weight(&self, pair: &NodePair) -> f64 {
        self.entries.get(pair).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, pair: &NodePair) -> bool {
        self.entries.contains_key(pair)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodePair, f64)> + '_ {
        self.entries.iter().map(|(k, &w)| (k, w))
    }

    pub fn keys(&self) -> impl Iterator<Item = &NodePair> + '_ {
        self.entries.keys()
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().fold(0.0, |acc, w| acc + w)
    }

    /// Keeps the entries accepted by `keep`; the node set is unchanged.
    pub fn restrict(&self, mut keep: impl FnMut(&NodePair, f64) -> bool) -> FlowMatrix {
        FlowMatrix {
            nodes: self.nodes.clone(),
            entries: self
                .entries
                .iter()
                .filter(|(k, &w)| keep(k, w))
                .map(|(k, &w)| (k.clone(), w))
                .collect(),
        }
    }

    /// Renames nodes and sums the entries that collide. Entries whose
    /// endpoints map to the same node, or to `None`, are dropped.
    pub fn relabel(&self, mut map: impl FnMut(&NodeId) -> Option<NodeId>) -> FlowMatrix {
        let mut out = FlowMatrix::new();
        for node in &self.nodes {
            if let Some(n) = map(node) {
                out.nodes.insert(n);
            }
        }
        for ((o, d), &w) in &self.entries {
            if let (Some(o), Some(d)) = (map(o), map(d)) {
                if o != d {
                    *out.entries.entry((o, d)).or_insert(0.0) += w;
                }
            }
        }
        out
    }

    /// Every entry multiplied by `factor` (entries that become zero vanish).
    pub fn scaled(&self, factor: f64) -> FlowMatrix {
        assert!(factor.is_finite() && factor >= 0.0, "scale factor must be finite and non-negative");
        self.restrict(|_, _| factor > 0.0).map_weights(|w| w * factor)
    }

    fn map_weights(mut self, f: impl Fn(f64) -> f64) -> FlowMatrix {
        for w in self.entries.values_mut() {
            *w = f(*w);
        }
        self.entries.retain(|_, w| *w > 0.0);
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|((o, d), &w)| self.entries.get(&(d.clone(), o.clone())) == Some(&w))
    }

    /// Writes `origin,destination,weight` sorted by (origin, destination).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FlowError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(FLOW_HEADER)?;
        for ((o, d), w) in &self.entries {
            wtr.write_record([o.as_str(), d.as_str(), &w.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a flow CSV. Duplicate rows accumulate; zero weights are ignored.
    pub fn read_csv<R: Read>(reader: R) -> Result<FlowMatrix, FlowError> {
        let mut m = FlowMatrix::new();
        for (line, [o, d, w]) in read_triples(reader, &FLOW_HEADER)? {
            let w: f64 = w.parse().map_err(|_| FlowError::Parse { line, message: format!("bad weight `{w}`") })?;
            m.add(NodeId::new(o), NodeId::new(d), w)
                .map_err(|e| FlowError::Parse { line, message: e.to_string() })?;
        }
        Ok(m)
    }
}

pub(crate) fn read_triples<R: Read>(reader: R, header: &[&str; 3]) -> Result<Vec<(u64, [String; 3])>, FlowError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let head_ok = match records.next() {
        Some(rec) => rec?.iter().map(str::trim).eq(header.iter().copied()),
        None => false,
    };
    if !head_ok {
        return Err(FlowError::Parse { line: 1, message: format!("expected header `{}`", header.join(",")) });
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(FlowError::Parse { line, message: "expected 3 fields".into() });
        }
        out.push((line, [rec[0].trim().to_owned(), rec[1].trim().to_owned(), rec[2].trim().to_owned()]));
    }
    Ok(out)
}
