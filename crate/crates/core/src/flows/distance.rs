use std::collections::HashMap;
use std::io::{Read, Write};

use super::{read_triples, FlowError, DISTANCE_HEADER};
use crate::geo::{haversine_distance, GeoPoint};
use crate::NodeId;

/// Symmetric node-to-node distances in kilometers, stored densely.
/// Unknown pairs are kept as NaN and reported as `None`.
#[derive(Debug, Clone, Default)]
pub struct DistanceTable {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    km: Vec<f64>,
}

impl DistanceTable {
    fn empty(mut ids: Vec<NodeId>) -> Self {
        ids.sort();
        ids.dedup();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let n = ids.len();
        let mut km = vec![f64::NAN; n * n];
        for i in 0..n {
            km[i * n + i] = 0.0;
        }
        DistanceTable { ids, index, km }
    }

    /// Great-circle distances between every pair of representative points.
    pub fn from_points<'a>(points: impl IntoIterator<Item = (&'a NodeId, &'a GeoPoint)>) -> Self {
        let points: Vec<(&NodeId, &GeoPoint)> = points.into_iter().collect();
        let mut table = Self::empty(points.iter().map(|(id, _)| (*id).clone()).collect());
        let n = table.ids.len();
        let located: HashMap<&NodeId, &GeoPoint> = points.into_iter().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = haversine_distance(located[&table.ids[i]], located[&table.ids[j]]);
                table.km[i * n + j] = d;
                table.km[j * n + i] = d;
            }
        }
        table
    }

    /// Builds a table from explicit `(a, b, km)` entries; each pair may be
    /// given in one or both directions but must agree.
    pub fn from_entries(entries: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Result<Self, FlowError> {
        let entries: Vec<_> = entries.into_iter().collect();
        let ids = entries.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]).collect();
        let mut table = Self::empty(ids);
        let n = table.ids.len();
        for (a, b, d) in entries {
            let (i, j) = (table.index[&a], table.index[&b]);
            let invalid = !d.is_finite() || d < 0.0 || (i == j && d != 0.0);
            let conflict = !table.km[i * n + j].is_nan() && table.km[i * n + j] != d;
            if invalid || conflict {
                return Err(FlowError::InvalidDistance { a, b, km: d });
            }
            table.km[i * n + j] = d;
            table.km[j * n + i] = d;
        }
        Ok(table)
    }

    pub fn get(&self, a: &NodeId, b: &NodeId) -> Option<f64> {
        let (i, j) = (*self.index.get(a)?, *self.index.get(b)?);
        let d = self.km[i * self.ids.len() + j];
        (!d.is_nan()).then_some(d)
    }

    /// Like [`get`](Self::get) but missing pairs are an error.
    pub fn require(&self, a: &NodeId, b: &NodeId) -> Result<f64, FlowError> {
        self.get(a, b).ok_or_else(|| FlowError::MissingDistance(a.clone(), b.clone()))
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Writes every known off-diagonal pair as `origin,destination,km`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FlowError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(DISTANCE_HEADER)?;
        let n = self.ids.len();
        for i in 0..n {
            for j in 0..n {
                let d = self.km[i * n + j];
                if i != j && !d.is_nan() {
                    wtr.write_record([self.ids[i].as_str(), self.ids[j].as_str(), &d.to_string()])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FlowError> {
        let mut entries = Vec::new();
        for (line, [a, b, d]) in read_triples(reader, &DISTANCE_HEADER)? {
            let d: f64 = d.parse().map_err(|_| FlowError::Parse { line, message: format!("bad km `{d}`") })?;
            entries.push((NodeId::new(a), NodeId::new(b), d));
        }
        Self::from_entries(entries)
    }
}
