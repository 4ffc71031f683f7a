use std::collections::BTreeMap;

use super::FlowMatrix;
use crate::geo::GeoPoint;
use crate::ingest::{CommuteRecord, Itinerary, TraceRecord};
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFlows {
    pub matrix: FlowMatrix,
    /// Trace points the assignment function could not place.
    pub dropped_points: usize,
}

/// Counts one trip each time a user's next picture lands in a different
/// node than the previous one.
///
/// Records are ordered per user by timestamp; equal timestamps keep their
/// input order. Points that `assign` rejects are removed before pairing.
pub fn build_trace_flows<F>(traces: &[TraceRecord], mut assign: F) -> TraceFlows
where
    F: FnMut(&GeoPoint) -> Option<NodeId>,
{
    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, rec) in traces.iter().enumerate() {
        by_user.entry(rec.user_id.as_str()).or_default().push(i);
    }

    let mut matrix = FlowMatrix::new();
    let mut dropped_points = 0;
    for (_, mut idx) in by_user {
        idx.sort_by_key(|&i| traces[i].timestamp);
        let mut previous: Option<NodeId> = None;
        for i in idx {
            let Some(node) = assign(&traces[i].location) else {
                dropped_points += 1;
                continue;
            };
            matrix.add_node(node.clone());
            if let Some(prev) = previous.take() {
                if prev != node {
                    matrix.add(prev, node.clone(), 1.0).expect("distinct nodes, unit weight");
                }
            }
            previous = Some(node);
        }
    }
    TraceFlows { matrix, dropped_points }
}

/// Air-travel flows between consecutive trip breaks of each itinerary,
/// weighted by the ticket's passenger count. Stopovers never appear.
pub fn build_air_truth(itineraries: &[Itinerary]) -> FlowMatrix {
    let mut matrix = FlowMatrix::new();
    for it in itineraries {
        let stops = it.destinations();
        for &node in &stops {
            matrix.add_node(node.clone());
        }
        for pair in stops.windows(2) {
            if pair[0] != pair[1] {
                matrix
                    .add(pair[0].clone(), pair[1].clone(), it.passengers() as f64)
                    .expect("distinct nodes, positive weight");
            }
        }
    }
    matrix
}

/// Workers summed per (home, work) pair; people working in their home
/// region are not flows.
pub fn build_commute_truth(records: &[CommuteRecord]) -> FlowMatrix {
    let mut matrix = FlowMatrix::new();
    for r in records {
        matrix.add_node(r.home.clone());
        matrix.add_node(r.work.clone());
        if r.home != r.work {
            matrix
                .add(r.home.clone(), r.work.clone(), r.workers as f64)
                .expect("distinct nodes, positive weight");
        }
    }
    matrix
}
