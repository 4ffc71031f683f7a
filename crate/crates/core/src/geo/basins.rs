use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::index::PointIndex;
use super::{haversine_distance, GeoError, GeoPoint};
use crate::NodeId;

/// Airports closer than this are served by one basin.
pub const DEFAULT_MERGE_THRESHOLD_KM: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TessellationMode {
    /// Each point belongs to the basin with the closest representative.
    NearestPoint,
    /// Each point belongs to the polygon region containing it.
    Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basin {
    pub id: NodeId,
    pub representative: GeoPoint,
    pub members: Vec<NodeId>,
}

/// Partition of space into flow nodes. Basins are kept sorted by id.
#[derive(Debug, Clone)]
pub struct BasinSet {
    basins: Vec<Basin>,
    mode: TessellationMode,
    member_of: BTreeMap<NodeId, usize>,
    index: PointIndex,
}

impl BasinSet {
    pub fn new(mut basins: Vec<Basin>, mode: TessellationMode) -> Result<Self, GeoError> {
        basins.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in basins.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(GeoError::DuplicateId(pair[0].id.clone()));
            }
        }
        let mut member_of = BTreeMap::new();
        for (i, basin) in basins.iter().enumerate() {
            for m in &basin.members {
                if member_of.insert(m.clone(), i).is_some() {
                    return Err(GeoError::DuplicateMember(m.clone()));
                }
            }
        }
        let index = PointIndex::build(basins.iter().map(|b| b.representative.unit_vector()));
        Ok(BasinSet { basins, mode, member_of, index })
    }

    pub fn basins(&self) -> &[Basin] {
        &self.basins
    }

    pub fn mode(&self) -> TessellationMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.basins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basins.is_empty()
    }

    pub fn get(&self, id: &NodeId) -> Option<&Basin> {
        self.basins
            .binary_search_by(|b| b.id.cmp(id))
            .ok()
            .map(|i| &self.basins[i])
    }

    /// Basin that absorbed the given airport.
    pub fn basin_of_member(&self, member: &NodeId) -> Option<&NodeId> {
        self.member_of.get(member).map(|&i| &self.basins[i].id)
    }

    pub fn representatives(&self) -> BTreeMap<NodeId, GeoPoint> {
        self.basins
            .iter()
            .map(|b| (b.id.clone(), b.representative))
            .collect()
    }

    /// Nearest-basin lookup; see [`assign_basin`].
    pub fn assign(&self, p: &GeoPoint) -> Result<&NodeId, GeoError> {
        if self.mode != TessellationMode::NearestPoint {
            return Err(GeoError::NotNearestPoint);
        }
        let q = p.unit_vector();
        let best = self.index.nearest_chord2(&q).ok_or(GeoError::EmptyBasinSet)?;
        // The k-d tree works in chord space; widen slightly so that the exact
        // haversine comparison below sees every basin that could tie.
        let mut candidates = Vec::new();
        self.index.within(&q, best * (1.0 + 1e-9) + 1e-12, &mut candidates);
        let winner = candidates
            .into_iter()
            .map(|i| (haversine_distance(p, &self.basins[i].representative), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, i)| i)
            .ok_or(GeoError::EmptyBasinSet)?;
        Ok(&self.basins[winner].id)
    }
}

/// Id of the basin whose representative is closest to `p`. Ties go to the
/// lexicographically smallest basin id.
pub fn assign_basin(p: &GeoPoint, basins: &BasinSet) -> Result<NodeId, GeoError> {
    basins.assign(p).cloned()
}

/// Groups airports into basins: connected components of the graph joining
/// airports less than `threshold_km` apart.
///
/// A basin is named after its lexicographically smallest member and placed at
/// the arithmetic mean of its members' coordinates.
pub fn merge_airports(airports: &[(NodeId, GeoPoint)], threshold_km: f64) -> Result<BasinSet, GeoError> {
    if !threshold_km.is_finite() || threshold_km <= 0.0 {
        return Err(GeoError::InvalidThreshold(threshold_km));
    }
    let mut sorted: Vec<&(NodeId, GeoPoint)> = airports.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in sorted.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(GeoError::DuplicateId(pair[0].0.clone()));
        }
    }

    let n = sorted.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if haversine_distance(&sorted[i].1, &sorted[j].1) < threshold_km {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    // Members are visited in id order, so sums (and the basin name) do not
    // depend on the input order.
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(i);
    }
    let basins = components
        .into_values()
        .map(|members| {
            let count = members.len() as f64;
            let lat = members.iter().map(|&i| sorted[i].1.lat()).sum::<f64>() / count;
            let lon = members.iter().map(|&i| sorted[i].1.lon()).sum::<f64>() / count;
            Ok(Basin {
                id: sorted[members[0]].0.clone(),
                representative: GeoPoint::new(lat, lon)?,
                members: members.iter().map(|&i| sorted[i].0.clone()).collect(),
            })
        })
        .collect::<Result<Vec<_>, GeoError>>()?;
    BasinSet::new(basins, TessellationMode::NearestPoint)
}

fn parse_coord(field: Option<&str>, what: &str, line: u64) -> Result<f64, GeoError> {
    field
        .and_then(|s| s.trim().parse::<f64>().ok())
        .ok_or_else(|| GeoError::Parse { line, message: format!("bad {what}") })
}

fn check_header(record: Option<csv::StringRecord>, expected: &[&str]) -> Result<(), GeoError> {
    let found: Vec<String> = record
        .map(|r| r.iter().map(|f| f.trim().to_owned()).collect())
        .unwrap_or_default();
    if found != expected {
        return Err(GeoError::Parse {
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    Ok(())
}

/// Reads an airport list with header `airport_id,lat,lon`.
pub fn read_airports<R: Read>(reader: R) -> Result<Vec<(NodeId, GeoPoint)>, GeoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    check_header(records.next().transpose()?, &["airport_id", "lat", "lon"])?;
    let mut airports = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(GeoError::Parse { line, message: "expected 3 fields".into() });
        }
        let lat = parse_coord(record.get(1), "lat", line)?;
        let lon = parse_coord(record.get(2), "lon", line)?;
        let point = GeoPoint::new(lat, lon).map_err(|e| GeoError::Parse { line, message: e.to_string() })?;
        airports.push((NodeId::new(record[0].trim()), point));
    }
    Ok(airports)
}

/// Writes `basin_id,lat,lon,members` with members joined by `;`.
pub fn write_basins<W: Write>(basins: &BasinSet, writer: W) -> Result<(), GeoError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["basin_id", "lat", "lon", "members"])?;
    for b in basins.basins() {
        let members: Vec<&str> = b.members.iter().map(NodeId::as_str).collect();
        wtr.write_record([
            b.id.as_str(),
            &b.representative.lat().to_string(),
            &b.representative.lon().to_string(),
            &members.join(";"),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_basins<R: Read>(reader: R, mode: TessellationMode) -> Result<BasinSet, GeoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    check_header(records.next().transpose()?, &["basin_id", "lat", "lon", "members"])?;
    let mut basins = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(GeoError::Parse { line, message: "expected 4 fields".into() });
        }
        let lat = parse_coord(record.get(1), "lat", line)?;
        let lon = parse_coord(record.get(2), "lon", line)?;
        let representative =
            GeoPoint::new(lat, lon).map_err(|e| GeoError::Parse { line, message: e.to_string() })?;
        let members = record[3]
            .split(';')
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .map(NodeId::from)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        basins.push(Basin { id: NodeId::new(record[0].trim()), representative, members });
    }
    BasinSet::new(basins, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn airport(id: &str, lat: f64, lon: f64) -> (NodeId, GeoPoint) {
        (NodeId::from(id), GeoPoint::new(lat, lon).unwrap())
    }

    // Degrees of latitude spanning `km` along a meridian.
    fn dlat(km: f64) -> f64 {
        km / (std::f64::consts::PI * super::super::EARTH_RADIUS_KM / 180.0)
    }

    #[test]
    fn close_pair_merges() {
        let set = merge_airports(
            &[airport("JFK", 40.0, -75.0), airport("LGA", 40.0 + dlat(10.0), -75.0)],
            30.0,
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.basins()[0].members.len(), 2);
        assert_eq!(set.basins()[0].id, NodeId::from("JFK"));
    }

    #[test]
    fn chain_merges_transitively() {
        let set = merge_airports(
            &[
                airport("A", 40.0, -100.0),
                airport("B", 40.0 + dlat(25.0), -100.0),
                airport("C", 40.0 + dlat(50.0), -100.0),
            ],
            30.0,
        )
        .unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.basins()[0].members, vec!["A".into(), "B".into(), "C".into()] as Vec<NodeId>);
    }

    #[test]
    fn singleton_keeps_coordinates() {
        let a = airport("SFO", 37.62, -122.38);
        let set = merge_airports(std::slice::from_ref(&a), 30.0).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.basins()[0].representative, a.1);
    }

    #[test]
    fn empty_list_gives_empty_set() {
        let set = merge_airports(&[], 30.0).unwrap();
        assert!(set.is_empty());
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        assert!(matches!(assign_basin(&p, &set), Err(GeoError::EmptyBasinSet)));
    }

    #[test]
    fn duplicate_airports_rejected() {
        let err = merge_airports(&[airport("A", 1.0, 1.0), airport("A", 2.0, 2.0)], 30.0);
        assert!(matches!(err, Err(GeoError::DuplicateId(_))));
        assert!(matches!(merge_airports(&[], 0.0), Err(GeoError::InvalidThreshold(_))));
    }

    #[test]
    fn assigns_strict_minimum_and_coincident_point() {
        let set = merge_airports(
            &[airport("near", 40.0 + dlat(10.0), -90.0), airport("far", 40.0 + dlat(200.0), -90.0)],
            30.0,
        )
        .unwrap();
        let p = GeoPoint::new(40.0, -90.0).unwrap();
        assert_eq!(assign_basin(&p, &set).unwrap(), NodeId::from("near"));
        let rep = set.get(&"far".into()).unwrap().representative;
        assert_eq!(assign_basin(&rep, &set).unwrap(), NodeId::from("far"));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let set = BasinSet::new(
            vec![
                Basin { id: "b".into(), representative: GeoPoint::new(1.0, 0.0).unwrap(), members: vec![] },
                Basin { id: "a".into(), representative: GeoPoint::new(-1.0, 0.0).unwrap(), members: vec![] },
            ],
            TessellationMode::NearestPoint,
        )
        .unwrap();
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(assign_basin(&p, &set).unwrap(), NodeId::from("a"));
    }

    #[test]
    fn polygon_mode_refuses_nearest_lookup() {
        let set = BasinSet::new(
            vec![Basin { id: "r".into(), representative: GeoPoint::new(1.0, 0.0).unwrap(), members: vec![] }],
            TessellationMode::Polygon,
        )
        .unwrap();
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        assert!(matches!(assign_basin(&p, &set), Err(GeoError::NotNearestPoint)));
    }

    #[test]
    fn basin_file_round_trip() {
        let set = merge_airports(
            &[airport("A", 40.0, -100.0), airport("B", 40.0 + dlat(5.0), -100.0), airport("C", 30.0, -90.0)],
            30.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_basins(&set, &mut buf).unwrap();
        let back = read_basins(buf.as_slice(), TessellationMode::NearestPoint).unwrap();
        assert_eq!(back.basins(), set.basins());
        assert_eq!(back.basin_of_member(&"B".into()), Some(&NodeId::from("A")));
    }

    #[test]
    fn airport_file_parsing() {
        let text = "airport_id,lat,lon\nJFK,40.64,-73.78\r\nLAX,33.94,-118.41\n";
        let airports = read_airports(text.as_bytes()).unwrap();
        assert_eq!(airports.len(), 2);
        assert!(read_airports("id,lat,lon\n".as_bytes()).is_err());
        let bad = read_airports("airport_id,lat,lon\nX,91,0\n".as_bytes());
        assert!(matches!(bad, Err(GeoError::Parse { line: 2, .. })));
    }
}
