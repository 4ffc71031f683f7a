use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{GeoError, GeoPoint};
use crate::NodeId;

/// A region made of one or more rings (no holes). Rings are stored open: the
/// closing edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: NodeId,
    rings: Vec<Vec<GeoPoint>>,
    bbox: [f64; 4], // min lon, min lat, max lon, max lat
}

impl Region {
    pub fn new(id: NodeId, rings: Vec<Vec<GeoPoint>>) -> Result<Self, GeoError> {
        if rings.is_empty() {
            return Err(GeoError::InvalidRing { region: id, reason: "no rings".into() });
        }
        let mut open = Vec::with_capacity(rings.len());
        for mut ring in rings {
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            if ring.len() < 3 {
                return Err(GeoError::InvalidRing {
                    region: id,
                    reason: format!("ring has {} distinct vertices, need at least 3", ring.len()),
                });
            }
            open.push(ring);
        }
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for v in open.iter().flatten() {
            bbox[0] = bbox[0].min(v.lon());
            bbox[1] = bbox[1].min(v.lat());
            bbox[2] = bbox[2].max(v.lon());
            bbox[3] = bbox[3].max(v.lat());
        }
        Ok(Region { id, rings: open, bbox })
    }

    pub fn rings(&self) -> &[Vec<GeoPoint>] {
        &self.rings
    }

    /// Even-odd test in lat/lon space. Points on an edge count as inside.
    pub fn contains(&self, p: &GeoPoint) -> bool {
        let (x, y) = (p.lon(), p.lat());
        if x < self.bbox[0] || x > self.bbox[2] || y < self.bbox[1] || y > self.bbox[3] {
            return false;
        }
        let mut inside = false;
        for ring in &self.rings {
            let n = ring.len();
            for i in 0..n {
                let (a, b) = (&ring[i], &ring[(i + 1) % n]);
                let (xa, ya, xb, yb) = (a.lon(), a.lat(), b.lon(), b.lat());
                if on_segment(x, y, xa, ya, xb, yb) {
                    return true;
                }
                if (ya > y) != (yb > y) && x < (xb - xa) * (y - ya) / (yb - ya) + xa {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Area-weighted centroid of the largest ring; falls back to the vertex
    /// mean for degenerate (zero-area) rings.
    pub fn centroid(&self) -> GeoPoint {
        let mut best: Option<(f64, f64, f64)> = None;
        for ring in &self.rings {
            let n = ring.len();
            let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let (p, q) = (&ring[i], &ring[(i + 1) % n]);
                let cross = p.lon() * q.lat() - q.lon() * p.lat();
                a2 += cross;
                cx += (p.lon() + q.lon()) * cross;
                cy += (p.lat() + q.lat()) * cross;
            }
            if a2 != 0.0 && best.is_none_or(|(area, _, _)| a2.abs() > area) {
                best = Some((a2.abs(), cx / (3.0 * a2), cy / (3.0 * a2)));
            }
        }
        let (lon, lat) = match best {
            Some((_, cx, cy)) => (cx, cy),
            None => {
                let verts: Vec<&GeoPoint> = self.rings.iter().flatten().collect();
                let n = verts.len() as f64;
                (
                    verts.iter().map(|v| v.lon()).sum::<f64>() / n,
                    verts.iter().map(|v| v.lat()).sum::<f64>() / n,
                )
            }
        };
        // A convex combination of valid vertices is itself valid.
        GeoPoint::new(lat.clamp(-90.0, 90.0), lon.clamp(-180.0, 180.0)).expect("centroid within range")
    }
}

fn on_segment(x: f64, y: f64, xa: f64, ya: f64, xb: f64, yb: f64) -> bool {
    if x < xa.min(xb) || x > xa.max(xb) || y < ya.min(yb) || y > ya.max(yb) {
        return false;
    }
    let cross = (xb - xa) * (y - ya) - (yb - ya) * (x - xa);
    let scale = (xb - xa).abs().max((yb - ya).abs()).max(1.0);
    cross.abs() <= 1e-12 * scale
}

/// Polygon regions sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegionPolygons {
    regions: Vec<Region>,
}

impl RegionPolygons {
    pub fn new(mut regions: Vec<Region>) -> Result<Self, GeoError> {
        regions.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in regions.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(GeoError::DuplicateId(pair[0].id.clone()));
            }
        }
        Ok(RegionPolygons { regions })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

/// Region containing `p`, if any. When several regions claim the point
/// (shared borders) the smallest region id wins.
pub fn assign_region(p: &GeoPoint, regions: &RegionPolygons) -> Option<NodeId> {
    regions.regions.iter().find(|r| r.contains(p)).map(|r| r.id.clone())
}

#[derive(Serialize, Deserialize)]
struct RegionLine {
    region_id: String,
    rings: Vec<Vec<[f64; 2]>>,
}

/// Reads one JSON object per line: `{"region_id": "...", "rings": [[[lon,lat], ...], ...]}`.
pub fn read_regions<R: BufRead>(reader: R) -> Result<RegionPolygons, GeoError> {
    let mut regions = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RegionLine = serde_json::from_str(&line)
            .map_err(|e| GeoError::Parse { line: lineno, message: e.to_string() })?;
        let rings = parsed
            .rings
            .iter()
            .map(|ring| ring.iter().map(|&[lon, lat]| GeoPoint::new(lat, lon)).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()
            .map_err(|e| GeoError::Parse { line: lineno, message: e.to_string() })?;
        regions.push(Region::new(NodeId::new(parsed.region_id), rings)?);
    }
    RegionPolygons::new(regions)
}

pub fn write_regions<W: Write>(regions: &RegionPolygons, mut writer: W) -> Result<(), GeoError> {
    for r in regions.regions() {
        let line = RegionLine {
            region_id: r.id.to_string(),
            rings: r
                .rings
                .iter()
                .map(|ring| ring.iter().map(|v| [v.lon(), v.lat()]).collect())
                .collect(),
        };
        let json = serde_json::to_string(&line).map_err(|e| GeoError::Parse { line: 0, message: e.to_string() })?;
        writeln!(writer, "{json}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, lon0: f64, lat0: f64, side: f64) -> Region {
        let v = |lat: f64, lon: f64| GeoPoint::new(lat, lon).unwrap();
        Region::new(
            id.into(),
            vec![vec![
                v(lat0, lon0),
                v(lat0, lon0 + side),
                v(lat0 + side, lon0 + side),
                v(lat0 + side, lon0),
                v(lat0, lon0),
            ]],
        )
        .unwrap()
    }

    #[test]
    fn centre_of_square_is_inside() {
        let regions = RegionPolygons::new(vec![square("c1", -100.0, 40.0, 1.0)]).unwrap();
        let p = GeoPoint::new(40.5, -99.5).unwrap();
        assert_eq!(assign_region(&p, &regions), Some("c1".into()));
        let c = regions.regions()[0].centroid();
        assert!((c.lat() - 40.5).abs() < 1e-12 && (c.lon() + 99.5).abs() < 1e-12);
    }

    #[test]
    fn outside_all_regions() {
        let regions = RegionPolygons::new(vec![square("c1", -100.0, 40.0, 1.0)]).unwrap();
        assert_eq!(assign_region(&GeoPoint::new(10.0, 10.0).unwrap(), &regions), None);
        assert_eq!(assign_region(&GeoPoint::new(40.5, -98.9).unwrap(), &regions), None);
    }

    #[test]
    fn shared_edge_goes_to_smallest_id() {
        let regions =
            RegionPolygons::new(vec![square("east", -99.0, 40.0, 1.0), square("west", -100.0, 40.0, 1.0)])
                .unwrap();
        let on_border = GeoPoint::new(40.5, -99.0).unwrap();
        assert_eq!(assign_region(&on_border, &regions), Some("east".into()));
        let vertex = GeoPoint::new(40.0, -100.0).unwrap();
        assert_eq!(assign_region(&vertex, &regions), Some("west".into()));
    }

    #[test]
    fn ring_validation() {
        let v = |lat: f64, lon: f64| GeoPoint::new(lat, lon).unwrap();
        let degenerate = Region::new("x".into(), vec![vec![v(0.0, 0.0), v(1.0, 1.0), v(0.0, 0.0)]]);
        assert!(matches!(degenerate, Err(GeoError::InvalidRing { .. })));
        assert!(Region::new("x".into(), vec![]).is_err());
    }

    #[test]
    fn multi_ring_region() {
        let a = square("m", -100.0, 40.0, 1.0);
        let b = square("m", -90.0, 30.0, 1.0);
        let both = Region::new("m".into(), vec![a.rings()[0].clone(), b.rings()[0].clone()]).unwrap();
        assert!(both.contains(&GeoPoint::new(30.5, -89.5).unwrap()));
        assert!(both.contains(&GeoPoint::new(40.5, -99.5).unwrap()));
        assert!(!both.contains(&GeoPoint::new(35.0, -95.0).unwrap()));
    }

    #[test]
    fn json_lines_round_trip() {
        let text = "{\"region_id\": \"c1\", \"rings\": [[[-100,40],[-99,40],[-99,41],[-100,41]]]}\n\n\
                    {\"region_id\": \"c0\", \"rings\": [[[-101,40],[-100,40],[-100,41]]]}\n";
        let regions = read_regions(text.as_bytes()).unwrap();
        assert_eq!(regions.len(), 2);
        assert_eq!(regions.regions()[0].id, NodeId::from("c0"));
        let mut out = Vec::new();
        write_regions(&regions, &mut out).unwrap();
        assert_eq!(read_regions(out.as_slice()).unwrap(), regions);
        let bad = read_regions("{\"region_id\": \"x\", \"rings\": [[[0,95],[1,1],[2,2]]]}".as_bytes());
        assert!(matches!(bad, Err(GeoError::Parse { line: 1, .. })));
    }
}
