//! Great-circle geometry, airport-basin tessellation and point assignment.
//!
//! Coordinates are decimal degrees on a spherical Earth of radius
//! [`EARTH_RADIUS_KM`]; distances are kilometers.

mod basins;
mod index;
mod regions;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::NodeId;

pub use basins::{
    assign_basin, merge_airports, read_airports, read_basins, write_basins, Basin, BasinSet,
    TessellationMode, DEFAULT_MERGE_THRESHOLD_KM,
};
pub use regions::{assign_region, read_regions, write_regions, Region, RegionPolygons};

/// Mean Earth radius used by every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("invalid latitude {0}; expected finite degrees in [-90, 90]")]
    InvalidLatitude(f64),
    #[error("invalid longitude {0}; expected finite degrees in [-180, 180]")]
    InvalidLongitude(f64),
    #[error("merge threshold must be finite and positive, got {0}")]
    InvalidThreshold(f64),
    #[error("duplicate identifier {0}")]
    DuplicateId(NodeId),
    #[error("airport {0} belongs to more than one basin")]
    DuplicateMember(NodeId),
    #[error("tessellation has no basins")]
    EmptyBasinSet,
    #[error("basin set is in polygon mode; nearest-point assignment needs a nearest-point tessellation")]
    NotNearestPoint,
    #[error("region {region}: {reason}")]
    InvalidRing { region: NodeId, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Validated geographic position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, GeoError> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidLatitude(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::InvalidLongitude(lon));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Position on the unit sphere. Chord length between two such vectors is
    /// monotone in great-circle distance.
    pub(crate) fn unit_vector(&self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }
}

/// Great-circle distance in kilometers (haversine formula).
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(GeoPoint::new(95.0, 0.0), Err(GeoError::InvalidLatitude(_))));
        assert!(matches!(GeoPoint::new(0.0, -180.5), Err(GeoError::InvalidLongitude(_))));
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
    }

    #[test]
    fn identical_points_are_zero_apart() {
        let p = pt(40.0, -75.0);
        assert_eq!(haversine_distance(&p, &p), 0.0);
    }

    #[test]
    fn symmetric() {
        let a = pt(40.7, -74.0);
        let b = pt(34.1, -118.2);
        assert_eq!(haversine_distance(&a, &b), haversine_distance(&b, &a));
    }

    #[test]
    fn one_degree_on_equator() {
        let expected = 2.0 * PI * EARTH_RADIUS_KM / 360.0;
        let d = haversine_distance(&pt(0.0, 0.0), &pt(0.0, 1.0));
        assert!((d - expected).abs() < 1e-9, "{d} vs {expected}");
        assert!((d - 111.195).abs() < 1e-3);
    }

    #[test]
    fn antipodes() {
        let d = haversine_distance(&pt(0.0, 0.0), &pt(0.0, 180.0));
        assert!((d - PI * EARTH_RADIUS_KM).abs() < 1e-6);
    }

    #[test]
    fn serde_validates() {
        let ok: GeoPoint = serde_json::from_str(r#"{"lat":1.0,"lon":2.0}"#).unwrap();
        assert_eq!(ok, pt(1.0, 2.0));
        assert!(serde_json::from_str::<GeoPoint>(r#"{"lat":91.0,"lon":2.0}"#).is_err());
    }
}
