//! CSV parsers for the four input datasets.
//!
//! Row-level problems never abort a parse: each bad row (or, for itineraries,
//! each bad ticket) becomes a [`Diagnostic`]. Only a missing or wrong header
//! is fatal. Every data row ends up either in a record or in a diagnostic.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::NodeId;

pub const TRACE_HEADER: [&str; 4] = ["user_id", "timestamp", "lat", "lon"];
pub const ITINERARY_HEADER: [&str; 6] =
    ["ticket_id", "passengers", "coupon_index", "origin", "destination", "trip_break"];
pub const COMMUTE_HEADER: [&str; 3] = ["home_region", "work_region", "workers"];
pub const POPULATION_HEADER: [&str; 2] = ["node_id", "population"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing or incorrect header; expected `{expected}`")]
    Header { expected: String },
    #[error("population of {node} must be finite and positive, got {value}")]
    InvalidPopulation { node: NodeId, value: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A rejected data row or ticket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based line number of the (first) offending row; the header is line 1.
    pub line: u64,
    /// Number of data rows this diagnostic accounts for.
    pub rows: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, line {}", self.message, self.line)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: T,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub user_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: u64,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coupon {
    pub origin: NodeId,
    pub destination: NodeId,
    /// The passenger genuinely stays at `destination` (not a stopover).
    pub trip_break: bool,
}

/// An air ticket: a continuous chain of coupons ending in a trip break.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Itinerary {
    ticket_id: String,
    passengers: u64,
    coupons: Vec<Coupon>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ItineraryError {
    #[error("itinerary has no coupons")]
    Empty,
    #[error("passenger count must be positive")]
    NoPassengers,
    #[error("discontinuous chain at coupon {0}")]
    Discontinuous(usize),
    #[error("itinerary does not end in trip break")]
    NoFinalTripBreak,
}

impl Itinerary {
    pub fn new(ticket_id: impl Into<String>, passengers: u64, coupons: Vec<Coupon>) -> Result<Self, ItineraryError> {
        if passengers == 0 {
            return Err(ItineraryError::NoPassengers);
        }
        let last = coupons.last().ok_or(ItineraryError::Empty)?;
        if !last.trip_break {
            return Err(ItineraryError::NoFinalTripBreak);
        }
        if let Some(k) = coupons.windows(2).position(|w| w[0].destination != w[1].origin) {
            return Err(ItineraryError::Discontinuous(k + 2));
        }
        Ok(Itinerary { ticket_id: ticket_id.into(), passengers, coupons })
    }

    pub fn ticket_id(&self) -> &str {
        &self.ticket_id
    }

    pub fn passengers(&self) -> u64 {
        self.passengers
    }

    pub fn coupons(&self) -> &[Coupon] {
        &self.coupons
    }

    /// Departure airport followed by every trip-break destination; stopovers
    /// are removed.
    pub fn destinations(&self) -> Vec<&NodeId> {
        std::iter::once(&self.coupons[0].origin)
            .chain(self.coupons.iter().filter(|c| c.trip_break).map(|c| &c.destination))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommuteRecord {
    pub home: NodeId,
    pub work: NodeId,
    pub workers: u64,
}

/// Population per node. All values are finite and strictly positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationTable {
    values: BTreeMap<NodeId, f64>,
}

impl PopulationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` to the node's population (cities aggregate into basins).
    pub fn add(&mut self, node: NodeId, value: f64) -> Result<(), IngestError> {
        if !value.is_finite() || value <= 0.0 {
            return Err(IngestError::InvalidPopulation { node, value });
        }
        *self.values.entry(node).or_insert(0.0) += value;
        Ok(())
    }

    pub fn get(&self, node: &NodeId) -> Option<f64> {
        self.values.get(node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, f64)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(NodeId, f64)> for PopulationTable {
    /// Panics on non-positive values; use [`PopulationTable::add`] for fallible input.
    fn from_iter<I: IntoIterator<Item = (NodeId, f64)>>(iter: I) -> Self {
        let mut table = PopulationTable::new();
        for (node, value) in iter {
            table.add(node, value).expect("population must be positive");
        }
        table
    }
}

// -- parsing ---------------------------------------------------------------

struct Row {
    line: u64,
    fields: Result<Vec<String>, String>,
}

/// Validates the header and returns the remaining data rows with their line
/// numbers. Undecodable rows are carried through as row errors.
fn data_rows<R: Read>(mut reader: R, header: &[&str]) -> Result<Vec<Row>, IngestError> {
    let mut text = Vec::new();
    reader.read_to_end(&mut text)?;
    // csv may report a record as starting on the terminator of the previous one
    let line_of = |byte: u64| {
        let mut at = byte as usize;
        while matches!(text.get(at), Some(b'\r' | b'\n')) {
            at += 1;
        }
        1 + text[..at].iter().filter(|&&b| b == b'\n').count() as u64
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_slice());
    let mut records = rdr.byte_records();
    let header_ok = match records.next() {
        Some(Ok(rec)) => {
            let found: Vec<String> = rec
                .iter()
                .map(|f| String::from_utf8_lossy(f).trim().trim_start_matches('\u{feff}').to_owned())
                .collect();
            found == header
        }
        _ => false,
    };
    if !header_ok {
        return Err(IngestError::Header { expected: header.join(",") });
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| line_of(p.byte()));
        let fields = rec
            .iter()
            .map(|f| std::str::from_utf8(f).map(|s| s.trim().to_owned()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| "invalid UTF-8".to_owned())
            .and_then(|fields| {
                if fields.len() == header.len() {
                    Ok(fields)
                } else {
                    Err(format!("expected {} fields, found {}", header.len(), fields.len()))
                }
            });
        rows.push(Row { line, fields });
    }
    Ok(rows)
}

fn diag(line: u64, message: impl Into<String>) -> Diagnostic {
    Diagnostic { line, rows: 1, message: message.into() }
}

fn number<T: std::str::FromStr>(field: &str, name: &str) -> Result<T, String> {
    field.parse::<T>().map_err(|_| format!("bad {name} `{field}`"))
}

fn trace_row(f: &[String]) -> Result<TraceRecord, String> {
    if f[0].is_empty() {
        return Err("empty user_id".into());
    }
    let timestamp: i64 = number(&f[1], "timestamp")?;
    if timestamp < 0 {
        return Err("negative timestamp".into());
    }
    let lat: f64 = number(&f[2], "lat")?;
    let lon: f64 = number(&f[3], "lon")?;
    if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
        return Err("lat out of range".into());
    }
    if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
        return Err("lon out of range".into());
    }
    let location = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
    Ok(TraceRecord { user_id: f[0].clone(), timestamp: timestamp as u64, location })
}

/// Parses `user_id,timestamp,lat,lon`.
pub fn parse_traces<R: Read>(reader: R) -> Result<Parsed<Vec<TraceRecord>>, IngestError> {
    let mut out = Parsed { records: Vec::new(), diagnostics: Vec::new() };
    for row in data_rows(reader, &TRACE_HEADER)? {
        match row.fields.and_then(|f| trace_row(&f)) {
            Ok(rec) => out.records.push(rec),
            Err(msg) => out.diagnostics.push(diag(row.line, msg)),
        }
    }
    Ok(out)
}

/// Ticket id, first line and coupon rows of the ticket being read.
type PendingTicket = (String, u64, Vec<Result<CouponRow, String>>);

struct CouponRow {
    passengers: u64,
    index: i64,
    coupon: Coupon,
}

fn coupon_row(f: &[String]) -> Result<CouponRow, String> {
    let passengers: i64 = number(&f[1], "passengers")?;
    if passengers <= 0 {
        return Err("passengers must be positive".into());
    }
    let index: i64 = number(&f[2], "coupon_index")?;
    if f[3].is_empty() || f[4].is_empty() {
        return Err("empty airport id".into());
    }
    let trip_break = match f[5].as_str() {
        "0" => false,
        "1" => true,
        other => return Err(format!("bad trip_break `{other}`, expected 0 or 1")),
    };
    Ok(CouponRow {
        passengers: passengers as u64,
        index,
        coupon: Coupon { origin: NodeId::new(f[3].as_str()), destination: NodeId::new(f[4].as_str()), trip_break },
    })
}

fn build_ticket(ticket: &str, rows: Vec<Result<CouponRow, String>>) -> Result<Itinerary, String> {
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    if rows.windows(2).any(|w| w[1].index <= w[0].index) {
        return Err("coupons not ordered by coupon_index".into());
    }
    let passengers = rows[0].passengers;
    if rows.iter().any(|r| r.passengers != passengers) {
        return Err("inconsistent passenger count".into());
    }
    let coupons = rows.into_iter().map(|r| r.coupon).collect();
    Itinerary::new(ticket, passengers, coupons).map_err(|e| match e {
        ItineraryError::Discontinuous(_) => "discontinuous chain".to_owned(),
        other => other.to_string(),
    })
}

/// Parses `ticket_id,passengers,coupon_index,origin,destination,trip_break`.
/// Rows of one ticket must be contiguous; an invalid ticket is reported as a
/// single diagnostic covering all its rows.
pub fn parse_itineraries<R: Read>(reader: R) -> Result<Parsed<Vec<Itinerary>>, IngestError> {
    let mut out = Parsed { records: Vec::new(), diagnostics: Vec::new() };
    let mut seen = HashSet::new();
    let mut flush = |ticket: String, line: u64, rows: Vec<Result<CouponRow, String>>, out: &mut Parsed<Vec<Itinerary>>| {
        let count = rows.len();
        let result = if !seen.insert(ticket.clone()) {
            Err("ticket rows not contiguous".to_owned())
        } else {
            build_ticket(&ticket, rows)
        };
        match result {
            Ok(it) => out.records.push(it),
            Err(message) => out.diagnostics.push(Diagnostic { line, rows: count, message }),
        }
    };

    let mut current: Option<PendingTicket> = None;
    for row in data_rows(reader, &ITINERARY_HEADER)? {
        let ticket = match &row.fields {
            Ok(f) => f[0].clone(),
            Err(_) => String::new(),
        };
        let parsed = row.fields.and_then(|f| coupon_row(&f));
        // Rows we could not even split go out on their own.
        if ticket.is_empty() {
            if let Some((t, l, rows)) = current.take() {
                flush(t, l, rows, &mut out);
            }
            let message = parsed.err().unwrap_or_else(|| "empty ticket_id".into());
            out.diagnostics.push(diag(row.line, message));
            continue;
        }
        match &mut current {
            Some((t, _, rows)) if *t == ticket => rows.push(parsed),
            _ => {
                if let Some((t, l, rows)) = current.take() {
                    flush(t, l, rows, &mut out);
                }
                current = Some((ticket, row.line, vec![parsed]));
            }
        }
    }
    if let Some((t, l, rows)) = current.take() {
        flush(t, l, rows, &mut out);
    }
    Ok(out)
}

/// Parses `home_region,work_region,workers`. Same-region rows are kept; the
/// flow builder drops them.
pub fn parse_commutes<R: Read>(reader: R) -> Result<Parsed<Vec<CommuteRecord>>, IngestError> {
    let mut out = Parsed { records: Vec::new(), diagnostics: Vec::new() };
    for row in data_rows(reader, &COMMUTE_HEADER)? {
        let parsed = row.fields.and_then(|f| {
            if f[0].is_empty() || f[1].is_empty() {
                return Err("empty region id".to_owned());
            }
            let workers: i64 = number(&f[2], "workers")?;
            if workers <= 0 {
                return Err("workers must be positive".to_owned());
            }
            Ok(CommuteRecord { home: NodeId::new(f[0].as_str()), work: NodeId::new(f[1].as_str()), workers: workers as u64 })
        });
        match parsed {
            Ok(rec) => out.records.push(rec),
            Err(msg) => out.diagnostics.push(diag(row.line, msg)),
        }
    }
    Ok(out)
}

/// Parses `node_id,population`; repeated node ids are summed.
pub fn parse_population<R: Read>(reader: R) -> Result<Parsed<PopulationTable>, IngestError> {
    let mut out = Parsed { records: PopulationTable::new(), diagnostics: Vec::new() };
    for row in data_rows(reader, &POPULATION_HEADER)? {
        let parsed = row.fields.and_then(|f| {
            if f[0].is_empty() {
                return Err("empty node_id".to_owned());
            }
            let value: f64 = number(&f[1], "population")?;
            if !value.is_finite() || value <= 0.0 {
                return Err("population must be positive".to_owned());
            }
            Ok((NodeId::new(f[0].as_str()), value))
        });
        match parsed {
            Ok((node, value)) => out.records.add(node, value)?,
            Err(msg) => out.diagnostics.push(diag(row.line, msg)),
        }
    }
    Ok(out)
}

// -- writing ---------------------------------------------------------------

pub fn write_traces<W: Write>(records: &[TraceRecord], writer: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRACE_HEADER)?;
    for r in records {
        wtr.write_record([
            r.user_id.clone(),
            r.timestamp.to_string(),
            r.location.lat().to_string(),
            r.location.lon().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_itineraries<W: Write>(itineraries: &[Itinerary], writer: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ITINERARY_HEADER)?;
    for it in itineraries {
        for (k, c) in it.coupons.iter().enumerate() {
            wtr.write_record([
                it.ticket_id.clone(),
                it.passengers.to_string(),
                (k + 1).to_string(),
                c.origin.to_string(),
                c.destination.to_string(),
                if c.trip_break { "1" } else { "0" }.to_owned(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_commutes<W: Write>(records: &[CommuteRecord], writer: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(COMMUTE_HEADER)?;
    for r in records {
        wtr.write_record([r.home.as_str(), r.work.as_str(), &r.workers.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_population<W: Write>(table: &PopulationTable, writer: W) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(POPULATION_HEADER)?;
    for (node, value) in table.iter() {
        wtr.write_record([node.as_str(), &value.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
