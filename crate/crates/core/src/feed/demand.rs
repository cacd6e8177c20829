use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::time::{format_hms, parse_hms, Seconds};

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("demand file {} not found", .0.display())]
    MissingFile(PathBuf),
    #[error("demand line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("demand line {line}: origin and destination are both `{stop}`")]
    DegenerateTrip { line: usize, stop: String },
    #[error("demand: {0}")]
    Csv(#[from] csv::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One passenger trip: where from, where to, and when the passenger wants to
/// be there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripRequest {
    pub person_id: String,
    pub origin: String,
    pub destination: String,
    pub preferred_arrival: Seconds,
    /// Stable identity of the request (its data-row ordinal in the source
    /// file). Survives demand reduction, so random streams keyed on it stay
    /// aligned across scenarios.
    pub key: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DemandSet {
    requests: Vec<TripRequest>,
    person_count: usize,
}

impl DemandSet {
    /// Sorts by (preferred arrival, person id); equal keys keep input order.
    pub fn new(mut requests: Vec<TripRequest>) -> Self {
        requests.sort_by(|a, b| {
            a.preferred_arrival.cmp(&b.preferred_arrival).then_with(|| a.person_id.cmp(&b.person_id))
        });
        let person_count = requests.iter().map(|r| r.person_id.as_str()).collect::<BTreeSet<_>>().len();
        DemandSet { requests, person_count }
    }

    /// Builds requests keyed by their position in `rows`.
    pub fn from_rows<I, S>(rows: I) -> Self
    where
        I: IntoIterator<Item = (S, S, S, Seconds)>,
        S: Into<String>,
    {
        let requests = rows
            .into_iter()
            .enumerate()
            .map(|(i, (p, o, d, t))| TripRequest {
                person_id: p.into(),
                origin: o.into(),
                destination: d.into(),
                preferred_arrival: t,
                key: i as u64,
            })
            .collect();
        Self::new(requests)
    }

    pub fn requests(&self) -> &[TripRequest] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn person_count(&self) -> usize {
        self.person_count
    }

    /// Distinct person ids in ascending order.
    pub fn persons(&self) -> Vec<&str> {
        self.requests.iter().map(|r| r.person_id.as_str()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Keeps the requests of persons accepted by `keep`.
    pub fn retain_persons(&self, keep: impl Fn(&str) -> bool) -> DemandSet {
        Self::new(self.requests.iter().filter(|r| keep(&r.person_id)).cloned().collect())
    }
}

/// Parses demand CSV (`person_id,origin_stop,destination_stop,preferred_arrival`).
pub fn read_demand(reader: impl Read) -> Result<DemandSet, DemandError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim_start_matches('\u{feff}') == name).ok_or_else(|| DemandError::Parse {
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (pi, oi, di, ti) =
        (col("person_id")?, col("origin_stop")?, col("destination_stop")?, col("preferred_arrival")?);
    let mut requests = Vec::new();
    for (ordinal, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let (person, origin, destination) = (field(pi), field(oi), field(di));
        if person.is_empty() || origin.is_empty() || destination.is_empty() {
            return Err(DemandError::Parse { line, message: "empty field".into() });
        }
        let preferred_arrival =
            parse_hms(field(ti)).map_err(|e| DemandError::Parse { line, message: e.to_string() })?;
        if origin == destination {
            return Err(DemandError::DegenerateTrip { line, stop: origin.to_string() });
        }
        requests.push(TripRequest {
            person_id: person.to_string(),
            origin: origin.to_string(),
            destination: destination.to_string(),
            preferred_arrival,
            key: ordinal as u64,
        });
    }
    Ok(DemandSet::new(requests))
}

pub fn parse_demand(path: impl AsRef<Path>) -> Result<DemandSet, DemandError> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(DemandError::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|source| DemandError::Io { path: path.to_path_buf(), source })?;
    read_demand(std::io::BufReader::new(file))
}

/// Writes requests in their sorted order, so parsing the output re-keys
/// requests by that order.
pub fn write_demand(demand: &DemandSet, writer: impl Write) -> Result<(), DemandError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["person_id", "origin_stop", "destination_stop", "preferred_arrival"])?;
    for r in &demand.requests {
        w.write_record([&r.person_id, &r.origin, &r.destination, &format_hms(r.preferred_arrival)])?;
    }
    w.flush().map_err(|source| DemandError::Io { path: PathBuf::from("<demand>"), source })?;
    Ok(())
}
