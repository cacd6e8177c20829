use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use super::{FeedError, Mode, Stop, TransferRow, TransitNetwork, TransitRoute, TripRow};
use crate::time::{parse_hms, Seconds};

/// Files making up a feed directory; the last two are optional.
pub const FEED_FILES: [&str; 6] =
    ["stops.txt", "routes.txt", "trips.txt", "stop_times.txt", "transfers.txt", "vehicles.txt"];

/// A CSV table held in memory with the 1-based file line of each row.
pub(crate) struct Table {
    pub file: String,
    columns: HashMap<String, usize>,
    pub rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    pub fn read(path: &Path, required: &[&str]) -> Result<Table, FeedError> {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        if !path.is_file() {
            return Err(FeedError::MissingFile(path.to_path_buf()));
        }
        let csv_err = |source| FeedError::Csv { file: file.clone(), source };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let headers = reader.headers().map_err(csv_err)?.clone();
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        for col in required {
            if !columns.contains_key(*col) {
                return Err(FeedError::MissingColumn { file: file.clone(), column: col.to_string() });
            }
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Table { file, columns, rows })
    }

    /// Field value, or "" when the column is absent.
    pub fn get<'r>(&self, row: &'r csv::StringRecord, column: &str) -> &'r str {
        self.columns.get(column).and_then(|&i| row.get(i)).unwrap_or("")
    }

    pub fn invalid(&self, line: usize, message: impl Into<String>) -> FeedError {
        FeedError::InvalidValue { file: self.file.clone(), line, message: message.into() }
    }

    pub fn reference(&self, line: usize, key: &str) -> FeedError {
        FeedError::Reference { file: self.file.clone(), line, key: key.to_string() }
    }

    pub fn duplicate(&self, line: usize, key: &str) -> FeedError {
        FeedError::Duplicate { file: self.file.clone(), line, key: key.to_string() }
    }
}

/// Reads and validates a feed directory.
///
/// `stops.txt`, `routes.txt`, `trips.txt` and `stop_times.txt` are required.
/// `transfers.txt` (from_stop_id,to_stop_id,min_transfer_time) and
/// `vehicles.txt` (trip_id,capacity) are optional; trips without a capacity
/// row get their mode's default capacity.
pub fn parse_transit_feed(dir: impl AsRef<Path>) -> Result<TransitNetwork, FeedError> {
    let dir = dir.as_ref();
    let path = |name: &str| -> PathBuf { dir.join(name) };

    let stops_tab = Table::read(&path("stops.txt"), &["stop_id", "stop_lat", "stop_lon"])?;
    let mut stops = Vec::with_capacity(stops_tab.rows.len());
    let mut stop_ids = HashSet::new();
    for (line, row) in &stops_tab.rows {
        let id = stops_tab.get(row, "stop_id");
        if id.is_empty() {
            return Err(stops_tab.invalid(*line, "empty stop_id"));
        }
        if !stop_ids.insert(id.to_string()) {
            return Err(stops_tab.duplicate(*line, id));
        }
        let coord = |col: &str, limit: f64| -> Result<f64, FeedError> {
            let raw = stops_tab.get(row, col);
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() && v.abs() <= limit => Ok(v),
                _ => Err(stops_tab.invalid(*line, format!("bad {col} `{raw}`"))),
            }
        };
        stops.push(Stop {
            id: id.to_string(),
            name: stops_tab.get(row, "stop_name").to_string(),
            lat: coord("stop_lat", 90.0)?,
            lon: coord("stop_lon", 180.0)?,
        });
    }

    let routes_tab = Table::read(&path("routes.txt"), &["route_id", "route_type"])?;
    let mut routes = Vec::with_capacity(routes_tab.rows.len());
    let mut route_modes = HashMap::new();
    for (line, row) in &routes_tab.rows {
        let id = routes_tab.get(row, "route_id");
        let raw = routes_tab.get(row, "route_type");
        let mode = raw
            .parse::<u32>()
            .ok()
            .and_then(Mode::from_route_type)
            .ok_or_else(|| routes_tab.invalid(*line, format!("unsupported route_type `{raw}`")))?;
        if route_modes.insert(id.to_string(), mode).is_some() {
            return Err(routes_tab.duplicate(*line, id));
        }
        routes.push(TransitRoute { id: id.to_string(), mode, agency: routes_tab.get(row, "agency_id").to_string() });
    }

    let trips_tab = Table::read(&path("trips.txt"), &["route_id", "trip_id"])?;
    // trip_id -> (line, route_id, mode)
    let mut trip_meta: BTreeMap<String, (usize, String, Mode)> = BTreeMap::new();
    for (line, row) in &trips_tab.rows {
        let id = trips_tab.get(row, "trip_id");
        let route_id = trips_tab.get(row, "route_id");
        let mode = *route_modes.get(route_id).ok_or_else(|| trips_tab.reference(*line, route_id))?;
        if trip_meta.insert(id.to_string(), (*line, route_id.to_string(), mode)).is_some() {
            return Err(trips_tab.duplicate(*line, id));
        }
    }

    let mut capacities: HashMap<String, u32> = HashMap::new();
    let vehicles_path = path("vehicles.txt");
    if vehicles_path.exists() {
        let tab = Table::read(&vehicles_path, &["trip_id", "capacity"])?;
        for (line, row) in &tab.rows {
            let id = tab.get(row, "trip_id");
            if !trip_meta.contains_key(id) {
                return Err(tab.reference(*line, id));
            }
            let raw = tab.get(row, "capacity");
            let cap = match raw.parse::<u32>() {
                Ok(c) if c >= 1 => c,
                _ => return Err(tab.invalid(*line, format!("capacity must be a positive integer, got `{raw}`"))),
            };
            if capacities.insert(id.to_string(), cap).is_some() {
                return Err(tab.duplicate(*line, id));
            }
        }
    }

    let st_tab = Table::read(
        &path("stop_times.txt"),
        &["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"],
    )?;
    // trip_id -> rows (sequence, line, stop_id, arrival, departure)
    let mut grouped: HashMap<&str, Vec<(u32, usize, String, Seconds, Seconds)>> = HashMap::new();
    for (line, row) in &st_tab.rows {
        let trip_id = st_tab.get(row, "trip_id");
        let Some((key, _)) = trip_meta.get_key_value(trip_id) else {
            return Err(st_tab.reference(*line, trip_id));
        };
        let stop_id = st_tab.get(row, "stop_id");
        if !stop_ids.contains(stop_id) {
            return Err(st_tab.reference(*line, stop_id));
        }
        let seq_raw = st_tab.get(row, "stop_sequence");
        let seq: u32 = seq_raw.parse().map_err(|_| st_tab.invalid(*line, format!("bad stop_sequence `{seq_raw}`")))?;
        let time = |col: &str| -> Result<Option<Seconds>, FeedError> {
            let raw = st_tab.get(row, col);
            if raw.is_empty() {
                return Ok(None);
            }
            parse_hms(raw).map(Some).map_err(|e| st_tab.invalid(*line, e.to_string()))
        };
        let (arrival, departure) = match (time("arrival_time")?, time("departure_time")?) {
            (Some(a), Some(d)) => (a, d),
            (Some(a), None) => (a, a),
            (None, Some(d)) => (d, d),
            (None, None) => return Err(st_tab.invalid(*line, "stop time without arrival or departure")),
        };
        grouped.entry(key.as_str()).or_default().push((seq, *line, stop_id.to_string(), arrival, departure));
    }

    let mut trips = Vec::with_capacity(trip_meta.len());
    for (trip_id, (line, route_id, mode)) in &trip_meta {
        let Some(mut rows) = grouped.remove(trip_id.as_str()) else {
            return Err(trips_tab.invalid(*line, format!("trip `{trip_id}` has no stop times")));
        };
        rows.sort_by_key(|r| r.0);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(st_tab.duplicate(w[1].1, &format!("{trip_id}#{}", w[1].0)));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            let back_in_time = r.3 > r.4 || (i > 0 && rows[i - 1].4 > r.3);
            if back_in_time {
                return Err(FeedError::Order { file: st_tab.file.clone(), line: r.1, trip_id: trip_id.clone() });
            }
        }
        trips.push(TripRow {
            id: trip_id.clone(),
            route_id: route_id.clone(),
            capacity: capacities.get(trip_id).copied().unwrap_or_else(|| mode.default_capacity()),
            stop_times: rows.into_iter().map(|(_, _, s, a, d)| (s, a, d)).collect(),
        });
    }

    let mut transfers = Vec::new();
    let transfers_path = path("transfers.txt");
    if transfers_path.exists() {
        let tab = Table::read(&transfers_path, &["from_stop_id", "to_stop_id"])?;
        for (line, row) in &tab.rows {
            let from = tab.get(row, "from_stop_id");
            let to = tab.get(row, "to_stop_id");
            for id in [from, to] {
                if !stop_ids.contains(id) {
                    return Err(tab.reference(*line, id));
                }
            }
            // Same-stop rows only carry a minimum transfer time in GTFS; they are not walk links.
            if from == to {
                continue;
            }
            let raw = tab.get(row, "min_transfer_time");
            let walk_time = if raw.is_empty() {
                0
            } else {
                raw.parse().map_err(|_| tab.invalid(*line, format!("bad min_transfer_time `{raw}`")))?
            };
            transfers.push(TransferRow { from_stop: from.to_string(), to_stop: to.to_string(), walk_time });
        }
    }

    TransitNetwork::from_rows(stops, routes, trips, transfers)
}
