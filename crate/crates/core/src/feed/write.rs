use std::fs;
use std::path::Path;

use super::{FeedError, TransitNetwork};
use crate::time::format_hms;

fn writer(dir: &Path, name: &str, header: &[&str]) -> Result<csv::Writer<fs::File>, FeedError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|source| FeedError::Csv { file: name.into(), source })?;
    w.write_record(header).map_err(|source| FeedError::Csv { file: name.into(), source })?;
    Ok(w)
}

/// Writes the network in canonical form: rows sorted by key, times as
/// `HH:MM:SS`, one capacity row per trip. Parsing the output and writing it
/// again reproduces the same bytes.
pub fn write_transit_feed(net: &TransitNetwork, dir: impl AsRef<Path>) -> Result<(), FeedError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| FeedError::Io { path: dir.to_path_buf(), source })?;
    let csv_err = |file: &str| {
        let file = file.to_string();
        move |source| FeedError::Csv { file: file.clone(), source }
    };

    let mut w = writer(dir, "stops.txt", &["stop_id", "stop_name", "stop_lat", "stop_lon"])?;
    for s in net.stops() {
        w.write_record([s.id.as_str(), s.name.as_str(), &s.lat.to_string(), &s.lon.to_string()])
            .map_err(csv_err("stops.txt"))?;
    }
    w.flush().map_err(|source| FeedError::Io { path: dir.join("stops.txt"), source })?;

    let mut w = writer(dir, "routes.txt", &["route_id", "agency_id", "route_type"])?;
    for r in net.routes() {
        w.write_record([r.id.as_str(), r.agency.as_str(), &r.mode.route_type().to_string()])
            .map_err(csv_err("routes.txt"))?;
    }
    w.flush().map_err(|source| FeedError::Io { path: dir.join("routes.txt"), source })?;

    let mut w = writer(dir, "trips.txt", &["route_id", "trip_id"])?;
    for t in net.trips() {
        w.write_record([net.route(t.route).id.as_str(), t.id.as_str()]).map_err(csv_err("trips.txt"))?;
    }
    w.flush().map_err(|source| FeedError::Io { path: dir.join("trips.txt"), source })?;

    let mut w = writer(
        dir,
        "stop_times.txt",
        &["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"],
    )?;
    for t in net.trips() {
        for (i, st) in t.stop_times.iter().enumerate() {
            w.write_record([
                t.id.as_str(),
                &format_hms(st.arrival),
                &format_hms(st.departure),
                net.stop(st.stop).id.as_str(),
                &(i + 1).to_string(),
            ])
            .map_err(csv_err("stop_times.txt"))?;
        }
    }
    w.flush().map_err(|source| FeedError::Io { path: dir.join("stop_times.txt"), source })?;

    let mut w = writer(dir, "transfers.txt", &["from_stop_id", "to_stop_id", "min_transfer_time"])?;
    for l in net.transfers() {
        w.write_record([net.stop(l.from).id.as_str(), net.stop(l.to).id.as_str(), &l.walk_time.to_string()])
            .map_err(csv_err("transfers.txt"))?;
    }
    w.flush().map_err(|source| FeedError::Io { path: dir.join("transfers.txt"), source })?;

    let mut w = writer(dir, "vehicles.txt", &["trip_id", "capacity"])?;
    for t in net.trips() {
        w.write_record([t.id.as_str(), &t.capacity.to_string()]).map_err(csv_err("vehicles.txt"))?;
    }
    w.flush().map_err(|source| FeedError::Io { path: dir.join("vehicles.txt"), source })?;
    Ok(())
}
