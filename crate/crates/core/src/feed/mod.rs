//! Transit supply and travel demand: the in-memory model, CSV ingestion and
//! canonical serialization.

mod demand;
mod error;
mod parse;
mod validate;
mod write;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::time::Seconds;

pub use demand::{parse_demand, read_demand, write_demand, DemandError, DemandSet, TripRequest};
pub use error::FeedError;
pub use parse::{parse_transit_feed, FEED_FILES};
pub use validate::{validate_feed, ValidationReport};
pub use write::write_transit_feed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StopIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RouteIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripIdx(pub u32);

impl StopIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RouteIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TripIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Bus,
    LightRail,
    HeavyRail,
    Ferry,
}

impl Mode {
    /// Vehicle capacity used when a trip has no explicit capacity row.
    pub fn default_capacity(self) -> u32 {
        match self {
            Mode::Bus => 48,
            Mode::LightRail | Mode::HeavyRail => 200,
            Mode::Ferry => 300,
        }
    }

    /// Maps a GTFS `route_type` code.
    pub fn from_route_type(code: u32) -> Option<Mode> {
        match code {
            0 => Some(Mode::LightRail),
            1 | 2 => Some(Mode::HeavyRail),
            3 => Some(Mode::Bus),
            4 => Some(Mode::Ferry),
            _ => None,
        }
    }

    pub fn route_type(self) -> u32 {
        match self {
            Mode::LightRail => 0,
            Mode::HeavyRail => 2,
            Mode::Bus => 3,
            Mode::Ferry => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitRoute {
    pub id: String,
    pub mode: Mode,
    pub agency: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopTime {
    pub stop: StopIdx,
    pub arrival: Seconds,
    pub departure: Seconds,
}

/// One scheduled run of one vehicle along a route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VehicleTrip {
    pub id: String,
    pub route: RouteIdx,
    pub capacity: u32,
    pub stop_times: Vec<StopTime>,
}

impl VehicleTrip {
    /// Number of inter-stop segments.
    pub fn segment_count(&self) -> usize {
        self.stop_times.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferLink {
    pub from: StopIdx,
    pub to: StopIdx,
    pub walk_time: Seconds,
}

/// A trip calling at a stop, at a given position of its stop sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopVisit {
    pub trip: TripIdx,
    pub position: u32,
}

/// Immutable, fully indexed transit supply.
///
/// Entities are stored sorted by their string id, so two networks built from
/// the same rows are identical regardless of input row order.
#[derive(Debug, Clone)]
pub struct TransitNetwork {
    stops: Vec<Stop>,
    routes: Vec<TransitRoute>,
    trips: Vec<VehicleTrip>,
    transfers: Vec<TransferLink>,
    stop_lookup: HashMap<String, StopIdx>,
    route_lookup: HashMap<String, RouteIdx>,
    trip_lookup: HashMap<String, TripIdx>,
    /// stop -> visits ordered by (departure time, trip index)
    visits: Vec<Vec<StopVisit>>,
    /// stop -> visits ordered by (arrival time, trip index)
    arrivals: Vec<Vec<StopVisit>>,
    transfers_out: Vec<Vec<usize>>,
    transfers_in: Vec<Vec<usize>>,
}

/// Trip description with string keys, the form used to assemble a network.
#[derive(Debug, Clone, PartialEq)]
pub struct TripRow {
    pub id: String,
    pub route_id: String,
    pub capacity: u32,
    /// (stop_id, arrival, departure) in travel order.
    pub stop_times: Vec<(String, Seconds, Seconds)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub from_stop: String,
    pub to_stop: String,
    pub walk_time: Seconds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedCounts {
    pub stops: usize,
    pub routes: usize,
    pub trips: usize,
    pub stop_times: usize,
    pub transfers: usize,
}

impl TransitNetwork {
    /// Assembles and indexes a network, checking every invariant.
    ///
    /// Errors carry the pseudo-file name of the offending entity kind and the
    /// 1-based position of the row in the given slice.
    pub fn from_rows(
        mut stops: Vec<Stop>,
        mut routes: Vec<TransitRoute>,
        trips: Vec<TripRow>,
        transfers: Vec<TransferRow>,
    ) -> Result<Self, FeedError> {
        for (i, s) in stops.iter().enumerate() {
            if !(-90.0..=90.0).contains(&s.lat) || !(-180.0..=180.0).contains(&s.lon) {
                return Err(FeedError::InvalidValue {
                    file: "stops.txt".into(),
                    line: i + 2,
                    message: format!("coordinates of stop `{}` out of range", s.id),
                });
            }
        }
        stops.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = stops.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(FeedError::Duplicate { file: "stops.txt".into(), line: 0, key: w[0].id.clone() });
        }
        routes.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = routes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(FeedError::Duplicate { file: "routes.txt".into(), line: 0, key: w[0].id.clone() });
        }
        let stop_lookup: HashMap<String, StopIdx> =
            stops.iter().enumerate().map(|(i, s)| (s.id.clone(), StopIdx(i as u32))).collect();
        let route_lookup: HashMap<String, RouteIdx> =
            routes.iter().enumerate().map(|(i, r)| (r.id.clone(), RouteIdx(i as u32))).collect();

        let mut trip_rows = trips;
        trip_rows.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = trip_rows.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(FeedError::Duplicate { file: "trips.txt".into(), line: 0, key: w[0].id.clone() });
        }
        let mut trips = Vec::with_capacity(trip_rows.len());
        for row in trip_rows {
            let route = *route_lookup.get(&row.route_id).ok_or_else(|| FeedError::Reference {
                file: "trips.txt".into(),
                line: 0,
                key: row.route_id.clone(),
            })?;
            if row.capacity == 0 {
                return Err(FeedError::InvalidValue {
                    file: "vehicles.txt".into(),
                    line: 0,
                    message: format!("trip `{}` has zero capacity", row.id),
                });
            }
            if row.stop_times.is_empty() {
                return Err(FeedError::InvalidValue {
                    file: "stop_times.txt".into(),
                    line: 0,
                    message: format!("trip `{}` has no stop times", row.id),
                });
            }
            let mut stop_times = Vec::with_capacity(row.stop_times.len());
            for (stop_id, arrival, departure) in &row.stop_times {
                let stop = *stop_lookup.get(stop_id).ok_or_else(|| FeedError::Reference {
                    file: "stop_times.txt".into(),
                    line: 0,
                    key: stop_id.clone(),
                })?;
                stop_times.push(StopTime { stop, arrival: *arrival, departure: *departure });
            }
            if !is_time_ordered(&stop_times) {
                return Err(FeedError::Order { file: "stop_times.txt".into(), line: 0, trip_id: row.id });
            }
            trips.push(VehicleTrip { id: row.id, route, capacity: row.capacity, stop_times });
        }

        let mut links = Vec::with_capacity(transfers.len());
        for (i, t) in transfers.iter().enumerate() {
            let resolve = |id: &String| {
                stop_lookup.get(id).copied().ok_or_else(|| FeedError::Reference {
                    file: "transfers.txt".into(),
                    line: i + 2,
                    key: id.clone(),
                })
            };
            let from = resolve(&t.from_stop)?;
            let to = resolve(&t.to_stop)?;
            if from == to {
                return Err(FeedError::InvalidValue {
                    file: "transfers.txt".into(),
                    line: i + 2,
                    message: format!("transfer from `{}` to itself", t.from_stop),
                });
            }
            links.push(TransferLink { from, to, walk_time: t.walk_time });
        }
        links.sort_by_key(|l| (l.from, l.to, l.walk_time));
        links.dedup_by_key(|l| (l.from, l.to));

        Ok(Self::index(stops, routes, trips, links, stop_lookup, route_lookup))
    }

    fn index(
        stops: Vec<Stop>,
        routes: Vec<TransitRoute>,
        trips: Vec<VehicleTrip>,
        transfers: Vec<TransferLink>,
        stop_lookup: HashMap<String, StopIdx>,
        route_lookup: HashMap<String, RouteIdx>,
    ) -> Self {
        let trip_lookup = trips.iter().enumerate().map(|(i, t)| (t.id.clone(), TripIdx(i as u32))).collect();
        let mut visits = vec![Vec::new(); stops.len()];
        for (ti, trip) in trips.iter().enumerate() {
            for (pos, st) in trip.stop_times.iter().enumerate() {
                visits[st.stop.index()].push(StopVisit { trip: TripIdx(ti as u32), position: pos as u32 });
            }
        }
        for list in &mut visits {
            list.sort_by_key(|v| (trips[v.trip.index()].stop_times[v.position as usize].departure, v.trip, v.position));
        }
        let mut arrivals = visits.clone();
        for list in &mut arrivals {
            list.sort_by_key(|v| (trips[v.trip.index()].stop_times[v.position as usize].arrival, v.trip, v.position));
        }
        let mut transfers_out = vec![Vec::new(); stops.len()];
        let mut transfers_in = vec![Vec::new(); stops.len()];
        for (i, l) in transfers.iter().enumerate() {
            transfers_out[l.from.index()].push(i);
            transfers_in[l.to.index()].push(i);
        }
        TransitNetwork {
            stops,
            routes,
            trips,
            transfers,
            stop_lookup,
            route_lookup,
            trip_lookup,
            visits,
            arrivals,
            transfers_out,
            transfers_in,
        }
    }

    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn routes(&self) -> &[TransitRoute] {
        &self.routes
    }

    pub fn trips(&self) -> &[VehicleTrip] {
        &self.trips
    }

    pub fn transfers(&self) -> &[TransferLink] {
        &self.transfers
    }

    pub fn stop(&self, idx: StopIdx) -> &Stop {
        &self.stops[idx.index()]
    }

    pub fn route(&self, idx: RouteIdx) -> &TransitRoute {
        &self.routes[idx.index()]
    }

    pub fn trip(&self, idx: TripIdx) -> &VehicleTrip {
        &self.trips[idx.index()]
    }

    pub fn stop_idx(&self, id: &str) -> Option<StopIdx> {
        self.stop_lookup.get(id).copied()
    }

    pub fn route_idx(&self, id: &str) -> Option<RouteIdx> {
        self.route_lookup.get(id).copied()
    }

    pub fn trip_idx(&self, id: &str) -> Option<TripIdx> {
        self.trip_lookup.get(id).copied()
    }

    /// Trips calling at `stop`, ordered by departure time there.
    pub fn visits(&self, stop: StopIdx) -> &[StopVisit] {
        &self.visits[stop.index()]
    }

    /// Trips calling at `stop`, ordered by arrival time there.
    pub fn arrivals(&self, stop: StopIdx) -> &[StopVisit] {
        &self.arrivals[stop.index()]
    }

    pub fn stop_time(&self, visit: StopVisit) -> &StopTime {
        &self.trips[visit.trip.index()].stop_times[visit.position as usize]
    }

    pub fn transfers_from(&self, stop: StopIdx) -> impl Iterator<Item = &TransferLink> {
        self.transfers_out[stop.index()].iter().map(move |&i| &self.transfers[i])
    }

    pub fn transfers_to(&self, stop: StopIdx) -> impl Iterator<Item = &TransferLink> {
        self.transfers_in[stop.index()].iter().map(move |&i| &self.transfers[i])
    }

    /// Walk time of the direct link `from -> to`, if any.
    pub fn walk_time(&self, from: StopIdx, to: StopIdx) -> Option<Seconds> {
        self.transfers_from(from).find(|l| l.to == to).map(|l| l.walk_time)
    }

    pub fn counts(&self) -> FeedCounts {
        FeedCounts {
            stops: self.stops.len(),
            routes: self.routes.len(),
            trips: self.trips.len(),
            stop_times: self.trips.iter().map(|t| t.stop_times.len()).sum(),
            transfers: self.transfers.len(),
        }
    }

    /// Copy of the network with every trip capacity replaced by `f(capacity)`.
    pub fn map_capacities(&self, f: impl Fn(u32) -> u32) -> TransitNetwork {
        let mut net = self.clone();
        for trip in &mut net.trips {
            trip.capacity = f(trip.capacity).max(1);
        }
        net
    }
}

fn is_time_ordered(stop_times: &[StopTime]) -> bool {
    stop_times.iter().all(|st| st.arrival <= st.departure)
        && stop_times.windows(2).all(|w| w[0].departure <= w[1].arrival)
}
