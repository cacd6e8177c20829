//! Synthetic desk-scale cities: a grid of stops served by row, column and
//! diagonal lines in both directions, plus commuter demand with a
//! configurable mixture of arrival-time peaks.

use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feed::{
    write_demand, write_transit_feed, DemandError, DemandSet, FeedCounts, FeedError, Mode, Stop, TransferRow,
    TransitNetwork, TransitRoute, TripRow,
};
use crate::time::Seconds;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible city parameters: {0}")]
    InfeasibleParams(String),
    #[error(transparent)]
    Feed(#[from] FeedError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Arrival-time peak: mean and standard deviation in seconds since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutePeak {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CityParams {
    pub n_stops: usize,
    pub n_routes: usize,
    pub trips_per_route: usize,
    /// First departure of the day.
    pub service_start: Seconds,
    pub service_span: Seconds,
    pub default_capacity: u32,
    pub n_persons: usize,
    /// One request per peak for every person; odd-numbered peaks travel back
    /// from destination to origin.
    pub commute_peaks: Vec<CommutePeak>,
    /// Running time between consecutive stops.
    pub hop_time: Seconds,
    /// Walk time of the diagonal transfer links.
    pub walk_time: Seconds,
    pub seed: u64,
}

impl Default for CityParams {
    fn default() -> Self {
        CityParams {
            n_stops: 36,
            n_routes: 28,
            trips_per_route: 24,
            service_start: 5 * 3600,
            service_span: 18 * 3600,
            default_capacity: 40,
            n_persons: 3000,
            commute_peaks: vec![
                CommutePeak { mean: 8.0 * 3600.0, std: 3600.0 },
                CommutePeak { mean: 17.5 * 3600.0, std: 4500.0 },
            ],
            hop_time: 900,
            walk_time: 300,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityManifest {
    pub params: CityParams,
    pub feed: FeedCounts,
    pub persons: usize,
    pub requests: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub network: TransitNetwork,
    pub demand: DemandSet,
    pub manifest: CityManifest,
}

impl SyntheticCity {
    /// Writes the feed files, `demand.csv` and `manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), SynthError> {
        let dir = dir.as_ref();
        write_transit_feed(&self.network, dir)?;
        let demand_path = dir.join("demand.csv");
        let file = fs::File::create(&demand_path).map_err(|source| SynthError::Io { path: demand_path, source })?;
        write_demand(&self.demand, std::io::BufWriter::new(file))?;
        let manifest_path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&manifest_path, json + "\n").map_err(|source| SynthError::Io { path: manifest_path, source })?;
        Ok(())
    }
}

fn grid_shape(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil() as usize;
    (n.div_ceil(cols), cols)
}

/// Stop sequences of every line, before direction is applied.
fn lines(n: usize) -> Vec<Vec<usize>> {
    let (rows, cols) = grid_shape(n);
    let at = |r: usize, c: usize| r * cols + c;
    let mut out = Vec::new();
    for r in 0..rows {
        out.push((0..cols).map(|c| at(r, c)).filter(|&s| s < n).collect::<Vec<_>>());
    }
    for c in 0..cols {
        out.push((0..rows).map(|r| at(r, c)).filter(|&s| s < n).collect());
    }
    let side = rows.min(cols);
    out.push((0..side).map(|i| at(i, i)).filter(|&s| s < n).collect());
    out.push((0..side).map(|i| at(i, cols - 1 - i)).filter(|&s| s < n).collect());
    out.retain(|l: &Vec<usize>| l.len() >= 2);
    out.dedup();
    out
}

pub fn generate_city(params: &CityParams) -> Result<SyntheticCity, SynthError> {
    let p = params;
    let bad = |m: &str| Err(SynthError::InfeasibleParams(m.to_string()));
    if p.n_stops < 2 {
        return bad("need at least 2 stops");
    }
    if p.n_routes == 0 || p.trips_per_route == 0 || p.n_persons == 0 || p.commute_peaks.is_empty() {
        return bad("routes, trips per route, persons and peaks must be positive");
    }
    if p.default_capacity == 0 || p.hop_time == 0 {
        return bad("capacity and hop time must be positive");
    }
    let line_set = lines(p.n_stops);
    let longest = line_set.iter().map(Vec::len).max().unwrap_or(0);
    let trip_duration = (longest as Seconds - 1) * p.hop_time;
    if trip_duration > p.service_span {
        return bad("service span too short for one trip");
    }
    let service_end = p.service_start + p.service_span;
    for peak in &p.commute_peaks {
        if !(f64::from(p.service_start)..=f64::from(service_end)).contains(&peak.mean) || !(peak.std >= 0.0) {
            return bad("commute peaks must lie within the service span");
        }
    }

    let (_, cols) = grid_shape(p.n_stops);
    let stop_id = |i: usize| format!("S{i:04}");
    let stops: Vec<Stop> = (0..p.n_stops)
        .map(|i| Stop {
            id: stop_id(i),
            name: format!("Grid {} {}", i / cols, i % cols),
            lat: 37.70 + (i / cols) as f64 * 0.01,
            lon: -122.50 + (i % cols) as f64 * 0.01,
        })
        .collect();

    let mut routes = Vec::with_capacity(p.n_routes);
    let mut trips = Vec::new();
    for r in 0..p.n_routes {
        let route_id = format!("R{r:03}");
        routes.push(TransitRoute { id: route_id.clone(), mode: Mode::Bus, agency: "SYN".into() });
        let mut pattern = line_set[(r / 2) % line_set.len()].clone();
        if r % 2 == 1 {
            pattern.reverse();
        }
        let duration = (pattern.len() as Seconds - 1) * p.hop_time;
        let slack = p.service_span - duration;
        let headway = if p.trips_per_route > 1 { slack / (p.trips_per_route as Seconds - 1) } else { 0 };
        for j in 0..p.trips_per_route {
            let dep = p.service_start + j as Seconds * headway;
            trips.push(TripRow {
                id: format!("{route_id}-{j:03}"),
                route_id: route_id.clone(),
                capacity: p.default_capacity,
                stop_times: pattern
                    .iter()
                    .enumerate()
                    .map(|(k, &s)| {
                        let t = dep + k as Seconds * p.hop_time;
                        (stop_id(s), t, t)
                    })
                    .collect(),
            });
        }
    }

    let (rows, _) = grid_shape(p.n_stops);
    let mut transfers = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let (a, b) = (r * cols + c, (r + 1) * cols + c + 1);
            if c + 1 < cols && b < p.n_stops {
                for (x, y) in [(a, b), (b, a)] {
                    transfers.push(TransferRow { from_stop: stop_id(x), to_stop: stop_id(y), walk_time: p.walk_time });
                }
            }
        }
    }
    let network = TransitNetwork::from_rows(stops, routes, trips, transfers)?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let earliest = f64::from(p.service_start + p.hop_time);
    let latest = f64::from(service_end);
    let mut rows_out: Vec<(String, String, String, Seconds)> = Vec::new();
    for person in 0..p.n_persons {
        let pair = index::sample(&mut rng, p.n_stops, 2);
        let (home, work) = (pair.index(0), pair.index(1));
        for (k, peak) in p.commute_peaks.iter().enumerate() {
            let t = Normal::new(peak.mean, peak.std).expect("std validated").sample(&mut rng);
            let t = t.clamp(earliest, latest).round() as Seconds;
            let (o, d) = if k % 2 == 0 { (home, work) } else { (work, home) };
            rows_out.push((format!("P{person:06}"), stop_id(o), stop_id(d), t));
        }
    }
    // Key requests by their sorted position so the written file parses back identically.
    let sorted = DemandSet::from_rows(rows_out);
    let demand = DemandSet::from_rows(
        sorted
            .requests()
            .iter()
            .map(|r| (r.person_id.clone(), r.origin.clone(), r.destination.clone(), r.preferred_arrival))
            .collect::<Vec<_>>(),
    );
    let manifest = CityManifest {
        params: p.clone(),
        feed: network.counts(),
        persons: demand.person_count(),
        requests: demand.len(),
    };
    Ok(SyntheticCity { network, demand, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feed::validate_feed;

    fn minimal() -> CityParams {
        CityParams {
            n_stops: 2,
            n_routes: 1,
            trips_per_route: 1,
            n_persons: 1,
            commute_peaks: vec![CommutePeak { mean: 6.0 * 3600.0, std: 0.0 }],
            ..CityParams::default()
        }
    }

    #[test]
    fn smallest_city() {
        let city = generate_city(&minimal()).unwrap();
        assert_eq!(city.network.trips().len(), 1);
        assert_eq!(city.demand.len(), 1);
        assert!(validate_feed(&city.network).is_clean());
    }

    #[test]
    fn infeasible_params() {
        assert!(matches!(generate_city(&CityParams { n_stops: 1, ..minimal() }), Err(SynthError::InfeasibleParams(_))));
        assert!(matches!(
            generate_city(&CityParams { service_span: 10, ..minimal() }),
            Err(SynthError::InfeasibleParams(_))
        ));
    }

    #[test]
    fn default_city_is_clean_and_counted() {
        let city = generate_city(&CityParams::default()).unwrap();
        assert!(validate_feed(&city.network).is_clean());
        assert_eq!(city.manifest.feed.trips, 28 * 24);
        assert_eq!(city.manifest.requests, 2 * city.manifest.persons);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_city(&CityParams::default()).unwrap();
        let b = generate_city(&CityParams::default()).unwrap();
        assert_eq!(a.demand, b.demand);
        let c = generate_city(&CityParams { seed: 43, ..CityParams::default() }).unwrap();
        assert_ne!(a.demand, c.demand);
    }
}
