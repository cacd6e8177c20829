#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use transit_contagion::assignment::{RideSegment, Trajectory};
use transit_contagion::contact::ContactNetwork;
use transit_contagion::feed::{Mode, Stop, TransferRow, TransitNetwork, TransitRoute, TripRow};

pub fn stop(id: &str) -> Stop {
    Stop { id: id.into(), name: id.into(), lat: 37.7, lon: -122.4 }
}

pub fn bus(id: &str) -> TransitRoute {
    TransitRoute { id: id.into(), mode: Mode::Bus, agency: "T".into() }
}

pub fn trip(id: &str, route: &str, capacity: u32, times: &[(&str, u32)]) -> TripRow {
    TripRow {
        id: id.into(),
        route_id: route.into(),
        capacity,
        stop_times: times.iter().map(|(s, t)| (s.to_string(), *t, *t)).collect(),
    }
}

/// A small random network: up to `max_stops` stops, a few routes with
/// random stop patterns and several trips each, and some walk links.
pub fn random_network(rng: &mut impl Rng, max_stops: usize) -> TransitNetwork {
    let n = rng.gen_range(3..=max_stops);
    let ids: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    let stops = ids.iter().map(|s| stop(s)).collect();
    let n_routes = rng.gen_range(1..=4);
    let mut routes = Vec::new();
    let mut trips = Vec::new();
    for r in 0..n_routes {
        let rid = format!("R{r}");
        routes.push(bus(&rid));
        let len = rng.gen_range(2..=n.min(5));
        let mut pattern: Vec<&String> = ids.iter().collect();
        pattern.shuffle(rng);
        pattern.truncate(len);
        let hops: Vec<u32> = (1..len).map(|_| rng.gen_range(1..=10) * 60).collect();
        for t in 0..rng.gen_range(1..=4) {
            let mut clock = 6 * 3600 + rng.gen_range(0..=24) * 300;
            let mut st = Vec::new();
            for (k, s) in pattern.iter().enumerate() {
                let arrival = clock;
                let dwell = if rng.gen_bool(0.2) { 30 } else { 0 };
                st.push((s.to_string(), arrival, arrival + dwell));
                if k + 1 < len {
                    clock = arrival + dwell + hops[k];
                }
            }
            trips.push(TripRow { id: format!("{rid}-{t}"), route_id: rid.clone(), capacity: rng.gen_range(1..=5), stop_times: st });
        }
    }
    let mut transfers = Vec::new();
    for _ in 0..rng.gen_range(0..=n / 2 + 1) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            transfers.push(TransferRow {
                from_stop: ids[a].clone(),
                to_stop: ids[b].clone(),
                walk_time: rng.gen_range(1..=5) * 60,
            });
        }
    }
    TransitNetwork::from_rows(stops, routes, trips, transfers).expect("valid random network")
}

/// Trajectories of `n` persons with one to three rides each on distinct
/// trips out of `n_trips`, as assignment would produce.
pub fn random_trajectories(rng: &mut impl Rng, n: usize, n_trips: usize) -> Vec<Trajectory> {
    (0..n)
        .map(|i| {
            let rides = rng.gen_range(1..=3.min(n_trips));
            let trips = rand::seq::index::sample(rng, n_trips, rides);
            let mut segments = Vec::new();
            let mut clock = rng.gen_range(0..3600u32);
            for t in trips.iter() {
                let board = clock + rng.gen_range(0..600);
                let alight = board + rng.gen_range(0..1800);
                segments.push(RideSegment {
                    trip_id: format!("T{t}"),
                    board_stop: "a".into(),
                    board_time: board,
                    alight_stop: "b".into(),
                    alight_time: alight,
                });
                clock = alight;
            }
            Trajectory { person_id: format!("P{i:04}"), segments, completed: true }
        })
        .collect()
}

pub type EdgeKey = (String, String, String, u32, u32);

/// Every positive overlap of two different persons' rides on one trip, with
/// only the longest (then earliest) kept per pair and trip.
pub fn pairwise(trajs: &[Trajectory]) -> Vec<EdgeKey> {
    let mut best: BTreeMap<(String, String, String), (u32, u32)> = BTreeMap::new();
    for (i, a) in trajs.iter().enumerate() {
        for b in &trajs[i + 1..] {
            if a.person_id == b.person_id {
                continue;
            }
            let (pa, pb) = if a.person_id < b.person_id { (a, b) } else { (b, a) };
            for sa in &pa.segments {
                for sb in &pb.segments {
                    if sa.trip_id != sb.trip_id {
                        continue;
                    }
                    let (s, e) = (sa.board_time.max(sb.board_time), sa.alight_time.min(sb.alight_time));
                    if e <= s {
                        continue;
                    }
                    let key = (pa.person_id.clone(), pb.person_id.clone(), sa.trip_id.clone());
                    let better = |old: &(u32, u32)| (e - s > old.1 - old.0) || (e - s == old.1 - old.0 && s < old.0);
                    if best.get(&key).map_or(true, better) {
                        best.insert(key, (s, e));
                    }
                }
            }
        }
    }
    best.into_iter().map(|((u, v, t), (s, e))| (u, v, t, s, e)).collect()
}

pub fn edge_keys(net: &ContactNetwork) -> Vec<EdgeKey> {
    let mut v: Vec<EdgeKey> = net
        .edges()
        .iter()
        .map(|e| {
            (
                net.nodes()[e.u as usize].clone(),
                net.nodes()[e.v as usize].clone(),
                net.trip_id(e).to_string(),
                e.t_start,
                e.t_end,
            )
        })
        .collect();
    v.sort();
    v
}
