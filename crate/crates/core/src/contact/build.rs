use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{ContactEdge, ContactError, ContactNetwork};
use crate::assignment::{RideSegment, Trajectory};
use crate::time::Seconds;

/// Common part of two rides on the same trip, if it has positive length.
pub fn overlap(a: &RideSegment, b: &RideSegment) -> Result<Option<(Seconds, Seconds)>, ContactError> {
    if a.trip_id != b.trip_id {
        return Err(ContactError::DifferentTrips(a.trip_id.clone(), b.trip_id.clone()));
    }
    let start = a.board_time.max(b.board_time);
    let end = a.alight_time.min(b.alight_time);
    Ok((end > start).then_some((start, end)))
}

/// Builds the contact multigraph of completed trajectories.
///
/// Rides are grouped by vehicle trip and swept in boarding order, so work is
/// proportional to riders plus contacts per trip. If the same two persons
/// overlap more than once on one trip, the longest overlap (earliest on ties)
/// is kept, giving at most one edge per pair and trip.
pub fn build_contact_network(trajectories: &[Trajectory]) -> ContactNetwork {
    let nodes: Vec<String> = trajectories
        .iter()
        .filter(|t| t.completed)
        .map(|t| t.person_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |p: &str| nodes.binary_search_by(|n| n.as_str().cmp(p)).expect("node present") as u32;

    // trip id -> (board, alight, node)
    let mut by_trip: BTreeMap<&str, Vec<(Seconds, Seconds, u32)>> = BTreeMap::new();
    for t in trajectories.iter().filter(|t| t.completed) {
        let node = index(&t.person_id);
        for s in &t.segments {
            if s.alight_time > s.board_time {
                by_trip.entry(s.trip_id.as_str()).or_default().push((s.board_time, s.alight_time, node));
            }
        }
    }
    let trip_ids: Vec<String> = by_trip.keys().map(|s| s.to_string()).collect();
    let groups: Vec<Vec<(Seconds, Seconds, u32)>> = by_trip.into_values().collect();

    let per_trip: Vec<Vec<ContactEdge>> =
        groups.into_par_iter().enumerate().map(|(ti, rides)| sweep_trip(ti as u32, rides)).collect();
    let edges = per_trip.into_iter().flatten().collect();
    ContactNetwork::from_parts(nodes, trip_ids, edges)
}

fn sweep_trip(trip: u32, mut rides: Vec<(Seconds, Seconds, u32)>) -> Vec<ContactEdge> {
    rides.sort_unstable();
    let mut active: Vec<(Seconds, u32)> = Vec::new();
    let mut edges = Vec::new();
    for (board, alight, node) in rides {
        active.retain(|&(end, _)| end > board);
        for &(end, other) in &active {
            if other != node {
                let (u, v) = if other < node { (other, node) } else { (node, other) };
                edges.push(ContactEdge { u, v, trip, t_start: board, t_end: end.min(alight) });
            }
        }
        active.push((alight, node));
    }
    edges.sort_by_key(|e| (e.u, e.v, std::cmp::Reverse(e.duration()), e.t_start));
    edges.dedup_by_key(|e| (e.u, e.v));
    edges
}
