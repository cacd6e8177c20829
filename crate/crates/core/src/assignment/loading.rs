use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::logit::{logit_probabilities, sample_index};
use super::paths::{CandidatePath, Leg, PathFinder};
use super::{
    AssignmentError, AssignmentParams, AssignmentResult, RideSegment, StrandReason, StrandedPerson, Trajectory,
};
use crate::feed::{DemandSet, StopIdx, TransitNetwork};

struct Plan {
    person: u32,
    /// Candidate indices in the order they will be tried: the logit draw first,
    /// then the rest best-first.
    attempts: Vec<usize>,
    candidates: Vec<CandidatePath>,
}

/// Boarding event: (departure, stop position on trip, arrival at stop, person rank, request, attempt, leg).
type Event = (u32, u32, u32, u32, u32, u32, u32);

/// Assigns every request and loads passengers onto capacity-limited vehicles.
///
/// Boarding attempts are processed in departure-time order; at one stop,
/// passengers who reached it first board first, person id breaking ties. A
/// boarding that would push any segment of the ride above capacity is denied
/// and the passenger switches to the next candidate that shares the legs
/// already ridden and departs no earlier than now. Without such a candidate
/// the person is stranded and all their trajectories are withdrawn; seats they
/// already occupied stay occupied.
pub fn simulate_loading(
    net: &TransitNetwork,
    demand: &DemandSet,
    params: &AssignmentParams,
) -> Result<AssignmentResult, AssignmentError> {
    params.validate()?;
    let persons: Vec<&str> = demand.persons();
    let rank: HashMap<&str, u32> = persons.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect();

    let mut endpoints = Vec::with_capacity(demand.len());
    for r in demand.requests() {
        let o = net.stop_idx(&r.origin).ok_or_else(|| AssignmentError::UnknownStop(r.origin.clone()))?;
        let d = net.stop_idx(&r.destination).ok_or_else(|| AssignmentError::UnknownStop(r.destination.clone()))?;
        endpoints.push((o, d));
    }

    let finder = PathFinder::new(net);
    let max_legs = params.search.max_transfers + 1;
    let origins: BTreeSet<StopIdx> = endpoints.iter().map(|e| e.0).collect();
    let tables: HashMap<StopIdx, Vec<u8>> =
        origins.into_par_iter().map(|o| (o, finder.legs_from(o, max_legs))).collect();

    let plans: Vec<Plan> = demand
        .requests()
        .par_iter()
        .zip(endpoints.par_iter())
        .map(|(r, &(o, d))| {
            let candidates = finder.search(o, d, r.preferred_arrival, &params.search, &tables[&o]);
            let attempts = if candidates.is_empty() {
                Vec::new()
            } else {
                let utilities: Vec<f64> = candidates.iter().map(|c| c.utility).collect();
                let probs = logit_probabilities(&utilities, params.theta).expect("non-empty, theta validated");
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(r.key);
                let first = sample_index(&probs, rng.gen::<f64>());
                std::iter::once(first).chain((0..candidates.len()).filter(|&i| i != first)).collect()
            };
            Plan { person: rank[r.person_id.as_str()], attempts, candidates }
        })
        .collect();

    let mut stranded: Vec<Option<StrandReason>> = vec![None; persons.len()];
    let mut loads: Vec<Vec<u32>> = net.trips().iter().map(|t| vec![0; t.segment_count()]).collect();
    let mut ridden: Vec<Vec<Leg>> = vec![Vec::new(); plans.len()];
    let mut done = vec![false; plans.len()];
    let mut queue: BinaryHeap<Reverse<Event>> = BinaryHeap::new();

    for (ri, plan) in plans.iter().enumerate() {
        match plan.attempts.first() {
            None => {
                stranded[plan.person as usize].get_or_insert(StrandReason::NoPath);
            }
            Some(&ci) => {
                let leg = plan.candidates[ci].legs[0];
                let dep = net.trip(leg.trip).stop_times[leg.board as usize].departure;
                queue.push(Reverse((dep, leg.board, dep, plan.person, ri as u32, 0, 0)));
            }
        }
    }

    while let Some(Reverse((now, _, arrived, person, ri, attempt, leg_no))) = queue.pop() {
        if stranded[person as usize].is_some() {
            continue;
        }
        let plan = &plans[ri as usize];
        let path = &plan.candidates[plan.attempts[attempt as usize]];
        let leg = path.legs[leg_no as usize];
        let trip_loads = &mut loads[leg.trip.index()];
        let capacity = net.trip(leg.trip).capacity;
        let segs = leg.board as usize..leg.alight as usize;
        if trip_loads[segs.clone()].iter().all(|&l| l < capacity) {
            trip_loads[segs].iter_mut().for_each(|l| *l += 1);
            ridden[ri as usize].push(leg);
            let next = leg_no as usize + 1;
            if next < path.legs.len() {
                let nl = path.legs[next];
                let alight = net.trip(leg.trip).stop_times[leg.alight as usize].arrival;
                let dep = net.trip(nl.trip).stop_times[nl.board as usize].departure;
                queue.push(Reverse((dep, nl.board, alight + nl.walk_before, person, ri, attempt, next as u32)));
            } else {
                done[ri as usize] = true;
            }
            continue;
        }
        let prefix = &ridden[ri as usize];
        let retry = (attempt as usize + 1..plan.attempts.len()).find(|&a| {
            let c = &plan.candidates[plan.attempts[a]];
            c.legs.len() > prefix.len()
                && c.legs[..prefix.len()] == prefix[..]
                && net.trip(c.legs[prefix.len()].trip).stop_times[c.legs[prefix.len()].board as usize].departure >= now
        });
        match retry {
            Some(a) => {
                let nl = plan.candidates[plan.attempts[a]].legs[prefix.len()];
                let dep = net.trip(nl.trip).stop_times[nl.board as usize].departure;
                queue.push(Reverse((dep, nl.board, arrived, person, ri, a as u32, leg_no)));
            }
            None => stranded[person as usize] = Some(StrandReason::Capacity),
        }
    }

    let mut trajectories = Vec::new();
    for (ri, plan) in plans.iter().enumerate() {
        if !done[ri] || stranded[plan.person as usize].is_some() {
            continue;
        }
        let segments = ridden[ri]
            .iter()
            .map(|leg| {
                let trip = net.trip(leg.trip);
                let (b, a) = (&trip.stop_times[leg.board as usize], &trip.stop_times[leg.alight as usize]);
                RideSegment {
                    trip_id: trip.id.clone(),
                    board_stop: net.stop(b.stop).id.clone(),
                    board_time: b.departure,
                    alight_stop: net.stop(a.stop).id.clone(),
                    alight_time: a.arrival,
                }
            })
            .collect();
        trajectories.push(Trajectory { person_id: persons[plan.person as usize].to_string(), segments, completed: true });
    }
    trajectories.sort_by(|a, b| {
        a.person_id.cmp(&b.person_id).then_with(|| a.segments[0].board_time.cmp(&b.segments[0].board_time))
    });
    let stranded = stranded
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|reason| StrandedPerson { person_id: persons[i].to_string(), reason }))
        .collect();
    Ok(AssignmentResult { trajectories, stranded })
}

/// Onboard count per trip and inter-stop segment implied by `trajectories`,
/// keyed by trip id. Segments whose stops cannot be matched on the trip are
/// reported as errors.
pub fn segment_loads(
    net: &TransitNetwork,
    trajectories: &[Trajectory],
) -> Result<HashMap<String, Vec<u32>>, AssignmentError> {
    let mut loads: HashMap<String, Vec<u32>> = HashMap::new();
    for t in trajectories {
        for s in &t.segments {
            let (board, alight) = locate_segment(net, s)?;
            let trip = net.trip_idx(&s.trip_id).expect("located");
            let entry = loads.entry(s.trip_id.clone()).or_insert_with(|| vec![0; net.trip(trip).segment_count()]);
            for l in &mut entry[board..alight] {
                *l += 1;
            }
        }
    }
    Ok(loads)
}

/// Stop-sequence positions (board, alight) of a ride on its trip.
pub(crate) fn locate_segment(net: &TransitNetwork, s: &RideSegment) -> Result<(usize, usize), AssignmentError> {
    let bad = |m: &str| AssignmentError::Format { context: format!("trip `{}`", s.trip_id), message: m.to_string() };
    let trip = net.trip(net.trip_idx(&s.trip_id).ok_or_else(|| bad("unknown trip"))?);
    let board = trip
        .stop_times
        .iter()
        .position(|st| net.stop(st.stop).id == s.board_stop && st.departure == s.board_time)
        .ok_or_else(|| bad("board stop/time not on trip"))?;
    let alight = trip.stop_times[board + 1..]
        .iter()
        .position(|st| net.stop(st.stop).id == s.alight_stop && st.arrival == s.alight_time)
        .map(|p| p + board + 1)
        .ok_or_else(|| bad("alight stop/time not on trip"))?;
    Ok((board, alight))
}
