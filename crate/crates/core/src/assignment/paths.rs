//! K-best candidate path search on the timetable.
//!
//! The search runs backward from the destination: it starts from vehicle
//! arrivals inside the preferred-arrival window and prepends legs until the
//! origin is reached. Partial paths are expanded best-first on exact integer
//! cost plus an admissible transfer-count bound, so completed paths come out in
//! nondecreasing utility order and the first K of them are the K best.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::utility::{cost_units, path_utility, PathUtilityComponents};
use crate::feed::{StopIdx, TransitNetwork, TripIdx};
use crate::time::Seconds;

/// Bounds of the candidate path search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSearch {
    /// Paths must arrive within `[preferred - window, preferred]`.
    pub window: Seconds,
    /// K, the number of candidates kept.
    pub max_paths: usize,
    pub max_transfers: u32,
    /// Longest wait allowed between two legs.
    pub max_transfer_wait: Seconds,
    /// Hard cap on heap pops per search.
    pub max_expansions: usize,
}

impl Default for PathSearch {
    fn default() -> Self {
        PathSearch { window: 1800, max_paths: 10, max_transfers: 2, max_transfer_wait: 1800, max_expansions: 200_000 }
    }
}

/// Ride on one vehicle trip between two positions of its stop sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Leg {
    pub trip: TripIdx,
    pub board: u32,
    pub alight: u32,
    /// Walk before boarding: access walk for the first leg, transfer walk otherwise.
    pub walk_before: Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePath {
    pub legs: Vec<Leg>,
    pub egress_walk: Seconds,
    /// Arrival at the destination stop.
    pub arrival: Seconds,
    pub in_vehicle_secs: Seconds,
    /// Transfer waits plus early arrival before the preferred time.
    pub waiting_secs: Seconds,
    pub walking_secs: Seconds,
    pub components: PathUtilityComponents,
    pub utility: f64,
    pub(crate) cost: u64,
}

impl CandidatePath {
    pub fn transfers(&self) -> u32 {
        self.legs.len() as u32 - 1
    }

    /// Exact integer utility, 6000 units per utility-minute.
    pub fn cost_units(&self) -> u64 {
        self.cost
    }

    /// Total order used for ranking: utility, then legs, then egress walk.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        self.cost
            .cmp(&other.cost)
            .then_with(|| self.legs.cmp(&other.legs))
            .then_with(|| self.egress_walk.cmp(&other.egress_walk))
    }

    /// Assembles a path from its legs, checking timetable feasibility against
    /// the request. Returns `None` for infeasible leg sequences.
    pub fn from_legs(
        net: &TransitNetwork,
        legs: Vec<Leg>,
        egress_walk: Seconds,
        preferred_arrival: Seconds,
    ) -> Option<CandidatePath> {
        let (mut iv, mut wait, mut walk) = (0u32, 0u32, 0u32);
        let mut ready: Option<Seconds> = None;
        for leg in &legs {
            let trip = net.trip(leg.trip);
            let (b, a) = (trip.stop_times.get(leg.board as usize)?, trip.stop_times.get(leg.alight as usize)?);
            if leg.board >= leg.alight {
                return None;
            }
            walk += leg.walk_before;
            if let Some(t) = ready {
                let at_stop = t + leg.walk_before;
                if b.departure < at_stop {
                    return None;
                }
                wait += b.departure - at_stop;
            }
            iv += a.arrival - b.departure;
            ready = Some(a.arrival);
        }
        let arrival = ready? + egress_walk;
        if arrival > preferred_arrival {
            return None;
        }
        walk += egress_walk;
        wait += preferred_arrival - arrival;
        let transfers = legs.len() as u32 - 1;
        let components = PathUtilityComponents::from_seconds(iv, wait, walk, transfers);
        Some(CandidatePath {
            legs,
            egress_walk,
            arrival,
            in_vehicle_secs: iv,
            waiting_secs: wait,
            walking_secs: walk,
            utility: path_utility(&components),
            components,
            cost: cost_units(iv, wait, walk, transfers),
        })
    }
}

const UNREACHABLE: u8 = u8::MAX;

/// Reusable search structures derived from one network.
pub struct PathFinder<'a> {
    net: &'a TransitNetwork,
    /// Distinct stop sequences served by at least one trip.
    patterns: Vec<Vec<StopIdx>>,
    /// stop -> (pattern, position)
    stop_patterns: Vec<Vec<(u32, u32)>>,
}

struct Node {
    leg: Leg,
    next: Option<u32>,
    /// Walk from this leg's alight stop to the next board stop (or destination).
    walk_after: Seconds,
    board_stop: StopIdx,
    departure: Seconds,
    legs: u32,
    g: u64,
    iv: Seconds,
    wait: Seconds,
    walk: Seconds,
}

#[derive(PartialEq, Eq)]
struct HeapItem {
    f: u64,
    seq: u64,
    node: u32,
    /// Some(access walk) for a completed path.
    complete: Option<Seconds>,
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.f, self.seq).cmp(&(other.f, other.seq))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> PathFinder<'a> {
    pub fn new(net: &'a TransitNetwork) -> Self {
        let mut patterns: Vec<Vec<StopIdx>> =
            net.trips().iter().map(|t| t.stop_times.iter().map(|s| s.stop).collect()).collect();
        patterns.sort();
        patterns.dedup();
        let mut stop_patterns = vec![Vec::new(); net.stops().len()];
        for (pi, pat) in patterns.iter().enumerate() {
            for (pos, s) in pat.iter().enumerate() {
                stop_patterns[s.index()].push((pi as u32, pos as u32));
            }
        }
        PathFinder { net, patterns, stop_patterns }
    }

    pub fn network(&self) -> &TransitNetwork {
        self.net
    }

    /// Minimum number of vehicle legs needed to reach each stop from
    /// `origin`, ignoring the timetable; `u8::MAX` beyond `max_legs`.
    pub fn legs_from(&self, origin: StopIdx, max_legs: u32) -> Vec<u8> {
        let n = self.net.stops().len();
        let mut level = vec![UNREACHABLE; n];
        let mut frontier = vec![origin];
        level[origin.index()] = 0;
        for l in self.net.transfers_from(origin) {
            if level[l.to.index()] > 0 {
                level[l.to.index()] = 0;
                frontier.push(l.to);
            }
        }
        let mut scanned = vec![u32::MAX; self.patterns.len()];
        for depth in 1..=max_legs.min(u32::from(UNREACHABLE) - 1) {
            let depth = depth as u8;
            let mut next = Vec::new();
            for &s in &frontier {
                for &(pi, pos) in &self.stop_patterns[s.index()] {
                    let pat = &self.patterns[pi as usize];
                    let end = (scanned[pi as usize] as usize).min(pat.len());
                    if pos as usize + 1 >= end {
                        continue;
                    }
                    for &t in &pat[pos as usize + 1..end] {
                        if level[t.index()] > depth {
                            level[t.index()] = depth;
                            next.push(t);
                        }
                        for l in self.net.transfers_from(t) {
                            if level[l.to.index()] > depth {
                                level[l.to.index()] = depth;
                                next.push(l.to);
                            }
                        }
                    }
                    scanned[pi as usize] = pos;
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        level
    }

    /// Up to `params.max_paths` best paths, best first. `legs_table` must be
    /// `self.legs_from(origin, params.max_transfers + 1)`.
    pub fn search(
        &self,
        origin: StopIdx,
        destination: StopIdx,
        preferred_arrival: Seconds,
        params: &PathSearch,
        legs_table: &[u8],
    ) -> Vec<CandidatePath> {
        let net = self.net;
        let max_legs = params.max_transfers + 1;
        let k = params.max_paths.max(1);
        let mut nodes: Vec<Node> = Vec::new();
        let mut heap: BinaryHeap<Reverse<HeapItem>> = BinaryHeap::new();
        let mut seq = 0u64;
        let heuristic = |stop: StopIdx, legs_used: u32| -> Option<u64> {
            let need = legs_table[stop.index()];
            if need == UNREACHABLE || legs_used + u32::from(need) > max_legs {
                None
            } else {
                Some(cost_units(0, 0, 0, u32::from(need)))
            }
        };
        let mut push = |heap: &mut BinaryHeap<Reverse<HeapItem>>, f: u64, node: u32, complete: Option<Seconds>| {
            seq += 1;
            heap.push(Reverse(HeapItem { f, seq, node, complete }));
        };

        let mut egress: Vec<(StopIdx, Seconds)> = vec![(destination, 0)];
        egress.extend(net.transfers_to(destination).filter(|l| l.from != origin).map(|l| (l.from, l.walk_time)));
        for (stop, walk) in egress {
            let Some(hi) = preferred_arrival.checked_sub(walk) else { continue };
            let lo = preferred_arrival.saturating_sub(params.window).saturating_sub(walk);
            for visit in arrivals_between(net, stop, lo, hi) {
                let trip = net.trip(visit.trip);
                let arrival = trip.stop_times[visit.position as usize].arrival;
                let slack = preferred_arrival - (arrival + walk);
                for q in 0..visit.position {
                    let st = trip.stop_times[q as usize];
                    if st.stop == destination {
                        continue;
                    }
                    let Some(h) = heuristic(st.stop, 1) else { continue };
                    let iv = arrival - st.departure;
                    let g = cost_units(iv, slack, walk, 0);
                    nodes.push(Node {
                        leg: Leg { trip: visit.trip, board: q, alight: visit.position, walk_before: 0 },
                        next: None,
                        walk_after: walk,
                        board_stop: st.stop,
                        departure: st.departure,
                        legs: 1,
                        g,
                        iv,
                        wait: slack,
                        walk,
                    });
                    push(&mut heap, g + h, nodes.len() as u32 - 1, None);
                }
            }
        }

        let mut found: Vec<CandidatePath> = Vec::new();
        let mut pops = 0usize;
        while let Some(Reverse(item)) = heap.pop() {
            if found.len() >= k && item.f > found[k - 1].cost {
                break;
            }
            pops += 1;
            if pops > params.max_expansions {
                break;
            }
            if let Some(access) = item.complete {
                found.push(self.assemble(&nodes, item.node, access));
                continue;
            }
            let (x, dep, legs_used, g) = {
                let n = &nodes[item.node as usize];
                (n.board_stop, n.departure, n.legs, n.g)
            };
            if x == origin {
                push(&mut heap, g, item.node, Some(0));
                continue;
            }
            if let Some(w) = net.walk_time(origin, x) {
                push(&mut heap, g + cost_units(0, 0, w, 0), item.node, Some(w));
            }
            if legs_used >= max_legs {
                continue;
            }
            let used = chain_trips(&nodes, item.node);
            let mut feeders: Vec<(StopIdx, Seconds)> = vec![(x, 0)];
            feeders.extend(net.transfers_to(x).map(|l| (l.from, l.walk_time)));
            for (xp, walk) in feeders {
                if xp == origin || xp == destination {
                    continue;
                }
                let Some(hi) = dep.checked_sub(walk) else { continue };
                let lo = hi.saturating_sub(params.max_transfer_wait);
                for visit in arrivals_between(net, xp, lo, hi) {
                    if used.contains(&visit.trip) {
                        continue;
                    }
                    let trip = net.trip(visit.trip);
                    let arrival = trip.stop_times[visit.position as usize].arrival;
                    let wait = hi - arrival;
                    for q in 0..visit.position {
                        let st = trip.stop_times[q as usize];
                        if st.stop == destination {
                            continue;
                        }
                        let Some(h) = heuristic(st.stop, legs_used + 1) else { continue };
                        let iv = arrival - st.departure;
                        let (piv, pwait, pwalk) = {
                            let n = &nodes[item.node as usize];
                            (n.iv, n.wait, n.walk)
                        };
                        let g2 = g + cost_units(iv, wait, walk, 1);
                        nodes.push(Node {
                            leg: Leg { trip: visit.trip, board: q, alight: visit.position, walk_before: 0 },
                            next: Some(item.node),
                            walk_after: walk,
                            board_stop: st.stop,
                            departure: st.departure,
                            legs: legs_used + 1,
                            g: g2,
                            iv: piv + iv,
                            wait: pwait + wait,
                            walk: pwalk + walk,
                        });
                        push(&mut heap, g2 + h, nodes.len() as u32 - 1, None);
                    }
                }
            }
        }
        found.sort_by(|a, b| a.rank_cmp(b));
        found.truncate(k);
        found
    }

    fn assemble(&self, nodes: &[Node], first: u32, access: Seconds) -> CandidatePath {
        let mut legs = Vec::new();
        let mut walk_before = access;
        let mut cursor = Some(first);
        let mut egress = 0;
        let head = &nodes[first as usize];
        while let Some(i) = cursor {
            let n = &nodes[i as usize];
            legs.push(Leg { walk_before, ..n.leg });
            walk_before = n.walk_after;
            egress = n.walk_after;
            cursor = n.next;
        }
        let last = legs.last().expect("at least one leg");
        let arrival = self.net.trip(last.trip).stop_times[last.alight as usize].arrival + egress;
        let (iv, wait, walk) = (head.iv, head.wait, head.walk + access);
        let transfers = legs.len() as u32 - 1;
        let components = PathUtilityComponents::from_seconds(iv, wait, walk, transfers);
        CandidatePath {
            legs,
            egress_walk: egress,
            arrival,
            in_vehicle_secs: iv,
            waiting_secs: wait,
            walking_secs: walk,
            utility: path_utility(&components),
            components,
            cost: cost_units(iv, wait, walk, transfers),
        }
    }
}

fn chain_trips(nodes: &[Node], mut i: u32) -> Vec<TripIdx> {
    let mut out = Vec::with_capacity(4);
    loop {
        let n = &nodes[i as usize];
        out.push(n.leg.trip);
        match n.next {
            Some(j) => i = j,
            None => return out,
        }
    }
}

fn arrivals_between(
    net: &TransitNetwork,
    stop: StopIdx,
    lo: Seconds,
    hi: Seconds,
) -> impl Iterator<Item = crate::feed::StopVisit> + '_ {
    let visits = net.arrivals(stop);
    let start = visits.partition_point(|v| net.stop_time(*v).arrival < lo);
    visits[start..].iter().copied().take_while(move |v| net.stop_time(*v).arrival <= hi)
}
