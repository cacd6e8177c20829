use serde::Serialize;

use super::TransitNetwork;

/// Non-fatal feed issues. Empty iff the feed is clean.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Stops no trip calls at.
    pub unserved_stops: Vec<String>,
    pub zero_capacity_trips: Vec<String>,
    /// Trips with capacity 1: legal, but almost certainly a data error.
    pub degenerate_capacity_trips: Vec<String>,
    /// Transfer links (from, to) touching a stop no trip calls at.
    pub unreachable_transfer_endpoints: Vec<(String, String)>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.unserved_stops.is_empty()
            && self.zero_capacity_trips.is_empty()
            && self.degenerate_capacity_trips.is_empty()
            && self.unreachable_transfer_endpoints.is_empty()
    }

    pub fn issue_count(&self) -> usize {
        self.unserved_stops.len()
            + self.zero_capacity_trips.len()
            + self.degenerate_capacity_trips.len()
            + self.unreachable_transfer_endpoints.len()
    }
}

pub fn validate_feed(net: &TransitNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    let served: Vec<bool> = (0..net.stops().len()).map(|i| !net.visits(super::StopIdx(i as u32)).is_empty()).collect();
    for (i, stop) in net.stops().iter().enumerate() {
        if !served[i] {
            report.unserved_stops.push(stop.id.clone());
        }
    }
    for trip in net.trips() {
        match trip.capacity {
            0 => report.zero_capacity_trips.push(trip.id.clone()),
            1 => report.degenerate_capacity_trips.push(trip.id.clone()),
            _ => {}
        }
    }
    for link in net.transfers() {
        if !served[link.from.index()] || !served[link.to.index()] {
            report
                .unreachable_transfer_endpoints
                .push((net.stop(link.from).id.clone(), net.stop(link.to).id.clone()));
        }
    }
    report
}
