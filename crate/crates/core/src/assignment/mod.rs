//! Schedule-based, capacity-constrained transit assignment.
//!
//! Each request gets up to K timetable-feasible candidate paths ranked by
//! generalized cost. One path is drawn by logit choice; passengers are then
//! loaded onto vehicles in time order and, when a vehicle is full, fall back to
//! their next-best compatible candidate. Passengers who run out of candidates
//! are stranded and removed from the output entirely.

mod io;
mod loading;
mod logit;
mod paths;
mod utility;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feed::{TransitNetwork, TripRequest};
use crate::time::Seconds;

pub use io::{read_stranded, read_trajectories, write_stranded, write_trajectories};
pub use loading::{segment_loads, simulate_loading};
pub use logit::logit_probabilities;
pub use paths::{CandidatePath, Leg, PathFinder, PathSearch};
pub use utility::{path_utility, PathUtilityComponents, TRANSFER_PENALTY, WAIT_WEIGHT, WALK_WEIGHT};

#[derive(Debug, Error)]
pub enum AssignmentError {
    #[error("unknown stop `{0}`")]
    UnknownStop(String),
    #[error("empty choice set")]
    EmptyChoiceSet,
    #[error("invalid assignment parameter: {0}")]
    InvalidParameter(String),
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentParams {
    /// Logit dispersion per utility-minute.
    pub theta: f64,
    pub search: PathSearch,
    pub seed: u64,
}

impl Default for AssignmentParams {
    fn default() -> Self {
        AssignmentParams { theta: 0.2, search: PathSearch::default(), seed: 1 }
    }
}

impl AssignmentParams {
    pub fn validate(&self) -> Result<(), AssignmentError> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(AssignmentError::InvalidParameter(format!("theta must be positive, got {}", self.theta)));
        }
        if self.search.max_paths == 0 {
            return Err(AssignmentError::InvalidParameter("paths (K) must be at least 1".into()));
        }
        if self.search.window == 0 {
            return Err(AssignmentError::InvalidParameter("window must be positive".into()));
        }
        Ok(())
    }
}

/// One realized ride on a vehicle trip.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RideSegment {
    pub trip_id: String,
    pub board_stop: String,
    pub board_time: Seconds,
    pub alight_stop: String,
    pub alight_time: Seconds,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub person_id: String,
    pub segments: Vec<RideSegment>,
    pub completed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrandReason {
    /// No timetable-feasible path inside the arrival window.
    NoPath,
    /// Every compatible candidate was full.
    Capacity,
}

impl StrandReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StrandReason::NoPath => "no_path",
            StrandReason::Capacity => "capacity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "no_path" => Some(StrandReason::NoPath),
            "capacity" => Some(StrandReason::Capacity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrandedPerson {
    pub person_id: String,
    pub reason: StrandReason,
}

/// Completed trajectories of served persons, and the persons who were not served.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssignmentResult {
    pub trajectories: Vec<Trajectory>,
    pub stranded: Vec<StrandedPerson>,
}

pub fn stranded_count(result: &AssignmentResult) -> usize {
    let mut ids: Vec<&str> = result.stranded.iter().map(|s| s.person_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

/// Candidate paths for one request, best first.
pub fn enumerate_candidate_paths(
    net: &TransitNetwork,
    request: &TripRequest,
    search: &PathSearch,
) -> Result<Vec<CandidatePath>, AssignmentError> {
    if search.max_paths == 0 || search.window == 0 {
        return Err(AssignmentError::InvalidParameter("K and window must be positive".into()));
    }
    let origin = net.stop_idx(&request.origin).ok_or_else(|| AssignmentError::UnknownStop(request.origin.clone()))?;
    let destination = net
        .stop_idx(&request.destination)
        .ok_or_else(|| AssignmentError::UnknownStop(request.destination.clone()))?;
    let finder = PathFinder::new(net);
    let table = finder.legs_from(origin, search.max_transfers + 1);
    Ok(finder.search(origin, destination, request.preferred_arrival, search, &table))
}
