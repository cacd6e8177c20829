use serde::{Deserialize, Serialize};

pub const WAIT_WEIGHT: f64 = 1.77;
pub const WALK_WEIGHT: f64 = 3.93;
pub const TRANSFER_PENALTY: f64 = 47.73;

/// Generalized cost components of a transit path, times in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathUtilityComponents {
    pub in_vehicle: f64,
    pub waiting: f64,
    pub walking: f64,
    pub transfers: u32,
}

impl PathUtilityComponents {
    pub fn from_seconds(in_vehicle: u32, waiting: u32, walking: u32, transfers: u32) -> Self {
        PathUtilityComponents {
            in_vehicle: f64::from(in_vehicle) / 60.0,
            waiting: f64::from(waiting) / 60.0,
            walking: f64::from(walking) / 60.0,
            transfers,
        }
    }
}

/// Path disutility in equivalent in-vehicle minutes (lower is better).
pub fn path_utility(c: &PathUtilityComponents) -> f64 {
    c.in_vehicle + WAIT_WEIGHT * c.waiting + WALK_WEIGHT * c.walking + TRANSFER_PENALTY * f64::from(c.transfers)
}

/// The same disutility on an exact integer scale of 1/6000 minute, computed
/// from whole seconds. Used to order paths without floating-point ties.
pub(crate) fn cost_units(in_vehicle_s: u32, waiting_s: u32, walking_s: u32, transfers: u32) -> u64 {
    100 * u64::from(in_vehicle_s) + 177 * u64::from(waiting_s) + 393 * u64::from(walking_s) + 286_380 * u64::from(transfers)
}
