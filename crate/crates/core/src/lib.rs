//! Simulation of passenger contacts on public transit and of epidemic spread
//! over them.
//!
//! The pipeline runs capacity-constrained schedule-based assignment
//! ([`assignment`]), turns the realized passenger trajectories into a temporal
//! contact multigraph ([`contact`]), weights contacts by duration and runs a
//! Monte Carlo SI/SIR process on them ([`epidemic`]), and repeats the whole
//! chain over a grid of demand and capacity reductions ([`scenario`]).

pub mod feed;
pub mod time;
pub mod assignment;
pub mod contact;
pub mod epidemic;
pub mod synthgen;
pub mod scenario;
pub mod analysis;
