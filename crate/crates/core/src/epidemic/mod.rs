//! Duration-weighted transmission and Monte Carlo SIR spreading on the
//! contact network.

mod sim;
mod stream;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::ContactNetwork;
use crate::time::Seconds;

pub use sim::{run_epidemic, run_epidemic_from, run_epidemic_with_threads};

#[derive(Debug, Error)]
pub enum EpiError {
    #[error("cannot seed {seeds} infections in a network of {nodes} nodes")]
    SeedCountExceedsNodes { seeds: usize, nodes: usize },
    #[error("invalid epidemic parameter: {0}")]
    InvalidParameter(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

/// Saturating linear dose model: probability grows with contact duration up
/// to `p_max`, reached at `d_max` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionParams {
    pub p_max: f64,
    pub d_max: Seconds,
}

impl TransmissionParams {
    pub fn validate(&self) -> Result<(), EpiError> {
        if !(0.0..=1.0).contains(&self.p_max) {
            return Err(EpiError::InvalidParameter(format!("p_max must lie in [0, 1], got {}", self.p_max)));
        }
        if self.d_max == 0 {
            return Err(EpiError::InvalidParameter("d_max must be positive".into()));
        }
        Ok(())
    }
}

/// `min(p_max, p_max / d_max * duration)`.
pub fn edge_probability(duration: Seconds, params: &TransmissionParams) -> f64 {
    let linear = params.p_max / f64::from(params.d_max) * f64::from(duration);
    linear.min(params.p_max)
}

/// A contact network with one transmission probability per edge.
#[derive(Debug, Clone)]
pub struct WeightedContactNetwork<'a> {
    pub network: &'a ContactNetwork,
    pub weights: Vec<f64>,
    pub params: TransmissionParams,
}

pub fn weight_network<'a>(network: &'a ContactNetwork, params: &TransmissionParams) -> WeightedContactNetwork<'a> {
    let weights = network.edges().iter().map(|e| edge_probability(e.duration(), params)).collect();
    WeightedContactNetwork { network, weights, params: *params }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpiConfig {
    /// Initially infected nodes per run.
    pub n_seeds: usize,
    /// Iterations simulated per run.
    pub horizon: u32,
    /// Iterations a node stays infectious.
    pub infectious_period: u32,
    pub n_runs: u64,
    pub master_seed: u64,
}

impl Default for EpiConfig {
    fn default() -> Self {
        EpiConfig { n_seeds: 100, horizon: 5, infectious_period: 5, n_runs: 100_000, master_seed: 1 }
    }
}

impl EpiConfig {
    pub fn validate(&self) -> Result<(), EpiError> {
        if self.n_seeds == 0 {
            return Err(EpiError::InvalidParameter("n_seeds must be at least 1".into()));
        }
        if self.n_runs == 0 {
            return Err(EpiError::InvalidParameter("n_runs must be at least 1".into()));
        }
        if self.n_runs > u64::from(u32::MAX) {
            return Err(EpiError::InvalidParameter("n_runs exceeds 2^32 - 1".into()));
        }
        Ok(())
    }
}

/// Per-node infection frequency over `runs` Monte Carlo runs. Seeds count as
/// infected in the runs that seed them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfectionEstimates {
    pub persons: Vec<String>,
    pub infected_runs: Vec<u64>,
    pub runs: u64,
}

impl InfectionEstimates {
    /// Rebuilds estimates from written probabilities of a `runs`-run
    /// simulation.
    pub fn from_probabilities(mut pairs: Vec<(String, f64)>, runs: u64) -> Self {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let infected_runs = pairs.iter().map(|(_, p)| (p * runs as f64).round() as u64).collect();
        InfectionEstimates { persons: pairs.into_iter().map(|(n, _)| n).collect(), infected_runs, runs }
    }

    pub fn probability(&self, node: usize) -> f64 {
        self.infected_runs[node] as f64 / self.runs as f64
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.persons.len()).map(|i| self.probability(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    /// Probability of `person`, or `None` if not in the network.
    pub fn of(&self, person: &str) -> Option<f64> {
        self.persons.binary_search_by(|p| p.as_str().cmp(person)).ok().map(|i| self.probability(i))
    }

    /// `person_id,probability`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "person_id,probability")?;
        for (i, p) in self.persons.iter().enumerate() {
            writeln!(w, "{},{}", p, self.probability(i))?;
        }
        Ok(())
    }
}

/// Expected share of nodes infected by the end of a run.
pub fn global_infection_rate(probabilities: &[f64]) -> f64 {
    if probabilities.is_empty() {
        0.0
    } else {
        probabilities.iter().sum::<f64>() / probabilities.len() as f64
    }
}

/// Nodes whose infection probability is strictly above `threshold`.
pub fn endangered_count(probabilities: &[f64], threshold: f64) -> usize {
    probabilities.iter().filter(|&&p| p > threshold).count()
}

/// Reads `person_id,probability` rows.
pub fn read_probabilities(reader: impl std::io::Read) -> Result<Vec<(String, f64)>, EpiError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| EpiError::Format { context: "infection_estimates.csv".into(), message: e.to_string() })?;
        let p: f64 = record.get(1).unwrap_or("").parse().map_err(|_| EpiError::Format {
            context: "infection_estimates.csv".into(),
            message: format!("bad probability in {record:?}"),
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(EpiError::Format { context: "infection_estimates.csv".into(), message: format!("probability {p} out of range") });
        }
        out.push((record[0].to_string(), p));
    }
    Ok(out)
}
