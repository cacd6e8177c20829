//! Demand-reduction × capacity-reduction scenarios.
//!
//! Every scenario runs the full chain on private copies of the inputs:
//! person-level demand sampling, capacity scaling, loading, contact network,
//! duration-weighted epidemic and risk rankings. All scenarios of a grid share
//! the same seeds, so kept-person sets are nested across keep fractions and
//! each surviving request draws the same route-choice variates everywhere.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{route_risk_ranking, trip_risk_ranking, AnalysisError, RankingOptions, RouteRisk, TripRisk};
use crate::assignment::{simulate_loading, AssignmentError, AssignmentParams, StrandReason};
use crate::contact::{
    build_contact_network, network_stats, segment_clique_sizes, temporal_histograms, DegreeMode, NetworkStats,
    TemporalHistograms,
};
use crate::epidemic::{
    endangered_count, global_infection_rate, run_epidemic, weight_network, EpiConfig, EpiError, TransmissionParams,
};
use crate::feed::{DemandSet, TransitNetwork};
use crate::time::Seconds;

pub const DEFAULT_DEMAND_LEVELS: [f64; 5] = [1.0, 0.83, 0.665, 0.59, 0.50];
pub const DEFAULT_CAPACITY_LEVELS: [f64; 4] = [0.9, 0.8, 0.7, 0.5];

/// Saturation probability per capacity fraction.
pub const PMAX_TABLE: [(f64, f64); 5] = [(1.0, 0.163), (0.9, 0.160), (0.8, 0.158), (0.7, 0.156), (0.5, 0.140)];

const KEY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{field} must lie in (0, 1], got {value}")]
    InvalidFraction { field: &'static str, value: f64 },
    #[error(
        "capacity fraction {0} has no P_max mapping (mapped fractions: 1.0, 0.9, 0.8, 0.7, 0.5); \
         enable interpolation to extrapolate linearly"
    )]
    UnmappedCapacityFraction(f64),
    #[error("empty scenario grid")]
    EmptyGrid,
    #[error("scenario {scenario_id}: {source}")]
    Scenario { scenario_id: String, source: Box<ScenarioError> },
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Epidemic(#[from] EpiError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario_id: String,
    pub demand_keep_fraction: f64,
    pub capacity_fraction: f64,
    pub seed: u64,
}

fn percent_label(f: f64) -> String {
    let p = (f * 1000.0).round() / 10.0;
    if p.fract() == 0.0 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

impl ScenarioSpec {
    /// Spec with the id `d<demand %>_c<capacity %>`, e.g. `d66.5_c90`.
    pub fn new(demand_keep_fraction: f64, capacity_fraction: f64, seed: u64) -> Self {
        ScenarioSpec {
            scenario_id: format!("d{}_c{}", percent_label(demand_keep_fraction), percent_label(capacity_fraction)),
            demand_keep_fraction,
            capacity_fraction,
            seed,
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.demand_keep_fraction == 1.0 && self.capacity_fraction == 1.0
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        check_fraction("demand_keep_fraction", self.demand_keep_fraction)?;
        check_fraction("capacity_fraction", self.capacity_fraction)
    }
}

fn check_fraction(field: &'static str, value: f64) -> Result<(), ScenarioError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(ScenarioError::InvalidFraction { field, value })
    }
}

/// Baseline plus the cross product of `demand` and `capacity` levels. The
/// baseline is not repeated if the cross product already contains it.
pub fn grid_specs(demand: &[f64], capacity: &[f64], seed: u64) -> Vec<ScenarioSpec> {
    let mut specs = vec![ScenarioSpec::new(1.0, 1.0, seed)];
    for &d in demand {
        for &c in capacity {
            if d == 1.0 && c == 1.0 {
                continue;
            }
            specs.push(ScenarioSpec::new(d, c, seed));
        }
    }
    specs
}

/// The 21 default scenarios.
pub fn default_grid(seed: u64) -> Vec<ScenarioSpec> {
    grid_specs(&DEFAULT_DEMAND_LEVELS, &DEFAULT_CAPACITY_LEVELS, seed)
}

/// Keeps `⌊keep_fraction · N⌋` of the `N` persons, chosen uniformly without
/// replacement, with all of their requests.
///
/// The persons are shuffled once per seed and a prefix is kept, so for a fixed
/// seed a smaller fraction always keeps a subset of a larger one.
pub fn reduce_demand(demand: &DemandSet, keep_fraction: f64, seed: u64) -> DemandSet {
    assert!(keep_fraction > 0.0 && keep_fraction <= 1.0, "keep_fraction out of range: {keep_fraction}");
    if keep_fraction == 1.0 {
        return demand.clone();
    }
    let mut persons = demand.persons();
    let keep = kept_count(persons.len(), keep_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    persons.shuffle(&mut rng);
    let kept: HashSet<&str> = persons[..keep].iter().copied().collect();
    demand.retain_persons(|p| kept.contains(p))
}

/// `⌊fraction · n⌋`, forgiving products like `0.59 · 100` that land a hair
/// below an integer.
pub fn kept_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + KEY_TOLERANCE).floor().min(n as f64) as usize
}

/// Each trip capacity becomes `max(1, ⌊capacity · fraction⌋)`.
pub fn scale_capacities(network: &TransitNetwork, capacity_fraction: f64) -> TransitNetwork {
    assert!(capacity_fraction > 0.0 && capacity_fraction <= 1.0, "capacity_fraction out of range: {capacity_fraction}");
    if capacity_fraction == 1.0 {
        return network.clone();
    }
    network.map_capacities(|c| (f64::from(c) * capacity_fraction + KEY_TOLERANCE).floor() as u32)
}

pub fn pmax_for_capacity(capacity_fraction: f64) -> Result<f64, ScenarioError> {
    PMAX_TABLE
        .iter()
        .find(|(k, _)| (k - capacity_fraction).abs() <= KEY_TOLERANCE)
        .map(|&(_, p)| p)
        .ok_or(ScenarioError::UnmappedCapacityFraction(capacity_fraction))
}

/// Piecewise-linear P_max through the table keys, extended linearly beyond
/// them and clamped to [0, 1]. Values off the keys are extrapolations, not
/// measurements.
pub fn pmax_interpolated(capacity_fraction: f64) -> f64 {
    let mut pts = PMAX_TABLE.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let seg = pts.windows(2).position(|w| capacity_fraction <= w[1].0).unwrap_or(pts.len() - 2);
    let (x0, y0) = pts[seg];
    let (x1, y1) = pts[seg + 1];
    (y0 + (y1 - y0) * (capacity_fraction - x0) / (x1 - x0)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmaxMode {
    /// Only the five mapped capacity fractions are accepted.
    #[default]
    Table,
    /// Linear interpolation and extrapolation between the mapped fractions.
    Interpolate,
}

/// Resolves P_max and reports whether it came off the table.
pub fn resolve_pmax(capacity_fraction: f64, mode: PmaxMode) -> Result<(f64, bool), ScenarioError> {
    match (pmax_for_capacity(capacity_fraction), mode) {
        (Ok(p), _) => Ok((p, false)),
        (Err(e), PmaxMode::Table) => Err(e),
        (Err(_), PmaxMode::Interpolate) => Ok((pmax_interpolated(capacity_fraction), true)),
    }
}

/// Everything but the inputs and the spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSettings {
    pub assignment: AssignmentParams,
    pub epi: EpiConfig,
    pub d_max: Seconds,
    pub pmax_mode: PmaxMode,
    pub ranking: RankingOptions,
    pub degree_mode: DegreeMode,
    pub endangered_threshold: f64,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        ScenarioSettings {
            assignment: AssignmentParams::default(),
            epi: EpiConfig::default(),
            d_max: 7200,
            pmax_mode: PmaxMode::Table,
            ranking: RankingOptions::default(),
            degree_mode: DegreeMode::Multigraph,
            endangered_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub spec: ScenarioSpec,
    pub settings: ScenarioSettings,
    pub p_max: f64,
    /// True when `p_max` was interpolated rather than read off the table.
    pub p_max_interpolated: bool,
    pub persons_kept: usize,
    pub requests_kept: usize,
    pub stats: NetworkStats,
    /// Persons not served, for any reason.
    pub stranded: usize,
    pub stranded_no_path: usize,
    pub stranded_capacity: usize,
    pub global_infection_rate: f64,
    pub endangered: usize,
    /// Every route with enough riders, ranked.
    pub route_risks: Vec<RouteRisk>,
    /// Top trips.
    pub trip_risks: Vec<TripRisk>,
    #[serde(skip)]
    pub histograms: TemporalHistograms,
}

fn in_scenario(spec: &ScenarioSpec, e: impl Into<ScenarioError>) -> ScenarioError {
    ScenarioError::Scenario { scenario_id: spec.scenario_id.clone(), source: Box::new(e.into()) }
}

pub fn run_scenario(
    spec: &ScenarioSpec,
    network: &TransitNetwork,
    demand: &DemandSet,
    settings: &ScenarioSettings,
) -> Result<ScenarioReport, ScenarioError> {
    let ctx = |e: ScenarioError| in_scenario(spec, e);
    spec.validate().map_err(ctx)?;
    let (p_max, p_max_interpolated) = resolve_pmax(spec.capacity_fraction, settings.pmax_mode).map_err(ctx)?;
    let transmission = TransmissionParams { p_max, d_max: settings.d_max };
    transmission.validate().map_err(|e| in_scenario(spec, e))?;

    let demand = reduce_demand(demand, spec.demand_keep_fraction, spec.seed);
    let network = scale_capacities(network, spec.capacity_fraction);
    let loaded = simulate_loading(&network, &demand, &settings.assignment).map_err(|e| in_scenario(spec, e))?;
    let contacts = build_contact_network(&loaded.trajectories);
    let cliques = segment_clique_sizes(&network, &loaded.trajectories).map_err(|e| in_scenario(spec, e))?;
    let stats = network_stats(&contacts, &cliques, settings.degree_mode);
    let weighted = weight_network(&contacts, &transmission);
    let estimates = run_epidemic(&weighted, &settings.epi).map_err(|e| in_scenario(spec, e))?;
    let probs = estimates.probabilities();

    let r = &settings.ranking;
    let trip_risks = trip_risk_ranking(&loaded.trajectories, &estimates, r.top_trips, r.min_passengers)
        .map_err(|e| in_scenario(spec, e))?;
    let route_risks = route_risk_ranking(
        &network,
        &loaded.trajectories,
        &estimates,
        usize::MAX,
        r.min_passengers,
        r.route_aggregation,
    )
    .map_err(|e| in_scenario(spec, e))?;

    let count = |reason| loaded.stranded.iter().filter(|s| s.reason == reason).count();
    Ok(ScenarioReport {
        spec: spec.clone(),
        settings: *settings,
        p_max,
        p_max_interpolated,
        persons_kept: demand.person_count(),
        requests_kept: demand.len(),
        stats,
        stranded: loaded.stranded.len(),
        stranded_no_path: count(StrandReason::NoPath),
        stranded_capacity: count(StrandReason::Capacity),
        global_infection_rate: global_infection_rate(&probs),
        endangered: endangered_count(&probs, settings.endangered_threshold),
        route_risks,
        trip_risks,
        histograms: temporal_histograms(&contacts),
    })
}

/// Reports of the scenarios that succeeded, in spec order, and the errors of
/// those that did not.
#[derive(Debug)]
pub struct GridOutcome {
    pub reports: Vec<ScenarioReport>,
    pub failures: Vec<ScenarioError>,
}

/// Runs all scenarios in parallel. A failing scenario does not stop the rest.
pub fn run_grid(
    specs: &[ScenarioSpec],
    network: &TransitNetwork,
    demand: &DemandSet,
    settings: &ScenarioSettings,
) -> Result<GridOutcome, ScenarioError> {
    if specs.is_empty() {
        return Err(ScenarioError::EmptyGrid);
    }
    let results: Vec<_> = specs.par_iter().map(|s| run_scenario(s, network, demand, settings)).collect();
    let mut outcome = GridOutcome { reports: Vec::new(), failures: Vec::new() };
    for r in results {
        match r {
            Ok(rep) => outcome.reports.push(rep),
            Err(e) => outcome.failures.push(e),
        }
    }
    Ok(outcome)
}

/// Demand levels as rows (largest first), capacity levels as columns
/// (largest first). `None` marks a combination that was not run.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMatrix {
    pub demand_levels: Vec<f64>,
    pub capacity_levels: Vec<f64>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl GridMatrix {
    pub fn get(&self, demand: f64, capacity: f64) -> Option<f64> {
        let i = self.demand_levels.iter().position(|&d| d == demand)?;
        let j = self.capacity_levels.iter().position(|&c| c == capacity)?;
        self.cells[i][j]
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "demand_keep_fraction")?;
        for c in &self.capacity_levels {
            write!(w, ",capacity_{c}")?;
        }
        writeln!(w)?;
        for (d, row) in self.demand_levels.iter().zip(&self.cells) {
            write!(w, "{d}")?;
            for cell in row {
                match cell {
                    Some(v) => write!(w, ",{v}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Network statistics (one row per scenario) and the three demand ×
/// capacity matrices.
#[derive(Debug, Clone)]
pub struct GridTables {
    pub stats: Vec<(f64, f64, NetworkStats)>,
    pub stranded: GridMatrix,
    pub infection: GridMatrix,
    pub endangered: GridMatrix,
}

impl GridTables {
    pub fn write_stats(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "demand_keep_fraction,capacity_fraction,max_degree,median_degree,mean_degree,\
             max_clique,median_clique,mean_clique,nodes,edges"
        )?;
        for (d, c, s) in &self.stats {
            writeln!(
                w,
                "{d},{c},{},{},{},{},{},{},{},{}",
                s.max_degree, s.median_degree, s.mean_degree, s.max_clique, s.median_clique, s.mean_clique, s.nodes, s.edges
            )?;
        }
        Ok(())
    }
}

fn levels(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    v
}

pub fn grid_tables(reports: &[ScenarioReport]) -> GridTables {
    let demand_levels = levels(reports.iter().map(|r| r.spec.demand_keep_fraction));
    let capacity_levels = levels(reports.iter().map(|r| r.spec.capacity_fraction));
    let matrix = |f: &dyn Fn(&ScenarioReport) -> f64| {
        let mut cells = vec![vec![None; capacity_levels.len()]; demand_levels.len()];
        for r in reports {
            let i = demand_levels.iter().position(|&d| d == r.spec.demand_keep_fraction).expect("level");
            let j = capacity_levels.iter().position(|&c| c == r.spec.capacity_fraction).expect("level");
            cells[i][j] = Some(f(r));
        }
        GridMatrix { demand_levels: demand_levels.clone(), capacity_levels: capacity_levels.clone(), cells }
    };
    let mut stats: Vec<_> =
        reports.iter().map(|r| (r.spec.demand_keep_fraction, r.spec.capacity_fraction, r.stats)).collect();
    stats.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    GridTables {
        stats,
        stranded: matrix(&|r| r.stranded as f64),
        infection: matrix(&|r| r.global_infection_rate),
        endangered: matrix(&|r| r.endangered as f64),
    }
}
