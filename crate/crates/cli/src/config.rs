use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use transit_contagion::analysis::{RankingOptions, RouteAggregation};
use transit_contagion::assignment::{AssignmentParams, PathSearch};
use transit_contagion::contact::DegreeMode;
use transit_contagion::epidemic::EpiConfig;
use transit_contagion::scenario::{
    grid_specs, pmax_for_capacity, PmaxMode, ScenarioSettings, ScenarioSpec, DEFAULT_CAPACITY_LEVELS,
    DEFAULT_DEMAND_LEVELS,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub feed: PathBuf,
    pub demand: PathBuf,
    /// Not echoed into outputs, so identical runs into different
    /// directories produce identical files.
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignmentSection {
    pub theta: f64,
    /// K.
    pub paths: usize,
    pub window_min: f64,
    pub max_transfers: u32,
    pub max_transfer_wait_min: f64,
    pub max_expansions: usize,
    pub seed: u64,
}

impl Default for AssignmentSection {
    fn default() -> Self {
        AssignmentSection {
            theta: 0.2,
            paths: 10,
            window_min: 30.0,
            max_transfers: 2,
            max_transfer_wait_min: 30.0,
            max_expansions: 200_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicSection {
    pub n_seeds: i64,
    pub horizon: i64,
    pub infectious_period: i64,
    pub runs: i64,
    /// Seconds of contact at which transmission saturates.
    pub d_max: i64,
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for EpidemicSection {
    fn default() -> Self {
        EpidemicSection {
            n_seeds: 100,
            horizon: 5,
            infectious_period: 5,
            runs: 100_000,
            d_max: 7200,
            master_seed: 1,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub demand: Vec<f64>,
    pub capacity: Vec<f64>,
    /// Also run the unreduced baseline.
    pub baseline: bool,
    pub interpolate_pmax: bool,
    /// Seed of the person-level demand sample.
    pub seed: u64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            demand: DEFAULT_DEMAND_LEVELS.to_vec(),
            capacity: DEFAULT_CAPACITY_LEVELS.to_vec(),
            baseline: true,
            interpolate_pmax: false,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub top_trips: usize,
    pub top_routes: usize,
    pub min_passengers: usize,
    pub route_aggregation: RouteAggregation,
    pub degree_mode: DegreeMode,
    pub endangered_threshold: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let r = RankingOptions::default();
        AnalysisSection {
            top_trips: r.top_trips,
            top_routes: r.top_routes,
            min_passengers: r.min_passengers,
            route_aggregation: r.route_aggregation,
            degree_mode: DegreeMode::Multigraph,
            endangered_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub assignment: AssignmentSection,
    pub epidemic: EpidemicSection,
    pub grid: GridSection,
    pub analysis: AnalysisSection,
}

fn fail(field: &str, message: impl std::fmt::Display) -> anyhow::Error {
    anyhow::anyhow!("invalid config: {field}: {message}")
}

fn minutes(field: &str, m: f64) -> Result<u32> {
    if !(m.is_finite() && m > 0.0) {
        return Err(fail(field, format!("must be positive, got {m}")));
    }
    Ok((m * 60.0).round() as u32)
}

fn non_negative(field: &str, v: i64) -> Result<u32> {
    u32::try_from(v).map_err(|_| fail(field, format!("must be a non-negative integer, got {v}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn assignment_params(&self) -> Result<AssignmentParams> {
        let a = &self.assignment;
        if !(a.theta.is_finite() && a.theta > 0.0) {
            return Err(fail("assignment.theta", format!("must be positive, got {}", a.theta)));
        }
        if a.paths == 0 {
            return Err(fail("assignment.paths", "must be at least 1"));
        }
        Ok(AssignmentParams {
            theta: a.theta,
            search: PathSearch {
                window: minutes("assignment.window_min", a.window_min)?,
                max_paths: a.paths,
                max_transfers: a.max_transfers,
                max_transfer_wait: minutes("assignment.max_transfer_wait_min", a.max_transfer_wait_min)?,
                max_expansions: a.max_expansions.max(1),
            },
            seed: a.seed,
        })
    }

    pub fn epi_config(&self) -> Result<EpiConfig> {
        let e = &self.epidemic;
        let n_seeds = non_negative("epidemic.n_seeds", e.n_seeds)?;
        if n_seeds == 0 {
            return Err(fail("epidemic.n_seeds", "must be at least 1"));
        }
        let runs = non_negative("epidemic.runs", e.runs)?;
        if runs == 0 {
            return Err(fail("epidemic.runs", "must be at least 1"));
        }
        Ok(EpiConfig {
            n_seeds: n_seeds as usize,
            horizon: non_negative("epidemic.horizon", e.horizon)?,
            infectious_period: non_negative("epidemic.infectious_period", e.infectious_period)?,
            n_runs: u64::from(runs),
            master_seed: e.master_seed,
        })
    }

    pub fn d_max(&self) -> Result<u32> {
        let d = non_negative("epidemic.d_max", self.epidemic.d_max)?;
        if d == 0 {
            return Err(fail("epidemic.d_max", "must be positive"));
        }
        Ok(d)
    }

    pub fn pmax_mode(&self) -> PmaxMode {
        if self.grid.interpolate_pmax {
            PmaxMode::Interpolate
        } else {
            PmaxMode::Table
        }
    }

    pub fn settings(&self) -> Result<ScenarioSettings> {
        let a = &self.analysis;
        if !(0.0..=1.0).contains(&a.endangered_threshold) {
            return Err(fail("analysis.endangered_threshold", "must lie in [0, 1]"));
        }
        Ok(ScenarioSettings {
            assignment: self.assignment_params()?,
            epi: self.epi_config()?,
            d_max: self.d_max()?,
            pmax_mode: self.pmax_mode(),
            ranking: RankingOptions {
                top_trips: a.top_trips,
                top_routes: a.top_routes,
                min_passengers: a.min_passengers,
                route_aggregation: a.route_aggregation,
            },
            degree_mode: a.degree_mode,
            endangered_threshold: a.endangered_threshold,
        })
    }

    /// Checks the grid fractions, including the P_max mapping of every
    /// capacity level unless interpolation is enabled.
    pub fn specs(&self) -> Result<Vec<ScenarioSpec>> {
        let g = &self.grid;
        if g.demand.is_empty() || g.capacity.is_empty() {
            return Err(fail("grid", "demand and capacity lists must be non-empty"));
        }
        for &d in &g.demand {
            if !(d > 0.0 && d <= 1.0) {
                return Err(fail("grid.demand", format!("fraction {d} outside (0, 1]")));
            }
        }
        for &c in &g.capacity {
            if !(c > 0.0 && c <= 1.0) {
                return Err(fail("grid.capacity", format!("fraction {c} outside (0, 1]")));
            }
            if !g.interpolate_pmax && pmax_for_capacity(c).is_err() {
                return Err(fail(
                    "grid.capacity",
                    format!(
                        "fraction {c} has no P_max in the capacity mapping (1.0, 0.9, 0.8, 0.7, 0.5); \
                         pass --interpolate-pmax to extrapolate"
                    ),
                ));
            }
        }
        let mut specs = grid_specs(&g.demand, &g.capacity, g.seed);
        if !g.baseline && !(g.demand.contains(&1.0) && g.capacity.contains(&1.0)) {
            specs.remove(0);
        }
        if specs.is_empty() {
            bail!("invalid config: grid: no scenarios");
        }
        Ok(specs)
    }

    /// Every check that needs no input files.
    pub fn validate(&self) -> Result<()> {
        self.settings()?;
        self.specs()?;
        Ok(())
    }
}
