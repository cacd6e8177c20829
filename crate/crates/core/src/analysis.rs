//! Risk rankings of vehicle trips and routes, trend matrices across
//! scenarios, and report emission with a content-hash manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assignment::Trajectory;
use crate::epidemic::InfectionEstimates;
use crate::feed::TransitNetwork;
use crate::scenario::{grid_tables, ScenarioReport};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown route `{0}`")]
    UnknownRoute(String),
    #[error("unknown trip `{0}`")]
    UnknownTrip(String),
    #[error("no infection estimate for person `{0}`")]
    MissingEstimate(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serializing {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRisk {
    pub trip_id: String,
    pub passenger_count: usize,
    pub mean_infection_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRisk {
    pub route_id: String,
    pub distinct_passenger_count: usize,
    pub mean_infection_probability: f64,
}

/// How a passenger riding several trips of one route enters the route mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteAggregation {
    /// Each passenger once.
    #[default]
    DistinctPassengers,
    /// Once per trip of the route they rode.
    PerIncidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingOptions {
    pub top_trips: usize,
    pub top_routes: usize,
    pub min_passengers: usize,
    pub route_aggregation: RouteAggregation,
}

impl Default for RankingOptions {
    fn default() -> Self {
        RankingOptions {
            top_trips: 100,
            top_routes: 10,
            min_passengers: 5,
            route_aggregation: RouteAggregation::DistinctPassengers,
        }
    }
}

fn probability_of(estimates: &InfectionEstimates, person: &str) -> Result<f64, AnalysisError> {
    estimates.of(person).ok_or_else(|| AnalysisError::MissingEstimate(person.to_string()))
}

/// Sum of probabilities and count for each key, over the given (key, person)
/// incidences. Incidences are deduplicated first.
fn aggregate<'a>(
    incidences: impl IntoIterator<Item = (&'a str, &'a str)>,
    estimates: &InfectionEstimates,
    dedup: bool,
) -> Result<BTreeMap<&'a str, (f64, usize)>, AnalysisError> {
    let mut seen = BTreeSet::new();
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (key, person) in incidences {
        if dedup && !seen.insert((key, person)) {
            continue;
        }
        let p = probability_of(estimates, person)?;
        let e = acc.entry(key).or_insert((0.0, 0));
        e.0 += p;
        e.1 += 1;
    }
    Ok(acc)
}

fn rank<T>(mut items: Vec<T>, mean: impl Fn(&T) -> f64, id: impl Fn(&T) -> &str, top_n: usize) -> Vec<T> {
    items.sort_by(|a, b| mean(b).total_cmp(&mean(a)).then_with(|| id(a).cmp(id(b))));
    items.truncate(top_n);
    items
}

/// Trips with at least `min_passengers` distinct riders, by descending mean
/// rider infection probability, ties by trip id.
pub fn trip_risk_ranking(
    trajectories: &[Trajectory],
    estimates: &InfectionEstimates,
    top_n: usize,
    min_passengers: usize,
) -> Result<Vec<TripRisk>, AnalysisError> {
    let incidences = trajectories
        .iter()
        .filter(|t| t.completed)
        .flat_map(|t| t.segments.iter().map(move |s| (s.trip_id.as_str(), t.person_id.as_str())));
    let acc = aggregate(incidences, estimates, true)?;
    let risks = acc
        .into_iter()
        .filter(|(_, (_, n))| *n >= min_passengers)
        .map(|(trip, (sum, n))| TripRisk {
            trip_id: trip.to_string(),
            passenger_count: n,
            mean_infection_probability: sum / n as f64,
        })
        .collect();
    Ok(rank(risks, |r| r.mean_infection_probability, |r| &r.trip_id, top_n))
}

/// Routes ranked like [`trip_risk_ranking`], pooling riders over all trips
/// of the route. `distinct_passenger_count` always counts each rider once;
/// `aggregation` only changes how the mean is weighted.
pub fn route_risk_ranking(
    network: &TransitNetwork,
    trajectories: &[Trajectory],
    estimates: &InfectionEstimates,
    top_n: usize,
    min_passengers: usize,
    aggregation: RouteAggregation,
) -> Result<Vec<RouteRisk>, AnalysisError> {
    let mut incidences = Vec::new();
    for t in trajectories.iter().filter(|t| t.completed) {
        let mut trips_seen = BTreeSet::new();
        for s in &t.segments {
            if !trips_seen.insert(s.trip_id.as_str()) {
                continue;
            }
            let trip = network.trip_idx(&s.trip_id).ok_or_else(|| AnalysisError::UnknownTrip(s.trip_id.clone()))?;
            let route = &network.route(network.trip(trip).route).id;
            incidences.push((route.as_str(), t.person_id.as_str()));
        }
    }
    let distinct = aggregate(incidences.iter().copied(), estimates, true)?;
    let weighted = match aggregation {
        RouteAggregation::DistinctPassengers => None,
        RouteAggregation::PerIncidence => Some(aggregate(incidences.iter().copied(), estimates, false)?),
    };
    let mut risks = Vec::new();
    for (route, (sum, n)) in distinct {
        if n < min_passengers {
            continue;
        }
        let mean = match &weighted {
            None => sum / n as f64,
            Some(w) => {
                let (s, m) = w[route];
                s / m as f64
            }
        };
        risks.push(RouteRisk {
            route_id: route.to_string(),
            distinct_passenger_count: n,
            mean_infection_probability: mean,
        });
    }
    Ok(rank(risks, |r| r.mean_infection_probability, |r| &r.route_id, top_n))
}

/// Route-by-scenario matrix of mean infection probability. `None` marks a
/// route with no ranked riders in that scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTrendMatrix {
    pub route_ids: Vec<String>,
    pub scenario_ids: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl RiskTrendMatrix {
    /// One row per route, one column per scenario; missing cells are empty.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "route_id")?;
        for s in &self.scenario_ids {
            write!(w, ",{s}")?;
        }
        writeln!(w)?;
        for (route, row) in self.route_ids.iter().zip(&self.cells) {
            write!(w, "{route}")?;
            for c in row {
                match c {
                    Some(v) => write!(w, ",{v}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn risk_trend_matrix(
    network: &TransitNetwork,
    reports: &[ScenarioReport],
    route_ids: &[String],
) -> Result<RiskTrendMatrix, AnalysisError> {
    for r in route_ids {
        if network.route_idx(r).is_none() {
            return Err(AnalysisError::UnknownRoute(r.clone()));
        }
    }
    let lookup: Vec<HashMap<&str, f64>> = reports
        .iter()
        .map(|rep| rep.route_risks.iter().map(|rr| (rr.route_id.as_str(), rr.mean_infection_probability)).collect())
        .collect();
    let cells = route_ids.iter().map(|r| lookup.iter().map(|m| m.get(r.as_str()).copied()).collect()).collect();
    Ok(RiskTrendMatrix {
        route_ids: route_ids.to_vec(),
        scenario_ids: reports.iter().map(|r| r.spec.scenario_id.clone()).collect(),
        cells,
    })
}

/// Relative path -> lowercase hex SHA-256 of every emitted file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

struct Emitter<'a> {
    root: &'a Path,
    manifest: Manifest,
}

impl Emitter<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), AnalysisError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| AnalysisError::Io { path: parent.to_path_buf(), source })?;
        }
        fs::write(&path, bytes).map_err(|source| AnalysisError::Io { path: path.clone(), source })?;
        self.manifest.files.insert(rel.to_string(), hex(&Sha256::digest(bytes)));
        Ok(())
    }

    fn write_with(&mut self, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), AnalysisError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|source| AnalysisError::Io { path: self.root.join(rel), source })?;
        self.write(rel, &buf)
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), AnalysisError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|source| AnalysisError::Json { path: self.root.join(rel), source })?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Writes every report artifact under `out_dir` and returns the manifest,
/// which is also written as `manifest.json`.
///
/// `config` is echoed verbatim into `config.json` and into each scenario's
/// `report.json`. Route trends cover the top routes of the first report whose
/// spec is the unreduced baseline, or of the first report otherwise.
pub fn emit_reports(
    network: &TransitNetwork,
    reports: &[ScenarioReport],
    config: &serde_json::Value,
    out_dir: impl AsRef<Path>,
    top_routes: usize,
) -> Result<Manifest, AnalysisError> {
    let root = out_dir.as_ref();
    fs::create_dir_all(root).map_err(|source| AnalysisError::Io { path: root.to_path_buf(), source })?;
    let mut em = Emitter { root, manifest: Manifest::default() };
    em.write_json("config.json", config)?;

    if !reports.is_empty() {
        let tables = grid_tables(reports);
        em.write_with("grid_stats.csv", |w| tables.write_stats(w))?;
        em.write_with("grid_stranded.csv", |w| tables.stranded.write_csv(w))?;
        em.write_with("grid_infection.csv", |w| tables.infection.write_csv(w))?;
        em.write_with("grid_endangered.csv", |w| tables.endangered.write_csv(w))?;

        let reference = reports.iter().find(|r| r.spec.is_baseline()).unwrap_or(&reports[0]);
        let routes: Vec<String> =
            reference.route_risks.iter().take(top_routes).map(|r| r.route_id.clone()).collect();
        let trends = risk_trend_matrix(network, reports, &routes)?;
        em.write_with("risk_trends.csv", |w| trends.write_csv(w))?;

        for rep in reports {
            let dir = format!("scenarios/{}", rep.spec.scenario_id);
            em.write_json(&format!("{dir}/report.json"), &ReportEcho { config, report: rep })?;
            em.write_with(&format!("{dir}/trip_risk.csv"), |w| write_trip_risks(&rep.trip_risks, w))?;
            em.write_with(&format!("{dir}/route_risk.csv"), |w| {
                write_route_risks(&rep.route_risks[..rep.route_risks.len().min(top_routes)], w)
            })?;
            em.write_with(&format!("{dir}/contact_start_hist.csv"), |w| rep.histograms.contact_start.write_csv(w))?;
            em.write_with(&format!("{dir}/contact_duration_hist.csv"), |w| rep.histograms.duration.write_csv(w))?;
            em.write_with(&format!("{dir}/degree_hist.csv"), |w| rep.histograms.degree.write_csv(w))?;
        }
    }

    let manifest = em.manifest.clone();
    em.write_json(MANIFEST_FILE, &manifest)?;
    Ok(manifest)
}

#[derive(Serialize)]
struct ReportEcho<'a> {
    config: &'a serde_json::Value,
    report: &'a ScenarioReport,
}

pub fn write_trip_risks(risks: &[TripRisk], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "rank,trip_id,passenger_count,mean_infection_probability")?;
    for (i, r) in risks.iter().enumerate() {
        writeln!(w, "{},{},{},{}", i + 1, r.trip_id, r.passenger_count, r.mean_infection_probability)?;
    }
    Ok(())
}

pub fn write_route_risks(risks: &[RouteRisk], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "rank,route_id,distinct_passenger_count,mean_infection_probability")?;
    for (i, r) in risks.iter().enumerate() {
        writeln!(w, "{},{},{},{}", i + 1, r.route_id, r.distinct_passenger_count, r.mean_infection_probability)?;
    }
    Ok(())
}
