//! Command-line driver: ingest a feed and demand, assign passengers, build
//! the contact network, simulate spreading and run scenario grids.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use config::RunConfig;
use transit_contagion::analysis::{
    emit_reports, route_risk_ranking, trip_risk_ranking, write_route_risks, write_trip_risks,
};
use transit_contagion::assignment::{
    read_trajectories, simulate_loading, write_stranded, write_trajectories, StrandReason,
};
use transit_contagion::contact::{
    build_contact_network, network_stats, read_contact_edges, read_nodes, segment_clique_sizes, temporal_histograms,
    write_contact_edges, write_nodes,
};
use transit_contagion::epidemic::{
    endangered_count, global_infection_rate, read_probabilities, run_epidemic, weight_network, InfectionEstimates,
    TransmissionParams,
};
use transit_contagion::feed::{parse_demand, parse_transit_feed, validate_feed, DemandSet, TransitNetwork};
use transit_contagion::scenario::{reduce_demand, resolve_pmax, run_grid, scale_capacities, ScenarioSpec};
use transit_contagion::synthgen::{generate_city, CityParams};

/// Exit code of a grid run in which some scenarios failed.
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "transit-contagion", version, about = "Transit contact networks and epidemic risk")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Command-line values take precedence over the config file.
#[derive(Args, Default)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Transit feed directory.
    #[arg(long, global = true)]
    feed: Option<PathBuf>,
    /// Demand CSV.
    #[arg(long, global = true)]
    demand_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Logit dispersion per utility-minute.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Candidate paths per request (K).
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Arrival window before the preferred arrival, in minutes.
    #[arg(long, global = true)]
    window_min: Option<f64>,
    /// Seed for route choice, demand sampling and the epidemic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Demand keep fractions, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    demand: Option<Vec<f64>>,
    /// Capacity fractions, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    capacity: Option<Vec<f64>>,
    /// Interpolate P_max linearly for capacity fractions off the mapping.
    #[arg(long, global = true)]
    interpolate_pmax: bool,
    /// Monte Carlo runs (k).
    #[arg(long, global = true)]
    runs: Option<i64>,
    /// Initially infected passengers per run.
    #[arg(long, global = true)]
    n_seeds: Option<i64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check the feed and the demand.
    Ingest,
    /// Assign passengers to vehicles for one scenario.
    Assign,
    /// Build the contact network from trajectories.
    BuildNet {
        /// Defaults to `<out>/trajectories.csv`.
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
    /// Simulate spreading on a contact network.
    Simulate {
        /// Defaults to `<out>/contact_edges.csv`.
        #[arg(long)]
        contacts: Option<PathBuf>,
        /// Defaults to `<out>/nodes.csv`.
        #[arg(long)]
        nodes: Option<PathBuf>,
    },
    /// Run the scenario grid and write all reports.
    Grid,
    /// Rank trips and routes from trajectories and infection estimates.
    Report {
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[arg(long)]
        estimates: Option<PathBuf>,
    },
    /// Ingest, then run the grid.
    Run,
    /// Check config and inputs without simulating.
    Validate,
    /// Generate a synthetic city (feed and demand).
    Synth {
        /// TOML file of generator parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        persons: Option<usize>,
    },
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.feed {
            c.paths.feed = v.clone();
        }
        if let Some(v) = &self.demand_file {
            c.paths.demand = v.clone();
        }
        if let Some(v) = &self.out {
            c.paths.out = v.clone();
        }
        if let Some(v) = self.theta {
            c.assignment.theta = v;
        }
        if let Some(v) = self.paths {
            c.assignment.paths = v;
        }
        if let Some(v) = self.window_min {
            c.assignment.window_min = v;
        }
        if let Some(v) = self.seed {
            c.assignment.seed = v;
            c.epidemic.master_seed = v;
            c.grid.seed = v;
        }
        if let Some(v) = &self.demand {
            c.grid.demand = v.clone();
        }
        if let Some(v) = &self.capacity {
            c.grid.capacity = v.clone();
        }
        if self.interpolate_pmax {
            c.grid.interpolate_pmax = true;
        }
        if let Some(v) = self.runs {
            c.epidemic.runs = v;
        }
        if let Some(v) = self.n_seeds {
            c.epidemic.n_seeds = v;
        }
        if let Some(v) = self.threads {
            c.epidemic.threads = v;
        }
        if c.paths.out.as_os_str().is_empty() {
            c.paths.out = PathBuf::from("out");
        }
        Ok(c)
    }

    /// The single scenario of step-wise commands: unreduced unless exactly
    /// one demand and one capacity fraction were given on the command line.
    fn single_spec(&self, c: &RunConfig) -> Result<ScenarioSpec> {
        let one = |v: &Option<Vec<f64>>, flag: &str| match v.as_deref() {
            None => Ok(1.0),
            Some([x]) => Ok(*x),
            Some(_) => bail!("--{flag} takes a single fraction for this command"),
        };
        let spec = ScenarioSpec::new(one(&self.demand, "demand")?, one(&self.capacity, "capacity")?, c.grid.seed);
        spec.validate()?;
        Ok(spec)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> Result<ExitCode> {
    let config = cli.opts.resolve()?;
    if let Command::Synth { params, persons } = &cli.command {
        return synth(&config, params.as_deref(), *persons, cli.opts.seed).map(|_| ExitCode::SUCCESS);
    }
    config.validate()?;
    if config.epidemic.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(config.epidemic.threads).build_global()?;
    }
    let out = &config.paths.out;
    match &cli.command {
        Command::Validate => {
            let (net, demand) = load_inputs(&config)?;
            check_demand_stops(&net, &demand)?;
            eprintln!("config and inputs are valid");
        }
        Command::Ingest => ingest(&config)?,
        Command::Assign => assign(&config, &cli.opts.single_spec(&config)?)?,
        Command::BuildNet { trajectories } => {
            let spec = cli.opts.single_spec(&config)?;
            build_net(&config, &spec, &trajectories.clone().unwrap_or_else(|| out.join("trajectories.csv")))?
        }
        Command::Simulate { contacts, nodes } => simulate(
            &config,
            &cli.opts.single_spec(&config)?,
            &contacts.clone().unwrap_or_else(|| out.join("contact_edges.csv")),
            &nodes.clone().unwrap_or_else(|| out.join("nodes.csv")),
        )?,
        Command::Report { trajectories, estimates } => report(
            &config,
            &trajectories.clone().unwrap_or_else(|| out.join("trajectories.csv")),
            &estimates.clone().unwrap_or_else(|| out.join("infection_estimates.csv")),
        )?,
        Command::Grid => return grid(&config),
        Command::Run => {
            ingest(&config)?;
            return grid(&config);
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_inputs(c: &RunConfig) -> Result<(TransitNetwork, DemandSet)> {
    if c.paths.feed.as_os_str().is_empty() {
        bail!("no feed directory given (--feed or paths.feed)");
    }
    if c.paths.demand.as_os_str().is_empty() {
        bail!("no demand file given (--demand-file or paths.demand)");
    }
    let net = parse_transit_feed(&c.paths.feed).with_context(|| format!("feed {}", c.paths.feed.display()))?;
    let demand = parse_demand(&c.paths.demand).with_context(|| format!("demand {}", c.paths.demand.display()))?;
    eprintln!(
        "loaded {} stops, {} trips, {} requests from {} persons",
        net.stops().len(),
        net.trips().len(),
        demand.len(),
        demand.person_count()
    );
    Ok((net, demand))
}

fn unknown_demand_stops(net: &TransitNetwork, demand: &DemandSet) -> Vec<String> {
    let mut unknown: Vec<String> = demand
        .requests()
        .iter()
        .flat_map(|r| [&r.origin, &r.destination])
        .filter(|s| net.stop_idx(s).is_none())
        .cloned()
        .collect();
    unknown.sort();
    unknown.dedup();
    unknown
}

fn check_demand_stops(net: &TransitNetwork, demand: &DemandSet) -> Result<()> {
    let unknown = unknown_demand_stops(net, demand);
    if !unknown.is_empty() {
        bail!("demand references {} unknown stops, e.g. `{}`", unknown.len(), unknown[0]);
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn ingest(c: &RunConfig) -> Result<()> {
    let (net, demand) = load_inputs(c)?;
    let report = validate_feed(&net);
    if !report.is_clean() {
        eprintln!("feed has {} issues, see feed_summary.json", report.issue_count());
    }
    check_demand_stops(&net, &demand)?;
    write_json(
        &c.paths.out.join("feed_summary.json"),
        &json!({
            "config": c.echo(),
            "feed": net.counts(),
            "validation": report,
            "demand": { "persons": demand.person_count(), "requests": demand.len() },
        }),
    )
}

fn scenario_inputs(c: &RunConfig, spec: &ScenarioSpec) -> Result<(TransitNetwork, DemandSet)> {
    let (net, demand) = load_inputs(c)?;
    Ok((scale_capacities(&net, spec.capacity_fraction), reduce_demand(&demand, spec.demand_keep_fraction, spec.seed)))
}

fn assign(c: &RunConfig, spec: &ScenarioSpec) -> Result<()> {
    let (net, demand) = scenario_inputs(c, spec)?;
    let result = simulate_loading(&net, &demand, &c.assignment_params()?)?;
    let out = &c.paths.out;
    write_file(&out.join("trajectories.csv"), |w| Ok(write_trajectories(&result.trajectories, w)?))?;
    write_file(&out.join("stranded.csv"), |w| Ok(write_stranded(&result.stranded, w)?))?;
    let count = |r| result.stranded.iter().filter(|s| s.reason == r).count();
    eprintln!("served {} persons, stranded {}", result.trajectories.len(), result.stranded.len());
    write_json(
        &out.join("assignment_summary.json"),
        &json!({
            "config": c.echo(),
            "scenario": spec,
            "persons": demand.person_count(),
            "requests": demand.len(),
            "served": result.trajectories.len(),
            "stranded": result.stranded.len(),
            "stranded_no_path": count(StrandReason::NoPath),
            "stranded_capacity": count(StrandReason::Capacity),
        }),
    )
}

fn build_net(c: &RunConfig, spec: &ScenarioSpec, trajectories: &Path) -> Result<()> {
    let trajs = read_trajectories(open(trajectories)?).with_context(|| format!("{}", trajectories.display()))?;
    let net = parse_transit_feed(&c.paths.feed).with_context(|| format!("feed {}", c.paths.feed.display()))?;
    let net = scale_capacities(&net, spec.capacity_fraction);
    let contacts = build_contact_network(&trajs);
    let cliques = segment_clique_sizes(&net, &trajs)?;
    let stats = network_stats(&contacts, &cliques, c.analysis.degree_mode);
    let hist = temporal_histograms(&contacts);
    let out = &c.paths.out;
    write_file(&out.join("contact_edges.csv"), |w| Ok(write_contact_edges(&contacts, w)?))?;
    write_file(&out.join("nodes.csv"), |w| Ok(write_nodes(&contacts, w)?))?;
    write_file(&out.join("contact_start_hist.csv"), |w| Ok(hist.contact_start.write_csv(w)?))?;
    write_file(&out.join("contact_duration_hist.csv"), |w| Ok(hist.duration.write_csv(w)?))?;
    write_file(&out.join("degree_hist.csv"), |w| Ok(hist.degree.write_csv(w)?))?;
    write_json(&out.join("stats.json"), &json!({ "config": c.echo(), "scenario": spec, "stats": stats }))
}

fn simulate(c: &RunConfig, spec: &ScenarioSpec, contacts: &Path, nodes: &Path) -> Result<()> {
    let nodes = read_nodes(open(nodes)?).with_context(|| format!("{}", nodes.display()))?;
    let net = read_contact_edges(open(contacts)?, nodes).with_context(|| format!("{}", contacts.display()))?;
    let (p_max, interpolated) = resolve_pmax(spec.capacity_fraction, c.pmax_mode())?;
    if interpolated {
        eprintln!("warning: P_max {p_max} for capacity {} is extrapolated", spec.capacity_fraction);
    }
    let params = TransmissionParams { p_max, d_max: c.d_max()? };
    let epi = c.epi_config()?;
    let est = run_epidemic(&weight_network(&net, &params), &epi)?;
    let probs = est.probabilities();
    let out = &c.paths.out;
    write_file(&out.join("infection_estimates.csv"), |w| Ok(est.write_csv(w)?))?;
    write_json(
        &out.join("epi_summary.json"),
        &json!({
            "config": c.echo(),
            "scenario": spec,
            "p_max": p_max,
            "p_max_interpolated": interpolated,
            "d_max": params.d_max,
            "master_seed": epi.master_seed,
            "runs": epi.n_runs,
            "global_rate": global_infection_rate(&probs),
            "endangered_count": endangered_count(&probs, c.analysis.endangered_threshold),
        }),
    )
}

fn report(c: &RunConfig, trajectories: &Path, estimates: &Path) -> Result<()> {
    let net = parse_transit_feed(&c.paths.feed).with_context(|| format!("feed {}", c.paths.feed.display()))?;
    let trajs = read_trajectories(open(trajectories)?).with_context(|| format!("{}", trajectories.display()))?;
    let pairs = read_probabilities(open(estimates)?).with_context(|| format!("{}", estimates.display()))?;
    let est = InfectionEstimates::from_probabilities(pairs, c.epi_config()?.n_runs);
    let a = &c.analysis;
    let trips = trip_risk_ranking(&trajs, &est, a.top_trips, a.min_passengers)?;
    let routes = route_risk_ranking(&net, &trajs, &est, a.top_routes, a.min_passengers, a.route_aggregation)?;
    let out = &c.paths.out;
    write_file(&out.join("trip_risk.csv"), |w| Ok(write_trip_risks(&trips, w)?))?;
    write_file(&out.join("route_risk.csv"), |w| Ok(write_route_risks(&routes, w)?))?;
    write_json(
        &out.join("report_summary.json"),
        &json!({ "config": c.echo(), "trips_ranked": trips.len(), "routes_ranked": routes.len() }),
    )
}

fn grid(c: &RunConfig) -> Result<ExitCode> {
    let specs = c.specs()?;
    let settings = c.settings()?;
    let (net, demand) = load_inputs(c)?;
    check_demand_stops(&net, &demand)?;
    eprintln!("running {} scenarios", specs.len());
    let outcome = run_grid(&specs, &net, &demand, &settings)?;
    let manifest = emit_reports(&net, &outcome.reports, &c.echo(), &c.paths.out, c.analysis.top_routes)?;
    eprintln!("wrote {} files to {}", manifest.files.len() + 1, c.paths.out.display());
    if outcome.failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &outcome.failures {
        eprintln!("error: {f}");
    }
    eprintln!("{} of {} scenarios failed", outcome.failures.len(), specs.len());
    Ok(ExitCode::from(EXIT_PARTIAL))
}

fn synth(c: &RunConfig, params: Option<&Path>, persons: Option<usize>, seed: Option<u64>) -> Result<()> {
    let mut p: CityParams = match params {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => CityParams::default(),
    };
    if let Some(n) = persons {
        p.n_persons = n;
    }
    if let Some(s) = seed {
        p.seed = s;
    }
    let city = generate_city(&p)?;
    city.write(&c.paths.out).with_context(|| format!("writing city to {}", c.paths.out.display()))?;
    eprintln!(
        "wrote {} stops, {} trips, {} requests to {}",
        city.manifest.feed.stops,
        city.manifest.feed.trips,
        city.manifest.requests,
        c.paths.out.display()
    );
    Ok(())
}
