//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a gating criterion fails. Criterion 10 is reported only.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transit_contagion::analysis::emit_reports;
use transit_contagion::assignment::{logit_probabilities, simulate_loading, AssignmentParams};
use transit_contagion::contact::{build_contact_network, network_stats, ContactEdge, ContactNetwork, DegreeMode};
use transit_contagion::epidemic::{
    edge_probability, endangered_count, run_epidemic, run_epidemic_from, run_epidemic_with_threads, weight_network,
    EpiConfig, TransmissionParams, WeightedContactNetwork,
};
use transit_contagion::scenario::{
    default_grid, grid_tables, run_grid, GridMatrix, ScenarioReport, ScenarioSettings, ScenarioSpec,
};
use transit_contagion::synthgen::{generate_city, CityParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn edge_weights() -> Outcome {
    let params = TransmissionParams { p_max: 0.163, d_max: 7200 };
    let got: Vec<f64> = [0, 3600, 7200, 14400].iter().map(|&d| edge_probability(d, &params)).collect();
    let want = [0.0, 0.0815, 0.163, 0.163];
    let ok = got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 1e-12);
    outcome(ok, format!("weights {got:?}"))
}

fn line_abc() -> Outcome {
    let nodes = vec!["A".to_string(), "B".to_string(), "C".to_string()];
    let edges = vec![
        ContactEdge { u: 0, v: 1, trip: 0, t_start: 0, t_end: 60 },
        ContactEdge { u: 1, v: 2, trip: 0, t_start: 0, t_end: 60 },
    ];
    let net = ContactNetwork::from_parts(nodes, vec!["T".to_string()], edges);
    let w = WeightedContactNetwork {
        network: &net,
        weights: vec![0.5, 0.5],
        params: TransmissionParams { p_max: 0.5, d_max: 60 },
    };
    let cfg = EpiConfig { n_seeds: 1, horizon: 2, infectious_period: 5, n_runs: 100_000, master_seed: 2024 };
    let t = Instant::now();
    let est = run_epidemic_from(&w, &cfg, &[0]).expect("line epidemic");
    let took = t.elapsed();
    let (b, c) = (est.probability(1), est.probability(2));
    let ok = (b - 0.75).abs() <= 0.005 && (c - 0.25).abs() <= 0.005 && took < Duration::from_secs(5);
    outcome(ok, format!("P(B)={b:.4} P(C)={c:.4} in {}", secs(took)))
}

fn contact_equivalence() -> Outcome {
    let t = Instant::now();
    let mut mismatched = Vec::new();
    let mut edges = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trajs = common::random_trajectories(&mut rng, 500, 12);
        let net = build_contact_network(&trajs);
        edges += net.edge_count();
        if common::edge_keys(&net) != common::pairwise(&trajs) {
            mismatched.push(seed);
        }
    }
    let took = t.elapsed();
    let ok = mismatched.is_empty() && took < Duration::from_secs(30);
    outcome(ok, format!("100 seeds, {edges} edges, mismatched seeds {mismatched:?}, {}", secs(took)))
}

fn determinism() -> Outcome {
    let city = generate_city(&CityParams { n_persons: 600, ..CityParams::default() }).expect("city");
    let mut settings = ScenarioSettings::default();
    settings.epi = EpiConfig { n_seeds: 5, horizon: 5, infectious_period: 5, n_runs: 2000, master_seed: 99 };
    let specs = vec![ScenarioSpec::new(1.0, 1.0, 5), ScenarioSpec::new(0.665, 0.8, 5), ScenarioSpec::new(0.5, 0.5, 5)];
    let config = serde_json::json!({"master_seed": 99});
    let pipeline = || {
        let out = run_grid(&specs, &city.network, &city.demand, &settings).expect("grid");
        let dir = tempfile::tempdir().expect("tempdir");
        emit_reports(&city.network, &out.reports, &config, dir.path(), 10).expect("emit")
    };
    let (a, b) = (pipeline(), pipeline());
    let manifests_equal = a == b && !a.files.is_empty();

    let loaded = simulate_loading(&city.network, &city.demand, &AssignmentParams::default()).expect("loading");
    let contacts = build_contact_network(&loaded.trajectories);
    let w = weight_network(&contacts, &TransmissionParams { p_max: 0.163, d_max: 7200 });
    let cfg = EpiConfig { n_seeds: 5, n_runs: 5000, ..settings.epi };
    let runs: Vec<_> = [1, 4, 8].iter().map(|&t| run_epidemic_with_threads(&w, &cfg, t).expect("epidemic")).collect();
    let threads_equal = runs.windows(2).all(|p| p[0] == p[1]);
    outcome(
        manifests_equal && threads_equal,
        format!("{} files, manifests equal {manifests_equal}, 1/4/8 threads equal {threads_equal}", a.files.len()),
    )
}

/// Every pair of existing neighbouring cells along a row (capacity falling)
/// and a column (demand falling) that violates `ok(prev, next)`.
fn violations(m: &GridMatrix, ok: impl Fn(f64, f64) -> bool) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, row) in m.cells.iter().enumerate() {
        let present: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(j, c)| c.map(|v| (j, v))).collect();
        for p in present.windows(2) {
            if !ok(p[0].1, p[1].1) {
                bad.push(format!("d{} c{}->c{}", m.demand_levels[i], m.capacity_levels[p[0].0], m.capacity_levels[p[1].0]));
            }
        }
    }
    for j in 0..m.capacity_levels.len() {
        let present: Vec<(usize, f64)> =
            m.cells.iter().enumerate().filter_map(|(i, row)| row[j].map(|v| (i, v))).collect();
        for p in present.windows(2) {
            if !ok(p[0].1, p[1].1) {
                bad.push(format!("c{} d{}->d{}", m.capacity_levels[j], m.demand_levels[p[0].0], m.demand_levels[p[1].0]));
            }
        }
    }
    bad
}

fn default_city_grid() -> (Vec<ScenarioReport>, usize, Duration) {
    let city = generate_city(&CityParams::default()).expect("default city");
    let mut settings = ScenarioSettings::default();
    settings.epi = EpiConfig { n_seeds: 10, horizon: 5, infectious_period: 5, n_runs: 20_000, master_seed: 7 };
    let t = Instant::now();
    let out = run_grid(&default_grid(11), &city.network, &city.demand, &settings).expect("grid");
    for f in &out.failures {
        eprintln!("scenario failed: {f}");
    }
    (out.reports, out.failures.len(), t.elapsed())
}

fn infection_trend(reports: &[ScenarioReport], failures: usize, took: Duration) -> Outcome {
    let m = grid_tables(reports).infection;
    let bad = violations(&m, |prev, next| next <= prev);
    let base = m.get(1.0, 1.0);
    let corner = m.get(0.5, 0.5);
    let below = matches!((base, corner), (Some(b), Some(c)) if c < b);
    let ok = reports.len() == 21 && failures == 0 && bad.is_empty() && below && took < Duration::from_secs(600);
    outcome(
        ok,
        format!(
            "{} cells, baseline {:.4}, 50/50 {:.4}, violations {bad:?}, {}",
            reports.len(),
            base.unwrap_or(f64::NAN),
            corner.unwrap_or(f64::NAN),
            secs(took)
        ),
    )
}

fn stranded_trend(reports: &[ScenarioReport]) -> Outcome {
    let m = grid_tables(reports).stranded;
    // Along a row capacity falls, so stranded may only grow; along a column
    // demand falls, so it may only shrink.
    let mut bad = Vec::new();
    for (i, row) in m.cells.iter().enumerate() {
        let present: Vec<f64> = row.iter().flatten().copied().collect();
        if present.windows(2).any(|p| p[1] < p[0]) {
            bad.push(format!("row d{}", m.demand_levels[i]));
        }
    }
    for j in 0..m.capacity_levels.len() {
        let present: Vec<f64> = m.cells.iter().filter_map(|row| row[j]).collect();
        if present.windows(2).any(|p| p[1] > p[0]) {
            bad.push(format!("column c{}", m.capacity_levels[j]));
        }
    }
    let full: Vec<String> = m.cells[0].iter().map(|c| c.map_or("-".into(), |v| format!("{v}"))).collect();
    outcome(bad.is_empty(), format!("full-demand row {full:?}, violations {bad:?}"))
}

fn logit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=20);
        let us: Vec<f64> = (0..n).map(|_| rng.gen_range(-200.0..200.0)).collect();
        let theta = rng.gen_range(0.01..2.0);
        let p = logit_probabilities(&us, theta).expect("logit");
        let simplex = (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && p.iter().all(|&x| (0.0..=1.0).contains(&x));
        let shift = rng.gen_range(-1e3..1e3);
        let moved: Vec<f64> = us.iter().map(|u| u + shift).collect();
        let q = logit_probabilities(&moved, theta).expect("logit");
        let invariant = p.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-9);
        if !(simplex && invariant) {
            failures += 1;
        }
    }
    let sym = logit_probabilities(&[10.0, 10.0], 0.2).expect("logit");
    let sym_ok = sym.iter().all(|p| (p - 0.5).abs() <= 1e-9);
    outcome(failures == 0 && sym_ok, format!("1000 vectors, {failures} failures, [10,10] -> {sym:?}"))
}

fn degree_identity(reports: &[ScenarioReport]) -> Outcome {
    let mut checked = 0;
    let mut bad = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let net = build_contact_network(&common::random_trajectories(&mut rng, 200, 8));
        let sum: usize = (0..net.node_count() as u32).map(|v| net.degree(v)).sum();
        let stats = network_stats(&net, &[], DegreeMode::Multigraph);
        checked += 1;
        if sum != 2 * net.edge_count() || stats.mean_degree != (2 * stats.edges) as f64 / stats.nodes as f64 {
            bad += 1;
        }
    }
    for r in reports {
        checked += 1;
        let s = &r.stats;
        if s.mean_degree != (2 * s.edges) as f64 / s.nodes as f64 {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{checked} networks, {bad} mismatches"))
}

fn endangered_boundary() -> Outcome {
    let probs = [0.5, 0.5 + f64::EPSILON];
    let n = endangered_count(&probs, 0.5);
    outcome(n == 1, format!("[0.5, 0.5+eps] -> {n} endangered"))
}

fn random_large_network(nodes: usize, edges: usize) -> ContactNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let names: Vec<String> = (0..nodes).map(|i| format!("N{i:06}")).collect();
    let trips: Vec<String> = (0..1000).map(|i| format!("T{i:04}")).collect();
    let list = (0..edges)
        .map(|_| {
            let u = rng.gen_range(0..nodes as u32);
            let mut v = rng.gen_range(0..nodes as u32 - 1);
            if v >= u {
                v += 1;
            }
            let start = rng.gen_range(0..20 * 3600);
            ContactEdge {
                u: u.min(v),
                v: u.max(v),
                trip: rng.gen_range(0..1000),
                t_start: start,
                t_end: start + rng.gen_range(1..3600),
            }
        })
        .collect();
    ContactNetwork::from_parts(names, trips, list)
}

fn performance() -> Outcome {
    let net = random_large_network(10_000, 500_000);
    let w = weight_network(&net, &TransmissionParams { p_max: 0.163, d_max: 7200 });
    let full = EpiConfig { n_seeds: 100, horizon: 5, infectious_period: 5, n_runs: 100_000, master_seed: 1 };
    let threads = rayon::current_num_threads();
    // Calibrate on a slice first; run the full job only if it can fit.
    let probe = EpiConfig { n_runs: 1000, ..full };
    let t = Instant::now();
    run_epidemic(&w, &probe).expect("probe");
    let projected = t.elapsed().as_secs_f64() * (full.n_runs / probe.n_runs) as f64;
    if projected > 300.0 {
        return outcome(
            false,
            format!("projected {projected:.0}s from 1000 runs on {threads} thread(s), full run skipped"),
        );
    }
    let t = Instant::now();
    run_epidemic(&w, &full).expect("full");
    let took = t.elapsed();
    outcome(took <= Duration::from_secs(300), format!("{} on {threads} thread(s)", secs(took)))
}

fn main() -> ExitCode {
    let mut results: BTreeMap<u32, (bool, Outcome)> = BTreeMap::new();
    let mut record = |n: u32, gating: bool, o: Outcome| {
        println!("{} criterion {n}: {}{}", if o.pass { "PASS" } else { "FAIL" }, o.detail, if gating { "" } else { " (non-gating)" });
        results.insert(n, (gating, o));
    };
    record(1, true, edge_weights());
    record(2, true, line_abc());
    record(3, true, contact_equivalence());
    record(4, true, determinism());
    let (reports, failures, took) = default_city_grid();
    record(5, true, infection_trend(&reports, failures, took));
    record(6, true, stranded_trend(&reports));
    record(7, true, logit());
    record(8, true, degree_identity(&reports));
    record(9, true, endangered_boundary());
    record(10, false, performance());

    let failed: Vec<u32> = results.iter().filter(|(_, (g, o))| *g && !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all gating criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
