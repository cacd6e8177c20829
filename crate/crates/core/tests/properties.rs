//! Invariants of the individual pipeline stages.

mod common;

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transit_contagion::assignment::{
    logit_probabilities, segment_loads, simulate_loading, AssignmentError, AssignmentParams, AssignmentResult,
};
use transit_contagion::feed::{parse_transit_feed, write_transit_feed, DemandSet, TransitNetwork};
use transit_contagion::scenario::{pmax_for_capacity, reduce_demand, scale_capacities, PMAX_TABLE};
use transit_contagion::synthgen::{generate_city, CityParams};

fn random_demand(rng: &mut impl Rng, net: &TransitNetwork, persons: usize) -> DemandSet {
    let n = net.stops().len();
    let mut rows = Vec::new();
    for p in 0..persons {
        for _ in 0..rng.gen_range(1..=2) {
            let o = rng.gen_range(0..n);
            let d = (o + rng.gen_range(1..n)) % n;
            rows.push((
                format!("P{p:03}"),
                net.stops()[o].id.clone(),
                net.stops()[d].id.clone(),
                6 * 3600 + rng.gen_range(0..=30) * 300,
            ));
        }
    }
    DemandSet::from_rows(rows)
}

fn check_assignment(net: &TransitNetwork, demand: &DemandSet, result: &AssignmentResult) {
    // Capacity feasibility on every segment of every trip.
    let loads = segment_loads(net, &result.trajectories).unwrap();
    for (trip_id, load) in &loads {
        let cap = net.trip(net.trip_idx(trip_id).unwrap()).capacity;
        assert!(load.iter().all(|&l| l <= cap), "trip {trip_id} over capacity: {load:?} > {cap}");
    }
    // Stranded persons contribute nothing.
    let stranded: HashSet<&str> = result.stranded.iter().map(|s| s.person_id.as_str()).collect();
    assert_eq!(stranded.len(), result.stranded.len());
    for t in &result.trajectories {
        assert!(t.completed);
        assert!(!stranded.contains(t.person_id.as_str()));
        assert!(!t.segments.is_empty());
        for s in &t.segments {
            assert!(s.alight_time > s.board_time);
        }
        for w in t.segments.windows(2) {
            assert!(w[1].board_time >= w[0].alight_time);
        }
    }
    // Every person is either served or stranded.
    let served: BTreeSet<&str> = result.trajectories.iter().map(|t| t.person_id.as_str()).collect();
    assert_eq!(served.len() + stranded.len(), demand.person_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn logit_is_a_distribution(us in prop::collection::vec(-500.0f64..500.0, 1..30), theta in 0.01f64..5.0) {
        let p = logit_probabilities(&us, theta).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn logit_shift_invariant(us in prop::collection::vec(0.0f64..200.0, 1..20), shift in -1e3f64..1e3, theta in 0.01f64..2.0) {
        let a = logit_probabilities(&us, theta).unwrap();
        let shifted: Vec<f64> = us.iter().map(|u| u + shift).collect();
        let b = logit_probabilities(&shifted, theta).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn logit_closed_forms() {
    let theta = 0.2;
    let p = logit_probabilities(&[0.0, 3f64.ln() / theta], theta).unwrap();
    assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12);
    assert_eq!(logit_probabilities(&[42.0], theta).unwrap(), vec![1.0]);
    assert!(matches!(logit_probabilities(&[], theta), Err(AssignmentError::EmptyChoiceSet)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn feed_round_trips_through_files(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_network(&mut rng, 8);
        let dir = tempfile::tempdir().unwrap();
        write_transit_feed(&net, dir.path()).unwrap();
        let back = parse_transit_feed(dir.path()).unwrap();
        prop_assert_eq!(back.stops(), net.stops());
        prop_assert_eq!(back.routes(), net.routes());
        prop_assert_eq!(back.trips(), net.trips());
        prop_assert_eq!(back.transfers(), net.transfers());
    }

    #[test]
    fn loading_respects_capacity_and_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_network(&mut rng, 8);
        let demand = random_demand(&mut rng, &net, 40);
        let params = AssignmentParams { seed, ..AssignmentParams::default() };
        let a = simulate_loading(&net, &demand, &params).unwrap();
        check_assignment(&net, &demand, &a);
        let b = simulate_loading(&net, &demand, &params).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn retained_count_is_exact_floor(n in 1usize..400, keep in 0.01f64..=1.0, seed in any::<u64>()) {
        let rows: Vec<(String, String, String, u32)> =
            (0..n).map(|i| (format!("p{i}"), "a".to_string(), "b".to_string(), 30_000)).collect();
        let demand = DemandSet::from_rows(rows);
        let kept = reduce_demand(&demand, keep, seed);
        prop_assert_eq!(kept.person_count(), (keep * n as f64 + 1e-9).floor() as usize);
    }

    #[test]
    fn pmax_rejects_everything_off_the_table(f in 0.0f64..=1.0) {
        let on_key = PMAX_TABLE.iter().any(|(k, _)| (k - f).abs() <= 1e-9);
        prop_assert_eq!(pmax_for_capacity(f).is_ok(), on_key);
    }
}

fn small_city() -> (TransitNetwork, DemandSet) {
    let city = generate_city(&CityParams { n_persons: 600, default_capacity: 20, ..CityParams::default() }).unwrap();
    (city.network, city.demand)
}

#[test]
fn synthetic_city_loading_invariants() {
    let (net, demand) = small_city();
    let params = AssignmentParams::default();
    let full = simulate_loading(&net, &demand, &params).unwrap();
    check_assignment(&net, &demand, &full);
    let half = scale_capacities(&net, 0.5);
    let reduced = simulate_loading(&half, &demand, &params).unwrap();
    check_assignment(&half, &demand, &reduced);
    assert!(reduced.stranded.len() >= full.stranded.len());
    assert!(reduced.stranded.len() > full.stranded.len(), "halving capacity should bind somewhere");
}

#[test]
fn demand_reduction_properties() {
    let (_, demand) = small_city();
    let n = demand.person_count();
    assert_eq!(reduce_demand(&demand, 1.0, 3), demand);
    let a = reduce_demand(&demand, 0.83, 3);
    assert_eq!(a.person_count(), (0.83 * n as f64).floor() as usize);
    assert_eq!(a, reduce_demand(&demand, 0.83, 3));
    // Every kept person keeps all of their requests.
    for p in a.persons() {
        let before = demand.requests().iter().filter(|r| r.person_id == p).count();
        let after = a.requests().iter().filter(|r| r.person_id == p).count();
        assert_eq!(before, after);
    }
    // Nested across fractions for a fixed seed.
    let b: HashSet<String> = reduce_demand(&demand, 0.5, 3).persons().into_iter().map(String::from).collect();
    assert!(b.iter().all(|p| a.persons().contains(&p.as_str())));
}

#[test]
fn independent_seeds_overlap_like_keep_squared() {
    let rows: Vec<(String, String, String, u32)> =
        (0..4000).map(|i| (format!("p{i:04}"), "a".to_string(), "b".to_string(), 30_000)).collect();
    let demand = DemandSet::from_rows(rows);
    let keep = 0.5;
    let mut total = 0.0;
    for s in 0..10u64 {
        let x: HashSet<String> = reduce_demand(&demand, keep, 2 * s).persons().into_iter().map(String::from).collect();
        let y = reduce_demand(&demand, keep, 2 * s + 1);
        let common = y.persons().iter().filter(|p| x.contains(**p)).count();
        total += common as f64 / 4000.0;
    }
    // Hypergeometric: mean keep^2, sd about 0.004 per draw.
    assert!((total / 10.0 - keep * keep).abs() < 0.01, "{}", total / 10.0);
}

#[test]
fn capacity_scaling_floors_at_one() {
    use common::{bus, stop, trip};
    let net = TransitNetwork::from_rows(
        vec![stop("A"), stop("B")],
        vec![bus("r")],
        vec![trip("t48", "r", 48, &[("A", 0), ("B", 60)]), trip("t1", "r", 1, &[("A", 0), ("B", 60)])],
        vec![],
    )
    .unwrap();
    let half = scale_capacities(&net, 0.5);
    assert_eq!(half.trip(half.trip_idx("t48").unwrap()).capacity, 24);
    assert_eq!(half.trip(half.trip_idx("t1").unwrap()).capacity, 1);
    assert_eq!(scale_capacities(&net, 1.0).trips(), net.trips());
    let seventy = scale_capacities(&net, 0.7);
    assert_eq!(seventy.trip(seventy.trip_idx("t48").unwrap()).capacity, 33);
}
