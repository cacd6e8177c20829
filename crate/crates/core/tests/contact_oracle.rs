//! Contact network construction against pairwise interval overlap.

mod common;

use common::{edge_keys, pairwise};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transit_contagion::assignment::{RideSegment, Trajectory};
use transit_contagion::contact::{
    build_contact_network, network_stats, read_contact_edges, write_contact_edges, DegreeMode,
};

fn repeat_rides(rng: &mut impl Rng, n: usize) -> Vec<Trajectory> {
    // Persons may ride the same trip more than once here.
    (0..n)
        .map(|i| Trajectory {
            person_id: format!("Q{i:03}"),
            segments: (0..rng.gen_range(1..=4))
                .map(|_| {
                    let b = rng.gen_range(0..40) * 60;
                    RideSegment {
                        trip_id: format!("T{}", rng.gen_range(0..3)),
                        board_stop: "x".into(),
                        board_time: b,
                        alight_stop: "y".into(),
                        alight_time: b + rng.gen_range(0..20) * 60,
                    }
                })
                .collect(),
            completed: true,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweep_equals_pairwise(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trajs = common::random_trajectories(&mut rng, 120, 6);
        let net = build_contact_network(&trajs);
        prop_assert_eq!(edge_keys(&net), pairwise(&trajs));
    }

    #[test]
    fn repeated_rides_keep_longest_overlap(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trajs = repeat_rides(&mut rng, 40);
        let net = build_contact_network(&trajs);
        prop_assert_eq!(edge_keys(&net), pairwise(&trajs));
    }

    #[test]
    fn structural_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trajs = common::random_trajectories(&mut rng, 80, 5);
        let net = build_contact_network(&trajs);
        for e in net.edges() {
            prop_assert!(e.u < e.v);
            prop_assert!(e.t_end > e.t_start);
        }
        // Degree sum is twice the edge count, and the mean degree is exact.
        let sum: usize = (0..net.node_count() as u32).map(|v| net.degree(v)).sum();
        prop_assert_eq!(sum, 2 * net.edge_count());
        let stats = network_stats(&net, &[], DegreeMode::Multigraph);
        prop_assert_eq!(stats.mean_degree, (2 * net.edge_count()) as f64 / net.node_count() as f64);
        // Input order does not matter.
        let mut shuffled = trajs.clone();
        shuffled.reverse();
        let again = build_contact_network(&shuffled);
        prop_assert_eq!(again.edges(), net.edges());
        // CSV round trip.
        let mut buf = Vec::new();
        write_contact_edges(&net, &mut buf).unwrap();
        let back = read_contact_edges(buf.as_slice(), net.nodes().to_vec()).unwrap();
        prop_assert_eq!(back.edges(), net.edges());
    }
}

#[test]
fn isolated_riders_are_nodes() {
    let t = |p: &str, trip: &str, b: u32, a: u32| Trajectory {
        person_id: p.into(),
        segments: vec![RideSegment { trip_id: trip.into(), board_stop: "s".into(), board_time: b, alight_stop: "z".into(), alight_time: a }],
        completed: true,
    };
    // Touching at one instant is no contact.
    let net = build_contact_network(&[t("a", "T", 0, 600), t("b", "T", 600, 900), t("c", "U", 0, 60)]);
    assert_eq!(net.node_count(), 3);
    assert_eq!(net.edge_count(), 0);
}
