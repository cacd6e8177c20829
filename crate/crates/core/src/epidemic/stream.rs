//! Counter-based random numbers.
//!
//! Every uniform variate is a pure function of its coordinates (master seed,
//! run, iteration, directed edge), so a run's outcome does not depend on the
//! order in which infection attempts happen or on which worker executes it.
//!
//! Edges and nodes are addressed by hashes of their identities (person ids,
//! trip id) rather than by index. Two networks that share a contact therefore
//! draw the same variates for it, which keeps scenario comparisons on common
//! random numbers even when the networks differ elsewhere.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the bytes, finished with [`mix64`].
pub(crate) fn id_hash(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix64(h)
}

/// Identity of a contact between persons `u < v` on a trip over
/// `[start, end)`; `ordinal` tells apart otherwise identical edges.
pub(crate) fn edge_key(u: u64, v: u64, trip: u64, start: u32, end: u32, ordinal: u32) -> u64 {
    let span = (u64::from(start) << 32 | u64::from(end)).wrapping_add(u64::from(ordinal).wrapping_mul(GAMMA));
    mix64(u ^ mix64(v ^ mix64(trip.wrapping_add(GAMMA) ^ mix64(span))))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RunStream {
    key: u64,
}

impl RunStream {
    pub fn new(master_seed: u64, run: u64) -> Self {
        let k = mix64(master_seed.wrapping_add(GAMMA));
        RunStream { key: mix64(k ^ run.wrapping_add(1).wrapping_mul(0xd1b5_4a32_d192_ed03)) }
    }

    /// Seed-selection priority of a node; the lowest priorities are seeded.
    #[inline]
    pub fn seed_priority(self, node_key: u64) -> u64 {
        mix64(self.key ^ node_key.wrapping_mul(0x9fb2_1c65_1e98_df25))
    }

    pub fn iteration(self, iteration: u32) -> IterationStream {
        IterationStream { key: mix64(self.key ^ u64::from(iteration).wrapping_add(1).wrapping_mul(0xaef1_7502_108e_f2d9)) }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IterationStream {
    key: u64,
}

impl IterationStream {
    /// Uniform in [0, 1) for an attempt along the edge with identity
    /// `edge_key` in direction `dir` (0: u->v, 1: v->u).
    #[inline]
    pub fn uniform(self, edge_key: u64, dir: u32) -> f64 {
        let counter = mix64(edge_key ^ u64::from(dir).wrapping_add(1).wrapping_mul(GAMMA));
        (mix64(self.key ^ counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
