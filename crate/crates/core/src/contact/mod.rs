//! Temporal passenger contact network.
//!
//! Nodes are served passengers; an edge joins two passengers for each vehicle
//! trip on which their rides overlap for a positive time. Pairs that share
//! several trips get parallel edges.

mod build;
mod csr;
mod io;
mod stats;

use thiserror::Error;

use crate::time::Seconds;

pub use build::{build_contact_network, overlap};
pub use csr::Csr;
pub use io::{read_contact_edges, read_nodes, write_contact_edges, write_nodes};
pub use stats::{
    network_stats, segment_clique_sizes, temporal_histograms, DegreeMode, Histogram, NetworkStats, TemporalHistograms,
};

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("segments belong to different trips (`{0}` vs `{1}`)")]
    DifferentTrips(String, String),
    #[error("unknown person `{0}` in contact edge")]
    UnknownPerson(String),
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

/// One co-travel contact. `u < v` are node indices; `trip` indexes
/// [`ContactNetwork::trip_ids`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContactEdge {
    pub u: u32,
    pub v: u32,
    pub trip: u32,
    pub t_start: Seconds,
    pub t_end: Seconds,
}

impl ContactEdge {
    pub fn duration(&self) -> Seconds {
        self.t_end - self.t_start
    }
}

/// Frozen contact multigraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactNetwork {
    nodes: Vec<String>,
    trip_ids: Vec<String>,
    edges: Vec<ContactEdge>,
    adjacency: Csr,
}

impl ContactNetwork {
    /// `nodes` and `trip_ids` must be sorted and distinct; edges are put in
    /// canonical order (trip, u, v, start).
    pub fn from_parts(nodes: Vec<String>, trip_ids: Vec<String>, mut edges: Vec<ContactEdge>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(trip_ids.windows(2).all(|w| w[0] < w[1]));
        edges.sort_by_key(|e| (e.trip, e.u, e.v, e.t_start, e.t_end));
        let adjacency = Csr::from_edges(nodes.len(), edges.iter().map(|e| (e.u, e.v)));
        ContactNetwork { nodes, trip_ids, edges, adjacency }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, person: &str) -> Option<u32> {
        self.nodes.binary_search_by(|p| p.as_str().cmp(person)).ok().map(|i| i as u32)
    }

    pub fn trip_ids(&self) -> &[String] {
        &self.trip_ids
    }

    pub fn trip_id(&self, edge: &ContactEdge) -> &str {
        &self.trip_ids[edge.trip as usize]
    }

    pub fn edges(&self) -> &[ContactEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    /// Incident edge count (parallel edges counted).
    pub fn degree(&self, node: u32) -> usize {
        self.adjacency.degree(node)
    }
}
