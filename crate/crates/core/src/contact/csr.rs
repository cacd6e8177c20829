/// Compressed sparse row adjacency of an undirected multigraph. Each edge
/// appears once in the row of each endpoint, tagged with its edge id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Csr {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    edge_ids: Vec<u32>,
}

impl Csr {
    /// Rows list incident edges in ascending edge-id order.
    pub fn from_edges(node_count: usize, edges: impl Iterator<Item = (u32, u32)> + Clone) -> Csr {
        let mut offsets = vec![0usize; node_count + 1];
        for (u, v) in edges.clone() {
            offsets[u as usize + 1] += 1;
            offsets[v as usize + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let total = offsets[node_count];
        let mut neighbors = vec![0u32; total];
        let mut edge_ids = vec![0u32; total];
        for (e, (u, v)) in edges.enumerate() {
            for (a, b) in [(u, v), (v, u)] {
                let slot = &mut cursor[a as usize];
                neighbors[*slot] = b;
                edge_ids[*slot] = e as u32;
                *slot += 1;
            }
        }
        Csr { offsets, neighbors, edge_ids }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn degree(&self, node: u32) -> usize {
        self.offsets[node as usize + 1] - self.offsets[node as usize]
    }

    /// `(neighbor, edge id)` pairs of `node`.
    pub fn neighbors(&self, node: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let range = self.offsets[node as usize]..self.offsets[node as usize + 1];
        self.neighbors[range.clone()].iter().copied().zip(self.edge_ids[range].iter().copied())
    }

    pub fn row(&self, node: u32) -> (&[u32], &[u32]) {
        let range = self.offsets[node as usize]..self.offsets[node as usize + 1];
        (&self.neighbors[range.clone()], &self.edge_ids[range])
    }
}
