use rayon::prelude::*;

use super::stream::{edge_key, id_hash, RunStream};
use super::{EpiConfig, EpiError, InfectionEstimates, WeightedContactNetwork};

/// Scratch state of one worker; `counts` accumulates infected runs per node.
struct Worker {
    counts: Vec<u32>,
    /// -1 susceptible, otherwise iterations spent infectious.
    counter: Vec<i32>,
    touched: Vec<u32>,
    active: Vec<u32>,
    next: Vec<u32>,
    priorities: Vec<(u64, u32)>,
}

/// Identity hashes of nodes and edges.
struct Keys {
    nodes: Vec<u64>,
    edges: Vec<u64>,
}

impl Keys {
    fn new(w: &WeightedContactNetwork<'_>) -> Keys {
        let net = w.network;
        let nodes: Vec<u64> = net.nodes().iter().map(|p| id_hash(p)).collect();
        let trips: Vec<u64> = net.trip_ids().iter().map(|t| id_hash(t)).collect();
        let mut edges = Vec::with_capacity(net.edge_count());
        let mut ordinal = 0;
        for (i, e) in net.edges().iter().enumerate() {
            // Edges are sorted, so exact duplicates are adjacent.
            ordinal = if i > 0 && net.edges()[i - 1] == *e { ordinal + 1 } else { 0 };
            edges.push(edge_key(
                nodes[e.u as usize],
                nodes[e.v as usize],
                trips[e.trip as usize],
                e.t_start,
                e.t_end,
                ordinal,
            ));
        }
        Keys { nodes, edges }
    }
}

impl Worker {
    fn new(n: usize) -> Self {
        Worker {
            counts: vec![0; n],
            counter: vec![-1; n],
            touched: Vec::new(),
            active: Vec::new(),
            next: Vec::new(),
            priorities: Vec::with_capacity(n),
        }
    }

    /// Seeds the `n_seeds` nodes of lowest hashed priority, a uniform sample
    /// without replacement.
    fn seed(&mut self, keys: &Keys, stream: RunStream, n_seeds: usize) {
        if n_seeds == 0 {
            return;
        }
        self.priorities.clear();
        self.priorities.extend(keys.nodes.iter().enumerate().map(|(i, &k)| (stream.seed_priority(k), i as u32)));
        if n_seeds < self.priorities.len() {
            self.priorities.select_nth_unstable(n_seeds - 1);
        }
        for &(_, s) in &self.priorities[..n_seeds] {
            self.counter[s as usize] = 0;
            self.touched.push(s);
            self.active.push(s);
        }
    }

    fn run(&mut self, w: &WeightedContactNetwork<'_>, keys: &Keys, cfg: &EpiConfig, run: u64, fixed: Option<&[u32]>) {
        let stream = RunStream::new(cfg.master_seed, run);
        match fixed {
            None => self.seed(keys, stream, cfg.n_seeds),
            Some(seeds) => {
                for &s in seeds {
                    self.counter[s as usize] = 0;
                    self.touched.push(s);
                    self.active.push(s);
                }
            }
        }
        let adjacency = w.network.adjacency();
        let tau = cfg.infectious_period as i32;
        let mut t = 0;
        while !self.active.is_empty() && t < cfg.horizon {
            let it = stream.iteration(t);
            self.next.clear();
            for &node in &self.active {
                let (neighbors, edge_ids) = adjacency.row(node);
                for (&nb, &e) in neighbors.iter().zip(edge_ids) {
                    if self.counter[nb as usize] < 0 && it.uniform(keys.edges[e as usize], u32::from(node > nb)) < w.weights[e as usize] {
                        // infectious from the next iteration on
                        self.counter[nb as usize] = 0;
                        self.touched.push(nb);
                        self.next.push(nb);
                    }
                }
                self.counter[node as usize] += 1;
                if self.counter[node as usize] <= tau {
                    self.next.push(node);
                }
            }
            std::mem::swap(&mut self.active, &mut self.next);
            t += 1;
        }
        for &v in &self.touched {
            self.counts[v as usize] += 1;
            self.counter[v as usize] = -1;
        }
        self.touched.clear();
        self.active.clear();
    }
}

/// Runs `config.n_runs` independent epidemics on the current rayon pool.
///
/// Run `r` draws its seed set and its transmission variates from a
/// counter-based stream keyed by `(master_seed, r)`, so the estimates are
/// bit-identical for any number of worker threads.
pub fn run_epidemic(w: &WeightedContactNetwork<'_>, config: &EpiConfig) -> Result<InfectionEstimates, EpiError> {
    config.validate()?;
    let n = w.network.node_count();
    if config.n_seeds > n {
        return Err(EpiError::SeedCountExceedsNodes { seeds: config.n_seeds, nodes: n });
    }
    simulate(w, config, None)
}

/// Like [`run_epidemic`], but every run starts from the same seed nodes
/// (node indices); `config.n_seeds` is ignored.
pub fn run_epidemic_from(
    w: &WeightedContactNetwork<'_>,
    config: &EpiConfig,
    seeds: &[u32],
) -> Result<InfectionEstimates, EpiError> {
    EpiConfig { n_seeds: seeds.len().max(1), ..*config }.validate()?;
    let n = w.network.node_count();
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() || sorted.last().is_some_and(|&s| s as usize >= n) {
        return Err(EpiError::InvalidParameter("seed nodes must be distinct node indices".into()));
    }
    simulate(w, config, Some(seeds))
}

fn simulate(
    w: &WeightedContactNetwork<'_>,
    config: &EpiConfig,
    fixed: Option<&[u32]>,
) -> Result<InfectionEstimates, EpiError> {
    let n = w.network.node_count();
    let keys = Keys::new(w);
    let counts = (0..config.n_runs as u32)
        .into_par_iter()
        .with_min_len(64)
        .fold(
            || Worker::new(n),
            |mut worker, r| {
                worker.run(w, &keys, config, u64::from(r), fixed);
                worker
            },
        )
        .map(|worker| worker.counts.into_iter().map(u64::from).collect::<Vec<u64>>())
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(InfectionEstimates { persons: w.network.nodes().to_vec(), infected_runs: counts, runs: config.n_runs })
}

/// [`run_epidemic`] on a dedicated pool of `threads` workers.
pub fn run_epidemic_with_threads(
    w: &WeightedContactNetwork<'_>,
    config: &EpiConfig,
    threads: usize,
) -> Result<InfectionEstimates, EpiError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EpiError::ThreadPool(e.to_string()))?;
    pool.install(|| run_epidemic(w, config))
}
