use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ContactNetwork;
use crate::assignment::{AssignmentError, Trajectory};
use crate::feed::TransitNetwork;
use crate::time::Seconds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    /// Every incident edge counts, parallel edges included.
    #[default]
    Multigraph,
    /// Distinct neighbors only.
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub median_degree: f64,
    pub mean_degree: f64,
    pub max_clique: u32,
    pub median_clique: f64,
    pub mean_clique: f64,
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

/// Degree and clique statistics. `clique_sizes` are the onboard counts from
/// [`segment_clique_sizes`]. In multigraph mode the mean degree is exactly
/// `2|E| / |V|`.
pub fn network_stats(net: &ContactNetwork, clique_sizes: &[u32], mode: DegreeMode) -> NetworkStats {
    let degrees = degrees(net, mode);
    let mut deg_sorted: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    deg_sorted.sort_by(f64::total_cmp);
    let n = net.node_count();
    let degree_sum: usize = degrees.iter().sum();
    let mut cliques: Vec<f64> = clique_sizes.iter().map(|&c| f64::from(c)).collect();
    cliques.sort_by(f64::total_cmp);
    NetworkStats {
        nodes: n,
        edges: match mode {
            DegreeMode::Multigraph => net.edge_count(),
            DegreeMode::Simple => degree_sum / 2,
        },
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        median_degree: median(&deg_sorted),
        mean_degree: if n == 0 { 0.0 } else { degree_sum as f64 / n as f64 },
        max_clique: clique_sizes.iter().copied().max().unwrap_or(0),
        median_clique: median(&cliques),
        mean_clique: if cliques.is_empty() { 0.0 } else { cliques.iter().sum::<f64>() / cliques.len() as f64 },
    }
}

pub fn degrees(net: &ContactNetwork, mode: DegreeMode) -> Vec<usize> {
    (0..net.node_count() as u32)
        .map(|v| match mode {
            DegreeMode::Multigraph => net.degree(v),
            DegreeMode::Simple => net.adjacency().neighbors(v).map(|(w, _)| w).collect::<HashSet<_>>().len(),
        })
        .collect()
}

/// Onboard passenger count of every (trip, consecutive-stop segment) carrying
/// at least two passengers, ordered by trip id then segment.
pub fn segment_clique_sizes(net: &TransitNetwork, trajectories: &[Trajectory]) -> Result<Vec<u32>, AssignmentError> {
    let loads = crate::assignment::segment_loads(
        net,
        &trajectories.iter().filter(|t| t.completed).cloned().collect::<Vec<_>>(),
    )?;
    let ordered: BTreeMap<_, _> = loads.into_iter().collect();
    Ok(ordered.into_values().flatten().filter(|&c| c >= 2).collect())
}

/// Fixed-width histogram; bin `i` covers `[i * width, (i + 1) * width)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: u32,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Histogram with at least `min_bins` bins, grown to fit every value.
    pub fn from_values(values: impl IntoIterator<Item = u32>, bin_width: u32, min_bins: usize) -> Histogram {
        let mut counts = vec![0u64; min_bins];
        for v in values {
            let bin = (v / bin_width) as usize;
            if bin >= counts.len() {
                counts.resize(bin + 1, 0);
            }
            counts[bin] += 1;
        }
        Histogram { bin_width, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bin_start,count` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "bin_start,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{}", i as u64 * u64::from(self.bin_width), c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TemporalHistograms {
    /// Contact start times, quarter-hour bins over the day (extended past
    /// midnight when needed), in seconds.
    pub contact_start: Histogram,
    /// Contact durations, one-minute bins, in seconds.
    pub duration: Histogram,
    /// Node degrees, unit bins.
    pub degree: Histogram,
}

pub const QUARTER_HOUR: Seconds = 900;

pub fn temporal_histograms(net: &ContactNetwork) -> TemporalHistograms {
    TemporalHistograms {
        contact_start: Histogram::from_values(net.edges().iter().map(|e| e.t_start), QUARTER_HOUR, 24 * 4),
        duration: Histogram::from_values(net.edges().iter().map(|e| e.duration()), 60, 1),
        degree: Histogram::from_values((0..net.node_count() as u32).map(|v| net.degree(v) as u32), 1, 1),
    }
}
