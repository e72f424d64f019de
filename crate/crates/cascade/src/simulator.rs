//! Monte Carlo simulation of the incentivized threshold cascade on concrete
//! undirected graphs: real edge lists or erased configuration-model graphs.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::io::BufRead;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::degree_model::{DegreeDistribution, IncentivePolicy, ThresholdModel};
use crate::error::{CascadeError, Result};
use crate::percolation::CampaignParams;

/// Undirected simple graph as per-node adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
}

/// Counts of lines dropped while ingesting an edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseWarnings {
    pub self_loops: usize,
    pub duplicate_edges: usize,
}

impl Graph {
    /// Builds a graph from explicit edges; self-loops and duplicates are
    /// rejected here (use the edge-list reader for lenient ingestion).
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(CascadeError::InvalidDistribution(format!(
                    "self-loop at node {a}"
                )));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(CascadeError::InvalidDistribution(format!(
                    "duplicate edge ({a}, {b})"
                )));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        Ok(Self {
            adjacency,
            edge_count: edges.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.adjacency[node]
    }

    /// Reads a whitespace-separated edge list. Lines starting with `#` are
    /// ignored; node ids need not be contiguous and are remapped; self-loops
    /// and duplicate edges are dropped and counted.
    pub fn read_edge_list(path: &Path) -> Result<(Self, ParseWarnings)> {
        let file = std::fs::File::open(path).map_err(|e| CascadeError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let mut id_map: std::collections::HashMap<u64, u32> = std::collections::HashMap::new();
        let mut adjacency: Vec<Vec<u32>> = Vec::new();
        let mut seen: HashSet<(u32, u32)> = HashSet::new();
        let mut warnings = ParseWarnings::default();
        let mut edge_count = 0usize;
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut read_id = |what: &str| -> Result<u64> {
                parts
                    .next()
                    .ok_or_else(|| CascadeError::Parse {
                        path: path.display().to_string(),
                        line: lineno,
                        message: format!("missing {what} node id"),
                    })?
                    .parse()
                    .map_err(|e| CascadeError::Parse {
                        path: path.display().to_string(),
                        line: lineno,
                        message: format!("bad {what} node id: {e}"),
                    })
            };
            let a = read_id("source")?;
            let b = read_id("target")?;
            let next_id = |map: &mut std::collections::HashMap<u64, u32>,
                           adj: &mut Vec<Vec<u32>>,
                           raw: u64| {
                *map.entry(raw).or_insert_with(|| {
                    adj.push(Vec::new());
                    (adj.len() - 1) as u32
                })
            };
            let ia = next_id(&mut id_map, &mut adjacency, a);
            let ib = next_id(&mut id_map, &mut adjacency, b);
            if ia == ib {
                warnings.self_loops += 1;
                continue;
            }
            let key = (ia.min(ib), ia.max(ib));
            if !seen.insert(key) {
                warnings.duplicate_edges += 1;
                continue;
            }
            adjacency[ia as usize].push(ib);
            adjacency[ib as usize].push(ia);
            edge_count += 1;
        }
        Ok((
            Self {
                adjacency,
                edge_count,
            },
            warnings,
        ))
    }

    /// Writes the edge list (one `a b` pair per line).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            for &b in nbrs {
                if (a as u32) < b {
                    writeln!(out, "{a} {b}")?;
                }
            }
        }
        Ok(())
    }
}

/// Samples degrees i.i.d. from `dist` and matches stubs uniformly at random,
/// erasing self-loops and duplicate edges (erased configuration model). If
/// the stub sum is odd, one uniformly chosen node's degree is incremented.
pub fn generate_configuration_model(
    dist: &DegreeDistribution,
    n: usize,
    seed: u64,
) -> Result<Graph> {
    if n < 2 {
        return Err(CascadeError::InvalidDistribution(
            "configuration model needs at least 2 nodes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table: Vec<(usize, f64)> = dist.support().collect();
    let mut cdf = Vec::with_capacity(table.len());
    let mut acc = 0.0;
    for &(_, p) in &table {
        acc += p;
        cdf.push(acc);
    }
    let mut degrees: Vec<usize> = (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            let idx = cdf.partition_point(|&c| c < x).min(table.len() - 1);
            table[idx].0
        })
        .collect();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let victim = rng.gen_range(0..n);
        degrees[victim] += 1;
    }
    let mut stubs: Vec<u32> = Vec::with_capacity(degrees.iter().sum());
    for (node, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat(node as u32).take(d));
    }
    if stubs.is_empty() {
        return Err(CascadeError::DegenerateDistribution);
    }
    stubs.shuffle(&mut rng);
    let mut adjacency = vec![Vec::new(); n];
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut edge_count = 0usize;
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            continue;
        }
        adjacency[a as usize].push(b);
        adjacency[b as usize].push(a);
        edge_count += 1;
    }
    Ok(Graph {
        adjacency,
        edge_count,
    })
}

/// Outcome of one cascade run.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutcome {
    pub registered: Vec<bool>,
    pub active: Vec<bool>,
    pub rounds: usize,
    pub registered_fraction: f64,
    pub registered_fraction_by_degree: BTreeMap<usize, f64>,
    /// Total incentive payout: Σ over incentivized registered nodes of c_deg.
    pub realized_cost: f64,
}

/// Aggregate over independent Monte Carlo runs. Costs are per node so they
/// compare directly with the analytic expected cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCSummary {
    pub runs: usize,
    pub mean_size: f64,
    pub stderr_size: f64,
    pub mean_cost: f64,
    pub stderr_cost: f64,
}

fn sample_threshold(thresholds: &ThresholdModel, k: usize, rng: &mut impl Rng) -> usize {
    match thresholds {
        ThresholdModel::Parametric {
            zealous_fraction,
            threshold_fraction,
        } => {
            if rng.gen::<f64>() < *zealous_fraction {
                0
            } else {
                ThresholdModel::parametric_threshold(*threshold_fraction, k)
            }
        }
        ThresholdModel::Table { p_th } => {
            let row = p_th.get(&k).expect("threshold table covers support");
            let x: f64 = rng.gen();
            let mut acc = 0.0;
            let mut last = 0;
            for (&m, &p) in row {
                acc += p;
                last = m;
                if x < acc {
                    return m;
                }
            }
            last
        }
    }
}

/// Runs one synchronous-round threshold cascade.
///
/// Per node: type 2 with probability φ(deg), threshold drawn from
/// p_th(·|deg), activation intent drawn once up front with probability α2
/// (type 2) or α1 (type 1) and consumed on registration. Zealous nodes
/// (threshold 0) register at round 0; an unregistered node registers the
/// round its count of active neighbors reaches its threshold.
pub fn run_cascade(
    graph: &Graph,
    policy: &IncentivePolicy,
    thresholds: &ThresholdModel,
    params: &CampaignParams,
    seed: u64,
) -> CascadeOutcome {
    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut incentivized = vec![false; n];
    let mut threshold = vec![0usize; n];
    let mut intent = vec![false; n];
    for i in 0..n {
        let k = graph.degree(i);
        incentivized[i] = rng.gen::<f64>() < policy.phi(k);
        threshold[i] = sample_threshold(thresholds, k, &mut rng);
        let alpha = if incentivized[i] {
            params.alpha2
        } else {
            params.alpha1
        };
        intent[i] = rng.gen::<f64>() < alpha;
    }

    let mut registered = vec![false; n];
    let mut active = vec![false; n];
    let mut active_neighbors = vec![0usize; n];
    let mut newly_active: Vec<u32> = Vec::new();
    for i in 0..n {
        if threshold[i] == 0 {
            registered[i] = true;
            if intent[i] {
                active[i] = true;
                newly_active.push(i as u32);
            }
        }
    }

    let mut rounds = 0usize;
    while !newly_active.is_empty() {
        rounds += 1;
        let mut next_active = Vec::new();
        // Propagate this round's activations, then register in one sweep so
        // updates stay synchronous.
        for &a in &newly_active {
            for &b in graph.neighbors(a as usize) {
                let b = b as usize;
                if !registered[b] {
                    active_neighbors[b] += 1;
                }
            }
        }
        for &a in &newly_active {
            for &b in graph.neighbors(a as usize) {
                let b = b as usize;
                if !registered[b] && active_neighbors[b] >= threshold[b] {
                    registered[b] = true;
                    if intent[b] {
                        active[b] = true;
                        next_active.push(b as u32);
                    }
                }
            }
        }
        newly_active = next_active;
    }

    let registered_count = registered.iter().filter(|&&r| r).count();
    let mut by_degree_reg: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut realized_cost = 0.0;
    for i in 0..n {
        let k = graph.degree(i);
        let entry = by_degree_reg.entry(k).or_insert((0, 0));
        entry.1 += 1;
        if registered[i] {
            entry.0 += 1;
            if incentivized[i] {
                realized_cost += params.costs.cost(k);
            }
        }
    }
    CascadeOutcome {
        rounds,
        registered_fraction: registered_count as f64 / n as f64,
        registered_fraction_by_degree: by_degree_reg
            .into_iter()
            .map(|(k, (reg, tot))| (k, reg as f64 / tot as f64))
            .collect(),
        realized_cost,
        registered,
        active,
    }
}

/// splitmix64; used to derive independent per-run seeds from the master seed.
fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Executes independent cascade runs in parallel and aggregates the mean and
/// standard error of the registered fraction and per-node realized cost.
/// Per-run seeds derive from the master seed by run index, and the reduction
/// runs in run-index order, so the result is schedule-independent.
pub fn monte_carlo(
    graph: &Graph,
    policy: &IncentivePolicy,
    thresholds: &ThresholdModel,
    params: &CampaignParams,
    runs: usize,
    seed: u64,
) -> MCSummary {
    assert!(runs >= 1, "runs must be >= 1");
    let n = graph.node_count() as f64;
    let samples: Vec<(f64, f64)> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let outcome =
                run_cascade(graph, policy, thresholds, params, derive_seed(seed, i));
            (outcome.registered_fraction, outcome.realized_cost / n)
        })
        .collect();
    let mean_stderr = |values: &dyn Fn(&(f64, f64)) -> f64| -> (f64, f64) {
        let mean = samples.iter().map(values).sum::<f64>() / runs as f64;
        if runs == 1 {
            return (mean, 0.0);
        }
        let var = samples
            .iter()
            .map(|s| {
                let d = values(s) - mean;
                d * d
            })
            .sum::<f64>()
            / (runs - 1) as f64;
        (mean, (var / runs as f64).sqrt())
    };
    let (mean_size, stderr_size) = mean_stderr(&|s: &(f64, f64)| s.0);
    let (mean_cost, stderr_cost) = mean_stderr(&|s: &(f64, f64)| s.1);
    MCSummary {
        runs,
        mean_size,
        stderr_size,
        mean_cost,
        stderr_cost,
    }
}
