//! Degree distributions, threshold distributions, incentive policies and the
//! scalar couplings between them (mean degree, excess distribution, edge-type
//! probability q).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{CascadeError, Result};
use crate::simulator::Graph;

/// Tolerance applied to probability normalization on construction.
pub const PMF_TOL: f64 = 1e-12;

/// Probability mass over node degrees, with derived mean degree.
///
/// Degrees with zero probability are absent from the map; all operations
/// iterate the support only.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pmf: BTreeMap<usize, f64>,
    k_max: usize,
    mean: f64,
}

impl DegreeDistribution {
    /// Builds a distribution from a degree → probability map.
    ///
    /// Rejects negative entries, masses that do not sum to 1 within `1e-12`,
    /// and distributions with zero mean degree.
    pub fn new(pmf: BTreeMap<usize, f64>) -> Result<Self> {
        let mut total = 0.0;
        for (&k, &p) in &pmf {
            if !(0.0..=1.0).contains(&p) {
                return Err(CascadeError::InvalidDistribution(format!(
                    "p({k}) = {p} is not a probability"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > PMF_TOL {
            return Err(CascadeError::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let pmf: BTreeMap<usize, f64> = pmf.into_iter().filter(|&(_, p)| p > 0.0).collect();
        let mean: f64 = pmf.iter().map(|(&k, &p)| k as f64 * p).sum();
        if mean <= 0.0 {
            return Err(CascadeError::DegenerateDistribution);
        }
        let k_max = *pmf.keys().next_back().expect("nonempty support");
        Ok(Self { pmf, k_max, mean })
    }

    /// Like [`DegreeDistribution::new`] but rescales the masses to sum to 1
    /// first. Used by the CLI's `--normalize` flag.
    pub fn new_normalized(pmf: BTreeMap<usize, f64>) -> Result<Self> {
        let total: f64 = pmf.values().sum();
        if total <= 0.0 {
            return Err(CascadeError::InvalidDistribution(
                "total mass is not positive".into(),
            ));
        }
        Self::new(pmf.into_iter().map(|(k, p)| (k, p / total)).collect())
    }

    /// Empirical degree distribution of a concrete graph: pmf(k) is the
    /// fraction of nodes with degree k.
    pub fn from_graph(graph: &Graph) -> Result<Self> {
        if graph.node_count() == 0 {
            return Err(CascadeError::EmptyGraph);
        }
        let n = graph.node_count() as f64;
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..graph.node_count() {
            *counts.entry(graph.degree(i)).or_insert(0) += 1;
        }
        // Exact rational masses count/n keep the sum at 1 up to rounding;
        // renormalize once to absorb it.
        Self::new_normalized(
            counts
                .into_iter()
                .map(|(k, c)| (k, c as f64 / n))
                .collect(),
        )
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.pmf.get(&k).copied().unwrap_or(0.0)
    }

    /// Mean degree d̄ = Σ k·p(k).
    pub fn mean_degree(&self) -> f64 {
        self.mean
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Iterates the support (degrees with positive mass) in ascending order.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf.iter().map(|(&k, &p)| (k, p))
    }

    /// Excess degree distribution p_ex(k') = (k'+1)·p(k'+1)/d̄: the degree
    /// distribution of a node reached along a random edge, not counting the
    /// arrival edge.
    pub fn excess_distribution(&self) -> BTreeMap<usize, f64> {
        self.pmf
            .iter()
            .filter(|&(&k, _)| k >= 1)
            .map(|(&k, &p)| (k - 1, k as f64 * p / self.mean))
            .collect()
    }

    /// Reads a two-column `degree,probability` CSV.
    pub fn read_csv(path: &Path, normalize: bool) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CascadeError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let mut pmf = BTreeMap::new();
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if idx == 0 && line.starts_with("degree") {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |field: Option<&str>, what: &str| -> Result<String> {
                field
                    .map(|s| s.trim().to_string())
                    .ok_or_else(|| CascadeError::Parse {
                        path: path.display().to_string(),
                        line: lineno,
                        message: format!("missing {what} column"),
                    })
            };
            let k: usize = parse(parts.next(), "degree")?
                .parse()
                .map_err(|e| CascadeError::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    message: format!("bad degree: {e}"),
                })?;
            let p: f64 = parse(parts.next(), "probability")?
                .parse()
                .map_err(|e| CascadeError::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    message: format!("bad probability: {e}"),
                })?;
            if pmf.insert(k, p).is_some() {
                return Err(CascadeError::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    message: format!("duplicate degree {k}"),
                });
            }
        }
        if normalize {
            Self::new_normalized(pmf)
        } else {
            Self::new(pmf)
        }
    }

    /// Writes the two-column `degree,probability` CSV form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "degree,probability")?;
        for (k, p) in self.support() {
            writeln!(out, "{k},{p}")?;
        }
        Ok(())
    }
}

/// Conditional distribution p_th(m|k) of registration thresholds given degree.
///
/// The parametric form puts mass `z0` on threshold 0 (zealous nodes) and the
/// rest on `max(1, ⌈β·k⌉)`; a non-zealous degree-0 node then carries
/// threshold 1, which it can never reach.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdModel {
    Parametric {
        zealous_fraction: f64,
        threshold_fraction: f64,
    },
    Table {
        /// degree → (threshold → probability); each row sums to 1.
        p_th: BTreeMap<usize, BTreeMap<usize, f64>>,
    },
}

impl ThresholdModel {
    pub fn parametric(zealous_fraction: f64, threshold_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&zealous_fraction) {
            return Err(CascadeError::InvalidProbability {
                name: "zealous_fraction",
                value: zealous_fraction,
            });
        }
        if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
            return Err(CascadeError::InvalidProbability {
                name: "threshold_fraction",
                value: threshold_fraction,
            });
        }
        Ok(Self::Parametric {
            zealous_fraction,
            threshold_fraction,
        })
    }

    pub fn table(p_th: BTreeMap<usize, BTreeMap<usize, f64>>) -> Result<Self> {
        for (&k, row) in &p_th {
            let mut total = 0.0;
            for (&m, &p) in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(CascadeError::InvalidDistribution(format!(
                        "p_th({m}|{k}) = {p} is not a probability"
                    )));
                }
                total += p;
            }
            if (total - 1.0).abs() > PMF_TOL {
                return Err(CascadeError::InvalidDistribution(format!(
                    "thresholds for degree {k} sum to {total}, expected 1"
                )));
            }
        }
        Ok(Self::Table { p_th })
    }

    /// Parametric threshold for a non-zealous node of degree `k`.
    pub fn parametric_threshold(threshold_fraction: f64, k: usize) -> usize {
        ((threshold_fraction * k as f64).ceil() as usize).max(1)
    }

    /// p_th(0|k): the zealous mass at degree k.
    pub fn zealous_probability(&self, k: usize) -> f64 {
        match self {
            Self::Parametric {
                zealous_fraction, ..
            } => *zealous_fraction,
            Self::Table { p_th } => p_th
                .get(&k)
                .and_then(|row| row.get(&0))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// Nonzero (m, p_th(m|k)) pairs with m ≥ 1 for degree k.
    pub fn positive_thresholds(&self, k: usize) -> Vec<(usize, f64)> {
        match self {
            Self::Parametric {
                zealous_fraction,
                threshold_fraction,
            } => {
                let mass = 1.0 - zealous_fraction;
                if mass <= 0.0 {
                    Vec::new()
                } else {
                    vec![(Self::parametric_threshold(*threshold_fraction, k), mass)]
                }
            }
            Self::Table { p_th } => p_th
                .get(&k)
                .map(|row| {
                    row.iter()
                        .filter(|&(&m, &p)| m >= 1 && p > 0.0)
                        .map(|(&m, &p)| (m, p))
                        .collect()
                })
                .unwrap_or_default(),
        }
    }

    /// Whether every degree in the given support has a threshold row.
    pub fn covers(&self, dist: &DegreeDistribution) -> bool {
        match self {
            Self::Parametric { .. } => true,
            Self::Table { p_th } => dist.support().all(|(k, _)| p_th.contains_key(&k)),
        }
    }

    /// Reads a three-column `degree,threshold,probability` CSV.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CascadeError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let mut p_th: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if idx == 0 && line.starts_with("degree") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(CascadeError::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    message: format!("expected 3 columns, got {}", fields.len()),
                });
            }
            let bad = |what: &str, e: &dyn std::fmt::Display| CascadeError::Parse {
                path: path.display().to_string(),
                line: lineno,
                message: format!("bad {what}: {e}"),
            };
            let k: usize = fields[0].parse().map_err(|e| bad("degree", &e))?;
            let m: usize = fields[1].parse().map_err(|e| bad("threshold", &e))?;
            let p: f64 = fields[2].parse().map_err(|e| bad("probability", &e))?;
            p_th.entry(k).or_default().insert(m, p);
        }
        Self::table(p_th)
    }
}

/// Incentive scheme shapes used in the experiment drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyScheme {
    /// φ(k) = q for every degree.
    Uniform,
    /// φ = 1 from the largest degree down to a fractional boundary degree.
    HighDegree,
    /// φ = 1 from the smallest positive degree up to a fractional boundary.
    LowDegree,
}

/// Per-degree incentivization probability φ(k).
///
/// Degrees absent from the map are treated as φ = 0.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct IncentivePolicy {
    phi: BTreeMap<usize, f64>,
}

impl IncentivePolicy {
    pub fn new(phi: BTreeMap<usize, f64>) -> Result<Self> {
        for (_, &p) in &phi {
            if !(0.0..=1.0).contains(&p) {
                return Err(CascadeError::InvalidProbability {
                    name: "phi",
                    value: p,
                });
            }
        }
        Ok(Self { phi })
    }

    /// φ ≡ 0.
    pub fn zero() -> Self {
        Self {
            phi: BTreeMap::new(),
        }
    }

    /// φ = 1 on every degree of the given support.
    pub fn all_ones(dist: &DegreeDistribution) -> Self {
        Self {
            phi: dist.support().map(|(k, _)| (k, 1.0)).collect(),
        }
    }

    pub fn phi(&self, k: usize) -> f64 {
        self.phi.get(&k).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.phi.iter().map(|(&k, &p)| (k, p))
    }

    /// Probability q of encountering a type-2 node by traversing a random
    /// edge: q = (1/d̄)·Σ k·φ(k)·p(k).
    pub fn edge_type2_probability(&self, dist: &DegreeDistribution) -> f64 {
        let raw: f64 = dist
            .support()
            .map(|(k, p)| k as f64 * self.phi(k) * p)
            .sum::<f64>()
            / dist.mean_degree();
        raw.clamp(0.0, 1.0)
    }

    /// Builds one of the three experiment schemes hitting a target q exactly.
    ///
    /// `HighDegree` incentivizes degrees from the top down, giving the
    /// boundary degree a fractional φ so the target is met; `LowDegree` is
    /// symmetric from the smallest positive degree upward.
    pub fn make_policy(
        scheme: PolicyScheme,
        q_target: f64,
        dist: &DegreeDistribution,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&q_target) {
            return Err(CascadeError::InvalidProbability {
                name: "q_target",
                value: q_target,
            });
        }
        match scheme {
            PolicyScheme::Uniform => Self::new(
                dist.support().map(|(k, _)| (k, q_target)).collect(),
            ),
            PolicyScheme::HighDegree | PolicyScheme::LowDegree => {
                // Fill Σ k·p(k)·φ(k) up to the required edge weight d̄·q.
                let mut degrees: Vec<(usize, f64)> =
                    dist.support().filter(|&(k, _)| k >= 1).collect();
                if scheme == PolicyScheme::HighDegree {
                    degrees.reverse();
                }
                let mut remaining = dist.mean_degree() * q_target;
                let mut phi = BTreeMap::new();
                for (k, p) in degrees {
                    if remaining <= 0.0 {
                        break;
                    }
                    let weight = k as f64 * p;
                    if weight <= remaining {
                        phi.insert(k, 1.0);
                        remaining -= weight;
                    } else {
                        phi.insert(k, remaining / weight);
                        remaining = 0.0;
                    }
                }
                Self::new(phi)
            }
        }
    }
}
