//! Command-line surface: configuration parsing, edge-list ingestion, and
//! CSV/JSON result emission for the analytic and simulation workflows.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::degree_model::{DegreeDistribution, IncentivePolicy, PolicyScheme, ThresholdModel};
use crate::error::{CascadeError, Result};
use crate::optimizer::{self, BoundaryCase};
use crate::percolation::{CampaignParams, CostSchedule, PercolationModel};
use crate::simulator::{self, Graph};

/// Exit codes: 0 success, 2 infeasible target, 3 input parse error,
/// 4 convergence failure, 1 anything else.
pub fn exit_code(err: &CascadeError) -> i32 {
    match err {
        CascadeError::InfeasibleTarget { .. } | CascadeError::TargetOutOfRange { .. } => 2,
        CascadeError::Parse { .. } => 3,
        CascadeError::Convergence { .. } => 4,
        _ => 1,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "cascade",
    about = "Incentivized threshold cascades: percolation analytics, incentive allocation, Monte Carlo simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Model parameters shared by all subcommands.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Activation probability of a non-incentivized (type 1) node
    #[arg(long, default_value_t = 0.1)]
    pub alpha1: f64,
    /// Activation probability of an incentivized (type 2) node
    #[arg(long, default_value_t = 0.9)]
    pub alpha2: f64,
    /// Fraction of zealous (threshold 0) nodes
    #[arg(long, default_value_t = 0.3)]
    pub zealous: f64,
    /// Threshold fraction: non-zealous nodes need ⌈beta·k⌉ active neighbors
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Threshold table CSV (degree,threshold,probability); overrides --zealous/--beta
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// Cost schedule: "linear" (c_k = k) or a CSV path of degree,cost rows
    #[arg(long, default_value = "linear")]
    pub costs: String,
    /// Bisection termination width on |s(q1) - s(q2)|
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Fixed-point residual tolerance
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Master seed for all stochastic steps
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo runs per configuration
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    /// Renormalize degree-distribution CSVs whose mass is off by more than 1e-12
    #[arg(long)]
    pub normalize: bool,
}

/// A degree-distribution source: explicit CSV or a graph edge list.
#[derive(Args, Debug, Clone)]
pub struct DistSource {
    /// Degree distribution CSV (degree,probability)
    #[arg(long, conflicts_with = "edges")]
    pub dist: Option<PathBuf>,
    /// Graph edge list; the empirical degree distribution is extracted
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate q, u_q, s(q) over a grid of q values (CSV)
    Cascade {
        #[command(flatten)]
        config: RunConfig,
        #[command(flatten)]
        source: DistSource,
        /// Comma-separated q values, e.g. 0,0.5,1
        #[arg(long, value_delimiter = ',')]
        q_grid: Vec<f64>,
        /// Output path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize expected cost subject to s(q) >= gamma (JSON plan)
    Minimize {
        #[command(flatten)]
        config: RunConfig,
        #[command(flatten)]
        source: DistSource,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximize s(q) subject to an expected-cost budget (JSON plan)
    Maximize {
        #[command(flatten)]
        config: RunConfig,
        #[command(flatten)]
        source: DistSource,
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo simulation of the cascade under a policy (CSV summary)
    Simulate {
        #[command(flatten)]
        config: RunConfig,
        /// Graph edge list to simulate on
        #[arg(long, conflicts_with = "generate")]
        edges: Option<PathBuf>,
        /// Generator spec: config-model:n=<int>,dist=<csv path>
        #[arg(long)]
        generate: Option<String>,
        /// Policy scheme: uniform | high | low | plan
        #[arg(long, default_value = "uniform")]
        scheme: String,
        /// Comma-separated q values for the uniform/high/low schemes
        #[arg(long, value_delimiter = ',')]
        q_grid: Vec<f64>,
        /// Plan JSON (from minimize/maximize) when --scheme plan
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate an erased configuration-model graph and write its edge list
    Generate {
        #[command(flatten)]
        config: RunConfig,
        /// Generator spec: config-model:n=<int>,dist=<csv path>
        #[arg(long)]
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// JSON shape of an allocation plan; `q_gamma` is set by `minimize`, `q_opt`
/// by `maximize`. Either can be fed back into `simulate --scheme plan`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_opt: Option<f64>,
    pub phi: BTreeMap<usize, f64>,
    pub expected_cost: f64,
    pub predicted_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_case: Option<BoundaryCase>,
}

impl RunConfig {
    pub fn threshold_model(&self) -> Result<ThresholdModel> {
        match &self.thresholds {
            Some(path) => ThresholdModel::read_csv(path),
            None => ThresholdModel::parametric(self.zealous, self.beta),
        }
    }

    pub fn campaign_params(&self) -> Result<CampaignParams> {
        let costs = if self.costs == "linear" {
            CostSchedule::Linear
        } else {
            CostSchedule::Table(read_cost_csv(Path::new(&self.costs))?)
        };
        CampaignParams::new(self.alpha1, self.alpha2, costs)
    }

    pub fn model(&self, dist: DegreeDistribution) -> Result<PercolationModel> {
        PercolationModel::new(dist, self.threshold_model()?, self.campaign_params()?)
    }
}

fn read_cost_csv(path: &Path) -> Result<BTreeMap<usize, f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CascadeError::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with("degree")) {
            continue;
        }
        let bad = |msg: String| CascadeError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: msg,
        };
        let mut parts = line.split(',');
        let k: usize = parts
            .next()
            .ok_or_else(|| bad("missing degree".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad degree: {e}")))?;
        let c: f64 = parts
            .next()
            .ok_or_else(|| bad("missing cost".into()))?
            .trim()
            .parse()
            .map_err(|e| bad(format!("bad cost: {e}")))?;
        out.insert(k, c);
    }
    Ok(out)
}

impl DistSource {
    pub fn load(&self, normalize: bool) -> Result<DegreeDistribution> {
        match (&self.dist, &self.edges) {
            (Some(csv), _) => DegreeDistribution::read_csv(csv, normalize),
            (None, Some(edges)) => {
                let (graph, warnings) = Graph::read_edge_list(edges)?;
                if warnings.self_loops + warnings.duplicate_edges > 0 {
                    eprintln!(
                        "warning: dropped {} self-loops and {} duplicate edges from {}",
                        warnings.self_loops,
                        warnings.duplicate_edges,
                        edges.display()
                    );
                }
                DegreeDistribution::from_graph(&graph)
            }
            (None, None) => Err(CascadeError::InvalidDistribution(
                "provide --dist or --edges".into(),
            )),
        }
    }
}

/// Parses a `config-model:n=<int>,dist=<csv path>` generator spec.
pub fn parse_generator_spec(spec: &str, normalize: bool) -> Result<(usize, DegreeDistribution)> {
    let bad = |msg: String| CascadeError::Parse {
        path: spec.to_string(),
        line: 0,
        message: msg,
    };
    let rest = spec
        .strip_prefix("config-model:")
        .ok_or_else(|| bad("expected config-model:<args>".into()))?;
    let mut n = None;
    let mut dist = None;
    for part in rest.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got {part}")))?;
        match key {
            "n" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|e| bad(format!("bad n: {e}")))?,
                )
            }
            "dist" => dist = Some(DegreeDistribution::read_csv(Path::new(value), normalize)?),
            other => return Err(bad(format!("unknown key {other}"))),
        }
    }
    Ok((
        n.ok_or_else(|| bad("missing n".into()))?,
        dist.ok_or_else(|| bad("missing dist".into()))?,
    ))
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cascade {
            config,
            source,
            q_grid,
            out,
        } => cmd_cascade(&config, &source, &q_grid, &out),
        Command::Minimize {
            config,
            source,
            gamma,
            out,
        } => cmd_minimize(&config, &source, gamma, &out),
        Command::Maximize {
            config,
            source,
            budget,
            out,
        } => cmd_maximize(&config, &source, budget, &out),
        Command::Simulate {
            config,
            edges,
            generate,
            scheme,
            q_grid,
            plan,
            out,
        } => cmd_simulate(&config, &edges, &generate, &scheme, &q_grid, &plan, &out),
        Command::Generate { config, spec, out } => cmd_generate(&config, &spec, &out),
    }
}

/// One `q,u,s` row per grid point.
pub fn cmd_cascade(
    config: &RunConfig,
    source: &DistSource,
    q_grid: &[f64],
    out: &Option<PathBuf>,
) -> Result<()> {
    let model = config.model(source.load(config.normalize)?)?;
    let mut w = open_output(out)?;
    writeln!(w, "q,u,s")?;
    for &q in q_grid {
        let (u, _, s) = model.cascade_profile(q)?;
        writeln!(w, "{q},{u},{s}")?;
    }
    Ok(())
}

pub fn cmd_minimize(
    config: &RunConfig,
    source: &DistSource,
    gamma: f64,
    out: &Option<PathBuf>,
) -> Result<()> {
    let model = config.model(source.load(config.normalize)?)?;
    let plan = optimizer::minimize_cost(&model, gamma, config.eps)?;
    let json = PlanJson {
        q_gamma: Some(plan.q_gamma),
        q_opt: None,
        phi: plan.policy.entries().collect(),
        expected_cost: plan.expected_cost,
        predicted_size: plan.predicted_size,
        boundary_case: Some(plan.boundary_case),
    };
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, &json).map_err(std::io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

pub fn cmd_maximize(
    config: &RunConfig,
    source: &DistSource,
    budget: f64,
    out: &Option<PathBuf>,
) -> Result<()> {
    let model = config.model(source.load(config.normalize)?)?;
    let plan = optimizer::maximize_cascade(&model, budget, config.eps)?;
    let json = PlanJson {
        q_gamma: None,
        q_opt: Some(plan.q_opt),
        phi: plan.policy.entries().collect(),
        expected_cost: plan.expected_cost,
        predicted_size: plan.predicted_size,
        boundary_case: None,
    };
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, &json).map_err(std::io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_plan(path: &Path) -> Result<PlanJson> {
    let text = std::fs::read_to_string(path).map_err(|e| CascadeError::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CascadeError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// CSV columns: scheme,q,mean_size,stderr_size,mean_cost,stderr_cost,runs,seed
pub fn cmd_simulate(
    config: &RunConfig,
    edges: &Option<PathBuf>,
    generate: &Option<String>,
    scheme: &str,
    q_grid: &[f64],
    plan: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let graph = match (edges, generate) {
        (Some(path), _) => {
            let (graph, warnings) = Graph::read_edge_list(path)?;
            if warnings.self_loops + warnings.duplicate_edges > 0 {
                eprintln!(
                    "warning: dropped {} self-loops and {} duplicate edges from {}",
                    warnings.self_loops,
                    warnings.duplicate_edges,
                    path.display()
                );
            }
            graph
        }
        (None, Some(spec)) => {
            let (n, dist) = parse_generator_spec(spec, config.normalize)?;
            simulator::generate_configuration_model(&dist, n, config.seed)?
        }
        (None, None) => {
            return Err(CascadeError::InvalidDistribution(
                "provide --edges or --generate".into(),
            ))
        }
    };
    let dist = DegreeDistribution::from_graph(&graph)?;
    let thresholds = config.threshold_model()?;
    let params = config.campaign_params()?;

    // (label, q as reported, policy) triples to simulate.
    let jobs: Vec<(String, f64, IncentivePolicy)> = match scheme {
        "plan" => {
            let path = plan.as_ref().ok_or_else(|| {
                CascadeError::InvalidDistribution("--scheme plan requires --plan".into())
            })?;
            let plan = read_plan(path)?;
            let policy = IncentivePolicy::new(plan.phi)?;
            let q = policy.edge_type2_probability(&dist);
            vec![("plan".to_string(), q, policy)]
        }
        name => {
            let kind = match name {
                "uniform" => PolicyScheme::Uniform,
                "high" => PolicyScheme::HighDegree,
                "low" => PolicyScheme::LowDegree,
                other => {
                    return Err(CascadeError::InvalidDistribution(format!(
                        "unknown scheme {other}"
                    )))
                }
            };
            q_grid
                .iter()
                .map(|&q| {
                    IncentivePolicy::make_policy(kind, q, &dist)
                        .map(|policy| (name.to_string(), q, policy))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let mut w = open_output(out)?;
    writeln!(
        w,
        "scheme,q,mean_size,stderr_size,mean_cost,stderr_cost,runs,seed"
    )?;
    for (label, q, policy) in jobs {
        let summary = simulator::monte_carlo(
            &graph,
            &policy,
            &thresholds,
            &params,
            config.runs,
            config.seed,
        );
        writeln!(
            w,
            "{label},{q},{},{},{},{},{},{}",
            summary.mean_size,
            summary.stderr_size,
            summary.mean_cost,
            summary.stderr_cost,
            summary.runs,
            config.seed
        )?;
    }
    Ok(())
}

pub fn cmd_generate(config: &RunConfig, spec: &str, out: &Option<PathBuf>) -> Result<()> {
    let (n, dist) = parse_generator_spec(spec, config.normalize)?;
    let graph = simulator::generate_configuration_model(&dist, n, config.seed)?;
    let mut w = open_output(out)?;
    graph.write_edge_list(&mut w)?;
    Ok(())
}
