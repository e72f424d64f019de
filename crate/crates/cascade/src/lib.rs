//! Incentivized threshold cascades on random networks.
//!
//! The library computes the expected size of an incentivized linear-threshold
//! cascade on a configuration-model random network via a percolation fixed
//! point, solves two incentive-allocation problems (cost minimization under a
//! cascade-size floor; cascade maximization under a cost budget) with
//! linearithmic algorithms, and validates the analytics by Monte Carlo
//! simulation on real and generated graphs.
//!
//! Module map:
//! - [`degree_model`]: degree distributions, threshold models, incentive
//!   policies and the scalar couplings between them.
//! - [`percolation`]: the self-consistency function, its fixed point, and
//!   cascade sizes s_k(q), s(q).
//! - [`optimizer`]: the two allocation solvers.
//! - [`simulator`]: graph ingestion/generation and Monte Carlo cascades.
//! - [`oracle`]: independent brute-force references used by the test suite.

pub mod cli;
pub mod degree_model;
pub mod error;
pub mod optimizer;
pub mod oracle;
pub mod percolation;
pub mod simulator;

pub use degree_model::{DegreeDistribution, IncentivePolicy, PolicyScheme, ThresholdModel};
pub use error::{CascadeError, Result};
pub use optimizer::{maximize_cascade, minimize_cost, CostPlan, SizePlan};
pub use percolation::{CampaignParams, CostSchedule, FixedPointResult, PercolationModel};
pub use simulator::{generate_configuration_model, monte_carlo, run_cascade, Graph};
