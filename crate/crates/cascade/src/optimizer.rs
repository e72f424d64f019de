//! Incentive-allocation solvers: cost minimization under a cascade-size floor
//! and cascade maximization under a cost budget.
//!
//! Both reduce to a scalar line search over the edge-type probability q plus
//! a greedy capacity-limited allocation ("jar filling") that solves the
//! transformed linear program exactly.

use std::collections::BTreeMap;

use crate::degree_model::IncentivePolicy;
use crate::error::{CascadeError, Result};
use crate::percolation::PercolationModel;

/// Default bisection termination width on |s(q1) − s(q2)|.
pub const BISECTION_EPS: f64 = 1e-6;
/// Hard cap on bisection iterations.
pub const BISECTION_MAX_ITER: usize = 200;

/// How a cost-minimization target related to the attainable range [s(0), s(1)].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCase {
    None,
    BelowGammaMin,
    AtGammaMax,
}

/// Solution of the cost-minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPlan {
    pub q_gamma: f64,
    /// Allocation weights ν_k of the transformed LP; empty in boundary cases.
    pub nu: BTreeMap<usize, f64>,
    pub policy: IncentivePolicy,
    pub expected_cost: f64,
    pub predicted_size: f64,
    pub boundary_case: BoundaryCase,
}

/// Solution of the budget-constrained cascade-maximization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SizePlan {
    pub q_opt: f64,
    pub policy: IncentivePolicy,
    pub predicted_size: f64,
    pub expected_cost: f64,
}

/// μ_k(q) = s_k(q)·c_k/k, the per-unit-weight cost of allocating to degree k.
fn mu_values(model: &PercolationModel, q: f64) -> Result<BTreeMap<usize, f64>> {
    let s_k = model.cascade_fraction_by_degree(q)?;
    Ok(model
        .dist()
        .support()
        .filter(|&(k, _)| k >= 1)
        .map(|(k, _)| {
            let c = model.params().costs.cost(k);
            (k, s_k[&k] * c / k as f64)
        })
        .collect())
}

/// Inverts s(q) = γ by bisection on [0, 1].
///
/// Terminates when |s(q1) − s(q2)| ≤ eps; requires α2 > α1 so s is a strictly
/// increasing bijection, and γ strictly inside (s(0), s(1)).
pub fn find_q_gamma(model: &PercolationModel, gamma: f64, eps: f64) -> Result<f64> {
    model.params().require_strict_alphas()?;
    let s0 = model.cascade_fraction(0.0)?;
    let s1 = model.cascade_fraction(1.0)?;
    if gamma <= s0 {
        return Err(CascadeError::TargetOutOfRange {
            gamma,
            s_min: s0,
            s_max: s1,
            which: "at or below s(0)",
        });
    }
    if gamma >= s1 {
        return Err(CascadeError::TargetOutOfRange {
            gamma,
            s_min: s0,
            s_max: s1,
            which: "at or above s(1)",
        });
    }
    let (mut q1, mut q2) = (0.0f64, 1.0f64);
    let (mut s_lo, mut s_hi) = (s0, s1);
    for _ in 0..BISECTION_MAX_ITER {
        if (s_hi - s_lo).abs() <= eps {
            break;
        }
        let q_mp = 0.5 * (q1 + q2);
        let s_mp = model.cascade_fraction(q_mp)?;
        if s_mp < gamma {
            q1 = q_mp;
            s_lo = s_mp;
        } else {
            q2 = q_mp;
            s_hi = s_mp;
        }
    }
    Ok(0.5 * (q1 + q2))
}

/// Greedy solution ν^a of the transformed LP: sort degrees by μ_k(q_γ)
/// ascending (ties broken by degree) and fill each jar to its capacity
/// k·p(k)/(d̄·q_γ) until unit mass is placed.
pub fn solve_p2(model: &PercolationModel, q_gamma: f64) -> Result<BTreeMap<usize, f64>> {
    if !(q_gamma > 0.0 && q_gamma < 1.0) {
        return Err(CascadeError::QGammaOutOfRange(q_gamma));
    }
    let mu = mu_values(model, q_gamma)?;
    let mut order: Vec<usize> = mu.keys().copied().collect();
    order.sort_by(|a, b| {
        mu[a].partial_cmp(&mu[b])
            .expect("mu is finite")
            .then(a.cmp(b))
    });
    let d_mean = model.dist().mean_degree();
    let mut nu: BTreeMap<usize, f64> = BTreeMap::new();
    let mut residual = 1.0f64;
    for k in order {
        if residual <= 0.0 {
            break;
        }
        let capacity = k as f64 * model.dist().probability(k) / (d_mean * q_gamma);
        let fill = residual.min(capacity);
        nu.insert(k, fill);
        residual -= fill;
    }
    if residual > 1e-9 {
        // Total capacity is 1/q_gamma > 1, so this cannot happen for a valid model.
        return Err(CascadeError::InfeasibleAllocation(format!(
            "could not place unit mass, {residual} left over"
        )));
    }
    Ok(nu)
}

/// Recovers the incentive policy from an allocation:
/// φ(k) = ν_k·d̄·q_γ/(k·p(k)), and 0 where p(k) = 0.
pub fn nu_to_phi(
    nu: &BTreeMap<usize, f64>,
    model: &PercolationModel,
    q_gamma: f64,
) -> Result<IncentivePolicy> {
    let dist = model.dist();
    let d_mean = dist.mean_degree();
    let mut phi = BTreeMap::new();
    for (&k, &v) in nu {
        let p = dist.probability(k);
        if p == 0.0 || k == 0 {
            if v > 1e-12 {
                return Err(CascadeError::InfeasibleAllocation(format!(
                    "nu_{k} = {v} but degree {k} has no mass"
                )));
            }
            continue;
        }
        let raw = v * d_mean * q_gamma / (k as f64 * p);
        if raw > 1.0 + 1e-9 || raw < -1e-12 {
            return Err(CascadeError::InfeasibleAllocation(format!(
                "nu_{k} = {v} exceeds its capacity (phi = {raw})"
            )));
        }
        phi.insert(k, raw.clamp(0.0, 1.0));
    }
    IncentivePolicy::new(phi)
}

/// Objective value d̄·q·Σ ν_k·μ_k(q) of an allocation at a given q.
fn allocation_cost(
    model: &PercolationModel,
    nu: &BTreeMap<usize, f64>,
    q: f64,
) -> Result<f64> {
    let mu = mu_values(model, q)?;
    Ok(model.dist().mean_degree()
        * q
        * nu.iter()
            .map(|(k, v)| v * mu.get(k).copied().unwrap_or(0.0))
            .sum::<f64>())
}

/// Minimizes the expected incentivization cost subject to s(q) ≥ γ.
pub fn minimize_cost(model: &PercolationModel, gamma: f64, eps: f64) -> Result<CostPlan> {
    model.params().require_strict_alphas()?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(CascadeError::InvalidProbability {
            name: "gamma",
            value: gamma,
        });
    }
    let s0 = model.cascade_fraction(0.0)?;
    let s1 = model.cascade_fraction(1.0)?;
    if gamma <= s0 {
        // Met without incentivizing anyone.
        return Ok(CostPlan {
            q_gamma: 0.0,
            nu: BTreeMap::new(),
            policy: IncentivePolicy::zero(),
            expected_cost: 0.0,
            predicted_size: s0,
            boundary_case: BoundaryCase::BelowGammaMin,
        });
    }
    if gamma > s1 {
        return Err(CascadeError::InfeasibleTarget { gamma, s_max: s1 });
    }
    if gamma == s1 {
        // Met only by incentivizing everyone.
        let policy = IncentivePolicy::all_ones(model.dist());
        let cost = model.expected_cost(&policy)?;
        return Ok(CostPlan {
            q_gamma: 1.0,
            nu: BTreeMap::new(),
            policy,
            expected_cost: cost,
            predicted_size: s1,
            boundary_case: BoundaryCase::AtGammaMax,
        });
    }
    let q_gamma = find_q_gamma(model, gamma, eps)?;
    let nu = solve_p2(model, q_gamma)?;
    let policy = nu_to_phi(&nu, model, q_gamma)?;
    let expected_cost = allocation_cost(model, &nu, q_gamma)?;
    let predicted_size = model.cascade_fraction(q_gamma)?;
    Ok(CostPlan {
        q_gamma,
        nu,
        policy,
        expected_cost,
        predicted_size,
        boundary_case: BoundaryCase::None,
    })
}

/// Maximizes s(q) subject to an expected-cost budget, by bisection over q
/// with the greedy allocation certifying feasibility at each midpoint.
pub fn maximize_cascade(model: &PercolationModel, budget: f64, eps: f64) -> Result<SizePlan> {
    model.params().require_strict_alphas()?;
    if budget < 0.0 {
        return Err(CascadeError::InvalidProbability {
            name: "budget",
            value: budget,
        });
    }
    // Everyone affordable?
    let full = IncentivePolicy::all_ones(model.dist());
    let full_cost = model.expected_cost(&full)?;
    if full_cost <= budget {
        return Ok(SizePlan {
            q_opt: 1.0,
            policy: full,
            predicted_size: model.cascade_fraction(1.0)?,
            expected_cost: full_cost,
        });
    }
    let (mut q1, mut q2) = (0.0f64, 1.0f64);
    let mut s_lo = model.cascade_fraction(0.0)?;
    let mut s_hi = model.cascade_fraction(1.0)?;
    for _ in 0..BISECTION_MAX_ITER {
        if (s_hi - s_lo).abs() <= eps {
            break;
        }
        let q_mp = 0.5 * (q1 + q2);
        let nu = solve_p2(model, q_mp)?;
        if allocation_cost(model, &nu, q_mp)? > budget {
            q2 = q_mp;
            s_hi = model.cascade_fraction(q_mp)?;
        } else {
            q1 = q_mp;
            s_lo = model.cascade_fraction(q_mp)?;
        }
    }
    // q1 is the largest certified-feasible point; its allocation backs the plan.
    let q_opt = q1;
    if q_opt <= 0.0 {
        return Ok(SizePlan {
            q_opt: 0.0,
            policy: IncentivePolicy::zero(),
            predicted_size: model.cascade_fraction(0.0)?,
            expected_cost: 0.0,
        });
    }
    let nu = solve_p2(model, q_opt)?;
    let policy = nu_to_phi(&nu, model, q_opt)?;
    let expected_cost = allocation_cost(model, &nu, q_opt)?;
    Ok(SizePlan {
        q_opt,
        policy,
        predicted_size: model.cascade_fraction(q_opt)?,
        expected_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree_model::{DegreeDistribution, ThresholdModel};
    use crate::percolation::{CampaignParams, CostSchedule};

    fn model(entries: &[(usize, f64)], z0: f64, a1: f64, a2: f64) -> PercolationModel {
        let dist = DegreeDistribution::new(entries.iter().copied().collect()).unwrap();
        let th = ThresholdModel::parametric(z0, 0.5).unwrap();
        let params = CampaignParams::new(a1, a2, CostSchedule::Linear).unwrap();
        PercolationModel::new(dist, th, params).unwrap()
    }

    #[test]
    fn find_q_gamma_round_trip() {
        let m = model(&[(1, 0.2), (3, 0.5), (6, 0.3)], 0.3, 0.1, 0.9);
        let gamma = m.cascade_fraction(0.5).unwrap();
        let q = find_q_gamma(&m, gamma, 1e-9).unwrap();
        assert!((q - 0.5).abs() < 1e-4);
    }

    #[test]
    fn find_q_gamma_boundaries() {
        let m = model(&[(3, 1.0)], 0.3, 0.1, 0.9);
        let s0 = m.cascade_fraction(0.0).unwrap();
        assert!(matches!(
            find_q_gamma(&m, s0, 1e-6),
            Err(CascadeError::TargetOutOfRange { .. })
        ));
        // Just above s(0), the inverse approaches 0.
        let q = find_q_gamma(&m, s0 + 1e-7, 1e-9).unwrap();
        assert!(q < 0.05);
    }

    #[test]
    fn find_q_gamma_requires_strict_alphas() {
        let m = model(&[(3, 1.0)], 0.3, 0.5, 0.5);
        assert!(matches!(
            find_q_gamma(&m, 0.5, 1e-6),
            Err(CascadeError::MonotonicityViolated { .. })
        ));
    }

    #[test]
    fn solve_p2_single_degree() {
        let m = model(&[(4, 1.0)], 0.3, 0.1, 0.9);
        let nu = solve_p2(&m, 0.6).unwrap();
        assert_eq!(nu.len(), 1);
        assert!((nu[&4] - 1.0).abs() < 1e-12);
        let phi = nu_to_phi(&nu, &m, 0.6).unwrap();
        // d̄ = k, so φ(k) = q_γ.
        assert!((phi.phi(4) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn solve_p2_two_jars() {
        // c_k = k makes μ_k = s_k(q); here the degree-3 class is cheaper
        // (tail of Bin(3,·) at threshold 2 is below the Bin(1,·) tail at 1),
        // so its jar fills to capacity first.
        let m = model(&[(1, 0.5), (3, 0.5)], 0.3, 0.1, 0.9);
        let q = 0.9;
        let s_k = m.cascade_fraction_by_degree(q).unwrap();
        assert!(s_k[&3] < s_k[&1]);
        let nu = solve_p2(&m, q).unwrap();
        let d = m.dist().mean_degree();
        let cap3 = 3.0 * 0.5 / (d * q);
        assert!((nu[&3] - cap3).abs() < 1e-12, "cheap jar filled to capacity");
        assert!((nu[&1] + nu[&3] - 1.0).abs() < 1e-12);
        let phi = nu_to_phi(&nu, &m, q).unwrap();
        assert!((phi.edge_type2_probability(m.dist()) - q).abs() < 1e-9);
        assert!((phi.phi(3) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn solve_p2_rejects_bad_q() {
        let m = model(&[(3, 1.0)], 0.3, 0.1, 0.9);
        assert!(matches!(
            solve_p2(&m, 0.0),
            Err(CascadeError::QGammaOutOfRange(_))
        ));
        assert!(matches!(
            solve_p2(&m, 1.0),
            Err(CascadeError::QGammaOutOfRange(_))
        ));
    }

    #[test]
    fn nu_to_phi_rejects_overfull_jar() {
        let m = model(&[(1, 0.5), (3, 0.5)], 0.3, 0.1, 0.9);
        let nu: BTreeMap<usize, f64> = [(1, 1.0)].into_iter().collect();
        // Capacity of degree 1 at q = 0.9 is 0.5/(2·0.9) < 1.
        assert!(nu_to_phi(&nu, &m, 0.9).is_err());
    }

    #[test]
    fn minimize_cost_boundaries() {
        let m = model(&[(1, 0.2), (3, 0.5), (6, 0.3)], 0.3, 0.1, 0.9);
        let plan = minimize_cost(&m, 0.0, 1e-6).unwrap();
        assert_eq!(plan.boundary_case, BoundaryCase::BelowGammaMin);
        assert_eq!(plan.expected_cost, 0.0);

        let s1 = m.cascade_fraction(1.0).unwrap();
        let plan = minimize_cost(&m, s1, 1e-6).unwrap();
        assert_eq!(plan.boundary_case, BoundaryCase::AtGammaMax);
        for (k, _) in m.dist().support() {
            assert_eq!(plan.policy.phi(k), 1.0);
        }

        assert!(matches!(
            minimize_cost(&m, s1 + 1e-6, 1e-6),
            Err(CascadeError::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn minimize_cost_interior_meets_floor() {
        let m = model(&[(1, 0.2), (3, 0.5), (6, 0.3)], 0.3, 0.1, 0.9);
        let s0 = m.cascade_fraction(0.0).unwrap();
        let s1 = m.cascade_fraction(1.0).unwrap();
        let gamma = 0.5 * (s0 + s1);
        let eps = 1e-7;
        let plan = minimize_cost(&m, gamma, eps).unwrap();
        assert_eq!(plan.boundary_case, BoundaryCase::None);
        assert!(plan.predicted_size >= gamma - 10.0 * eps);
        let nu_sum: f64 = plan.nu.values().sum();
        assert!((nu_sum - 1.0).abs() < 1e-9);
        assert!(
            (plan.policy.edge_type2_probability(m.dist()) - plan.q_gamma).abs() < 1e-9
        );
        // Cost via the LP objective equals the direct policy cost.
        let direct = m.expected_cost(&plan.policy).unwrap();
        assert!((plan.expected_cost - direct).abs() < 1e-9);
    }

    #[test]
    fn minimize_cost_monotone_in_gamma() {
        let m = model(&[(1, 0.2), (3, 0.5), (6, 0.3)], 0.3, 0.1, 0.9);
        let s0 = m.cascade_fraction(0.0).unwrap();
        let s1 = m.cascade_fraction(1.0).unwrap();
        let mut last = -1.0;
        for i in 1..10 {
            let gamma = s0 + (s1 - s0) * i as f64 / 10.0;
            let plan = minimize_cost(&m, gamma, 1e-7).unwrap();
            assert!(plan.expected_cost >= last - 1e-9);
            last = plan.expected_cost;
        }
    }

    #[test]
    fn maximize_cascade_boundaries() {
        let m = model(&[(1, 0.2), (3, 0.5), (6, 0.3)], 0.3, 0.1, 0.9);
        let plan = maximize_cascade(&m, 0.0, 1e-6).unwrap();
        assert_eq!(plan.q_opt, 0.0);
        assert_eq!(plan.expected_cost, 0.0);
        let s0 = m.cascade_fraction(0.0).unwrap();
        assert!((plan.predicted_size - s0).abs() < 1e-12);

        let full_cost = m
            .expected_cost(&IncentivePolicy::all_ones(m.dist()))
            .unwrap();
        let plan = maximize_cascade(&m, full_cost + 1.0, 1e-6).unwrap();
        assert_eq!(plan.q_opt, 1.0);
    }

    #[test]
    fn maximize_cascade_monotone_in_budget() {
        let m = model(&[(1, 0.2), (3, 0.5), (6, 0.3)], 0.3, 0.1, 0.9);
        let mut last = 0.0;
        for budget in [0.0, 0.05, 0.1, 0.3, 0.8, 2.0] {
            let plan = maximize_cascade(&m, budget, 1e-7).unwrap();
            assert!(plan.expected_cost <= budget + 1e-9);
            assert!(plan.predicted_size >= last - 1e-9);
            last = plan.predicted_size;
        }
    }

    #[test]
    fn deterministic_output() {
        let m = model(&[(1, 0.3), (2, 0.3), (5, 0.4)], 0.25, 0.2, 0.8);
        let s0 = m.cascade_fraction(0.0).unwrap();
        let s1 = m.cascade_fraction(1.0).unwrap();
        let gamma = 0.5 * (s0 + s1);
        let a = minimize_cost(&m, gamma, 1e-7).unwrap();
        let b = minimize_cost(&m, gamma, 1e-7).unwrap();
        assert_eq!(a.nu, b.nu);
        assert_eq!(a.policy, b.policy);
    }
}
