//! Self-consistency function f(q,u), its fixed point u_q, and the cascade
//! sizes s_k(q), s(q) plus the expected incentivization cost.

use std::collections::BTreeMap;

use crate::degree_model::{DegreeDistribution, IncentivePolicy, ThresholdModel};
use crate::error::{CascadeError, Result};

/// Default residual tolerance for the fixed-point iteration.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Default iteration cap for the fixed-point iteration.
pub const FIXED_POINT_MAX_ITER: usize = 100_000;

/// Activation probabilities and cost schedule of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub costs: CostSchedule,
}

/// Cost of incentivizing a degree-k node.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSchedule {
    /// c_k = k, a unit reward per neighbour.
    Linear,
    /// Explicit per-degree costs; missing degrees cost 0.
    Table(BTreeMap<usize, f64>),
}

impl CostSchedule {
    pub fn cost(&self, k: usize) -> f64 {
        match self {
            Self::Linear => k as f64,
            Self::Table(t) => t.get(&k).copied().unwrap_or(0.0),
        }
    }
}

impl CampaignParams {
    pub fn new(alpha1: f64, alpha2: f64, costs: CostSchedule) -> Result<Self> {
        if !(alpha1 > 0.0 && alpha1 <= 1.0) {
            return Err(CascadeError::InvalidProbability {
                name: "alpha1",
                value: alpha1,
            });
        }
        if !(alpha2 > 0.0 && alpha2 <= 1.0) {
            return Err(CascadeError::InvalidProbability {
                name: "alpha2",
                value: alpha2,
            });
        }
        if let CostSchedule::Table(t) = &costs {
            if let Some((&k, &c)) = t.iter().find(|&(_, &c)| c < 0.0) {
                return Err(CascadeError::InvalidDistribution(format!(
                    "cost c_{k} = {c} is negative"
                )));
            }
        }
        Ok(Self {
            alpha1,
            alpha2,
            costs,
        })
    }

    /// The optimizer relies on α2 > α1 (strict monotonicity of s in q).
    pub fn require_strict_alphas(&self) -> Result<()> {
        if self.alpha2 > self.alpha1 {
            Ok(())
        } else {
            Err(CascadeError::MonotonicityViolated {
                alpha1: self.alpha1,
                alpha2: self.alpha2,
            })
        }
    }
}

/// Immutable bundle of degree distribution, threshold model and campaign
/// parameters; precomputes the excess degree distribution.
#[derive(Debug, Clone)]
pub struct PercolationModel {
    dist: DegreeDistribution,
    thresholds: ThresholdModel,
    params: CampaignParams,
    /// (excess degree, probability), ascending.
    excess: Vec<(usize, f64)>,
}

/// Converged fixed point of u = f(q, u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResult {
    pub u: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// ū = u·(q·α2 + (1−q)·α1): the marginal probability that a random neighbor
/// is active and registered. Mixing over the neighbor's type collapses the
/// sum X_{k2} + Y_{k−k2} to a single Bin(k, ū).
pub fn active_neighbor_probability(q: f64, u: f64, params: &CampaignParams) -> f64 {
    u * (q * params.alpha2 + (1.0 - q) * params.alpha1)
}

/// P[Bin(k, p) ≥ m] by summing pmf terms from m to k with the multiplicative
/// recurrence; O(k) and accurate in double precision for k up to ~10^4.
pub fn binomial_tail(k: usize, p: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > k {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    // pmf(0) = (1-p)^k, pmf(i+1) = pmf(i)·((k-i)/(i+1))·(p/(1-p))
    let ratio = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(k as i32);
    let mut tail = if m == 0 { pmf } else { 0.0 };
    for i in 0..k {
        pmf *= (k - i) as f64 / (i + 1) as f64 * ratio;
        if i + 1 >= m {
            tail += pmf;
        }
    }
    tail.clamp(0.0, 1.0)
}

impl PercolationModel {
    pub fn new(
        dist: DegreeDistribution,
        thresholds: ThresholdModel,
        params: CampaignParams,
    ) -> Result<Self> {
        if !thresholds.covers(&dist) {
            return Err(CascadeError::InvalidDistribution(
                "threshold table does not cover the degree support".into(),
            ));
        }
        let excess = dist.excess_distribution().into_iter().collect();
        Ok(Self {
            dist,
            thresholds,
            params,
            excess,
        })
    }

    pub fn dist(&self) -> &DegreeDistribution {
        &self.dist
    }

    pub fn thresholds(&self) -> &ThresholdModel {
        &self.thresholds
    }

    pub fn params(&self) -> &CampaignParams {
        &self.params
    }

    /// f(q,u) = Σ_k p_ex(k)·p_th(0|k+1)
    ///        + Σ_{k≥1} p_ex(k) Σ_{m≥1} p_th(m|k+1)·P[Bin(k, ū) ≥ m].
    pub fn eval_f(&self, q: f64, u: f64) -> f64 {
        let ubar = active_neighbor_probability(q, u, &self.params);
        let mut total = 0.0;
        for &(k, p_ex) in &self.excess {
            total += p_ex * self.thresholds.zealous_probability(k + 1);
            if k >= 1 {
                for (m, p_m) in self.thresholds.positive_thresholds(k + 1) {
                    total += p_ex * p_m * binomial_tail(k, ubar, m);
                }
            }
        }
        total.clamp(0.0, 1.0)
    }

    /// Solves u = f(q, u) by forward iteration from u₀ = f(q, 0).
    ///
    /// f is nondecreasing and convex in u, so the iteration climbs
    /// monotonically to the unique interior fixed point.
    pub fn solve_fixed_point(
        &self,
        q: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<FixedPointResult> {
        let mut u = self.eval_f(q, 0.0);
        for it in 0..max_iter {
            let next = self.eval_f(q, u);
            let residual = (next - u).abs();
            if residual <= tol {
                return Ok(FixedPointResult {
                    u: next,
                    iterations: it + 1,
                    residual,
                });
            }
            u = next;
        }
        let residual = (self.eval_f(q, u) - u).abs();
        Err(CascadeError::Convergence {
            last: u,
            residual,
            iterations: max_iter,
        })
    }

    /// Fixed point with default tolerance and iteration cap.
    pub fn fixed_point(&self, q: f64) -> Result<FixedPointResult> {
        self.solve_fixed_point(q, FIXED_POINT_TOL, FIXED_POINT_MAX_ITER)
    }

    /// s_k(q) for every degree k in the support.
    pub fn cascade_fraction_by_degree(&self, q: f64) -> Result<BTreeMap<usize, f64>> {
        let u = self.fixed_point(q)?.u;
        Ok(self.fractions_at(q, u))
    }

    /// s_k values at a given (q, u); shared by the public entry points so the
    /// fixed point is solved once.
    fn fractions_at(&self, q: f64, u: f64) -> BTreeMap<usize, f64> {
        let ubar = active_neighbor_probability(q, u, &self.params);
        self.dist
            .support()
            .map(|(k, _)| {
                let mut s_k = self.thresholds.zealous_probability(k);
                for (m, p_m) in self.thresholds.positive_thresholds(k) {
                    s_k += p_m * binomial_tail(k, ubar, m);
                }
                (k, s_k.clamp(0.0, 1.0))
            })
            .collect()
    }

    /// s(q) = Σ_k p(k)·s_k(q), the expected registered fraction.
    pub fn cascade_fraction(&self, q: f64) -> Result<f64> {
        let s_k = self.cascade_fraction_by_degree(q)?;
        Ok(self.mix_fractions(&s_k))
    }

    /// (u_q, s_k(q), s(q)) in one fixed-point solve.
    pub fn cascade_profile(&self, q: f64) -> Result<(f64, BTreeMap<usize, f64>, f64)> {
        let u = self.fixed_point(q)?.u;
        let s_k = self.fractions_at(q, u);
        let s = self.mix_fractions(&s_k);
        Ok((u, s_k, s))
    }

    fn mix_fractions(&self, s_k: &BTreeMap<usize, f64>) -> f64 {
        self.dist
            .support()
            .map(|(k, p)| p * s_k[&k])
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Expected cost per node of a policy: Σ_k p(k)·c_k·φ(k)·s_k(q) with q
    /// induced by φ. Incentives are paid only upon registration.
    pub fn expected_cost(&self, policy: &IncentivePolicy) -> Result<f64> {
        let q = policy.edge_type2_probability(&self.dist);
        let s_k = self.cascade_fraction_by_degree(q)?;
        Ok(self
            .dist
            .support()
            .map(|(k, p)| p * self.params.costs.cost(k) * policy.phi(k) * s_k[&k])
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree_model::PolicyScheme;
    use proptest::prelude::*;

    fn three_regular(z0: f64, alpha1: f64, alpha2: f64) -> PercolationModel {
        let dist = DegreeDistribution::new([(3, 1.0)].into_iter().collect()).unwrap();
        let th = ThresholdModel::parametric(z0, 0.5).unwrap();
        let params = CampaignParams::new(alpha1, alpha2, CostSchedule::Linear).unwrap();
        PercolationModel::new(dist, th, params).unwrap()
    }

    #[test]
    fn active_neighbor_probability_examples() {
        let p = CampaignParams::new(0.1, 0.9, CostSchedule::Linear).unwrap();
        assert!((active_neighbor_probability(0.0, 0.5, &p) - 0.05).abs() < 1e-15);
        assert!((active_neighbor_probability(1.0, 1.0, &p) - 0.9).abs() < 1e-15);
        assert!((active_neighbor_probability(0.5, 0.5, &p) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn binomial_tail_examples() {
        assert_eq!(binomial_tail(5, 0.3, 0), 1.0);
        assert_eq!(binomial_tail(2, 0.3, 3), 0.0);
        let u: f64 = 0.37;
        assert!((binomial_tail(2, u, 2) - u * u).abs() < 1e-14);
        let expect = 135.0 / 343.0;
        assert!((binomial_tail(3, 3.0 / 7.0, 2) - expect).abs() < 1e-14);
    }

    #[test]
    fn binomial_tail_degenerate_p() {
        assert_eq!(binomial_tail(10, 0.0, 1), 0.0);
        assert_eq!(binomial_tail(10, 1.0, 10), 1.0);
        assert_eq!(binomial_tail(10, 1.0, 11), 0.0);
    }

    #[test]
    fn eval_f_closed_form() {
        // 3-regular: f(q,u) = 0.3 + 0.7 u^2 for every q when α1 = α2 = 1.
        let m = three_regular(0.3, 1.0, 1.0);
        for q in [0.0, 0.3, 1.0] {
            for u in [0.0, 0.25, 0.9] {
                let expect = 0.3 + 0.7 * u * u;
                assert!((m.eval_f(q, u) - expect).abs() < 1e-14);
            }
        }
        assert!((m.eval_f(0.4, 0.0) - 0.3).abs() < 1e-15);

        let none = three_regular(0.0, 1.0, 1.0);
        assert_eq!(none.eval_f(0.7, 0.0), 0.0);
    }

    #[test]
    fn fixed_point_closed_form() {
        let m = three_regular(0.3, 1.0, 1.0);
        let fp = m.fixed_point(0.5).unwrap();
        assert!((fp.u - 3.0 / 7.0).abs() < 1e-9);
        assert!(fp.residual <= FIXED_POINT_TOL);

        let none = three_regular(0.0, 1.0, 1.0);
        assert_eq!(none.fixed_point(0.5).unwrap().u, 0.0);

        let all = three_regular(1.0, 1.0, 1.0);
        assert!((all.fixed_point(0.5).unwrap().u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convergence_error_carries_state() {
        let m = three_regular(0.3, 1.0, 1.0);
        match m.solve_fixed_point(0.5, 1e-12, 2) {
            Err(CascadeError::Convergence {
                last, residual, ..
            }) => {
                assert!(last > 0.0 && last < 1.0);
                assert!(residual > 1e-12);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn cascade_fractions_closed_form() {
        let m = three_regular(0.3, 1.0, 1.0);
        let expect = 0.3 + 0.7 * 135.0 / 343.0;
        let s_k = m.cascade_fraction_by_degree(0.2).unwrap();
        assert!((s_k[&3] - expect).abs() < 1e-9);
        assert!((m.cascade_fraction(0.2).unwrap() - expect).abs() < 1e-9);

        // With α1 = α2 the value is q-independent.
        for q in [0.0, 0.5, 1.0] {
            assert!((m.cascade_fraction(q).unwrap() - expect).abs() < 1e-9);
        }

        let all = three_regular(1.0, 1.0, 1.0);
        assert!((all.cascade_fraction(0.3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_zero_never_registers_without_zeal() {
        let dist =
            DegreeDistribution::new([(0, 0.5), (3, 0.5)].into_iter().collect()).unwrap();
        let th = ThresholdModel::parametric(0.3, 0.5).unwrap();
        let params = CampaignParams::new(1.0, 1.0, CostSchedule::Linear).unwrap();
        let m = PercolationModel::new(dist, th, params).unwrap();
        let s_k = m.cascade_fraction_by_degree(0.0).unwrap();
        assert!((s_k[&0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn expected_cost_examples() {
        let m = three_regular(0.3, 1.0, 1.0);
        assert_eq!(m.expected_cost(&IncentivePolicy::zero()).unwrap(), 0.0);

        let full = IncentivePolicy::all_ones(m.dist());
        let s3 = 0.3 + 0.7 * 135.0 / 343.0;
        assert!((m.expected_cost(&full).unwrap() - 3.0 * s3).abs() < 1e-9);

        let free = PercolationModel::new(
            m.dist().clone(),
            m.thresholds().clone(),
            CampaignParams::new(1.0, 1.0, CostSchedule::Table(BTreeMap::new())).unwrap(),
        )
        .unwrap();
        assert_eq!(free.expected_cost(&full).unwrap(), 0.0);
    }

    #[test]
    fn zealous_bounds() {
        // z0 ≤ s(q) ≤ 1 and f(q,1) < 1 whenever z0 < 1.
        let dist = DegreeDistribution::new(
            [(1, 0.2), (3, 0.5), (7, 0.3)].into_iter().collect(),
        )
        .unwrap();
        let th = ThresholdModel::parametric(0.25, 0.5).unwrap();
        let params = CampaignParams::new(0.2, 0.8, CostSchedule::Linear).unwrap();
        let m = PercolationModel::new(dist, th, params).unwrap();
        for q in [0.0, 0.4, 1.0] {
            let s = m.cascade_fraction(q).unwrap();
            assert!((0.25..=1.0).contains(&s));
            assert!(m.eval_f(q, 1.0) < 1.0);
        }
    }

    #[test]
    fn uniform_policy_matches_scheme() {
        let dist = DegreeDistribution::new(
            [(2, 0.4), (5, 0.6)].into_iter().collect(),
        )
        .unwrap();
        let policy =
            IncentivePolicy::make_policy(PolicyScheme::Uniform, 0.35, &dist).unwrap();
        assert!((policy.edge_type2_probability(&dist) - 0.35).abs() < 1e-12);
    }

    proptest! {
        // f is nondecreasing in u on [0,1]. Each tail P[Bin(k, ū) ≥ m] is
        // convex in ū only up to its inflection (m−1)/(k−1), so f is
        // guaranteed convex for ū below the smallest inflection of the
        // contributing terms; for this distribution (excess degrees 2 and 5,
        // thresholds 2 and 3) that is ū < 1/2. The convexity assertion stays
        // inside that region intersected with [0, u_q].
        #[test]
        fn f_monotone_convex_in_u(q in 0.0f64..=1.0, z0 in 0.05f64..0.95,
                                  a1 in 0.05f64..0.95, extra in 0.0f64..0.9) {
            let a2 = a1 + (1.0 - a1) * extra;
            let dist = DegreeDistribution::new(
                [(1, 0.2), (3, 0.5), (6, 0.3)].into_iter().collect()
            ).unwrap();
            let th = ThresholdModel::parametric(z0, 0.5).unwrap();
            let params = CampaignParams::new(a1, a2.max(a1), CostSchedule::Linear).unwrap();
            let m = PercolationModel::new(dist, th, params).unwrap();
            let vals: Vec<f64> = (0..=100)
                .map(|i| m.eval_f(q, i as f64 / 100.0))
                .collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] - w[0] >= -1e-12);
            }
            let u_q = m.fixed_point(q).unwrap().u;
            let slope = q * m.params().alpha2 + (1.0 - q) * m.params().alpha1;
            let u_cap = u_q.min(0.5 / slope).min(1.0);
            let inner: Vec<f64> = (0..=100)
                .map(|i| m.eval_f(q, u_cap * i as f64 / 100.0))
                .collect();
            for w in inner.windows(3) {
                prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-10);
            }
        }

        // Prop 2: bisection on f(q,u) − u agrees with forward iteration.
        #[test]
        fn bisection_agrees_with_iteration(q in 0.0f64..=1.0, z0 in 0.05f64..0.95) {
            let dist = DegreeDistribution::new(
                [(2, 0.5), (4, 0.5)].into_iter().collect()
            ).unwrap();
            let th = ThresholdModel::parametric(z0, 0.5).unwrap();
            let params = CampaignParams::new(0.3, 0.9, CostSchedule::Linear).unwrap();
            let m = PercolationModel::new(dist, th, params).unwrap();
            let tol = 1e-10;
            let fp = m.solve_fixed_point(q, tol, FIXED_POINT_MAX_ITER).unwrap();
            // Independent route: bisection on g(u) = f(q,u) − u. g(0) > 0 and
            // g(1) < 1 for z0 ∈ (0,1).
            let g = |u: f64| m.eval_f(q, u) - u;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 { lo = mid; } else { hi = mid; }
            }
            let u_bisect = 0.5 * (lo + hi);
            prop_assert!((u_bisect - fp.u).abs() < 10.0 * tol.max(1e-9));
        }
    }
}
