//! Brute-force reference implementations.
//!
//! These certify the fast analytic and optimizer paths at small scale and
//! deliberately share no code with the modules they check. Clarity over
//! speed throughout; none of this scales past toy supports.

use std::collections::BTreeMap;

use crate::error::{CascadeError, Result};
use crate::percolation::PercolationModel;

const MAX_ORACLE_SUPPORT: usize = 6;

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

fn binomial_pmf(n: usize, p: f64, x: usize) -> f64 {
    binomial_coefficient(n, x) * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32)
}

/// P[Bin(k2, p2) + Bin(k−k2, p1) ≥ m] by full enumeration of (l, l') pairs.
pub fn convolution_tail(k: usize, k2: usize, m: usize, p1: f64, p2: f64) -> f64 {
    assert!(k2 <= k, "k2 must not exceed k");
    let mut total = 0.0;
    for l in 0..=k2 {
        for l_prime in 0..=(k - k2) {
            if l + l_prime >= m {
                total += binomial_pmf(k2, p2, l) * binomial_pmf(k - k2, p1, l_prime);
            }
        }
    }
    total
}

/// Evaluates the self-consistency function exactly as the triple sum over
/// excess degree, threshold and type-2 neighbor count, with no collapse.
pub fn eval_f_direct(model: &PercolationModel, q: f64, u: f64) -> f64 {
    let a1 = model.params().alpha1;
    let a2 = model.params().alpha2;
    let excess = model.dist().excess_distribution();
    let mut total = 0.0;
    for (&k, &p_ex) in &excess {
        total += p_ex * model.thresholds().zealous_probability(k + 1);
        if k == 0 {
            continue;
        }
        for (m, p_m) in model.thresholds().positive_thresholds(k + 1) {
            let mut mixture = 0.0;
            for k2 in 0..=k {
                mixture += binomial_pmf(k, q, k2) * convolution_tail(k, k2, m, a1 * u, a2 * u);
            }
            total += p_ex * p_m * mixture;
        }
    }
    total
}

/// Enumerates the vertices of the feasible region of the transformed LP and
/// returns the objective-minimal one. Each vertex fills jars to capacity in
/// some subset order with at most one fractional jar; LP optima occur at
/// vertices, so the search is exact for supports of size ≤ 6.
pub fn enumerate_p2(model: &PercolationModel, q_gamma: f64) -> Result<BTreeMap<usize, f64>> {
    let degrees: Vec<usize> = model
        .dist()
        .support()
        .filter(|&(k, _)| k >= 1)
        .map(|(k, _)| k)
        .collect();
    if degrees.len() > MAX_ORACLE_SUPPORT {
        return Err(CascadeError::OracleTooLarge {
            got: degrees.len(),
            limit: MAX_ORACLE_SUPPORT,
        });
    }
    let s_k = model.cascade_fraction_by_degree(q_gamma)?;
    let d_mean = model.dist().mean_degree();
    let capacity: BTreeMap<usize, f64> = degrees
        .iter()
        .map(|&k| (k, k as f64 * model.dist().probability(k) / (d_mean * q_gamma)))
        .collect();
    let mu: BTreeMap<usize, f64> = degrees
        .iter()
        .map(|&k| (k, s_k[&k] * model.params().costs.cost(k) / k as f64))
        .collect();

    let objective = |nu: &BTreeMap<usize, f64>| -> f64 {
        nu.iter().map(|(k, v)| v * mu[k]).sum()
    };

    let mut best: Option<(f64, BTreeMap<usize, f64>)> = None;
    for order in permutations(&degrees) {
        let mut nu = BTreeMap::new();
        let mut residual = 1.0f64;
        for &k in &order {
            if residual <= 0.0 {
                break;
            }
            let fill = residual.min(capacity[&k]);
            nu.insert(k, fill);
            residual -= fill;
        }
        if residual > 1e-12 {
            continue; // not enough capacity in this order (cannot happen for q < 1)
        }
        let value = objective(&nu);
        match &best {
            Some((b, _)) if *b <= value => {}
            _ => best = Some((value, nu)),
        }
    }
    best.map(|(_, nu)| nu)
        .ok_or_else(|| CascadeError::InfeasibleAllocation("no feasible vertex".into()))
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest: Vec<usize> = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Exhaustive per-degree grid search over φ for the cost-minimization
/// problem; keeps policies whose predicted size clears γ − 1e-6 and returns
/// the cheapest together with its grid policy.
pub fn grid_search_min_cost(
    model: &PercolationModel,
    gamma: f64,
    step: f64,
) -> Result<(f64, BTreeMap<usize, f64>)> {
    assert!(step > 0.0 && step <= 0.5, "step must be in (0, 0.5]");
    let degrees: Vec<usize> = model.dist().support().map(|(k, _)| k).collect();
    if degrees.len() > 3 {
        return Err(CascadeError::OracleTooLarge {
            got: degrees.len(),
            limit: 3,
        });
    }
    let levels: Vec<f64> = {
        let mut v: Vec<f64> = (0..)
            .map(|i| i as f64 * step)
            .take_while(|&x| x < 1.0)
            .collect();
        v.push(1.0);
        v
    };
    let d_mean = model.dist().mean_degree();
    let mut best: Option<(f64, BTreeMap<usize, f64>)> = None;
    let mut assignment = vec![0usize; degrees.len()];
    loop {
        let phi: BTreeMap<usize, f64> = degrees
            .iter()
            .zip(&assignment)
            .map(|(&k, &idx)| (k, levels[idx]))
            .collect();
        let q: f64 = degrees
            .iter()
            .map(|&k| k as f64 * model.dist().probability(k) * phi[&k])
            .sum::<f64>()
            / d_mean;
        let s_k = model.cascade_fraction_by_degree(q)?;
        let s: f64 = model
            .dist()
            .support()
            .map(|(k, p)| p * s_k[&k])
            .sum();
        if s >= gamma - 1e-6 {
            let cost: f64 = degrees
                .iter()
                .map(|&k| {
                    model.dist().probability(k)
                        * model.params().costs.cost(k)
                        * phi[&k]
                        * s_k[&k]
                })
                .sum();
            match &best {
                Some((b, _)) if *b <= cost => {}
                _ => best = Some((cost, phi)),
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == assignment.len() {
                return best.ok_or(CascadeError::TargetUnreachableOnGrid);
            }
            assignment[pos] += 1;
            if assignment[pos] < levels.len() {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}
