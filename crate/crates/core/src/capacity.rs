//! Throughput maximization under a weighted capacity budget:
//!
//! ```text
//! maximize R(λ)  subject to  Σ wᵢλᵢ ≤ b,  λ ≥ 0
//! ```
//!
//! `R` is strictly concave, increasing in every rate and homogeneous of
//! degree one, so the budget is active at the unique optimum. The solver runs
//! projected gradient ascent on `{λ ≥ ε, Σ wᵢλᵢ = b}` with central
//! finite-difference gradients of [`spectral_throughput`], Barzilai–Borwein
//! trial steps and Armijo backtracking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::rfm::RateProfile;
use crate::spectral::spectral_throughput;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BudgetConstraint {
    weights: Vec<f64>,
    budget: f64,
}

impl BudgetConstraint {
    pub fn new(weights: Vec<f64>, budget: f64) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(
                "weights must be non-empty, positive and finite",
            ));
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::invalid(format!(
                "budget must be positive, got {budget}"
            )));
        }
        Ok(BudgetConstraint { weights, budget })
    }

    /// Unit weights on `n + 1` rates.
    pub fn uniform(n: usize, budget: f64) -> Result<Self> {
        Self::new(vec![1.0; n + 1], budget)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn cost(&self, rates: &[f64]) -> f64 {
        dot(&self.weights, rates)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop once [`kkt_residual`] falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Lower bound ε on every rate.
    pub floor: f64,
    /// Starting rates, projected onto the feasible set before use. `None`
    /// starts from `λᵢ = b / ((n+1) wᵢ)`.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            max_iterations: 100_000,
            fd_step: 1e-6,
            floor: 1e-9,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptResult {
    pub optimal_rates: RateProfile,
    pub optimal_throughput: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

fn throughput_of(rates: &[f64]) -> f64 {
    // callers keep rates ≥ ε > 0
    spectral_throughput(&RateProfile::new(rates.to_vec()).expect("rates stay positive"))
}

/// Central-difference gradient of `R` with step `rel_step · λᵢ`.
pub fn throughput_gradient(rates: &RateProfile, rel_step: f64) -> Vec<f64> {
    let mut x = rates.as_slice().to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            let h = rel_step * xi;
            x[i] = xi + h;
            let up = throughput_of(&x);
            x[i] = xi - h;
            let down = throughput_of(&x);
            x[i] = xi;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Part of `g` orthogonal to the constraint normal `w`.
fn tangential(g: &[f64], w: &[f64]) -> Vec<f64> {
    let k = dot(g, w) / dot(w, w);
    g.iter().zip(w).map(|(gi, wi)| gi - k * wi).collect()
}

/// Norm of the gradient component orthogonal to the budget normal.
pub fn kkt_residual(rates: &RateProfile, c: &BudgetConstraint) -> Result<f64> {
    check_len(rates.as_slice().len(), c)?;
    let g = throughput_gradient(rates, SolverOptions::default().fd_step);
    Ok(norm(&tangential(&g, c.weights())))
}

fn check_len(len: usize, c: &BudgetConstraint) -> Result<()> {
    if len != c.weights.len() {
        return Err(Error::invalid(format!(
            "{} rates but {} weights",
            len,
            c.weights.len()
        )));
    }
    Ok(())
}

/// Euclidean projection onto `{x ≥ floor, Σ wᵢxᵢ = b}`.
///
/// The solution has the form `xᵢ = max(floor, yᵢ − τ wᵢ)`; `τ` is found by
/// sorting the breakpoints `(yᵢ − floor)/wᵢ`.
pub fn project_onto_budget(y: &[f64], c: &BudgetConstraint, floor: f64) -> Result<Vec<f64>> {
    check_len(y.len(), c)?;
    let w = c.weights();
    let wsum: f64 = w.iter().sum();
    if floor * wsum >= c.budget {
        return Err(Error::invalid(
            "rate floor leaves no room inside the budget",
        ));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    let brk = |i: usize| (y[i] - floor) / w[i];
    order.sort_by(|a, b| brk(*b).total_cmp(&brk(*a)));

    // active set = first k in `order`
    let (mut swy, mut sww, mut inactive_w) = (0.0, 0.0, wsum);
    let mut tau = 0.0;
    for (k, &i) in order.iter().enumerate() {
        swy += w[i] * y[i];
        sww += w[i] * w[i];
        inactive_w -= w[i];
        tau = (swy + floor * inactive_w - c.budget) / sww;
        let next = order.get(k + 1).map(|&j| brk(j));
        if next.is_none_or(|b| tau >= b) {
            break;
        }
    }
    Ok(y.iter()
        .zip(w)
        .map(|(yi, wi)| f64::max(floor, yi - tau * wi))
        .collect())
}

pub fn maximize_throughput(
    n: usize,
    c: &BudgetConstraint,
    opts: &SolverOptions,
) -> Result<OptResult> {
    maximize_throughput_observed(n, c, opts, |_, _| {})
}

/// As [`maximize_throughput`], calling `observe(rates, R)` on the starting
/// point and after every accepted step.
pub fn maximize_throughput_observed(
    n: usize,
    c: &BudgetConstraint,
    opts: &SolverOptions,
    mut observe: impl FnMut(&[f64], f64),
) -> Result<OptResult> {
    if n == 0 {
        return Err(Error::invalid("chain must have at least one site"));
    }
    check_len(n + 1, c)?;
    if !(opts.tolerance > 0.0 && opts.fd_step > 0.0 && opts.floor > 0.0) {
        return Err(Error::invalid("solver tolerances must be positive"));
    }
    let w = c.weights();
    let start = match &opts.start {
        Some(s) => {
            check_len(s.len(), c)?;
            s.clone()
        }
        None => w
            .iter()
            .map(|wi| c.budget / ((n + 1) as f64 * wi))
            .collect(),
    };
    let mut x = project_onto_budget(&start, c, opts.floor)?;
    let mut r = throughput_of(&x);
    observe(&x, r);
    let grad = |x: &[f64]| {
        throughput_gradient(
            &RateProfile::new(x.to_vec()).expect("rates stay positive"),
            opts.fd_step,
        )
    };
    let mut g = grad(&x);
    let mut kkt = norm(&tangential(&g, w));
    let mut step = 0.1 * norm(&x) / kkt.max(f64::MIN_POSITIVE);
    let mut iterations = 0;

    let mut trial = vec![0.0; x.len()];
    while kkt > opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence {
                what: "capacity allocation",
                residual: kkt,
                best: x,
            });
        }
        iterations += 1;

        let mut accepted = None;
        for _ in 0..80 {
            for i in 0..x.len() {
                trial[i] = x[i] + step * g[i];
            }
            let y = project_onto_budget(&trial, c, opts.floor)?;
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let ry = throughput_of(&y);
            if ry >= r + 1e-4 * dot(&g, &d) && ry >= r {
                accepted = Some((y, d, ry));
                break;
            }
            step *= 0.5;
        }
        let Some((y, d, ry)) = accepted else {
            return Err(Error::NonConvergence {
                what: "capacity allocation line search",
                residual: kkt,
                best: x,
            });
        };

        let gy = grad(&y);
        let dg: f64 = d
            .iter()
            .zip(gy.iter().zip(&g))
            .map(|(di, (a, b))| di * (a - b))
            .sum();
        let dd = dot(&d, &d);
        // concave objective: curvature along d is negative
        step = if dg < 0.0 && dd > 0.0 {
            dd / -dg
        } else {
            2.0 * step
        };

        x = y;
        r = ry;
        g = gy;
        observe(&x, r);
        kkt = norm(&tangential(&g, w));
    }

    Ok(OptResult {
        optimal_rates: RateProfile::new(x).expect("rates stay positive"),
        optimal_throughput: r,
        iterations,
        kkt_residual: kkt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_budget() {
        let c = BudgetConstraint::new(vec![1.0, 2.0, 0.5, 3.0], 4.0).unwrap();
        for y in [
            vec![0.0, 0.0, 0.0, 0.0],
            vec![10.0, -3.0, 2.0, 0.1],
            vec![-5.0, -5.0, 8.0, 1.0],
        ] {
            let x = project_onto_budget(&y, &c, 1e-9).unwrap();
            assert!((c.cost(&x) - 4.0).abs() < 1e-12, "{x:?}");
            assert!(x.iter().all(|v| *v >= 1e-9));
        }
    }

    #[test]
    fn projection_is_nearest_point() {
        // compare against random feasible points
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let c = BudgetConstraint::new(vec![1.0, 0.5, 2.0], 3.0).unwrap();
        let y = [2.5, -1.0, 0.4];
        let x = project_onto_budget(&y, &c, 0.0 + 1e-12).unwrap();
        let dist = |p: &[f64]| p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        for _ in 0..2000 {
            let a: f64 = rng.random::<f64>() * 3.0;
            let bb: f64 = rng.random::<f64>() * (3.0 - a) / 0.5;
            let p = [a, bb, (3.0 - a - 0.5 * bb) / 2.0];
            assert!(dist(&p) >= dist(&x) - 1e-12);
        }
    }

    #[test]
    fn projection_keeps_feasible_points() {
        let c = BudgetConstraint::new(vec![1.0, 1.0, 1.0], 3.0).unwrap();
        let x = project_onto_budget(&[0.5, 1.0, 1.5], &c, 1e-9).unwrap();
        for (a, b) in x.iter().zip([0.5, 1.0, 1.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let c = BudgetConstraint::uniform(3, 1.0).unwrap();
        assert!(maximize_throughput(2, &c, &SolverOptions::default()).is_err());
        assert!(maximize_throughput(0, &c, &SolverOptions::default()).is_err());
        assert!(BudgetConstraint::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(BudgetConstraint::new(vec![1.0, 1.0], -1.0).is_err());
        let r = RateProfile::new(vec![1.0, 1.0]).unwrap();
        assert!(kkt_residual(&r, &c).is_err());
    }

    #[test]
    fn gradient_matches_homogeneous_identity() {
        // Euler: Σ λᵢ ∂R/∂λᵢ = R
        let r = RateProfile::new(vec![0.4, 1.2, 0.9, 2.0, 0.7]).unwrap();
        let g = throughput_gradient(&r, 1e-6);
        let euler: f64 = g.iter().zip(r.as_slice()).map(|(a, b)| a * b).sum();
        let big_r = spectral_throughput(&r);
        assert!((euler - big_r).abs() < 1e-8 * big_r);
        assert!(g.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn iteration_budget_reports_best() {
        let c = BudgetConstraint::uniform(9, 1.0).unwrap();
        let opts = SolverOptions {
            max_iterations: 1,
            tolerance: 1e-14,
            ..SolverOptions::default()
        };
        match maximize_throughput(9, &c, &opts) {
            Err(Error::NonConvergence { best, .. }) => assert_eq!(best.len(), 10),
            other => panic!("{other:?}"),
        }
    }
}
