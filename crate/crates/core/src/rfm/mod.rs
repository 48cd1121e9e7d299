//! Core RFM types and dynamics.
//!
//! The state evolves by
//!
//! ```text
//! ẋ₁ = λ₀(1 − x₁) − λ₁x₁(1 − x₂)
//! ẋᵢ = λᵢ₋₁xᵢ₋₁(1 − xᵢ) − λᵢxᵢ(1 − xᵢ₊₁)
//! ẋₙ = λₙ₋₁xₙ₋₁(1 − xₙ) − λₙxₙ
//! ```
//!
//! and every trajectory started in `[0,1]ⁿ` converges to a unique interior
//! equilibrium `e`. The steady-state throughput is `R = λₙeₙ`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

mod ode;
mod steady;

pub use ode::{integrate, StepControl};
pub use steady::{solve_steady_state, solve_steady_state_with, SteadyStateOptions};

/// Link capacities `λ₀…λₙ` in packets per second.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "Vec<f64>", into = "Vec<f64>")
)]
pub struct RateProfile(Vec<f64>);

impl RateProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.len() < 2 {
            return Err(Error::invalid(format!(
                "a rate profile needs at least 2 rates (one site), got {}",
                rates.len()
            )));
        }
        if let Some((k, r)) = rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(Error::invalid(format!(
                "rate {k} must be finite and strictly positive, got {r}"
            )));
        }
        Ok(RateProfile(rates))
    }

    /// All `n + 1` rates equal to `lambda_c`.
    pub fn homogeneous(n: usize, lambda_c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("chain must have at least one site"));
        }
        Self::new(vec![lambda_c; n + 1])
    }

    /// Number of sites `n`.
    pub fn sites(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn entry(&self) -> f64 {
        self.0[0]
    }

    pub fn exit(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn max_rate(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|r| r * c).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for RateProfile {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RateProfile> for Vec<f64> {
    fn from(r: RateProfile) -> Self {
        r.0
    }
}

/// Normalized buffer levels at time `time`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OccupancyState {
    pub levels: Vec<f64>,
    pub time: f64,
}

impl OccupancyState {
    pub fn new(levels: Vec<f64>, time: f64) -> Result<Self> {
        if let Some((i, x)) = levels
            .iter()
            .enumerate()
            .find(|(_, x)| !(0.0..=1.0).contains(*x))
        {
            return Err(Error::invalid(format!("level {i} = {x} outside [0,1]")));
        }
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::invalid(format!(
                "time must be nonnegative, got {time}"
            )));
        }
        Ok(OccupancyState { levels, time })
    }

    /// Every level at `level`, at time zero.
    pub fn uniform(n: usize, level: f64) -> Result<Self> {
        Self::new(vec![level; n], 0.0)
    }
}

/// Equilibrium occupancies together with the flow metrics they imply.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SteadyState {
    pub occupancies: Vec<f64>,
    pub throughput: f64,
    pub per_node_delay: Vec<f64>,
    pub e2e_delay: f64,
}

impl SteadyState {
    /// Builds delays from Little's law, `Dᵢ = eᵢ / R`.
    pub fn from_flow(occupancies: Vec<f64>, throughput: f64) -> Self {
        let per_node_delay: Vec<f64> = occupancies.iter().map(|e| e / throughput).collect();
        let e2e_delay = per_node_delay.iter().sum();
        SteadyState {
            occupancies,
            throughput,
            per_node_delay,
            e2e_delay,
        }
    }

    pub fn sites(&self) -> usize {
        self.occupancies.len()
    }
}

/// Evaluates the RFM vector field at `state`.
pub fn rfm_rhs(rates: &RateProfile, state: &OccupancyState) -> Result<Vec<f64>> {
    if state.levels.len() != rates.sites() {
        return Err(Error::invalid(format!(
            "state has {} levels but the rate profile describes {} sites",
            state.levels.len(),
            rates.sites()
        )));
    }
    let mut out = vec![0.0; rates.sites()];
    rhs_into(rates.as_slice(), &state.levels, &mut out);
    Ok(out)
}

/// Flow across link `k` (0 = source→1, n = n→sink).
#[inline]
pub(crate) fn link_flow(rates: &[f64], x: &[f64], k: usize) -> f64 {
    let n = x.len();
    if k == 0 {
        rates[0] * (1.0 - x[0])
    } else if k == n {
        rates[n] * x[n - 1]
    } else {
        rates[k] * x[k - 1] * (1.0 - x[k])
    }
}

pub(crate) fn rhs_into(rates: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let mut inflow = link_flow(rates, x, 0);
    for i in 0..n {
        let outflow = link_flow(rates, x, i + 1);
        out[i] = inflow - outflow;
        inflow = outflow;
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rhs(rates: &[f64], x: &[f64]) -> Vec<f64> {
        let r = RateProfile::new(rates.to_vec()).unwrap();
        let s = OccupancyState::new(x.to_vec(), 0.0).unwrap();
        rfm_rhs(&r, &s).unwrap()
    }

    #[test]
    fn rhs_small_cases() {
        assert_eq!(rhs(&[1.0, 1.0], &[0.0]), vec![1.0]);
        assert_eq!(rhs(&[1.0, 1.0], &[0.5]), vec![0.0]);
        assert_eq!(rhs(&[1.0, 1.0, 1.0], &[1.0, 1.0]), vec![0.0, -1.0]);
    }

    #[test]
    fn rhs_interior_site() {
        // x = (0.2, 0.5, 0.7), λ = (1,2,3,4)
        let d = rhs(&[1.0, 2.0, 3.0, 4.0], &[0.2, 0.5, 0.7]);
        let f0 = 1.0 * 0.8;
        let f1 = 2.0 * 0.2 * 0.5;
        let f2 = 3.0 * 0.5 * 0.3;
        let f3 = 4.0 * 0.7;
        let want = [f0 - f1, f1 - f2, f2 - f3];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rhs_dimension_mismatch() {
        let r = RateProfile::new(vec![1.0, 1.0, 1.0]).unwrap();
        let s = OccupancyState::new(vec![0.5], 0.0).unwrap();
        assert!(matches!(rfm_rhs(&r, &s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rate_profile_validation() {
        assert!(RateProfile::new(vec![1.0]).is_err());
        assert!(RateProfile::new(vec![1.0, 0.0]).is_err());
        assert!(RateProfile::new(vec![1.0, -2.0]).is_err());
        assert!(RateProfile::new(vec![1.0, f64::NAN]).is_err());
        assert!(RateProfile::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(RateProfile::homogeneous(0, 1.0).is_err());
        let r = RateProfile::homogeneous(3, 2.0).unwrap();
        assert_eq!(r.sites(), 3);
        assert_eq!(r.as_slice(), &[2.0; 4]);
    }

    #[test]
    fn occupancy_validation() {
        assert!(OccupancyState::new(vec![1.1], 0.0).is_err());
        assert!(OccupancyState::new(vec![-0.1], 0.0).is_err());
        assert!(OccupancyState::new(vec![0.5], -1.0).is_err());
        assert!(OccupancyState::new(vec![0.0, 1.0], 3.0).is_ok());
    }
}
