//! Closed forms for the totally homogeneous chain, `λ₀ = … = λₙ = λ_c`.
//!
//! With `θ = π/(n+3)`:
//!
//! * `eᵢ = ½ + ½ tan θ · cot((i+1)θ)`
//! * `R = λ_c / (4 cos² θ)`
//! * `Dᵢ = (2/λ_c) cos² θ · (1 + tan θ · cot((i+1)θ))`
//! * `D_e2e = (2n/λ_c) cos² θ`
//!
//! Occupancies do not depend on `λ_c`, decrease along the chain and are
//! antisymmetric about ½.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{cos, cot, tan};
use crate::rfm::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThrfmSpec {
    n: usize,
    lambda_c: f64,
}

impl ThrfmSpec {
    pub fn new(n: usize, lambda_c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("THRFM needs at least one site"));
        }
        if !(lambda_c > 0.0 && lambda_c.is_finite()) {
            return Err(Error::invalid(format!(
                "link capacity must be positive, got {lambda_c}"
            )));
        }
        Ok(ThrfmSpec { n, lambda_c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda_c(&self) -> f64 {
        self.lambda_c
    }

    fn angle(&self) -> f64 {
        PI / (self.n + 3) as f64
    }

    // tan θ · cot((i+1)θ), the signed offset of 2eᵢ from 1
    fn skew(&self, i: usize) -> f64 {
        let th = self.angle();
        tan(th) * cot((i + 1) as f64 * th)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::invalid(format!(
                "site index {i} outside 1..={}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Steady-state occupancy of site `i` (1-based).
pub fn thrfm_occupancy(spec: &ThrfmSpec, i: usize) -> Result<f64> {
    spec.check_index(i)?;
    Ok(0.5 + 0.5 * spec.skew(i))
}

pub fn thrfm_throughput(spec: &ThrfmSpec) -> f64 {
    let c = cos(spec.angle());
    spec.lambda_c / (4.0 * c * c)
}

/// Per-node delays `D₁…Dₙ` and the end-to-end delay.
pub fn thrfm_delays(spec: &ThrfmSpec) -> (Vec<f64>, f64) {
    let c = cos(spec.angle());
    let c2 = c * c;
    let per_node = (1..=spec.n)
        .map(|i| 2.0 / spec.lambda_c * c2 * (1.0 + spec.skew(i)))
        .collect();
    let e2e = 2.0 * spec.n as f64 / spec.lambda_c * c2;
    (per_node, e2e)
}

pub fn thrfm_steady_state(spec: &ThrfmSpec) -> SteadyState {
    let occupancies = (1..=spec.n).map(|i| 0.5 + 0.5 * spec.skew(i)).collect();
    let (per_node_delay, e2e_delay) = thrfm_delays(spec);
    SteadyState {
        occupancies,
        throughput: thrfm_throughput(spec),
        per_node_delay,
        e2e_delay,
    }
}
