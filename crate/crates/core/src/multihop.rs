//! Multihop design rules built on the homogeneous closed forms.
//!
//! A link is modelled as a THRFM link with capacity `λ_c = r · p_s`, where
//! `p_s` is the probability that a transmission clears the SINR threshold.
//!
//! * SNR-limited: `p_s = exp(−Θ N₀ (m l)^γ)` for hops spanning `m` unit
//!   spacings, and the chain shrinks to `n/m` hops. The approximate delay
//!   `(2n/m) exp(Θ N₀ (m l)^γ)` is convex in `m` with minimizer
//!   `m* = (1/l) (1/(γ Θ N₀))^{1/γ}`.
//! * SIR-limited: `p_s ≈ exp(−q c / 2)` with
//!   `c = π Θ^{1/γ} / √(γ/2) − 1`; the delay `(v/q) exp(q c / 2)` with
//!   `v = 2n cos²(π/(n+3))` is convex in `q` and minimized at
//!   `q* = min{1, 2/c}`.

use alloc::format;
use core::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::math::{ceil, cos, exp, floor, powf, sqrt};
use crate::rfm::RateProfile;
use crate::tasep::{run_tasep, SimStats, TasepConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelParams {
    /// SINR threshold Θ, linear scale.
    pub theta: f64,
    /// Noise power spectral density N₀.
    pub n0: f64,
    /// Path-loss exponent γ ≥ 1.
    pub gamma: f64,
    /// Unit node spacing.
    pub l: f64,
    /// Number of unit hops in the chain.
    pub n: usize,
    /// Link capacity per unit success probability; 1 unless stated.
    pub link_scale: f64,
}

impl ChannelParams {
    pub fn new(theta: f64, n0: f64, gamma: f64, l: f64, n: usize) -> Result<Self> {
        let p = ChannelParams {
            theta,
            n0,
            gamma,
            l,
            n,
            link_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_link_scale(mut self, r: f64) -> Result<Self> {
        self.link_scale = r;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        pos("theta", self.theta)?;
        pos("n0", self.n0)?;
        pos("l", self.l)?;
        pos("link_scale", self.link_scale)?;
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "path-loss exponent must be >= 1, got {}",
                self.gamma
            )));
        }
        if self.n == 0 {
            return Err(Error::invalid("chain must have at least one hop"));
        }
        Ok(())
    }

    // Θ N₀ (m l)^γ
    fn snr_exponent(&self, m: f64) -> f64 {
        self.theta * self.n0 * powf(m * self.l, self.gamma)
    }
}

/// Success probability of a hop spanning `m` unit spacings.
pub fn snr_success_prob(p: &ChannelParams, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("hop multiplier must be >= 1"));
    }
    Ok(exp(-p.snr_exponent(m as f64)))
}

/// End-to-end delay when routing over hops of length `m·l`.
///
/// With `approximate` the `cos²` factor is dropped (valid for `n/m ≫ 1`).
pub fn snr_e2e_delay(p: &ChannelParams, m: usize, approximate: bool) -> Result<f64> {
    if m == 0 || m > p.n {
        return Err(Error::invalid(format!(
            "hop multiplier {m} outside 1..={}",
            p.n
        )));
    }
    let hops = p.n as f64 / m as f64;
    let mut d = snr_delay_relaxed(p, m as f64);
    if !approximate {
        let c = cos(PI / (hops + 3.0));
        d *= c * c;
    }
    Ok(d)
}

/// `(2n/m) exp(Θ N₀ (m l)^γ) / r` for real `m > 0`.
pub fn snr_delay_relaxed(p: &ChannelParams, m: f64) -> f64 {
    2.0 * p.n as f64 / m * exp(p.snr_exponent(m)) / p.link_scale
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HopOptimum {
    pub m_star_real: f64,
    pub m_star_int: usize,
    /// Delay of the continuous relaxation at `m_star_real`.
    pub delay_at_optimum: f64,
}

pub fn optimal_hop_length(p: &ChannelParams) -> Result<HopOptimum> {
    p.validate()?;
    let g = p.gamma;
    let k = g * p.theta * p.n0;
    let m_star_real = powf(1.0 / k, 1.0 / g) / p.l;

    let n = p.n as f64;
    let lo = floor(m_star_real).clamp(1.0, n) as usize;
    let hi = ceil(m_star_real).clamp(1.0, n) as usize;
    // ties go to the shorter hop
    let m_star_int = if snr_e2e_delay(p, hi, true)? < snr_e2e_delay(p, lo, true)? {
        hi
    } else {
        lo
    };
    let delay_at_optimum = 2.0 * n * p.l * powf(k, 1.0 / g) * powf(E, 1.0 / g) / p.link_scale;
    Ok(HopOptimum {
        m_star_real,
        m_star_int,
        delay_at_optimum,
    })
}

/// `c = π Θ^{1/γ} / √(γ/2) − 1`.
pub fn contention_constant(theta: f64, gamma: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!(
            "theta must be positive, got {theta}"
        )));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!(
            "path-loss exponent must be >= 1, got {gamma}"
        )));
    }
    let c = PI * powf(theta, 1.0 / gamma) / sqrt(gamma / 2.0) - 1.0;
    if c <= 0.0 {
        return Err(Error::DegenerateChannel { c });
    }
    Ok(c)
}

pub fn sir_success_prob(q: f64, theta: f64, gamma: f64) -> Result<f64> {
    check_q(q)?;
    let c = contention_constant(theta, gamma)?;
    Ok(exp(-q * c / 2.0))
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "contention probability must lie in (0,1], got {q}"
        )))
    }
}

/// `v = 2n cos²(π/(n+3))`.
pub fn contention_scale(n: usize) -> f64 {
    let c = cos(PI / (n + 3) as f64);
    2.0 * n as f64 * c * c
}

/// `(v/q) exp(q c / 2)`, the SIR-regime end-to-end delay.
pub fn contention_delay(q: f64, c: f64, n: usize) -> f64 {
    contention_scale(n) / q * exp(q * c / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContentionOptimum {
    pub c: f64,
    pub q_star: f64,
    pub delay_at_optimum: f64,
}

pub fn optimal_contention(theta: f64, gamma: f64, n: usize) -> Result<ContentionOptimum> {
    if n == 0 {
        return Err(Error::invalid("chain must have at least one hop"));
    }
    let c = contention_constant(theta, gamma)?;
    let q_star = optimal_contention_for(c);
    Ok(ContentionOptimum {
        c,
        q_star,
        delay_at_optimum: contention_delay(q_star, c, n),
    })
}

/// `min{1, 2/c}` for `c > 0`.
pub fn optimal_contention_for(c: f64) -> f64 {
    f64::min(1.0, 2.0 / c)
}

/// TASEP counterpart of [`snr_e2e_delay`]: a chain of `round(n/m)` sites
/// (at least one) with every rate equal to `r · p_s(m)`.
pub fn empirical_hop_delay(
    p: &ChannelParams,
    m: usize,
    burn_in_cycles: u64,
    measure_cycles: u64,
    seed: u64,
) -> Result<SimStats> {
    if m == 0 || m > p.n {
        return Err(Error::invalid(format!(
            "hop multiplier {m} outside 1..={}",
            p.n
        )));
    }
    let sites = ((p.n as f64 / m as f64) + 0.5) as usize;
    let lambda = p.link_scale * snr_success_prob(p, m)?;
    let config = TasepConfig {
        burn_in_cycles,
        ..TasepConfig::new(
            RateProfile::homogeneous(sites.max(1), lambda)?,
            measure_cycles,
            seed,
        )
    };
    run_tasep(&config)
}
