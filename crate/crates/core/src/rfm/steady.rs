//! Steady state by time integration, polished with Newton's method on the
//! equilibrium equations.
//!
//! Both stages only use the vector field itself, so the result is an
//! independent check on the eigenvalue route in [`crate::spectral`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::ode::{initial_step, validate_control, Dopri, StepControl};
use super::{link_flow, max_abs, rhs_into, RateProfile, SteadyState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateOptions {
    /// Bound on `max |ẋᵢ|` at the returned point.
    pub tol: f64,
    /// Starting point; `None` means `(½,…,½)`.
    pub initial: Option<Vec<f64>>,
    /// Simulated-time budget for the integration stage.
    pub max_time: f64,
    pub control: StepControl,
    /// Try Newton iterations once the trajectory is close.
    pub polish: bool,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            tol: 1e-10,
            initial: None,
            max_time: 1e7,
            control: StepControl::default(),
            polish: true,
        }
    }
}

/// Equilibrium with `max |ẋ| ≤ tol`, starting from `(½,…,½)`.
pub fn solve_steady_state(rates: &RateProfile, tol: f64) -> Result<SteadyState> {
    solve_steady_state_with(
        rates,
        &SteadyStateOptions {
            tol,
            ..SteadyStateOptions::default()
        },
    )
}

pub fn solve_steady_state_with(
    rates: &RateProfile,
    opts: &SteadyStateOptions,
) -> Result<SteadyState> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    validate_control(&opts.control)?;
    let n = rates.sites();
    let x0 = match &opts.initial {
        Some(x) if x.len() != n => {
            return Err(Error::invalid(format!(
                "initial point has {} levels, expected {n}",
                x.len()
            )))
        }
        Some(x) if x.iter().any(|v| !(0.0..=1.0).contains(v)) => {
            return Err(Error::invalid("initial point outside [0,1]^n"))
        }
        Some(x) => x.clone(),
        None => vec![0.5; n],
    };

    let lam = rates.as_slice();
    let mut stepper = Dopri::new(lam, x0, 0.0, initial_step(rates, &opts.control));
    let mut best = stepper.x.clone();
    let mut best_res = max_abs(&stepper.k1);
    let mut last_newton = f64::INFINITY;
    let mut steps = 0usize;

    loop {
        let res = max_abs(&stepper.k1);
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&stepper.x);
        }
        if res <= opts.tol {
            return Ok(finish(lam, stepper.x));
        }
        if opts.polish && res <= 1e-3 && res <= 0.1 * last_newton {
            last_newton = res;
            if let Some(x) = newton_polish(lam, &stepper.x, opts.tol) {
                return Ok(finish(lam, x));
            }
        }
        if stepper.t >= opts.max_time || steps >= opts.control.max_steps {
            return Err(Error::NonConvergence {
                what: "steady-state search",
                residual: best_res,
                best,
            });
        }
        stepper.step(&opts.control, opts.max_time)?;
        steps += 1;
    }
}

fn finish(rates: &[f64], x: Vec<f64>) -> SteadyState {
    let r = link_flow(rates, &x, x.len());
    SteadyState::from_flow(x, r)
}

/// Damped Newton on `f(x) = 0`; `None` if it leaves the open cube or stalls.
fn newton_polish(rates: &[f64], start: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = start.len();
    let mut x = start.to_vec();
    let mut f = vec![0.0; n];
    rhs_into(rates, &x, &mut f);
    let mut res = max_abs(&f);
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];

    for _ in 0..50 {
        if res <= tol {
            return Some(x);
        }
        let delta = newton_direction(rates, &x, &f)?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let mut inside = true;
            for i in 0..n {
                trial[i] = x[i] + alpha * delta[i];
                inside &= trial[i] > 0.0 && trial[i] < 1.0;
            }
            if inside {
                rhs_into(rates, &trial, &mut f_trial);
                let r = max_abs(&f_trial);
                if r < res {
                    core::mem::swap(&mut x, &mut trial);
                    core::mem::swap(&mut f, &mut f_trial);
                    res = r;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (res <= tol).then_some(x)
}

/// Solves `J δ = −f` for the tridiagonal Jacobian of the vector field.
fn newton_direction(rates: &[f64], x: &[f64], f: &[f64]) -> Option<Vec<f64>> {
    let n = x.len();
    // sub[i] = ∂fᵢ/∂xᵢ₋₁, diag[i] = ∂fᵢ/∂xᵢ, sup[i] = ∂fᵢ/∂xᵢ₊₁
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n {
        let d_in = if i == 0 {
            -rates[0]
        } else {
            -rates[i] * x[i - 1]
        };
        let d_out = if i + 1 == n {
            rates[n]
        } else {
            rates[i + 1] * (1.0 - x[i + 1])
        };
        diag[i] = d_in - d_out;
        if i > 0 {
            sub[i] = rates[i] * (1.0 - x[i]);
        }
        if i + 1 < n {
            sup[i] = rates[i + 1] * x[i];
        }
    }
    let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
    solve_tridiagonal(&sub, &diag, &sup, &rhs)
}

/// Thomas algorithm. The RFM Jacobian is column diagonally dominant, so no
/// pivoting is needed.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}
