//! Dormand–Prince 5(4) integration of the RFM.
//!
//! A step is accepted only if the error estimate passes *and* the new state
//! stays inside the unit cube; otherwise the step is halved. States are never
//! clipped.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{rhs_into, OccupancyState, RateProfile};
use crate::error::{Error, Result};
use crate::math;

/// Adaptive step-size settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; `None` picks `0.1 / max λ`.
    pub initial_step: Option<f64>,
    /// Steps below this abort with [`Error::StepUnderflow`].
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-9,
            atol: 1e-12,
            initial_step: None,
            min_step: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

// the RFM is autonomous, so the stage times c₂…c₇ are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Stepper state; `k1` holds `f(t, x)` (first-same-as-last).
pub(crate) struct Dopri<'a> {
    rates: &'a [f64],
    pub x: Vec<f64>,
    pub t: f64,
    pub h: f64,
    pub k1: Vec<f64>,
    k: [Vec<f64>; 6],
    y: Vec<f64>,
    y_new: Vec<f64>,
}

impl<'a> Dopri<'a> {
    pub fn new(rates: &'a [f64], x: Vec<f64>, t: f64, h: f64) -> Self {
        let n = x.len();
        let mut k1 = vec![0.0; n];
        rhs_into(rates, &x, &mut k1);
        Dopri {
            rates,
            x,
            t,
            h,
            k1,
            k: core::array::from_fn(|_| vec![0.0; n]),
            y: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }

    /// Takes one accepted step, never past `t_end`.
    pub fn step(&mut self, ctrl: &StepControl, t_end: f64) -> Result<()> {
        let n = self.x.len();
        loop {
            let mut h = self.h.min(ctrl.max_step);
            let last = self.t + h >= t_end;
            if last {
                h = t_end - self.t;
            }
            if h < ctrl.min_step && !last {
                return Err(Error::StepUnderflow {
                    time: self.t,
                    step: h,
                });
            }

            let [k2, k3, k4, k5, k6, k7] = &mut self.k;
            let (x, k1, y, r) = (&self.x, &self.k1, &mut self.y, self.rates);

            for i in 0..n {
                y[i] = x[i] + h * A21 * k1[i];
            }
            rhs_into(r, y, k2);
            for i in 0..n {
                y[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs_into(r, y, k3);
            for i in 0..n {
                y[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs_into(r, y, k4);
            for i in 0..n {
                y[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs_into(r, y, k5);
            for i in 0..n {
                y[i] = x[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            rhs_into(r, y, k6);
            let y_new = &mut self.y_new;
            let mut inside = true;
            for i in 0..n {
                y_new[i] = x[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
                inside &= (0.0..=1.0).contains(&y_new[i]);
            }
            if !inside {
                self.h = 0.5 * h;
                continue;
            }
            rhs_into(r, y_new, k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = ctrl.atol + ctrl.rtol * x[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = math::sqrt(err / n as f64);

            if err <= 1.0 {
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * math::powf(err, -0.2)).clamp(0.2, 5.0)
                };
                self.t = if last { t_end } else { self.t + h };
                core::mem::swap(&mut self.x, &mut self.y_new);
                core::mem::swap(&mut self.k1, k7);
                // keep the pre-truncation step so a short final step does not
                // shrink the next call
                self.h = if last { self.h.max(h * grow) } else { h * grow };
                return Ok(());
            }
            let shrink = (0.9 * math::powf(err, -0.2)).clamp(0.1, 0.5);
            self.h = h * shrink;
        }
    }
}

pub(crate) fn initial_step(rates: &RateProfile, ctrl: &StepControl) -> f64 {
    ctrl.initial_step.unwrap_or(0.1 / rates.max_rate())
}

pub(crate) fn validate_control(ctrl: &StepControl) -> Result<()> {
    if !(ctrl.rtol > 0.0 && ctrl.atol > 0.0) {
        return Err(Error::invalid("tolerances must be positive"));
    }
    if !(ctrl.min_step > 0.0 && ctrl.max_step > ctrl.min_step) {
        return Err(Error::invalid("need 0 < min_step < max_step"));
    }
    if let Some(h) = ctrl.initial_step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!(
                "initial step must be positive, got {h}"
            )));
        }
    }
    Ok(())
}

/// Integrates from `init` over `[init.time, init.time + horizon]`, returning
/// the initial state followed by every accepted step.
pub fn integrate(
    rates: &RateProfile,
    init: &OccupancyState,
    horizon: f64,
    control: &StepControl,
) -> Result<Vec<OccupancyState>> {
    if init.levels.len() != rates.sites() {
        return Err(Error::invalid(format!(
            "initial state has {} levels, expected {}",
            init.levels.len(),
            rates.sites()
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    validate_control(control)?;

    let t_end = init.time + horizon;
    let mut stepper = Dopri::new(
        rates.as_slice(),
        init.levels.clone(),
        init.time,
        initial_step(rates, control),
    );
    let mut out = vec![init.clone()];
    while stepper.t < t_end {
        if out.len() > control.max_steps {
            return Err(Error::NonConvergence {
                what: "integration step budget",
                residual: t_end - stepper.t,
                best: stepper.x,
            });
        }
        stepper.step(control, t_end)?;
        out.push(OccupancyState {
            levels: stepper.x.clone(),
            time: stepper.t,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_matches_exact_solution() {
        // ẋ = λ₀(1−x) − λ₁x  ⇒  x(t) = x∞ + (x₀ − x∞)e^{−(λ₀+λ₁)t}
        let rates = RateProfile::new(vec![2.0, 3.0]).unwrap();
        let init = OccupancyState::new(vec![0.0], 0.0).unwrap();
        let traj = integrate(&rates, &init, 2.0, &StepControl::default()).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.time, 2.0);
        let exact = 0.4 - 0.4 * (-10.0f64).exp();
        assert!((last.levels[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn starts_on_cube_corner() {
        let rates = RateProfile::new(vec![5.0, 0.1, 5.0]).unwrap();
        for corner in [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]] {
            let init = OccupancyState::new(corner.to_vec(), 0.0).unwrap();
            let traj = integrate(&rates, &init, 10.0, &StepControl::default()).unwrap();
            assert!(traj
                .iter()
                .all(|s| s.levels.iter().all(|x| (0.0..=1.0).contains(x))));
        }
    }

    #[test]
    fn underflow_reported_with_time() {
        let rates = RateProfile::new(vec![1.0, 1.0]).unwrap();
        let init = OccupancyState::new(vec![0.0], 0.0).unwrap();
        let ctrl = StepControl {
            rtol: 1e-300,
            atol: 1e-300,
            min_step: 1e-3,
            ..StepControl::default()
        };
        match integrate(&rates, &init, 1.0, &ctrl) {
            Err(Error::StepUnderflow { time, .. }) => assert!(time >= 0.0 && time < 1.0),
            other => panic!("expected underflow, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let rates = RateProfile::new(vec![1.0, 1.0]).unwrap();
        let init = OccupancyState::new(vec![0.0], 0.0).unwrap();
        let c = StepControl::default();
        assert!(integrate(&rates, &init, 0.0, &c).is_err());
        assert!(integrate(&rates, &init, f64::NAN, &c).is_err());
        let wrong = OccupancyState::new(vec![0.0, 0.0], 0.0).unwrap();
        assert!(integrate(&rates, &wrong, 1.0, &c).is_err());
    }
}
