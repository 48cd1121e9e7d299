//! Cross-checks between the three steady-state routes: ODE integration,
//! homogeneous closed forms and the tridiagonal spectrum.

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rfmnet_core::rfm::{
    integrate, rfm_rhs, solve_steady_state, solve_steady_state_with, SteadyStateOptions,
    StepControl,
};
use rfmnet_core::spectral::spectral_steady_state;
use rfmnet_core::thrfm::{thrfm_steady_state, ThrfmSpec};
use rfmnet_core::{OccupancyState, RateProfile};

fn random_rates(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> RateProfile {
    RateProfile::new((0..=n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

#[test]
fn forward_invariance_over_random_pairs() {
    let mut rng = StdRng::seed_from_u64(1);
    let ctrl = StepControl {
        rtol: 1e-6,
        atol: 1e-9,
        ..StepControl::default()
    };
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let rates = random_rates(&mut rng, n, 0.1, 10.0);
        let init: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>(),
            })
            .collect();
        let init = OccupancyState::new(init, 0.0).unwrap();
        let traj = integrate(&rates, &init, 5.0, &ctrl).unwrap();
        for s in &traj {
            assert!(s.levels.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}

#[test]
fn equilibrium_is_a_fixed_point_of_the_integrator() {
    let rates = RateProfile::new(vec![0.6, 2.0, 1.1, 3.0, 0.8]).unwrap();
    let e = solve_steady_state(&rates, 1e-12).unwrap();
    let init = OccupancyState::new(e.occupancies.clone(), 0.0).unwrap();
    let traj = integrate(&rates, &init, 50.0, &StepControl::default()).unwrap();
    for s in &traj {
        for (a, b) in s.levels.iter().zip(&e.occupancies) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn trajectories_from_distinct_starts_converge() {
    let mut rng = StdRng::seed_from_u64(2);
    let rates = random_rates(&mut rng, 6, 0.5, 3.0);
    let ctrl = StepControl::default();
    let finals: Vec<Vec<f64>> = (0..2)
        .map(|_| {
            let init = OccupancyState::new((0..6).map(|_| rng.random()).collect(), 0.0).unwrap();
            let traj = integrate(&rates, &init, 200.0, &ctrl).unwrap();
            traj.last().unwrap().levels.clone()
        })
        .collect();
    for (a, b) in finals[0].iter().zip(&finals[1]) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn global_attraction_from_ten_starts() {
    let mut rng = StdRng::seed_from_u64(3);
    let rates = random_rates(&mut rng, 8, 0.2, 5.0);
    let tol = 1e-10;
    let sols: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let opts = SteadyStateOptions {
                tol,
                initial: Some((0..8).map(|_| rng.random()).collect()),
                ..SteadyStateOptions::default()
            };
            solve_steady_state_with(&rates, &opts).unwrap().occupancies
        })
        .collect();
    for a in &sols {
        for b in &sols {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 10.0 * tol, "{x} vs {y}");
            }
        }
    }
}

#[test]
fn residual_and_flow_balance() {
    let mut rng = StdRng::seed_from_u64(4);
    let tol = 1e-10;
    for _ in 0..30 {
        let n = rng.random_range(1..=30);
        let rates = random_rates(&mut rng, n, 0.1, 10.0);
        let ss = solve_steady_state(&rates, tol).unwrap();
        let state = OccupancyState::new(ss.occupancies.clone(), 0.0).unwrap();
        let f = rfm_rhs(&rates, &state).unwrap();
        assert!(f.iter().all(|v| v.abs() <= tol));

        let lam = rates.as_slice();
        let e = &ss.occupancies;
        let r = ss.throughput;
        assert!((lam[0] * (1.0 - e[0]) - r).abs() <= 10.0 * tol);
        for i in 1..n {
            assert!((lam[i] * e[i - 1] * (1.0 - e[i]) - r).abs() <= 10.0 * tol);
        }
        assert!((lam[n] * e[n - 1] - r).abs() < 1e-15);
        let sum: f64 = ss.per_node_delay.iter().sum();
        assert!((sum - ss.e2e_delay).abs() < 1e-12 * ss.e2e_delay);
    }
}

#[test]
fn closed_form_matches_integration() {
    for n in [1usize, 2, 5, 19, 50] {
        let spec = ThrfmSpec::new(n, 1.7).unwrap();
        let exact = thrfm_steady_state(&spec);
        let ode = solve_steady_state(&RateProfile::homogeneous(n, 1.7).unwrap(), 1e-10).unwrap();
        for (a, b) in exact.occupancies.iter().zip(&ode.occupancies) {
            assert!((a - b).abs() < 1e-6, "n = {n}");
        }
        assert!((exact.throughput - ode.throughput).abs() < 1e-6);
        assert!((exact.e2e_delay - ode.e2e_delay).abs() < 1e-6 * exact.e2e_delay);
    }
}

#[test]
fn closed_form_matches_spectral() {
    let ss = spectral_steady_state(&RateProfile::homogeneous(19, 1.0).unwrap()).unwrap();
    let exact = thrfm_steady_state(&ThrfmSpec::new(19, 1.0).unwrap());
    for (a, b) in exact.occupancies.iter().zip(&ss.occupancies) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn integration_matches_spectral_on_random_profiles() {
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..20 {
        let n = rng.random_range(1..=50);
        let rates = random_rates(&mut rng, n, 0.1, 10.0);
        let ode = solve_steady_state(&rates, 1e-12).unwrap();
        let spec = spectral_steady_state(&rates).unwrap();
        for (a, b) in ode.occupancies.iter().zip(&spec.occupancies) {
            assert!((a - b).abs() < 1e-8, "n = {n}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steady_state_residual_within_tolerance(
        rates in prop::collection::vec(0.1f64..10.0, 2..20),
        tol_exp in 6i32..12,
    ) {
        let tol = 10f64.powi(-tol_exp);
        let rates = RateProfile::new(rates).unwrap();
        let ss = solve_steady_state(&rates, tol).unwrap();
        let state = OccupancyState::new(ss.occupancies.clone(), 0.0).unwrap();
        let f = rfm_rhs(&rates, &state).unwrap();
        prop_assert!(f.iter().all(|v| v.abs() <= tol));
        prop_assert!(ss.occupancies.iter().all(|e| *e > 0.0 && *e < 1.0));
    }
}
