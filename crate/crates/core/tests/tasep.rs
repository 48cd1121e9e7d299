//! Statistical agreement between the exclusion process and the mean-field
//! predictions.

use rfmnet_core::tasep::{replicate, run_tasep, TasepConfig};
use rfmnet_core::thrfm::{thrfm_steady_state, ThrfmSpec};
use rfmnet_core::RateProfile;

fn homogeneous(n: usize, lc: f64, burn: u64, measure: u64, seed: u64) -> TasepConfig {
    TasepConfig {
        burn_in_cycles: burn,
        ..TasepConfig::new(RateProfile::homogeneous(n, lc).unwrap(), measure, seed)
    }
}

#[test]
fn occupancy_profile_tracks_closed_form() {
    for n in [9usize, 19] {
        let stats = run_tasep(&homogeneous(n, 1.0, 350_000, 1_000_000, 42)).unwrap();
        let exact = thrfm_steady_state(&ThrfmSpec::new(n, 1.0).unwrap());
        let worst = stats
            .mean_occupancy
            .iter()
            .zip(&exact.occupancies)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "n = {n}: worst |Δe| = {worst:.4}, R_sim = {:.4}, R = {:.4}, D_sim = {:.3}, D = {:.3}",
            stats.throughput_estimate, exact.throughput, stats.mean_e2e_delay, exact.e2e_delay
        );
        assert!(worst <= 0.05, "n = {n}: {:?}", stats.mean_occupancy);
    }
}

#[test]
fn delay_follows_inverse_capacity() {
    // D_e2e ∝ 1/λ_c: the simulated delay times λ_c should stay put
    let spec_delay = |lc: f64| thrfm_steady_state(&ThrfmSpec::new(19, lc).unwrap()).e2e_delay;
    let mut prev = f64::INFINITY;
    for lc in [0.5, 1.0, 2.0, 5.0] {
        let s = run_tasep(&homogeneous(19, lc, 200_000, 1_000_000, 9)).unwrap();
        let rel = s.mean_e2e_delay / spec_delay(lc) - 1.0;
        println!(
            "λ_c = {lc}: D_sim = {:.3} ± {:.3}, D = {:.3} ({rel:+.3})",
            s.mean_e2e_delay,
            s.e2e_delay_stderr,
            spec_delay(lc)
        );
        assert!(s.mean_e2e_delay < prev);
        assert!(rel.abs() < 0.15);
        prev = s.mean_e2e_delay;
    }
}

#[test]
fn replica_stderr_shrinks_with_count() {
    let c = homogeneous(5, 1.0, 5_000, 50_000, 100);
    let few = replicate(&c, 8).unwrap();
    let many = replicate(&c, 32).unwrap();
    // 1/√k scaling predicts a ratio of 2
    let ratio = few.throughput.stderr / many.throughput.stderr;
    println!("stderr ratio 8 vs 32 replicas: {ratio:.3}");
    assert!((1.0..=4.0).contains(&ratio), "{ratio}");
    let ratio = few.mean_e2e_delay.stderr / many.mean_e2e_delay.stderr;
    assert!((1.0..=4.0).contains(&ratio), "{ratio}");
}
