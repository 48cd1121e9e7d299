//! Totally asymmetric simple exclusion process on an open chain.
//!
//! Time advances in ticks of fixed width. Every particle carries the time at
//! which it next tries to hop, drawn from an exponential distribution with
//! mean `1/λᵢ` for the link it sits in front of. At each tick the sites are
//! scanned from the exit backwards:
//!
//! * a due particle on the last site leaves the chain,
//! * a due particle elsewhere advances if the next site is empty,
//! * a due but blocked particle draws a fresh waiting time.
//!
//! The source behaves like site 0: a `λ₀` clock inserts a packet into site 1
//! when it is due and the site is empty, and redraws either way.
//!
//! A particle that moved in this tick is never moved again in the same tick,
//! because its new site was scanned before it arrived.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::math::{mean, std_error};
use crate::rfm::RateProfile;

pub const DEFAULT_BURN_IN: u64 = 350_000;

/// Default tick is `1 / (DEFAULT_TICKS_PER_MEAN_WAIT · max λ)`. Events due in
/// the same tick are ordered by the scan rather than by time, which biases
/// occupancies by about half a tick per event.
pub const DEFAULT_TICKS_PER_MEAN_WAIT: f64 = 100.0;

/// Number of equal-time batches used for the delay standard error.
const DELAY_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TasepConfig {
    pub rates: RateProfile,
    pub burn_in_cycles: u64,
    pub measure_cycles: u64,
    pub seed: u64,
    /// Tick width in seconds; `None` uses [`DEFAULT_TICKS_PER_MEAN_WAIT`].
    pub tick_width: Option<f64>,
    /// Keep a per-packet transit log.
    pub record_transits: bool,
}

impl TasepConfig {
    pub fn new(rates: RateProfile, measure_cycles: u64, seed: u64) -> Self {
        TasepConfig {
            rates,
            burn_in_cycles: DEFAULT_BURN_IN,
            measure_cycles,
            seed,
            tick_width: None,
            record_transits: false,
        }
    }

    pub fn n(&self) -> usize {
        self.rates.sites()
    }

    pub fn tick(&self) -> f64 {
        self.tick_width
            .unwrap_or(1.0 / (DEFAULT_TICKS_PER_MEAN_WAIT * self.rates.max_rate()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.measure_cycles == 0 {
            return Err(Error::invalid("measure_cycles must be positive"));
        }
        let dt = self.tick();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!(
                "tick width must be positive, got {dt}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransitRecord {
    pub packet_id: u64,
    pub entry_time: f64,
    pub exit_time: f64,
}

/// Whole-run packet accounting, burn-in included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowCounters {
    pub entered: u64,
    pub exited: u64,
    pub in_flight: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimStats {
    pub mean_occupancy: Vec<f64>,
    /// Exits per second over the measurement window.
    pub throughput_estimate: f64,
    /// Mean entry-to-exit time of packets leaving during the window.
    pub mean_e2e_delay: f64,
    /// Batch-means standard error of `mean_e2e_delay`.
    pub e2e_delay_stderr: f64,
    pub packets_completed: u64,
    pub counters: FlowCounters,
    pub transits: Vec<TransitRecord>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Particle {
    id: u64,
    entered: f64,
    due: f64,
}

pub(crate) struct Lattice {
    sites: Vec<Option<Particle>>,
    // hop distributions: clocks[0] is the source, clocks[i] serves site i
    clocks: Vec<Exp<f64>>,
    entry_due: f64,
    next_id: u64,
    rng: ChaCha8Rng,
    pub counters: FlowCounters,
}

impl Lattice {
    pub fn new(rates: &RateProfile, seed: u64) -> Self {
        let clocks: Vec<Exp<f64>> = rates
            .as_slice()
            .iter()
            .map(|l| Exp::new(*l).expect("rates are positive"))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entry_due = clocks[0].sample(&mut rng);
        Lattice {
            sites: vec![None; rates.sites()],
            clocks,
            entry_due,
            next_id: 0,
            rng,
            counters: FlowCounters::default(),
        }
    }

    #[cfg(test)]
    pub fn occupied(&self, i: usize) -> bool {
        self.sites[i].is_some()
    }

    /// Runs one tick at time `t`, calling `on_exit` for every departure.
    pub fn tick(&mut self, t: f64, mut on_exit: impl FnMut(Particle, f64)) {
        let n = self.sites.len();
        for i in (0..n).rev() {
            let Some(mut p) = self.sites[i] else { continue };
            if p.due > t {
                continue;
            }
            if i + 1 == n {
                self.sites[i] = None;
                self.counters.exited += 1;
                self.counters.in_flight -= 1;
                on_exit(p, t);
            } else if self.sites[i + 1].is_none() {
                p.due = t + self.clocks[i + 2].sample(&mut self.rng);
                self.sites[i + 1] = Some(p);
                self.sites[i] = None;
            } else {
                p.due = t + self.clocks[i + 1].sample(&mut self.rng);
                self.sites[i] = Some(p);
            }
        }
        if self.entry_due <= t {
            if self.sites[0].is_none() {
                self.sites[0] = Some(Particle {
                    id: self.next_id,
                    entered: t,
                    due: t + self.clocks[1].sample(&mut self.rng),
                });
                self.next_id += 1;
                self.counters.entered += 1;
                self.counters.in_flight += 1;
            }
            self.entry_due = t + self.clocks[0].sample(&mut self.rng);
        }
        debug_assert_eq!(
            self.sites.iter().filter(|s| s.is_some()).count() as u64,
            self.counters.in_flight
        );
    }
}

pub fn run_tasep(config: &TasepConfig) -> Result<SimStats> {
    config.validate()?;
    let n = config.n();
    let dt = config.tick();
    let burn = config.burn_in_cycles;
    let total = burn + config.measure_cycles;

    let mut lattice = Lattice::new(&config.rates, config.seed);
    let mut occupied_ticks = vec![0u64; n];
    let mut batch_sum = [0.0f64; DELAY_BATCHES];
    let mut batch_count = [0u64; DELAY_BATCHES];
    let mut delays_sum = 0.0;
    let mut completed = 0u64;
    let mut transits = Vec::new();

    for k in 0..total {
        let t = k as f64 * dt;
        let measuring = k >= burn;
        let batch = ((k.saturating_sub(burn)) as u128 * DELAY_BATCHES as u128
            / config.measure_cycles as u128) as usize;
        lattice.tick(t, |p, t_exit| {
            if measuring {
                let d = t_exit - p.entered;
                delays_sum += d;
                completed += 1;
                batch_sum[batch] += d;
                batch_count[batch] += 1;
                if config.record_transits {
                    transits.push(TransitRecord {
                        packet_id: p.id,
                        entry_time: p.entered,
                        exit_time: t_exit,
                    });
                }
            }
        });
        if measuring {
            for (acc, s) in occupied_ticks.iter_mut().zip(&lattice.sites) {
                *acc += s.is_some() as u64;
            }
        }
    }

    if completed == 0 {
        return Err(Error::InsufficientStatistics(format!(
            "no packet left the chain during {} measured cycles",
            config.measure_cycles
        )));
    }

    let m = config.measure_cycles as f64;
    let batch_means: Vec<f64> = batch_sum
        .iter()
        .zip(&batch_count)
        .filter(|(_, c)| **c > 0)
        .map(|(s, c)| s / *c as f64)
        .collect();
    Ok(SimStats {
        mean_occupancy: occupied_ticks.iter().map(|c| *c as f64 / m).collect(),
        throughput_estimate: completed as f64 / (m * dt),
        mean_e2e_delay: delays_sum / completed as f64,
        e2e_delay_stderr: std_error(&batch_means),
        packets_completed: completed,
        counters: lattice.counters,
        transits,
    })
}

/// Mean and standard error across replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        Estimate {
            mean: mean(xs),
            stderr: std_error(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicaSummary {
    pub replicas: usize,
    pub succeeded: usize,
    pub failed_seeds: Vec<u64>,
    pub mean_occupancy: Vec<Estimate>,
    pub throughput: Estimate,
    pub mean_e2e_delay: Estimate,
    pub packets_completed: u64,
}

/// Configuration of replica `k`: identical except for seed `seed + k`.
pub fn replica_config(config: &TasepConfig, k: u64) -> TasepConfig {
    TasepConfig {
        seed: config.seed.wrapping_add(k),
        ..config.clone()
    }
}

/// Runs `replicas` independent copies one after another.
pub fn replicate(config: &TasepConfig, replicas: usize) -> Result<ReplicaSummary> {
    if replicas < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 replicas, got {replicas}"
        )));
    }
    config.validate()?;
    let runs: Vec<(u64, Result<SimStats>)> = (0..replicas as u64)
        .map(|k| {
            let c = replica_config(config, k);
            (c.seed, run_tasep(&c))
        })
        .collect();
    aggregate(runs)
}

/// Reduces replica outcomes in input order. Fails only when every replica
/// failed, returning the first error.
pub fn aggregate(runs: Vec<(u64, Result<SimStats>)>) -> Result<ReplicaSummary> {
    let replicas = runs.len();
    let mut ok = Vec::new();
    let mut failed_seeds = Vec::new();
    let mut first_err = None;
    for (seed, r) in runs {
        match r {
            Ok(s) => ok.push(s),
            Err(e) => {
                failed_seeds.push(seed);
                first_err.get_or_insert(e);
            }
        }
    }
    if ok.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::invalid("no replicas to aggregate")));
    }
    let n = ok[0].mean_occupancy.len();
    let column = |f: &dyn Fn(&SimStats) -> f64| -> Vec<f64> { ok.iter().map(f).collect() };
    let mean_occupancy = (0..n)
        .map(|i| Estimate::from_samples(&column(&|s| s.mean_occupancy[i])))
        .collect();
    Ok(ReplicaSummary {
        replicas,
        succeeded: ok.len(),
        failed_seeds,
        mean_occupancy,
        throughput: Estimate::from_samples(&column(&|s| s.throughput_estimate)),
        mean_e2e_delay: Estimate::from_samples(&column(&|s| s.mean_e2e_delay)),
        packets_completed: ok.iter().map(|s| s.packets_completed).sum(),
    })
}
