//! Executes a [`RunConfig`] and renders the resulting [`Report`].

use std::fs;
use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use rfmnet_core::capacity::{maximize_throughput, BudgetConstraint, SolverOptions};
use rfmnet_core::multihop::{
    empirical_hop_delay, optimal_contention, optimal_hop_length, snr_e2e_delay, ChannelParams,
};
use rfmnet_core::rfm::{solve_steady_state_with, SteadyStateOptions};
use rfmnet_core::spectral::{build_matrix, spectral_steady_state};
use rfmnet_core::tasep::{aggregate, run_tasep, TasepConfig};
use rfmnet_core::thrfm::{thrfm_steady_state, ThrfmSpec};
use rfmnet_core::{RateProfile, SteadyState};
use serde_json::Value;

use crate::config::{
    db_to_linear, CapacitySpec, Command, OutputFormat, RunConfig, SimulateSpec, SweepParam,
    SweepQuantity, SweepSpec,
};
use crate::error::CliError;
use crate::io;
use crate::parallel;
use crate::report::{num, Report, Table};

/// Computes the report for `config` without writing it anywhere. Side files
/// requested by the command (transit logs, rate profiles) are written.
pub fn dispatch(config: &RunConfig) -> Result<Report, CliError> {
    match &config.command {
        Command::Analyze { n, lambda_c } => analyze(*n, *lambda_c),
        Command::Spectral { rates, check_ode } => spectral(rates, *check_ode, config.tolerance),
        Command::Simulate(spec) => simulate(spec, config),
        Command::Sweep(spec) => sweep(spec, config),
        Command::OptimizeHop(p) => optimize_hop(p),
        Command::OptimizeContention { theta, gamma, n } => optimize_contention(*theta, *gamma, *n),
        Command::OptimizeCapacity(spec) => optimize_capacity(spec, config.tolerance),
    }
}

/// Runs `config` and writes the report to the configured destination.
pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let report = dispatch(config)?;
    let text = match config.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv()?,
    };
    match &config.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        info!("no seed given, using {s}");
        s
    })
}

fn steady_table(ss: &SteadyState) -> Table {
    let mut t = Table::new(["i", "e_i", "D_i"]);
    for (i, (e, d)) in ss.occupancies.iter().zip(&ss.per_node_delay).enumerate() {
        t.push(vec![(i + 1).into(), num(*e), num(*d)]);
    }
    t
}

fn analyze(n: usize, lambda_c: f64) -> Result<Report, CliError> {
    let spec = ThrfmSpec::new(n, lambda_c)?;
    let ss = thrfm_steady_state(&spec);
    Ok(Report::new("analyze")
        .scalar("n", n)
        .scalar("lambda_c", num(lambda_c))
        .scalar("R", num(ss.throughput))
        .scalar("D_e2e", num(ss.e2e_delay))
        .with_table(steady_table(&ss)))
}

fn spectral(rates: &RateProfile, check_ode: bool, tol: Option<f64>) -> Result<Report, CliError> {
    let ss = spectral_steady_state(rates)?;
    let zeta = build_matrix(rates).max_eigenvalue();
    let mut report = Report::new("spectral")
        .scalar("n", rates.sites())
        .scalar("R", num(ss.throughput))
        .scalar("D_e2e", num(ss.e2e_delay))
        .scalar("zeta_max", num(zeta));
    if check_ode {
        let opts = SteadyStateOptions {
            tol: tol.unwrap_or(1e-10),
            ..SteadyStateOptions::default()
        };
        let ode = solve_steady_state_with(rates, &opts)?;
        let diff = ode
            .occupancies
            .iter()
            .zip(&ss.occupancies)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report = report
            .scalar("R_ode", num(ode.throughput))
            .scalar("ode_max_abs_diff", num(diff));
    }
    Ok(report.with_table(steady_table(&ss)))
}

fn simulate(spec: &SimulateSpec, config: &RunConfig) -> Result<Report, CliError> {
    let seed = resolve_seed(config.seed);
    let tasep = TasepConfig {
        burn_in_cycles: spec.burn_in,
        tick_width: spec.tick,
        record_transits: spec.transits.is_some(),
        ..TasepConfig::new(spec.rates.clone(), spec.measure, seed)
    };
    tasep.validate()?;
    let predicted = spectral_steady_state(&spec.rates)?;
    let head = Report::new("simulate")
        .scalar("n", spec.rates.sites())
        .scalar("seed", seed)
        .scalar("tick", num(tasep.tick()))
        .scalar("burn_in", spec.burn_in)
        .scalar("measure", spec.measure)
        .scalar("replicas", spec.replicas);

    if spec.replicas <= 1 {
        let stats = run_tasep(&tasep)?;
        if let Some(path) = &spec.transits {
            io::write_transits(path, &stats.transits)?;
        }
        let mut t = Table::new(["i", "e_sim", "e_rfm"]);
        for (i, (s, p)) in stats
            .mean_occupancy
            .iter()
            .zip(&predicted.occupancies)
            .enumerate()
        {
            t.push(vec![(i + 1).into(), num(*s), num(*p)]);
        }
        return Ok(head
            .scalar("throughput", num(stats.throughput_estimate))
            .scalar("throughput_rfm", num(predicted.throughput))
            .scalar("mean_e2e_delay", num(stats.mean_e2e_delay))
            .scalar("e2e_delay_stderr", num(stats.e2e_delay_stderr))
            .scalar("e2e_delay_rfm", num(predicted.e2e_delay))
            .scalar("packets_completed", stats.packets_completed)
            .scalar("packets_entered", stats.counters.entered)
            .scalar("packets_in_flight", stats.counters.in_flight)
            .with_table(t));
    }

    let pool = parallel::pool(config.threads)?;
    let mut runs = parallel::run_replicas(&pool, &tasep, spec.replicas);
    if let Some(path) = &spec.transits {
        if let (_, Ok(first)) = &mut runs[0] {
            io::write_transits(path, &std::mem::take(&mut first.transits))?;
        } else {
            warn!("first replica failed, no transit log written");
        }
    }
    let summary = aggregate(runs)?;
    if !summary.failed_seeds.is_empty() {
        warn!("{} replicas failed", summary.failed_seeds.len());
    }
    let mut t = Table::new(["i", "e_sim", "e_sim_stderr", "e_rfm"]);
    for (i, (s, p)) in summary
        .mean_occupancy
        .iter()
        .zip(&predicted.occupancies)
        .enumerate()
    {
        t.push(vec![(i + 1).into(), num(s.mean), num(s.stderr), num(*p)]);
    }
    Ok(head
        .scalar("succeeded", summary.succeeded)
        .scalar("failed_seeds", summary.failed_seeds.clone())
        .scalar("throughput", num(summary.throughput.mean))
        .scalar("throughput_stderr", num(summary.throughput.stderr))
        .scalar("throughput_rfm", num(predicted.throughput))
        .scalar("mean_e2e_delay", num(summary.mean_e2e_delay.mean))
        .scalar("e2e_delay_stderr", num(summary.mean_e2e_delay.stderr))
        .scalar("e2e_delay_rfm", num(predicted.e2e_delay))
        .scalar("packets_completed", summary.packets_completed)
        .with_table(t))
}

/// Grid of sweep points, rounded and deduplicated for integer parameters.
pub fn sweep_points(spec: &SweepSpec) -> Result<Vec<f64>, CliError> {
    let SweepSpec {
        from, to, steps, ..
    } = *spec;
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Usage(
            "sweep needs finite bounds and at least one step".into(),
        ));
    }
    if spec.log_scale && !(from > 0.0 && to > 0.0) {
        return Err(CliError::Usage(
            "log-scale sweep needs positive bounds".into(),
        ));
    }
    let at = |k: usize| {
        if steps == 1 {
            return from;
        }
        let s = k as f64 / (steps - 1) as f64;
        if spec.log_scale {
            (from.ln() + s * (to.ln() - from.ln())).exp()
        } else {
            from + s * (to - from)
        }
    };
    let mut points: Vec<f64> = (0..steps).map(at).collect();
    if spec.over.is_integer() {
        for p in &mut points {
            *p = p.round();
        }
        points.dedup();
        if points.iter().any(|p| *p < 1.0) {
            return Err(CliError::Usage(format!(
                "{} must be at least 1",
                spec.over.name()
            )));
        }
    }
    Ok(points)
}

fn unsupported(spec: &SweepSpec) -> CliError {
    CliError::Usage(format!(
        "cannot sweep {} over {}",
        spec.quantity.name(),
        spec.over.name()
    ))
}

/// Chain parameters `(n, λ_c)` at sweep point `x`.
fn chain_at(spec: &SweepSpec, x: f64) -> Result<(usize, f64), CliError> {
    let b = &spec.base;
    match spec.over {
        SweepParam::LambdaC => Ok((b.n, x)),
        SweepParam::N => Ok((x as usize, b.lambda_c)),
        _ => Err(unsupported(spec)),
    }
}

fn channel_at(spec: &SweepSpec, x: f64) -> Result<ChannelParams, CliError> {
    let mut p = spec.base.channel;
    match spec.over {
        SweepParam::Theta => p.theta = x,
        SweepParam::ThetaDb => p.theta = db_to_linear(x),
        SweepParam::Gamma => p.gamma = x,
        SweepParam::N0 => p.n0 = x,
        SweepParam::N0Db => p.n0 = db_to_linear(x),
        SweepParam::N => p.n = x as usize,
        _ => return Err(unsupported(spec)),
    }
    p.validate()?;
    Ok(p)
}

fn sweep(spec: &SweepSpec, config: &RunConfig) -> Result<Report, CliError> {
    let points = sweep_points(spec)?;
    let x_name = spec.over.name();
    let mut report = Report::new("sweep")
        .scalar("quantity", spec.quantity.name())
        .scalar("over", x_name);
    let table = match spec.quantity {
        SweepQuantity::Throughput | SweepQuantity::E2eDelay => {
            let col = if spec.quantity == SweepQuantity::Throughput {
                "R"
            } else {
                "D_e2e"
            };
            let mut t = Table::new([x_name, col]);
            for &x in &points {
                let (n, lc) = chain_at(spec, x)?;
                let ss = thrfm_steady_state(&ThrfmSpec::new(n, lc)?);
                let y = if col == "R" {
                    ss.throughput
                } else {
                    ss.e2e_delay
                };
                t.push(vec![num(x), num(y)]);
            }
            t
        }
        SweepQuantity::SimE2eDelay => {
            let seed = resolve_seed(config.seed);
            report = report.scalar("seed", seed);
            let chains = points
                .iter()
                .map(|&x| chain_at(spec, x))
                .collect::<Result<Vec<_>, _>>()?;
            let pool = parallel::pool(config.threads)?;
            let b = &spec.base;
            let results: Vec<_> = pool.install(|| {
                chains
                    .par_iter()
                    .enumerate()
                    .map(|(k, &(n, lc))| {
                        let rates = RateProfile::homogeneous(n, lc)?;
                        let c = TasepConfig {
                            burn_in_cycles: b.burn_in,
                            ..TasepConfig::new(rates, b.measure, seed.wrapping_add(k as u64))
                        };
                        let ss = thrfm_steady_state(&ThrfmSpec::new(n, lc)?);
                        run_tasep(&c).map(|s| (s, ss.e2e_delay))
                    })
                    .collect()
            });
            let mut t = Table::new([
                x_name,
                "D_sim",
                "D_sim_stderr",
                "D_e2e",
                "packets_completed",
            ]);
            for (&x, r) in points.iter().zip(results) {
                let (s, d) = r?;
                t.push(vec![
                    num(x),
                    num(s.mean_e2e_delay),
                    num(s.e2e_delay_stderr),
                    num(d),
                    s.packets_completed.into(),
                ]);
            }
            t
        }
        SweepQuantity::MStar => {
            let mut t = Table::new([x_name, "m_star_real", "m_star_int", "delay_at_optimum"]);
            for &x in &points {
                let h = optimal_hop_length(&channel_at(spec, x)?)?;
                t.push(vec![
                    num(x),
                    num(h.m_star_real),
                    h.m_star_int.into(),
                    num(h.delay_at_optimum),
                ]);
            }
            t
        }
        SweepQuantity::QStar => {
            let mut t = Table::new([x_name, "c", "q_star", "delay_at_optimum"]);
            for &x in &points {
                let p = channel_at(spec, x)?;
                match optimal_contention(p.theta, p.gamma, p.n) {
                    Ok(o) => t.push(vec![
                        num(x),
                        num(o.c),
                        num(o.q_star),
                        num(o.delay_at_optimum),
                    ]),
                    Err(rfmnet_core::Error::DegenerateChannel { c }) => {
                        warn!("{x_name} = {x}: degenerate contention constant {c}");
                        t.push(vec![num(x), num(c), Value::Null, Value::Null]);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            t
        }
        SweepQuantity::HopDelay => {
            if spec.over != SweepParam::M {
                return Err(unsupported(spec));
            }
            let p = spec.base.channel;
            p.validate()?;
            let ms: Vec<usize> = points.iter().map(|&x| x as usize).collect();
            if let Some(m) = ms.iter().find(|&&m| m > p.n) {
                return Err(CliError::Usage(format!("m = {m} exceeds n = {}", p.n)));
            }
            let mut columns = vec!["m", "delay_exact", "delay_approx"];
            let sims = if spec.base.simulate {
                columns.extend(["delay_sim", "delay_sim_stderr"]);
                let seed = resolve_seed(config.seed);
                report = report.scalar("seed", seed);
                let pool = parallel::pool(config.threads)?;
                let b = &spec.base;
                let runs: Vec<_> = pool.install(|| {
                    ms.par_iter()
                        .enumerate()
                        .map(|(k, &m)| {
                            empirical_hop_delay(
                                &p,
                                m,
                                b.burn_in,
                                b.measure,
                                seed.wrapping_add(k as u64),
                            )
                        })
                        .collect()
                });
                Some(runs)
            } else {
                None
            };
            let mut t = Table::new(columns);
            for (k, &m) in ms.iter().enumerate() {
                let mut row = vec![
                    m.into(),
                    num(snr_e2e_delay(&p, m, false)?),
                    num(snr_e2e_delay(&p, m, true)?),
                ];
                if let Some(runs) = &sims {
                    match &runs[k] {
                        Ok(s) => row.extend([num(s.mean_e2e_delay), num(s.e2e_delay_stderr)]),
                        Err(e) => {
                            warn!("m = {m}: {e}");
                            row.extend([Value::Null, Value::Null]);
                        }
                    }
                }
                t.push(row);
            }
            t
        }
    };
    Ok(report.with_table(table))
}

fn optimize_hop(p: &ChannelParams) -> Result<Report, CliError> {
    let h = optimal_hop_length(p)?;
    Ok(Report::new("optimize-hop")
        .scalar("theta", num(p.theta))
        .scalar("n0", num(p.n0))
        .scalar("gamma", num(p.gamma))
        .scalar("l", num(p.l))
        .scalar("n", p.n)
        .scalar("m_star_real", num(h.m_star_real))
        .scalar("m_star_int", h.m_star_int)
        .scalar("delay_at_optimum", num(h.delay_at_optimum))
        .scalar(
            "delay_at_m_star_int",
            num(snr_e2e_delay(p, h.m_star_int, true)?),
        ))
}

fn optimize_contention(theta: f64, gamma: f64, n: usize) -> Result<Report, CliError> {
    let o = optimal_contention(theta, gamma, n)?;
    Ok(Report::new("optimize-contention")
        .scalar("theta", num(theta))
        .scalar("gamma", num(gamma))
        .scalar("n", n)
        .scalar("c", num(o.c))
        .scalar("q_star", num(o.q_star))
        .scalar("delay_at_optimum", num(o.delay_at_optimum)))
}

fn optimize_capacity(spec: &CapacitySpec, tol: Option<f64>) -> Result<Report, CliError> {
    let c = BudgetConstraint::new(spec.weights.clone(), spec.budget)?;
    let defaults = SolverOptions::default();
    let opts = SolverOptions {
        tolerance: tol.unwrap_or(defaults.tolerance),
        max_iterations: spec.max_iterations,
        start: spec.start.clone(),
        ..defaults
    };
    let r = maximize_throughput(spec.n, &c, &opts)?;
    if let Some(path) = &spec.rates_out {
        io::write_rates(path, &r.optimal_rates)?;
    }
    let mut t = Table::new(["i", "rate"]);
    for (i, l) in r.optimal_rates.as_slice().iter().enumerate() {
        t.push(vec![i.into(), num(*l)]);
    }
    Ok(Report::new("optimize-capacity")
        .scalar("n", spec.n)
        .scalar("budget", num(spec.budget))
        .scalar("cost", num(c.cost(r.optimal_rates.as_slice())))
        .scalar("R", num(r.optimal_throughput))
        .scalar("iterations", r.iterations)
        .scalar("kkt_residual", num(r.kkt_residual))
        .with_table(t))
}
