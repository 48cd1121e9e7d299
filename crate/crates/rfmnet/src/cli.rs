//! Command-line grammar and its translation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfmnet_core::multihop::ChannelParams;
use rfmnet_core::tasep::DEFAULT_BURN_IN;
use rfmnet_core::RateProfile;

use crate::config::{
    db_to_linear, CapacitySpec, Command, OutputFormat, RunConfig, SimulateSpec, SweepBase,
    SweepParam, SweepQuantity, SweepSpec,
};
use crate::error::CliError;
use crate::io;

#[derive(Debug, Parser)]
#[command(
    name = "rfmnet",
    version,
    about = "Ribosome flow model analysis of multihop networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,

    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Json, global = true)]
    pub format: FormatArg,

    /// Seed for stochastic commands; drawn from OS entropy when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for replicas and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Solver tolerance override.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Closed-form steady state of a homogeneous chain.
    Analyze {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda_c: f64,
    },
    /// Steady state of an arbitrary rate profile.
    Spectral {
        /// JSON array or one-column CSV of λ₀ … λₙ.
        #[arg(long)]
        rates: PathBuf,
        /// Also integrate the ODE and report the difference.
        #[arg(long)]
        check_ode: bool,
    },
    /// Stochastic exclusion-process simulation.
    Simulate(SimulateArgs),
    /// Evaluate a quantity over a parameter range.
    Sweep(SweepArgs),
    /// Optimal hop length in the noise-limited regime.
    OptimizeHop(ChannelArgs),
    /// Optimal contention probability in the interference-limited regime.
    OptimizeContention {
        #[command(flatten)]
        theta: ThetaArgs,
        #[arg(long, default_value_t = 4.0)]
        gamma: f64,
        #[arg(long, default_value_t = 19)]
        n: usize,
    },
    /// Maximize throughput under a weighted rate budget.
    OptimizeCapacity {
        #[arg(long)]
        n: usize,
        /// Total budget Σ wᵢ λᵢ.
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        /// Cost weights w₀ … wₙ; all ones when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Starting rates.
        #[arg(long)]
        start: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        max_iterations: usize,
        /// Write the optimal rates here (`.csv` or JSON).
        #[arg(long)]
        rates_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ChainSource {
    /// Homogeneous chain length; needs --lambda-c.
    #[arg(long, requires = "lambda_c")]
    pub n: Option<usize>,
    /// Rate profile file.
    #[arg(long)]
    pub rates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub chain: ChainSource,
    #[arg(long)]
    pub lambda_c: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub measure: u64,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    /// Tick width in seconds (default: 1/(100 · max rate)).
    #[arg(long)]
    pub tick: Option<f64>,
    /// CSV log of packet transits (first replica).
    #[arg(long)]
    pub transits: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    /// SINR threshold, linear.
    #[arg(long, conflicts_with = "theta_db")]
    pub theta: Option<f64>,
    /// SINR threshold in dB.
    #[arg(long)]
    pub theta_db: Option<f64>,
}

impl ThetaArgs {
    fn linear(&self, default: f64) -> f64 {
        match (self.theta, self.theta_db) {
            (Some(t), _) => t,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => default,
        }
    }
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    #[command(flatten)]
    pub theta: ThetaArgs,
    /// Noise spectral density, linear.
    #[arg(long, conflicts_with = "n0_db")]
    pub n0: Option<f64>,
    /// Noise spectral density in dB (default -50).
    #[arg(long)]
    pub n0_db: Option<f64>,
    /// Path-loss exponent.
    #[arg(long, default_value_t = 4.0)]
    pub gamma: f64,
    /// Unit node spacing.
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    /// Unit hops in the chain.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Link capacity per unit success probability.
    #[arg(long, default_value_t = 1.0)]
    pub link_scale: f64,
}

impl ChannelArgs {
    fn params(&self) -> Result<ChannelParams, CliError> {
        let n0 = match (self.n0, self.n0_db) {
            (Some(v), _) => v,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => db_to_linear(-50.0),
        };
        let p = ChannelParams::new(self.theta.linear(1.0), n0, self.gamma, self.l, self.n)?
            .with_link_scale(self.link_scale)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QuantityArg {
    Throughput,
    E2eDelay,
    SimE2eDelay,
    MStar,
    QStar,
    HopDelay,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ParamArg {
    LambdaC,
    N,
    Theta,
    ThetaDb,
    Gamma,
    N0,
    N0Db,
    M,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub quantity: QuantityArg,
    #[arg(long, value_enum)]
    pub over: ParamArg,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Space points geometrically.
    #[arg(long)]
    pub log_scale: bool,
    /// Chain length for chain quantities.
    #[arg(long = "chain-n", default_value_t = 19)]
    pub chain_n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_c: f64,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub measure: u64,
    /// Simulate each point of a hop-delay sweep as well.
    #[arg(long)]
    pub simulate: bool,
}

impl Cli {
    /// Resolves files and defaults into a [`RunConfig`].
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let command = match self.command {
            CliCommand::Analyze { n, lambda_c } => Command::Analyze { n, lambda_c },
            CliCommand::Spectral { rates, check_ode } => Command::Spectral {
                rates: io::read_rates(&rates)?,
                check_ode,
            },
            CliCommand::Simulate(a) => {
                let rates = match (a.chain.n, a.chain.rates) {
                    (Some(n), _) => {
                        let lc = a
                            .lambda_c
                            .ok_or_else(|| CliError::Usage("--n needs --lambda-c".into()))?;
                        RateProfile::homogeneous(n, lc)?
                    }
                    (None, Some(path)) => io::read_rates(&path)?,
                    (None, None) => unreachable!("clap requires one chain source"),
                };
                Command::Simulate(SimulateSpec {
                    rates,
                    burn_in: a.burn_in,
                    measure: a.measure,
                    replicas: a.replicas,
                    tick: a.tick,
                    transits: a.transits,
                })
            }
            CliCommand::Sweep(a) => Command::Sweep(SweepSpec {
                quantity: match a.quantity {
                    QuantityArg::Throughput => SweepQuantity::Throughput,
                    QuantityArg::E2eDelay => SweepQuantity::E2eDelay,
                    QuantityArg::SimE2eDelay => SweepQuantity::SimE2eDelay,
                    QuantityArg::MStar => SweepQuantity::MStar,
                    QuantityArg::QStar => SweepQuantity::QStar,
                    QuantityArg::HopDelay => SweepQuantity::HopDelay,
                },
                over: match a.over {
                    ParamArg::LambdaC => SweepParam::LambdaC,
                    ParamArg::N => SweepParam::N,
                    ParamArg::Theta => SweepParam::Theta,
                    ParamArg::ThetaDb => SweepParam::ThetaDb,
                    ParamArg::Gamma => SweepParam::Gamma,
                    ParamArg::N0 => SweepParam::N0,
                    ParamArg::N0Db => SweepParam::N0Db,
                    ParamArg::M => SweepParam::M,
                },
                from: a.from,
                to: a.to,
                steps: a.steps,
                log_scale: a.log_scale,
                base: SweepBase {
                    n: a.chain_n,
                    lambda_c: a.lambda_c,
                    channel: a.channel.params()?,
                    burn_in: a.burn_in,
                    measure: a.measure,
                    simulate: a.simulate,
                },
            }),
            CliCommand::OptimizeHop(a) => Command::OptimizeHop(a.params()?),
            CliCommand::OptimizeContention { theta, gamma, n } => Command::OptimizeContention {
                theta: theta.linear(10.0),
                gamma,
                n,
            },
            CliCommand::OptimizeCapacity {
                n,
                budget,
                weights,
                start,
                max_iterations,
                rates_out,
            } => Command::OptimizeCapacity(CapacitySpec {
                n,
                weights: match weights {
                    Some(p) => io::read_positive_list(&p)?,
                    None => vec![1.0; n + 1],
                },
                budget,
                start: start.map(|p| io::read_positive_list(&p)).transpose()?,
                max_iterations,
                rates_out,
            }),
        };
        Ok(RunConfig {
            command,
            format: match self.common.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            },
            output: self.common.output,
            seed: self.common.seed,
            threads: self.common.threads,
            tolerance: self.common.tolerance,
        })
    }
}
