//! Fully resolved run configuration, independent of how it was parsed.

use std::path::PathBuf;

use rfmnet_core::multihop::ChannelParams;
use rfmnet_core::RateProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub format: OutputFormat,
    /// `None` writes to stdout.
    pub output: Option<PathBuf>,
    /// `None` draws a seed from OS entropy and reports it.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Overrides the solver tolerance of the command.
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            format: OutputFormat::Json,
            output: None,
            seed: None,
            threads: None,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Closed-form homogeneous analysis.
    Analyze {
        n: usize,
        lambda_c: f64,
    },
    /// Steady state of an arbitrary profile via the spectral route.
    Spectral {
        rates: RateProfile,
        check_ode: bool,
    },
    Simulate(SimulateSpec),
    Sweep(SweepSpec),
    OptimizeHop(ChannelParams),
    OptimizeContention {
        theta: f64,
        gamma: f64,
        n: usize,
    },
    OptimizeCapacity(CapacitySpec),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Spectral { .. } => "spectral",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::OptimizeHop(_) => "optimize-hop",
            Command::OptimizeContention { .. } => "optimize-contention",
            Command::OptimizeCapacity(_) => "optimize-capacity",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub rates: RateProfile,
    pub burn_in: u64,
    pub measure: u64,
    pub replicas: usize,
    pub tick: Option<f64>,
    /// Transit log of the first replica.
    pub transits: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySpec {
    pub n: usize,
    pub weights: Vec<f64>,
    pub budget: f64,
    pub start: Option<Vec<f64>>,
    pub max_iterations: usize,
    pub rates_out: Option<PathBuf>,
}

/// Quantity computed at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepQuantity {
    /// Closed-form throughput of the homogeneous chain.
    Throughput,
    /// Closed-form end-to-end delay of the homogeneous chain.
    E2eDelay,
    /// Simulated end-to-end delay of the homogeneous chain.
    SimE2eDelay,
    /// Optimal hop multiplier in the noise-limited regime.
    MStar,
    /// Optimal contention probability in the interference-limited regime.
    QStar,
    /// Delay against hop multiplier, exact and approximate.
    HopDelay,
}

impl SweepQuantity {
    pub fn name(self) -> &'static str {
        match self {
            SweepQuantity::Throughput => "throughput",
            SweepQuantity::E2eDelay => "e2e-delay",
            SweepQuantity::SimE2eDelay => "sim-e2e-delay",
            SweepQuantity::MStar => "m-star",
            SweepQuantity::QStar => "q-star",
            SweepQuantity::HopDelay => "hop-delay",
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    LambdaC,
    N,
    Theta,
    ThetaDb,
    Gamma,
    N0,
    N0Db,
    M,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LambdaC => "lambda_c",
            SweepParam::N => "n",
            SweepParam::Theta => "theta",
            SweepParam::ThetaDb => "theta_db",
            SweepParam::Gamma => "gamma",
            SweepParam::N0 => "n0",
            SweepParam::N0Db => "n0_db",
            SweepParam::M => "m",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, SweepParam::N | SweepParam::M)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub quantity: SweepQuantity,
    pub over: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub log_scale: bool,
    /// Fixed values for every parameter not being swept.
    pub base: SweepBase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepBase {
    pub n: usize,
    pub lambda_c: f64,
    pub channel: ChannelParams,
    pub burn_in: u64,
    pub measure: u64,
    /// Also simulate each point of a hop-delay sweep.
    pub simulate: bool,
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
