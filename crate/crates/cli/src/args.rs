use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nmfa::analysis::AnalysisConfig;
use nmfa::mfa::{FitWindow, MassFloor, QGrid};
use nmfa::net_model::EdgeTransformParams;
use nmfa::paths::{DistanceParams, EstimatorParams};
use nmfa::sampling::SamplePlan;

#[derive(Debug, Parser)]
#[command(name = "nmfa", version, about = "Neuron-based multifractal analysis of layered networks")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum and metrics for each checkpoint manifest.
    Analyze {
        /// Checkpoint manifests (.toml).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Degree-of-emergence series over ordered checkpoints.
    Emergence {
        /// Checkpoint manifests (.toml) or metrics files written by `analyze` (.json), in epoch order.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Baseline epoch (default: the earliest).
        #[arg(long)]
        baseline_epoch: Option<u64>,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic instance.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Run the built-in oracle checks and print a pass/fail table.
    Selfcheck {
        #[arg(long, value_enum, default_value_t = FloorArg::On)]
        mass_floor: FloorArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FloorArg {
    On,
    Off,
}

impl From<FloorArg> for MassFloor {
    fn from(f: FloorArg) -> Self {
        match f {
            FloorArg::On => MassFloor::On,
            FloorArg::Off => MassFloor::Off,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub exponent_p: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub epsilon_w: f64,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    /// Largest admitted distance; `inf` for none.
    #[arg(long, default_value = "inf", allow_negative_numbers = true)]
    pub d_threshold: f64,
    #[arg(long, default_value_t = 64)]
    pub nodes_per_layer: usize,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub q_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub q_max: f64,
    #[arg(long, default_value_t = 0.25)]
    pub q_step: f64,
    #[arg(long, default_value_t = 256)]
    pub r_max: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FloorArg::On)]
    pub mass_floor: FloorArg,
    /// Use the sampling path estimator with this many intermediates per probe.
    #[arg(long)]
    pub estimate_budget: Option<usize>,
    /// Smallest radius used in the tau regressions.
    #[arg(long)]
    pub fit_r_min: Option<u32>,
    /// Largest radius used in the tau regressions.
    #[arg(long)]
    pub fit_r_max: Option<u32>,
}

impl AnalysisArgs {
    pub fn config(&self) -> nmfa::Result<AnalysisConfig> {
        let grid = QGrid::uniform(self.q_min, self.q_max, self.q_step)?;
        if self.d_threshold.is_nan() {
            return Err(nmfa::Error::InvalidParameter("d-threshold is NaN".into()));
        }
        let config = AnalysisConfig {
            transform: EdgeTransformParams {
                exponent: self.exponent_p,
                epsilon_w: self.epsilon_w,
            },
            distance: DistanceParams {
                lambda: self.lambda,
                gamma: self.gamma,
                horizon: self.horizon,
                d_threshold: self.d_threshold.is_finite().then_some(self.d_threshold),
            },
            plan: SamplePlan {
                nodes_per_layer: self.nodes_per_layer,
                num_samples: self.samples,
                seed: self.seed,
            },
            grid,
            r_max: self.r_max,
            floor: self.mass_floor.into(),
            window: FitWindow {
                r_min: self.fit_r_min,
                r_max: self.fit_r_max,
            },
            estimator: self.estimate_budget.map(|b| EstimatorParams::new(b, self.seed)),
        };
        if let (Some(lo), Some(hi)) = (self.fit_r_min, self.fit_r_max) {
            if lo >= hi {
                return Err(nmfa::Error::InvalidParameter(format!(
                    "fit window [{lo}, {hi}] is empty"
                )));
            }
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyModeArg {
    Homogeneous,
    Heterogeneous,
    Random,
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    /// Binomial multiplicative measure: one row per dyadic box.
    Binomial {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Middle-thirds Cantor set mass profiles.
    Cantor {
        #[arg(long, default_value_t = 10)]
        depth: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Watts-Strogatz graph as an edge list.
    Ws {
        #[arg(long, default_value_t = 300)]
        n: usize,
        /// Ring degree (even).
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Small layered network written as a checkpoint.
    Toy {
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 32)]
        nodes: usize,
        #[arg(long, value_enum)]
        mode: ToyModeArg,
        /// Heterogeneity level (heterogeneous mode only).
        #[arg(long, default_value_t = 0.0)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        epoch: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Layered network with power-law neighbour counts, written as a checkpoint.
    FractalLayered {
        #[arg(long)]
        target_d: f64,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 128)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random toy network under repeated weight adjustment, one checkpoint per interval.
    WpamSeries {
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 32)]
        nodes: usize,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value_t = 5)]
        every: usize,
        #[arg(long, default_value_t = 0.9)]
        delta: f64,
        #[arg(long, default_value_t = 1.1)]
        iota: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}
