//! Neuron-based multifractal analysis of layered weighted networks.
//!
//! The pipeline turns raw layer-to-layer weights into an interaction network
//! of edge distances, samples it, grows a box around every node to record how
//! many neighbours fall within each radius, and condenses those mass profiles
//! into a singularity spectrum. Two scalars summarise a spectrum: `alpha0`
//! (where `f(alpha)` peaks; lower means more regular) and the width
//! `alpha_max - alpha_min` (heterogeneity). Across training checkpoints they
//! combine into a degree-of-emergence series.
//!
//! ```
//! use nmfa::analysis::{analyze_network, AnalysisConfig};
//! use nmfa::generators::{toy_layered, ToyMode};
//!
//! let net = toy_layered(3, 32, ToyMode::Random, 1).unwrap();
//! let analysis = analyze_network(&net, &AnalysisConfig::default()).unwrap();
//! assert!(analysis.metrics.width >= 0.0);
//! ```

pub mod analysis;
pub mod emergence;
pub mod error;
pub mod generators;
pub mod io;
pub mod mfa;
pub mod net_model;
pub mod paths;
pub mod sampling;
mod seed;
pub mod stats;

pub use error::{Error, Result};
