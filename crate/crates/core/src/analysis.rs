//! End-to-end composition: network -> sampled subnetworks -> neighbour
//! distances -> mass profiles -> spectra -> aggregate.

use petgraph::graph::{NodeIndex, UnGraph};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfa::{
    mass_profiles, spectrum_from_profiles, FitWindow, MassFloor, ProfileSet, QGrid, Spectrum,
    SpectrumMetrics, DEFAULT_R_MAX,
};
use crate::net_model::{build_nin, EdgeTransformParams, InteractionNetwork, LayeredNetwork, NodeId};
use crate::paths::{
    estimated_distances, exact_bounded_distances, generic_distances, DistanceParams,
    EstimatorParams, SearchOutcomes,
};
use crate::sampling::{aggregate, sample_snin, AggregateSpectrum, SamplePlan};

/// Every knob of an analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub transform: EdgeTransformParams,
    pub distance: DistanceParams,
    pub plan: SamplePlan,
    pub grid: QGrid,
    pub r_max: u32,
    pub floor: MassFloor,
    pub window: FitWindow,
    /// Use the sampling estimator instead of exact distances.
    pub estimator: Option<EstimatorParams>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            transform: EdgeTransformParams::default(),
            distance: DistanceParams::default(),
            plan: SamplePlan::default(),
            grid: QGrid::default(),
            r_max: DEFAULT_R_MAX,
            floor: MassFloor::On,
            window: FitWindow::default(),
            estimator: None,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.transform.validate()?;
        self.distance.validate()?;
        self.plan.validate()?;
        if let Some(est) = &self.estimator {
            est.validate()?;
        }
        if self.r_max < 1 {
            return Err(Error::InvalidParameter("r_max must be at least 1".into()));
        }
        if self.grid.len() < 3 {
            return Err(Error::InvalidParameter("q-grid needs at least 3 points".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub sample: usize,
    pub nodes: usize,
    pub observers: usize,
    /// Observers without any neighbour inside the horizon/threshold.
    pub dropped: usize,
    pub distinct_radii: usize,
    pub search: SearchOutcomes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub aggregate: AggregateSpectrum,
    /// Metrics of the mean spectrum.
    pub metrics: SpectrumMetrics,
    pub spectra: Vec<Spectrum>,
    pub diagnostics: Vec<SampleDiagnostics>,
}

/// Mass profiles of every node of `nin` from its neighbour distances.
pub fn network_profiles(
    nin: &InteractionNetwork,
    distance: &DistanceParams,
    estimator: Option<&EstimatorParams>,
    r_max: u32,
) -> Result<(ProfileSet, SearchOutcomes)> {
    let sources: Vec<NodeId> = nin.nodes().collect();
    let table = match estimator {
        Some(est) => estimated_distances(nin, &sources, distance, est)?,
        None => exact_bounded_distances(nin, &sources, distance)?,
    };
    let lists: Vec<(NodeId, Vec<f64>)> = sources
        .iter()
        .map(|&s| (s, table.neighbor_distances(s)))
        .collect();
    Ok((mass_profiles(&lists, r_max)?, table.outcomes()))
}

/// Mass profiles of every node of an undirected graph from its shortest-path distances.
pub fn graph_profiles(graph: &UnGraph<(), f64>, r_max: u32) -> Result<ProfileSet> {
    let lists = graph
        .node_indices()
        .collect::<Vec<NodeIndex>>()
        .par_iter()
        .map(|&v| {
            let dist = generic_distances(graph, v)?;
            let mut d: Vec<f64> = dist
                .into_iter()
                .filter(|&(u, _)| u != v)
                .map(|(_, d)| d)
                .filter(|d| *d > 0.0)
                .collect();
            d.sort_by(f64::total_cmp);
            Ok((NodeId::new(0, v.index()), d))
        })
        .collect::<Result<Vec<_>>>()?;
    mass_profiles(&lists, r_max)
}

fn analyze_sample(
    nin: &InteractionNetwork,
    config: &AnalysisConfig,
    sample: usize,
) -> Result<(Spectrum, SampleDiagnostics)> {
    let snin = sample_snin(nin, &config.plan, sample)?;
    let (set, search) =
        network_profiles(&snin, &config.distance, config.estimator.as_ref(), config.r_max)?;
    if set.profiles.is_empty() {
        return Err(Error::Degenerate(format!(
            "sample {sample}: all {} observers are isolated (no neighbours within horizon {} / threshold {:?})",
            set.dropped.len(),
            config.distance.horizon,
            config.distance.d_threshold
        )));
    }
    let mut radii: Vec<u32> = set.profiles.iter().flat_map(|p| p.radii().iter().copied()).collect();
    radii.sort_unstable();
    radii.dedup();
    let spectrum = spectrum_from_profiles(&set.profiles, &config.grid, config.floor, config.window)
        .map_err(|e| match e {
            Error::Degenerate(m) => Error::Degenerate(format!(
                "sample {sample} ({} observers, {} distinct radii): {m}",
                set.profiles.len(),
                radii.len()
            )),
            other => other,
        })?;
    let diagnostics = SampleDiagnostics {
        sample,
        nodes: snin.node_count(),
        observers: set.profiles.len(),
        dropped: set.dropped.len(),
        distinct_radii: radii.len(),
        search,
    };
    Ok((spectrum, diagnostics))
}

/// Analyses `num_samples` sampled subnetworks and aggregates their spectra.
///
/// Samples run in parallel on the current rayon pool; results do not depend
/// on the number of worker threads.
pub fn analyze(nin: &InteractionNetwork, config: &AnalysisConfig) -> Result<Analysis> {
    config.validate()?;
    let per_sample = (0..config.plan.num_samples)
        .into_par_iter()
        .map(|s| analyze_sample(nin, config, s))
        .collect::<Result<Vec<_>>>()?;
    let (spectra, diagnostics): (Vec<Spectrum>, Vec<SampleDiagnostics>) =
        per_sample.into_iter().unzip();
    let aggregate = aggregate(&spectra)?;
    let metrics = aggregate.metrics();
    Ok(Analysis {
        aggregate,
        metrics,
        spectra,
        diagnostics,
    })
}

pub fn analyze_network(net: &LayeredNetwork, config: &AnalysisConfig) -> Result<Analysis> {
    config.validate()?;
    let nin = build_nin(net, &config.transform)?;
    analyze(&nin, config)
}

/// Spectrum of an undirected graph, every node observing.
pub fn analyze_graph(graph: &UnGraph<(), f64>, config: &AnalysisConfig) -> Result<Spectrum> {
    let set = graph_profiles(graph, config.r_max)?;
    if set.profiles.is_empty() {
        return Err(Error::Degenerate("graph has no connected pairs".into()));
    }
    spectrum_from_profiles(&set.profiles, &config.grid, config.floor, config.window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{toy_layered, ToyMode};

    #[test]
    fn isolated_sample_aborts() {
        let net = LayeredNetwork::new(vec![ndarray::Array2::zeros((3, 3))]).unwrap();
        let err = analyze_network(&net, &AnalysisConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(m) if m.contains("isolated")));
    }

    #[test]
    fn reruns_are_identical() {
        let net = toy_layered(3, 32, ToyMode::Random, 4).unwrap();
        let config = AnalysisConfig {
            plan: SamplePlan {
                nodes_per_layer: 16,
                num_samples: 3,
                seed: 9,
            },
            ..AnalysisConfig::default()
        };
        let a = analyze_network(&net, &config).unwrap();
        let b = analyze_network(&net, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.diagnostics.len(), 3);
        assert_eq!(a.diagnostics[0].nodes, 48);
    }
}
