//! Per-layer node sampling and aggregation of per-sample spectra.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfa::{spectrum_metrics, Spectrum, SpectrumMetrics};
use crate::net_model::{EdgeBlock, InteractionNetwork, WeightedEdge};
use crate::seed::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub nodes_per_layer: usize,
    pub num_samples: usize,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            nodes_per_layer: 64,
            num_samples: 10,
            seed: 0,
        }
    }
}

impl SamplePlan {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_layer < 1 {
            return Err(Error::InvalidParameter("nodes_per_layer must be at least 1".into()));
        }
        if self.num_samples < 1 {
            return Err(Error::InvalidParameter("num_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform without-replacement sample of `min(nodes_per_layer, size)` nodes per layer.
///
/// Kept nodes stay in their original order; edges between kept nodes are retained.
pub fn sample_snin(
    nin: &InteractionNetwork,
    plan: &SamplePlan,
    sample_index: usize,
) -> Result<InteractionNetwork> {
    plan.validate()?;
    if sample_index >= plan.num_samples {
        return Err(Error::InvalidParameter(format!(
            "sample index {sample_index} out of range for {} samples",
            plan.num_samples
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(plan.seed, &[sample_index as u64]));
    let kept: Vec<Vec<usize>> = nin
        .sizes()
        .iter()
        .map(|&n| {
            if plan.nodes_per_layer >= n {
                (0..n).collect()
            } else {
                let mut picked = index::sample(&mut rng, n, plan.nodes_per_layer).into_vec();
                picked.sort_unstable();
                picked
            }
        })
        .collect();

    // position of each original node in the sample, if kept
    let position: Vec<Vec<Option<u32>>> = nin
        .sizes()
        .iter()
        .zip(&kept)
        .map(|(&n, keep)| {
            let mut pos = vec![None; n];
            for (k, &i) in keep.iter().enumerate() {
                pos[i] = Some(k as u32);
            }
            pos
        })
        .collect();

    let blocks = nin
        .blocks()
        .iter()
        .map(|b| {
            let edges = b
                .edges()
                .iter()
                .filter_map(|e| {
                    let s = position[b.from_layer()][e.source as usize]?;
                    let t = position[b.to_layer()][e.target as usize]?;
                    Some(WeightedEdge {
                        source: s,
                        target: t,
                        omega: e.omega,
                    })
                })
                .collect();
            EdgeBlock::new(b.from_layer(), b.to_layer(), edges)
        })
        .collect();

    let sizes = kept.iter().map(Vec::len).collect();
    let origin = kept
        .iter()
        .enumerate()
        .map(|(l, keep)| {
            keep.iter()
                .map(|&i| nin.origin_index(crate::net_model::NodeId::new(l, i)))
                .collect()
        })
        .collect();
    Ok(InteractionNetwork::new(sizes, blocks)?
        .with_epoch(nin.epoch())
        .with_origin(origin))
}

/// Pointwise mean and (population) standard deviation of several spectra on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSpectrum {
    pub q: Vec<f64>,
    pub tau_mean: Vec<f64>,
    pub tau_std: Vec<f64>,
    pub alpha_mean: Vec<f64>,
    pub alpha_std: Vec<f64>,
    pub f_mean: Vec<f64>,
    pub f_std: Vec<f64>,
    pub alpha0_mean: f64,
    pub alpha0_var: f64,
    pub width_mean: f64,
    pub width_var: f64,
    pub samples: Vec<SpectrumMetrics>,
}

impl AggregateSpectrum {
    /// Metrics of the mean spectrum.
    pub fn metrics(&self) -> SpectrumMetrics {
        spectrum_metrics(&self.q, &self.alpha_mean, &self.f_mean)
    }

    pub fn mean_spectrum(&self) -> Spectrum {
        Spectrum {
            q: self.q.clone(),
            tau: self.tau_mean.clone(),
            alpha: self.alpha_mean.clone(),
            f_alpha: self.f_mean.clone(),
            r2: vec![None; self.q.len()],
        }
    }
}

fn mean_std(columns: impl Iterator<Item = Vec<f64>>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = Vec::new();
    let mut std = Vec::new();
    for col in columns {
        let (m, v) = mean_var(&col);
        mean.push(m);
        std.push(v.sqrt());
    }
    debug_assert!(mean.len() == n);
    (mean, std)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.max(0.0))
}

pub fn aggregate(spectra: &[Spectrum]) -> Result<AggregateSpectrum> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::Degenerate("aggregate of zero spectra".into()))?;
    let q = first.q.clone();
    if let Some(k) = spectra.iter().position(|s| s.q != q) {
        return Err(Error::Structural(format!(
            "spectrum {k} uses a different q-grid"
        )));
    }
    let n = q.len();
    let column = |pick: fn(&Spectrum) -> &Vec<f64>, j: usize| -> Vec<f64> {
        spectra.iter().map(|s| pick(s)[j]).collect()
    };
    let (tau_mean, tau_std) = mean_std((0..n).map(|j| column(|s| &s.tau, j)), n);
    let (alpha_mean, alpha_std) = mean_std((0..n).map(|j| column(|s| &s.alpha, j)), n);
    let (f_mean, f_std) = mean_std((0..n).map(|j| column(|s| &s.f_alpha, j)), n);
    let samples: Vec<SpectrumMetrics> = spectra.iter().map(Spectrum::metrics).collect();
    let (alpha0_mean, alpha0_var) = mean_var(&samples.iter().map(|m| m.alpha0).collect::<Vec<_>>());
    let (width_mean, width_var) = mean_var(&samples.iter().map(|m| m.width).collect::<Vec<_>>());
    Ok(AggregateSpectrum {
        q,
        tau_mean,
        tau_std,
        alpha_mean,
        alpha_std,
        f_mean,
        f_std,
        alpha0_mean,
        alpha0_var,
        width_mean,
        width_var,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfa::{legendre_spectrum, QGrid};
    use crate::net_model::{build_nin, EdgeTransformParams, LayeredNetwork, NodeId};
    use ndarray::Array2;

    fn dense(sizes: &[usize]) -> InteractionNetwork {
        let weights = sizes
            .windows(2)
            .map(|w| Array2::from_shape_fn((w[0], w[1]), |(a, b)| 0.1 + (a * 7 + b * 3) as f64 * 0.01))
            .collect();
        build_nin(&LayeredNetwork::new(weights).unwrap(), &EdgeTransformParams::default()).unwrap()
    }

    #[test]
    fn oversized_plan_keeps_everything() {
        let nin = dense(&[5, 4, 3]);
        let plan = SamplePlan {
            nodes_per_layer: 10,
            num_samples: 2,
            seed: 3,
        };
        let s = sample_snin(&nin, &plan, 1).unwrap();
        assert_eq!(s.sizes(), nin.sizes());
        assert_eq!(s.blocks(), nin.blocks());
    }

    #[test]
    fn sampling_is_deterministic_and_induced() {
        let nin = dense(&[20, 30, 10]);
        let plan = SamplePlan {
            nodes_per_layer: 6,
            num_samples: 3,
            seed: 42,
        };
        let a = sample_snin(&nin, &plan, 2).unwrap();
        let b = sample_snin(&nin, &plan, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sizes(), &[6, 6, 6]);
        assert_eq!(a.edge_count(), 2 * 36);
        let c = sample_snin(&nin, &plan, 1).unwrap();
        assert_ne!(a, c);
        // every retained edge carries the original distance
        for block in a.blocks() {
            for e in block.edges() {
                let s = a.origin_index(NodeId::new(block.from_layer(), e.source as usize));
                let t = a.origin_index(NodeId::new(block.to_layer(), e.target as usize));
                let orig = nin.out_edges(NodeId::new(block.from_layer(), s));
                assert!(orig.iter().any(|o| o.target as usize == t && o.omega == e.omega));
            }
        }
        assert!(sample_snin(&nin, &plan, 3).is_err());
    }

    #[test]
    fn aggregate_of_identical_spectra() {
        let grid = QGrid::default();
        let tau: Vec<f64> = grid.values().iter().map(|q| -(0.25f64.powf(*q) + 0.75f64.powf(*q)).log2()).collect();
        let s = legendre_spectrum(&tau, &grid).unwrap();
        let one = aggregate(&[s.clone()]).unwrap();
        assert_eq!(one.tau_mean, s.tau);
        assert!(one.tau_std.iter().chain(&one.alpha_std).chain(&one.f_std).all(|&x| x == 0.0));
        let two = aggregate(&[s.clone(), s.clone()]).unwrap();
        assert!(two.alpha_std.iter().all(|&x| x == 0.0));
        assert_eq!(two.alpha0_var, 0.0);

        let other = legendre_spectrum(&tau[1..], &QGrid::new(grid.values()[1..].to_vec()).unwrap()).unwrap();
        assert!(matches!(aggregate(&[s, other]), Err(Error::Structural(_))));
    }
}
