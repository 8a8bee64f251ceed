//! Least-squares fits, kurtosis and weighted-degree summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::{InteractionNetwork, NodeId};

/// Ordinary least-squares line with its coefficient of determination.
///
/// `r2` is `None` when the ordinates are constant, where `1 - SS_res / SS_tot`
/// is `0 / 0`. Ordinates whose spread is at rounding level (a few ulps of
/// their magnitude) count as constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: Option<f64>,
}

pub fn linfit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::Structural(format!(
            "linfit: {} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "linfit needs at least 2 points, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 || xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::Degenerate(
            "linfit: all abscissae are equal".to_string(),
        ));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Ok(FitResult {
            slope: 0.0,
            intercept: ys[0],
            r2: None,
        });
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let spread = ys.iter().fold(f64::NEG_INFINITY, |m, &y| m.max(y))
        - ys.iter().fold(f64::INFINITY, |m, &y| m.min(y));
    let scale = ys.iter().fold(1.0f64, |m, &y| m.max(y.abs()));
    let r2 = if ss_tot == 0.0 || spread <= 64.0 * f64::EPSILON * scale {
        None
    } else {
        Some((1.0 - ss_res / ss_tot).clamp(0.0, 1.0))
    };
    Ok(FitResult {
        slope,
        intercept,
        r2,
    })
}

/// Population kurtosis `E[((X - mu) / sigma)^4]` (3 for a normal distribution).
pub fn kurtosis(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::Domain(format!(
            "kurtosis needs at least 2 values, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return Err(Error::Domain("kurtosis of a zero-variance sample".to_string()));
    }
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok(m4 / (m2 * m2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges, one more than the number of bins.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[min, max]`; the last bin is closed.
    pub fn equal_width(values: &[f64], bins: usize) -> Histogram {
        let bins = bins.max(1);
        if values.is_empty() {
            return Histogram {
                edges: vec![0.0; bins + 1],
                counts: vec![0; bins],
            };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0usize; bins];
        for &v in values {
            let slot = (((v - lo) / width) as usize).min(bins - 1);
            counts[slot] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Per-node mean out-edge distance over a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub averages: Vec<(NodeId, f64)>,
    /// Non-final-layer nodes without out-edges; excluded from the averages.
    pub isolated: Vec<NodeId>,
    /// `None` when every average is identical.
    pub kurtosis: Option<f64>,
    pub histogram: Histogram,
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 32;

pub fn avg_weighted_degree(nin: &InteractionNetwork) -> DegreeSummary {
    let last = nin.num_layers().saturating_sub(1);
    let mut averages = Vec::new();
    let mut isolated = Vec::new();
    for node in nin.nodes().filter(|n| (n.layer as usize) < last) {
        let out = nin.out_edges(node);
        if out.is_empty() {
            isolated.push(node);
            continue;
        }
        let mean = out.iter().map(|e| e.omega).sum::<f64>() / out.len() as f64;
        averages.push((node, mean));
    }
    let values: Vec<f64> = averages.iter().map(|&(_, v)| v).collect();
    let kurtosis = kurtosis(&values).ok();
    let histogram = Histogram::equal_width(&values, DEFAULT_HISTOGRAM_BINS);
    DegreeSummary {
        averages,
        isolated,
        kurtosis,
        histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::{build_nin, EdgeTransformParams, LayeredNetwork};
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        let fit = linfit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 1.0, epsilon = 1e-12);
        assert_eq!(fit.r2, Some(1.0));
    }

    #[test]
    fn constant_ordinates_are_flagged() {
        let fit = linfit(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, None);
        assert!(matches!(
            linfit(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn r2_on_fixed_noisy_points() {
        // Hand-evaluated: x = 1..5, y = [2.1, 3.9, 6.2, 7.8, 10.1].
        // slope = 19.9 / 10 = 1.99, intercept = 6.02 - 1.99 * 3 = 0.05
        // SS_tot = 39.708, SS_res = 0.107  =>  R^2 = 1 - 0.107 / 39.708
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [2.1, 3.9, 6.2, 7.8, 10.1];
        let fit = linfit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 1.99, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 0.05, epsilon = 1e-12);
        assert_relative_eq!(fit.r2.unwrap(), 1.0 - 0.107 / 39.708, epsilon = 1e-12);
    }

    #[test]
    fn kurtosis_cases() {
        let two_point: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        assert_relative_eq!(kurtosis(&two_point).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(kurtosis(&[2.0, 2.0, 2.0]), Err(Error::Domain(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let sample: Vec<f64> = (0..200_000).map(|_| normal.sample(&mut rng)).collect();
        let k = kurtosis(&sample).unwrap();
        assert!((2.8..=3.2).contains(&k), "normal kurtosis {k}");

        let mut heavy = sample[..1000].to_vec();
        let base = kurtosis(&heavy).unwrap();
        heavy.extend([25.0, -25.0]);
        assert!(kurtosis(&heavy).unwrap() > base);
    }

    #[test]
    fn weighted_degree_summary() {
        let net = LayeredNetwork::new(vec![array![[0.5, 0.25], [1.0, 1.0]], array![[1.0], [1.0]]]).unwrap();
        let nin = build_nin(&net, &EdgeTransformParams::default()).unwrap();
        let summary = avg_weighted_degree(&nin);
        assert_eq!(summary.averages[0], (NodeId::new(0, 0), 3.0));
        assert_eq!(summary.histogram.total(), summary.averages.len());
        assert!(summary.isolated.is_empty());

        let uniform = LayeredNetwork::new(vec![Array2::from_elem((4, 4), 0.5)]).unwrap();
        let summary = avg_weighted_degree(&build_nin(&uniform, &EdgeTransformParams::default()).unwrap());
        assert_eq!(summary.kurtosis, None);
    }

    #[test]
    fn heavy_tailed_network_has_larger_kurtosis() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(1.0, 0.05).unwrap();
        let base = Array2::from_shape_fn((64, 16), |_| normal.sample(&mut rng));
        let mut heavy = base.clone();
        for i in 0..3 {
            heavy.row_mut(i).fill(0.02);
        }
        let p = EdgeTransformParams::default();
        let k_base = avg_weighted_degree(&build_nin(&LayeredNetwork::new(vec![base]).unwrap(), &p).unwrap())
            .kurtosis
            .unwrap();
        let k_heavy = avg_weighted_degree(&build_nin(&LayeredNetwork::new(vec![heavy]).unwrap(), &p).unwrap())
            .kurtosis
            .unwrap();
        assert!(k_heavy > k_base, "{k_heavy} <= {k_base}");
    }

    proptest! {
        #[test]
        fn fit_invariant_under_positive_affine_x(
            ys in proptest::collection::vec(-100.0f64..100.0, 3..20),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            prop_assume!(ys.iter().any(|&y| y != ys[0]));
            let a = linfit(&xs, &ys).unwrap();
            let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            let b = linfit(&moved, &ys).unwrap();
            prop_assert!((b.slope - a.slope / scale).abs() <= 1e-8 * (1.0 + a.slope.abs()));
            prop_assert!((b.r2.unwrap() - a.r2.unwrap()).abs() <= 1e-9);
        }

        #[test]
        fn kurtosis_is_affine_invariant(
            xs in proptest::collection::vec(-100.0f64..100.0, 4..40),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            prop_assume!(xs.iter().any(|&x| (x - xs[0]).abs() > 1e-3));
            let a = kurtosis(&xs).unwrap();
            let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            let b = kurtosis(&moved).unwrap();
            prop_assert!((a - b).abs() <= 1e-7 * a);
        }
    }
}
