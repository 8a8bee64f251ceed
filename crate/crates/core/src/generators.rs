//! Synthetic instances with known structure: multiplicative measures, the
//! Cantor set, Watts-Strogatz graphs, small layered toy networks, iterated
//! weight adjustment and power-law layered networks.

use std::collections::BTreeSet;

use ndarray::Array2;
use petgraph::graph::UnGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfa::{round_radius, MassProfile, PartitionTable, QGrid, DEFAULT_R_MAX};
use crate::net_model::{LayeredNetwork, NodeId};
use crate::seed::mix_seed;

/// Closed-form mass exponent of the binomial measure, `-log2(p^q + (1-p)^q)`.
pub fn analytic_tau(p: f64, q: f64) -> f64 {
    -(p.powf(q) + (1.0 - p).powf(q)).log2()
}

/// Closed-form `dtau/dq` of the binomial measure.
pub fn analytic_alpha(p: f64, q: f64) -> f64 {
    let a = p.powf(q);
    let b = (1.0 - p).powf(q);
    -(a * p.ln() + b * (1.0 - p).ln()) / ((a + b) * std::f64::consts::LN_2)
}

/// Binomial cascade on `[0, 1]`: every split sends a fraction `p` of the mass left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialMeasure {
    pub p: f64,
    pub depth: u32,
    /// `2^depth` box masses, left to right.
    pub masses: Vec<f64>,
}

pub fn binomial_measure(p: f64, depth: u32) -> Result<BinomialMeasure> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("binomial p must lie in (0, 1), got {p}")));
    }
    if !(1..=24).contains(&depth) {
        return Err(Error::InvalidParameter(format!(
            "binomial depth must be in 1..=24, got {depth}"
        )));
    }
    let mut masses = vec![1.0f64];
    for _ in 0..depth {
        masses = masses.iter().flat_map(|&m| [m * p, m * (1.0 - p)]).collect();
    }
    Ok(BinomialMeasure { p, depth, masses })
}

fn coarsen<T: Copy + std::ops::Add<Output = T>>(level: &[T]) -> Vec<T> {
    level.chunks(2).map(|c| c[0] + c[1]).collect()
}

// Smallest a, b with a / (a + b) == p, when p has a denominator up to 1000.
fn as_ratio(p: f64) -> Option<(u64, u64)> {
    (2u64..=1000).find_map(|den| {
        let a = (p * den as f64).round();
        ((a / den as f64 - p).abs() < 1e-12 && a >= 1.0 && (a as u64) < den)
            .then(|| (a as u64, den - a as u64))
    })
}

impl BinomialMeasure {
    /// Box-counting partition sums: radius `2^k` (in finest-box units) holds
    /// `sum mu^q` over the boxes of that size; the maximum radius is the whole interval.
    pub fn partition_table(&self, grid: &QGrid) -> Result<PartitionTable> {
        let mut levels = vec![self.masses.clone()];
        while levels.last().expect("non-empty").len() > 1 {
            let next = coarsen(levels.last().expect("non-empty"));
            levels.push(next);
        }
        let radii: Vec<u32> = (0..levels.len()).map(|k| 1u32 << k).collect();
        let z = grid
            .values()
            .iter()
            .map(|&q| {
                levels
                    .iter()
                    .map(|boxes| boxes.iter().map(|m| m.powf(q)).sum())
                    .collect()
            })
            .collect();
        let max = *radii.last().expect("non-empty");
        PartitionTable::new(radii, max, grid.values().to_vec(), z)
    }

    /// The measure as integer-count mass profiles: one observer per finest box,
    /// whose count at radius `2^k` is the (integer-scaled) mass of the dyadic
    /// block of size `2^k` around it.
    ///
    /// Requires `p = a / (a + b)` for small integers so that masses are exact
    /// integer counts.
    pub fn dyadic_profiles(&self) -> Result<Vec<MassProfile>> {
        let (a, b) = as_ratio(self.p).ok_or_else(|| {
            Error::InvalidParameter(format!("p = {} has no small rational form", self.p))
        })?;
        (a + b).checked_pow(self.depth).ok_or_else(|| {
            Error::InvalidParameter(format!("integer masses overflow at depth {}", self.depth))
        })?;
        let mut counts = vec![1u64];
        for _ in 0..self.depth {
            counts = counts.iter().flat_map(|&c| [c * a, c * b]).collect();
        }
        let mut levels = vec![counts];
        while levels.last().expect("non-empty").len() > 1 {
            let next = coarsen(levels.last().expect("non-empty"));
            levels.push(next);
        }
        let radii: Vec<u32> = (0..levels.len()).map(|k| 1u32 << k).collect();
        (0..self.masses.len())
            .map(|i| {
                let counts = levels.iter().enumerate().map(|(k, l)| l[i >> k]).collect();
                MassProfile::new(NodeId::new(0, i), radii.clone(), counts)
            })
            .collect()
    }
}

/// Middle-thirds Cantor set at `depth`: one observer per surviving interval.
///
/// Positions are the left endpoints in units of `3^-depth`; the count at
/// radius `3^k` is the number of points within that distance (self included).
pub fn cantor_set_profile(depth: u32) -> Result<Vec<MassProfile>> {
    if !(2..=20).contains(&depth) {
        return Err(Error::InvalidParameter(format!(
            "cantor depth must be in 2..=20, got {depth}"
        )));
    }
    let mut points = vec![0u64];
    for level in 0..depth {
        let shift = 2 * 3u64.pow(depth - 1 - level);
        points = points.iter().flat_map(|&x| [x, x + shift]).collect();
    }
    let radii: Vec<u32> = (0..=depth).map(|k| 3u32.pow(k)).collect();
    points
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let counts = radii
                .iter()
                .map(|&r| {
                    let r = u64::from(r);
                    let lo = points.partition_point(|&y| y + r < x);
                    let hi = points.partition_point(|&y| y <= x + r);
                    (hi - lo) as u64
                })
                .collect();
            MassProfile::new(NodeId::new(0, i), radii.clone(), counts)
        })
        .collect()
}

/// Watts-Strogatz graph with unit edge weights.
///
/// Starts from a ring where each node links to its `k_ring / 2` nearest
/// neighbours on each side. Each lattice edge `(u, v)` then has its far
/// endpoint replaced with probability `beta` by a uniformly chosen node that
/// is neither `u` nor already adjacent to `u`. Edge count is preserved.
pub fn ws_graph(n: usize, k_ring: usize, beta: f64, seed: u64) -> Result<UnGraph<(), f64>> {
    if !(k_ring >= 2 && k_ring % 2 == 0 && n > k_ring) {
        return Err(Error::InvalidParameter(format!(
            "ws_graph needs an even k_ring >= 2 below n (n = {n}, k_ring = {k_ring})"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta must lie in [0, 1], got {beta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0x5753]));
    let mut adjacency: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut edges = Vec::with_capacity(n * k_ring / 2);
    for j in 1..=k_ring / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            adjacency[u].insert(v);
            adjacency[v].insert(u);
            edges.push((u, v));
        }
    }
    for edge in edges.iter_mut() {
        if !rng.gen_bool(beta) {
            continue;
        }
        let (u, v) = *edge;
        if adjacency[u].len() >= n - 1 {
            continue;
        }
        let w = loop {
            let w = rng.gen_range(0..n);
            if w != u && !adjacency[u].contains(&w) {
                break w;
            }
        };
        adjacency[u].remove(&v);
        adjacency[v].remove(&u);
        adjacency[u].insert(w);
        adjacency[w].insert(u);
        *edge = (u, w);
    }
    let mut graph = UnGraph::<(), f64>::with_capacity(n, edges.len());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for (u, v) in edges {
        graph.add_edge(nodes[u], nodes[v], 1.0);
    }
    Ok(graph)
}

/// Weight pattern of a toy layered network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ToyMode {
    /// Every weight equals [`TOY_BASE_WEIGHT`].
    Homogeneous,
    /// Node `a`'s outgoing weights are `TOY_BASE_WEIGHT * exp(level * u_a)` with `u_a ~ U(-1, 1)`.
    Heterogeneous { level: f64 },
    /// Independent weights, uniform on `[TOY_RANDOM_RANGE.0, TOY_RANDOM_RANGE.1)`.
    Random,
}

pub const TOY_BASE_WEIGHT: f64 = 0.1;
pub const TOY_RANDOM_RANGE: (f64, f64) = (0.02, 0.2);

pub fn toy_layered(num_layers: usize, nodes: usize, mode: ToyMode, seed: u64) -> Result<LayeredNetwork> {
    if num_layers < 2 || nodes < 1 {
        return Err(Error::InvalidParameter(format!(
            "toy network needs >= 2 layers of >= 1 node (got {num_layers} x {nodes})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0x70e]));
    let weights = match mode {
        ToyMode::Homogeneous => vec![Array2::from_elem((nodes, nodes), TOY_BASE_WEIGHT); num_layers - 1],
        ToyMode::Heterogeneous { level } => {
            if !(level >= 0.0) || !level.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "heterogeneity level must be finite and non-negative, got {level}"
                )));
            }
            (0..num_layers - 1)
                .map(|_| {
                    let scale: Vec<f64> = (0..nodes)
                        .map(|_| (level * rng.gen_range(-1.0..=1.0)).exp())
                        .collect();
                    Array2::from_shape_fn((nodes, nodes), |(a, _)| TOY_BASE_WEIGHT * scale[a])
                })
                .collect()
        }
        ToyMode::Random => (0..num_layers - 1)
            .map(|_| {
                Array2::from_shape_fn((nodes, nodes), |_| {
                    rng.gen_range(TOY_RANDOM_RANGE.0..TOY_RANDOM_RANGE.1)
                })
            })
            .collect(),
    };
    LayeredNetwork::new(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WpamParams {
    /// Factor applied to entries below the median.
    pub delta: f64,
    /// Factor applied to the other entries.
    pub iota: f64,
    pub iterations: usize,
}

impl Default for WpamParams {
    fn default() -> Self {
        WpamParams {
            delta: 0.9,
            iota: 1.1,
            iterations: 1,
        }
    }
}

impl WpamParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.delta && self.delta < 1.0 && 1.0 < self.iota && self.iota.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight adjustment needs 0 < delta < 1 < iota (delta {}, iota {})",
                self.delta, self.iota
            )));
        }
        Ok(())
    }
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Repeated median split: entries strictly below the matrix median are scaled by
/// `delta`, the rest by `iota`. The median is recomputed every iteration.
pub fn wpam_iterate(w: &Array2<f64>, params: &WpamParams) -> Result<Array2<f64>> {
    params.validate()?;
    if let Some(bad) = w.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!(
            "weight adjustment needs positive finite entries, found {bad}"
        )));
    }
    let mut w = w.clone();
    for _ in 0..params.iterations {
        let values: Vec<f64> = w.iter().copied().collect();
        let m = median(&values);
        w.mapv_inplace(|x| if x < m { x * params.delta } else { x * params.iota });
    }
    Ok(w)
}

/// Applies [`wpam_iterate`] to every weight matrix of a network.
pub fn wpam_network(net: &LayeredNetwork, params: &WpamParams) -> Result<LayeredNetwork> {
    net.map_matrices(|w| wpam_iterate(w, params))
}

/// Checkpoints of repeated weight adjustment: the input at iteration 0, then
/// the network after every `every` further iterations, up to `iterations`.
pub fn wpam_schedule(
    net: &LayeredNetwork,
    params: &WpamParams,
    every: usize,
    iterations: usize,
) -> Result<Vec<(u64, LayeredNetwork)>> {
    if every == 0 {
        return Err(Error::InvalidParameter("checkpoint interval must be positive".into()));
    }
    let step = WpamParams {
        iterations: 1,
        ..*params
    };
    step.validate()?;
    let mut current = net.clone();
    let mut out = vec![(0, current.clone())];
    for it in 1..=iterations {
        current = wpam_network(&current, &step)?;
        if it % every == 0 || it == iterations {
            out.push((it as u64, current.clone()));
        }
    }
    Ok(out)
}

/// Layered network whose one-hop neighbour distances follow `N(r) ~ r^D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractalLayeredSpec {
    pub target_dim: f64,
    pub layers: usize,
    pub nodes: usize,
    pub seed: u64,
    /// Path-length penalty of the distance the network is built for.
    pub lambda: f64,
    /// Largest radius the construction may use.
    pub r_max: u32,
}

impl FractalLayeredSpec {
    pub fn new(target_dim: f64, layers: usize, nodes: usize, seed: u64) -> Self {
        FractalLayeredSpec {
            target_dim,
            layers,
            nodes,
            seed,
            lambda: 1.0,
            r_max: DEFAULT_R_MAX,
        }
    }
}

const FRACTAL_MAX_SCALE: f64 = 8.0;

/// Builds the network. The `j`-th nearest of a node's `nodes` successors sits
/// at integer distance `round(s * j^(1/D))`, so cumulative neighbour counts grow
/// like `(r / s)^D`. Each node gets its own random assignment of successors to
/// ranks. `s` is the largest value up to 8 that keeps every radius within `r_max`.
pub fn fractal_layered(spec: &FractalLayeredSpec) -> Result<LayeredNetwork> {
    let FractalLayeredSpec {
        target_dim,
        layers,
        nodes,
        seed,
        lambda,
        r_max,
    } = *spec;
    if !(target_dim > 0.0) || !target_dim.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target dimension must be positive, got {target_dim}"
        )));
    }
    if layers < 2 || nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "fractal network needs >= 2 layers of >= 2 nodes (got {layers} x {nodes})"
        )));
    }
    let top = (nodes as f64).powf(1.0 / target_dim);
    let scale = FRACTAL_MAX_SCALE.min((f64::from(r_max) - 0.5) / top);
    let radii: Vec<f64> = (1..=nodes)
        .map(|j| (scale * (j as f64).powf(1.0 / target_dim)).round())
        .collect();
    let distinct: BTreeSet<u64> = radii.iter().map(|&r| r as u64).collect();
    if !(radii[0] - lambda > 0.0) || distinct.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "target dimension {target_dim} cannot be realised with {nodes} nodes within radius {r_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0xf4ac]));
    let weights = (0..layers - 1)
        .map(|_| {
            let mut w = Array2::zeros((nodes, nodes));
            let mut ranks: Vec<usize> = (0..nodes).collect();
            for a in 0..nodes {
                ranks.shuffle(&mut rng);
                for (b, &rank) in ranks.iter().enumerate() {
                    w[[a, b]] = 1.0 / (radii[rank] - lambda);
                }
            }
            w
        })
        .collect();
    debug_assert!(radii.iter().all(|&r| round_radius(r, r_max) as f64 == r));
    LayeredNetwork::new(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use petgraph::visit::EdgeRef;

    #[test]
    fn binomial_basics() {
        let m = binomial_measure(0.5, 6).unwrap();
        assert!(m.masses.iter().all(|&x| x == 1.0 / 64.0));
        for q in [-3.0, 0.5, 2.0] {
            assert_relative_eq!(analytic_tau(0.5, q), q - 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(analytic_tau(0.25, 0.0), -1.0, epsilon = 1e-15);
        assert_relative_eq!(analytic_tau(0.25, 2.0), -(0.625f64).log2(), epsilon = 1e-15);
        assert_relative_eq!(analytic_tau(0.25, 2.0), 0.678_071_905_112_638, epsilon = 1e-12);
        let m = binomial_measure(0.25, 12).unwrap();
        assert!((m.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(binomial_measure(1.0, 3).is_err());
    }

    #[test]
    fn analytic_identities() {
        for p in [0.1, 0.25, 0.3, 0.5, 0.77] {
            assert_relative_eq!(analytic_tau(p, 0.0), -1.0, epsilon = 1e-12);
            assert_relative_eq!(analytic_tau(p, 1.0), 0.0, epsilon = 1e-12);
            // derivative against a centred finite difference
            for q in [-2.0, 0.0, 1.5] {
                let h = 1e-5;
                let fd = (analytic_tau(p, q + h) - analytic_tau(p, q - h)) / (2.0 * h);
                assert_relative_eq!(analytic_alpha(p, q), fd, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn dyadic_profiles_are_exact_integers() {
        let m = binomial_measure(0.3, 5).unwrap();
        let profiles = m.dyadic_profiles().unwrap();
        assert_eq!(profiles.len(), 32);
        assert_eq!(profiles[0].total(), 100_000);
        assert_eq!(profiles[0].counts()[0], 243);
        assert!(binomial_measure(0.123456789, 3).unwrap().dyadic_profiles().is_err());
    }

    #[test]
    fn cantor_left_endpoint_is_exact() {
        let profiles = cantor_set_profile(6).unwrap();
        assert_eq!(profiles.len(), 64);
        assert_eq!(profiles[0].counts(), &[1, 2, 4, 8, 16, 32, 64]);
        assert!(profiles.iter().all(|p| p.total() == 64));
        assert!(cantor_set_profile(1).is_err());
    }

    #[test]
    fn ring_lattice_and_rewiring() {
        let g = ws_graph(20, 4, 0.0, 1).unwrap();
        assert_eq!(g.edge_count(), 40);
        for v in g.node_indices() {
            let mut nbrs: Vec<usize> = g.neighbors(v).map(|n| n.index()).collect();
            nbrs.sort_unstable();
            let i = v.index();
            let mut expected: Vec<usize> = [19, 18, 1, 2].iter().map(|d| (i + d) % 20).collect();
            expected.sort_unstable();
            assert_eq!(nbrs, expected);
        }
        let g = ws_graph(50, 6, 1.0, 9).unwrap();
        assert_eq!(g.node_count(), 50);
        assert_eq!(g.edge_count(), 150);
        for e in g.edge_references() {
            assert_ne!(e.source(), e.target());
        }
        let again = ws_graph(50, 6, 1.0, 9).unwrap();
        let edges = |g: &UnGraph<(), f64>| -> Vec<(usize, usize)> {
            g.edge_references().map(|e| (e.source().index(), e.target().index())).collect()
        };
        assert_eq!(edges(&g), edges(&again));
        assert!(ws_graph(4, 4, 0.1, 0).is_err());
        assert!(ws_graph(10, 3, 0.1, 0).is_err());
    }

    #[test]
    fn toy_modes() {
        let h = toy_layered(3, 32, ToyMode::Homogeneous, 0).unwrap();
        assert!(h.weights().iter().all(|w| w.iter().all(|&x| x == TOY_BASE_WEIGHT)));
        let r1 = toy_layered(3, 32, ToyMode::Random, 5).unwrap();
        let r2 = toy_layered(3, 32, ToyMode::Random, 5).unwrap();
        assert_eq!(r1, r2);
        let het = toy_layered(3, 8, ToyMode::Heterogeneous { level: 1.0 }, 5).unwrap();
        let w = &het.weights()[0];
        for a in 0..8 {
            assert!(w.row(a).iter().all(|&x| x == w[[a, 0]]));
            assert!(w[[a, 0]] >= TOY_BASE_WEIGHT / 1f64.exp() && w[[a, 0]] <= TOY_BASE_WEIGHT * 1f64.exp());
        }
        let flat = toy_layered(3, 8, ToyMode::Heterogeneous { level: 0.0 }, 5).unwrap();
        assert_eq!(flat, toy_layered(3, 8, ToyMode::Homogeneous, 0).unwrap());
    }

    #[test]
    fn wpam_cases() {
        let all_equal = Array2::from_elem((4, 4), 2.0);
        let p = WpamParams {
            delta: 0.5,
            iota: 2.0,
            iterations: 3,
        };
        assert!(wpam_iterate(&all_equal, &p).unwrap().iter().all(|&x| x == 16.0));

        let two = array![[1.0, 2.0]];
        let one_round = WpamParams {
            iterations: 1,
            ..p
        };
        assert_eq!(wpam_iterate(&two, &one_round).unwrap(), array![[0.5, 4.0]]);

        assert!(matches!(
            wpam_iterate(&array![[1.0, -1.0]], &one_round),
            Err(Error::Domain(_))
        ));
        assert!(wpam_iterate(&two, &WpamParams { delta: 1.2, ..p }).is_err());
    }

    #[test]
    fn wpam_schedule_checkpoints() {
        let net = toy_layered(3, 8, ToyMode::Random, 2).unwrap();
        let p = WpamParams::default();
        let cps = wpam_schedule(&net, &p, 5, 12).unwrap();
        let epochs: Vec<u64> = cps.iter().map(|c| c.0).collect();
        assert_eq!(epochs, vec![0, 5, 10, 12]);
        assert_eq!(cps[0].1, net);
        let direct = wpam_network(&net, &WpamParams { iterations: 10, ..p }).unwrap();
        assert_eq!(cps[2].1, direct);
        assert!(wpam_schedule(&net, &p, 0, 4).is_err());
    }

    #[test]
    fn fractal_layered_feasibility() {
        let net = fractal_layered(&FractalLayeredSpec::new(2.0, 3, 64, 1)).unwrap();
        assert_eq!(net.sizes(), &[64, 64, 64]);
        assert!(fractal_layered(&FractalLayeredSpec::new(1.0, 3, 64, 1)).is_ok());
        assert!(fractal_layered(&FractalLayeredSpec::new(0.4, 3, 64, 1)).is_err());
        assert!(fractal_layered(&FractalLayeredSpec::new(-1.0, 3, 64, 1)).is_err());
    }
}
