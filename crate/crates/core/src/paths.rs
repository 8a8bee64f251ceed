//! Bounded-horizon shortest-path distances on interaction networks.
//!
//! The distance between `i` and `j` is the smallest total edge distance over
//! forward paths plus a path-length penalty `lambda * |P|^gamma`. In a layered
//! graph every forward path from layer `l` to layer `l + m` has exactly `m`
//! edges, so the penalty is a per-offset constant and the minimisation runs
//! over edge sums alone, one layer at a time.

use std::collections::{BTreeMap, HashMap};

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net_model::{InteractionNetwork, NodeId};
use crate::seed::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceParams {
    pub lambda: f64,
    pub gamma: f64,
    /// Maximum number of layers crossed.
    pub horizon: usize,
    /// `None` means every node within the horizon is a neighbour.
    pub d_threshold: Option<f64>,
}

impl Default for DistanceParams {
    fn default() -> Self {
        DistanceParams {
            lambda: 1.0,
            gamma: 5.0,
            horizon: 1,
            d_threshold: None,
        }
    }
}

impl DistanceParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite, got {}",
                self.gamma
            )));
        }
        if let Some(t) = self.d_threshold {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "d_threshold must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Path-length penalty for a path of `edges` edges.
    pub fn length_penalty(&self, edges: usize) -> f64 {
        self.lambda * (edges as f64).powf(self.gamma)
    }

    fn admits(&self, d: f64) -> bool {
        self.d_threshold.map_or(true, |t| d <= t)
    }
}

/// Settings of the sampling estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    /// Intermediate nodes sampled per probe.
    pub budget: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// The search stops once the bracket is narrower than this fraction of its upper end.
    pub tolerance: f64,
}

impl EstimatorParams {
    pub fn new(budget: usize, seed: u64) -> Self {
        EstimatorParams {
            budget,
            seed,
            max_iterations: 32,
            tolerance: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::InvalidParameter("estimator budget must be at least 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter(
                "estimator max_iterations must be at least 1".into(),
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "estimator tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// How each estimated pair's search ended.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcomes {
    /// Every intermediate was sampled, so the estimate is exact.
    pub exhausted: u64,
    /// The bracket closed within tolerance.
    pub converged: u64,
    pub max_iterations: u64,
}

impl SearchOutcomes {
    fn merge(&mut self, other: &SearchOutcomes) {
        self.exhausted += other.exhausted;
        self.converged += other.converged;
        self.max_iterations += other.max_iterations;
    }
}

/// Distances from a set of sources to their neighbours.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistanceTable {
    rows: BTreeMap<NodeId, Vec<(NodeId, f64)>>,
    outcomes: SearchOutcomes,
}

impl DistanceTable {
    pub fn sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.rows.keys().copied()
    }

    /// `Some(0.0)` for `source == target`; `None` for pairs outside horizon or threshold.
    pub fn get(&self, source: NodeId, target: NodeId) -> Option<f64> {
        if source == target {
            return self.rows.contains_key(&source).then_some(0.0);
        }
        self.rows
            .get(&source)?
            .iter()
            .find(|(n, _)| *n == target)
            .map(|&(_, d)| d)
    }

    /// Neighbours of `source`, sorted by ascending distance.
    pub fn neighbors(&self, source: NodeId) -> &[(NodeId, f64)] {
        self.rows.get(&source).map_or(&[], Vec::as_slice)
    }

    pub fn neighbor_distances(&self, source: NodeId) -> Vec<f64> {
        self.neighbors(source).iter().map(|&(_, d)| d).collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.rows
            .iter()
            .flat_map(|(&s, row)| row.iter().map(move |&(t, d)| (s, t, d)))
    }

    pub fn pair_count(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    pub fn outcomes(&self) -> SearchOutcomes {
        self.outcomes
    }

    fn from_rows(rows: Vec<(NodeId, Vec<(NodeId, f64)>, SearchOutcomes)>) -> Self {
        let mut table = DistanceTable::default();
        for (source, mut row, outcomes) in rows {
            row.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            table.outcomes.merge(&outcomes);
            table.rows.insert(source, row);
        }
        table
    }
}

fn check_sources(nin: &InteractionNetwork, sources: &[NodeId]) -> Result<()> {
    match sources.iter().find(|s| !nin.contains(**s)) {
        Some(&s) => Err(Error::Lookup(s)),
        None => Ok(()),
    }
}

/// Smallest edge sums from `source` into each layer of its horizon, one vector per offset.
fn layer_sums<F>(
    nin: &InteractionNetwork,
    source: NodeId,
    horizon: usize,
    mut next_layer: F,
) -> Vec<Vec<f64>>
where
    F: FnMut(usize, &[f64]) -> Vec<f64>,
{
    let sizes = nin.sizes();
    let layer = source.layer as usize;
    let mut out = Vec::new();
    if layer + 1 >= sizes.len() {
        return out;
    }
    let mut sums = vec![f64::INFINITY; sizes[layer + 1]];
    for e in nin.out_edges(source) {
        let slot = &mut sums[e.target as usize];
        *slot = slot.min(e.omega);
    }
    out.push(sums);
    for offset in 2..=horizon {
        let target_layer = layer + offset;
        if target_layer >= sizes.len() {
            break;
        }
        let next = next_layer(target_layer, out.last().expect("previous layer present"));
        out.push(next);
    }
    out
}

fn collect_row(
    source: NodeId,
    per_offset: &[Vec<f64>],
    params: &DistanceParams,
) -> Vec<(NodeId, f64)> {
    let mut row = Vec::new();
    for (k, sums) in per_offset.iter().enumerate() {
        let offset = k + 1;
        let layer = source.layer as usize + offset;
        let penalty = params.length_penalty(offset);
        for (j, &s) in sums.iter().enumerate() {
            if s.is_finite() {
                let d = s + penalty;
                if params.admits(d) {
                    row.push((NodeId::new(layer, j), d));
                }
            }
        }
    }
    row
}

fn exact_row(nin: &InteractionNetwork, source: NodeId, params: &DistanceParams) -> Vec<(NodeId, f64)> {
    let sums = layer_sums(nin, source, params.horizon, |target_layer, prev| {
        let mut next = vec![f64::INFINITY; nin.sizes()[target_layer]];
        for (i, &si) in prev.iter().enumerate() {
            if !si.is_finite() {
                continue;
            }
            for e in nin.out_edges(NodeId::new(target_layer - 1, i)) {
                let cand = si + e.omega;
                let slot = &mut next[e.target as usize];
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
        next
    });
    collect_row(source, &sums, params)
}

/// Exact distances from every source to every node within the horizon.
pub fn exact_bounded_distances(
    nin: &InteractionNetwork,
    sources: &[NodeId],
    params: &DistanceParams,
) -> Result<DistanceTable> {
    params.validate()?;
    check_sources(nin, sources)?;
    let rows = sources
        .par_iter()
        .map(|&s| (s, exact_row(nin, s, params), SearchOutcomes::default()))
        .collect();
    Ok(DistanceTable::from_rows(rows))
}

fn edge_omega(nin: &InteractionNetwork, from: NodeId, target: u32) -> Option<f64> {
    let out = nin.out_edges(from);
    out.binary_search_by(|e| e.target.cmp(&target))
        .ok()
        .map(|k| out[k].omega)
}

/// Bisection on the distance value, fed by random probes over the intermediate layer.
///
/// Each probe draws `budget` intermediates without replacement and evaluates the
/// best path through them; the best value seen so far is kept. The bracket
/// `[low, high]` narrows around that running best. Returns the best value found
/// (an achievable path sum, so never below the true minimum).
fn search_pair(
    prev: &[f64],
    omega_into: &[Option<f64>],
    est: &EstimatorParams,
    rng: &mut ChaCha8Rng,
    outcomes: &mut SearchOutcomes,
) -> f64 {
    let n = prev.len();
    let through = |i: usize| match omega_into[i] {
        Some(w) if prev[i].is_finite() => prev[i] + w,
        _ => f64::INFINITY,
    };
    if est.budget >= n {
        outcomes.exhausted += 1;
        return (0..n).map(through).fold(f64::INFINITY, f64::min);
    }
    let mut seen = vec![false; n];
    let mut unseen = n;
    let mut best = f64::INFINITY;
    let (mut low, mut high) = (0.0f64, f64::INFINITY);
    for _ in 0..est.max_iterations {
        let mut probe = f64::INFINITY;
        for i in index::sample(rng, n, est.budget).into_iter() {
            if !seen[i] {
                seen[i] = true;
                unseen -= 1;
            }
            probe = probe.min(through(i));
        }
        best = best.min(probe);
        if unseen == 0 {
            outcomes.exhausted += 1;
            return best;
        }
        if !best.is_finite() {
            continue;
        }
        let mid = if high.is_finite() { 0.5 * (low + high) } else { best };
        if best <= mid {
            high = mid;
        } else {
            low = mid;
        }
        if high - low <= est.tolerance * high {
            outcomes.converged += 1;
            return best;
        }
    }
    outcomes.max_iterations += 1;
    best
}

fn estimated_row(
    nin: &InteractionNetwork,
    source: NodeId,
    params: &DistanceParams,
    est: &EstimatorParams,
) -> (Vec<(NodeId, f64)>, SearchOutcomes) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
        est.seed,
        &[u64::from(source.layer), u64::from(source.index)],
    ));
    let mut outcomes = SearchOutcomes::default();
    let sums = layer_sums(nin, source, params.horizon, |target_layer, prev| {
        let mid_layer = target_layer - 1;
        (0..nin.sizes()[target_layer])
            .map(|y| {
                let omega_into: Vec<Option<f64>> = (0..prev.len())
                    .map(|i| edge_omega(nin, NodeId::new(mid_layer, i), y as u32))
                    .collect();
                search_pair(prev, &omega_into, est, &mut rng, &mut outcomes)
            })
            .collect()
    });
    (collect_row(source, &sums, params), outcomes)
}

/// Sampling estimate of [`exact_bounded_distances`]; deterministic for a fixed seed.
///
/// One-edge distances are exact. For longer paths each target's best
/// predecessor is searched by repeated sampled probes. When the budget covers
/// a whole intermediate layer the result is bitwise identical to the exact one.
pub fn estimated_distances(
    nin: &InteractionNetwork,
    sources: &[NodeId],
    params: &DistanceParams,
    est: &EstimatorParams,
) -> Result<DistanceTable> {
    params.validate()?;
    est.validate()?;
    check_sources(nin, sources)?;
    let rows = sources
        .par_iter()
        .map(|&s| {
            let (row, outcomes) = estimated_row(nin, s, params, est);
            (s, row, outcomes)
        })
        .collect();
    Ok(DistanceTable::from_rows(rows))
}

/// Ascending distances from `node` to its neighbour set.
pub fn neighbor_distances(
    nin: &InteractionNetwork,
    node: NodeId,
    params: &DistanceParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    check_sources(nin, &[node])?;
    let mut d: Vec<f64> = exact_row(nin, node, params).into_iter().map(|(_, d)| d).collect();
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Single-source shortest paths on an undirected weighted graph, without any path-length penalty.
pub fn generic_distances(
    graph: &UnGraph<(), f64>,
    source: NodeIndex,
) -> Result<HashMap<NodeIndex, f64>> {
    if graph.node_weight(source).is_none() {
        return Err(Error::Data(format!(
            "source {} is not in the graph",
            source.index()
        )));
    }
    if let Some(w) = graph.edge_weights().find(|w| !(**w >= 0.0)) {
        return Err(Error::Data(format!("edge weight {w} is negative or NaN")));
    }
    Ok(dijkstra(graph, source, None, |e| *e.weight()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::{EdgeBlock, WeightedEdge};

    fn edge(source: u32, target: u32, omega: f64) -> WeightedEdge {
        WeightedEdge {
            source,
            target,
            omega,
        }
    }

    fn chain() -> InteractionNetwork {
        InteractionNetwork::new(
            vec![1, 1, 1],
            vec![
                EdgeBlock::new(0, 1, vec![edge(0, 0, 2.0)]),
                EdgeBlock::new(1, 2, vec![edge(0, 0, 3.0)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn chain_distances() {
        let params = DistanceParams {
            horizon: 2,
            ..DistanceParams::default()
        };
        let a = NodeId::new(0, 0);
        let t = exact_bounded_distances(&chain(), &[a], &params).unwrap();
        assert_eq!(t.get(a, NodeId::new(1, 0)), Some(3.0));
        assert_eq!(t.get(a, NodeId::new(2, 0)), Some(37.0));
        assert_eq!(t.get(a, a), Some(0.0));

        let short = exact_bounded_distances(&chain(), &[a], &DistanceParams::default()).unwrap();
        assert_eq!(short.get(a, NodeId::new(2, 0)), None);
    }

    #[test]
    fn diamond_takes_cheaper_branch() {
        let nin = InteractionNetwork::new(
            vec![1, 2, 1],
            vec![
                EdgeBlock::new(0, 1, vec![edge(0, 0, 1.0), edge(0, 1, 5.0)]),
                EdgeBlock::new(1, 2, vec![edge(0, 0, 1.0), edge(1, 0, 5.0)]),
            ],
        )
        .unwrap();
        let params = DistanceParams {
            lambda: 0.0,
            horizon: 2,
            ..DistanceParams::default()
        };
        let a = NodeId::new(0, 0);
        let t = exact_bounded_distances(&nin, &[a], &params).unwrap();
        assert_eq!(t.get(a, NodeId::new(2, 0)), Some(2.0));
    }

    #[test]
    fn neighbor_lists() {
        let nin = InteractionNetwork::new(
            vec![1, 2],
            vec![EdgeBlock::new(0, 1, vec![edge(0, 0, 4.0), edge(0, 1, 2.0)])],
        )
        .unwrap();
        let a = NodeId::new(0, 0);
        let params = DistanceParams::default();
        assert_eq!(neighbor_distances(&nin, a, &params).unwrap(), vec![3.0, 5.0]);
        let bounded = DistanceParams {
            d_threshold: Some(4.0),
            ..params
        };
        assert_eq!(neighbor_distances(&nin, a, &bounded).unwrap(), vec![3.0]);
        assert!(neighbor_distances(&nin, NodeId::new(1, 0), &params).unwrap().is_empty());
        assert!(matches!(
            neighbor_distances(&nin, NodeId::new(3, 0), &params),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn estimator_budget_covering_layer_is_exact() {
        let nin = InteractionNetwork::new(
            vec![1, 3, 2],
            vec![
                EdgeBlock::new(0, 1, vec![edge(0, 0, 1.5), edge(0, 1, 0.5), edge(0, 2, 2.5)]),
                EdgeBlock::new(
                    1,
                    2,
                    vec![edge(0, 0, 1.0), edge(1, 0, 4.0), edge(1, 1, 0.7), edge(2, 1, 0.1)],
                ),
            ],
        )
        .unwrap();
        let params = DistanceParams {
            horizon: 2,
            ..DistanceParams::default()
        };
        let sources: Vec<NodeId> = nin.nodes().collect();
        let exact = exact_bounded_distances(&nin, &sources, &params).unwrap();
        let est = estimated_distances(&nin, &sources, &params, &EstimatorParams::new(3, 1)).unwrap();
        assert_eq!(exact.rows, est.rows);
        let again = estimated_distances(&nin, &sources, &params, &EstimatorParams::new(1, 1)).unwrap();
        let twice = estimated_distances(&nin, &sources, &params, &EstimatorParams::new(1, 1)).unwrap();
        assert_eq!(again, twice);
    }

    #[test]
    fn generic_paths() {
        let tri = UnGraph::<(), f64>::from_edges([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let d = generic_distances(&tri, NodeIndex::new(0)).unwrap();
        assert_eq!(d[&NodeIndex::new(1)], 1.0);
        assert_eq!(d[&NodeIndex::new(2)], 1.0);

        let mut path = UnGraph::<(), f64>::from_edges([(0, 1, 1.0), (1, 2, 1.0)]);
        let lonely = path.add_node(());
        let d = generic_distances(&path, NodeIndex::new(0)).unwrap();
        assert_eq!(d[&NodeIndex::new(2)], 2.0);
        assert!(!d.contains_key(&lonely));

        let neg = UnGraph::<(), f64>::from_edges([(0, 1, -1.0)]);
        assert!(matches!(generic_distances(&neg, NodeIndex::new(0)), Err(Error::Data(_))));
    }
}
