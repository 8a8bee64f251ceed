//! Layered weighted networks and their interaction-network view.
//!
//! A [`LayeredNetwork`] is the raw model: an ordered list of layers joined by
//! dense weight matrices. [`build_nin`] turns it into an [`InteractionNetwork`],
//! a sparse directed graph whose edge weights are distances `|w|^p` (with
//! `p = -1` by default, so strong connections become short edges).

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a node: layer number and index within that layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub layer: u32,
    pub index: u32,
}

impl NodeId {
    pub fn new(layer: usize, index: usize) -> Self {
        NodeId {
            layer: layer as u32,
            index: index as u32,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.layer, self.index)
    }
}

/// Ordered layers with an inter-layer weight matrix between each consecutive pair.
///
/// Matrix `j` has shape `sizes[j] x sizes[j + 1]`; entry `(a, b)` is the raw
/// weight from node `a` of layer `j` to node `b` of layer `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNetwork {
    sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    labels: Option<Vec<String>>,
}

impl LayeredNetwork {
    pub fn new(weights: Vec<Array2<f64>>) -> Result<Self> {
        let mut sizes = Vec::with_capacity(weights.len() + 1);
        if let Some(first) = weights.first() {
            sizes.push(first.nrows());
        }
        sizes.extend(weights.iter().map(|w| w.ncols()));
        Self::with_sizes(sizes, weights, None)
    }

    /// Builds a network from explicit layer sizes, checking every shape.
    pub fn with_sizes(
        sizes: Vec<usize>,
        weights: Vec<Array2<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Structural(format!(
                "a layered network needs at least 2 layers, got {}",
                sizes.len()
            )));
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Structural(format!("layer {j} is empty")));
        }
        if weights.len() != sizes.len() - 1 {
            return Err(Error::Structural(format!(
                "{} layers need {} weight matrices, got {}",
                sizes.len(),
                sizes.len() - 1,
                weights.len()
            )));
        }
        for (j, w) in weights.iter().enumerate() {
            if w.nrows() != sizes[j] || w.ncols() != sizes[j + 1] {
                return Err(Error::Structural(format!(
                    "matrix {j} has shape {}x{}, expected {}x{}",
                    w.nrows(),
                    w.ncols(),
                    sizes[j],
                    sizes[j + 1]
                )));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != sizes.len() {
                return Err(Error::Structural(format!(
                    "{} labels for {} layers",
                    labels.len(),
                    sizes.len()
                )));
            }
        }
        Ok(LayeredNetwork {
            sizes,
            weights,
            labels,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.sizes.len() {
            return Err(Error::Structural(format!(
                "{} labels for {} layers",
                labels.len(),
                self.sizes.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Applies `f` to every weight matrix, keeping the layer structure.
    pub fn map_matrices<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&Array2<f64>) -> Result<Array2<f64>>,
    {
        let weights = self.weights.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Self::with_sizes(self.sizes.clone(), weights, self.labels.clone())
    }
}

/// Parameters of the weight-to-distance transform `omega = |w|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeTransformParams {
    pub exponent: f64,
    /// Entries with `|w|` below this floor produce no edge.
    pub epsilon_w: f64,
}

impl Default for EdgeTransformParams {
    fn default() -> Self {
        EdgeTransformParams {
            exponent: -1.0,
            epsilon_w: 1e-12,
        }
    }
}

impl EdgeTransformParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_w >= 0.0) || !self.epsilon_w.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon_w must be a finite non-negative number, got {}",
                self.epsilon_w
            )));
        }
        if self.exponent == 0.0 || !self.exponent.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "edge exponent must be finite and nonzero, got {}",
                self.exponent
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub source: u32,
    pub target: u32,
    pub omega: f64,
}

/// Edges from one layer to another, sorted by `(source, target)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBlock {
    from_layer: usize,
    to_layer: usize,
    edges: Vec<WeightedEdge>,
    // offsets[i]..offsets[i + 1] are the out-edges of source i
    offsets: Vec<usize>,
}

impl EdgeBlock {
    pub fn new(from_layer: usize, to_layer: usize, mut edges: Vec<WeightedEdge>) -> Self {
        edges.sort_by(|a, b| (a.source, a.target).cmp(&(b.source, b.target)));
        let sources = edges.last().map_or(0, |e| e.source as usize + 1);
        let mut offsets = vec![0usize; sources + 1];
        for e in &edges {
            offsets[e.source as usize + 1] += 1;
        }
        for i in 0..sources {
            offsets[i + 1] += offsets[i];
        }
        EdgeBlock {
            from_layer,
            to_layer,
            edges,
            offsets,
        }
    }

    pub fn from_layer(&self) -> usize {
        self.from_layer
    }

    pub fn to_layer(&self) -> usize {
        self.to_layer
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn out_edges(&self, source: usize) -> &[WeightedEdge] {
        if source + 1 >= self.offsets.len() {
            return &[];
        }
        &self.edges[self.offsets[source]..self.offsets[source + 1]]
    }
}

/// Directed layered graph of positive, finite edge distances.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionNetwork {
    sizes: Vec<usize>,
    blocks: Vec<EdgeBlock>,
    epoch: Option<u64>,
    // original layer indices of every node when this network is a sample
    origin: Option<Vec<Vec<usize>>>,
}

impl InteractionNetwork {
    /// Builds a network and rejects it if any invariant is violated.
    pub fn new(sizes: Vec<usize>, blocks: Vec<EdgeBlock>) -> Result<Self> {
        let nin = Self::from_parts_unchecked(sizes, blocks);
        let report = validate_nin(&nin);
        if report.is_empty() {
            Ok(nin)
        } else {
            Err(Error::Structural(
                report
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// Assembles a network without checking it. Use [`validate_nin`] to inspect the result.
    pub fn from_parts_unchecked(sizes: Vec<usize>, blocks: Vec<EdgeBlock>) -> Self {
        InteractionNetwork {
            sizes,
            blocks,
            epoch: None,
            origin: None,
        }
    }

    pub fn with_epoch(mut self, epoch: Option<u64>) -> Self {
        self.epoch = epoch;
        self
    }

    pub(crate) fn with_origin(mut self, origin: Vec<Vec<usize>>) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len()
    }

    pub fn node_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn edge_count(&self) -> usize {
        self.blocks.iter().map(|b| b.edges.len()).sum()
    }

    pub fn epoch(&self) -> Option<u64> {
        self.epoch
    }

    pub fn blocks(&self) -> &[EdgeBlock] {
        &self.blocks
    }

    /// Original (pre-sampling) index of a node, or its own index for unsampled networks.
    pub fn origin_index(&self, node: NodeId) -> usize {
        match &self.origin {
            Some(origin) => origin[node.layer as usize][node.index as usize],
            None => node.index as usize,
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        (node.layer as usize) < self.sizes.len()
            && (node.index as usize) < self.sizes[node.layer as usize]
    }

    /// Out-edges of `node` into the next layer.
    pub fn out_edges(&self, node: NodeId) -> &[WeightedEdge] {
        match self.blocks.get(node.layer as usize) {
            Some(b) if b.from_layer == node.layer as usize => b.out_edges(node.index as usize),
            _ => &[],
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(l, &n)| (0..n).map(move |i| NodeId::new(l, i)))
    }
}

/// One violated invariant of an [`InteractionNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveWeight { layer: usize, edge: WeightedEdge },
    NonFiniteWeight { layer: usize, edge: WeightedEdge },
    NonAdjacentLayers { from_layer: usize, to_layer: usize },
    IndexOutOfRange { layer: usize, index: u32 },
    TooFewLayers(usize),
    EmptyLayer(usize),
    MisplacedBlock { position: usize, from_layer: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveWeight { layer, edge } => write!(
                f,
                "edge {}->{} from layer {layer} has non-positive weight {}",
                edge.source, edge.target, edge.omega
            ),
            Violation::NonFiniteWeight { layer, edge } => write!(
                f,
                "edge {}->{} from layer {layer} has non-finite weight {}",
                edge.source, edge.target, edge.omega
            ),
            Violation::NonAdjacentLayers { from_layer, to_layer } => write!(
                f,
                "edge block connects layer {from_layer} to non-adjacent layer {to_layer}"
            ),
            Violation::IndexOutOfRange { layer, index } => {
                write!(f, "node index {index} out of range for layer {layer}")
            }
            Violation::TooFewLayers(n) => write!(f, "network has {n} layers, need at least 2"),
            Violation::EmptyLayer(l) => write!(f, "layer {l} is empty"),
            Violation::MisplacedBlock {
                position,
                from_layer,
            } => write!(
                f,
                "edge block at position {position} starts at layer {from_layer}"
            ),
        }
    }
}

/// Lists every violated invariant; an empty report means the network is well formed.
pub fn validate_nin(nin: &InteractionNetwork) -> Vec<Violation> {
    let mut report = Vec::new();
    if nin.sizes.len() < 2 {
        report.push(Violation::TooFewLayers(nin.sizes.len()));
    }
    for (l, &n) in nin.sizes.iter().enumerate() {
        if n == 0 {
            report.push(Violation::EmptyLayer(l));
        }
    }
    let size_of = |l: usize| nin.sizes.get(l).copied().unwrap_or(0);
    for (position, block) in nin.blocks.iter().enumerate() {
        if block.to_layer != block.from_layer + 1 {
            report.push(Violation::NonAdjacentLayers {
                from_layer: block.from_layer,
                to_layer: block.to_layer,
            });
        } else if block.from_layer != position {
            report.push(Violation::MisplacedBlock {
                position,
                from_layer: block.from_layer,
            });
        }
        for edge in &block.edges {
            if edge.source as usize >= size_of(block.from_layer) {
                report.push(Violation::IndexOutOfRange {
                    layer: block.from_layer,
                    index: edge.source,
                });
            }
            if edge.target as usize >= size_of(block.to_layer) {
                report.push(Violation::IndexOutOfRange {
                    layer: block.to_layer,
                    index: edge.target,
                });
            }
            if !edge.omega.is_finite() {
                report.push(Violation::NonFiniteWeight {
                    layer: block.from_layer,
                    edge: *edge,
                });
            } else if edge.omega <= 0.0 {
                report.push(Violation::NonPositiveWeight {
                    layer: block.from_layer,
                    edge: *edge,
                });
            }
        }
    }
    report
}

/// Converts raw weights into edge distances `|w|^p`, dropping entries below `epsilon_w`.
pub fn build_nin(net: &LayeredNetwork, params: &EdgeTransformParams) -> Result<InteractionNetwork> {
    params.validate()?;
    let mut blocks = Vec::with_capacity(net.weights.len());
    for (j, w) in net.weights.iter().enumerate() {
        let mut edges = Vec::new();
        for ((a, b), &value) in w.indexed_iter() {
            if !value.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite weight {value} at matrix {j}, entry ({a}, {b})"
                )));
            }
            let magnitude = value.abs();
            if magnitude < params.epsilon_w || magnitude == 0.0 {
                continue;
            }
            let omega = magnitude.powf(params.exponent);
            if !omega.is_finite() || omega <= 0.0 {
                return Err(Error::Data(format!(
                    "weight {value} at matrix {j}, entry ({a}, {b}) maps to unusable distance {omega}"
                )));
            }
            edges.push(WeightedEdge {
                source: a as u32,
                target: b as u32,
                omega,
            });
        }
        blocks.push(EdgeBlock::new(j, j + 1, edges));
    }
    InteractionNetwork::new(net.sizes.clone(), blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn single(w: f64) -> LayeredNetwork {
        LayeredNetwork::new(vec![array![[w]]]).unwrap()
    }

    #[test]
    fn inverse_magnitude_transform() {
        let p = EdgeTransformParams::default();
        let nin = build_nin(&single(0.5), &p).unwrap();
        assert_eq!(nin.blocks()[0].edges()[0].omega, 2.0);
        let nin = build_nin(&single(-0.25), &p).unwrap();
        assert_eq!(nin.blocks()[0].edges()[0].omega, 4.0);
    }

    #[test]
    fn entries_below_floor_are_absent() {
        let nin = build_nin(&single(1e-15), &EdgeTransformParams::default()).unwrap();
        assert_eq!(nin.edge_count(), 0);
        assert_eq!(nin.sizes(), &[1, 1]);
    }

    #[test]
    fn exact_zero_never_becomes_an_edge() {
        let p = EdgeTransformParams {
            exponent: -1.0,
            epsilon_w: 0.0,
        };
        let nin = build_nin(&single(0.0), &p).unwrap();
        assert_eq!(nin.edge_count(), 0);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        let err = LayeredNetwork::with_sizes(vec![2, 3], vec![Array2::zeros((3, 2))], None);
        assert!(matches!(err, Err(Error::Structural(_))));
        assert!(matches!(LayeredNetwork::new(vec![]), Err(Error::Structural(_))));
        let err = build_nin(&single(f64::NAN), &EdgeTransformParams::default());
        assert!(matches!(err, Err(Error::Data(_))));
        let bad = EdgeTransformParams {
            exponent: 0.0,
            epsilon_w: 1e-12,
        };
        assert!(build_nin(&single(1.0), &bad).is_err());
    }

    #[test]
    fn validation_reports() {
        let net = LayeredNetwork::new(vec![
            array![[1.0, 2.0], [0.5, 0.25]],
            array![[1.0], [4.0]],
        ])
        .unwrap();
        let nin = build_nin(&net, &EdgeTransformParams::default()).unwrap();
        assert!(validate_nin(&nin).is_empty());

        let zero = InteractionNetwork::from_parts_unchecked(
            vec![1, 1],
            vec![EdgeBlock::new(
                0,
                1,
                vec![WeightedEdge {
                    source: 0,
                    target: 0,
                    omega: 0.0,
                }],
            )],
        );
        let report = validate_nin(&zero);
        assert!(matches!(report[..], [Violation::NonPositiveWeight { .. }]));

        let skip = InteractionNetwork::from_parts_unchecked(
            vec![1, 1, 1],
            vec![EdgeBlock::new(
                0,
                2,
                vec![WeightedEdge {
                    source: 0,
                    target: 0,
                    omega: 1.0,
                }],
            )],
        );
        let report = validate_nin(&skip);
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::NonAdjacentLayers { from_layer: 0, to_layer: 2 })));
    }

    fn matrix_strategy() -> impl Strategy<Value = Array2<f64>> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(
                prop_oneof![-10.0f64..-1e-3, 1e-3f64..10.0],
                r * c,
            )
            .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn scale_covariance(w in matrix_strategy(), c in 0.1f64..10.0) {
            let p = EdgeTransformParams::default();
            let a = build_nin(&LayeredNetwork::new(vec![w.clone()]).unwrap(), &p).unwrap();
            let b = build_nin(&LayeredNetwork::new(vec![w.mapv(|x| x * c)]).unwrap(), &p).unwrap();
            prop_assert_eq!(a.edge_count(), b.edge_count());
            for (ea, eb) in a.blocks()[0].edges().iter().zip(b.blocks()[0].edges()) {
                let expected = ea.omega * c.powf(p.exponent);
                prop_assert!((eb.omega - expected).abs() <= 1e-9 * expected);
            }
        }

        #[test]
        fn larger_magnitude_means_shorter_edge(w in matrix_strategy()) {
            let nin = build_nin(&LayeredNetwork::new(vec![w.clone()]).unwrap(), &EdgeTransformParams::default()).unwrap();
            let edges = nin.blocks()[0].edges();
            prop_assert_eq!(edges.len(), w.len());
            for a in edges {
                for b in edges {
                    let wa = w[[a.source as usize, a.target as usize]].abs();
                    let wb = w[[b.source as usize, b.target as usize]].abs();
                    if wa > wb {
                        prop_assert!(a.omega < b.omega);
                    }
                }
            }
        }
    }
}
