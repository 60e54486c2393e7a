//! Weighted networks, binary layers and the nested multilayer representation.
//!
//! A weighted network with ordinal edge values `0..=W` is equivalent to a
//! stack of `W` binary layers where layer `w` holds every dyad of weight at
//! least `w`. Layers are therefore nested: each layer's edge set is contained
//! in the one below it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Largest supported ordinal weight (and therefore layer count).
pub const MAX_WEIGHT: usize = 64;

/// Undirected network with small non-negative integer edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedNetwork {
    n: usize,
    weights: Vec<u8>,
}

impl WeightedNetwork {
    /// Network on `n` nodes with every weight zero.
    pub fn empty(n: usize) -> Self {
        WeightedNetwork {
            n,
            weights: vec![0; n * n],
        }
    }

    /// Builds a network from a full `n x n` matrix, checking symmetry, the zero
    /// diagonal and the weight bound.
    pub fn from_matrix(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut net = WeightedNetwork::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &w) in row.iter().enumerate() {
                if rows[j][i] != w {
                    return Err(Error::NotSymmetric { i, j });
                }
                if i == j && w != 0 {
                    return Err(Error::SelfLoop(i));
                }
                if w as usize > MAX_WEIGHT {
                    return Err(Error::WeightExceedsLayers {
                        max: w,
                        layers: MAX_WEIGHT,
                    });
                }
                net.weights[i * n + j] = w;
            }
        }
        Ok(net)
    }

    /// Builds a network from `(i, j, weight)` triples. Later duplicates must
    /// agree with earlier ones in either orientation.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, u8)>) -> Result<Self> {
        let mut net = WeightedNetwork::empty(n);
        for (i, j, w) in edges {
            net.check_node(i)?;
            net.check_node(j)?;
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            let current = net.weight(i, j);
            if current != 0 && current != w {
                return Err(Error::Model(format!(
                    "dyad ({i}, {j}) given conflicting weights {current} and {w}"
                )));
            }
            net.set_weight(i, j, w)?;
        }
        Ok(net)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> u8 {
        self.weights[i * self.n + j]
    }

    /// Sets the weight of dyad `{i, j}` in both orientations.
    pub fn set_weight(&mut self, i: usize, j: usize, w: u8) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            if w != 0 {
                return Err(Error::SelfLoop(i));
            }
            return Ok(());
        }
        if w as usize > MAX_WEIGHT {
            return Err(Error::WeightExceedsLayers {
                max: w,
                layers: MAX_WEIGHT,
            });
        }
        self.weights[i * self.n + j] = w;
        self.weights[j * self.n + i] = w;
        Ok(())
    }

    pub fn max_weight(&self) -> u8 {
        self.weights.iter().copied().max().unwrap_or(0)
    }

    /// Non-zero dyads with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        (0..self.n).flat_map(move |i| {
            ((i + 1)..self.n).filter_map(move |j| {
                let w = self.weight(i, j);
                (w > 0).then_some((i, j, w))
            })
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges().count()
    }

    /// Sum of incident edge weights of `node`.
    pub fn weighted_degree(&self, node: usize) -> Result<u64> {
        self.check_node(node)?;
        let row = &self.weights[node * self.n..(node + 1) * self.n];
        Ok(row.iter().map(|&w| w as u64).sum())
    }

    /// Weighted degrees of all nodes in index order.
    pub fn weighted_degrees(&self) -> Vec<u64> {
        (0..self.n)
            .map(|i| {
                self.weights[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|&w| w as u64)
                    .sum()
            })
            .collect()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n {
            return Err(Error::NodeOutOfRange { node, n: self.n });
        }
        Ok(())
    }
}

/// Unordered node pair, stored with the smaller index first.
pub type Dyad = (usize, usize);

#[inline]
pub fn dyad(i: usize, j: usize) -> Dyad {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Binary undirected graph: one layer of a multilayer network.
///
/// Edges are kept sorted and deduplicated with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryLayer {
    n: usize,
    edges: Vec<Dyad>,
}

impl BinaryLayer {
    pub fn empty(n: usize) -> Self {
        BinaryLayer { n, edges: Vec::new() }
    }

    /// Complete graph; the conditioning layer below layer 1.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        BinaryLayer { n, edges }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (i, j) in edges {
            for node in [i, j] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            out.push(dyad(i, j));
        }
        out.sort_unstable();
        out.dedup();
        Ok(BinaryLayer { n, edges: out })
    }

    pub(crate) fn from_sorted_unchecked(n: usize, edges: Vec<Dyad>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        BinaryLayer { n, edges }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Dyad] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_dyads(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.binary_search(&dyad(i, j)).is_ok()
    }

    /// True when every edge of `self` is also an edge of `lower`.
    pub fn is_subgraph_of(&self, lower: &BinaryLayer) -> bool {
        self.first_missing_from(lower).is_none()
    }

    fn first_missing_from(&self, lower: &BinaryLayer) -> Option<Dyad> {
        if self.n != lower.n {
            return self.edges.first().copied();
        }
        // Both lists are sorted, so a merge walk suffices.
        let mut below = lower.edges.iter().peekable();
        for e in &self.edges {
            loop {
                match below.peek() {
                    Some(b) if *b < e => {
                        below.next();
                    }
                    Some(b) if *b == e => break,
                    _ => return Some(*e),
                }
            }
        }
        None
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        BinaryLayer::from_edges(self.n, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }
}

/// Ordered sequence of nested binary layers; index 0 holds "layer 1"
/// (the dyads with weight at least 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerStack {
    layers: Vec<BinaryLayer>,
}

impl LayerStack {
    /// Validates nesting; `layers[0]` is the lowest (densest) layer.
    pub fn new(layers: Vec<BinaryLayer>) -> Result<Self> {
        if layers.is_empty() || layers.len() > MAX_WEIGHT {
            return Err(Error::LayerCount(layers.len()));
        }
        let n = layers[0].n_nodes();
        for (w, layer) in layers.iter().enumerate() {
            if layer.n_nodes() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: layer.n_nodes(),
                });
            }
            if w > 0 {
                if let Some((i, j)) = layer.first_missing_from(&layers[w - 1]) {
                    return Err(Error::NestingViolation {
                        lower: w,
                        upper: w + 1,
                        i,
                        j,
                    });
                }
            }
        }
        Ok(LayerStack { layers })
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.layers[0].n_nodes()
    }

    pub fn layers(&self) -> &[BinaryLayer] {
        &self.layers
    }

    /// Layer `w` in 0-based indexing.
    pub fn layer(&self, w: usize) -> &BinaryLayer {
        &self.layers[w]
    }

    /// Edge counts `E_1, ..., E_W`.
    pub fn edge_counts(&self) -> Vec<usize> {
        self.layers.iter().map(BinaryLayer::n_edges).collect()
    }

    /// Number of random dyads per layer: `D_1` is every dyad, `D_{w+1} = E_w`.
    pub fn dyad_counts(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.layers.len());
        out.push(self.layers[0].n_dyads());
        out.extend(self.layers[..self.layers.len() - 1].iter().map(BinaryLayer::n_edges));
        out
    }

    /// Layer that layer `w` (0-based) is conditioned on: the complete graph
    /// for the first layer, otherwise the layer immediately below.
    pub fn conditioning_layer(&self, w: usize) -> std::borrow::Cow<'_, BinaryLayer> {
        if w == 0 {
            std::borrow::Cow::Owned(BinaryLayer::complete(self.n_nodes()))
        } else {
            std::borrow::Cow::Borrowed(&self.layers[w - 1])
        }
    }
}

/// Thresholds real-valued raw weights: the ordinal weight of a dyad is the
/// number of thresholds it reaches.
pub fn ordinalize(raw: &[Vec<f64>], thresholds: &[f64]) -> Result<WeightedNetwork> {
    check_thresholds(thresholds)?;
    let n = raw.len();
    for (i, row) in raw.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Model(format!("non-finite raw weight at ({i}, {j})")));
            }
            if raw[j][i] != v {
                return Err(Error::NotSymmetric { i, j });
            }
        }
        if row[i] != 0.0 {
            return Err(Error::SelfLoop(i));
        }
    }
    let mut net = WeightedNetwork::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = ordinal_level(raw[i][j], thresholds);
            if w > 0 {
                net.set_weight(i, j, w)?;
            }
        }
    }
    Ok(net)
}

/// Number of thresholds `t` with `value >= t`.
pub fn ordinal_level(value: f64, thresholds: &[f64]) -> u8 {
    thresholds.partition_point(|&t| value >= t) as u8
}

pub(crate) fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::BadThresholds("no thresholds given".into()));
    }
    if thresholds.len() > MAX_WEIGHT {
        return Err(Error::BadThresholds(format!(
            "{} thresholds exceed the maximum of {MAX_WEIGHT}",
            thresholds.len()
        )));
    }
    if let Some(bad) = thresholds.iter().find(|t| !t.is_finite()) {
        return Err(Error::BadThresholds(format!("non-finite threshold {bad}")));
    }
    if let Some(w) = thresholds.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::BadThresholds(format!("{} is not below {}", w[0], w[1])));
    }
    Ok(())
}

/// Thresholds at the given quantile levels of the positive raw weights
/// (linear interpolation between order statistics).
pub fn quantile_thresholds(raw: &[Vec<f64>], levels: &[f64]) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = raw
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().skip(i + 1).copied())
        .filter(|&v| v > 0.0)
        .collect();
    if values.is_empty() {
        return Err(Error::BadThresholds("no positive weights to take quantiles of".into()));
    }
    values.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(levels.len());
    for &p in levels {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadThresholds(format!("quantile level {p} outside [0, 1]")));
        }
        out.push(crate::summary::quantile_sorted(&values, p));
    }
    check_thresholds(&out)?;
    Ok(out)
}

/// Splits a weighted network into `layers` nested binary layers.
pub fn decompose(y: &WeightedNetwork, layers: usize) -> Result<LayerStack> {
    if layers == 0 || layers > MAX_WEIGHT {
        return Err(Error::LayerCount(layers));
    }
    let max = y.max_weight();
    if max as usize > layers {
        return Err(Error::WeightExceedsLayers { max, layers });
    }
    let n = y.n_nodes();
    let mut per_layer: Vec<Vec<Dyad>> = vec![Vec::new(); layers];
    for (i, j, w) in y.edges() {
        for edges in per_layer.iter_mut().take(w as usize) {
            edges.push((i, j));
        }
    }
    let layers = per_layer
        .into_iter()
        .map(|edges| BinaryLayer::from_sorted_unchecked(n, edges))
        .collect();
    LayerStack::new(layers)
}

/// Inverse of [`decompose`]: dyad weight is the number of layers holding it.
pub fn recompose(stack: &LayerStack) -> Result<WeightedNetwork> {
    // LayerStack::new already enforces nesting, but re-check so that the
    // contract does not depend on how the stack was built.
    let layers = stack.layers();
    for w in 1..layers.len() {
        if let Some((i, j)) = layers[w].first_missing_from(&layers[w - 1]) {
            return Err(Error::NestingViolation {
                lower: w,
                upper: w + 1,
                i,
                j,
            });
        }
    }
    let mut counts: BTreeMap<Dyad, u8> = BTreeMap::new();
    for layer in layers {
        for &e in layer.edges() {
            *counts.entry(e).or_default() += 1;
        }
    }
    WeightedNetwork::from_edges(stack.n_nodes(), counts.into_iter().map(|((i, j), w)| (i, j, w)))
}

/// Categorical node attributes keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeAttributes {
    n: usize,
    columns: BTreeMap<String, Vec<String>>,
}

impl NodeAttributes {
    pub fn new(n: usize) -> Self {
        NodeAttributes {
            n,
            columns: BTreeMap::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<String>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n {
            return Err(Error::AttributeLength {
                name,
                expected: self.n,
                found: values.len(),
            });
        }
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[String]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    /// Attribute values mapped to dense category codes, in first-seen order.
    pub fn codes(&self, name: &str) -> Result<Vec<u32>> {
        let values = self
            .get(name)
            .ok_or_else(|| Error::MissingAttribute(name.to_string()))?;
        let mut seen: BTreeMap<&str, u32> = BTreeMap::new();
        Ok(values
            .iter()
            .map(|v| {
                let next = seen.len() as u32;
                *seen.entry(v.as_str()).or_insert(next)
            })
            .collect())
    }

    /// Relabels nodes consistently with [`BinaryLayer::permuted`].
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        let mut out = NodeAttributes::new(self.n);
        for (name, values) in &self.columns {
            let mut moved = vec![String::new(); self.n];
            for (i, v) in values.iter().enumerate() {
                moved[perm[i]] = v.clone();
            }
            out.columns.insert(name.clone(), moved);
        }
        Ok(out)
    }
}
