//! Shared oracles, generators and property checks for the integration suites.
#![allow(dead_code)]

use std::path::Path;

use mlergm::io::{format_weighted_edgelist, parse_raw_edgelist};
use mlergm::network::dyad;
use mlergm::stats::{StatKind, DEFAULT_DECAY};
use mlergm::{
    decompose, eval_statistics, recompose, simulate_layer, simulate_stack, BinaryLayer, LayerParams, ModelSpec,
    NodeAttributes, SimControl, StatisticDescriptor, WeightedNetwork,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const GROUP: &str = "group";

/// All five statistic kinds with the default decay.
pub fn full_spec() -> ModelSpec {
    ModelSpec::new(vec![
        StatisticDescriptor::edges(),
        StatisticDescriptor::gwdegree(DEFAULT_DECAY),
        StatisticDescriptor::gwesp(DEFAULT_DECAY),
        StatisticDescriptor::gwnsp(DEFAULT_DECAY),
        StatisticDescriptor::nodematch(GROUP),
    ])
    .unwrap()
}

pub fn edges_gwesp() -> ModelSpec {
    ModelSpec::new(vec![StatisticDescriptor::edges(), StatisticDescriptor::gwesp(DEFAULT_DECAY)]).unwrap()
}

pub fn attrs_from_codes(codes: &[u32]) -> NodeAttributes {
    let mut attrs = NodeAttributes::new(codes.len());
    attrs
        .insert(GROUP, codes.iter().map(|c| format!("g{c}")).collect())
        .unwrap();
    attrs
}

// ---------------------------------------------------------------------------
// Naive statistics: direct definitions over a dense boolean adjacency matrix,
// sharing no code with the library's incremental engine.

pub struct Dense {
    pub n: usize,
    pub adj: Vec<Vec<bool>>,
}

impl Dense {
    pub fn from_layer(layer: &BinaryLayer) -> Self {
        let n = layer.n_nodes();
        let mut adj = vec![vec![false; n]; n];
        for &(i, j) in layer.edges() {
            adj[i][j] = true;
            adj[j][i] = true;
        }
        Dense { n, adj }
    }

    pub fn to_layer(&self) -> BinaryLayer {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.adj[i][j] {
                    edges.push((i, j));
                }
            }
        }
        BinaryLayer::from_edges(self.n, edges).unwrap()
    }

    fn degree(&self, i: usize) -> u32 {
        self.adj[i].iter().filter(|&&b| b).count() as u32
    }

    fn shared_partners(&self, i: usize, j: usize) -> u32 {
        (0..self.n).filter(|&k| k != i && k != j && self.adj[i][k] && self.adj[j][k]).count() as u32
    }
}

/// `e^a (1 - (1 - e^-a)^d)`, evaluated literally.
pub fn naive_g(d: u32, alpha: f64) -> f64 {
    alpha.exp() * (1.0 - (1.0 - (-alpha).exp()).powi(d as i32))
}

pub fn naive_statistics(layer: &BinaryLayer, spec: &ModelSpec, attrs: &NodeAttributes) -> Vec<f64> {
    let g = Dense::from_layer(layer);
    let n = g.n;
    spec.terms()
        .iter()
        .map(|t| {
            let alpha = t.decay_or_default();
            let mut total = 0.0;
            match t.kind {
                StatKind::Edges => {
                    for i in 0..n {
                        for j in i + 1..n {
                            if g.adj[i][j] {
                                total += 1.0;
                            }
                        }
                    }
                }
                StatKind::NodeMatch => {
                    let values = attrs.get(t.attribute.as_deref().unwrap()).unwrap();
                    for i in 0..n {
                        for j in i + 1..n {
                            if g.adj[i][j] && values[i] == values[j] {
                                total += 1.0;
                            }
                        }
                    }
                }
                StatKind::GwDegree => {
                    for i in 0..n {
                        total += naive_g(g.degree(i), alpha);
                    }
                }
                StatKind::Gwesp | StatKind::Gwnsp => {
                    let want_edge = t.kind == StatKind::Gwesp;
                    for i in 0..n {
                        for j in i + 1..n {
                            if g.adj[i][j] == want_edge {
                                total += naive_g(g.shared_partners(i, j), alpha);
                            }
                        }
                    }
                }
            }
            total
        })
        .collect()
}

/// Brute-force change statistics: full re-evaluation with the dyad on and off.
pub fn naive_change(layer: &BinaryLayer, i: usize, j: usize, spec: &ModelSpec, attrs: &NodeAttributes) -> Vec<f64> {
    let mut g = Dense::from_layer(layer);
    g.adj[i][j] = true;
    g.adj[j][i] = true;
    let plus = naive_statistics(&g.to_layer(), spec, attrs);
    g.adj[i][j] = false;
    g.adj[j][i] = false;
    let minus = naive_statistics(&g.to_layer(), spec, attrs);
    plus.iter().zip(&minus).map(|(a, b)| a - b).collect()
}

// ---------------------------------------------------------------------------
// Generators.

pub fn layer_from_bits(n: usize, bits: &[bool]) -> BinaryLayer {
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[k] {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    BinaryLayer::from_edges(n, edges).unwrap()
}

/// Random layer on `2..=max_n` nodes with two-valued node attribute codes.
pub fn arb_layer(max_n: usize) -> impl Strategy<Value = (BinaryLayer, Vec<u32>)> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
            prop::collection::vec(0u32..3, n),
        )
            .prop_map(move |(bits, codes)| (layer_from_bits(n, &bits), codes))
    })
}

/// Random weighted network with weights in `0..=max_w`.
pub fn arb_weighted(max_n: usize, max_w: u8) -> impl Strategy<Value = WeightedNetwork> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(0..=max_w, n * n.saturating_sub(1) / 2).prop_map(move |ws| {
            let mut y = WeightedNetwork::empty(n);
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    y.set_weight(i, j, ws[k]).unwrap();
                    k += 1;
                }
            }
            y
        })
    })
}

pub fn arb_permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<usize>>()).prop_shuffle()
}

// ---------------------------------------------------------------------------
// Property checks, shared by the property suite and the acceptance gate.

pub type PropResult = Result<(), TestCaseError>;

pub fn check_change_oracle(layer: &BinaryLayer, codes: &[u32]) -> PropResult {
    let spec = full_spec();
    let attrs = attrs_from_codes(codes);
    let model = spec.bind(layer.n_nodes(), &attrs).unwrap();
    let n = layer.n_nodes();
    for i in 0..n {
        for j in i + 1..n {
            let base = if layer.contains(i, j) {
                BinaryLayer::from_edges(n, layer.edges().iter().copied().filter(|&e| e != (i, j))).unwrap()
            } else {
                layer.clone()
            };
            let fast = model.change(&base, i, j).unwrap();
            let slow = naive_change(&base, i, j, &spec, &attrs);
            prop_assert_eq!(&fast, &slow, "dyad ({}, {})", i, j);
        }
    }
    Ok(())
}

pub fn check_nesting(y: &WeightedNetwork, extra_layers: usize) -> PropResult {
    let w = y.max_weight() as usize + extra_layers;
    let w = w.max(1);
    let stack = decompose(y, w).unwrap();
    let counts = stack.edge_counts();
    for k in 1..w {
        prop_assert!(stack.layer(k).is_subgraph_of(stack.layer(k - 1)));
        prop_assert!(counts[k] <= counts[k - 1]);
    }
    let dyads = stack.dyad_counts();
    let n = y.n_nodes();
    prop_assert_eq!(dyads[0], n * n.saturating_sub(1) / 2);
    for k in 1..w {
        prop_assert_eq!(dyads[k], counts[k - 1]);
    }
    Ok(())
}

pub fn check_recompose_identity(y: &WeightedNetwork, extra_layers: usize) -> PropResult {
    let w = (y.max_weight() as usize + extra_layers).max(1);
    let back = recompose(&decompose(y, w).unwrap()).unwrap();
    prop_assert_eq!(&back, y);
    Ok(())
}

pub fn check_structural_zeros(lower: &BinaryLayer, phi: &[f64], seed: u64) -> PropResult {
    let spec = edges_gwesp();
    let ctrl = SimControl {
        steps_per_dyad: 5,
        seed,
        ..SimControl::default()
    };
    let out = simulate_layer(
        lower,
        &LayerParams::new(phi.to_vec()).unwrap(),
        &spec,
        &NodeAttributes::new(lower.n_nodes()),
        &ctrl,
    )
    .unwrap();
    prop_assert!(out.is_subgraph_of(lower));
    for i in 0..lower.n_nodes() {
        for j in i + 1..lower.n_nodes() {
            if !lower.contains(i, j) {
                prop_assert!(!out.contains(i, j));
            }
        }
    }
    Ok(())
}

pub fn check_permutation_invariance(layer: &BinaryLayer, codes: &[u32], perm: &[usize]) -> PropResult {
    let spec = full_spec();
    let attrs = attrs_from_codes(codes);
    let before = eval_statistics(layer, &spec, &attrs).unwrap();
    let after = eval_statistics(&layer.permuted(perm).unwrap(), &spec, &attrs.permuted(perm).unwrap()).unwrap();
    prop_assert_eq!(before, after);
    Ok(())
}

pub fn check_disjoint_union(a: &BinaryLayer, ca: &[u32], b: &BinaryLayer, cb: &[u32]) -> PropResult {
    let spec = full_spec();
    let (na, nb) = (a.n_nodes(), b.n_nodes());
    let union = BinaryLayer::from_edges(
        na + nb,
        a.edges().iter().copied().chain(b.edges().iter().map(|&(i, j)| (i + na, j + na))),
    )
    .unwrap();
    let codes: Vec<u32> = ca.iter().chain(cb).copied().collect();
    let su = eval_statistics(&union, &spec, &attrs_from_codes(&codes)).unwrap();
    let sa = eval_statistics(a, &spec, &attrs_from_codes(ca)).unwrap();
    let sb = eval_statistics(b, &spec, &attrs_from_codes(cb)).unwrap();
    for k in 0..spec.dim() {
        // Cross-component non-edges have no shared partners and contribute g_0 = 0,
        // so every statistic is additive over components.
        prop_assert_eq!(su[k], sa[k] + sb[k], "statistic {}", k);
    }
    Ok(())
}

pub fn check_edgelist_round_trip(y: &WeightedNetwork) -> PropResult {
    let text = format_weighted_edgelist(y);
    let back = parse_raw_edgelist(&text, Path::new("mem.csv"), None)
        .unwrap()
        .to_network(Path::new("mem.csv"))
        .unwrap();
    prop_assert_eq!(&back, y);
    prop_assert_eq!(format_weighted_edgelist(&back), text);
    Ok(())
}

pub fn check_handshake(y: &WeightedNetwork) -> PropResult {
    let total: u64 = y.weighted_degrees().iter().sum();
    let edges: u64 = y.edges().map(|(_, _, w)| w as u64).sum();
    prop_assert_eq!(total, 2 * edges);
    Ok(())
}

pub fn check_simulation_determinism(n: usize, phis: &[f64], seed: u64) -> PropResult {
    let spec = edges_gwesp();
    let params: Vec<LayerParams> = phis.chunks(2).map(|c| LayerParams::new(c.to_vec()).unwrap()).collect();
    let ctrl = SimControl {
        steps_per_dyad: 3,
        seed,
        ..SimControl::default()
    };
    let attrs = NodeAttributes::new(n);
    let a = simulate_stack(&params, &spec, &attrs, n, &ctrl).unwrap();
    let b = simulate_stack(&params, &spec, &attrs, n, &ctrl).unwrap();
    prop_assert_eq!(&a, &b);
    for w in 1..a.n_layers() {
        prop_assert!(a.layer(w).is_subgraph_of(a.layer(w - 1)));
    }
    Ok(())
}

pub fn check_gw_weight(d: u32, alpha: f64) -> PropResult {
    let g = mlergm::stats::gw_weight(d, alpha);
    let next = mlergm::stats::gw_weight(d + 1, alpha);
    prop_assert!(next >= g);
    prop_assert!(g <= alpha.exp() * (1.0 + 1e-15));
    Ok(())
}

// ---------------------------------------------------------------------------
// Named property runs with an explicit case count.

pub fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> PropResult,
) -> Result<u32, String> {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, test).map(|_| cases).map_err(|e| e.to_string())
}

pub fn dyads_of(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| dyad(i, j)))
}

// ---------------------------------------------------------------------------
// Independent Normal-Inverse-Wishart update on plain row-major vectors.

pub struct NiwOracle {
    pub mu: Vec<f64>,
    pub kappa: f64,
    pub lambda: Vec<f64>,
    pub nu: f64,
}

pub fn niw_oracle(mu0: &[f64], kappa0: f64, lambda0: &[f64], nu0: f64, phis: &[Vec<f64>]) -> NiwOracle {
    let r = mu0.len();
    let w = phis.len() as f64;
    if phis.is_empty() {
        return NiwOracle {
            mu: mu0.to_vec(),
            kappa: kappa0,
            lambda: lambda0.to_vec(),
            nu: nu0,
        };
    }
    let bar: Vec<f64> = (0..r).map(|k| phis.iter().map(|p| p[k]).sum::<f64>() / w).collect();
    let kappa1 = kappa0 + w;
    let nu1 = nu0 + w;
    let mu1: Vec<f64> = (0..r).map(|k| (kappa0 * mu0[k] + w * bar[k]) / kappa1).collect();
    let mut lambda1 = lambda0.to_vec();
    for a in 0..r {
        for b in 0..r {
            let s: f64 = phis.iter().map(|p| (p[a] - bar[a]) * (p[b] - bar[b])).sum();
            lambda1[a * r + b] += s + kappa0 * w / kappa1 * (bar[a] - mu0[a]) * (bar[b] - mu0[b]);
        }
    }
    NiwOracle {
        mu: mu1,
        kappa: kappa1,
        lambda: lambda1,
        nu: nu1,
    }
}

/// Largest entrywise difference relative to the largest magnitude in `want`.
pub fn normwise_relative_error(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}
