//! CSV readers and writers for edge lists, node attributes and posterior draws.
//!
//! Edge lists start with optional `#key=value` directive lines (`#nodes=N`
//! declares the node count so isolates survive; `#directed=true` is
//! rejected), followed by the header `i,j,weight` and one row per dyad with
//! 0-based node ids. Absent dyads have weight zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::infer::{Draw, PosteriorSamples};
use crate::network::{dyad, BinaryLayer, NodeAttributes, WeightedNetwork, MAX_WEIGHT};

pub const EDGE_HEADER: &str = "i,j,weight";
pub const POSTERIOR_HEADER: &str = "chain,iteration,layer,param_index,value";
pub const HYPER_HEADER: &str = "chain,iteration,param,row,col,value";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Raw edge list: real weights, before ordinalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEdgeList {
    pub n_nodes: usize,
    /// `(i, j, value)` with `i < j`, deduplicated.
    pub edges: Vec<(usize, usize, f64)>,
}

impl RawEdgeList {
    /// Dense symmetric matrix with zeros for absent dyads.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n_nodes]; self.n_nodes];
        for &(i, j, v) in &self.edges {
            m[i][j] = v;
            m[j][i] = v;
        }
        m
    }

    /// Interprets the values as ordinal weights directly.
    pub fn to_network(&self, origin: &Path) -> Result<WeightedNetwork> {
        let mut net = WeightedNetwork::empty(self.n_nodes);
        for &(i, j, v) in &self.edges {
            if v.fract() != 0.0 || v < 1.0 || v > MAX_WEIGHT as f64 {
                return Err(Error::parse(
                    origin,
                    0,
                    format!("weight {v} of dyad ({i}, {j}) is not an integer in 1..={MAX_WEIGHT}"),
                ));
            }
            net.set_weight(i, j, v as u8)?;
        }
        Ok(net)
    }
}

/// Parses an edge list with real-valued weights.
pub fn parse_raw_edgelist(text: &str, origin: &Path, declared_nodes: Option<usize>) -> Result<RawEdgeList> {
    let mut declared = declared_nodes;
    let mut header_seen = false;
    let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(directive) = line.strip_prefix('#') {
            let (key, value) = directive
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .unwrap_or((directive.trim(), ""));
            match key {
                "nodes" => {
                    let n: usize = value
                        .parse()
                        .map_err(|_| Error::parse(origin, lineno, format!("invalid node count `{value}`")))?;
                    if let Some(d) = declared {
                        if d != n {
                            return Err(Error::parse(
                                origin,
                                lineno,
                                format!("file declares {n} nodes but {d} were requested"),
                            ));
                        }
                    }
                    declared = Some(n);
                }
                "directed" => {
                    if value != "false" {
                        return Err(Error::parse(origin, lineno, "directed networks are not supported"));
                    }
                }
                _ => {}
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["i", "j", "weight"] {
                return Err(Error::parse(origin, lineno, format!("expected header `{EDGE_HEADER}`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(origin, lineno, format!("expected 3 fields, found {}", fields.len())));
        }
        let node = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(origin, lineno, format!("invalid node id `{s}`")))
        };
        let (i, j) = (node(fields[0])?, node(fields[1])?);
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("invalid weight `{}`", fields[2])))?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::parse(origin, lineno, format!("weight must be positive, got {value}")));
        }
        if i == j {
            return Err(Error::parse(origin, lineno, format!("self-loop at node {i}")));
        }
        rows.push((lineno, i, j, value));
    }
    let n = match declared {
        Some(n) => n,
        None => rows.iter().map(|&(_, i, j, _)| i.max(j) + 1).max().unwrap_or(0),
    };
    let mut seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(lineno, i, j, value) in &rows {
        if i >= n || j >= n {
            return Err(Error::parse(
                origin,
                lineno,
                format!("node id {} out of range for {n} nodes", i.max(j)),
            ));
        }
        match seen.insert(dyad(i, j), value) {
            Some(prev) if prev != value => {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("dyad ({i}, {j}) repeated with conflicting weights {prev} and {value}"),
                ))
            }
            _ => {}
        }
    }
    Ok(RawEdgeList {
        n_nodes: n,
        edges: seen.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
    })
}

pub fn read_raw_edgelist(path: &Path, declared_nodes: Option<usize>) -> Result<RawEdgeList> {
    parse_raw_edgelist(&read(path)?, path, declared_nodes)
}

/// Reads an edge list with integer ordinal weights.
pub fn read_weighted_edgelist(path: &Path, declared_nodes: Option<usize>) -> Result<WeightedNetwork> {
    read_raw_edgelist(path, declared_nodes)?.to_network(path)
}

/// Canonical edge-list text: `#nodes=N`, header, rows in `(i, j)` order.
pub fn format_weighted_edgelist(y: &WeightedNetwork) -> String {
    let mut out = format!("#nodes={}\n{EDGE_HEADER}\n", y.n_nodes());
    for (i, j, w) in y.edges() {
        let _ = writeln!(out, "{i},{j},{w}");
    }
    out
}

pub fn write_weighted_edgelist(y: &WeightedNetwork, path: &Path) -> Result<()> {
    write_atomic(path, &format_weighted_edgelist(y))
}

pub const LAYER_HEADER: &str = "i,j";

/// Binary layer edge list: `#nodes=N`, header `i,j`, rows in `(i, j)` order.
pub fn format_layer(layer: &BinaryLayer) -> String {
    let mut out = format!("#nodes={}\n{LAYER_HEADER}\n", layer.n_nodes());
    for (i, j) in layer.edges() {
        let _ = writeln!(out, "{i},{j}");
    }
    out
}

pub fn parse_layer(text: &str, origin: &Path) -> Result<BinaryLayer> {
    let mut n = None;
    let mut header_seen = false;
    let mut edges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(value) = line.strip_prefix("#nodes=") {
            n = Some(parse_num::<usize>(value.trim(), origin, lineno)?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != LAYER_HEADER {
                return Err(Error::parse(origin, lineno, format!("expected header `{LAYER_HEADER}`, found `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::parse(origin, lineno, format!("expected 2 fields, found {}", fields.len())));
        }
        edges.push((lineno, parse_num::<usize>(fields[0], origin, lineno)?, parse_num::<usize>(fields[1], origin, lineno)?));
    }
    let n = n.ok_or_else(|| Error::parse(origin, 1, "missing `#nodes=N` line"))?;
    for &(lineno, i, j) in &edges {
        if i >= n || j >= n || i == j {
            return Err(Error::parse(origin, lineno, format!("invalid dyad ({i}, {j}) for {n} nodes")));
        }
    }
    BinaryLayer::from_edges(n, edges.into_iter().map(|(_, i, j)| (i, j)))
}

pub fn read_layer(path: &Path) -> Result<BinaryLayer> {
    parse_layer(&read(path)?, path)
}

pub fn write_layer(layer: &BinaryLayer, path: &Path) -> Result<()> {
    write_atomic(path, &format_layer(layer))
}

/// Parses `node,attr1,attr2,...` with one row per node.
pub fn parse_attributes(text: &str, origin: &Path, n_nodes: usize) -> Result<NodeAttributes> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(origin, 1, "empty attribute file"));
    };
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if names.first().map(String::as_str) != Some("node") || names.len() < 2 {
        return Err(Error::parse(origin, 1, "header must be `node,<attribute>,...`"));
    }
    let mut columns: Vec<Vec<Option<String>>> = vec![vec![None; n_nodes]; names.len() - 1];
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected {} fields, found {}", names.len(), fields.len()),
            ));
        }
        let node: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("invalid node id `{}`", fields[0])))?;
        if node >= n_nodes {
            return Err(Error::parse(origin, lineno, format!("node id {node} out of range for {n_nodes} nodes")));
        }
        for (col, value) in columns.iter_mut().zip(&fields[1..]) {
            if col[node].replace(value.to_string()).is_some() {
                return Err(Error::parse(origin, lineno, format!("node {node} listed twice")));
            }
        }
    }
    let mut attrs = NodeAttributes::new(n_nodes);
    for (name, col) in names[1..].iter().zip(columns) {
        let values = col
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::parse(origin, 0, format!("no `{name}` value for node {i}"))))
            .collect::<Result<Vec<_>>>()?;
        attrs.insert(name.clone(), values)?;
    }
    Ok(attrs)
}

pub fn read_attributes(path: &Path, n_nodes: usize) -> Result<NodeAttributes> {
    parse_attributes(&read(path)?, path, n_nodes)
}

/// Long-format layer parameters and hyper-parameter draws.
pub fn format_posterior(samples: &PosteriorSamples) -> (String, String) {
    let mut phi = format!("{POSTERIOR_HEADER}\n");
    let mut hyper = format!("{HYPER_HEADER}\n");
    let r = samples.dim;
    for d in &samples.draws {
        for (w, layer) in d.phis.iter().enumerate() {
            for (k, v) in layer.iter().enumerate() {
                let _ = writeln!(phi, "{},{},{},{k},{v}", d.chain, d.iteration, w + 1);
            }
        }
        for (k, v) in d.mu.iter().enumerate() {
            let _ = writeln!(hyper, "{},{},mu,{k},0,{v}", d.chain, d.iteration);
        }
        for a in 0..r {
            for b in 0..r {
                let _ = writeln!(hyper, "{},{},sigma,{a},{b},{}", d.chain, d.iteration, d.sigma[a * r + b]);
            }
        }
    }
    (phi, hyper)
}

pub fn write_posterior(samples: &PosteriorSamples, phi_path: &Path, hyper_path: &Path) -> Result<()> {
    let (phi, hyper) = format_posterior(samples);
    write_atomic(phi_path, &phi)?;
    write_atomic(hyper_path, &hyper)
}

/// Inverse of [`format_posterior`]. Acceptance rates are not stored and come back empty.
pub fn parse_posterior(phi_text: &str, hyper_text: &str, phi_origin: &Path, hyper_origin: &Path) -> Result<PosteriorSamples> {
    type Key = (usize, usize);
    let mut phis: BTreeMap<Key, BTreeMap<(usize, usize), f64>> = BTreeMap::new();
    let (mut n_layers, mut dim) = (0usize, 0usize);
    for (lineno, fields) in csv_rows(phi_text, phi_origin, POSTERIOR_HEADER, 5)? {
        let int = |s: &str| parse_num::<usize>(s, phi_origin, lineno);
        let (chain, it, layer, k) = (int(fields[0])?, int(fields[1])?, int(fields[2])?, int(fields[3])?);
        let v: f64 = parse_num(fields[4], phi_origin, lineno)?;
        if layer == 0 {
            return Err(Error::parse(phi_origin, lineno, "layers are numbered from 1"));
        }
        n_layers = n_layers.max(layer);
        dim = dim.max(k + 1);
        phis.entry((chain, it)).or_default().insert((layer - 1, k), v);
    }
    let mut hypers: BTreeMap<Key, (BTreeMap<usize, f64>, BTreeMap<(usize, usize), f64>)> = BTreeMap::new();
    for (lineno, fields) in csv_rows(hyper_text, hyper_origin, HYPER_HEADER, 6)? {
        let int = |s: &str| parse_num::<usize>(s, hyper_origin, lineno);
        let (chain, it, a, b) = (int(fields[0])?, int(fields[1])?, int(fields[3])?, int(fields[4])?);
        let v: f64 = parse_num(fields[5], hyper_origin, lineno)?;
        let entry = hypers.entry((chain, it)).or_default();
        match fields[2] {
            "mu" => {
                entry.0.insert(a, v);
            }
            "sigma" => {
                entry.1.insert((a, b), v);
            }
            other => return Err(Error::parse(hyper_origin, lineno, format!("unknown parameter `{other}`"))),
        }
    }
    let mut draws = Vec::with_capacity(phis.len());
    for ((chain, iteration), values) in phis {
        let mut layers = vec![vec![f64::NAN; dim]; n_layers];
        for ((w, k), v) in values {
            layers[w][k] = v;
        }
        if layers.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::parse(
                phi_origin,
                0,
                format!("draw (chain {chain}, iteration {iteration}) is incomplete"),
            ));
        }
        let (mu_map, sigma_map) = hypers.remove(&(chain, iteration)).ok_or_else(|| {
            Error::parse(hyper_origin, 0, format!("no hyper draw for chain {chain}, iteration {iteration}"))
        })?;
        let mu: Vec<f64> = (0..dim).map(|k| mu_map.get(&k).copied()).collect::<Option<_>>().ok_or_else(|| {
            Error::parse(hyper_origin, 0, format!("incomplete mu for chain {chain}, iteration {iteration}"))
        })?;
        let sigma: Vec<f64> = (0..dim * dim)
            .map(|idx| sigma_map.get(&(idx / dim, idx % dim)).copied())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::parse(hyper_origin, 0, format!("incomplete sigma for chain {chain}, iteration {iteration}")))?;
        draws.push(Draw {
            chain,
            iteration,
            phis: layers,
            mu,
            sigma,
        });
    }
    if let Some(((chain, it), _)) = hypers.into_iter().next() {
        return Err(Error::parse(hyper_origin, 0, format!("hyper draw (chain {chain}, iteration {it}) has no layer draw")));
    }
    Ok(PosteriorSamples {
        n_layers,
        dim,
        draws,
        acceptance: Vec::new(),
    })
}

pub fn read_posterior(phi_path: &Path, hyper_path: &Path) -> Result<PosteriorSamples> {
    parse_posterior(&read(phi_path)?, &read(hyper_path)?, phi_path, hyper_path)
}

fn csv_rows<'a>(text: &'a str, origin: &Path, header: &str, width: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((idx, h)) => return Err(Error::parse(origin, idx + 1, format!("expected header `{header}`, found `{h}`"))),
        None => return Err(Error::parse(origin, 1, "empty file")),
    }
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(Error::parse(origin, idx + 1, format!("expected {width} fields, found {}", fields.len())));
        }
        out.push((idx + 1, fields));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(s: &str, origin: &Path, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::parse(origin, line, format!("invalid number `{s}`")))
}
