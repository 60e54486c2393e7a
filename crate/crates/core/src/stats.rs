//! Binary ERGM sufficient statistics and change statistics.
//!
//! Supported terms are `edges`, `nodematch`, and the geometrically weighted
//! `gwdegree`, `gwesp` and `gwnsp` statistics with a fixed decay `alpha`:
//!
//! ```text
//! g_d(alpha) = e^alpha * (1 - (1 - e^-alpha)^d)
//! gwesp  = sum_d g_d * EP_d     (edgewise shared partners)
//! gwnsp  = sum_d g_d * NP_d     (non-edgewise shared partners)
//! gwdegree = sum_d g_d * D_d    (degree distribution)
//! ```
//!
//! Change statistics are computed from local neighbourhood scans; they use
//! `g_{d+1} - g_d = (1 - e^-alpha)^d`.

use std::fmt;

use crate::adjacency::{for_each_bit, Adjacency};
use crate::error::{Error, Result};
use crate::network::{BinaryLayer, NodeAttributes};

/// Default decay for geometrically weighted terms.
pub const DEFAULT_DECAY: f64 = std::f64::consts::LN_2;

/// Geometric weight `g_d(alpha)`.
pub fn gw_weight(d: u32, alpha: f64) -> f64 {
    alpha.exp() * (1.0 - (1.0 - (-alpha).exp()).powi(d as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatKind {
    Edges,
    GwDegree,
    Gwesp,
    Gwnsp,
    NodeMatch,
}

impl StatKind {
    pub fn name(self) -> &'static str {
        match self {
            StatKind::Edges => "edges",
            StatKind::GwDegree => "gwdegree",
            StatKind::Gwesp => "gwesp",
            StatKind::Gwnsp => "gwnsp",
            StatKind::NodeMatch => "nodematch",
        }
    }

    pub fn is_geometric(self) -> bool {
        matches!(self, StatKind::GwDegree | StatKind::Gwesp | StatKind::Gwnsp)
    }

    pub const ALL: [StatKind; 5] = [
        StatKind::Edges,
        StatKind::GwDegree,
        StatKind::Gwesp,
        StatKind::Gwnsp,
        StatKind::NodeMatch,
    ];
}

impl std::str::FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Model(format!("unknown statistic kind `{s}`")))
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One model term.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticDescriptor {
    pub kind: StatKind,
    /// Decay for geometrically weighted kinds.
    pub decay: Option<f64>,
    /// Attribute name for `nodematch`.
    pub attribute: Option<String>,
}

impl StatisticDescriptor {
    pub fn edges() -> Self {
        StatisticDescriptor {
            kind: StatKind::Edges,
            decay: None,
            attribute: None,
        }
    }

    pub fn geometric(kind: StatKind, decay: f64) -> Self {
        StatisticDescriptor {
            kind,
            decay: Some(decay),
            attribute: None,
        }
    }

    pub fn gwesp(decay: f64) -> Self {
        Self::geometric(StatKind::Gwesp, decay)
    }

    pub fn gwnsp(decay: f64) -> Self {
        Self::geometric(StatKind::Gwnsp, decay)
    }

    pub fn gwdegree(decay: f64) -> Self {
        Self::geometric(StatKind::GwDegree, decay)
    }

    pub fn nodematch(attribute: impl Into<String>) -> Self {
        StatisticDescriptor {
            kind: StatKind::NodeMatch,
            decay: None,
            attribute: Some(attribute.into()),
        }
    }

    pub fn decay_or_default(&self) -> f64 {
        self.decay.unwrap_or(DEFAULT_DECAY)
    }

    /// Short label used in tables, e.g. `gwesp` or `nodematch.faction`.
    pub fn label(&self) -> String {
        match (&self.attribute, self.kind.is_geometric()) {
            (Some(a), _) => format!("{}.{a}", self.kind),
            (None, true) if self.decay_or_default() != DEFAULT_DECAY => {
                format!("{}.{}", self.kind, self.decay_or_default())
            }
            _ => self.kind.to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind.is_geometric() {
            let a = self.decay_or_default();
            if !a.is_finite() || a < 0.0 {
                return Err(Error::Model(format!("{}: decay must be finite and >= 0, got {a}", self.kind)));
            }
        } else if self.decay.is_some() {
            return Err(Error::Model(format!("{} takes no decay parameter", self.kind)));
        }
        match (self.kind, &self.attribute) {
            (StatKind::NodeMatch, None) => Err(Error::Model("nodematch requires an attribute".into())),
            (StatKind::NodeMatch, Some(_)) => Ok(()),
            (k, Some(_)) => Err(Error::Model(format!("{k} takes no attribute"))),
            _ => Ok(()),
        }
    }

    fn same_term(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.attribute == other.attribute
            && self.decay_or_default().to_bits() == other.decay_or_default().to_bits()
    }
}

/// Ordered list of model terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    terms: Vec<StatisticDescriptor>,
}

impl ModelSpec {
    pub fn new(terms: Vec<StatisticDescriptor>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Model("a model needs at least one statistic".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            t.validate()?;
            if terms[..k].iter().any(|u| u.same_term(t)) {
                return Err(Error::Model(format!("duplicate statistic `{}`", t.label())));
            }
        }
        Ok(ModelSpec { terms })
    }

    pub fn edges_only() -> Self {
        ModelSpec {
            terms: vec![StatisticDescriptor::edges()],
        }
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[StatisticDescriptor] {
        &self.terms
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(StatisticDescriptor::label).collect()
    }

    /// Resolves attributes and precomputes weight tables for networks on `n` nodes.
    pub fn bind(&self, n: usize, attrs: &NodeAttributes) -> Result<BoundModel> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            terms.push(match t.kind {
                StatKind::Edges => Term::Edges,
                StatKind::NodeMatch => {
                    let name = t.attribute.as_deref().unwrap_or_default();
                    let codes = attrs.codes(name)?;
                    if codes.len() != n {
                        return Err(Error::AttributeLength {
                            name: name.to_string(),
                            expected: n,
                            found: codes.len(),
                        });
                    }
                    Term::NodeMatch(codes)
                }
                kind => {
                    let table = GwTable::new(t.decay_or_default(), n);
                    match kind {
                        StatKind::GwDegree => Term::GwDegree(table),
                        StatKind::Gwesp => Term::Gwesp(table),
                        _ => Term::Gwnsp(table),
                    }
                }
            });
        }
        Ok(BoundModel { n, terms })
    }
}

#[derive(Debug, Clone)]
struct GwTable {
    /// `g_d` for `d = 0..=n`.
    weight: Vec<f64>,
    /// `(1 - e^-alpha)^d`, the increment `g_{d+1} - g_d`.
    step: Vec<f64>,
}

impl GwTable {
    fn new(alpha: f64, n: usize) -> Self {
        let scale = alpha.exp();
        let ratio = 1.0 - (-alpha).exp();
        let step: Vec<f64> = (0..=n).map(|d| ratio.powi(d as i32)).collect();
        let weight = step.iter().map(|s| scale * (1.0 - s)).collect();
        GwTable { weight, step }
    }
}

#[derive(Debug, Clone)]
enum Term {
    Edges,
    GwDegree(GwTable),
    Gwesp(GwTable),
    Gwnsp(GwTable),
    NodeMatch(Vec<u32>),
}

/// A [`ModelSpec`] resolved against a node set: attribute codes looked up,
/// geometric weights tabulated.
#[derive(Debug, Clone)]
pub struct BoundModel {
    n: usize,
    terms: Vec<Term>,
}

impl BoundModel {
    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Full statistic vector of `layer`.
    pub fn statistics(&self, layer: &BinaryLayer) -> Result<Vec<f64>> {
        self.check_layer(layer)?;
        Ok(self.statistics_of(&Adjacency::from_layer(layer)))
    }

    /// Change in every statistic when dyad `(i, j)`, absent from `layer`, is added.
    pub fn change(&self, layer: &BinaryLayer, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_layer(layer)?;
        for node in [i, j] {
            if node >= self.n {
                return Err(Error::NodeOutOfRange { node, n: self.n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if layer.contains(i, j) {
            return Err(Error::DyadPresent(i.min(j), i.max(j)));
        }
        let mut out = vec![0.0; self.dim()];
        self.change_into(&Adjacency::from_layer(layer), i, j, &mut out);
        Ok(out)
    }

    fn check_layer(&self, layer: &BinaryLayer) -> Result<()> {
        if layer.n_nodes() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: layer.n_nodes(),
            });
        }
        Ok(())
    }

    pub(crate) fn statistics_of(&self, adj: &Adjacency) -> Vec<f64> {
        let n = self.n;
        let needs_pairs = self
            .terms
            .iter()
            .any(|t| matches!(t, Term::Gwesp(_) | Term::Gwnsp(_)));
        // Edgewise and non-edgewise shared partner distributions.
        let mut esp = vec![0u64; n.max(1)];
        let mut nsp = vec![0u64; n.max(1)];
        if needs_pairs {
            for i in 0..n {
                for j in (i + 1)..n {
                    let sp = adj.shared_partners(i, j) as usize;
                    if adj.has(i, j) {
                        esp[sp] += 1;
                    } else {
                        nsp[sp] += 1;
                    }
                }
            }
        }
        let weighted = |table: &GwTable, counts: &[u64]| -> f64 {
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(d, &c)| table.weight[d] * c as f64)
                .sum()
        };
        self.terms
            .iter()
            .map(|t| match t {
                Term::Edges => adj.n_edges() as f64,
                Term::GwDegree(table) => (0..n).map(|i| table.weight[adj.degree(i) as usize]).sum(),
                Term::Gwesp(table) => weighted(table, &esp),
                Term::Gwnsp(table) => weighted(table, &nsp),
                Term::NodeMatch(codes) => {
                    let mut count = 0usize;
                    for i in 0..n {
                        for_each_bit(adj.row(i), |j| {
                            if j > i && codes[i] == codes[j] {
                                count += 1;
                            }
                        });
                    }
                    count as f64
                }
            })
            .collect()
    }

    /// Writes the change statistics for adding `(i, j)` into `out`; the dyad must be absent.
    #[inline]
    pub(crate) fn change_into(&self, adj: &Adjacency, i: usize, j: usize, out: &mut [f64]) {
        debug_assert!(!adj.has(i, j));
        for (slot, t) in out.iter_mut().zip(&self.terms) {
            *slot = match t {
                Term::Edges => 1.0,
                Term::NodeMatch(codes) => {
                    if codes[i] == codes[j] {
                        1.0
                    } else {
                        0.0
                    }
                }
                Term::GwDegree(table) => {
                    table.step[adj.degree(i) as usize] + table.step[adj.degree(j) as usize]
                }
                Term::Gwesp(table) => {
                    let mut delta = table.weight[adj.shared_partners(i, j) as usize];
                    let (ri, rj) = (adj.row(i), adj.row(j));
                    for (w, (a, b)) in ri.iter().zip(rj).enumerate() {
                        let mut common = a & b;
                        while common != 0 {
                            let k = w * 64 + common.trailing_zeros() as usize;
                            delta += table.step[adj.shared_partners(i, k) as usize]
                                + table.step[adj.shared_partners(j, k) as usize];
                            common &= common - 1;
                        }
                    }
                    delta
                }
                Term::Gwnsp(table) => {
                    let mut delta = -table.weight[adj.shared_partners(i, j) as usize];
                    let (ri, rj) = (adj.row(i), adj.row(j));
                    // Pairs (i, k) with k ~ j gain partner j; (j, k) with k ~ i gain i.
                    for (w, (a, b)) in ri.iter().zip(rj).enumerate() {
                        let mut only_j = b & !a;
                        while only_j != 0 {
                            let k = w * 64 + only_j.trailing_zeros() as usize;
                            if k != i {
                                delta += table.step[adj.shared_partners(i, k) as usize];
                            }
                            only_j &= only_j - 1;
                        }
                        let mut only_i = a & !b;
                        while only_i != 0 {
                            let k = w * 64 + only_i.trailing_zeros() as usize;
                            if k != j {
                                delta += table.step[adj.shared_partners(j, k) as usize];
                            }
                            only_i &= only_i - 1;
                        }
                    }
                    delta
                }
            };
        }
    }
}

/// Statistic vector `s(layer)`.
pub fn eval_statistics(layer: &BinaryLayer, spec: &ModelSpec, attrs: &NodeAttributes) -> Result<Vec<f64>> {
    spec.bind(layer.n_nodes(), attrs)?.statistics(layer)
}

/// Change statistics for toggling `dyad` from absent to present in `layer`.
pub fn change_statistics(
    layer: &BinaryLayer,
    dyad: (usize, usize),
    spec: &ModelSpec,
    attrs: &NodeAttributes,
) -> Result<Vec<f64>> {
    spec.bind(layer.n_nodes(), attrs)?.change(layer, dyad.0, dyad.1)
}

/// Statistics of the configurations present in both `upper` and `lower`.
///
/// `upper` must be a subgraph of `lower`, so every configuration of `upper`
/// already appears in `lower` and the result is `s(upper)`.
pub fn transition_statistics(
    upper: &BinaryLayer,
    lower: &BinaryLayer,
    spec: &ModelSpec,
    attrs: &NodeAttributes,
) -> Result<Vec<f64>> {
    if upper.n_nodes() != lower.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: lower.n_nodes(),
            found: upper.n_nodes(),
        });
    }
    if let Some(&(i, j)) = upper.edges().iter().find(|&&(i, j)| !lower.contains(i, j)) {
        return Err(Error::NestingViolation {
            lower: 0,
            upper: 1,
            i,
            j,
        });
    }
    eval_statistics(upper, spec, attrs)
}
