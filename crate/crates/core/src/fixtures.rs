//! Bundled example data: Zachary's karate club with ordinal interaction
//! counts (weights 1..=4 after thresholds 1, 3, 4 on the co-occurrence
//! counts) and the two-faction split.

use std::path::Path;

use crate::error::Result;
use crate::io::{parse_attributes, parse_raw_edgelist};
use crate::network::{NodeAttributes, WeightedNetwork};

const KARATE_EDGES: &str = include_str!("../data/karate.csv");
const KARATE_ATTRS: &str = include_str!("../data/karate_attrs.csv");

/// Raw karate edge list with interaction counts as weights.
pub fn karate_raw() -> Result<crate::io::RawEdgeList> {
    parse_raw_edgelist(KARATE_EDGES, Path::new("karate.csv"), None)
}

/// Karate club network ordinalized with thresholds `(1, 3, 4)`, giving three layers.
pub fn karate_network() -> Result<WeightedNetwork> {
    let raw = karate_raw()?;
    crate::network::ordinalize(&raw.to_matrix(), &KARATE_THRESHOLDS)
}

pub const KARATE_THRESHOLDS: [f64; 3] = [1.0, 3.0, 4.0];

/// Faction attribute (`faction` with values `hi` / `officer`).
pub fn karate_attributes() -> Result<NodeAttributes> {
    parse_attributes(KARATE_ATTRS, Path::new("karate_attrs.csv"), 34)
}
