//! Root-to-leaf path aggregation.
//!
//! Every node of every tree is placed in a *ranked group*: its rank (number
//! of nodes from the root, root = 1) paired with the covariate it splits on,
//! or `Terminus` for leaves. Counting root-to-leaf paths through consecutive
//! groups yields a weighted flow network that the renderers draw.

mod aggregate;
mod document;
mod paths;
mod threshold;

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use aggregate::{aggregate_flows, aggregate_tree, merge, FlowAggregate, FlowEdge, ThresholdReport};
pub use document::{FlowDocument, FLOW_FORMAT_VERSION};
pub use paths::{enumerate_paths, subtree_leaf_counts, Path};
pub use threshold::apply_threshold;

#[cfg(test)]
pub(crate) use paths::fixtures as paths_fixtures;

/// Default truncation depth.
pub const DEFAULT_MAX_RANK: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("max_rank must be at least 1")]
    InvalidMaxRank,
    #[error("unknown class {class:?}; valid classes: {}", valid.join(", "))]
    UnknownClass { class: String, valid: Vec<String> },
    #[error("threshold {0} is outside [0, 1]")]
    ThetaOutOfRange(f64),
    #[error("aggregates differ: {0}")]
    Mismatch(String),
    #[error("malformed flow document: {0}")]
    Document(String),
}

/// What a node is grouped by: its split covariate, or `Terminus` for leaves.
///
/// `Terminus` orders before every covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupLabel {
    Terminus,
    Covariate(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankedGroup {
    pub rank: usize,
    pub label: GroupLabel,
}

impl RankedGroup {
    pub fn new(rank: usize, label: GroupLabel) -> Self {
        Self { rank, label }
    }
}

// Serialized as the covariate index, or the string "Terminus".
impl Serialize for GroupLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GroupLabel::Terminus => s.serialize_str("Terminus"),
            GroupLabel::Covariate(c) => s.serialize_u64(*c as u64),
        }
    }
}

impl<'de> Deserialize<'de> for GroupLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct LabelVisitor;
        impl Visitor<'_> for LabelVisitor {
            type Value = GroupLabel;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a covariate index or \"Terminus\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<GroupLabel, E> {
                Ok(GroupLabel::Covariate(v as usize))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<GroupLabel, E> {
                if v == "Terminus" {
                    Ok(GroupLabel::Terminus)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(LabelVisitor)
    }
}
