//! Flow document, `format_version` "1": the JSON bundle consumed by the
//! renderers and embedded in Sankey pages as the `flow-data` island.
//!
//! ```text
//! {
//!   "format_version": "1",
//!   "semantics": {"terminus_absorbing":true,"path_weighting":"count",...},
//!   "covariate_names": [...],
//!   "class_names": [...],
//!   "n_trees": 500,
//!   "max_rank": 5,
//!   "selection": {"class":null,"theta":0.0},
//!   "aggregate": AGG,          // selected class, thresholded: what is drawn
//!   "base": [AGG, AGG, ...]    // unfiltered: all classes, then one per class
//! }
//! AGG = {
//!   "class": null | "c1",
//!   "total_paths": 4,
//!   "threshold": null | {"theta":0.5,"removed_fraction":[0.0,0.33,...]},
//!   "groups": [{"rank":1,"label":16,"total":4}, ...],
//!   "edges": [{"from":{"rank":1,"label":16},"to":{"rank":2,"label":"Terminus"},"weight":4}, ...]
//! }
//! ```
//!
//! Labels are covariate indices into `covariate_names`, or `"Terminus"`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::aggregate::{FlowAggregate, ThresholdReport};
use super::{aggregate_flows, apply_threshold, FlowError, GroupLabel, RankedGroup};
use crate::rf::ForestModel;

pub const FLOW_FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Semantics {
    pub terminus_absorbing: bool,
    pub path_weighting: String,
    pub rank_origin: usize,
    pub threshold_rule: String,
}

impl Default for Semantics {
    fn default() -> Self {
        Self {
            terminus_absorbing: true,
            path_weighting: "count".into(),
            rank_origin: 1,
            threshold_rule: "drop group if total < theta * rank_total; rank>1 totals = surviving inflow"
                .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub class: Option<String>,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GroupRef {
    rank: usize,
    label: GroupLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GroupRecord {
    rank: usize,
    label: GroupLabel,
    total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EdgeRecord {
    from: GroupRef,
    to: GroupRef,
    weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ThresholdRecord {
    theta: f64,
    removed_fraction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    class: Option<String>,
    total_paths: u64,
    threshold: Option<ThresholdRecord>,
    groups: Vec<GroupRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDocument {
    pub format_version: String,
    pub semantics: Semantics,
    pub covariate_names: Vec<String>,
    pub class_names: Vec<String>,
    pub n_trees: usize,
    pub max_rank: usize,
    pub selection: Selection,
    aggregate: AggregateRecord,
    base: Vec<AggregateRecord>,
}

impl AggregateRecord {
    fn from_aggregate(agg: &FlowAggregate) -> Self {
        Self {
            class: agg.class_restriction.clone(),
            total_paths: agg.total_paths,
            threshold: agg.threshold.as_ref().map(|t| ThresholdRecord {
                theta: t.theta,
                removed_fraction: t.removed_fraction.clone(),
            }),
            groups: agg
                .group_totals
                .iter()
                .map(|(g, &total)| GroupRecord {
                    rank: g.rank,
                    label: g.label,
                    total,
                })
                .collect(),
            edges: agg
                .edges()
                .map(|e| EdgeRecord {
                    from: GroupRef {
                        rank: e.from.rank,
                        label: e.from.label,
                    },
                    to: GroupRef {
                        rank: e.to.rank,
                        label: e.to.label,
                    },
                    weight: e.weight,
                })
                .collect(),
        }
    }

    fn to_aggregate(&self, doc: &FlowDocument) -> Result<FlowAggregate, FlowError> {
        let bad = |m: String| FlowError::Document(m);
        let p = doc.covariate_names.len();
        let check = |rank: usize, label: GroupLabel| -> Result<RankedGroup, FlowError> {
            if rank == 0 || rank > doc.max_rank {
                return Err(bad(format!("rank {rank} outside 1..={}", doc.max_rank)));
            }
            if let GroupLabel::Covariate(c) = label {
                if c >= p {
                    return Err(bad(format!("covariate index {c} out of range")));
                }
            }
            Ok(RankedGroup::new(rank, label))
        };
        let mut group_totals = BTreeMap::new();
        for g in &self.groups {
            if group_totals.insert(check(g.rank, g.label)?, g.total).is_some() {
                return Err(bad(format!("duplicate group at rank {}", g.rank)));
            }
        }
        let mut edges = BTreeMap::new();
        for e in &self.edges {
            let from = check(e.from.rank, e.from.label)?;
            let to = check(e.to.rank, e.to.label)?;
            if to.rank != from.rank + 1 || from.label == GroupLabel::Terminus || e.weight == 0 {
                return Err(bad(format!("invalid edge from rank {}", from.rank)));
            }
            if !group_totals.contains_key(&from) || !group_totals.contains_key(&to) {
                return Err(bad("edge endpoint is not a listed group".into()));
            }
            edges.insert((from, to), e.weight);
        }
        if let Some(c) = &self.class {
            if !doc.class_names.contains(c) {
                return Err(bad(format!("unknown class {c:?}")));
            }
        }
        Ok(FlowAggregate {
            edges,
            group_totals,
            total_paths: self.total_paths,
            max_rank: doc.max_rank,
            class_restriction: self.class.clone(),
            n_trees: doc.n_trees,
            covariate_names: doc.covariate_names.clone(),
            threshold: self.threshold.as_ref().map(|t| ThresholdReport {
                theta: t.theta,
                removed_fraction: t.removed_fraction.clone(),
            }),
        })
    }
}

impl FlowDocument {
    /// Aggregates `forest` for every class, then derives the displayed view
    /// for `class` (or all classes) thresholded at `theta`.
    pub fn build(
        forest: &ForestModel,
        max_rank: usize,
        class: Option<&str>,
        theta: f64,
    ) -> Result<Self, FlowError> {
        let mut base = vec![aggregate_flows(forest, max_rank, None)?];
        for c in &forest.class_names {
            base.push(aggregate_flows(forest, max_rank, Some(c))?);
        }
        let selected = match class {
            None => &base[0],
            Some(name) => base
                .iter()
                .skip(1)
                .find(|a| a.class_restriction() == Some(name))
                .ok_or_else(|| FlowError::UnknownClass {
                    class: name.to_string(),
                    valid: forest.class_names.clone(),
                })?,
        };
        let view = apply_threshold(selected, theta)?;
        Ok(Self::from_aggregates(&view, &base, &forest.class_names))
    }

    pub fn from_aggregates(
        view: &FlowAggregate,
        base: &[FlowAggregate],
        class_names: &[String],
    ) -> Self {
        Self {
            format_version: FLOW_FORMAT_VERSION.into(),
            semantics: Semantics::default(),
            covariate_names: view.covariate_names.clone(),
            class_names: class_names.to_vec(),
            n_trees: view.n_trees,
            max_rank: view.max_rank,
            selection: Selection {
                class: view.class_restriction.clone(),
                theta: view.threshold.as_ref().map_or(0.0, |t| t.theta),
            },
            aggregate: AggregateRecord::from_aggregate(view),
            base: base.iter().map(AggregateRecord::from_aggregate).collect(),
        }
    }

    /// The aggregate the renderers draw.
    pub fn view(&self) -> Result<FlowAggregate, FlowError> {
        self.aggregate.to_aggregate(self)
    }

    /// Unfiltered aggregates: all classes first, then one per class.
    pub fn base(&self) -> Result<Vec<FlowAggregate>, FlowError> {
        self.base.iter().map(|b| b.to_aggregate(self)).collect()
    }

    pub fn total_paths(&self) -> u64 {
        self.aggregate.total_paths
    }

    pub fn from_json(text: &str) -> Result<Self, FlowError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: String,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| FlowError::Document(e.to_string()))?;
        if header.format_version != FLOW_FORMAT_VERSION {
            return Err(FlowError::Document(format!(
                "unsupported format_version {:?}",
                header.format_version
            )));
        }
        let doc: FlowDocument =
            serde_json::from_str(text).map_err(|e| FlowError::Document(e.to_string()))?;
        doc.view()?;
        doc.base()?;
        Ok(doc)
    }

    /// Pretty JSON with one group or edge per line; byte-stable.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        field(&mut out, 1, "format_version", &json(&self.format_version), true);
        field(&mut out, 1, "semantics", &json(&self.semantics), true);
        field(&mut out, 1, "covariate_names", &json(&self.covariate_names), true);
        field(&mut out, 1, "class_names", &json(&self.class_names), true);
        field(&mut out, 1, "n_trees", &json(&self.n_trees), true);
        field(&mut out, 1, "max_rank", &json(&self.max_rank), true);
        field(&mut out, 1, "selection", &json(&self.selection), true);
        field(&mut out, 1, "aggregate", &aggregate_json(&self.aggregate, 1), true);
        let base: Vec<String> = self.base.iter().map(|b| aggregate_json(b, 2)).collect();
        field(&mut out, 1, "base", &list(&base, 1), false);
        out.push_str("}\n");
        out
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("flow records always serialize")
}

fn indent(level: usize) -> String {
    "  ".repeat(level)
}

fn field(out: &mut String, level: usize, name: &str, value: &str, comma: bool) {
    let _ = writeln!(
        out,
        "{}\"{name}\": {value}{}",
        indent(level),
        if comma { "," } else { "" }
    );
}

/// `items` (already rendered at `level + 1`) as a JSON list closing at `level`.
fn list(items: &[String], level: usize) -> String {
    if items.is_empty() {
        return "[]".into();
    }
    let inner = indent(level + 1);
    let body: Vec<String> = items.iter().map(|i| format!("{inner}{i}")).collect();
    format!("[\n{}\n{}]", body.join(",\n"), indent(level))
}

fn aggregate_json(agg: &AggregateRecord, level: usize) -> String {
    let mut out = String::from("{\n");
    let l = level + 1;
    field(&mut out, l, "class", &json(&agg.class), true);
    field(&mut out, l, "total_paths", &json(&agg.total_paths), true);
    field(&mut out, l, "threshold", &json(&agg.threshold), true);
    let groups: Vec<String> = agg.groups.iter().map(|g| json(g)).collect();
    field(&mut out, l, "groups", &list(&groups, l), true);
    let edges: Vec<String> = agg.edges.iter().map(|e| json(e)).collect();
    field(&mut out, l, "edges", &list(&edges, l), false);
    out.push_str(&indent(level));
    out.push('}');
    out
}
