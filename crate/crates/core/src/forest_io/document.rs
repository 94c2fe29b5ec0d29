//! The forest document: UTF-8 JSON, `format_version` "1".
//!
//! ```text
//! {
//!   "format_version": "1",
//!   "covariate_names": ["x.1", ...],
//!   "class_names": ["a", ...],
//!   "config": {"n_trees": 500, "mtry": 8, ...} | null,
//!   "trees": [
//!     {"root":0,"nodes":[{"kind":"internal","id":0,"covariate":"x.17","threshold":2.5,
//!       "left":1,"right":2,"n_train":4,"impurity_decrease":0.5},
//!       {"kind":"leaf","id":1,"prediction":"a","n_train":2}, ...],"oob":[3,9,...]},
//!     ...
//!   ]
//! }
//! ```
//!
//! Node ids equal positions in `nodes`. Each tree sits on its own line.
//! `oob` is present on every tree or on none.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, FormatError};
use crate::fsutil::write_atomic;
use crate::rf::{ForestModel, NodeKind, RFConfig, Tree, TreeNode};

pub const FORMAT_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeRecord {
    root: usize,
    nodes: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oob: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NodeRecord {
    Internal {
        id: usize,
        covariate: String,
        threshold: f64,
        left: usize,
        right: usize,
        #[serde(default)]
        n_train: usize,
        #[serde(default)]
        impurity_decrease: f64,
    },
    Leaf {
        id: usize,
        prediction: String,
        #[serde(default)]
        n_train: usize,
    },
}

#[derive(Deserialize)]
struct Header {
    format_version: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[allow(dead_code)]
    format_version: String,
    covariate_names: Vec<String>,
    class_names: Vec<String>,
    #[serde(default)]
    config: Option<RFConfig>,
    trees: Vec<TreeRecord>,
}

pub fn forest_to_json(forest: &ForestModel) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"format_version\": {},\n", json(FORMAT_VERSION)));
    out.push_str(&format!(
        "  \"covariate_names\": {},\n",
        json(&forest.covariate_names)
    ));
    out.push_str(&format!("  \"class_names\": {},\n", json(&forest.class_names)));
    out.push_str(&format!("  \"config\": {},\n", json(&forest.config)));
    out.push_str("  \"trees\": [");
    for (t, tree) in forest.trees.iter().enumerate() {
        let record = TreeRecord {
            root: tree.root(),
            nodes: tree
                .nodes()
                .iter()
                .enumerate()
                .map(|(id, n)| node_record(forest, id, n))
                .collect(),
            oob: forest.oob_indices.as_ref().map(|o| o[t].clone()),
        };
        out.push_str(if t == 0 { "\n    " } else { ",\n    " });
        out.push_str(&json(&record));
    }
    out.push_str(if forest.trees.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
    out
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("forest records always serialize")
}

fn node_record(forest: &ForestModel, id: usize, node: &TreeNode) -> NodeRecord {
    match node.kind {
        NodeKind::Internal {
            covariate,
            threshold,
            left,
            right,
            impurity_decrease,
        } => NodeRecord::Internal {
            id,
            covariate: forest.covariate_names[covariate].clone(),
            threshold,
            left,
            right,
            n_train: node.n_train,
            impurity_decrease,
        },
        NodeKind::Leaf { prediction } => NodeRecord::Leaf {
            id,
            prediction: forest.class_names[prediction].clone(),
            n_train: node.n_train,
        },
    }
}

pub fn forest_from_json(text: &str) -> Result<ForestModel, FormatError> {
    let header: Header = serde_json::from_str(text)?;
    if header.format_version != FORMAT_VERSION {
        return Err(FormatError::UnknownVersion(header.format_version));
    }
    let doc: Document = serde_json::from_str(text)?;

    let covariates: HashMap<&str, usize> = index_of(&doc.covariate_names);
    let classes: HashMap<&str, usize> = index_of(&doc.class_names);
    let p = doc.covariate_names.len();
    let k = doc.class_names.len();

    let with_oob = doc.trees.iter().filter(|t| t.oob.is_some()).count();
    if with_oob != 0 && with_oob != doc.trees.len() {
        return Err(FormatError::PartialOob);
    }

    let mut trees = Vec::with_capacity(doc.trees.len());
    let mut oob = Vec::with_capacity(with_oob);
    for (t, record) in doc.trees.into_iter().enumerate() {
        let len = record.nodes.len();
        let mut nodes = Vec::with_capacity(len);
        for (position, node) in record.nodes.into_iter().enumerate() {
            let (id, built) = match node {
                NodeRecord::Internal {
                    id,
                    covariate,
                    threshold,
                    left,
                    right,
                    n_train,
                    impurity_decrease,
                } => {
                    let Some(&c) = covariates.get(covariate.as_str()) else {
                        return Err(FormatError::UnknownCovariate {
                            tree: t,
                            node: id,
                            name: covariate,
                        });
                    };
                    (
                        id,
                        TreeNode::internal(c, threshold, left, right, impurity_decrease, n_train),
                    )
                }
                NodeRecord::Leaf {
                    id,
                    prediction,
                    n_train,
                } => {
                    let Some(&c) = classes.get(prediction.as_str()) else {
                        return Err(FormatError::UnknownClass {
                            tree: t,
                            node: id,
                            name: prediction,
                        });
                    };
                    (id, TreeNode::leaf(c, n_train))
                }
            };
            if id != position {
                return Err(FormatError::NodeIdOrder {
                    tree: t,
                    len,
                    position,
                    found: id,
                });
            }
            nodes.push(built);
        }
        let tree = Tree::new(nodes, record.root, p, k)
            .map_err(|source| FormatError::Tree { tree: t, source })?;
        trees.push(tree);
        if let Some(o) = record.oob {
            oob.push(o);
        }
    }

    Ok(ForestModel {
        trees,
        covariate_names: doc.covariate_names,
        class_names: doc.class_names,
        config: doc.config,
        oob_indices: (with_oob > 0).then_some(oob),
    })
}

fn index_of(names: &[String]) -> HashMap<&str, usize> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect()
}

pub fn write_forest(forest: &ForestModel, path: &Path) -> Result<(), FormatError> {
    write_atomic(path, forest_to_json(forest).as_bytes()).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_forest(path: &Path) -> Result<ForestModel, FormatError> {
    forest_from_json(&read_text(path)?)
}
