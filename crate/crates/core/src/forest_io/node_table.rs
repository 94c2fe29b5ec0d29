//! Node tables as exported by R's `randomForest::getTree`.
//!
//! One row per node; row `r` (1-based) is node `r`, node 1 is the root.
//! Columns, matched case-insensitively (`.`/`_` read as spaces; extra
//! columns are ignored):
//!
//! | column         | internal node                  | leaf            |
//! |----------------|--------------------------------|-----------------|
//! | left daughter  | row number of left child       | 0               |
//! | right daughter | row number of right child      | 0               |
//! | split var      | 1-based covariate index or name | 0 / NA          |
//! | split point    | threshold (`<=` goes left)     | 0               |
//! | status         | 1                              | -1              |
//! | prediction     | 0 / NA / empty                 | class name or 1-based class index |

use std::path::Path;

use super::{read_text, FormatError};
use crate::rf::{ForestModel, Tree, TreeNode};

const COLUMNS: [&str; 6] = [
    "left daughter",
    "right daughter",
    "split var",
    "split point",
    "status",
    "prediction",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct NodeTableOptions {
    /// Reject internal rows that carry a prediction.
    pub strict: bool,
}

/// Reads one tree, returned as a single-tree forest without config or OOB data.
pub fn read_node_table(
    path: &Path,
    covariate_names: &[String],
    class_names: &[String],
    options: NodeTableOptions,
) -> Result<ForestModel, FormatError> {
    let tree = parse_node_table(&read_text(path)?, covariate_names, class_names, options)?;
    Ok(single_forest(vec![tree], covariate_names, class_names))
}

/// Reads several node tables, one tree each, into one forest.
pub fn read_node_tables(
    paths: &[impl AsRef<Path>],
    covariate_names: &[String],
    class_names: &[String],
    options: NodeTableOptions,
) -> Result<ForestModel, FormatError> {
    let trees = paths
        .iter()
        .map(|p| {
            parse_node_table(&read_text(p.as_ref())?, covariate_names, class_names, options)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(single_forest(trees, covariate_names, class_names))
}

fn single_forest(trees: Vec<Tree>, covariate_names: &[String], class_names: &[String]) -> ForestModel {
    ForestModel {
        trees,
        covariate_names: covariate_names.to_vec(),
        class_names: class_names.to_vec(),
        config: None,
        oob_indices: None,
    }
}

fn normalize(header: &str) -> String {
    header
        .to_lowercase()
        .replace(['.', '_'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_unset(cell: &str) -> bool {
    cell.is_empty() || cell == "0" || cell.eq_ignore_ascii_case("na")
}

pub fn parse_node_table(
    text: &str,
    covariate_names: &[String],
    class_names: &[String],
    options: NodeTableOptions,
) -> Result<Tree, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(normalize).collect();
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FormatError::MissingColumn(name.to_string()))?;
    }
    let [left_c, right_c, var_c, point_c, status_c, pred_c] = cols;

    let records = reader.records().collect::<Result<Vec<_>, _>>()?;
    let n = records.len();
    let mut nodes = Vec::with_capacity(n);
    for (i, record) in records.iter().enumerate() {
        let row = i + 1;
        let err = |message: String| FormatError::NodeTable { row, message };
        let cell = |c: usize| record.get(c).unwrap_or("");
        let daughter = |c: usize| -> Result<usize, FormatError> {
            let v = cell(c);
            let d: usize = v
                .parse::<f64>()
                .ok()
                .filter(|d| d.fract() == 0.0 && *d >= 0.0)
                .map(|d| d as usize)
                .ok_or_else(|| err(format!("daughter {v:?} is not a row number")))?;
            if d > n {
                return Err(err(format!("daughter {d} is out of range 1..={n}")));
            }
            Ok(d)
        };
        let (left, right) = (daughter(left_c)?, daughter(right_c)?);
        let status = cell(status_c);
        let is_leaf = match status.parse::<f64>() {
            Ok(s) if s == -1.0 => true,
            Ok(s) if s == 1.0 => false,
            _ => return Err(err(format!("status {status:?} is neither 1 nor -1"))),
        };

        if is_leaf {
            if left != 0 || right != 0 {
                return Err(err("leaf row has nonzero daughters".into()));
            }
            let pred = cell(pred_c);
            let class = resolve(pred, class_names)
                .ok_or_else(|| err(format!("prediction {pred:?} is not a known class")))?;
            nodes.push(TreeNode::leaf(class, 0));
        } else {
            if left == 0 || right == 0 {
                return Err(err("internal row is missing a daughter".into()));
            }
            if options.strict && !is_unset(cell(pred_c)) {
                return Err(err("internal row carries a prediction".into()));
            }
            let var = cell(var_c);
            let covariate = resolve(var, covariate_names)
                .ok_or_else(|| err(format!("split var {var:?} is not a known covariate")))?;
            let point = cell(point_c);
            let threshold: f64 = point
                .parse()
                .map_err(|_| err(format!("split point {point:?} is not a number")))?;
            nodes.push(TreeNode::internal(covariate, threshold, left - 1, right - 1, 0.0, 0));
        }
    }

    Tree::new(nodes, 0, covariate_names.len(), class_names.len())
        .map_err(|source| FormatError::Tree { tree: 0, source })
}

/// A name in `names`, or a 1-based index into it.
fn resolve(cell: &str, names: &[String]) -> Option<usize> {
    if let Some(i) = names.iter().position(|n| n == cell) {
        return Some(i);
    }
    let i: f64 = cell.parse().ok()?;
    (i.fract() == 0.0 && i >= 1.0 && i as usize <= names.len()).then(|| i as usize - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::{NodeKind, TreeError};

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    const HEADER: &str = "left daughter,right daughter,split var,split point,status,prediction\n";

    #[test]
    fn three_row_stump() {
        let text = format!("{HEADER}2,3,1,2.5,1,0\n0,0,0,0,-1,1\n0,0,0,0,-1,2\n");
        let t = parse_node_table(&text, &names("x.", 2), &names("c", 2), Default::default())
            .unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(
            t.node(0).kind,
            NodeKind::Internal {
                covariate: 0,
                threshold: 2.5,
                left: 1,
                right: 2,
                impurity_decrease: 0.0
            }
        );
        assert_eq!(t.node(2).kind, NodeKind::Leaf { prediction: 1 });
    }

    #[test]
    fn labelled_export_with_row_names() {
        // write.csv(getTree(rf, 1, labelVar = TRUE)) adds an unnamed first column.
        let text = "\"\",\"left daughter\",\"right daughter\",\"split var\",\"split point\",\"status\",\"prediction\"\n\
                    \"1\",2,3,\"x.2\",7.5,1,NA\n\"2\",0,0,NA,0,-1,\"c2\"\n\"3\",0,0,NA,0,-1,\"c1\"\n";
        let t = parse_node_table(text, &names("x.", 2), &names("c", 2), NodeTableOptions { strict: true })
            .unwrap();
        assert!(matches!(t.node(0).kind, NodeKind::Internal { covariate: 1, .. }));
        assert_eq!(t.predict(&[0.0, 7.0]), 1);
    }

    #[test]
    fn internal_row_without_daughter() {
        let text = format!("{HEADER}0,3,1,2.5,1,0\n0,0,0,0,-1,1\n0,0,0,0,-1,2\n");
        let err = parse_node_table(&text, &names("x.", 1), &names("c", 2), Default::default())
            .unwrap_err();
        assert!(matches!(err, FormatError::NodeTable { row: 1, .. }));
    }

    #[test]
    fn leaf_with_daughters_and_ranges() {
        let text = format!("{HEADER}2,3,1,2.5,1,0\n2,0,0,0,-1,1\n0,0,0,0,-1,2\n");
        assert!(matches!(
            parse_node_table(&text, &names("x.", 1), &names("c", 2), Default::default()),
            Err(FormatError::NodeTable { row: 2, .. })
        ));
        let text = format!("{HEADER}2,9,1,2.5,1,0\n0,0,0,0,-1,1\n0,0,0,0,-1,2\n");
        assert!(matches!(
            parse_node_table(&text, &names("x.", 1), &names("c", 2), Default::default()),
            Err(FormatError::NodeTable { row: 1, .. })
        ));
        let text = format!("{HEADER}2,3,4,2.5,1,0\n0,0,0,0,-1,1\n0,0,0,0,-1,2\n");
        assert!(matches!(
            parse_node_table(&text, &names("x.", 1), &names("c", 2), Default::default()),
            Err(FormatError::NodeTable { row: 1, .. })
        ));
    }

    #[test]
    fn strict_mode_rejects_internal_prediction() {
        let text = format!("{HEADER}2,3,1,2.5,1,2\n0,0,0,0,-1,1\n0,0,0,0,-1,2\n");
        let (covs, classes) = (names("x.", 1), names("c", 2));
        assert!(parse_node_table(&text, &covs, &classes, Default::default()).is_ok());
        assert!(parse_node_table(&text, &covs, &classes, NodeTableOptions { strict: true }).is_err());
    }

    #[test]
    fn cycles_surface_as_tree_errors() {
        let text = format!("{HEADER}2,3,1,2.5,1,0\n1,3,1,1,1,0\n0,0,0,0,-1,2\n");
        let err = parse_node_table(&text, &names("x.", 1), &names("c", 2), Default::default())
            .unwrap_err();
        assert!(matches!(
            err,
            FormatError::Tree {
                source: TreeError::Cycle { .. },
                ..
            }
        ));
    }

    #[test]
    fn balanced_depth_two() {
        let text = format!(
            "{HEADER}2,3,1,5,1,0\n4,5,2,1.5,1,0\n6,7,2,8,1,0\n\
             0,0,0,0,-1,1\n0,0,0,0,-1,2\n0,0,0,0,-1,2\n0,0,0,0,-1,1\n"
        );
        let t = parse_node_table(&text, &names("x.", 2), &names("c", 2), Default::default())
            .unwrap();
        assert_eq!(t.n_leaves(), 4);
        assert_eq!(t.n_internal(), 3);
        assert_eq!(t.predict(&[1.0, 1.0]), 0);
        assert_eq!(t.predict(&[1.0, 2.0]), 1);
        assert_eq!(t.predict(&[9.0, 8.0]), 1);
        assert_eq!(t.predict(&[9.0, 9.0]), 0);
    }
}
