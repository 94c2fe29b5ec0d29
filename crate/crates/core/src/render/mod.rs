//! Static renderings of flow aggregates, importance reports and single trees,
//! plus the self-contained interactive Sankey page.

mod color;
mod dot;
mod importance;
mod pcp;
mod sankey;
mod svg;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use color::{darkness, ColorMode};
pub use dot::{export_tree_graph, tree_dot};
pub use importance::{importance_svg, render_importance_chart};
pub use pcp::{pcp_svg, render_pcp};
pub use sankey::{
    extract_island, render_sankey_doc, render_sankey_doc_with, sankey_html, sankey_layout, SankeyBlock,
    SankeyLayout, SankeyLink, ViewerBundle,
};

use crate::flow::GroupLabel;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid render options: {0}")]
    InvalidOptions(String),
    #[error("nothing to render: {0}")]
    Empty(&'static str),
    #[error("viewer bundle not found at {}", .0.display())]
    MissingViewer(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Flow(#[from] crate::flow::FlowError),
}

/// Gradation order on the parallel axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisOrder {
    /// Covariate index order.
    #[default]
    ByIndex,
    /// Descending total path count over all ranks; ties by index.
    ByFrequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub color_mode: ColorMode,
    pub axis_order: AxisOrder,
    /// Darkness of the lightest edge, in `[0, 1)`.
    pub min_darkness: f64,
    /// Group label template; `{rank}` and `{name}` are substituted.
    pub label_format: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 960,
            height: 600,
            color_mode: ColorMode::Grayscale,
            axis_order: AxisOrder::ByIndex,
            min_darkness: 0.15,
            label_format: "Node.{rank}_{name}".into(),
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidOptions("width and height must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.min_darkness) {
            return Err(RenderError::InvalidOptions(format!(
                "min_darkness {} is outside [0, 1)",
                self.min_darkness
            )));
        }
        Ok(())
    }

    /// `label_format` applied to a group.
    pub fn group_label(&self, rank: usize, name: &str) -> String {
        self.label_format
            .replace("{rank}", &rank.to_string())
            .replace("{name}", name)
    }
}

pub(crate) fn label_name(names: &[String], label: GroupLabel) -> &str {
    match label {
        GroupLabel::Terminus => "Terminus",
        GroupLabel::Covariate(c) => &names[c],
    }
}

pub(crate) fn write(path: &Path, text: &str) -> Result<(), RenderError> {
    crate::write_atomic(path, text.as_bytes()).map_err(|source| RenderError::Io {
        path: path.to_path_buf(),
        source,
    })
}
