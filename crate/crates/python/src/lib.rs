//! Python bindings: datasets, training, flow aggregation and rendering.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use forestflow::flow::{self, FlowDocument, RankedGroup};
use forestflow::forest_io::{self, FormatError, NodeTableOptions};
use forestflow::render::{self, AxisOrder, ColorMode, RenderError, RenderOptions};
use forestflow::rf::{self, ImportanceMetric, ImportanceReport, RFConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn format_err(e: FormatError) -> PyErr {
    match e {
        FormatError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn render_err(e: RenderError) -> PyErr {
    match e {
        RenderError::Io { .. } | RenderError::MissingViewer(_) => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

/// Rows of numeric covariates with one class label each.
#[pyclass(module = "forestflow", frozen)]
struct Dataset {
    inner: rf::Dataset,
}

#[pymethods]
impl Dataset {
    #[new]
    fn new(covariate_names: Vec<String>, rows: Vec<Vec<f64>>, responses: Vec<String>) -> PyResult<Self> {
        let inner = rf::Dataset::new(covariate_names, rows, &responses).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Reads a CSV with a header; every column but `response` is a covariate.
    #[staticmethod]
    fn from_csv(path: PathBuf, response: &str) -> PyResult<Self> {
        let inner = forest_io::read_dataset(&path, response).map_err(format_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names().to_vec()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(rows={}, covariates={}, classes={})",
            self.inner.n_rows(),
            self.inner.n_covariates(),
            self.inner.n_classes()
        )
    }
}

#[pyclass(module = "forestflow", frozen)]
struct Forest {
    inner: rf::ForestModel,
}

#[pymethods]
impl Forest {
    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.n_trees()
    }

    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names.clone()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    /// Majority-vote class name and per-class vote fractions for one row.
    fn predict(&self, row: Vec<f64>) -> PyResult<(String, Vec<f64>)> {
        let p = self.inner.predict(&row).map_err(value_err)?;
        Ok((self.inner.class_names[p.class].clone(), p.fractions))
    }

    fn oob_accuracy(&self, data: &Dataset) -> PyResult<f64> {
        rf::oob_accuracy(&self.inner, &data.inner).map_err(value_err)
    }

    fn impurity_importance(&self) -> Vec<f64> {
        rf::impurity_importance(&self.inner)
    }

    #[pyo3(signature = (data, repeats = 1, seed = 1))]
    fn permutation_importance(&self, data: &Dataset, repeats: usize, seed: u64) -> PyResult<Vec<f64>> {
        rf::permutation_importance(&self.inner, &data.inner, repeats, seed).map_err(value_err)
    }

    fn to_json(&self) -> String {
        forest_io::forest_to_json(&self.inner)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = forest_io::forest_from_json(text).map_err(format_err)?;
        Ok(Self { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        forest_io::write_forest(&self.inner, &path).map_err(format_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = forest_io::read_forest(&path).map_err(format_err)?;
        Ok(Self { inner })
    }

    /// One tree per node-table CSV (randomForest `getTree` layout).
    #[staticmethod]
    #[pyo3(signature = (paths, covariate_names, class_names, strict = false))]
    fn from_node_tables(
        paths: Vec<PathBuf>,
        covariate_names: Vec<String>,
        class_names: Vec<String>,
        strict: bool,
    ) -> PyResult<Self> {
        let inner = forest_io::read_node_tables(
            &paths,
            &covariate_names,
            &class_names,
            NodeTableOptions { strict },
        )
        .map_err(format_err)?;
        Ok(Self { inner })
    }

    /// Graphviz text for tree `index`.
    fn tree_dot(&self, index: usize) -> PyResult<String> {
        let tree = self
            .inner
            .trees
            .get(index)
            .ok_or_else(|| PyIndexError::new_err(format!("tree {index} out of range")))?;
        Ok(render::tree_dot(tree, &self.inner.covariate_names, &self.inner.class_names))
    }

    fn __repr__(&self) -> String {
        format!(
            "Forest(trees={}, covariates={}, classes={})",
            self.inner.n_trees(),
            self.inner.covariate_names.len(),
            self.inner.class_names.len()
        )
    }
}

type Group = (usize, String);

fn group(agg: &flow::FlowAggregate, g: RankedGroup) -> Group {
    (g.rank, agg.label_name(g.label).to_string())
}

/// Rank-indexed flow network over (rank, covariate or "Terminus") groups.
#[pyclass(module = "forestflow", frozen)]
struct FlowAggregate {
    inner: flow::FlowAggregate,
}

#[pymethods]
impl FlowAggregate {
    #[getter]
    fn total_paths(&self) -> u64 {
        self.inner.total_paths()
    }

    #[getter]
    fn max_rank(&self) -> usize {
        self.inner.max_rank()
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.n_trees()
    }

    #[getter]
    fn class_restriction(&self) -> Option<String> {
        self.inner.class_restriction().map(str::to_string)
    }

    /// `[((rank, name), (rank, name), weight), ...]` ordered by source then target.
    fn edges(&self) -> Vec<(Group, Group, u64)> {
        self.inner
            .edges()
            .map(|e| (group(&self.inner, e.from), group(&self.inner, e.to), e.weight))
            .collect()
    }

    /// `[((rank, name), total), ...]`
    fn group_totals(&self) -> Vec<(Group, u64)> {
        self.inner
            .group_totals()
            .iter()
            .map(|(&g, &t)| (group(&self.inner, g), t))
            .collect()
    }

    /// Removed fraction per rank, if thresholded.
    fn removed_fraction(&self) -> Option<Vec<f64>> {
        self.inner.threshold().map(|t| t.removed_fraction.clone())
    }

    fn threshold(&self, theta: f64) -> PyResult<Self> {
        let inner = flow::apply_threshold(&self.inner, theta).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn merge(&self, other: &FlowAggregate) -> PyResult<Self> {
        let inner = flow::merge(&self.inner, &other.inner).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[pyo3(signature = (path, width = 960, height = 600, color_mode = "grayscale", axis_order = "index", min_darkness = 0.15))]
    fn render_pcp(
        &self,
        path: PathBuf,
        width: u32,
        height: u32,
        color_mode: &str,
        axis_order: &str,
        min_darkness: f64,
    ) -> PyResult<()> {
        let opts = options(width, height, color_mode, axis_order, min_darkness)?;
        render::render_pcp(&self.inner, &opts, &path).map_err(render_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "FlowAggregate(paths={}, groups={}, edges={})",
            self.inner.total_paths(),
            self.inner.group_totals().len(),
            self.inner.edge_weights().len()
        )
    }
}

fn options(width: u32, height: u32, color_mode: &str, axis_order: &str, min_darkness: f64) -> PyResult<RenderOptions> {
    let color_mode = match color_mode {
        "grayscale" => ColorMode::Grayscale,
        "viridis" => ColorMode::Viridis,
        other => return Err(value_err(format!("unknown color mode {other:?}"))),
    };
    let axis_order = match axis_order {
        "index" => AxisOrder::ByIndex,
        "frequency" => AxisOrder::ByFrequency,
        other => return Err(value_err(format!("unknown axis order {other:?}"))),
    };
    let opts = RenderOptions {
        width,
        height,
        color_mode,
        axis_order,
        min_darkness,
        ..RenderOptions::default()
    };
    opts.validate().map_err(render_err)?;
    Ok(opts)
}

/// Trains a classification forest; `mtry` defaults to floor(sqrt(p)).
#[pyfunction]
#[pyo3(signature = (data, n_trees = 500, mtry = None, min_node_size = 1, max_nodes = None, seed = 1))]
fn train_forest(
    py: Python<'_>,
    data: &Dataset,
    n_trees: usize,
    mtry: Option<usize>,
    min_node_size: usize,
    max_nodes: Option<usize>,
    seed: u64,
) -> PyResult<Forest> {
    let p = data.inner.n_covariates();
    let config = RFConfig {
        n_trees,
        mtry: mtry.unwrap_or_else(|| rf::default_mtry(p)),
        min_node_size,
        max_nodes,
        seed,
        bootstrap_size: None,
    };
    let inner = py
        .detach(|| rf::train_forest(&data.inner, &config))
        .map_err(value_err)?;
    Ok(Forest { inner })
}

/// Stratified k-fold choice of mtry: `(selected, [(mtry, accuracy), ...])`.
#[pyfunction]
#[pyo3(signature = (data, candidates, n_folds = 5, n_trees = 500, seed = 1))]
fn tune_mtry(
    py: Python<'_>,
    data: &Dataset,
    candidates: Vec<usize>,
    n_folds: usize,
    n_trees: usize,
    seed: u64,
) -> PyResult<(usize, Vec<(usize, f64)>)> {
    let base = RFConfig {
        n_trees,
        seed,
        ..RFConfig::for_covariates(data.inner.n_covariates())
    };
    let result = py
        .detach(|| rf::tune_mtry(&data.inner, &candidates, n_folds, &base))
        .map_err(value_err)?;
    Ok((result.selected_mtry, result.scores))
}

#[pyfunction]
#[pyo3(signature = (forest, max_rank = flow::DEFAULT_MAX_RANK, class_name = None))]
fn aggregate_flows(forest: &Forest, max_rank: usize, class_name: Option<&str>) -> PyResult<FlowAggregate> {
    let inner = flow::aggregate_flows(&forest.inner, max_rank, class_name).map_err(value_err)?;
    Ok(FlowAggregate { inner })
}

/// Flow document JSON (format version "1").
#[pyfunction]
#[pyo3(signature = (forest, max_rank = flow::DEFAULT_MAX_RANK, class_name = None, theta = 0.0))]
fn flow_document(forest: &Forest, max_rank: usize, class_name: Option<&str>, theta: f64) -> PyResult<String> {
    let doc = FlowDocument::build(&forest.inner, max_rank, class_name, theta).map_err(value_err)?;
    Ok(doc.to_json())
}

/// Writes the self-contained Sankey page.
#[pyfunction]
#[pyo3(signature = (forest, path, max_rank = flow::DEFAULT_MAX_RANK, class_name = None, theta = 0.0, width = 960, height = 600, color_mode = "grayscale"))]
#[allow(clippy::too_many_arguments)]
fn render_sankey(
    forest: &Forest,
    path: PathBuf,
    max_rank: usize,
    class_name: Option<&str>,
    theta: f64,
    width: u32,
    height: u32,
    color_mode: &str,
) -> PyResult<()> {
    let doc = FlowDocument::build(&forest.inner, max_rank, class_name, theta).map_err(value_err)?;
    let opts = options(width, height, color_mode, "index", 0.15)?;
    render::render_sankey_doc(&doc, &opts, &path).map_err(render_err)
}

/// Importance dot chart; permutation scores need the training data.
#[pyfunction]
#[pyo3(signature = (forest, path, data = None, metric = "impurity", repeats = 1, seed = 1))]
fn render_importance(
    forest: &Forest,
    path: PathBuf,
    data: Option<&Dataset>,
    metric: &str,
    repeats: usize,
    seed: u64,
) -> PyResult<()> {
    let metric = match metric {
        "impurity" => ImportanceMetric::Impurity,
        "permutation" => ImportanceMetric::Permutation,
        other => return Err(value_err(format!("unknown metric {other:?}"))),
    };
    let impurity = rf::impurity_importance(&forest.inner);
    let permutation = data
        .map(|d| rf::permutation_importance(&forest.inner, &d.inner, repeats, seed))
        .transpose()
        .map_err(value_err)?;
    let report = ImportanceReport::from_parts(&forest.inner.covariate_names, &impurity, permutation.as_deref());
    render::render_importance_chart(&report, metric, &RenderOptions::default(), &path).map_err(render_err)
}

#[pymodule]
fn _forestflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Forest>()?;
    m.add_class::<FlowAggregate>()?;
    m.add_function(wrap_pyfunction!(train_forest, m)?)?;
    m.add_function(wrap_pyfunction!(tune_mtry, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_flows, m)?)?;
    m.add_function(wrap_pyfunction!(flow_document, m)?)?;
    m.add_function(wrap_pyfunction!(render_sankey, m)?)?;
    m.add_function(wrap_pyfunction!(render_importance, m)?)?;
    m.add("FLOW_FORMAT_VERSION", flow::FLOW_FORMAT_VERSION)?;
    m.add("TERMINUS", "Terminus")?;
    Ok(())
}
