//! Command-line driver: train or ingest, tune, aggregate, filter, render.
//!
//! Every command prints `forestflow: key=value ...` summary lines on stdout.
//! Exit status is 0 on success, 2 for usage errors (bad flags, unknown class)
//! and 1 for I/O or validation failures. Outputs are written atomically.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::flow::{FlowDocument, DEFAULT_MAX_RANK};
use crate::forest_io::{self, NodeTableOptions};
use crate::render::{self, AxisOrder, ColorMode, RenderOptions, ViewerBundle};
use crate::rf::{
    default_mtry, impurity_importance, oob_accuracy, permutation_importance, train_forest,
    tune_mtry, ForestModel, ImportanceMetric, ImportanceReport, RFConfig,
};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "FORESTFLOW_THREADS";

#[derive(Parser, Debug)]
#[command(name = "forestflow", version, about = "Random forest path flows: train, aggregate, render")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a forest on a CSV file.
    Train(TrainArgs),
    /// Choose mtry by stratified cross-validation.
    Tune(TuneArgs),
    /// Ingest per-tree node tables into a forest file.
    Ingest(IngestArgs),
    /// Aggregate root-to-leaf paths into a flow document.
    Flows(FlowArgs),
    /// Parallel-coordinates plot of the path flows (SVG).
    RenderPcp(PcpArgs),
    /// Self-contained interactive Sankey page (HTML).
    RenderSankey(SankeyArgs),
    /// Covariate importance dot chart (SVG).
    Importance(ImportanceArgs),
    /// One tree as a Graphviz digraph.
    ExportTree(ExportTreeArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the class column.
    #[arg(long)]
    response: String,
}

#[derive(Args, Debug)]
struct ForestConfigArgs {
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    n_trees: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_node_size: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_nodes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ForestConfigArgs,
    /// Defaults to floor(sqrt(number of covariates)).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    mtry: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ForestConfigArgs,
    /// Comma-separated mtry values; defaults to powers of two and floor(sqrt(p)).
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<usize>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    /// Optional JSON file for the scores.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Node-table CSV files, one tree each.
    #[arg(long, num_args = 1.., required = true)]
    tables: Vec<PathBuf>,
    /// Comma-separated covariate names, in column order.
    #[arg(long, value_delimiter = ',', required = true)]
    covariates: Vec<String>,
    /// Comma-separated class names.
    #[arg(long, value_delimiter = ',', required = true)]
    classes: Vec<String>,
    /// Reject internal rows that carry a prediction.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Forest file.
    #[arg(long)]
    forest: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_RANK, value_parser = parse_rank)]
    max_rank: usize,
    /// Only count paths ending in leaves predicting this class.
    #[arg(long)]
    class: Option<String>,
    /// Drop groups below this share of their rank's paths.
    #[arg(long, default_value_t = 0.0, value_parser = parse_unit)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    select: SelectArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ColorArg {
    Grayscale,
    Viridis,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    Index,
    Frequency,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Impurity,
    Permutation,
}

#[derive(Args, Debug)]
struct StyleArgs {
    #[arg(long, default_value_t = 960, value_parser = clap::value_parser!(u32).range(1..))]
    width: u32,
    #[arg(long, default_value_t = 600, value_parser = clap::value_parser!(u32).range(1..))]
    height: u32,
    #[arg(long, value_enum, default_value_t = ColorArg::Grayscale)]
    color_mode: ColorArg,
    #[arg(long, value_enum, default_value_t = AxisArg::Index)]
    axis_order: AxisArg,
    #[arg(long, default_value_t = 0.15, value_parser = parse_darkness)]
    min_darkness: f64,
    #[arg(long, default_value = "Node.{rank}_{name}")]
    label_format: String,
}

impl StyleArgs {
    fn options(&self) -> RenderOptions {
        RenderOptions {
            width: self.width,
            height: self.height,
            color_mode: match self.color_mode {
                ColorArg::Grayscale => ColorMode::Grayscale,
                ColorArg::Viridis => ColorMode::Viridis,
            },
            axis_order: match self.axis_order {
                AxisArg::Index => AxisOrder::ByIndex,
                AxisArg::Frequency => AxisOrder::ByFrequency,
            },
            min_darkness: self.min_darkness,
            label_format: self.label_format.clone(),
        }
    }
}

#[derive(Args, Debug)]
struct PcpArgs {
    #[command(flatten)]
    select: SelectArgs,
    #[command(flatten)]
    style: StyleArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SankeyArgs {
    #[command(flatten)]
    select: SelectArgs,
    #[command(flatten)]
    style: StyleArgs,
    /// Replacement viewer script to inline instead of the built-in one.
    #[arg(long)]
    viewer: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ImportanceArgs {
    #[arg(long)]
    forest: PathBuf,
    /// Training data; enables permutation importance.
    #[arg(long, requires = "response")]
    data: Option<PathBuf>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Metric to sort and plot by; permutation needs --data.
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    #[command(flatten)]
    style: StyleArgs,
    /// Optional JSON file for the full report.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExportTreeArgs {
    #[arg(long)]
    forest: PathBuf,
    /// Zero-based tree index.
    #[arg(long, default_value_t = 0)]
    tree: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_rank(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(r) if r >= 1 => Ok(r),
        _ => Err(format!("expected an integer >= 1, got {s:?}")),
    }
}

fn parse_unit(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a number in [0, 1], got {s:?}")),
    }
}

fn parse_darkness(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a number in [0, 1), got {s:?}")),
    }
}

/// Failure with its exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Runs the command line `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let mut buf = Vec::new();
    let result = thread_pool().and_then(|pool| pool.install(|| execute(cli.command, &mut buf)));
    let _ = out.write_all(&buf);
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "forestflow: error: {}", f.message());
            f.code()
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n = v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(runtime)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Train(a) => train(a, out),
        Command::Tune(a) => tune(a, out),
        Command::Ingest(a) => ingest(a, out),
        Command::Flows(a) => flows(a, out),
        Command::RenderPcp(a) => render_pcp(a, out),
        Command::RenderSankey(a) => render_sankey(a, out),
        Command::Importance(a) => importance(a, out),
        Command::ExportTree(a) => export_tree(a, out),
    }
}

fn summary(out: &mut dyn Write, fields: &[(&str, String)]) -> Result<(), Failure> {
    let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(out, "forestflow: {}", body.join(" ")).map_err(runtime)
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn config(args: &ForestConfigArgs, mtry: usize) -> RFConfig {
    RFConfig {
        n_trees: args.n_trees as usize,
        mtry,
        min_node_size: args.min_node_size as usize,
        max_nodes: args.max_nodes.map(|m| m as usize),
        seed: args.seed,
        bootstrap_size: None,
    }
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let data = forest_io::read_dataset(&a.data.data, &a.data.response).map_err(runtime)?;
    let p = data.n_covariates();
    let mtry = a.mtry.map_or(default_mtry(p), |m| m as usize);
    if mtry > p {
        return Err(Failure::Usage(format!("--mtry {mtry} exceeds the {p} covariates")));
    }
    let cfg = config(&a.config, mtry);
    let forest = train_forest(&data, &cfg).map_err(runtime)?;
    let accuracy = oob_accuracy(&forest, &data).map_err(runtime)?;
    forest_io::write_forest(&forest, &a.out).map_err(runtime)?;
    summary(
        out,
        &[
            ("command", "train".into()),
            ("seed", cfg.seed.to_string()),
            ("n_trees", cfg.n_trees.to_string()),
            ("mtry", mtry.to_string()),
            ("rows", data.n_rows().to_string()),
            ("oob_accuracy", format!("{accuracy:.4}")),
            ("out", show(&a.out)),
        ],
    )
}

fn default_candidates(p: usize) -> Vec<usize> {
    let mut c: Vec<usize> = std::iter::successors(Some(1usize), |m| Some(m * 2))
        .take_while(|&m| m <= p)
        .collect();
    c.push(default_mtry(p));
    c.sort_unstable();
    c.dedup();
    c
}

fn tune(a: TuneArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let data = forest_io::read_dataset(&a.data.data, &a.data.response).map_err(runtime)?;
    let p = data.n_covariates();
    let candidates = if a.candidates.is_empty() {
        default_candidates(p)
    } else {
        a.candidates.clone()
    };
    if let Some(bad) = candidates.iter().find(|&&m| m == 0 || m > p) {
        return Err(Failure::Usage(format!("mtry candidate {bad} is outside 1..={p}")));
    }
    let cfg = config(&a.config, default_mtry(p));
    let result = tune_mtry(&data, &candidates, a.folds as usize, &cfg).map_err(runtime)?;
    if let Some(path) = &a.out {
        let mut text = serde_json::to_string_pretty(&result).map_err(runtime)?;
        text.push('\n');
        crate::write_atomic(path, text.as_bytes()).map_err(|e| runtime(format!("{}: {e}", show(path))))?;
    }
    for (mtry, acc) in &result.scores {
        summary(
            out,
            &[("mtry", mtry.to_string()), ("cv_accuracy", format!("{acc:.4}"))],
        )?;
    }
    let mut fields = vec![
        ("command", "tune".to_string()),
        ("seed", cfg.seed.to_string()),
        ("folds", a.folds.to_string()),
        ("selected_mtry", result.selected_mtry.to_string()),
    ];
    if let Some(path) = &a.out {
        fields.push(("out", show(path)));
    }
    summary(out, &fields)
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let options = NodeTableOptions { strict: a.strict };
    let forest = forest_io::read_node_tables(&a.tables, &a.covariates, &a.classes, options)
        .map_err(runtime)?;
    forest_io::write_forest(&forest, &a.out).map_err(runtime)?;
    summary(
        out,
        &[
            ("command", "ingest".into()),
            ("n_trees", forest.n_trees().to_string()),
            ("out", show(&a.out)),
        ],
    )
}

/// Loads the forest and checks the class before anything is written.
fn select(s: &SelectArgs) -> Result<(ForestModel, FlowDocument), Failure> {
    let forest = forest_io::read_forest(&s.forest).map_err(runtime)?;
    if let Some(c) = &s.class {
        if forest.class_index(c).is_none() {
            return Err(Failure::Usage(format!(
                "unknown class {c:?}; valid classes: {}",
                forest.class_names.join(", ")
            )));
        }
    }
    let doc = FlowDocument::build(&forest, s.max_rank, s.class.as_deref(), s.threshold)
        .map_err(runtime)?;
    Ok((forest, doc))
}

fn flow_fields(s: &SelectArgs, doc: &FlowDocument) -> Vec<(&'static str, String)> {
    vec![
        ("max_rank", s.max_rank.to_string()),
        ("class", s.class.clone().unwrap_or_else(|| "all".into())),
        ("threshold", s.threshold.to_string()),
        ("n_trees", doc.n_trees.to_string()),
        ("paths", doc.total_paths().to_string()),
    ]
}

fn flows(a: FlowArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (_, doc) = select(&a.select)?;
    crate::write_atomic(&a.out, doc.to_json().as_bytes())
        .map_err(|e| runtime(format!("{}: {e}", show(&a.out))))?;
    let view = doc.view().map_err(runtime)?;
    let mut fields = vec![("command", "flows".to_string())];
    fields.extend(flow_fields(&a.select, &doc));
    fields.push(("groups", view.group_totals().len().to_string()));
    fields.push(("edges", view.edge_weights().len().to_string()));
    fields.push(("out", show(&a.out)));
    summary(out, &fields)
}

fn render_pcp(a: PcpArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (_, doc) = select(&a.select)?;
    let view = doc.view().map_err(runtime)?;
    render::render_pcp(&view, &a.style.options(), &a.out).map_err(runtime)?;
    let mut fields = vec![("command", "render-pcp".to_string())];
    fields.extend(flow_fields(&a.select, &doc));
    fields.push(("out", show(&a.out)));
    summary(out, &fields)
}

fn render_sankey(a: SankeyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let viewer = match &a.viewer {
        Some(p) => ViewerBundle::from_path(p),
        None => ViewerBundle::embedded(),
    }
    .map_err(runtime)?;
    let (_, doc) = select(&a.select)?;
    render::render_sankey_doc_with(&doc, &a.style.options(), &viewer, &a.out).map_err(runtime)?;
    let mut fields = vec![("command", "render-sankey".to_string())];
    fields.extend(flow_fields(&a.select, &doc));
    fields.push(("out", show(&a.out)));
    summary(out, &fields)
}

fn importance(a: ImportanceArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let metric = match (a.metric, &a.data) {
        (Some(MetricArg::Permutation), None) => {
            return Err(Failure::Usage("--metric permutation needs --data".into()))
        }
        (Some(MetricArg::Impurity), _) | (None, None) => ImportanceMetric::Impurity,
        (Some(MetricArg::Permutation), Some(_)) | (None, Some(_)) => ImportanceMetric::Permutation,
    };
    let forest = forest_io::read_forest(&a.forest).map_err(runtime)?;
    let impurity = impurity_importance(&forest);
    let permutation = match (&a.data, &a.response) {
        (Some(path), Some(response)) => {
            let data = forest_io::read_dataset_with(path, response, &forest.covariate_names)
                .map_err(runtime)?;
            Some(permutation_importance(&forest, &data, a.repeats as usize, a.seed).map_err(runtime)?)
        }
        _ => None,
    };
    let report = ImportanceReport::from_parts(&forest.covariate_names, &impurity, permutation.as_deref());
    if let Some(path) = &a.report {
        let mut text = serde_json::to_string_pretty(&report).map_err(runtime)?;
        text.push('\n');
        crate::write_atomic(path, text.as_bytes()).map_err(|e| runtime(format!("{}: {e}", show(path))))?;
    }
    render::render_importance_chart(&report, metric, &a.style.options(), &a.out).map_err(runtime)?;
    let top: Vec<&str> = report
        .ranking(metric)
        .into_iter()
        .take(5)
        .map(|j| report.covariates[j].covariate.as_str())
        .collect();
    summary(
        out,
        &[
            ("command", "importance".into()),
            (
                "metric",
                match metric {
                    ImportanceMetric::Impurity => "impurity".into(),
                    ImportanceMetric::Permutation => "permutation".into(),
                },
            ),
            ("top", top.join(",")),
            ("out", show(&a.out)),
        ],
    )
}

fn export_tree(a: ExportTreeArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let forest = forest_io::read_forest(&a.forest).map_err(runtime)?;
    let tree = forest.trees.get(a.tree).ok_or_else(|| {
        Failure::Usage(format!(
            "--tree {} out of range; the forest has {} trees",
            a.tree,
            forest.n_trees()
        ))
    })?;
    render::export_tree_graph(tree, &forest.covariate_names, &forest.class_names, &a.out)
        .map_err(runtime)?;
    summary(
        out,
        &[
            ("command", "export-tree".into()),
            ("tree", a.tree.to_string()),
            ("nodes", tree.len().to_string()),
            ("out", show(&a.out)),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parser_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn candidate_defaults() {
        assert_eq!(default_candidates(36), vec![1, 2, 4, 6, 8, 16, 32]);
        assert_eq!(default_candidates(1), vec![1]);
    }

    #[test]
    fn exit_codes_for_usage() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["forestflow", "frobnicate"], &mut o, &mut e), 2);
        assert_eq!(
            run_with(["forestflow", "flows", "--forest", "f", "--threshold", "2", "--out", "x"], &mut o, &mut e),
            2
        );
        assert_eq!(run_with(["forestflow", "--help"], &mut o, &mut e), 0);
        assert_eq!(
            run_with(["forestflow", "flows", "--forest", "/nonexistent/f", "--out", "/tmp/x"], &mut o, &mut e),
            1
        );
    }
}
