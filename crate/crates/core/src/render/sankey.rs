use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::svg::{escape, num, Svg};
use super::{label_name, write, ColorMode, RenderError, RenderOptions};
use crate::flow::{FlowAggregate, FlowDocument, GroupLabel, RankedGroup};

const NODE_WIDTH: f64 = 14.0;
const PADDING: f64 = 10.0;
const MARGIN_X: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SankeyBlock {
    pub group: RankedGroup,
    pub total: u64,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SankeyLink {
    pub from: RankedGroup,
    pub to: RankedGroup,
    pub weight: u64,
    /// Ribbon thickness; the same scale as block heights.
    pub thickness: f64,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl SankeyLink {
    /// Closed ribbon outline between the two block edges.
    pub fn path(&self) -> String {
        let xm = (self.x0 + self.x1) / 2.0;
        let t = self.thickness;
        format!(
            "M{x0},{y0}C{xm},{y0} {xm},{y1} {x1},{y1}L{x1},{y1t}C{xm},{y1t} {xm},{y0t} {x0},{y0t}Z",
            x0 = num(self.x0),
            y0 = num(self.y0),
            x1 = num(self.x1),
            y1 = num(self.y1),
            xm = num(xm),
            y0t = num(self.y0 + t),
            y1t = num(self.y1 + t),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SankeyLayout {
    pub width: f64,
    pub height: f64,
    /// Path count to pixels, shared by all columns.
    pub scale: f64,
    pub blocks: Vec<SankeyBlock>,
    pub links: Vec<SankeyLink>,
}

/// Column-per-rank layout. Within a column blocks run top to bottom by
/// descending total (ties by covariate index) with `Terminus` last; block
/// heights and link widths share one scale.
pub fn sankey_layout(agg: &FlowAggregate, opts: &RenderOptions) -> Result<SankeyLayout, RenderError> {
    opts.validate()?;
    let (w, h) = (opts.width as f64, opts.height as f64);
    let names = agg.covariate_names();

    let mut columns: BTreeMap<usize, Vec<(RankedGroup, u64)>> = BTreeMap::new();
    for (&g, &t) in agg.group_totals() {
        columns.entry(g.rank).or_default().push((g, t));
    }
    let last_rank = *columns.keys().next_back().unwrap_or(&1);
    for col in columns.values_mut() {
        col.sort_by(|a, b| {
            let term = |g: &RankedGroup| g.label == GroupLabel::Terminus;
            term(&a.0)
                .cmp(&term(&b.0))
                .then(b.1.cmp(&a.1))
                .then(a.0.cmp(&b.0))
        });
    }

    let inner_h = (h - MARGIN_TOP - MARGIN_BOTTOM).max(1.0);
    let most = columns.values().map(Vec::len).max().unwrap_or(1);
    let pad = if most > 1 {
        PADDING.min(0.5 * inner_h / (most - 1) as f64)
    } else {
        0.0
    };
    let scale = columns
        .values()
        .map(|col| {
            let sum: u64 = col.iter().map(|(_, t)| t).sum();
            (inner_h - pad * (col.len() - 1) as f64) / sum.max(1) as f64
        })
        .fold(f64::INFINITY, f64::min);
    let scale = if scale.is_finite() { scale } else { 0.0 };

    let x_step = if last_rank > 1 {
        (w - 2.0 * MARGIN_X - NODE_WIDTH) / (last_rank - 1) as f64
    } else {
        0.0
    };
    let mut blocks = Vec::new();
    let mut index = BTreeMap::new();
    for (&rank, col) in &columns {
        let mut y = MARGIN_TOP;
        for &(g, t) in col {
            let height = t as f64 * scale;
            index.insert(g, blocks.len());
            blocks.push(SankeyBlock {
                group: g,
                total: t,
                x: MARGIN_X + (rank - 1) as f64 * x_step,
                y,
                width: NODE_WIDTH,
                height,
                label: opts.group_label(rank, label_name(names, g.label)),
            });
            y += height + pad;
        }
    }

    // Stack ribbons inside each block in the order of the blocks at the
    // other end, so they do not cross needlessly.
    let mut links: Vec<SankeyLink> = agg
        .edges()
        .map(|e| {
            let (a, b) = (&blocks[index[&e.from]], &blocks[index[&e.to]]);
            SankeyLink {
                from: e.from,
                to: e.to,
                weight: e.weight,
                thickness: e.weight as f64 * scale,
                x0: a.x + a.width,
                y0: 0.0,
                x1: b.x,
                y1: 0.0,
            }
        })
        .collect();
    let mut out_order: Vec<usize> = (0..links.len()).collect();
    out_order.sort_by_key(|&i| (index[&links[i].from], index[&links[i].to]));
    let mut offset = vec![0.0; blocks.len()];
    for i in out_order {
        let s = index[&links[i].from];
        links[i].y0 = blocks[s].y + offset[s];
        offset[s] += links[i].thickness;
    }
    let mut in_order: Vec<usize> = (0..links.len()).collect();
    in_order.sort_by_key(|&i| (index[&links[i].to], index[&links[i].from]));
    let mut offset = vec![0.0; blocks.len()];
    for i in in_order {
        let t = index[&links[i].to];
        links[i].y1 = blocks[t].y + offset[t];
        offset[t] += links[i].thickness;
    }

    Ok(SankeyLayout {
        width: w,
        height: h,
        scale,
        blocks,
        links,
    })
}

fn group_key(g: RankedGroup) -> String {
    match g.label {
        GroupLabel::Terminus => format!("{}:T", g.rank),
        GroupLabel::Covariate(c) => format!("{}:{c}", g.rank),
    }
}

fn block_color(mode: ColorMode, label: GroupLabel, n_covariates: usize) -> String {
    match (mode, label) {
        (_, GroupLabel::Terminus) => "#2b2b2b".into(),
        (ColorMode::Grayscale, _) => "#6b6b6b".into(),
        (ColorMode::Viridis, GroupLabel::Covariate(c)) => {
            let span = n_covariates.saturating_sub(1).max(1) as f64;
            mode.shade(0.15 + 0.7 * (1.0 - c as f64 / span))
        }
    }
}

fn sankey_svg(agg: &FlowAggregate, layout: &SankeyLayout, opts: &RenderOptions) -> String {
    let names = agg.covariate_names();
    let p = names.len();
    let total = agg.total_paths().max(1) as f64;
    let mut svg = Svg::new(opts.width, opts.height);
    svg.raw("<g class=\"links\" fill-opacity=\"0.45\">\n");
    for l in &layout.links {
        let title = format!(
            "{} (Node {}) → {} (Node {}): {} paths ({}%)",
            label_name(names, l.from.label),
            l.from.rank,
            label_name(names, l.to.label),
            l.to.rank,
            l.weight,
            num(100.0 * l.weight as f64 / total)
        );
        let _ = writeln!(
            svg,
            "<path class=\"link\" data-from=\"{}\" data-to=\"{}\" data-weight=\"{}\" fill=\"{}\" d=\"{}\"><title>{}</title></path>",
            group_key(l.from),
            group_key(l.to),
            l.weight,
            block_color(opts.color_mode, l.from.label, p),
            l.path(),
            escape(&title)
        );
    }
    svg.raw("</g>\n<g class=\"blocks\">\n");
    let last_x = layout.blocks.iter().map(|b| b.x).fold(0.0, f64::max);
    for b in &layout.blocks {
        let _ = writeln!(
            svg,
            "<rect class=\"block\" data-group=\"{}\" data-total=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{}: {} paths</title></rect>",
            group_key(b.group),
            b.total,
            num(b.x),
            num(b.y),
            num(b.width),
            num(b.height),
            block_color(opts.color_mode, b.group.label, p),
            escape(&b.label),
            b.total
        );
        let right = b.x < last_x || layout.blocks.len() == 1;
        let (tx, anchor) = if right {
            (b.x + b.width + 4.0, "start")
        } else {
            (b.x - 4.0, "end")
        };
        svg.text(tx, b.y + b.height / 2.0 + 4.0, anchor, &b.label);
    }
    svg.raw("</g>\n");
    svg.finish()
}

/// Script that drives hovering, filtering and class selection in the page.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewerBundle(String);

impl ViewerBundle {
    /// The bundle compiled into this library.
    pub fn embedded() -> Result<Self, RenderError> {
        let js = include_str!("../../assets/viewer.js");
        if js.trim().is_empty() {
            return Err(RenderError::MissingViewer(PathBuf::from("assets/viewer.js")));
        }
        Ok(Self(js.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, RenderError> {
        match std::fs::read_to_string(path) {
            Ok(js) if !js.trim().is_empty() => Ok(Self(js)),
            _ => Err(RenderError::MissingViewer(path.to_path_buf())),
        }
    }

    pub fn source(&self) -> &str {
        &self.0
    }
}

const STYLE: &str = "body{font-family:sans-serif;margin:16px;color:#222}\
#ff-header{font-size:15px;margin-bottom:8px}\
#ff-controls{margin-bottom:8px;font-size:13px}\
#ff-controls label{margin-right:12px}\
#ff-error{color:#a00;border:1px solid #a00;padding:8px}\
#ff-caption{font-size:12px;color:#555;margin-top:6px}\
#ff-tooltip{position:fixed;pointer-events:none;background:#fff;border:1px solid #888;padding:4px 6px;font-size:12px}\
.link.hl{fill-opacity:0.9}.link.dim{fill-opacity:0.12}";

fn caption(doc: &FlowDocument, agg: &FlowAggregate) -> String {
    match agg.threshold() {
        Some(t) if t.theta > 0.0 => {
            let parts: Vec<String> = t
                .removed_fraction
                .iter()
                .enumerate()
                .map(|(r, f)| format!("Node {} {}%", r + 1, num(100.0 * f)))
                .collect();
            format!("theta {}: removed per rank: {}", num(t.theta), parts.join(", "))
        }
        _ => format!("theta 0: all paths shown (max rank {})", doc.max_rank),
    }
}

/// Self-contained page: header, inline SVG, the flow document as a JSON
/// data island (`id="flow-data"`) and the inlined viewer script.
pub fn sankey_html(
    doc: &FlowDocument,
    opts: &RenderOptions,
    viewer: &ViewerBundle,
) -> Result<String, RenderError> {
    let agg = doc.view()?;
    if agg.is_empty() {
        return Err(RenderError::Empty("flow aggregate has no groups"));
    }
    let layout = sankey_layout(&agg, opts)?;
    let class = doc.selection.class.as_deref().unwrap_or("all classes");
    let island = doc.to_json().replace("</", "<\\/");
    let script = viewer.source().replace("</script", "<\\/script");
    let mode = match opts.color_mode {
        ColorMode::Grayscale => "grayscale",
        ColorMode::Viridis => "viridis",
    };

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(html, "<title>forestflow: {} paths</title>", doc.total_paths());
    let _ = writeln!(html, "<style>{STYLE}</style>\n</head>\n<body>");
    let _ = writeln!(
        html,
        "<div id=\"ff-header\">Forest flows: <span id=\"ff-total\">{}</span> paths from {} trees, <span id=\"ff-class\">{}</span></div>",
        doc.total_paths(),
        doc.n_trees,
        escape(class)
    );
    html.push_str("<div id=\"ff-controls\"></div>\n<div id=\"ff-error\" hidden></div>\n");
    let _ = writeln!(
        html,
        "<div id=\"ff-chart\" data-width=\"{}\" data-height=\"{}\" data-color-mode=\"{mode}\" data-label-format=\"{}\">",
        opts.width,
        opts.height,
        escape(&opts.label_format)
    );
    html.push_str(&sankey_svg(&agg, &layout, opts));
    html.push_str("</div>\n");
    let _ = writeln!(html, "<div id=\"ff-caption\">{}</div>", escape(&caption(doc, &agg)));
    html.push_str("<div id=\"ff-tooltip\" hidden></div>\n");
    let _ = writeln!(
        html,
        "<script type=\"application/json\" id=\"flow-data\">\n{island}</script>"
    );
    let _ = writeln!(html, "<script>\n{script}</script>\n</body>\n</html>");
    Ok(html)
}

pub fn render_sankey_doc(doc: &FlowDocument, opts: &RenderOptions, path: &Path) -> Result<(), RenderError> {
    render_sankey_doc_with(doc, opts, &ViewerBundle::embedded()?, path)
}

pub fn render_sankey_doc_with(
    doc: &FlowDocument,
    opts: &RenderOptions,
    viewer: &ViewerBundle,
    path: &Path,
) -> Result<(), RenderError> {
    write(path, &sankey_html(doc, opts, viewer)?)
}

/// The JSON text of the `flow-data` island in a page built by [`sankey_html`].
pub fn extract_island(html: &str) -> Option<String> {
    let open = "<script type=\"application/json\" id=\"flow-data\">\n";
    let start = html.find(open)? + open.len();
    let len = html[start..].find("</script>")?;
    Some(html[start..start + len].replace("<\\/", "</"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::paths_fixtures::{five_node, stump};
    use crate::rf::{ForestModel, Tree};

    fn forest(trees: Vec<Tree>, names: &[&str]) -> ForestModel {
        ForestModel {
            trees,
            covariate_names: names.iter().map(|s| s.to_string()).collect(),
            class_names: vec!["c1".into(), "c2".into()],
            config: None,
            oob_indices: None,
        }
    }

    fn doc(f: &ForestModel) -> FlowDocument {
        FlowDocument::build(f, 5, None, 0.0).unwrap()
    }

    #[test]
    fn stump_layout_is_one_column_pair() {
        let d = doc(&forest(vec![stump(0, 0, 1)], &["x.17"]));
        let layout = sankey_layout(&d.view().unwrap(), &RenderOptions::default()).unwrap();
        assert_eq!(layout.blocks.len(), 2);
        assert_eq!(layout.links.len(), 1);
        assert_eq!(layout.blocks[0].label, "Node.1_x.17");
        assert_eq!(layout.blocks[1].label, "Node.2_Terminus");
        assert!(layout.blocks[1].x > layout.blocks[0].x);
        assert_eq!(layout.links[0].thickness, layout.blocks[0].height);
    }

    #[test]
    fn heights_proportional_to_totals() {
        // rank 1 holds A (3 paths) and B (1 path)
        let f = forest(
            vec![stump(0, 0, 1), stump(0, 0, 1), five_node()],
            &["A", "B"],
        );
        let agg = crate::flow::aggregate_flows(&f, 5, None).unwrap();
        let layout = sankey_layout(&agg, &RenderOptions::default()).unwrap();
        for b in &layout.blocks {
            assert!((b.height - b.total as f64 * layout.scale).abs() < 1e-9);
        }
        let col: Vec<_> = layout.blocks.iter().filter(|b| b.group.rank == 2).collect();
        assert_eq!(col.last().unwrap().group.label, GroupLabel::Terminus);
        // every column fits inside the canvas
        for b in &layout.blocks {
            assert!(b.y + b.height <= 600.0 - MARGIN_BOTTOM + 1e-9);
        }
    }

    #[test]
    fn ribbons_tile_their_blocks() {
        let f = forest(vec![five_node(), stump(1, 1, 0)], &["A", "B"]);
        let agg = crate::flow::aggregate_flows(&f, 5, None).unwrap();
        let layout = sankey_layout(&agg, &RenderOptions::default()).unwrap();
        for b in &layout.blocks {
            let out: f64 = layout.links.iter().filter(|l| l.from == b.group).map(|l| l.thickness).sum();
            if out > 0.0 {
                assert!((out - b.height).abs() < 1e-9);
            }
            for l in layout.links.iter().filter(|l| l.to == b.group) {
                assert!(l.y1 >= b.y - 1e-9 && l.y1 + l.thickness <= b.y + b.height + 1e-9);
            }
        }
    }

    #[test]
    fn page_embeds_island_and_viewer() {
        let d = doc(&forest(vec![stump(0, 0, 1)], &["x.17"]));
        let html = sankey_html(&d, &RenderOptions::default(), &ViewerBundle::embedded().unwrap()).unwrap();
        assert!(html.contains("id=\"flow-data\""));
        assert!(html.contains(">Node.1_x.17</text>"));
        let page = &html[..html.find("id=\"flow-data\"").unwrap()];
        assert_eq!(page.matches("<path class=\"link\"").count(), 1);
        assert!(!html.contains("src=\"http"));
        let island = extract_island(&html).unwrap();
        assert_eq!(FlowDocument::from_json(&island).unwrap(), d);
    }

    #[test]
    fn island_cannot_close_its_script() {
        let d = doc(&forest(vec![stump(0, 0, 1)], &["</script>"]));
        let html = sankey_html(&d, &RenderOptions::default(), &ViewerBundle::embedded().unwrap()).unwrap();
        let island = extract_island(&html).unwrap();
        assert_eq!(FlowDocument::from_json(&island).unwrap(), d);
        assert_eq!(html.matches("</script>").count(), 2);
    }

    #[test]
    fn missing_viewer_is_an_error() {
        let err = ViewerBundle::from_path(Path::new("/nonexistent/viewer.js")).unwrap_err();
        assert!(matches!(err, RenderError::MissingViewer(_)));
    }
}
