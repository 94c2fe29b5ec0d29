use std::collections::BTreeMap;
use std::path::Path;

use super::svg::{num, Svg};
use super::{darkness, label_name, write, AxisOrder, RenderError, RenderOptions};
use crate::flow::{FlowAggregate, GroupLabel};

const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Gradations bottom to top: `Terminus` first, then every covariate.
fn gradations(agg: &FlowAggregate, order: AxisOrder) -> Vec<GroupLabel> {
    let p = agg.covariate_names().len();
    let mut covs: Vec<usize> = (0..p).collect();
    if order == AxisOrder::ByFrequency {
        let mut freq = vec![0u64; p];
        for (g, t) in agg.group_totals() {
            if let GroupLabel::Covariate(c) = g.label {
                freq[c] += t;
            }
        }
        covs.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    }
    std::iter::once(GroupLabel::Terminus)
        .chain(covs.into_iter().map(GroupLabel::Covariate))
        .collect()
}

/// Parallel-coordinates plot: one axis per rank, one segment per edge.
pub fn pcp_svg(agg: &FlowAggregate, opts: &RenderOptions) -> Result<String, RenderError> {
    opts.validate()?;
    if agg.is_empty() {
        return Err(RenderError::Empty("flow aggregate has no groups"));
    }
    let (w, h) = (opts.width as f64, opts.height as f64);
    let ranks = agg.max_rank();
    let grads = gradations(agg, opts.axis_order);
    let names = agg.covariate_names();

    let x_step = if ranks > 1 {
        (w - MARGIN_LEFT - MARGIN_RIGHT) / (ranks - 1) as f64
    } else {
        0.0
    };
    let axis_x = |rank: usize| MARGIN_LEFT + (rank - 1) as f64 * x_step;
    let bottom = h - MARGIN_BOTTOM;
    let y_step = if grads.len() > 1 {
        (bottom - MARGIN_TOP) / (grads.len() - 1) as f64
    } else {
        0.0
    };
    let pos: BTreeMap<GroupLabel, f64> = grads
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, bottom - i as f64 * y_step))
        .collect();

    let mut svg = Svg::new(opts.width, opts.height);
    svg.raw("<g class=\"axes\" stroke=\"#999999\" stroke-width=\"1\">\n");
    for r in 1..=ranks {
        let x = axis_x(r);
        svg.line(x, MARGIN_TOP, x, bottom, "");
        for &y in pos.values() {
            svg.line(x - 3.0, y, x + 3.0, y, "");
        }
    }
    svg.raw("</g>\n<g class=\"labels\" fill=\"#333333\">\n");
    for r in 1..=ranks {
        svg.text(axis_x(r), bottom + 24.0, "middle", &format!("Node {r}"));
    }
    for (&label, &y) in &pos {
        svg.text(MARGIN_LEFT - 8.0, y + 4.0, "end", label_name(names, label));
    }
    svg.raw("</g>\n");

    let max_w = agg.edges().map(|e| e.weight).max().unwrap_or(0);
    let mut segments: Vec<_> = agg
        .edges()
        .map(|e| (darkness(e.weight, max_w, opts.min_darkness), e))
        .collect();
    // darkest drawn last so frequent paths stay on top
    segments.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = agg.total_paths().max(1) as f64;
    svg.raw("<g class=\"edges\" stroke-width=\"2\" stroke-linecap=\"round\">\n");
    for (d, e) in segments {
        let attrs = format!(
            "stroke=\"{}\" data-weight=\"{}\" data-darkness=\"{}\"",
            opts.color_mode.shade(d),
            e.weight,
            num(d)
        );
        let title = format!(
            "{} (Node {}) → {} (Node {}): {} paths ({}%)",
            label_name(names, e.from.label),
            e.from.rank,
            label_name(names, e.to.label),
            e.to.rank,
            e.weight,
            num(100.0 * e.weight as f64 / total)
        );
        svg.titled_line(
            axis_x(e.from.rank),
            pos[&e.from.label],
            axis_x(e.to.rank),
            pos[&e.to.label],
            &attrs,
            &title,
        );
    }
    svg.raw("</g>\n");
    Ok(svg.finish())
}

pub fn render_pcp(agg: &FlowAggregate, opts: &RenderOptions, path: &Path) -> Result<(), RenderError> {
    write(path, &pcp_svg(agg, opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::aggregate_flows;
    use crate::flow::paths_fixtures::{five_node, stump};
    use crate::rf::ForestModel;

    fn agg(trees: Vec<crate::rf::Tree>) -> FlowAggregate {
        let f = ForestModel {
            trees,
            covariate_names: vec!["A".into(), "B".into()],
            class_names: vec!["c1".into(), "c2".into()],
            config: None,
            oob_indices: None,
        };
        aggregate_flows(&f, 5, None).unwrap()
    }

    #[test]
    fn stump_has_one_full_dark_segment() {
        let svg = pcp_svg(&agg(vec![stump(0, 0, 1)]), &RenderOptions::default()).unwrap();
        assert_eq!(svg.matches("data-weight=").count(), 1);
        assert!(svg.contains("stroke=\"#000000\" data-weight=\"2\" data-darkness=\"1\""));
        // axis 1 at the A gradation (middle), axis 2 at Terminus (bottom)
        assert!(svg.contains("<line x1=\"90\" y1=\"290\" x2=\"300\" y2=\"550\""));
        for r in 1..=5 {
            assert!(svg.contains(&format!(">Node {r}</text>")));
        }
    }

    #[test]
    fn darkness_follows_weights() {
        let opts = RenderOptions {
            min_darkness: 0.0,
            ..RenderOptions::default()
        };
        let svg = pcp_svg(&agg(vec![five_node()]), &opts).unwrap();
        assert!(svg.contains("data-weight=\"2\" data-darkness=\"1\""));
        assert!(svg.contains("data-weight=\"1\" data-darkness=\"0.5\""));
        // lighter segment first
        assert!(svg.find("data-weight=\"1\"").unwrap() < svg.find("data-weight=\"2\"").unwrap());
    }

    #[test]
    fn frequency_order_moves_busy_covariates_down() {
        let a = agg(vec![stump(1, 0, 1)]);
        assert_eq!(
            gradations(&a, AxisOrder::ByFrequency),
            vec![GroupLabel::Terminus, GroupLabel::Covariate(1), GroupLabel::Covariate(0)]
        );
        assert_eq!(
            gradations(&a, AxisOrder::ByIndex),
            vec![GroupLabel::Terminus, GroupLabel::Covariate(0), GroupLabel::Covariate(1)]
        );
    }

    #[test]
    fn deterministic_and_rejects_empty() {
        let a = agg(vec![five_node(), stump(1, 1, 0)]);
        let o = RenderOptions::default();
        assert_eq!(pcp_svg(&a, &o).unwrap(), pcp_svg(&a, &o).unwrap());
        let empty = FlowAggregate::empty(5, None, vec!["A".into()]);
        assert!(matches!(pcp_svg(&empty, &o), Err(RenderError::Empty(_))));
    }
}
