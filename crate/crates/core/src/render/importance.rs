use std::path::Path;

use super::svg::{num, Svg};
use super::{write, RenderError, RenderOptions};
use crate::rf::{ImportanceMetric, ImportanceReport};

const LABEL_WIDTH: f64 = 110.0;
const MARGIN: f64 = 20.0;
const AXIS_SPACE: f64 = 40.0;

/// Dot chart of one importance metric, most important covariate on top.
pub fn importance_svg(
    report: &ImportanceReport,
    metric: ImportanceMetric,
    opts: &RenderOptions,
) -> Result<String, RenderError> {
    opts.validate()?;
    if report.covariates.is_empty() {
        return Err(RenderError::Empty("importance report has no covariates"));
    }
    if metric == ImportanceMetric::Permutation
        && report.covariates.iter().any(|c| c.permutation_importance.is_none())
    {
        return Err(RenderError::Empty("report has no permutation importance"));
    }
    let order = report.ranking(metric);
    let values: Vec<f64> = order
        .iter()
        .map(|&j| report.value(j, metric).unwrap_or(0.0))
        .collect();
    let lo = values.iter().copied().fold(0.0, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let (w, h) = (opts.width as f64, opts.height as f64);
    let x0 = MARGIN + LABEL_WIDTH;
    let x1 = w - MARGIN;
    let x_of = |v: f64| x0 + (v - lo) / span * (x1 - x0);
    let plot_bottom = h - AXIS_SPACE;
    let row_h = (plot_bottom - MARGIN) / order.len() as f64;

    let mut svg = Svg::new(opts.width, opts.height);
    svg.raw("<g class=\"axes\" stroke=\"#999999\" stroke-width=\"1\">\n");
    svg.line(x0, plot_bottom, x1, plot_bottom, "");
    svg.line(x_of(0.0), MARGIN, x_of(0.0), plot_bottom, "stroke-dasharray=\"3,3\"");
    svg.raw("</g>\n<g class=\"labels\" fill=\"#333333\">\n");
    svg.text(x0, plot_bottom + 16.0, "start", &num(lo));
    svg.text(x1, plot_bottom + 16.0, "end", &num(hi));
    let title = match metric {
        ImportanceMetric::Impurity => "Mean decrease in Gini impurity",
        ImportanceMetric::Permutation => "Mean decrease in OOB accuracy",
    };
    svg.text((x0 + x1) / 2.0, plot_bottom + 32.0, "middle", title);
    svg.raw("</g>\n<g class=\"rows\">\n");
    for (i, (&j, &v)) in order.iter().zip(&values).enumerate() {
        let y = MARGIN + (i as f64 + 0.5) * row_h;
        svg.line(x0, y, x1, y, "stroke=\"#eeeeee\"");
        svg.text(x0 - 8.0, y + 4.0, "end", &report.covariates[j].covariate);
        svg.circle(
            x_of(v),
            y,
            4.0,
            &format!("fill=\"#222222\" data-covariate=\"{j}\" data-value=\"{v:e}\""),
        );
    }
    svg.raw("</g>\n");
    Ok(svg.finish())
}

pub fn render_importance_chart(
    report: &ImportanceReport,
    metric: ImportanceMetric,
    opts: &RenderOptions,
    path: &Path,
) -> Result<(), RenderError> {
    write(path, &importance_svg(report, metric, opts)?)
}
