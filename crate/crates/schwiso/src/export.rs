//! CSV, JSON and SVG writers. CSV is the canonical tabular format; every
//! float is printed with 17 significant digits so that identical runs are
//! byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::equilibria::EmPoint;
use crate::error::{Error, Result};
use crate::flow::{Chart, Trajectory};
use crate::orbits::{CurvePoint, FateJob, FateReport};

/// 17-significant-digit float, enough to round-trip every f64.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Column layout of a trajectory CSV: the chart's evolution parameter
/// followed by its state components.
fn chart_header(chart: Chart) -> &'static str {
    match chart {
        Chart::Reduced => "t,R,z,P_R,P_z",
        Chart::McGehee => "tau,r,v,theta,u",
        Chart::Regularized => "sigma,r,v,theta,w",
        Chart::Collision => "sigma,v,theta,w",
        Chart::Planar => "tau,r,v",
        Chart::Profile => "theta,v",
    }
}

/// Writes the recorded samples of a trajectory as CSV.
pub fn write_csv_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", chart_header(traj.chart))?;
    for s in &traj.samples {
        let mut row = fmt(s.param);
        for x in &s.state {
            row.push(',');
            row.push_str(&fmt(*x));
        }
        writeln!(out, "{row}")?;
    }
    Ok(out.flush()?)
}

/// Writes an energy-momentum sweep as CSV with one (R, C, h, branch) row
/// per sampled equilibrium.
pub fn write_csv_em(path: &Path, points: &[EmPoint]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "R,C,h,branch")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{:?}",
            fmt(p.R),
            fmt(p.C),
            fmt(p.h),
            p.branch
        )?;
    }
    Ok(out.flush()?)
}

/// Writes a family of planar phase curves sharing one radius grid. Columns
/// are r followed by +-v per energy; radii outside a level set leave the
/// cells empty.
pub fn write_csv_curves(path: &Path, curves: &[(f64, Vec<CurvePoint>)]) -> Result<()> {
    let n = curves.first().map_or(0, |(_, c)| c.len());
    if curves.iter().any(|(_, c)| c.len() != n) {
        return Err(Error::Domain(
            "planar curves must share one radius grid".into(),
        ));
    }
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = String::from("r");
    for (h, _) in curves {
        header.push_str(&format!(",v_plus(h={h}),v_minus(h={h})"));
    }
    writeln!(out, "{header}")?;
    for i in 0..n {
        let mut row = fmt(curves[0].1[i].r);
        for (_, curve) in curves {
            let v = curve[i].v;
            row.push(',');
            row.push_str(&opt(v));
            row.push(',');
            row.push_str(&opt(v.map(|x| -x)));
        }
        writeln!(out, "{row}")?;
    }
    Ok(out.flush()?)
}

/// Writes fate reports as CSV, one row per job, inputs first.
pub fn write_csv_fates(path: &Path, jobs: &[FateJob], reports: &[FateReport]) -> Result<()> {
    if jobs.len() != reports.len() {
        return Err(Error::Domain(format!(
            "{} jobs against {} reports",
            jobs.len(),
            reports.len()
        )));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "index,C,h,r0,v0,theta0,w0,fate,limiting_theta,winding,plane_crossings,double_r,\
         steps,stop,max_residual,terminal_chart,terminal_r,terminal_v,terminal_theta,\
         terminal_w,r_max_increase,v_max_increase,crossings_last_decade"
    )?;
    for (i, (job, rep)) in jobs.iter().zip(reports).enumerate() {
        let d = &rep.diagnostics;
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{},{},{},{},{:?},{},{:?},{},{},{},{},{},{},{}",
            fmt(job.C),
            fmt(job.h),
            fmt(job.state0.r),
            fmt(job.state0.v),
            fmt(job.state0.theta),
            fmt(job.state0.w),
            rep.fate,
            opt(rep.limiting_theta),
            fmt(rep.winding),
            rep.plane_crossings,
            opt(rep.double_r),
            d.steps,
            d.stop,
            fmt(d.max_residual),
            d.terminal_chart,
            fmt(d.terminal_state.r),
            fmt(d.terminal_state.v),
            fmt(d.terminal_state.theta),
            fmt(d.terminal_state.w),
            fmt(d.r_max_increase),
            fmt(d.v_max_increase),
            d.crossings_last_decade
        )?;
    }
    Ok(out.flush()?)
}

/// Writes any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(out.flush()?)
}

/// One labelled polyline of an SVG plot.
#[derive(Debug, Clone)]
pub struct SvgSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 600.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Writes a minimal SVG plot: axes with end labels plus one polyline per
/// series. Non-finite points are skipped.
pub fn write_svg(path: &Path, title: &str, series: &[SvgSeries]) -> Result<()> {
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (x, y) in finite {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
    }
    if !(x_min.is_finite() && x_min < x_max) {
        let c = if x_min.is_finite() { x_min } else { 0.0 };
        x_min = c - 0.5;
        x_max = c + 0.5;
    }
    if !(y_min.is_finite() && y_min < y_max) {
        let c = if y_min.is_finite() { y_min } else { 0.0 };
        y_min = c - 0.5;
        y_max = c + 0.5;
    }
    let px = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (SVG_W - 2.0 * MARGIN);
    let py = |y: f64| SVG_H - MARGIN - (y - y_min) / (y_max - y_min) * (SVG_H - 2.0 * MARGIN);

    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    )?;
    writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{title}</text>",
        SVG_W / 2.0
    )?;
    // Axes along the data bounds with the extreme values as tick labels.
    writeln!(
        out,
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000\"/>\
         <line x1=\"{0}\" y1=\"{3}\" x2=\"{0}\" y2=\"{1}\" stroke=\"#000\"/>",
        px(x_min),
        py(y_min),
        px(x_max),
        py(y_max)
    )?;
    for (x, anchor) in [(x_min, "start"), (x_max, "end")] {
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" \
             font-size=\"12\">{x:.4}</text>",
            px(x),
            py(y_min) + 18.0
        )?;
    }
    for y in [y_min, y_max] {
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"12\">{y:.4}</text>",
            px(x_min) - 6.0,
            py(y) + 4.0
        )?;
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        if pts.len() > 1 {
            writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
                 points=\"{}\"/>",
                pts.join(" ")
            )?;
        }
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"{color}\">{}</text>",
            SVG_W - MARGIN + 6.0,
            MARGIN + 16.0 * i as f64,
            s.label
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(out.flush()?)
}
