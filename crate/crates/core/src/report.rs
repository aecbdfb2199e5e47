//! CSV and SVG emitters for ratings, grids, rank groups and active-learning results.

use std::fmt::Write as _;
use std::io::Write;

use crate::active::{ALSummary, ALTrace};
use crate::error::{Error, Result};
use crate::relrank::CombinedScore;
use crate::stats::{format_value, RankGroups};

pub const RATINGS_CSV_HEADER: [&str; 7] = ["id", "score", "nv", "fv", "rs", "ns", "stars"];
pub const RANK_GROUPS_CSV_HEADER: [&str; 5] = ["metric", "group", "rank_group", "method_ids", "representative_value"];
pub const TRACE_CSV_HEADER: [&str; 4] = ["run", "iteration", "screened", "found"];
pub const AL_AGGREGATE_CSV_HEADER: [&str; 6] = ["review", "runs", "total", "relevant", "mean_fraction", "max_fraction"];
pub const HISTOGRAM_CSV_HEADER: [&str; 4] = ["bin", "lower", "upper", "count"];

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn write_ratings_csv<W: Write>(scores: &[CombinedScore], stars: &[u8], out: W) -> Result<()> {
    if scores.len() != stars.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: stars.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATINGS_CSV_HEADER)?;
    for (s, st) in scores.iter().zip(stars) {
        w.write_record([
            s.id.clone(),
            format!("{}", s.score),
            s.nv.to_string(),
            format!("{}", s.fv),
            format!("{}", s.rs),
            format!("{}", s.ns),
            st.to_string(),
        ])?;
    }
    flush(w)
}

/// One row per rank group; `method_ids` is space-separated and rank groups are numbered from 1.
pub fn write_rank_groups_csv<W: Write>(sets: &[(String, RankGroups)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RANK_GROUPS_CSV_HEADER)?;
    for (group, rg) in sets {
        for (k, g) in rg.groups.iter().enumerate() {
            let ids: Vec<String> = g.methods.iter().map(u32::to_string).collect();
            let rep = g.representative.is_finite().then_some(g.representative);
            w.write_record([
                rg.metric.as_str().to_string(),
                group.clone(),
                (k + 1).to_string(),
                ids.join(" "),
                format_value(rep),
            ])?;
        }
    }
    flush(w)
}

pub fn write_traces_csv<W: Write>(traces: &[ALTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_CSV_HEADER)?;
    for (run, t) in traces.iter().enumerate() {
        for s in &t.steps {
            w.write_record([
                run.to_string(),
                s.iteration.to_string(),
                s.screened.to_string(),
                s.found.to_string(),
            ])?;
        }
    }
    flush(w)
}

pub fn write_al_aggregate_csv<W: Write>(rows: &[(String, &ALSummary)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AL_AGGREGATE_CSV_HEADER)?;
    for (name, s) in rows {
        let (total, relevant) = s.traces.first().map_or((0, 0), |t| (t.total, t.relevant_total));
        let max = s.fractions.iter().copied().fold(f64::NAN, f64::max);
        w.write_record([
            name.clone(),
            s.fractions.len().to_string(),
            total.to_string(),
            relevant.to_string(),
            format!("{}", s.mean_fraction),
            format_value(max.is_finite().then_some(max)),
        ])?;
    }
    flush(w)
}

pub fn write_histogram_csv<W: Write>(counts: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTOGRAM_CSV_HEADER)?;
    let bins = counts.len() as f64;
    for (b, c) in counts.iter().enumerate() {
        w.write_record([
            b.to_string(),
            format!("{}", b as f64 / bins),
            format!("{}", (b + 1) as f64 / bins),
            c.to_string(),
        ])?;
    }
    flush(w)
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 40.0;

fn svg_open(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{t}" x2="{MARGIN}" y2="{b}" stroke="black"/>"#,
        t = MARGIN / 2.0,
        b = HEIGHT - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle" font-size="12">{}</text>"#,
        escape(x_label),
        x = WIDTH / 2.0,
        y = HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{y}" text-anchor="middle" font-size="12" transform="rotate(-90 12 {y})">{}</text>"#,
        escape(y_label),
        y = HEIGHT / 2.0
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn plot_w() -> f64 {
    WIDTH - 1.5 * MARGIN
}

fn plot_h() -> f64 {
    HEIGHT - 1.5 * MARGIN
}

/// Bar chart of histogram counts over `[0, 1]`.
pub fn histogram_svg(counts: &[usize], title: &str) -> String {
    let mut s = svg_open(title, "fraction screened", "reviews");
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bw = plot_w() / counts.len().max(1) as f64;
    for (b, &c) in counts.iter().enumerate() {
        let h = plot_h() * c as f64 / max;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue" stroke="white"><title>{}</title></rect>"#,
            MARGIN + b as f64 * bw,
            HEIGHT - MARGIN - h,
            bw,
            h,
            c
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Polyline of relevant citations still hidden against citations screened.
pub fn inclusion_curve_svg(curve: &[(usize, usize)], total: usize, relevant: usize, title: &str) -> String {
    let mut s = svg_open(title, "citations screened", "relevant remaining");
    let xs = total.max(1) as f64;
    let ys = relevant.max(1) as f64;
    let mut pts = vec![format!("{:.2},{:.2}", MARGIN, HEIGHT - MARGIN - plot_h())];
    for &(screened, remaining) in curve {
        pts.push(format!(
            "{:.2},{:.2}",
            MARGIN + plot_w() * screened as f64 / xs,
            HEIGHT - MARGIN - plot_h() * remaining as f64 / ys
        ));
    }
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="firebrick" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    );
    s.push_str("</svg>\n");
    s
}
