//! Output files: CSV serialization for every experiment product, small
//! hand-rolled SVG charts, and atomic writes.
//!
//! The CSVs are the source of truth; plots are conveniences regenerated from
//! them. All writers format numbers with Rust's shortest-round-trip `{}` so
//! reruns are byte-identical.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::real::{Outcome, RealOutput, RealSummaryRow};
use crate::experiments::synthetic::{ConfigResult, SensitivityCurve, SweepOutput, TrackSummary};
use crate::oracle::OracleRow;

/// Write through a temp file in the target directory, then rename into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub const SWEEP_HEADER: &str =
    "size,mu,sigma,track,metric,reps,c_pvf,c_trad,pvf_only,trad_only,d,p_mcnemar,p_ttest,retries";

pub fn sweep_csv(out: &SweepOutput) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in &out.results {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.size,
            r.mu,
            r.sigma,
            r.track,
            r.metric,
            r.reps,
            r.c_pvf,
            r.c_trad,
            r.pvf_only,
            r.trad_only,
            r.d,
            r.p_mcnemar,
            r.p_ttest,
            r.retries
        ));
    }
    s
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<SweepOutput> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut results = Vec::new();
    for (i, record) in reader.deserialize::<SweepRow>().enumerate() {
        let row = record.map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        results.push(ConfigResult {
            size: row.size,
            mu: row.mu,
            sigma: row.sigma,
            track: row.track,
            metric: row.metric,
            reps: row.reps,
            c_pvf: row.c_pvf,
            c_trad: row.c_trad,
            pvf_only: row.pvf_only,
            trad_only: row.trad_only,
            d: row.d,
            p_mcnemar: row.p_mcnemar,
            p_ttest: row.p_ttest,
            retries: row.retries,
        });
    }
    Ok(SweepOutput { results })
}

#[derive(serde::Deserialize)]
struct SweepRow {
    size: usize,
    mu: f64,
    sigma: f64,
    track: String,
    metric: String,
    reps: usize,
    c_pvf: u64,
    c_trad: u64,
    pvf_only: u64,
    trad_only: u64,
    d: i64,
    p_mcnemar: f64,
    p_ttest: f64,
    retries: u64,
}

pub fn sweep_summary_csv(summary: &[TrackSummary]) -> String {
    let mut s = String::from("track,configs,positive,negative,zero,percent_positive\n");
    for row in summary {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.track, row.configs, row.positive, row.negative, row.zero, row.percent_positive
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// real protocol
// ---------------------------------------------------------------------------

pub const REAL_HEADER: &str =
    "subset,fold,sigma,track,pvf_choice,trad_choice,pvf_external,trad_external,outcome";

pub fn real_csv(out: &RealOutput) -> String {
    let mut s = String::from(REAL_HEADER);
    s.push('\n');
    for r in &out.records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.subset,
            r.fold,
            r.sigma,
            r.track,
            r.pvf_choice,
            r.trad_choice,
            r.pvf_external,
            r.trad_external,
            r.outcome.as_str()
        ));
    }
    s
}

pub fn read_real_csv(path: impl AsRef<Path>) -> Result<RealOutput> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut records = Vec::new();
    for (i, record) in reader.deserialize::<RealRow>().enumerate() {
        let row = record.map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        let outcome = match row.outcome.as_str() {
            "pvf" => Outcome::PvfWin,
            "traditional" => Outcome::TradWin,
            "tie" => Outcome::Tie,
            other => {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("unknown outcome {other:?}"),
                })
            }
        };
        records.push(crate::experiments::real::FoldRecord {
            subset: row.subset,
            fold: row.fold,
            sigma: row.sigma,
            track: row.track,
            pvf_choice: row.pvf_choice,
            trad_choice: row.trad_choice,
            pvf_external: row.pvf_external,
            trad_external: row.trad_external,
            outcome,
        });
    }
    Ok(RealOutput {
        records,
        ..RealOutput::default()
    })
}

#[derive(serde::Deserialize)]
struct RealRow {
    subset: usize,
    fold: usize,
    sigma: f64,
    track: String,
    pvf_choice: usize,
    trad_choice: usize,
    pvf_external: f64,
    trad_external: f64,
    outcome: String,
}

pub fn real_summary_csv(rows: &[RealSummaryRow]) -> String {
    let mut s =
        String::from("track,sigma,folds,pvf_wins,trad_wins,ties,pvf_pct,trad_pct,tie_pct\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.track, r.sigma, r.folds, r.pvf_wins, r.trad_wins, r.ties, r.pvf_pct, r.trad_pct,
            r.tie_pct
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// sensitivity
// ---------------------------------------------------------------------------

pub fn sensitivity_csv(curves: &[SensitivityCurve]) -> String {
    let mut s = String::from("size,band,track,sigma,mean_d\n");
    for curve in curves {
        for &(sigma, mean_d) in &curve.points {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                curve.size, curve.band, curve.track, sigma, mean_d
            ));
        }
    }
    s
}

pub fn sensitivity_trends_csv(curves: &[SensitivityCurve]) -> String {
    let mut s = String::from("size,band,track,nondecreasing\n");
    for curve in curves {
        s.push_str(&format!(
            "{},{},{},{}\n",
            curve.size, curve.band, curve.track, curve.nondecreasing
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

pub fn oracle_csv(rows: &[OracleRow]) -> String {
    let mut s = String::from(
        "population,positives,flagged,true_pos_flagged,budget,formula_ie,mc_ie,std_error,deviation_in_se\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.spec.population,
            r.spec.positives,
            r.spec.flagged,
            r.spec.true_pos_flagged,
            r.spec.budget,
            r.formula_ie,
            r.mc_ie,
            r.std_error,
            r.deviation_in_se
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// SVG charts
// ---------------------------------------------------------------------------

const CHART_WIDTH: f64 = 760.0;
const CHART_HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CHART_WIDTH}\" height=\"{CHART_HEIGHT}\" \
         viewBox=\"0 0 {CHART_WIDTH} {CHART_HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{x}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        x = CHART_WIDTH / 2.0
    )
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_owned();
        if s.is_empty() {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:e}")
    }
}

/// One polyline on a line chart.
pub struct Series {
    pub label: String,
    /// (x, y) points, already sorted by x.
    pub points: Vec<(f64, f64)>,
}

/// Line chart with an optional log10 x-axis. Returns the SVG document.
pub fn svg_line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    log_x: bool,
    series: &[Series],
) -> String {
    let transform = |x: f64| if log_x { x.log10() } else { x };
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(x, _)| transform(x)))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(_, y)| y))
        .collect();
    let (x_min, x_max) = bounds(&xs);
    let (mut y_min, mut y_max) = bounds(&ys);
    if y_min > 0.0 {
        y_min = 0.0; // keep the zero line visible for difference curves
    }
    if y_max < 0.0 {
        y_max = 0.0;
    }
    let plot_w = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min).max(1e-300) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min).max(1e-300) * plot_h;

    let mut svg = svg_header(title);
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h
    ));
    if y_min < 0.0 && y_max > 0.0 {
        svg.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{y}\" x2=\"{r}\" y2=\"{y}\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n",
            l = MARGIN_LEFT,
            r = MARGIN_LEFT + plot_w,
            y = sy(0.0)
        ));
    }
    if let Some(first) = series.first() {
        for &(x, _) in &first.points {
            let px = sx(transform(x));
            svg.push_str(&format!(
                "<line x1=\"{px}\" y1=\"{b}\" x2=\"{px}\" y2=\"{b2}\" stroke=\"black\"/>\n\
                 <text x=\"{px}\" y=\"{ty}\" text-anchor=\"middle\">{label}</text>\n",
                b = MARGIN_TOP + plot_h,
                b2 = MARGIN_TOP + plot_h + 5.0,
                ty = MARGIN_TOP + plot_h + 18.0,
                label = fmt_tick(x)
            ));
        }
    }
    for i in 0..=4 {
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let py = sy(y);
        svg.push_str(&format!(
            "<line x1=\"{l2}\" y1=\"{py}\" x2=\"{l}\" y2=\"{py}\" stroke=\"black\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" text-anchor=\"end\">{label}</text>\n",
            l = MARGIN_LEFT,
            l2 = MARGIN_LEFT - 5.0,
            tx = MARGIN_LEFT - 8.0,
            ty = py + 4.0,
            label = fmt_tick(y)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\">{x_label}</text>\n",
        x = MARGIN_LEFT + plot_w / 2.0,
        y = CHART_HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {y})\">{y_label}</text>\n",
        y = MARGIN_TOP + plot_h / 2.0
    ));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(transform(x)), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            path.join(" ")
        ));
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>\n",
                sx(transform(x)),
                sy(y)
            ));
        }
        let ly = MARGIN_TOP + 14.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{lx2}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\">{label}</text>\n",
            lx = CHART_WIDTH - MARGIN_RIGHT + 10.0,
            lx2 = CHART_WIDTH - MARGIN_RIGHT + 30.0,
            tx = CHART_WIDTH - MARGIN_RIGHT + 36.0,
            ty = ly + 4.0,
            label = s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// A labelled group of bars (e.g. one metric track).
pub struct BarGroup {
    pub label: String,
    /// (bar label, value) pairs; bar labels shared across groups feed the
    /// legend.
    pub bars: Vec<(String, f64)>,
}

/// Grouped bar chart with values in `[0, 100]` (percentages).
pub fn svg_grouped_bars(title: &str, y_label: &str, groups: &[BarGroup]) -> String {
    let plot_w = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let y_max = 100.0f64;
    let sy = |v: f64| MARGIN_TOP + plot_h - (v / y_max) * plot_h;
    let mut svg = svg_header(title);
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h
    ));
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{tx}\" y=\"{ty}\" text-anchor=\"end\">{label}</text>\n",
            tx = MARGIN_LEFT - 8.0,
            ty = sy(v) + 4.0,
            label = fmt_tick(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{y}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {y})\">{y_label}</text>\n",
        y = MARGIN_TOP + plot_h / 2.0
    ));
    if groups.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let bars_per_group = groups[0].bars.len().max(1);
    let group_w = plot_w / groups.len() as f64;
    let bar_w = (group_w * 0.8) / bars_per_group as f64;
    for (g, group) in groups.iter().enumerate() {
        let x0 = MARGIN_LEFT + group_w * g as f64 + group_w * 0.1;
        for (b, (_, value)) in group.bars.iter().enumerate() {
            let color = PALETTE[b % PALETTE.len()];
            let x = x0 + bar_w * b as f64;
            let y = sy(*value);
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"{color}\"/>\n",
                h = (MARGIN_TOP + plot_h - y).max(0.0)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y}\" text-anchor=\"middle\">{label}</text>\n",
            x = x0 + group_w * 0.4,
            y = MARGIN_TOP + plot_h + 18.0,
            label = group.label
        ));
    }
    for (b, (name, _)) in groups[0].bars.iter().enumerate() {
        let color = PALETTE[b % PALETTE.len()];
        let ly = MARGIN_TOP + 14.0 * b as f64;
        svg.push_str(&format!(
            "<rect x=\"{lx}\" y=\"{ry}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\">{name}</text>\n",
            lx = CHART_WIDTH - MARGIN_RIGHT + 10.0,
            ry = ly - 9.0,
            tx = CHART_WIDTH - MARGIN_RIGHT + 28.0,
            ty = ly + 2.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if min == max {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}
