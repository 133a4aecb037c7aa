//! Figure-ready panel data: entropy versus `L` with both best-fit curves.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{io_err, Error, Result};
use crate::io::{group_series, AnalysisEntry, SeriesRow};

pub const PANEL_HEADER: &str = "L,S_mean,S_stderr,fit_L_value,fit_lnL_value";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PanelScale {
    Linear,
    Log,
}

impl PanelScale {
    fn suffix(self) -> &'static str {
        match self {
            PanelScale::Linear => "linear",
            PanelScale::Log => "log",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanelRow {
    pub n_sites: usize,
    pub s_mean: f64,
    pub s_stderr: f64,
    pub fit_l: f64,
    pub fit_ln_l: f64,
}

pub fn panel_rows(entry: &AnalysisEntry, rows: &[SeriesRow]) -> Vec<PanelRow> {
    rows.iter()
        .map(|r| {
            let l = r.n_sites as f64;
            PanelRow {
                n_sites: r.n_sites,
                s_mean: r.s_mean,
                s_stderr: r.s_stderr,
                fit_l: entry.report.fit_l.eval(l),
                fit_ln_l: entry.report.fit_ln_l.eval(l.ln()),
            }
        })
        .collect()
}

pub fn panel_csv(rows: &[PanelRow]) -> String {
    let mut out = String::from(PANEL_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n_sites, r.s_mean, r.s_stderr, r.fit_l, r.fit_ln_l
        );
    }
    out
}

/// Writes `{label}_linear.csv` and `{label}_log.csv` (plus SVGs when `svg`)
/// for every analyzed setup. Returns the files written.
pub fn write_report(
    out_dir: &Path,
    series: &[SeriesRow],
    entries: &[AnalysisEntry],
    svg: bool,
) -> Result<Vec<PathBuf>> {
    if entries.is_empty() {
        log::warn!("no analysis entries given; nothing to report");
        return Ok(Vec::new());
    }
    let groups = group_series(series);
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    for entry in entries {
        let rows = groups.get(&entry.setup).ok_or_else(|| {
            Error::MalformedSeries(format!(
                "report for {} + {} (gamma = {}) has no matching series rows",
                entry.setup.model, entry.setup.monitor, entry.setup.gamma
            ))
        })?;
        let panel = panel_rows(entry, rows);
        let label = entry.setup.label();
        for scale in [PanelScale::Linear, PanelScale::Log] {
            let path = out_dir.join(format!("{label}_{}.csv", scale.suffix()));
            fs::write(&path, panel_csv(&panel)).map_err(io_err(&path))?;
            written.push(path);
            if svg {
                let path = out_dir.join(format!("{label}_{}.svg", scale.suffix()));
                let title = format!("{} + {}, gamma = {}", entry.setup.model, entry.setup.monitor, entry.setup.gamma);
                fs::write(&path, render_svg(&panel, scale, &title)).map_err(io_err(&path))?;
                written.push(path);
            }
        }
    }
    for key in groups.keys() {
        if !entries.iter().any(|e| &e.setup == key) {
            log::warn!("series {} has no analysis entry; skipped", key.label());
        }
    }
    Ok(written)
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 56.0;

/// Data as a solid line with error bars, the matching fit dashed.
pub fn render_svg(rows: &[PanelRow], scale: PanelScale, title: &str) -> String {
    let xform = |l: f64| match scale {
        PanelScale::Linear => l,
        PanelScale::Log => l.ln(),
    };
    let fit = |r: &PanelRow| match scale {
        PanelScale::Linear => r.fit_l,
        PanelScale::Log => r.fit_ln_l,
    };
    let xs: Vec<f64> = rows.iter().map(|r| xform(r.n_sites as f64)).collect();
    let ys = rows
        .iter()
        .flat_map(|r| [r.s_mean - r.s_stderr, r.s_mean + r.s_stderr, fit(r)]);
    let (x0, x1) = bounds(xs.iter().copied());
    let (y0, y1) = bounds(ys);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<polyline points="{m},{t} {m},{b} {r},{b}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let xlabel = match scale {
        PanelScale::Linear => "L",
        PanelScale::Log => "L (log scale)",
    };
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">S(L/2)</text>"#, H / 2.0, H / 2.0);
    for (r, &x) in rows.iter().zip(&xs) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
            px(x),
            H - MARGIN + 14.0,
            r.n_sites
        );
    }
    for y in [y0, (y0 + y1) / 2.0, y1] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{y:.3}</text>"#, MARGIN - 4.0, py(y) + 3.0);
    }
    let line = |vals: &mut dyn Iterator<Item = (f64, f64)>| {
        vals.map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let data = line(&mut xs.iter().zip(rows).map(|(&x, r)| (x, r.s_mean)));
    let fitted = line(&mut xs.iter().zip(rows).map(|(&x, r)| (x, fit(r))));
    let _ = writeln!(s, r#"<polyline points="{data}" fill="none" stroke="steelblue" stroke-width="2"/>"#);
    let _ = writeln!(s, r#"<polyline points="{fitted}" fill="none" stroke="firebrick" stroke-width="1.5" stroke-dasharray="6 4"/>"#);
    for (r, &x) in rows.iter().zip(&xs) {
        let (cx, lo, hi) = (px(x), py(r.s_mean - r.s_stderr), py(r.s_mean + r.s_stderr));
        let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="steelblue"/>"#);
        let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, py(r.s_mean));
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
