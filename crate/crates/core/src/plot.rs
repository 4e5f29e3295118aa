//! Static SVG charts: relative MAE against the scale parameter with ±1 std
//! error bars, and an optional overlay of sample trajectories.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::forward::TrajectoryBatch;
use crate::io::ResultRow;
use crate::strain::State;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 110.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const R_COLOR: &str = "#d62728";
const Z_COLOR: &str = "#1f77b4";

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    top: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        self.top + MARGIN_T + (self.y1 - y) / (self.y1 - self.y0) * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

/// Upper axis limit rounded up to 1, 2 or 5 times a power of ten.
fn nice_ceiling(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|c| *c >= v)
        .unwrap_or(10.0 * mag)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn axes(svg: &mut String, f: &Frame, title: &str, xlabel: &str, ylabel: &str, xticks: &[f64]) {
    let (left, right) = (MARGIN_L, PANEL_W - MARGIN_R);
    let (top, bottom) = (f.top + MARGIN_T, f.top + PANEL_H - MARGIN_B);
    let _ = writeln!(
        svg,
        r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="16">{title}</text>"#,
        (left + right) / 2.0,
        f.top + 24.0
    );
    for &x in xticks {
        let px = f.px(x);
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            bottom + 19.0,
            fmt_tick(x)
        );
    }
    for i in 0..=5 {
        let y = f.y0 + (f.y1 - f.y0) * i as f64 / 5.0;
        let py = f.py(y);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{left:.2}" y2="{py:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="12">{}</text>"#,
            left - 8.0,
            py + 4.0,
            fmt_tick(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{xlabel}</text>"#,
        (left + right) / 2.0,
        bottom + 40.0
    );
    let mid = (top + bottom) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="18.00" y="{mid:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 18.00 {mid:.2})">{ylabel}</text>"#
    );
}

fn legend(svg: &mut String, top: f64, entries: &[(&str, &str)]) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let x = PANEL_W - MARGIN_R + 15.0;
        let y = top + MARGIN_T + 15.0 + 22.0 * i as f64;
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, x + 20.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="13">{label}</text>"#, x + 26.0, y + 4.0);
    }
}

fn open(height: f64) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W:.0}" height="{height:.0}" viewBox="0 0 {PANEL_W:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    svg
}

/// Renders one panel per `(flow_kind, nu)` group, in order of appearance.
pub fn emit_svg(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Schema("nothing to plot: results table is empty".into()));
    }
    let mut groups: Vec<(String, f64, Vec<&ResultRow>)> = Vec::new();
    for row in rows {
        if row.component != "R" && row.component != "Z" {
            return Err(Error::Schema(format!("unknown component {:?}", row.component)));
        }
        match groups.iter_mut().find(|g| g.0 == row.flow_kind && g.1 == row.nu) {
            Some(g) => g.2.push(row),
            None => groups.push((row.flow_kind.clone(), row.nu, vec![row])),
        }
    }

    let mut svg = open(PANEL_H * groups.len() as f64);
    for (gi, (kind, nu, rows)) in groups.iter().enumerate() {
        let mut svals: Vec<f64> = rows.iter().map(|r| r.s).collect();
        svals.sort_by(f64::total_cmp);
        svals.dedup();
        let (smin, smax) = (svals[0], svals[svals.len() - 1]);
        let pad = if smax > smin { 0.05 * (smax - smin) + 0.5 } else { 1.0 };
        let ymax = rows.iter().map(|r| r.mean_rel_mae + r.std.max(0.0)).fold(0.0, f64::max);
        let frame = Frame {
            x0: smin - pad,
            x1: smax + pad,
            y0: 0.0,
            y1: nice_ceiling(ymax * 1.05),
            top: PANEL_H * gi as f64,
        };
        let title = format!("Learning results ({kind}, nu = {})", fmt_tick(*nu));
        axes(&mut svg, &frame, &title, "s", "relative MAE", &svals);

        for (component, color, dx) in [("R", R_COLOR, -0.06), ("Z", Z_COLOR, 0.06)] {
            let mut series: Vec<&&ResultRow> = rows.iter().filter(|r| r.component == component).collect();
            series.sort_by(|a, b| a.s.total_cmp(&b.s));
            let pts: Vec<String> = series
                .iter()
                .map(|r| format!("{:.2},{:.2}", frame.px(r.s + dx), frame.py(r.mean_rel_mae)))
                .collect();
            if pts.len() > 1 {
                let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
            }
            for r in &series {
                let px = frame.px(r.s + dx);
                let lo = frame.py((r.mean_rel_mae - r.std).max(frame.y0));
                let hi = frame.py((r.mean_rel_mae + r.std).min(frame.y1));
                let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{color}"/>"#);
                for y in [lo, hi] {
                    let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}"/>"#, px - 4.0, px + 4.0);
                }
                let _ = writeln!(svg, r#"<circle cx="{px:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, frame.py(r.mean_rel_mae));
            }
        }
        legend(&mut svg, frame.top, &[("R", R_COLOR), ("Z", Z_COLOR)]);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Forward paths `R(t)` and `Z(t)` of the first `count` trajectories, with
/// the reconstructed initial positions marked at `t = 0` when given.
pub fn emit_trajectory_svg(batch: &TrajectoryBatch, count: usize, predicted: Option<&[State]>) -> Result<String> {
    let count = count.min(batch.len());
    if count == 0 {
        return Err(Error::InvalidArgument("no trajectories to draw".into()));
    }
    let grid = batch.grid;
    let shown = &batch.trajectories[..count];
    let mut svg = open(2.0 * PANEL_H);
    for (pi, (label, pick)) in [("R", 0usize), ("Z", 1usize)].into_iter().enumerate() {
        let value = |s: &State| s.to_array()[pick];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in shown.iter().flat_map(|t| &t.states).chain(predicted.into_iter().flatten().take(count)) {
            lo = lo.min(value(s));
            hi = hi.max(value(s));
        }
        if hi <= lo {
            hi = lo + 1.0;
        }
        let frame = Frame {
            x0: 0.0,
            x1: grid.t_end(),
            y0: lo,
            y1: hi,
            top: PANEL_H * pi as f64,
        };
        let ticks: Vec<f64> = (0..=4).map(|i| grid.t_end() * i as f64 / 4.0).collect();
        axes(&mut svg, &frame, &format!("Trajectories: {label}(t)"), "t", label, &ticks);
        let color = if pick == 0 { R_COLOR } else { Z_COLOR };
        for t in shown {
            let pts: Vec<String> = t
                .states
                .iter()
                .enumerate()
                .map(|(k, s)| format!("{:.2},{:.2}", frame.px(grid.time(k)), frame.py(value(s))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-opacity="0.5" stroke-width="1"/>"#,
                pts.join(" ")
            );
        }
        if let Some(pred) = predicted {
            for p in pred.iter().take(count) {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#,
                    frame.px(0.0),
                    frame.py(value(p))
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
