//! Trajectory figure: ion path, trap-center path and equipotential ellipses.

use std::fmt::Write;

use gaussinv::corner::{default_ellipse_level, equipotential_ellipses, Ellipse};

use crate::config::FigureConfig;
use crate::output::ProtocolRow;
use crate::CliError;

const MARGIN: f64 = 24.0;
const FOOTER: f64 = 28.0;

/// Largest `|C − L|` over the rows with a defined center.
pub fn max_deviation(rows: &[ProtocolRow]) -> Option<(f64, f64)> {
    rows.iter()
        .filter(|r| r.center.iter().all(|c| c.is_finite()))
        .map(|r| ((&r.center - &r.path).norm(), r.t))
        .fold(None, |best, (d, t)| match best {
            Some((b, _)) if b >= d => best,
            _ => Some((d, t)),
        })
}

/// Indices of `n` rows spread evenly over the table, ends included.
fn snapshot_indices(len: usize, n: usize) -> Vec<usize> {
    match n {
        0 => vec![],
        1 => vec![0],
        _ => (0..n).map(|j| ((j * (len - 1)) as f64 / (n - 1) as f64).round() as usize).collect(),
    }
}

struct Frame {
    lo: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - self.lo[0]) * self.scale, self.height - MARGIN - (y - self.lo[1]) * self.scale)
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: &[[f64; 2]], class: &str, stroke: &str) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = frame.map(p[0], p[1]);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"  <polyline class="{class}" fill="none" stroke="{stroke}" stroke-width="2" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Render the figure for a two-dimensional protocol table.
pub fn render(rows: &[ProtocolRow], mass: f64, length_scale: f64, cfg: &FigureConfig) -> Result<String, CliError> {
    if rows.is_empty() {
        return Err(CliError::Config("protocol table is empty".into()));
    }
    if rows[0].force.len() != 2 {
        return Err(CliError::Config(format!("figure needs a two-dimensional protocol, got d={}", rows[0].force.len())));
    }
    if !(cfg.width > 4.0 * MARGIN) {
        return Err(CliError::Config(format!("figure.width must exceed {}", 4.0 * MARGIN)));
    }

    let ellipses: Vec<Ellipse> = snapshot_indices(rows.len(), cfg.ellipses)
        .into_iter()
        .filter(|&i| rows[i].center.iter().all(|c| c.is_finite()))
        .map(|i| {
            let level = cfg.level.unwrap_or_else(|| default_ellipse_level(&rows[i].curvature, mass));
            equipotential_ellipses(&rows[i].curvature, &rows[i].center, level)
        })
        .collect::<Result<_, _>>()?;

    // curve runs, broken where the center is undefined
    let mut centers: Vec<Vec<[f64; 2]>> = vec![vec![]];
    for r in rows {
        if r.center.iter().all(|c| c.is_finite()) {
            centers.last_mut().unwrap().push([r.center[0], r.center[1]]);
        } else if !centers.last().unwrap().is_empty() {
            centers.push(vec![]);
        }
    }
    let path: Vec<[f64; 2]> = rows.iter().map(|r| [r.path[0], r.path[1]]).collect();

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |p: [f64; 2], pad: f64| {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a] - pad);
            hi[a] = hi[a].max(p[a] + pad);
        }
    };
    path.iter().chain(centers.iter().flatten()).for_each(|p| grow(*p, 0.0));
    for e in &ellipses {
        grow(e.center, e.semi_axes[0]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let scale = (cfg.width - 2.0 * MARGIN) / span;
    let plot_h = (hi[1] - lo[1]) * scale + 2.0 * MARGIN;
    let frame = Frame { lo, scale, height: plot_h };
    let width = (hi[0] - lo[0]) * scale + 2.0 * MARGIN;
    let height = plot_h + FOOTER;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    for e in &ellipses {
        let (cx, cy) = frame.map(e.center[0], e.center[1]);
        let _ = writeln!(
            out,
            r#"  <ellipse class="equipotential" cx="{cx:.3}" cy="{cy:.3}" rx="{:.3}" ry="{:.3}" transform="rotate({:.3} {cx:.3} {cy:.3})" fill="none" stroke="goldenrod" stroke-width="1.5"/>"#,
            e.semi_axes[0] * scale,
            e.semi_axes[1] * scale,
            -e.angle.to_degrees()
        );
    }
    for run in &centers {
        polyline(&mut out, &frame, run, "trap-center", "steelblue");
    }
    polyline(&mut out, &frame, &path, "ion-path", "purple");

    let label = match max_deviation(rows) {
        Some((d, t)) => format!("max |C - L| = {:.4} r at t = {t:.4}", d / length_scale),
        None => "trap center undefined".to_string(),
    };
    let _ = writeln!(
        out,
        r#"  <text class="max-deviation" x="{MARGIN:.3}" y="{:.3}" font-family="sans-serif" font-size="13">{label}</text>"#,
        height - 10.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}
