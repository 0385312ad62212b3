//! Static SVG line plots of CSV result tables.
//!
//! Layout is fixed so identical tables give identical files: a
//! [`WIDTH`]×[`HEIGHT`] canvas, the plot area inset by the margins, axis
//! ranges taken from the finite data (padded by ±0.5 when degenerate).
//! Coordinates are written with two decimals.

use std::fmt::Write as _;

use oneshot_core::numfmt;

use crate::error::{CliError, CliResult};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
pub const MARGIN_LEFT: f64 = 72.0;
pub const MARGIN_RIGHT: f64 = 160.0;
pub const MARGIN_TOP: f64 = 16.0;
pub const MARGIN_BOTTOM: f64 = 44.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const TICKS: usize = 5;

/// A parsed CSV table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| CliError::validation(format!("csv: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        let rows = rdr
            .records()
            .map(|r| {
                r.map(|r| r.iter().map(str::to_owned).collect())
                    .map_err(|e| CliError::validation(format!("csv: {e}")))
            })
            .collect::<CliResult<_>>()?;
        Ok(Self { headers, rows })
    }

    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("no column named {name:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    /// One curve per y column and series group.
    pub y: Vec<String>,
    /// Columns whose joint value identifies a series.
    pub series: Vec<String>,
    pub log_y: bool,
}

/// Maps data coordinates to pixels. With `log_y` the y axis is `log10 y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub log_y: bool,
}

impl Frame {
    fn fit(xs: &[f64], ys: &[f64], log_y: bool) -> Self {
        let (x_min, x_max) = padded(xs);
        let ty: Vec<f64> = ys
            .iter()
            .map(|&y| if log_y { y.log10() } else { y })
            .collect();
        let (y_min, y_max) = padded(&ty);
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
            log_y,
        }
    }

    pub fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        let t = if self.log_y { y.log10() } else { y };
        HEIGHT
            - MARGIN_BOTTOM
            - (t - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn padded(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn usable(y: f64, log_y: bool) -> bool {
    y.is_finite() && (!log_y || y > 0.0)
}

fn collect_series(table: &Table, spec: &PlotSpec) -> CliResult<Vec<Series>> {
    let xi = table.column(&spec.x)?;
    let yis = spec
        .y
        .iter()
        .map(|c| table.column(c))
        .collect::<CliResult<Vec<_>>>()?;
    let sis = spec
        .series
        .iter()
        .map(|c| table.column(c))
        .collect::<CliResult<Vec<_>>>()?;
    if yis.is_empty() {
        return Err(CliError::validation("at least one y column is required"));
    }
    let number = |row: usize, col: usize| -> CliResult<f64> {
        let cell = &table.rows[row][col];
        numfmt::parse(cell).ok_or_else(|| {
            CliError::validation(format!(
                "row {}: column {:?} is not numeric: {cell:?}",
                row + 1,
                table.headers[col]
            ))
        })
    };
    let mut out: Vec<Series> = Vec::new();
    for (yk, &yi) in yis.iter().enumerate() {
        for row in 0..table.rows.len() {
            let group: Vec<String> = sis
                .iter()
                .map(|&c| format!("{}={}", table.headers[c], table.rows[row][c]))
                .collect();
            let label = match (group.is_empty(), yis.len() > 1) {
                (true, _) => spec.y[yk].clone(),
                (false, false) => group.join(" "),
                (false, true) => format!("{} {}", spec.y[yk], group.join(" ")),
            };
            let (x, y) = (number(row, xi)?, number(row, yi)?);
            if !x.is_finite() || !usable(y, spec.log_y) {
                continue;
            }
            match out.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((x, y)),
                None => out.push(Series {
                    label,
                    points: vec![(x, y)],
                }),
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::validation("table has no plottable points"));
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a < 1e-12 {
        "0".into()
    } else if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        format!("{v:.2e}")
    }
}

/// The axis frame [`plot_svg`] uses for this table, so callers can map
/// table values to pixels.
pub fn frame_for(table: &Table, spec: &PlotSpec) -> CliResult<Frame> {
    let series = collect_series(table, spec)?;
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .collect();
    Ok(Frame::fit(&xs, &ys, spec.log_y))
}

pub fn plot_svg(table: &Table, spec: &PlotSpec) -> CliResult<String> {
    let series = collect_series(table, spec)?;
    let frame = frame_for(table, spec)?;
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let mut s = String::new();
    let w = &mut s;
    // `write!` into a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<rect class="frame" x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = frame.x_min + f * (frame.x_max - frame.x_min);
        let xp = frame.px(xv);
        let _ = writeln!(
            w,
            r#"<line x1="{xp:.2}" y1="{bottom}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 4.0,
            bottom + 16.0,
            tick_label(xv)
        );
        let tv = frame.y_min + f * (frame.y_max - frame.y_min);
        let yv = if frame.log_y { 10f64.powf(tv) } else { tv };
        let yp = frame.py(yv);
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{left}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 4.0,
            left - 6.0,
            yp + 4.0,
            tick_label(yv)
        );
    }
    let y_title = if frame.log_y {
        format!("{} (log scale)", spec.y.join(", "))
    } else {
        spec.y.join(", ")
    };
    let _ = writeln!(
        w,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 6.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        w,
        r#"<text class="y-label" transform="translate(14 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (top + bottom) / 2.0,
        escape(&y_title)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let label = escape(&ser.label);
        if let [(x, y)] = ser.points[..] {
            let _ = writeln!(
                w,
                r#"<circle class="series" data-label="{label}" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                frame.px(x),
                frame.py(y)
            );
        } else {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline class="series" data-label="{label}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = top + 8.0 + 14.0 * i as f64;
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            right + 8.0,
            right + 24.0,
            right + 28.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
