//! SVG rendering of artifact directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::artifact::{column, read_csv, read_json_data};
use crate::config::Kind;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Smallball,
    Density,
    Moments,
    Scan,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::Smallball, PlotKind::Density, PlotKind::Moments, PlotKind::Scan];

    pub fn for_experiment(kind: Kind) -> Option<Self> {
        match kind {
            Kind::MalliavinSmallball | Kind::SobolevSmallball => Some(Self::Smallball),
            Kind::Density => Some(Self::Density),
            Kind::FbMoments => Some(Self::Moments),
            Kind::DecompositionScan => Some(Self::Scan),
            _ => None,
        }
    }

    fn inputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = match fs::read_dir(dir) {
            Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).collect(),
            Err(e) => return Err(HarnessError::data(dir, e)),
        };
        v.retain(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            match self {
                Self::Smallball => name.starts_with("smallball-") && name.ends_with(".csv"),
                Self::Density => name.starts_with("hist-") && name.ends_with(".csv"),
                Self::Moments => name == "moments.csv",
                Self::Scan => name == "scan.json",
            }
        });
        v.sort();
        Ok(v)
    }
}

/// Renders `kind` (or every kind with data present) and returns the SVG paths.
pub fn plot(dir: &Path, kind: Option<PlotKind>) -> Result<Vec<PathBuf>> {
    let kinds: Vec<PlotKind> = kind.map_or(PlotKind::ALL.to_vec(), |k| vec![k]);
    let mut out = Vec::new();
    for k in kinds {
        let inputs = k.inputs(dir)?;
        if inputs.is_empty() && kind.is_some() {
            return Err(HarnessError::data(dir, format!("no input files for {k:?} plots")));
        }
        for input in inputs {
            let svg = match k {
                PlotKind::Smallball => smallball_svg(&input)?,
                PlotKind::Density => density_svg(&input)?,
                PlotKind::Moments => moments_svg(&input)?,
                PlotKind::Scan => scan_svg(&input)?,
            };
            let path = input.with_extension("svg");
            fs::write(&path, svg).map_err(|e| HarnessError::output(&path, e))?;
            out.push(path);
        }
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 440.0;
const M: f64 = 60.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plot area with linear coordinates on both axes.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if (b - a).abs() < 1e-300 || !(a.is_finite() && b.is_finite()) { (a - 1.0, a + 1.0) } else { (a, b) };
        let (x, y) = (pad(x), pad(y));
        let x = if x.0.is_finite() { x } else { (0.0, 1.0) };
        let y = if y.0.is_finite() { y } else { (0.0, 1.0) };
        Self { x, y, body: String::new() }
    }

    fn px(&self, v: f64) -> f64 {
        M + (v - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * M)
    }

    fn py(&self, v: f64) -> f64 {
        H - M - (v - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * M)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.is_empty() {
            return;
        }
        let p: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(self.body, r#"<polyline fill="none" {style} points="{}"/>"#, p.join(" "));
    }

    fn polygon(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.len() < 3 {
            return;
        }
        let p: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(self.body, r#"<polygon {style} points="{}"/>"#, p.join(" "));
    }

    fn marker(&mut self, x: f64, y: f64, style: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{:.2}" cy="{:.2}" r="3" {style}/>"#, self.px(x), self.py(y));
    }

    fn text(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(self.body, r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, self.px(x), self.py(y), esc(s));
    }

    fn finish(self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, esc(title));
        let _ = writeln!(s, r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * M, H - 2.0 * M);
        for (v, anchor) in [(self.x.0, "start"), (self.x.1, "end")] {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="{anchor}">{}</text>"#, self.px(v), H - M + 16.0, tick(v));
        }
        for v in [self.y.0, self.y.1] {
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, M - 4.0, self.py(v) + 4.0, tick(v));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(ylabel)
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn range(vals: impl IntoIterator<Item = f64>) -> (f64, f64) {
    vals.into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn bool_column(path: &Path, header: &[String], rows: &[Vec<String>], name: &str) -> Result<Vec<bool>> {
    let idx = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| HarnessError::data(path, format!("missing column `{name}`")))?;
    rows.iter()
        .map(|r| match r.get(idx).map(String::as_str) {
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            other => Err(HarnessError::data(path, format!("`{name}` is not a boolean: {other:?}"))),
        })
        .collect()
}

/// log10 P̂ against log10 ε with the Wilson band; censored points drawn as hollow markers.
pub fn smallball_svg(path: &Path) -> Result<String> {
    let (h, rows) = read_csv(path)?;
    let eps = column(path, &h, &rows, "eps")?;
    let p = column(path, &h, &rows, "p_hat")?;
    let lo = column(path, &h, &rows, "ci_low")?;
    let hi = column(path, &h, &rows, "ci_high")?;
    let censored = bool_column(path, &h, &rows, "censored")?;
    // P̂ = 0 is drawn at the floor of the band
    let floor = 1e-7f64;
    let lg = |v: f64| v.max(floor).log10();
    let xs: Vec<f64> = eps.iter().map(|e| e.log10()).collect();
    let mut f = Frame::new(range(xs.iter().copied()), range(lo.iter().chain(&hi).chain(&p).map(|&v| lg(v))));
    let band: Vec<(f64, f64)> = xs
        .iter()
        .zip(&hi)
        .map(|(&x, &v)| (x, lg(v)))
        .chain(xs.iter().zip(&lo).rev().map(|(&x, &v)| (x, lg(v))))
        .collect();
    f.polygon(&band, r##"fill="#9ecae1" fill-opacity="0.5" stroke="none""##);
    let line: Vec<(f64, f64)> = xs.iter().zip(&p).zip(&censored).filter(|(_, &c)| !c).map(|((&x, &v), _)| (x, lg(v))).collect();
    f.polyline(&line, r##"stroke="#08519c" stroke-width="1.5""##);
    for ((&x, &v), &c) in xs.iter().zip(&p).zip(&censored) {
        if c {
            f.marker(x, lg(v), r##"fill="white" stroke="#cb181d""##);
        }
    }
    if censored.iter().all(|&c| c) {
        let (x0, y0) = (f.x.0, f.y.1);
        f.text(x0, y0, "all points censored");
    }
    let title = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(f.finish(&title, "log10 ε", "log10 P(X ≤ ε)"))
}

/// Heatmap of a `x,y,density` histogram.
pub fn density_svg(path: &Path) -> Result<String> {
    let (h, rows) = read_csv(path)?;
    let x = column(path, &h, &rows, "x")?;
    let y = column(path, &h, &rows, "y")?;
    let d = column(path, &h, &rows, "density")?;
    let mut xs = x.clone();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let width = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let width = if width.is_finite() { width } else { 1.0 };
    let (xr, yr) = (range(x.iter().copied()), range(y.iter().copied()));
    let mut f = Frame::new((xr.0 - width / 2.0, xr.1 + width / 2.0), (yr.0 - width / 2.0, yr.1 + width / 2.0));
    let dmax = range(d.iter().copied()).1.max(f64::MIN_POSITIVE);
    for ((&cx, &cy), &v) in x.iter().zip(&y).zip(&d) {
        if !(v > 0.0) {
            continue;
        }
        let t = (v / dmax).clamp(0.0, 1.0);
        let shade = (255.0 * (1.0 - t)).round() as u8;
        let (x0, y0) = (f.px(cx - width / 2.0), f.py(cy + width / 2.0));
        let (x1, y1) = (f.px(cx + width / 2.0), f.py(cy - width / 2.0));
        let _ = writeln!(
            f.body,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="rgb(255,{shade},{shade})"/>"#,
            x1 - x0,
            y1 - y0
        );
    }
    let (lx, ly) = (f.x.0, f.y.1);
    f.text(lx, ly, &format!("peak density {dmax:.4}"));
    let title = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(f.finish(&title, "Re μ(f)", "Im μ(f)"))
}

/// Table of moment estimates and z-scores.
pub fn moments_svg(path: &Path) -> Result<String> {
    let (h, rows) = read_csv(path)?;
    let beta = column(path, &h, &rows, "beta")?;
    let value = column(path, &h, &rows, "value-re")?;
    let oracle = column(path, &h, &rows, "oracle")?;
    let z = column(path, &h, &rows, "z")?;
    let idx = h.iter().position(|c| c == "moment").ok_or_else(|| HarnessError::data(path, "missing column `moment`"))?;
    let row_h = 22.0;
    let height = 80.0 + row_h * rows.len() as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{height}" fill="white"/>"#);
    let cols = [20.0, 130.0, 220.0, 360.0, 500.0];
    for (c, label) in cols.iter().zip(["moment", "β", "estimate", "oracle", "z"]) {
        let _ = writeln!(s, r#"<text x="{c}" y="40" font-size="13" font-weight="bold">{label}</text>"#);
    }
    for (i, r) in rows.iter().enumerate() {
        let y = 66.0 + row_h * i as f64;
        let fill = if z[i].abs() <= 3.0 { "black" } else { "#cb181d" };
        let cells = [esc(&r[idx]), format!("{}", beta[i]), format!("{:.6}", value[i]), format!("{:.6}", oracle[i]), format!("{:+.3}", z[i])];
        for (c, cell) in cols.iter().zip(cells) {
            let _ = writeln!(s, r#"<text x="{c}" y="{y}" font-size="12" fill="{fill}">{cell}</text>"#);
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// name, (α, smallest eigenvalue) points, α*
type Series = (String, Vec<(f64, f64)>, Option<f64>);

fn scan_series(path: &Path, v: &Value) -> Result<Series> {
    let name = v.get("gtilde").and_then(Value::as_str).unwrap_or("scan").to_string();
    let scan = v.get("scan").ok_or_else(|| HarnessError::data(path, "missing `scan`"))?;
    let points = scan
        .get("points")
        .and_then(Value::as_array)
        .ok_or_else(|| HarnessError::data(path, "missing `points`"))?;
    let pts = points
        .iter()
        .map(|p| match (p.get("alpha").and_then(Value::as_f64), p.get("min-eig").and_then(Value::as_f64)) {
            (Some(a), Some(e)) => Ok((a, e)),
            _ => Err(HarnessError::data(path, "scan point without `alpha`/`min-eig`")),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((name, pts, scan.get("alpha-star").and_then(Value::as_f64)))
}

/// Step plot of the smallest eigenvalue against α for every scan in `scan.json`.
pub fn scan_svg(path: &Path) -> Result<String> {
    let data = read_json_data(path)?;
    let mut series = Vec::new();
    if let Some(b) = data.get("baseline") {
        series.push(scan_series(path, b)?);
    }
    for s in data.get("scans").and_then(Value::as_array).into_iter().flatten() {
        series.push(scan_series(path, s)?);
    }
    if series.is_empty() {
        return Err(HarnessError::data(path, "no scans"));
    }
    // α on a log axis, eigenvalues on a signed log axis
    let slog = |v: f64| v.signum() * (1.0 + v.abs() / 1e-12).log10();
    let all = series.iter().flat_map(|s| s.1.iter().copied());
    let xr = range(all.clone().map(|p| p.0.log10()));
    let yr = range(all.map(|p| slog(p.1)));
    let mut f = Frame::new(xr, (yr.0.min(0.0), yr.1.max(0.0)));
    let (x0, x1) = (f.x.0, f.x.1);
    f.polyline(&[(x0, 0.0), (x1, 0.0)], r#"stroke="gray" stroke-dasharray="4 3""#);
    let colors = ["#000000", "#2171b5", "#238b45", "#cb181d", "#6a51a3"];
    for (k, (name, pts, star)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let mut step = Vec::new();
        for (i, &(a, e)) in pts.iter().enumerate() {
            if i > 0 {
                step.push((a.log10(), slog(pts[i - 1].1)));
            }
            step.push((a.log10(), slog(e)));
        }
        f.polyline(&step, &format!(r#"stroke="{color}" stroke-width="1.5""#));
        let label = match star {
            Some(s) => format!("{name}: α* = {s}"),
            None => format!("{name}: no positive α"),
        };
        if let Some(s) = star {
            let (lo, hi) = (f.y.0, f.y.1);
            f.polyline(&[(s.log10(), lo), (s.log10(), hi)], &format!(r#"stroke="{color}" stroke-dasharray="2 2""#));
        }
        let ty = f.y.1 - (k as f64 + 1.0) * (f.y.1 - f.y.0) / 14.0;
        f.text(x0, ty, &label);
    }
    Ok(f.finish("smallest eigenvalue of U_α + R", "log10 α", "sign·log10(1 + |λ|/1e-12)"))
}
