//! Static PNG figures: `|u(t, x)|` heat maps, norm traces and growth-rate
//! curves. Rendering is a pure function of the CSV contents, so identical
//! input gives identical bytes.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use image::{ImageFormat, Rgb, RgbImage};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::experiments::{dispersion, GROWTH_CSV_HEADER};
use crate::solver::Snapshot;

pub const FIELD_CSV_HEADER: [&str; 5] = ["t", "x", "re_w", "im_w", "abs_u"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Heatmap,
    Norms,
    Growth,
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heatmap" => Ok(Self::Heatmap),
            "norms" => Ok(Self::Norms),
            "growth" => Ok(Self::Growth),
            other => Err(Error::InvalidParameter(format!("unknown plot kind `{other}` (heatmap, norms, growth)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSummary {
    pub width: u32,
    pub height: u32,
    /// Largest plotted value and where it sits; for heat maps `(t, x)`.
    pub max_value: f64,
    pub argmax: (f64, f64),
}

// --------------------------------------------------------------- field CSV

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    pub x: f64,
    pub re_w: f64,
    pub im_w: f64,
    pub abs_u: f64,
}

/// Every `stride`-th grid point of each snapshot, with `|u| = |1 + w|`.
pub fn write_field_csv(out: impl Write, snapshots: &[Snapshot], stride: usize) -> Result<()> {
    let stride = stride.max(1);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIELD_CSV_HEADER)?;
    for snap in snapshots {
        let grid = snap.field.grid();
        for (n, z) in snap.field.samples().iter().enumerate().step_by(stride) {
            let u = 1.0 + z;
            w.write_record([snap.t, grid.x(n), z.re, z.im, u.norm()].map(|v| format!("{v:.12e}")))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_table(reader: impl Read, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if found != header {
        return Err(Error::Schema(format!("expected header {header:?}, found {found:?}")));
    }
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(Error::Schema("CSV has no data rows".into()));
    }
    Ok(rows)
}

fn number(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Schema(format!("bad number `{s}`: {e}")))
}

pub fn read_field_csv(reader: impl Read) -> Result<Vec<FieldSample>> {
    read_table(reader, &FIELD_CSV_HEADER)?
        .iter()
        .map(|r| {
            Ok(FieldSample {
                t: number(&r[0])?,
                x: number(&r[1])?,
                re_w: number(&r[2])?,
                im_w: number(&r[3])?,
                abs_u: number(&r[4])?,
            })
        })
        .collect()
}

// ----------------------------------------------------------------- drawing

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const GREY: Rgb<u8> = Rgb([190, 190, 190]);
const PALETTE: [Rgb<u8>; 4] = [Rgb([31, 119, 180]), Rgb([214, 39, 40]), Rgb([44, 160, 44]), Rgb([148, 103, 189])];

/// Piecewise-linear approximation of a perceptual blue-green-yellow map.
fn colormap(v: f64) -> Rgb<u8> {
    const STOPS: [[f64; 3]; 5] =
        [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let pos = v * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - i as f64;
    let c = |k: usize| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

struct Canvas {
    img: RgbImage,
    margin: u32,
}

impl Canvas {
    fn new(width: u32, height: u32, margin: u32) -> Self {
        let mut img = RgbImage::from_pixel(width + 2 * margin, height + 2 * margin, WHITE);
        for x in margin - 1..=margin + width {
            img.put_pixel(x, margin + height, BLACK);
            img.put_pixel(x, margin - 1, GREY);
        }
        for y in margin - 1..=margin + height {
            img.put_pixel(margin - 1, y, BLACK);
            img.put_pixel(margin + width, y, GREY);
        }
        Self { img, margin }
    }

    fn inner(&self) -> (u32, u32) {
        (self.img.width() - 2 * self.margin, self.img.height() - 2 * self.margin)
    }

    /// Maps unit-square coordinates (origin bottom left) to pixels.
    fn to_pixel(&self, u: f64, v: f64) -> (i64, i64) {
        let (w, h) = self.inner();
        let px = self.margin as f64 + u * (w - 1) as f64;
        let py = self.margin as f64 + (1.0 - v) * (h - 1) as f64;
        (px.round() as i64, py.round() as i64)
    }

    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, c);
        }
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), c: Rgb<u8>) {
        let (mut x0, mut y0) = self.to_pixel(a.0, a.1);
        let (x1, y1) = self.to_pixel(b.0, b.1);
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let mut err = dx + dy;
        loop {
            self.put(x0, y0, c);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    fn marker(&mut self, p: (f64, f64), c: Rgb<u8>) {
        let (x, y) = self.to_pixel(p.0, p.1);
        for d in -3..=3 {
            self.put(x + d, y, c);
            self.put(x, y + d, c);
        }
    }

    fn polyline(&mut self, pts: &[(f64, f64)], c: Rgb<u8>) {
        for w in pts.windows(2) {
            self.line(w[0], w[1], c);
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn unit(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - lo) / (hi - lo)
}

fn encode(img: &RgbImage) -> Result<Vec<u8>> {
    let mut bytes = std::io::Cursor::new(Vec::new());
    img.write_to(&mut bytes, ImageFormat::Png)?;
    Ok(bytes.into_inner())
}

// ------------------------------------------------------------------ figures

/// Heat map of `|u|` with time upwards and `x` to the right.
pub fn render_heatmap(samples: &[FieldSample]) -> Result<(Vec<u8>, PlotSummary)> {
    let mut times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    times.dedup();
    let mut xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (nt, nx) = (times.len(), xs.len());
    if nt * nx != samples.len() {
        return Err(Error::Schema(format!("field CSV is not a full {nt} x {nx} table ({} rows)", samples.len())));
    }
    let best = samples.iter().max_by(|a, b| a.abs_u.total_cmp(&b.abs_u)).expect("non-empty");
    let (lo, hi) = range(samples.iter().map(|s| s.abs_u));
    let width = nx.clamp(64, 1024) as u32;
    let height = nt.clamp(64, 1024) as u32;
    let mut canvas = Canvas::new(width, height, 8);
    for py in 0..height {
        let row = (height - 1 - py) as usize * nt / height as usize;
        for px in 0..width {
            let col = px as usize * nx / width as usize;
            let s = &samples[row * nx + col];
            let c = colormap(unit(s.abs_u, (lo, hi)));
            canvas.img.put_pixel(canvas.margin + px, canvas.margin + py, c);
        }
    }
    let summary = PlotSummary {
        width: canvas.img.width(),
        height: canvas.img.height(),
        max_value: best.abs_u,
        argmax: (best.t, best.x),
    };
    Ok((encode(&canvas.img)?, summary))
}

/// Traces of `hs_norm`, `mass_w`, `energy_w` and `momentum_w`, each scaled to
/// its own range.
pub fn render_norms(records: &[DiagnosticsRecord]) -> Result<(Vec<u8>, PlotSummary)> {
    if records.is_empty() {
        return Err(Error::Schema("CSV has no data rows".into()));
    }
    let trange = range(records.iter().map(|r| r.t));
    let series: [fn(&DiagnosticsRecord) -> f64; 4] = [|r| r.hs_norm, |r| r.mass_w, |r| r.energy_w, |r| r.momentum_w];
    let mut canvas = Canvas::new(640, 400, 24);
    for (f, color) in series.iter().zip(PALETTE) {
        let yr = range(records.iter().map(f));
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (unit(r.t, trange), unit(f(r), yr))).collect();
        canvas.polyline(&pts, color);
    }
    let best = records.iter().max_by(|a, b| a.hs_norm.total_cmp(&b.hs_norm)).expect("non-empty");
    let summary = PlotSummary {
        width: canvas.img.width(),
        height: canvas.img.height(),
        max_value: best.hs_norm,
        argmax: (best.t, best.hs_norm),
    };
    Ok((encode(&canvas.img)?, summary))
}

/// Fitted rates and frequencies (markers) over `|k| sqrt|2 - k^2|` (curve).
pub fn render_growth(rows: &[(f64, f64)]) -> Result<(Vec<u8>, PlotSummary)> {
    if rows.is_empty() {
        return Err(Error::Schema("CSV has no data rows".into()));
    }
    let kmax = rows.iter().map(|r| r.0.abs()).fold(2f64.sqrt(), f64::max) * 1.05;
    let curve: Vec<(f64, f64)> = (0..=400)
        .map(|i| {
            let k = kmax * i as f64 / 400.0;
            (k, dispersion(k).1)
        })
        .collect();
    let yr = range(curve.iter().map(|p| p.1).chain(rows.iter().map(|r| r.1)).chain([0.0]));
    let xr = (0.0, kmax);
    let mut canvas = Canvas::new(640, 400, 24);
    let pts: Vec<(f64, f64)> = curve.iter().map(|&(k, v)| (unit(k, xr), unit(v, yr))).collect();
    canvas.polyline(&pts, PALETTE[0]);
    for &(k, v) in rows {
        canvas.marker((unit(k.abs(), xr), unit(v, yr)), PALETTE[1]);
    }
    let best = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let summary = PlotSummary {
        width: canvas.img.width(),
        height: canvas.img.height(),
        max_value: best.1,
        argmax: (best.0, best.1),
    };
    Ok((encode(&canvas.img)?, summary))
}

fn read_growth(reader: impl Read) -> Result<Vec<(f64, f64)>> {
    read_table(reader, &GROWTH_CSV_HEADER)?.iter().map(|r| Ok((number(&r[0])?, number(&r[2])?))).collect()
}

/// Renders `csv` as `kind` into `out`. The CSV is fully parsed before the
/// image file is created, so a bad input leaves no file behind.
pub fn plot_file(csv: &Path, kind: PlotKind, out: &Path) -> Result<PlotSummary> {
    let file = std::fs::File::open(csv)?;
    let (bytes, summary) = match kind {
        PlotKind::Heatmap => render_heatmap(&read_field_csv(file)?)?,
        PlotKind::Norms => render_norms(&crate::diagnostics::read_csv_from(file)?)?,
        PlotKind::Growth => render_growth(&read_growth(file)?)?,
    };
    std::fs::write(out, bytes)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breathers::{offset, BreatherSpec};
    use crate::grid::Grid1D;

    fn peregrine_field_csv() -> Vec<u8> {
        let grid = Grid1D::new(20.0, 128).unwrap();
        let q = offset(&BreatherSpec::peregrine()).unwrap();
        let snaps: Vec<Snapshot> = (0..=20)
            .map(|i| {
                let t = -1.0 + 0.1 * i as f64;
                Snapshot { t, field: q.sample(&grid, t) }
            })
            .collect();
        let mut out = Vec::new();
        write_field_csv(&mut out, &snaps, 1).unwrap();
        out
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), Rgb([68, 1, 84]));
        assert_eq!(colormap(1.0), Rgb([253, 231, 37]));
        assert_eq!(colormap(f64::NAN), colormap(0.0));
    }

    #[test]
    fn heatmap_reports_peregrine_peak() {
        let samples = read_field_csv(&peregrine_field_csv()[..]).unwrap();
        let (_, summary) = render_heatmap(&samples).unwrap();
        assert!((summary.max_value - 3.0).abs() < 1e-9);
        assert!(summary.argmax.0.abs() < 1e-12 && summary.argmax.1.abs() < 1e-12);
    }

    #[test]
    fn rendering_is_deterministic() {
        let samples = read_field_csv(&peregrine_field_csv()[..]).unwrap();
        assert_eq!(render_heatmap(&samples).unwrap().0, render_heatmap(&samples).unwrap().0);
        let rows = [(0.5, 0.66), (1.0, 1.0), (2.0, 2.83)];
        let png = render_growth(&rows).unwrap().0;
        assert_eq!(&png[1..4], b"PNG");
        assert_eq!(png, render_growth(&rows).unwrap().0);
    }

    #[test]
    fn empty_or_mismatched_csv_is_rejected() {
        assert!(matches!(read_field_csv(&b"t,x,re_w,im_w,abs_u\n"[..]), Err(Error::Schema(_))));
        assert!(matches!(read_field_csv(&b"t,x,y\n1,2,3\n"[..]), Err(Error::Schema(_))));
        assert!(render_norms(&[]).is_err());
    }

    #[test]
    fn failed_plot_writes_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        std::fs::write(&csv, "k,regime,fitted,theory,abs_error\n").unwrap();
        let out = dir.path().join("growth.png");
        assert!(plot_file(&csv, PlotKind::Growth, &out).is_err());
        assert!(!out.exists());
    }
}
