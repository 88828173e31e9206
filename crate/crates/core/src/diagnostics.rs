//! Conserved functionals, shift-minimized distances and rate fits.
//!
//! For `u = e^{it}(1 + w)`:
//! - mass `int |w|^2 + 2 Re w` equals `int (|u|^2 - 1)`;
//! - energy `int |w_x|^2 - 1/2 int (|w|^2 + 2 Re w)^2` equals twice
//!   `1/2 int |u_x|^2 - 1/4 int (|u|^2 - 1)^2`;
//! - momentum `Im int conj(w) w_x`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::breathers::ExactOffset;
use crate::error::{Error, Result};
use crate::grid::{hs_norm_coefficients, Grid1D, PerturbationField};
use crate::quadrature::WholeLineRule;

pub const CSV_HEADER: [&str; 10] = [
    "t",
    "mass_w",
    "energy_w",
    "momentum_w",
    "hs_norm",
    "linf",
    "zero_mode_re",
    "zero_mode_im",
    "err_vs_exact",
    "shift_x0",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_w: f64,
    pub energy_w: f64,
    pub momentum_w: f64,
    pub hs_norm: f64,
    pub linf: f64,
    pub zero_mode_re: f64,
    pub zero_mode_im: f64,
    /// Relative `H^s` distance to the exact offset after shift minimization.
    pub err_vs_exact: Option<f64>,
    pub shift_x0: Option<f64>,
}

impl DiagnosticsRecord {
    /// Energy in the `1/2 |u_x|^2 - 1/4 (|u|^2 - 1)^2` normalization.
    pub fn energy_u(&self) -> f64 {
        0.5 * self.energy_w
    }
}

pub fn mass_density(w: Complex64) -> f64 {
    w.norm_sqr() + 2.0 * w.re
}

pub fn mass_w(w: &PerturbationField) -> f64 {
    let dens: Vec<f64> = w.samples().iter().map(|&z| mass_density(z)).collect();
    w.grid().integrate_real(&dens)
}

pub fn energy_w(w: &PerturbationField) -> f64 {
    let grid = w.grid();
    let wx = grid.derivative(w.samples());
    let dens: Vec<f64> =
        w.samples().iter().zip(&wx).map(|(&z, d)| d.norm_sqr() - 0.5 * mass_density(z).powi(2)).collect();
    grid.integrate_real(&dens)
}

pub fn momentum_w(w: &PerturbationField) -> f64 {
    let grid = w.grid();
    let wx = grid.derivative(w.samples());
    let dens: Vec<f64> = w.samples().iter().zip(&wx).map(|(z, d)| (z.conj() * d).im).collect();
    grid.integrate_real(&dens)
}

/// `(int Re w, int Im w)`.
pub fn zero_modes(w: &PerturbationField) -> (f64, f64) {
    let total = w.grid().integrate(w.samples());
    (total.re, total.im)
}

pub fn compute_record(w: &PerturbationField, t: f64, s: f64, exact: Option<&ExactOffset>) -> Result<DiagnosticsRecord> {
    let (zr, zi) = zero_modes(w);
    let (err, shift) = match exact {
        Some(offset) => {
            let reference = offset.sample(w.grid(), t);
            let (dist, x0) = hs_distance_min_shift(w, &reference, s)?;
            let scale = reference.hs_norm(s)?;
            (Some(if scale > 0.0 { dist / scale } else { dist }), Some(x0))
        }
        None => (None, None),
    };
    Ok(DiagnosticsRecord {
        t,
        mass_w: mass_w(w),
        energy_w: energy_w(w),
        momentum_w: momentum_w(w),
        hs_norm: w.hs_norm(s)?,
        linf: w.linf_norm(),
        zero_mode_re: zr,
        zero_mode_im: zi,
        err_vs_exact: err,
        shift_x0: shift,
    })
}

/// `min_{x0} ||w - W(. - x0)||_{H^s}` and the minimizing shift, taken in
/// `(-L/2, L/2]`.
///
/// The cross-correlation `Re <w, W(. - x0)>_{H^s}` is a trigonometric
/// polynomial in `x0`; it is sampled on the grid shifts with one inverse FFT,
/// refined by a parabola through the best sample and its neighbours, and then
/// polished with Newton steps on the exact polynomial.
pub fn hs_distance_min_shift(w: &PerturbationField, reference: &PerturbationField, s: f64) -> Result<(f64, f64)> {
    let grid = w.grid();
    grid.check_same(reference.grid())?;
    let weights = grid.sobolev_weights(s)?;
    let n = grid.points();
    let wh = grid.forward(w.samples());
    let rh = grid.forward(reference.samples());
    let c: Vec<Complex64> = (0..n).map(|k| weights[k] * wh[k] * rh[k].conj()).collect();

    // backward(c (-1)^j)[m] = (1/L) sum_j c_j e^{i xi_j m dx}
    let signed: Vec<Complex64> = (0..n).map(|k| if grid.mode(k) % 2 == 0 { c[k] } else { -c[k] }).collect();
    let corr: Vec<f64> = grid.backward(&signed).iter().map(|z| z.re).collect();
    let best = (0..n).max_by(|&a, &b| corr[a].total_cmp(&corr[b])).unwrap_or(0);

    let dx = grid.dx();
    let (ym, y0, yp) = (corr[(best + n - 1) % n], corr[best], corr[(best + 1) % n]);
    let curvature = ym - 2.0 * y0 + yp;
    let mut offset = if curvature < 0.0 { 0.5 * (ym - yp) / curvature } else { 0.0 };
    offset = offset.clamp(-0.5, 0.5);
    let mut x0 = (best as f64 + offset) * dx;

    let xi = grid.frequencies();
    let eval = |x: f64| -> (f64, f64, f64) {
        let mut r = (0.0, 0.0, 0.0);
        for k in 0..n {
            if k == grid.nyquist_index() {
                continue;
            }
            let e = c[k] * Complex64::from_polar(1.0, xi[k] * x);
            r.0 += e.re;
            r.1 += (e * Complex64::new(0.0, xi[k])).re;
            r.2 -= xi[k] * xi[k] * e.re;
        }
        r
    };
    let grid_value = eval(x0).0;
    let mut polished = x0;
    for _ in 0..8 {
        let (_, d1, d2) = eval(polished);
        if d2 >= 0.0 {
            break;
        }
        let step = d1 / d2;
        polished -= step;
        if step.abs() < 1e-14 * (1.0 + polished.abs()) {
            break;
        }
    }
    if (polished - x0).abs() <= dx && eval(polished).0 >= grid_value {
        x0 = polished;
    }

    let length = grid.length();
    x0 = x0.rem_euclid(length);
    if x0 > 0.5 * length {
        x0 -= length;
    }
    // the Nyquist mode shifts as a cosine
    let diff: Vec<Complex64> = (0..n)
        .map(|k| {
            let phase = Complex64::from_polar(1.0, -xi[k] * x0);
            let phase = if k == grid.nyquist_index() { Complex64::new(phase.re, 0.0) } else { phase };
            wh[k] - rh[k] * phase
        })
        .collect();
    Ok((hs_norm_coefficients(grid, &diff, s)?, x0))
}

/// Least-squares slope of `ln amplitude` against `t` over samples whose
/// amplitude lies in `window`.
pub fn fit_growth_rate(times: &[f64], amplitudes: &[f64], window: (f64, f64)) -> Result<f64> {
    if times.len() != amplitudes.len() {
        return Err(Error::DegenerateWindow("times and amplitudes differ in length".into()));
    }
    let (lo, hi) = window;
    let (ts, ls): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(amplitudes)
        .filter(|(_, &a)| a >= lo && a <= hi && a > 0.0)
        .map(|(&t, &a)| (t, a.ln()))
        .unzip();
    if ts.len() < 3 {
        return Err(Error::DegenerateWindow(format!("{} samples inside [{lo:e}, {hi:e}], need at least 3", ts.len())));
    }
    if ts.iter().all(|&t| t == ts[0]) {
        return Err(Error::DegenerateWindow("all samples at the same time".into()));
    }
    Ok(crate::nonlinearity::least_squares_slope(&ts, &ls))
}

/// Angular frequency from the spacing of interpolated zero crossings:
/// consecutive crossings of `cos(omega t + c)` are `pi / omega` apart.
pub fn fit_oscillation_frequency(times: &[f64], signal: &[f64]) -> Result<f64> {
    if times.len() != signal.len() || times.len() < 2 {
        return Err(Error::DegenerateWindow("need matching series with at least two samples".into()));
    }
    let mut crossings = Vec::new();
    for i in 1..signal.len() {
        let (a, b) = (signal[i - 1], signal[i]);
        if a == 0.0 && i == 1 {
            crossings.push(times[0]);
        }
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            if b == 0.0 {
                crossings.push(times[i]);
            } else {
                let frac = a / (a - b);
                crossings.push(times[i - 1] + frac * (times[i] - times[i - 1]));
            }
        }
    }
    crossings.dedup();
    if crossings.len() < 2 {
        return Err(Error::DegenerateWindow(format!("{} zero crossings, need at least 2", crossings.len())));
    }
    // least squares on crossing index vs time spreads the interpolation error
    let idx: Vec<f64> = (0..crossings.len()).map(|i| i as f64).collect();
    let spacing = crate::nonlinearity::least_squares_slope(&idx, &crossings);
    Ok(std::f64::consts::PI / spacing)
}

/// Fourth-order centered difference of a complex function of `x`.
fn derivative_fd(f: &impl Fn(f64) -> Complex64, x: f64, h: f64) -> Complex64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Whole-line functionals of an exact offset at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WholeLineValues {
    pub mass: f64,
    pub energy_w: f64,
    pub momentum: f64,
    pub l2_squared: f64,
}

pub fn whole_line_functionals(offset: &ExactOffset, t: f64, rule: &WholeLineRule) -> WholeLineValues {
    let w = |x: f64| offset.at(t, x);
    let h = 1e-3;
    WholeLineValues {
        mass: rule.integrate(|x| mass_density(w(x))),
        energy_w: rule.integrate(|x| derivative_fd(&w, x, h).norm_sqr() - 0.5 * mass_density(w(x)).powi(2)),
        momentum: rule.integrate(|x| (w(x).conj() * derivative_fd(&w, x, h)).im),
        l2_squared: rule.integrate(|x| w(x).norm_sqr()),
    }
}

/// Writes records with the fixed header. Missing optional values are empty.
pub struct DiagnosticsWriter<W: Write> {
    inner: csv::Writer<W>,
}

fn fmt_value(v: f64) -> String {
    format!("{v:.17e}")
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(CSV_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        let opt = |v: Option<f64>| v.map(fmt_value).unwrap_or_default();
        self.inner.write_record([
            fmt_value(r.t),
            fmt_value(r.mass_w),
            fmt_value(r.energy_w),
            fmt_value(r.momentum_w),
            fmt_value(r.hs_norm),
            fmt_value(r.linf),
            fmt_value(r.zero_mode_re),
            fmt_value(r.zero_mode_im),
            opt(r.err_vs_exact),
            opt(r.shift_x0),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = DiagnosticsWriter::new(std::io::BufWriter::new(file))?;
    for r in records {
        w.write(r)?;
    }
    w.finish()?.flush()?;
    Ok(())
}

pub fn read_csv_from(reader: impl Read) -> Result<Vec<DiagnosticsRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != CSV_HEADER {
        return Err(Error::Schema(format!("unexpected diagnostics header {header:?}")));
    }
    let parse = |s: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|e| Error::Schema(format!("bad number `{s}`: {e}")))
    };
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.trim().is_empty() {
            Ok(None)
        } else {
            parse(s).map(Some)
        }
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Schema(format!("row has {} fields", row.len())));
        }
        out.push(DiagnosticsRecord {
            t: parse(&row[0])?,
            mass_w: parse(&row[1])?,
            energy_w: parse(&row[2])?,
            momentum_w: parse(&row[3])?,
            hs_norm: parse(&row[4])?,
            linf: parse(&row[5])?,
            zero_mode_re: parse(&row[6])?,
            zero_mode_im: parse(&row[7])?,
            err_vs_exact: opt(&row[8])?,
            shift_x0: opt(&row[9])?,
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    read_csv_from(std::fs::File::open(path)?)
}

/// Helper for tests and experiments: a field sampled from `f` on `grid`.
pub fn sample(grid: &Grid1D, f: impl Fn(f64) -> Complex64) -> PerturbationField {
    PerturbationField::from_fn(grid, f)
}
