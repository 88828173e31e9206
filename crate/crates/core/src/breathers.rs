//! Exact solutions of `i u_t + u_xx + |u|^2 u = 0` on the unit background and
//! their offsets `W` defined by `u = e^{it}(1 + W)`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, PerturbationField};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BreatherKind {
    Stokes,
    PlaneWave { c: f64, v: f64, gamma: f64 },
    Peregrine,
    KuznetsovMa { a: f64 },
    Akhmediev { a: f64 },
}

/// A breather with shifts. Shifts act on the offset:
/// `W_spec(t, x) = W(t - t0, x - x0)`, which by phase invariance is again an
/// exact solution once the background `e^{it}` is restored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreatherSpec {
    #[serde(flatten)]
    pub kind: BreatherKind,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub t0: f64,
}

impl fmt::Display for BreatherSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BreatherKind::Stokes => write!(f, "stokes")?,
            BreatherKind::PlaneWave { c, v, gamma } => write!(f, "plane_wave(c={c}, v={v}, gamma={gamma})")?,
            BreatherKind::Peregrine => write!(f, "peregrine")?,
            BreatherKind::KuznetsovMa { a } => write!(f, "kuznetsov_ma(a={a})")?,
            BreatherKind::Akhmediev { a } => write!(f, "akhmediev(a={a})")?,
        }
        if self.x0 != 0.0 || self.t0 != 0.0 {
            write!(f, " shifted by (t0={}, x0={})", self.t0, self.x0)?;
        }
        Ok(())
    }
}

/// `(alpha, beta)` of the Kuznetsov-Ma breather, `a > 1/2`.
pub fn km_parameters(a: f64) -> (f64, f64) {
    ((8.0 * a * (2.0 * a - 1.0)).sqrt(), (2.0 * (2.0 * a - 1.0)).sqrt())
}

/// `(alpha, beta)` of the Akhmediev breather, `0 < a < 1/2`; `alpha` is the
/// spatial wavenumber and `beta` the temporal rate.
pub fn akhmediev_parameters(a: f64) -> (f64, f64) {
    ((2.0 * (1.0 - 2.0 * a)).sqrt(), (8.0 * a * (1.0 - 2.0 * a)).sqrt())
}

impl BreatherSpec {
    pub fn new(kind: BreatherKind) -> Result<Self> {
        let spec = Self { kind, x0: 0.0, t0: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn stokes() -> Self {
        Self { kind: BreatherKind::Stokes, x0: 0.0, t0: 0.0 }
    }

    pub fn peregrine() -> Self {
        Self { kind: BreatherKind::Peregrine, x0: 0.0, t0: 0.0 }
    }

    pub fn kuznetsov_ma(a: f64) -> Result<Self> {
        Self::new(BreatherKind::KuznetsovMa { a })
    }

    pub fn akhmediev(a: f64) -> Result<Self> {
        Self::new(BreatherKind::Akhmediev { a })
    }

    pub fn plane_wave(c: f64, v: f64, gamma: f64) -> Result<Self> {
        Self::new(BreatherKind::PlaneWave { c, v, gamma })
    }

    pub fn shifted(mut self, t0: f64, x0: f64) -> Self {
        self.t0 = t0;
        self.x0 = x0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.x0.is_finite() && self.t0.is_finite()) {
            return bad("breather shifts must be finite".into());
        }
        match self.kind {
            BreatherKind::KuznetsovMa { a } if !(a > 0.5 && a.is_finite()) => {
                bad(format!("Kuznetsov-Ma needs a > 1/2, got {a}"))
            }
            BreatherKind::Akhmediev { a } if !(a > 0.0 && a < 0.5) => {
                bad(format!("Akhmediev needs 0 < a < 1/2, got {a}"))
            }
            BreatherKind::PlaneWave { c, v, gamma } if !(c > 0.0 && v.is_finite() && gamma.is_finite()) => {
                bad(format!("plane wave needs c > 0 and finite v, gamma; got c = {c}"))
            }
            _ => Ok(()),
        }
    }

    /// Time period of the offset, if any.
    pub fn time_period(&self) -> Option<f64> {
        match self.kind {
            BreatherKind::KuznetsovMa { a } => Some(2.0 * PI / km_parameters(a).0),
            _ => None,
        }
    }

    /// Space period of the offset, if any.
    pub fn space_period(&self) -> Option<f64> {
        match self.kind {
            BreatherKind::Akhmediev { a } => Some(2.0 * PI / akhmediev_parameters(a).0),
            _ => None,
        }
    }

    /// Unshifted offset; assumes a validated spec.
    fn raw_offset(&self, t: f64, x: f64) -> Complex64 {
        match self.kind {
            BreatherKind::Stokes => Complex64::new(0.0, 0.0),
            BreatherKind::PlaneWave { c, v, gamma } => {
                let phase = c * t + 0.5 * v * x - 0.25 * v * v * t + gamma - t;
                c.sqrt() * Complex64::from_polar(1.0, phase) - 1.0
            }
            BreatherKind::Peregrine => {
                let d = 1.0 + 4.0 * t * t + 2.0 * x * x;
                -4.0 * Complex64::new(1.0, 2.0 * t) / d
            }
            BreatherKind::KuznetsovMa { a } => {
                let (alpha, beta) = km_parameters(a);
                let (ca, sa) = ((alpha * t).cos(), (alpha * t).sin());
                let num = Complex64::new(beta * beta * ca, alpha * sa);
                let den = alpha * (beta * x).cosh() - SQRT_2 * beta * ca;
                -SQRT_2 * beta * num / den
            }
            BreatherKind::Akhmediev { a } => {
                let (alpha, beta) = akhmediev_parameters(a);
                let (ch, sh) = ((beta * t).cosh(), (beta * t).sinh());
                let num = Complex64::new(alpha * alpha * ch, beta * sh);
                let den = (2.0 * a).sqrt() * (alpha * x).cos() - ch;
                num / den
            }
        }
    }

    /// `W(t - t0, x - x0)`.
    pub fn offset_at(&self, t: f64, x: f64) -> Complex64 {
        self.raw_offset(t - self.t0, x - self.x0)
    }

    /// `u(t, x) = e^{it}(1 + W)`.
    pub fn value_at(&self, t: f64, x: f64) -> Complex64 {
        Complex64::from_polar(1.0, t) * (1.0 + self.offset_at(t, x))
    }
}

pub fn evaluate(spec: &BreatherSpec, t: f64, x: f64) -> Result<Complex64> {
    spec.validate()?;
    Ok(spec.value_at(t, x))
}

/// The offset of a validated spec as a reusable callable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOffset {
    spec: BreatherSpec,
}

impl ExactOffset {
    pub fn spec(&self) -> &BreatherSpec {
        &self.spec
    }

    pub fn at(&self, t: f64, x: f64) -> Complex64 {
        self.spec.offset_at(t, x)
    }

    pub fn sample(&self, grid: &Grid1D, t: f64) -> PerturbationField {
        PerturbationField::from_fn(grid, |x| self.at(t, x))
    }
}

pub fn offset(spec: &BreatherSpec) -> Result<ExactOffset> {
    spec.validate()?;
    Ok(ExactOffset { spec: *spec })
}

pub const RESIDUAL_TIME_STEP: f64 = 1e-5;

/// Max over the inner half of the box (`|x - x0| <= L/4`) of
/// `|i u_t + u_xx + |u|^2 u|`, with `u_t` by centered differences and `u_xx`
/// spectrally. The full box is used for the spatially periodic Akhmediev
/// breather.
pub fn residual(spec: &BreatherSpec, grid: &Grid1D, t: f64) -> Result<f64> {
    residual_with_step(spec, grid, t, RESIDUAL_TIME_STEP)
}

pub fn residual_with_step(spec: &BreatherSpec, grid: &Grid1D, t: f64, h: f64) -> Result<f64> {
    spec.validate()?;
    let xs = grid.xs();
    let u: Vec<Complex64> = xs.iter().map(|&x| spec.value_at(t, x)).collect();
    let uxx = grid.second_derivative(&u);
    let interior = spec.space_period().is_some();
    let mut worst: f64 = 0.0;
    for (n, &x) in xs.iter().enumerate() {
        if !interior && (x - spec.x0).abs() > 0.25 * grid.length() {
            continue;
        }
        let ut = (spec.value_at(t + h, x) - spec.value_at(t - h, x)) / (2.0 * h);
        let r = I * ut + uxx[n] + u[n].norm_sqr() * u[n];
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Checks that a box length is an integer multiple of the spec's spatial period.
pub fn check_commensurate(spec: &BreatherSpec, length: f64) -> Result<()> {
    if let Some(p) = spec.space_period() {
        let ratio = length / p;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "box length {length} is not a multiple of the Akhmediev period {p}; try L = {}",
                p * ratio.round().max(1.0)
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub a: f64,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub family: &'static str,
    pub rows: Vec<LimitRow>,
}

impl LimitReport {
    /// Distances decrease along the sequence, ignoring the first entry.
    pub fn monotone(&self) -> bool {
        self.rows.iter().skip(1).collect::<Vec<_>>().windows(2).all(|w| w[1].sup_distance <= w[0].sup_distance)
    }
}

impl fmt::Display for LimitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} -> peregrine on [-1,1]^2", self.family)?;
        writeln!(f, "a,sup_distance")?;
        for r in &self.rows {
            writeln!(f, "{},{:.6e}", r.a, r.sup_distance)?;
        }
        Ok(())
    }
}

fn sup_distance_to_peregrine(spec: &BreatherSpec, samples: usize) -> f64 {
    let p = BreatherSpec::peregrine();
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let t = -1.0 + 2.0 * i as f64 / (samples - 1) as f64;
        for j in 0..samples {
            let x = -1.0 + 2.0 * j as f64 / (samples - 1) as f64;
            worst = worst.max((spec.value_at(t, x) - p.value_at(t, x)).norm());
        }
    }
    worst
}

/// Sup-norm distance to the Peregrine breather on `[-1, 1]^2` along
/// sequences `a -> 1/2` (from above for Kuznetsov-Ma, below for Akhmediev).
pub fn limit_checks(km_sequence: &[f64], akhmediev_sequence: &[f64]) -> Result<(LimitReport, LimitReport)> {
    let samples = 41;
    let km = km_sequence
        .iter()
        .map(|&a| Ok(LimitRow { a, sup_distance: sup_distance_to_peregrine(&BreatherSpec::kuznetsov_ma(a)?, samples) }))
        .collect::<Result<Vec<_>>>()?;
    let ak = akhmediev_sequence
        .iter()
        .map(|&a| Ok(LimitRow { a, sup_distance: sup_distance_to_peregrine(&BreatherSpec::akhmediev(a)?, samples) }))
        .collect::<Result<Vec<_>>>()?;
    Ok((LimitReport { family: "kuznetsov_ma", rows: km }, LimitReport { family: "akhmediev", rows: ak }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn peregrine_peak() {
        let p = BreatherSpec::peregrine();
        assert!(close(p.value_at(0.0, 0.0), Complex64::new(-3.0, 0.0), 1e-15));
        assert!(close(p.offset_at(0.0, 0.0), Complex64::new(-4.0, 0.0), 1e-15));
    }

    #[test]
    fn km_center_value() {
        let b = BreatherSpec::kuznetsov_ma(1.0).unwrap();
        let expected = -1.0 - 2.0 * SQRT_2;
        assert!(close(b.value_at(0.0, 0.0), Complex64::new(expected, 0.0), 1e-14));
        assert!(close(b.offset_at(0.0, 0.0), Complex64::new(-2.0 - 2.0 * SQRT_2, 0.0), 1e-14));
        let (alpha, beta) = km_parameters(1.0);
        assert!((alpha - 2.0 * SQRT_2).abs() < 1e-15 && (beta - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn stokes_has_unit_modulus() {
        let s = BreatherSpec::stokes();
        for &(t, x) in &[(0.0, 0.0), (1.3, -7.0), (-20.0, 3.3)] {
            assert!((s.value_at(t, x).norm() - 1.0).abs() < 1e-15);
            assert_eq!(s.offset_at(t, x), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn plane_wave_with_unit_amplitude_and_no_drift_is_stokes() {
        let p = BreatherSpec::plane_wave(1.0, 0.0, 0.0).unwrap();
        assert!(p.offset_at(2.0, 1.0).norm() < 1e-15);
        let q = BreatherSpec::plane_wave(2.0, 0.5, 0.1).unwrap();
        assert!((q.value_at(0.7, 0.3).norm() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn domain_checks() {
        assert!(BreatherSpec::kuznetsov_ma(0.5).is_err());
        assert!(BreatherSpec::akhmediev(0.5).is_err());
        assert!(BreatherSpec::akhmediev(0.0).is_err());
        assert!(BreatherSpec::plane_wave(0.0, 1.0, 0.0).is_err());
        let bad = BreatherSpec { kind: BreatherKind::KuznetsovMa { a: 0.3 }, x0: 0.0, t0: 0.0 };
        assert!(evaluate(&bad, 0.0, 0.0).is_err());
        assert!(offset(&bad).is_err());
    }

    #[test]
    fn offset_restores_full_solution() {
        for spec in [
            BreatherSpec::peregrine().shifted(0.3, -1.0),
            BreatherSpec::kuznetsov_ma(0.8).unwrap(),
            BreatherSpec::akhmediev(0.3).unwrap(),
            BreatherSpec::plane_wave(1.5, 0.2, 0.4).unwrap(),
        ] {
            let w = offset(&spec).unwrap();
            for &(t, x) in &[(0.0, 0.0), (0.4, 1.7), (-1.1, -2.5)] {
                let u = evaluate(&spec, t, x).unwrap();
                let rebuilt = Complex64::from_polar(1.0, t) * (1.0 + w.at(t, x));
                assert!(close(u, rebuilt, 1e-14));
            }
        }
    }

    #[test]
    fn peregrine_symmetries() {
        let p = BreatherSpec::peregrine();
        for &(t, x) in &[(0.5, 1.0), (2.0, -3.0), (0.1, 0.2)] {
            assert_eq!(p.offset_at(-t, x), p.offset_at(t, x).conj());
            assert_eq!(p.offset_at(t, -x), p.offset_at(t, x));
        }
    }

    #[test]
    fn km_offset_is_time_periodic() {
        for a in [0.75, 1.0, 2.0] {
            let b = BreatherSpec::kuznetsov_ma(a).unwrap();
            let period = b.time_period().unwrap();
            for &(t, x) in &[(0.0, 0.0), (0.3, 1.0), (1.0, -0.5)] {
                let w0 = b.offset_at(t, x);
                assert!(close(b.offset_at(t + period, x), w0, 1e-12 * (1.0 + w0.norm())));
            }
        }
    }

    #[test]
    fn akhmediev_offset_is_space_periodic() {
        let a = BreatherSpec::akhmediev(0.25).unwrap();
        let period = a.space_period().unwrap();
        assert!((period - 2.0 * PI).abs() < 1e-12);
        for &(t, x) in &[(0.0, 0.0), (0.3, 1.0), (-1.0, 2.5)] {
            assert!(close(a.offset_at(t, x + period), a.offset_at(t, x), 1e-12));
        }
        assert!(check_commensurate(&a, 4.0 * period).is_ok());
        assert!(check_commensurate(&a, 20.0).is_err());
        assert!(check_commensurate(&BreatherSpec::peregrine(), 20.0).is_ok());
    }

    #[test]
    fn shifts_translate_the_offset() {
        let p = BreatherSpec::peregrine().shifted(1.5, 4.0);
        assert_eq!(p.offset_at(1.5, 4.0), Complex64::new(-4.0, 0.0));
    }

    #[test]
    fn residual_stokes() {
        let g = Grid1D::new(20.0, 64).unwrap();
        assert!(residual(&BreatherSpec::stokes(), &g, 0.3).unwrap() <= 1e-9);
    }

    #[test]
    fn residual_peregrine() {
        let g = Grid1D::new(80.0, 2048).unwrap();
        for t in [-1.0, 0.0, 0.5] {
            let r = residual(&BreatherSpec::peregrine(), &g, t).unwrap();
            assert!(r <= 1e-6, "t = {t}: {r:e}");
        }
    }

    #[test]
    fn residual_km_and_akhmediev() {
        let g = Grid1D::new(40.0, 1024).unwrap();
        for t in [0.0, 0.4, 1.1] {
            let r = residual(&BreatherSpec::kuznetsov_ma(0.75).unwrap(), &g, t).unwrap();
            assert!(r <= 1e-6, "km t = {t}: {r:e}");
        }
        let ak = BreatherSpec::akhmediev(0.25).unwrap();
        let ga = Grid1D::new(4.0 * ak.space_period().unwrap(), 256).unwrap();
        for t in [-1.0, 0.0, 0.7] {
            let r = residual(&ak, &ga, t).unwrap();
            assert!(r <= 1e-6, "akhmediev t = {t}: {r:e}");
        }
    }

    #[test]
    fn residual_detects_periodization_mismatch() {
        let right = BreatherSpec::plane_wave(1.0, 1.0, 0.0).unwrap();
        assert!(residual(&right, &Grid1D::new(4.0 * PI, 64).unwrap(), 0.0).unwrap() < 1e-9);
        let ak = BreatherSpec::akhmediev(0.25).unwrap();
        assert!(residual(&ak, &Grid1D::new(2.0 * PI, 64).unwrap(), 0.0).unwrap() < 1e-6);
        // a box that is not a multiple of the period breaks the spectral derivative
        assert!(residual(&ak, &Grid1D::new(5.0, 64).unwrap(), 0.0).unwrap() > 1e-3);
    }

    #[test]
    fn residual_time_step_refinement() {
        // FD truncation halves twice per halving of h until round-off dominates
        let g = Grid1D::new(80.0, 2048).unwrap();
        let p = BreatherSpec::peregrine();
        let r1 = residual_with_step(&p, &g, 0.3, 1e-2).unwrap();
        let r2 = residual_with_step(&p, &g, 0.3, 5e-3).unwrap();
        let slope = (r1 / r2).log2();
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn limits_to_peregrine() {
        let (km, ak) = limit_checks(&[0.6, 0.55, 0.51, 0.501, 0.5001], &[0.4, 0.45, 0.49, 0.499, 0.4999]).unwrap();
        assert!(km.monotone(), "{km}");
        assert!(ak.monotone(), "{ak}");
        assert!(km.rows.last().unwrap().sup_distance < 0.05, "{km}");
        assert!(ak.rows.last().unwrap().sup_distance < 0.05, "{ak}");
    }

    #[test]
    fn serde_round_trip() {
        let spec = BreatherSpec::kuznetsov_ma(1.0).unwrap().shifted(0.0, 3.0);
        let text = toml::to_string(&spec).unwrap();
        let back: BreatherSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let p: BreatherSpec = toml::from_str("kind = \"peregrine\"").unwrap();
        assert_eq!(p, BreatherSpec::peregrine());
    }
}
