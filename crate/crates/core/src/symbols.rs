//! Propagator kernels of the linearized flow around the Stokes wave.
//!
//! Each Fourier mode of `phi = Re w` obeys `phi'' + mu phi = 0` with
//! `mu = xi^2 (xi^2 - 2)`. The fundamental pair `C(mu, t)`, `S(mu, t)` with
//! `C(0) = 1, C'(0) = 0, S(0) = 0, S'(0) = 1` is a single analytic function of
//! `mu`: cosh/sinh for `mu < 0` (the unstable band `|xi| <= sqrt 2`),
//! cos/sin for `mu > 0`.

use std::fmt;

/// Below this value of `|mu| t^2` the kernels are evaluated by power series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Explicit constant for the oscillatory-band bounds
/// `|xi^2 S|, |(2 - xi^2) S| <= K max(1, t)`.
///
/// The supremum of `xi^2 |S| / max(1, t)` over `|xi| > sqrt 2`, `t >= 0` is
/// about 2.0450, reached near `xi = 1.506`, `t = 1`.
pub const HIGH_BAND_CONSTANT: f64 = 2.05;

/// Relative slack allowed when checking an inequality in floating point.
const BOUND_SLACK: f64 = 1e-12;

/// `mu(xi) = xi^2 (xi^2 - 2)`, clamped to its exact minimum `-1`.
pub fn mu(xi: f64) -> f64 {
    let xi2 = xi * xi;
    (xi2 * (xi2 - 2.0)).max(-1.0)
}

pub fn kernel_c(mu: f64, t: f64) -> f64 {
    let x = mu * t * t;
    if x.abs() < SERIES_THRESHOLD {
        1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0
    } else if mu > 0.0 {
        (mu.sqrt() * t).cos()
    } else {
        ((-mu).sqrt() * t).cosh()
    }
}

pub fn kernel_s(mu: f64, t: f64) -> f64 {
    let x = mu * t * t;
    if x.abs() < SERIES_THRESHOLD {
        t * (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0)
    } else if mu > 0.0 {
        let r = mu.sqrt();
        (r * t).sin() / r
    } else {
        let r = (-mu).sqrt();
        (r * t).sinh() / r
    }
}

/// `int_0^t S(mu, s) ds = (1 - C(mu, t)) / mu`.
pub fn kernel_s_integral(mu: f64, t: f64) -> f64 {
    let x = mu * t * t;
    if x.abs() < SERIES_THRESHOLD {
        t * t * (0.5 - x / 24.0 + x * x / 720.0 - x * x * x / 40320.0)
    } else {
        (1.0 - kernel_c(mu, t)) / mu
    }
}

/// Kernel evaluator. Lets the invariant suite run against a faulty variant.
pub trait Kernels: Sync {
    fn c(&self, mu: f64, t: f64) -> f64;
    fn s(&self, mu: f64, t: f64) -> f64;
}

/// The production kernels.
#[derive(Debug, Clone, Copy, Default)]
pub struct GuardedKernels;

impl Kernels for GuardedKernels {
    fn c(&self, mu: f64, t: f64) -> f64 {
        kernel_c(mu, t)
    }
    fn s(&self, mu: f64, t: f64) -> f64 {
        kernel_s(mu, t)
    }
}

/// Closed forms with no series branch; `S` is `0/0` at `mu = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnguardedKernels;

impl Kernels for UnguardedKernels {
    fn c(&self, mu: f64, t: f64) -> f64 {
        if mu >= 0.0 {
            (mu.sqrt() * t).cos()
        } else {
            ((-mu).sqrt() * t).cosh()
        }
    }
    fn s(&self, mu: f64, t: f64) -> f64 {
        if mu >= 0.0 {
            let r = mu.sqrt();
            (r * t).sin() / r
        } else {
            let r = (-mu).sqrt();
            (r * t).sinh() / r
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolPoint {
    pub xi: f64,
    pub mu: f64,
    pub t: f64,
}

impl SymbolPoint {
    pub fn new(xi: f64, t: f64) -> Self {
        Self { xi, mu: mu(xi), t }
    }

    /// `|xi| sqrt(2 - xi^2)` inside the unstable band, zero outside.
    pub fn growth_rate(&self) -> f64 {
        if self.mu < 0.0 {
            (-self.mu).sqrt()
        } else {
            0.0
        }
    }

    /// `|xi| sqrt(xi^2 - 2)` outside the unstable band, zero inside.
    pub fn oscillation_frequency(&self) -> f64 {
        if self.mu > 0.0 {
            self.mu.sqrt()
        } else {
            0.0
        }
    }

    pub fn c(&self) -> f64 {
        kernel_c(self.mu, self.t)
    }

    pub fn s(&self) -> f64 {
        kernel_s(self.mu, self.t)
    }
}

/// One checked inequality `value <= bound` over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub name: &'static str,
    pub max_ratio: f64,
    pub argmax_xi: f64,
    pub argmax_t: f64,
    pub samples: usize,
    /// First sample where the inequality failed, as `(xi, t)`.
    pub first_violation: Option<(f64, f64)>,
    pub violations: usize,
}

impl BoundRow {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            max_ratio: 0.0,
            argmax_xi: f64::NAN,
            argmax_t: f64::NAN,
            samples: 0,
            first_violation: None,
            violations: 0,
        }
    }

    fn record(&mut self, xi: f64, t: f64, value: f64, bound: f64) {
        self.samples += 1;
        let ratio = if bound > 0.0 {
            value / bound
        } else if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let ok = value.is_finite() && value <= bound * (1.0 + BOUND_SLACK) + f64::MIN_POSITIVE;
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some((xi, t));
            }
        }
        // a NaN ratio sticks so the report shows where evaluation broke down
        let update = !self.max_ratio.is_nan() && (ratio.is_nan() || ratio > self.max_ratio || self.argmax_xi.is_nan());
        if update {
            self.max_ratio = ratio;
            self.argmax_xi = xi;
            self.argmax_t = t;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub title: String,
    pub rows: Vec<BoundRow>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(BoundRow::passed)
    }

    pub fn row(&self, name: &str) -> Option<&BoundRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.title)?;
        for note in &self.notes {
            writeln!(f, "# {note}")?;
        }
        writeln!(f, "bound,max_ratio,argmax_xi,argmax_t,samples,violations,first_violation")?;
        for r in &self.rows {
            let witness = match r.first_violation {
                Some((xi, t)) => format!("xi={xi:.12};t={t:.12}"),
                None => "-".to_string(),
            };
            writeln!(
                f,
                "{},{:.15},{:.12},{:.12},{},{},{}",
                r.name, r.max_ratio, r.argmax_xi, r.argmax_t, r.samples, r.violations, witness
            )?;
        }
        Ok(())
    }
}

/// Low-band checks at explicit `(xi, t)` points with `|xi| <= sqrt 2`, `t >= 0`.
pub fn check_low_band_bounds(kernels: &dyn Kernels, points: impl IntoIterator<Item = (f64, f64)>) -> BoundReport {
    let mut rows = [
        BoundRow::new("C<=cosh(t)"),
        BoundRow::new("S<=sinh(t)"),
        BoundRow::new("xi^2*S<=2sinh(t)"),
        BoundRow::new("(2-xi^2)*S<=2sinh(t)"),
    ];
    for (xi, t) in points {
        let m = mu(xi);
        let (c, s) = (kernels.c(m, t), kernels.s(m, t));
        let xi2 = xi * xi;
        rows[0].record(xi, t, c, t.cosh());
        rows[1].record(xi, t, s, t.sinh());
        rows[2].record(xi, t, xi2 * s, 2.0 * t.sinh());
        rows[3].record(xi, t, (2.0 - xi2) * s, 2.0 * t.sinh());
    }
    BoundReport { title: "low band |xi| <= sqrt2".into(), rows: rows.into(), notes: Vec::new() }
}

/// High-band checks at explicit `(xi, t)` points with `|xi| > sqrt 2`, `t >= 0`.
pub fn check_high_band_bounds(
    kernels: &dyn Kernels,
    constant: f64,
    points: impl IntoIterator<Item = (f64, f64)>,
) -> BoundReport {
    let mut rows =
        [BoundRow::new("|C|<=1"), BoundRow::new("|xi^2*S|<=K*max(1,t)"), BoundRow::new("|(2-xi^2)*S|<=K*max(1,t)")];
    for (xi, t) in points {
        let m = mu(xi);
        let (c, s) = (kernels.c(m, t), kernels.s(m, t));
        let xi2 = xi * xi;
        let envelope = constant * t.max(1.0);
        rows[0].record(xi, t, c.abs(), 1.0);
        rows[1].record(xi, t, (xi2 * s).abs(), envelope);
        rows[2].record(xi, t, ((2.0 - xi2) * s).abs(), envelope);
    }
    BoundReport {
        title: format!("high band |xi| > sqrt2, K = {constant}"),
        rows: rows.into(),
        notes: vec!["K is an explicit constant chosen by this implementation".into()],
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

/// Dense tensor-grid check of the unstable-band bounds, `samples` points per axis.
/// The grid always contains `xi = 1` (where `C = cosh t`) and `xi = sqrt 2`.
pub fn verify_low_band_bounds(t_max: f64, samples: usize) -> BoundReport {
    verify_low_band_bounds_with(&GuardedKernels, t_max, samples)
}

pub fn verify_low_band_bounds_with(kernels: &dyn Kernels, t_max: f64, samples: usize) -> BoundReport {
    assert!(t_max > 0.0, "t_max must be positive");
    let mut xis: Vec<f64> = linspace(0.0, std::f64::consts::SQRT_2, samples).collect();
    xis.push(1.0);
    let ts: Vec<f64> = linspace(0.0, t_max, samples).collect();
    let points = xis.iter().flat_map(|&xi| ts.iter().map(move |&t| (xi, t)));
    let mut report = check_low_band_bounds(kernels, points);
    report.title = format!("low band |xi| <= sqrt2, t in [0, {t_max}]");
    report
}

/// Dense check of the oscillatory-band bounds for `sqrt 2 < |xi| <= xi_max`,
/// with abscissae clustered quadratically towards the band edge.
pub fn verify_high_band_bounds(t_max: f64, samples: usize, constant: f64) -> BoundReport {
    verify_high_band_bounds_with(&GuardedKernels, t_max, samples, constant, 10.0)
}

pub fn verify_high_band_bounds_with(
    kernels: &dyn Kernels,
    t_max: f64,
    samples: usize,
    constant: f64,
    xi_max: f64,
) -> BoundReport {
    assert!(t_max > 0.0, "t_max must be positive");
    let edge = std::f64::consts::SQRT_2;
    let n = samples.max(2);
    let xis: Vec<f64> = (1..=n)
        .map(|i| {
            let u = i as f64 / n as f64;
            edge + (xi_max - edge) * u * u
        })
        .collect();
    let ts: Vec<f64> = linspace(0.0, t_max, samples).collect();
    let points = xis.iter().flat_map(|&xi| ts.iter().map(move |&t| (xi, t)));
    let mut report = check_high_band_bounds(kernels, constant, points);
    report.title = format!("high band sqrt2 < |xi| <= {xi_max}, t in [0, {t_max}], K = {constant}");
    report
}

/// Largest `|C^2 + mu S^2 - 1|`, scaled by `C^2 + |mu| S^2`, over the given points.
///
/// In the unstable band both terms grow like `cosh^2 t`, so the identity can only
/// hold to rounding relative to that magnitude.
pub fn wronskian_deviation(kernels: &dyn Kernels, points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    points
        .into_iter()
        .map(|(m, t)| {
            let (c, s) = (kernels.c(m, t), kernels.s(m, t));
            let scale = (c * c + m.abs() * s * s).max(1.0);
            (c * c + m * s * s - 1.0).abs() / scale
        })
        // a NaN anywhere must surface, f64::max would drop it
        .fold(0.0, |acc: f64, d| if acc.is_nan() || d.is_nan() { f64::NAN } else { acc.max(d) })
}
