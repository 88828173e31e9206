//! Canned experiments: dispersion-relation scan, Peregrine and Kuznetsov-Ma
//! instability runs, the invariant suite and breather tables.
//!
//! Sweeps run on a bounded rayon pool; every result vector is in input order,
//! so output is independent of the worker count.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::breathers::{self, BreatherSpec};
use crate::config::{GrowthScanConfig, InitialCondition, KmConfig, ModeProfile, PeregrineConfig};
use crate::diagnostics::{fit_growth_rate, fit_oscillation_frequency, hs_distance_min_shift, whole_line_functionals};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, PerturbationField};
use crate::propagator::SpectralPair;
use crate::quadrature::WholeLineRule;
use crate::solver::{run_from, SolverConfig};
use crate::symbols::{self, GuardedKernels, Kernels, UnguardedKernels};

/// Pool with `workers` threads; `0` lets rayon decide.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))
}

fn solve(w0: &PerturbationField, t0: f64, config: &SolverConfig) -> Result<crate::solver::Trajectory> {
    run_from(w0, t0, config).map_err(|f| f.error)
}

// ---------------------------------------------------------------- growth scan

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Growth,
    Oscillation,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Regime::Growth => "growth",
            Regime::Oscillation => "oscillation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: f64,
    pub regime: Regime,
    pub fitted: f64,
    pub theory: f64,
    pub abs_error: f64,
}

pub const GROWTH_CSV_HEADER: [&str; 5] = ["k", "regime", "fitted", "theory", "abs_error"];

/// Rate `|k| sqrt(2 - k^2)` inside the unstable band, frequency
/// `|k| sqrt(k^2 - 2)` outside.
pub fn dispersion(k: f64) -> (Regime, f64) {
    let k2 = k * k;
    if k2 < 2.0 {
        (Regime::Growth, k.abs() * (2.0 - k2).sqrt())
    } else {
        (Regime::Oscillation, k.abs() * (k2 - 2.0).sqrt())
    }
}

/// Fits the growth rate or oscillation frequency of each `k` from a
/// single-mode run. All `k` are checked for representability before any run.
///
/// Growth uses the growing eigenvector as data and the mode amplitude
/// `(|w^(k)| + |w^(-k)|) / L` inside `window`; oscillation uses cosine data
/// and zero crossings of `Re phi^(k)`.
pub fn growth_scan(
    grid: &Grid1D,
    scan: &GrowthScanConfig,
    solver: &SolverConfig,
    workers: usize,
) -> Result<Vec<GrowthRow>> {
    for &k in &scan.ks {
        grid.find_frequency(k)?;
        if (k * k - 2.0).abs() < 1e-12 {
            return Err(Error::InvalidParameter(format!("k = {k} sits on the band edge; nothing to fit")));
        }
    }
    worker_pool(workers)?.install(|| scan.ks.par_iter().map(|&k| growth_row(grid, k, scan, solver)).collect())
}

fn growth_row(grid: &Grid1D, k: f64, scan: &GrowthScanConfig, solver: &SolverConfig) -> Result<GrowthRow> {
    let j = grid.find_frequency(k)?;
    let jm = grid.mirror(j);
    let kk = grid.xi(j);
    let (regime, theory) = dispersion(kk);
    let mut config = solver.clone();
    let fitted = match regime {
        Regime::Growth => {
            let w0 = InitialCondition::SingleMode { k: kk, amplitude: scan.amplitude, profile: ModeProfile::Growing }
                .build(grid, 0.0, solver.s, 0)?;
            let needed = (scan.window.1 / scan.amplitude).ln() / theory;
            config.t_end = (1.1 * needed + 1.0).min(scan.max_time);
            config.snapshot_interval = solver.snapshot_interval.min(0.05);
            let traj = solve(&w0, 0.0, &config)?;
            let l = grid.length();
            let amps: Vec<f64> = traj
                .snapshots
                .iter()
                .map(|s| {
                    let hat = grid.forward(s.field.samples());
                    (hat[j].norm() + hat[jm].norm()) / l
                })
                .collect();
            fit_growth_rate(&traj.times(), &amps, scan.window)?
        }
        Regime::Oscillation => {
            let w0 = InitialCondition::SingleMode { k: kk, amplitude: scan.amplitude, profile: ModeProfile::Cosine }
                .build(grid, 0.0, solver.s, 0)?;
            let period = 2.0 * PI / theory;
            config.t_end = (10.0 * period).min(scan.max_time);
            config.snapshot_interval = solver.snapshot_interval.min(period / 64.0);
            let traj = solve(&w0, 0.0, &config)?;
            let signal: Vec<f64> =
                traj.snapshots.iter().map(|s| SpectralPair::from_field(&s.field).phi_hat[j].re).collect();
            fit_oscillation_frequency(&traj.times(), &signal)?
        }
    };
    Ok(GrowthRow { k, regime, fitted, theory, abs_error: (fitted - theory).abs() })
}

pub fn write_growth_csv(path: &Path, rows: &[GrowthRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(GROWTH_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{}", r.k),
            r.regime.to_string(),
            format!("{:.12e}", r.fitted),
            format!("{:.12e}", r.theory),
            format!("{:.6e}", r.abs_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// --------------------------------------------------------- Peregrine instability

/// `||Q(t)||_{L^2} = (4 sqrt2 pi)^{1/2} (1 + 4 t^2)^{-1/4}` on the line.
pub fn peregrine_l2_theory(t: f64) -> f64 {
    (4.0 * SQRT_2 * PI).sqrt() * (1.0 + 4.0 * t * t).powf(-0.25)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeregrineRow {
    pub horizon: f64,
    /// Time the integration started from exact data: `-T`, or `-window` for long horizons.
    pub start_time: f64,
    pub initial_l2_whole_line: f64,
    pub initial_l2_theory: f64,
    pub initial_hs_box: f64,
    pub arrival_l2: f64,
    pub arrival_l2_theory: f64,
    /// Shift-minimized `H^s` distance to `Q(0)`.
    pub distance_to_profile: f64,
    pub shift: f64,
    /// `||w(0)||_{H^s}`, the distance to the Stokes wave.
    pub distance_to_stokes: f64,
}

/// Starts from the Peregrine offset at `-T` and integrates to `0`, for each
/// horizon. Horizons above `full_integration_max` only integrate the final
/// `[-window, 0]` from exact data; their initial norms come from quadrature.
pub fn peregrine_instability(
    grid: &Grid1D,
    cfg: &PeregrineConfig,
    solver: &SolverConfig,
    workers: usize,
) -> Result<Vec<PeregrineRow>> {
    if cfg.horizons.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("horizons must be finite and non-negative".into()));
    }
    let offset = breathers::offset(&BreatherSpec::peregrine())?;
    worker_pool(workers)?.install(|| {
        cfg.horizons
            .par_iter()
            .map(|&horizon| {
                let start = if horizon <= cfg.full_integration_max { -horizon } else { -cfg.window.min(horizon) };
                let rule = WholeLineRule::with_split(100f64.max(4.0 * horizon));
                let initial = whole_line_functionals(&offset, -horizon, &rule).l2_squared.sqrt();
                let initial_hs_box = offset.sample(grid, -horizon).hs_norm(solver.s)?;
                let mut config = solver.clone();
                config.t_end = 0.0;
                let w0 = offset.sample(grid, start);
                let traj = solve(&w0, start, &config)?;
                let arrival = &traj.last().field;
                let reference = offset.sample(grid, 0.0);
                let (distance, shift) = hs_distance_min_shift(arrival, &reference, solver.s)?;
                Ok(PeregrineRow {
                    horizon,
                    start_time: start,
                    initial_l2_whole_line: initial,
                    initial_l2_theory: peregrine_l2_theory(horizon),
                    initial_hs_box,
                    arrival_l2: arrival.l2_norm(),
                    arrival_l2_theory: peregrine_l2_theory(0.0),
                    distance_to_profile: distance,
                    shift,
                    distance_to_stokes: arrival.hs_norm(solver.s)?,
                })
            })
            .collect()
    })
}

pub fn write_peregrine_csv(path: &Path, rows: &[PeregrineRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "horizon",
        "start_time",
        "initial_l2_whole_line",
        "initial_l2_theory",
        "initial_hs_box",
        "arrival_l2",
        "arrival_l2_theory",
        "distance_to_profile",
        "shift",
        "distance_to_stokes",
    ])?;
    for r in rows {
        w.write_record(
            [
                r.horizon,
                r.start_time,
                r.initial_l2_whole_line,
                r.initial_l2_theory,
                r.initial_hs_box,
                r.arrival_l2,
                r.arrival_l2_theory,
                r.distance_to_profile,
                r.shift,
                r.distance_to_stokes,
            ]
            .map(|v| format!("{v:.12e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------- KM instability

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmReport {
    pub a: f64,
    pub period: f64,
    pub horizon: f64,
    pub peregrine_time: f64,
    pub x0: f64,
    pub scale: f64,
    pub times: Vec<f64>,
    /// `||w_perturbed(t) - w_km(t)||_{H^s}` at each snapshot.
    pub separations: Vec<f64>,
    /// `None` when the runs start identical.
    pub final_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    /// `||w_km(horizon) - w_km(0)||_{L^2}` of the unperturbed run.
    pub control_return_error: f64,
}

impl fmt::Display for KmReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# Kuznetsov-Ma a = {}, period {:.9}, horizon {:.9}", self.a, self.period, self.horizon)?;
        writeln!(
            f,
            "# perturbation: {} * Peregrine offset at internal time -{} centred at x0 = {}",
            self.scale, self.peregrine_time, self.x0
        )?;
        writeln!(f, "# periodic-box approximation of a whole-line argument; separation measured in H^s")?;
        let ratio = |r: Option<f64>| r.map_or("undefined".to_string(), |r| format!("{r:.6}"));
        writeln!(f, "# final/initial separation = {}, max = {}", ratio(self.final_ratio), ratio(self.max_ratio))?;
        writeln!(f, "# control return error (L2) = {:.3e}", self.control_return_error)?;
        writeln!(f, "t,separation")?;
        for (t, s) in self.times.iter().zip(&self.separations) {
            writeln!(f, "{t:.9},{s:.12e}")?;
        }
        Ok(())
    }
}

/// Runs the Kuznetsov-Ma offset with and without a far-shifted, small
/// Peregrine offset added, and tracks the separation of the two trajectories.
pub fn km_instability(grid: &Grid1D, km: &KmConfig, solver: &SolverConfig) -> Result<KmReport> {
    let spec = BreatherSpec::kuznetsov_ma(km.a)?;
    let period = spec.time_period().expect("Kuznetsov-Ma is time periodic");
    let horizon = km.periods * period;
    let x0 = km.x0.unwrap_or(grid.length() / 4.0);
    let base = breathers::offset(&spec)?.sample(grid, 0.0);
    let bump = breathers::offset(&BreatherSpec::peregrine().shifted(km.peregrine_time, x0))?.sample(grid, 0.0);
    let mut perturbed = base.clone();
    for (a, b) in perturbed.samples_mut().iter_mut().zip(bump.samples()) {
        *a += km.scale * b;
    }
    let mut config = solver.clone();
    config.t_end = horizon;
    let (a, b) = rayon::join(|| solve(&base, 0.0, &config), || solve(&perturbed, 0.0, &config));
    let (a, b) = (a?, b?);
    let times = a.times();
    let separations = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| y.field.sub(&x.field)?.hs_norm(solver.s))
        .collect::<Result<Vec<_>>>()?;
    let first = separations[0];
    let (final_ratio, max_ratio) = if first > 0.0 {
        let last = *separations.last().expect("at least one snapshot");
        (Some(last / first), Some(separations.iter().fold(0.0f64, |m, &s| m.max(s)) / first))
    } else {
        (None, None)
    };
    Ok(KmReport {
        a: km.a,
        period,
        horizon,
        peregrine_time: km.peregrine_time,
        x0,
        scale: km.scale,
        times,
        separations,
        final_ratio,
        max_ratio,
        control_return_error: a.last().field.sub(&base)?.l2_norm(),
    })
}

// ------------------------------------------------------------ invariant suite

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
    pub wronskian_deviation: f64,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        writeln!(f, "max Wronskian deviation = {:.3e}", self.wronskian_deviation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantOptions {
    pub seed: u64,
    /// Evaluate the kernels without their small-`mu` series branch.
    pub inject_unguarded_kernels: bool,
    /// Samples per axis of the symbol bound grids.
    pub samples: usize,
    /// Random `(mu, t)` draws for the Wronskian identity.
    pub wronskian_draws: usize,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self { seed: 0, inject_unguarded_kernels: false, samples: 320, wronskian_draws: 100_000 }
    }
}

/// Kernel values near `mu = 0` against the truncated Taylor series
/// `S = t - mu t^3/6 + mu^2 t^5/120`, `C = 1 - mu t^2/2 + mu^2 t^4/24`.
/// Points: `xi = 0`, `sqrt2` and `sqrt2 (1 +- d)` for `d` down to `1e-12`.
fn band_edge_check(kernels: &dyn Kernels) -> InvariantCheck {
    let mut xis = vec![0.0, SQRT_2];
    for d in [1e-8, 1e-10, 1e-12] {
        xis.push(SQRT_2 * (1.0 + d));
        xis.push(SQRT_2 * (1.0 - d));
    }
    let mut worst: f64 = 0.0;
    let mut witness = None;
    for &xi in &xis {
        let m = symbols::mu(xi);
        for i in 0..=20 {
            let t = 0.5 * i as f64;
            let s_ref = t - m * t.powi(3) / 6.0 + m * m * t.powi(5) / 120.0;
            let c_ref = 1.0 - m * t * t / 2.0 + m * m * t.powi(4) / 24.0;
            let es = (kernels.s(m, t) - s_ref).abs() / t.max(1.0);
            let ec = (kernels.c(m, t) - c_ref).abs();
            // f64::max would drop a NaN
            let err = if es.is_nan() || ec.is_nan() { f64::INFINITY } else { es.max(ec) };
            if err > worst {
                worst = err;
                witness = Some((xi, t));
            }
        }
    }
    let passed = worst <= 1e-10;
    let detail = match witness {
        Some((xi, t)) => format!("max deviation from series {worst:.3e} at xi = {xi:.15}, t = {t}"),
        None => "exact at every point".into(),
    };
    InvariantCheck { name: "band_edge_series", passed, detail }
}

fn bound_check(name: &'static str, report: &symbols::BoundReport) -> InvariantCheck {
    let worst = report.rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let violations: usize = report.rows.iter().map(|r| r.violations).sum();
    let samples: usize = report.rows.iter().map(|r| r.samples).sum();
    InvariantCheck {
        name,
        passed: report.passed(),
        detail: format!("{violations} violations in {samples} evaluations, max ratio {worst:.12}"),
    }
}

/// Runs every property check; `passed()` is false on any violation.
pub fn check_invariants(options: &InvariantOptions) -> Result<InvariantReport> {
    let kernels: &dyn Kernels = if options.inject_unguarded_kernels { &UnguardedKernels } else { &GuardedKernels };
    let mut checks = Vec::new();

    let mut rng = crate::random::rng(options.seed);
    let mut points: Vec<(f64, f64)> =
        (0..options.wronskian_draws).map(|_| (rng.random_range(-1.0..100.0), rng.random_range(0.0..10.0))).collect();
    points.extend([(0.0, 1.0), (0.0, 10.0), (-1.0, 10.0), (1e-300, 5.0)]);
    let wronskian = symbols::wronskian_deviation(kernels, points.iter().copied());
    let wronskian = if wronskian.is_nan() { f64::INFINITY } else { wronskian };
    checks.push(InvariantCheck {
        name: "wronskian",
        passed: wronskian <= 1e-12,
        detail: format!("max |C^2 + mu S^2 - 1| (relative) = {wronskian:.3e} over {} points", points.len()),
    });
    checks.push(band_edge_check(kernels));
    let low = symbols::verify_low_band_bounds_with(kernels, 10.0, options.samples);
    checks.push(bound_check("low_band_bounds", &low));
    let high = symbols::verify_high_band_bounds_with(kernels, 10.0, options.samples, symbols::HIGH_BAND_CONSTANT, 10.0);
    checks.push(bound_check("high_band_bounds", &high));

    let grid = Grid1D::new(8.0 * PI, 128)?;
    let mut worst: f64 = 0.0;
    let mut growth_ok = true;
    for (i, t) in [0.5, 2.0, 5.0].into_iter().enumerate() {
        let r = crate::propagator::verify_corollary_growth(&grid, t, 10, options.seed.wrapping_add(i as u64))?;
        growth_ok &= r.passed();
        worst = r.checks.iter().map(|c| c.max_ratio).fold(worst, f64::max);
    }
    checks.push(InvariantCheck {
        name: "corollary_growth",
        passed: growth_ok,
        detail: format!("max lhs/rhs = {worst:.12} at t in {{0.5, 2, 5}}"),
    });

    let ladder: Vec<f64> = (0..9).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).collect();
    let mut slopes = (f64::INFINITY, f64::NEG_INFINITY);
    let mut quad_ok = true;
    let mut qrng = crate::random::rng(options.seed ^ 0x5eed);
    for _ in 0..20 {
        let w = crate::random::unit_field(&grid, &mut qrng, 3.0, 1.0);
        let r = crate::nonlinearity::quadratic_order_check(&w, 1.0, &ladder)?;
        quad_ok &= r.passed() && (r.slope - 2.0).abs() <= 0.02;
        slopes = (slopes.0.min(r.slope), slopes.1.max(r.slope));
    }
    checks.push(InvariantCheck {
        name: "quadratic_order",
        passed: quad_ok,
        detail: format!("log-log slopes in [{:.6}, {:.6}] over 20 unit fields", slopes.0, slopes.1),
    });

    let lip = crate::nonlinearity::lipschitz_check(&grid, &[0.1, 0.5, 1.0, 2.0], 20, 1.0, options.seed)?;
    let max_norm = lip.rows.iter().map(|r| r.max_normalized).fold(0.0, f64::max);
    checks.push(InvariantCheck {
        name: "lipschitz",
        passed: lip.passed(),
        detail: format!("max ratio / (|w1| + |w2| + |w1|^2 + |w2|^2) = {max_norm:.6}"),
    });

    Ok(InvariantReport { checks, wronskian_deviation: wronskian })
}

// ------------------------------------------------------------- breather table

/// `(x, Re u, Im u, |u|, Re w, Im w)` rows of a breather at time `t`.
pub fn write_breather_table(out: impl Write, spec: &BreatherSpec, grid: &Grid1D, t: f64) -> Result<()> {
    spec.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "re_u", "im_u", "abs_u", "re_w", "im_w"])?;
    for x in grid.xs() {
        let u = spec.value_at(t, x);
        let o = spec.offset_at(t, x);
        w.write_record([x, u.re, u.im, u.norm(), o.re, o.im].map(|v| format!("{v:.15e}")))?;
    }
    w.flush()?;
    Ok(())
}
