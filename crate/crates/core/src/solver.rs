//! Exponential-integrator time stepping for the offset equation.
//!
//! Every step is the Duhamel formula over `[t, t + tau]`: the exact linear
//! group applied to the state, plus the source integral evaluated with
//! quadrature on the nodes `0, tau/2, tau`. Two schemes fill in the stage
//! values: fixed-point (Picard) iteration of the collocation equations, or a
//! single predictor/corrector midpoint pass.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, PerturbationField};
use crate::nonlinearity::source_transform;
use crate::propagator::{PropagatorMatrix, SourceSpectral, SpectralPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    PicardDuhamel,
    ExponentialMidpoint,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::PicardDuhamel => "picard_duhamel",
            Scheme::ExponentialMidpoint => "exponential_midpoint",
        }
    }

    /// Stable numeric tag used in checkpoints.
    pub fn code(self) -> u32 {
        match self {
            Scheme::PicardDuhamel => 0,
            Scheme::ExponentialMidpoint => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Scheme::PicardDuhamel),
            1 => Some(Scheme::ExponentialMidpoint),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "picard_duhamel" => Ok(Scheme::PicardDuhamel),
            "exponential_midpoint" => Ok(Scheme::ExponentialMidpoint),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub s: f64,
    pub blowup_threshold: f64,
    pub scheme: Scheme,
    /// Drop the source entirely (`G = 0`).
    pub linear: bool,
    /// Remove the mean of `Re w` after every step.
    pub project_mean: bool,
    pub snapshot_interval: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            picard_tol: 1e-12,
            picard_max_iters: 50,
            s: 1.0,
            blowup_threshold: 1e6,
            scheme: Scheme::PicardDuhamel,
            linear: false,
            project_mean: false,
            snapshot_interval: 0.05,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !self.t_end.is_finite() {
            return bad("t_end must be finite".into());
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.picard_max_iters == 0 {
            return bad("picard_max_iters must be at least 1".into());
        }
        if !(self.s > 0.5 && self.s.is_finite()) {
            return bad(format!("Sobolev index must exceed 1/2, got {}", self.s));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!("blowup_threshold must be positive, got {}", self.blowup_threshold));
        }
        if !(self.snapshot_interval > 0.0 && self.snapshot_interval.is_finite()) {
            return bad(format!("snapshot_interval must be positive, got {}", self.snapshot_interval));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: PerturbationField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }
}

/// A run that stopped early keeps everything recorded before the stop.
#[derive(Debug)]
pub struct RunFailure {
    pub trajectory: Trajectory,
    pub error: Error,
}

/// Per-step state shared by all steps of one size.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid1D,
    tau: f64,
    scheme: Scheme,
    linear: bool,
    project_mean: bool,
    tol: f64,
    max_iters: usize,
    weights: Vec<f64>,
    full: PropagatorMatrix,
    half: PropagatorMatrix,
    back_half: PropagatorMatrix,
    half_integrated: PropagatorMatrix,
}

fn pair_diff_norm(a: &SpectralPair, b: &SpectralPair, weights: &[f64]) -> f64 {
    let len = a.grid().length();
    let sum: f64 = (0..weights.len())
        .map(|k| {
            let dp = a.phi_hat[k] - b.phi_hat[k];
            let dq = a.psi_hat[k] - b.psi_hat[k];
            weights[k] * (dp + num_complex::Complex64::i() * dq).norm_sqr()
        })
        .sum();
    (sum / len).sqrt()
}

impl Stepper {
    /// `tau` may be negative to step backwards in time.
    pub fn new(grid: &Grid1D, config: &SolverConfig, tau: f64) -> Result<Self> {
        config.validate()?;
        if tau == 0.0 || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("step size must be finite and nonzero, got {tau}")));
        }
        Ok(Self {
            grid: grid.clone(),
            tau,
            scheme: config.scheme,
            linear: config.linear,
            project_mean: config.project_mean,
            tol: config.picard_tol,
            max_iters: config.picard_max_iters,
            weights: grid.sobolev_weights(config.s)?,
            full: PropagatorMatrix::new(grid, tau),
            half: PropagatorMatrix::new(grid, 0.5 * tau),
            back_half: PropagatorMatrix::new(grid, -0.5 * tau),
            half_integrated: PropagatorMatrix::integrated(grid, 0.5 * tau),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    fn source(&self, w: &SpectralPair) -> SourceSpectral {
        let samples = self.grid.backward(&w.combined());
        SourceSpectral::from_transform(&self.grid, &source_transform(&self.grid, &samples))
    }

    fn propagate(&self, m: &PropagatorMatrix, w: &SpectralPair) -> SpectralPair {
        crate::propagator::apply_matrix(m, w)
    }

    /// Advances `w` (at time `t`, used only for error reports) by one step.
    pub fn step(&self, w: &SpectralPair, t: f64) -> Result<(SpectralPair, StepStats)> {
        let (mut next, stats) = if self.linear {
            (self.propagate(&self.full, w), StepStats { iterations: 0, residual: 0.0 })
        } else {
            match self.scheme {
                Scheme::PicardDuhamel => self.picard(w, t)?,
                Scheme::ExponentialMidpoint => self.midpoint(w),
            }
        };
        if self.project_mean {
            next.phi_hat[0] = num_complex::Complex64::new(0.0, 0.0);
        }
        Ok((next, stats))
    }

    fn midpoint(&self, w: &SpectralPair) -> (SpectralPair, StepStats) {
        let g0 = self.source(w);
        let mut mid = self.propagate(&self.half, w);
        self.half_integrated.accumulate_source(1.0, &g0, &mut mid.phi_hat, &mut mid.psi_hat);
        let g_mid = self.source(&mid);
        let mut next = self.propagate(&self.full, w);
        self.half.accumulate_source(self.tau, &g_mid, &mut next.phi_hat, &mut next.psi_hat);
        (next, StepStats { iterations: 1, residual: 0.0 })
    }

    fn picard(&self, w: &SpectralPair, t: f64) -> Result<(SpectralPair, StepStats)> {
        let tau = self.tau;
        let h = 0.5 * tau;
        let free_mid = self.propagate(&self.half, w);
        let free_end = self.propagate(&self.full, w);
        let g0 = self.source(w);

        // start from the source frozen at its initial value
        let mut mid = free_mid.clone();
        self.half_integrated.accumulate_source(1.0, &g0, &mut mid.phi_hat, &mut mid.psi_hat);
        let mut end = free_end.clone();
        let full_integrated = PropagatorMatrix::integrated(&self.grid, tau);
        full_integrated.accumulate_source(1.0, &g0, &mut end.phi_hat, &mut end.psi_hat);

        let scale = pair_diff_norm(w, &SpectralPair::zeros(&self.grid), &self.weights).max(1.0);
        let mut previous = f64::INFINITY;
        let mut growth_streak = 0;
        for iteration in 1..=self.max_iters {
            let g_mid = self.source(&mid);
            let g_end = self.source(&end);

            let mut new_end = free_end.clone();
            self.full.accumulate_source(tau / 6.0, &g0, &mut new_end.phi_hat, &mut new_end.psi_hat);
            self.half.accumulate_source(4.0 * tau / 6.0, &g_mid, &mut new_end.phi_hat, &mut new_end.psi_hat);
            accumulate_identity(tau / 6.0, &g_end, &mut new_end);

            let mut new_mid = free_mid.clone();
            self.half.accumulate_source(5.0 / 12.0 * h, &g0, &mut new_mid.phi_hat, &mut new_mid.psi_hat);
            accumulate_identity(8.0 / 12.0 * h, &g_mid, &mut new_mid);
            self.back_half.accumulate_source(-1.0 / 12.0 * h, &g_end, &mut new_mid.phi_hat, &mut new_mid.psi_hat);

            let residual =
                pair_diff_norm(&new_end, &end, &self.weights).max(pair_diff_norm(&new_mid, &mid, &self.weights));
            end = new_end;
            mid = new_mid;

            if !residual.is_finite() {
                return Err(Error::PicardDivergence { t, iterations: iteration, residual });
            }
            if residual < self.tol * scale {
                return Ok((end, StepStats { iterations: iteration, residual }));
            }
            if residual > previous {
                growth_streak += 1;
                if growth_streak >= 3 {
                    return Err(Error::PicardDivergence { t, iterations: iteration, residual });
                }
            } else {
                growth_streak = 0;
            }
            previous = residual;
        }
        Err(Error::PicardDivergence { t, iterations: self.max_iters, residual: previous })
    }
}

fn accumulate_identity(weight: f64, src: &SourceSpectral, acc: &mut SpectralPair) {
    for k in 0..src.f_hat.len() {
        acc.phi_hat[k] += src.g_hat[k] * weight;
        acc.psi_hat[k] -= src.f_hat[k] * weight;
    }
}

/// One step of size `config.dt` from `w` at time `t`.
pub fn step(w: &PerturbationField, t: f64, config: &SolverConfig) -> Result<PerturbationField> {
    let stepper = Stepper::new(w.grid(), config, config.dt)?;
    let norm = w.hs_norm(config.s)?;
    if !w.is_finite() {
        return Err(Error::InvalidParameter("non-finite initial field".into()));
    }
    if norm >= config.blowup_threshold {
        return Err(Error::BlowupDetected { t, norm });
    }
    let (next, _) = stepper.step(&SpectralPair::from_field(w), t)?;
    Ok(next.to_field())
}

/// Uniform step count and size covering `[t0, t_end]` with `|h| <= dt`.
pub fn step_plan(t0: f64, t_end: f64, dt: f64) -> (usize, f64) {
    let span = t_end - t0;
    if span == 0.0 {
        return (0, 0.0);
    }
    let n = (span.abs() / dt - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

/// Integrates from `w0` at `t0` to `config.t_end`, snapshotting every
/// `snapshot_interval` (rounded to whole steps) and at the end.
pub fn run_from(w0: &PerturbationField, t0: f64, config: &SolverConfig) -> std::result::Result<Trajectory, RunFailure> {
    run_observed(w0, t0, config, |_| {})
}

pub fn run(w0: &PerturbationField, config: &SolverConfig) -> Result<Trajectory> {
    run_from(w0, 0.0, config).map_err(|f| f.error)
}

/// As [`run_from`], calling `observer` on each snapshot as it is taken.
pub fn run_observed(
    w0: &PerturbationField,
    t0: f64,
    config: &SolverConfig,
    mut observer: impl FnMut(&Snapshot),
) -> std::result::Result<Trajectory, RunFailure> {
    let mut trajectory = Trajectory { snapshots: Vec::new(), iterations: Vec::new(), residuals: Vec::new() };
    let fail = |trajectory: Trajectory, error: Error| Err(RunFailure { trajectory, error });
    if let Err(e) = config.validate() {
        return fail(trajectory, e);
    }
    if !w0.is_finite() {
        return fail(trajectory, Error::InvalidParameter("non-finite initial field".into()));
    }
    let grid = w0.grid().clone();
    let weights = match grid.sobolev_weights(config.s) {
        Ok(w) => w,
        Err(e) => return fail(trajectory, e),
    };
    let zero = SpectralPair::zeros(&grid);
    let mut state = SpectralPair::from_field(w0);

    let record = |t: f64, state: &SpectralPair, trajectory: &mut Trajectory, observer: &mut dyn FnMut(&Snapshot)| {
        let snap = Snapshot { t, field: state.to_field() };
        observer(&snap);
        trajectory.snapshots.push(snap);
    };
    record(t0, &state, &mut trajectory, &mut observer);
    let norm = pair_diff_norm(&state, &zero, &weights);
    if norm >= config.blowup_threshold {
        return fail(trajectory, Error::BlowupDetected { t: t0, norm });
    }

    let (steps, h) = step_plan(t0, config.t_end, config.dt);
    if steps == 0 {
        return Ok(trajectory);
    }
    let stepper = match Stepper::new(&grid, config, h) {
        Ok(s) => s,
        Err(e) => return fail(trajectory, e),
    };
    let every = ((config.snapshot_interval / h.abs()).round() as usize).max(1);
    for n in 1..=steps {
        let t_prev = t0 + (n - 1) as f64 * h;
        match stepper.step(&state, t_prev) {
            Ok((next, stats)) => {
                state = next;
                trajectory.iterations.push(stats.iterations);
                trajectory.residuals.push(stats.residual);
            }
            Err(e) => return fail(trajectory, e),
        }
        if n % every == 0 || n == steps {
            let t = if n == steps { config.t_end } else { t0 + n as f64 * h };
            record(t, &state, &mut trajectory, &mut observer);
            let norm = pair_diff_norm(&state, &zero, &weights);
            if !(norm < config.blowup_threshold) {
                return fail(trajectory, Error::BlowupDetected { t, norm });
            }
        }
    }
    Ok(trajectory)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionSample {
    pub bound: f64,
    pub horizon: f64,
    /// Largest `sup_t ||Phi w1 - Phi w2|| / sup_t ||w1 - w2||` over the pairs.
    pub measured: f64,
    /// `C (M + M^2)(cosh T - 1 + T + max(1, T) T)` with `C` the measured
    /// Lipschitz constant of the source on the ball.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub s: f64,
    pub pairs: usize,
    pub lipschitz_constant: f64,
    pub samples: Vec<ContractionSample>,
}

impl ContractionReport {
    pub fn sample(&self, bound: f64, horizon: f64) -> Option<&ContractionSample> {
        self.samples.iter().find(|c| c.bound == bound && c.horizon == horizon)
    }

    /// The measured factor is increasing along every row and column of the
    /// sample grid.
    pub fn monotone(&self) -> bool {
        let mut bounds: Vec<f64> = self.samples.iter().map(|c| c.bound).collect();
        let mut horizons: Vec<f64> = self.samples.iter().map(|c| c.horizon).collect();
        bounds.sort_by(f64::total_cmp);
        bounds.dedup();
        horizons.sort_by(f64::total_cmp);
        horizons.dedup();
        let get = |m: f64, t: f64| self.sample(m, t).map(|c| c.measured);
        for &m in &bounds {
            for w in horizons.windows(2) {
                match (get(m, w[0]), get(m, w[1])) {
                    (Some(a), Some(b)) if b >= a => {}
                    (None, _) | (_, None) => {}
                    _ => return false,
                }
            }
        }
        for &t in &horizons {
            for w in bounds.windows(2) {
                match (get(w[0], t), get(w[1], t)) {
                    (Some(a), Some(b)) if b >= a => {}
                    (None, _) | (_, None) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Wherever the predicted factor is below one the measured one is too.
    pub fn consistent(&self) -> bool {
        self.samples.iter().all(|c| c.predicted >= 1.0 || c.measured < 1.0)
    }
}

impl fmt::Display for ContractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# step-map contraction, s = {}, {} pairs, C = {:.6}",
            self.s, self.pairs, self.lipschitz_constant
        )?;
        writeln!(f, "M,T,measured,predicted")?;
        for c in &self.samples {
            writeln!(f, "{},{},{:.9e},{:.9e}", c.bound, c.horizon, c.measured, c.predicted)?;
        }
        Ok(())
    }
}

/// The factor `(M + M^2)(cosh T - 1 + T + max(1, T) T)`.
pub fn contraction_shape(bound: f64, horizon: f64) -> f64 {
    (bound + bound * bound) * (horizon.cosh() - 1.0 + horizon + horizon.max(1.0) * horizon)
}

/// Monte-Carlo estimate of the contraction factor of the map
/// `w -> M(t) w0 + int_0^t M(t - s) J G(w(s)) ds` on pairs of time-independent
/// fields in the ball `sup_t ||w||_{H^s} <= M`. The supremum over `t` is
/// sampled on `time_samples` points of `(0, T]`.
pub fn picard_contraction_probe(
    grid: &Grid1D,
    bounds: &[f64],
    horizons: &[f64],
    pairs: usize,
    s: f64,
    seed: u64,
) -> Result<ContractionReport> {
    use rand::Rng;
    if s <= 0.5 {
        return Err(Error::InvalidParameter(format!("need s > 1/2, got {s}")));
    }
    let time_samples = 8;
    let weights = grid.sobolev_weights(s)?;
    let mut rng = crate::random::rng(seed);
    let directions: Vec<_> = (0..pairs)
        .map(|_| {
            let a = crate::random::unit_field(grid, &mut rng, 3.0, s);
            let b = crate::random::unit_field(grid, &mut rng, 3.0, s);
            let ra: f64 = rng.random_range(0.2..1.0);
            let rb: f64 = rng.random_range(0.2..1.0);
            (a, b, ra, rb)
        })
        .collect();

    let integrated: Vec<Vec<PropagatorMatrix>> = horizons
        .iter()
        .map(|&t| {
            (1..=time_samples).map(|i| PropagatorMatrix::integrated(grid, t * i as f64 / time_samples as f64)).collect()
        })
        .collect();

    let mut lipschitz: f64 = 0.0;
    let mut out = Vec::new();
    for &m in bounds {
        let mut per_horizon = vec![0.0f64; horizons.len()];
        for (a, b, ra, rb) in &directions {
            let w1 = a.scaled(m * ra);
            let w2 = b.scaled(m * rb);
            let dw = w1.sub(&w2)?.hs_norm(s)?;
            let g1 = source_transform(grid, w1.samples());
            let g2 = source_transform(grid, w2.samples());
            let dg: Vec<_> = g1.iter().zip(&g2).map(|(x, y)| x - y).collect();
            let dg_norm = crate::grid::hs_norm_coefficients(grid, &dg, s)?;
            lipschitz = lipschitz.max(dg_norm / ((m + m * m) * dw));
            let src = SourceSpectral::from_transform(grid, &dg);
            for (h, mats) in integrated.iter().enumerate() {
                let mut sup: f64 = 0.0;
                for mat in mats {
                    let mut acc = SpectralPair::zeros(grid);
                    mat.accumulate_source(1.0, &src, &mut acc.phi_hat, &mut acc.psi_hat);
                    sup = sup.max(pair_diff_norm(&acc, &SpectralPair::zeros(grid), &weights));
                }
                per_horizon[h] = per_horizon[h].max(sup / dw);
            }
        }
        for (h, &t) in horizons.iter().enumerate() {
            out.push(ContractionSample { bound: m, horizon: t, measured: per_horizon[h], predicted: 0.0 });
        }
    }
    for c in &mut out {
        c.predicted = lipschitz * contraction_shape(c.bound, c.horizon);
    }
    Ok(ContractionReport { s, pairs, lipschitz_constant: lipschitz, samples: out })
}
