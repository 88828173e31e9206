//! Exact solution operator of the linearized equation
//! `i w_t + w_xx + 2 Re w = G` on the grid.
//!
//! The state is the pair `(phi_hat, psi_hat)` of transforms of the real fields
//! `phi = Re w`, `psi = Im w`. Per frequency the homogeneous flow is the real
//! unimodular matrix
//!
//! ```text
//! M(tau, xi) = [[ C,            xi^2 S ],
//!               [ (2 - xi^2) S, C      ]]
//! ```
//!
//! and a source `G = f + i g` enters through `J (f_hat, g_hat) = (g_hat, -f_hat)`:
//!
//! ```text
//! (phi_hat, psi_hat)(tau) = M(tau) (phi_hat, psi_hat)(0)
//!                         + int_0^tau M(tau - sigma) J (f_hat, g_hat)(sigma) dsigma
//! ```

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, PerturbationField};
use crate::symbols::{kernel_c, kernel_s, kernel_s_integral, mu, HIGH_BAND_CONSTANT};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Splits `z_hat` of a complex field into the transforms of its real and
/// imaginary parts: `re_hat(xi) = (z_hat(xi) + conj z_hat(-xi)) / 2`.
pub(crate) fn split_real_imag(grid: &Grid1D, hat: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.points();
    let mut re = vec![ZERO; n];
    let mut im = vec![ZERO; n];
    for k in 0..n {
        let a = hat[k];
        let b = hat[grid.mirror(k)].conj();
        re[k] = 0.5 * (a + b);
        im[k] = -0.5 * I * (a - b);
    }
    (re, im)
}

/// Transforms of `(phi, psi)` for a perturbation field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    grid: Grid1D,
    pub phi_hat: Vec<Complex64>,
    pub psi_hat: Vec<Complex64>,
}

impl SpectralPair {
    pub fn new(grid: Grid1D, phi_hat: Vec<Complex64>, psi_hat: Vec<Complex64>) -> Result<Self> {
        if phi_hat.len() != grid.points() || psi_hat.len() != grid.points() {
            return Err(Error::InvalidGrid("spectral pair length does not match grid".into()));
        }
        Ok(Self { grid, phi_hat, psi_hat })
    }

    pub fn zeros(grid: &Grid1D) -> Self {
        Self { grid: grid.clone(), phi_hat: vec![ZERO; grid.points()], psi_hat: vec![ZERO; grid.points()] }
    }

    pub fn from_field(field: &PerturbationField) -> Self {
        let grid = field.grid().clone();
        let hat = grid.forward(field.samples());
        let (phi_hat, psi_hat) = split_real_imag(&grid, &hat);
        Self { grid, phi_hat, psi_hat }
    }

    /// `w_hat = phi_hat + i psi_hat`.
    pub fn combined(&self) -> Vec<Complex64> {
        self.phi_hat.iter().zip(&self.psi_hat).map(|(p, q)| p + I * q).collect()
    }

    pub fn to_field(&self) -> PerturbationField {
        PerturbationField::new(self.grid.clone(), self.grid.backward(&self.combined()))
            .expect("grid-consistent by construction")
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn add_assign(&mut self, other: &SpectralPair) {
        for (a, b) in self.phi_hat.iter_mut().zip(&other.phi_hat) {
            *a += b;
        }
        for (a, b) in self.psi_hat.iter_mut().zip(&other.psi_hat) {
            *a += b;
        }
    }

    /// `||w||_{H^s}` computed from the pair.
    pub fn hs_norm(&self, weights: &[f64]) -> f64 {
        let sum: f64 =
            self.phi_hat.iter().zip(&self.psi_hat).zip(weights).map(|((p, q), w)| w * (p + I * q).norm_sqr()).sum();
        (sum / self.grid.length()).sqrt()
    }
}

/// Transforms `(f_hat, g_hat)` of the real and imaginary parts of a source `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpectral {
    pub f_hat: Vec<Complex64>,
    pub g_hat: Vec<Complex64>,
}

impl SourceSpectral {
    pub fn zeros(grid: &Grid1D) -> Self {
        Self { f_hat: vec![ZERO; grid.points()], g_hat: vec![ZERO; grid.points()] }
    }

    /// From the continuum-normalized transform of the complex source.
    pub fn from_transform(grid: &Grid1D, hat: &[Complex64]) -> Self {
        let (f_hat, g_hat) = split_real_imag(grid, hat);
        Self { f_hat, g_hat }
    }

    pub fn from_samples(grid: &Grid1D, samples: &[Complex64]) -> Self {
        Self::from_transform(grid, &grid.forward(samples))
    }
}

/// Per-frequency entries `(C, xi^2 S, (2 - xi^2) S)` of `M(tau, xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorMatrix {
    pub tau: f64,
    entries: Vec<[f64; 3]>,
}

impl PropagatorMatrix {
    pub fn new(grid: &Grid1D, tau: f64) -> Self {
        let entries = (0..grid.points())
            .map(|k| {
                let xi = grid.xi(k);
                let m = mu(xi);
                let s = kernel_s(m, tau);
                [kernel_c(m, tau), xi * xi * s, (2.0 - xi * xi) * s]
            })
            .collect();
        Self { tau, entries }
    }

    /// `int_0^tau M(sigma) dsigma`, the response to a source constant in time.
    pub fn integrated(grid: &Grid1D, tau: f64) -> Self {
        let entries = (0..grid.points())
            .map(|k| {
                let xi = grid.xi(k);
                let m = mu(xi);
                let si = kernel_s_integral(m, tau);
                [kernel_s(m, tau), xi * xi * si, (2.0 - xi * xi) * si]
            })
            .collect();
        Self { tau, entries }
    }

    /// `[[a, b], [c, d]]` at FFT index `k`.
    pub fn at(&self, k: usize) -> [[f64; 2]; 2] {
        let [c, up, low] = self.entries[k];
        [[c, up], [low, c]]
    }

    pub fn determinant(&self, k: usize) -> f64 {
        let [c, up, low] = self.entries[k];
        c * c - up * low
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn apply(&self, phi: &[Complex64], psi: &[Complex64], out_phi: &mut [Complex64], out_psi: &mut [Complex64]) {
        for (k, [c, up, low]) in self.entries.iter().enumerate() {
            let (p, q) = (phi[k], psi[k]);
            out_phi[k] = p * *c + q * *up;
            out_psi[k] = p * *low + q * *c;
        }
    }

    /// Adds `weight * M J (f_hat, g_hat)` into the accumulators.
    pub(crate) fn accumulate_source(
        &self,
        weight: f64,
        source: &SourceSpectral,
        acc_phi: &mut [Complex64],
        acc_psi: &mut [Complex64],
    ) {
        for (k, [c, up, low]) in self.entries.iter().enumerate() {
            let (jp, jq) = (source.g_hat[k], -source.f_hat[k]);
            acc_phi[k] += (jp * *c + jq * *up) * weight;
            acc_psi[k] += (jp * *low + jq * *c) * weight;
        }
    }
}

/// Matrices keyed by the bit pattern of `tau`, built once and shared.
#[derive(Default)]
pub struct PropagatorCache {
    grid: Option<Grid1D>,
    matrices: RwLock<HashMap<u64, Arc<PropagatorMatrix>>>,
}

impl fmt::Debug for PropagatorCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let len = self.matrices.read().map(|m| m.len()).unwrap_or(0);
        f.debug_struct("PropagatorCache").field("grid", &self.grid).field("entries", &len).finish()
    }
}

impl PropagatorCache {
    pub fn new(grid: &Grid1D) -> Self {
        Self { grid: Some(grid.clone()), matrices: RwLock::new(HashMap::new()) }
    }

    pub fn get(&self, tau: f64) -> Arc<PropagatorMatrix> {
        let key = tau.to_bits();
        if let Some(m) = self.matrices.read().expect("cache poisoned").get(&key) {
            return Arc::clone(m);
        }
        let grid = self.grid.as_ref().expect("cache built without grid");
        let built = Arc::new(PropagatorMatrix::new(grid, tau));
        let mut guard = self.matrices.write().expect("cache poisoned");
        Arc::clone(guard.entry(key).or_insert(built))
    }
}

/// Exact homogeneous flow over `tau` (negative `tau` runs the group backwards).
pub fn homogeneous_step(state: &SpectralPair, tau: f64) -> SpectralPair {
    let m = PropagatorMatrix::new(&state.grid, tau);
    apply_matrix(&m, state)
}

pub fn apply_matrix(m: &PropagatorMatrix, state: &SpectralPair) -> SpectralPair {
    let mut out = SpectralPair::zeros(&state.grid);
    m.apply(&state.phi_hat, &state.psi_hat, &mut out.phi_hat, &mut out.psi_hat);
    out
}

/// Weights for equally spaced nodes on `[0, tau]`: trapezoid for two nodes,
/// composite Simpson for an odd count, Simpson plus a closing 3/8 panel otherwise.
pub fn quadrature_weights(nodes: usize, tau: f64) -> Result<Vec<f64>> {
    if nodes < 2 {
        return Err(Error::NodeMismatch { expected: 2, got: nodes });
    }
    let h = tau / (nodes - 1) as f64;
    let mut w = vec![0.0; nodes];
    if nodes == 2 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return Ok(w);
    }
    let intervals = nodes - 1;
    let simpson_end = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
    let mut i = 0;
    while i < simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end < intervals {
        let b = simpson_end;
        for (off, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[b + off] += 3.0 * h / 8.0 * c;
        }
    }
    Ok(w)
}

/// Quadrature of `int_0^tau M(tau - sigma) J (f_hat, g_hat)(sigma) dsigma` from the
/// source sampled on equally spaced nodes `sigma_i = i tau / (n - 1)`.
pub fn duhamel_apply(grid: &Grid1D, history: &[SourceSpectral], tau: f64) -> Result<SpectralPair> {
    let cache = PropagatorCache::new(grid);
    duhamel_apply_cached(&cache, grid, history, tau)
}

pub fn duhamel_apply_cached(
    cache: &PropagatorCache,
    grid: &Grid1D,
    history: &[SourceSpectral],
    tau: f64,
) -> Result<SpectralPair> {
    let n = history.len();
    let weights = quadrature_weights(n, tau)?;
    for src in history {
        if src.f_hat.len() != grid.points() || src.g_hat.len() != grid.points() {
            return Err(Error::GridMismatch);
        }
    }
    let mut out = SpectralPair::zeros(grid);
    for (i, (src, w)) in history.iter().zip(&weights).enumerate() {
        let sigma = tau * i as f64 / (n - 1) as f64;
        let m = cache.get(tau - sigma);
        m.accumulate_source(*w, src, &mut out.phi_hat, &mut out.psi_hat);
    }
    Ok(out)
}

/// Exact Duhamel term for a source held constant over the step.
pub fn duhamel_constant(grid: &Grid1D, source: &SourceSpectral, tau: f64) -> SpectralPair {
    let m = PropagatorMatrix::integrated(grid, tau);
    let mut out = SpectralPair::zeros(grid);
    m.accumulate_source(1.0, source, &mut out.phi_hat, &mut out.psi_hat);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    pub name: &'static str,
    pub max_ratio: f64,
    pub worst_trial: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    pub t: f64,
    pub trials: usize,
    pub checks: Vec<GrowthCheck>,
}

impl CorollaryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_ratio <= 1.0 + 1e-12)
    }
}

impl fmt::Display for CorollaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# homogeneous growth bounds at t = {}, {} trials", self.t, self.trials)?;
        writeln!(f, "bound,max_ratio,worst_trial")?;
        for c in &self.checks {
            writeln!(f, "{},{:.15},{}", c.name, c.max_ratio, c.worst_trial)?;
        }
        Ok(())
    }
}

fn band_norm(values: &[Complex64], indices: &[usize], weights: &[f64], length: f64) -> f64 {
    (indices.iter().map(|&k| weights[k] * values[k].norm_sqr()).sum::<f64>() / length).sqrt()
}

/// Checks the homogeneous growth envelopes on the given initial data:
/// low band `||Phi|| <= cosh t ||phi0|| + 2 sinh t ||psi0||` (and the `Psi`
/// analogue), high band `||<xi>^s Phi|| <= ||<xi>^s phi0|| + K max(1,t) ||<xi>^s psi0||`.
/// Ratios are `lhs / rhs`.
pub fn check_corollary_growth(data: &[PerturbationField], t: f64, s: f64) -> Result<CorollaryReport> {
    assert!(t >= 0.0, "growth bounds are stated for t >= 0");
    let mut checks = vec![
        GrowthCheck { name: "low:Phi", max_ratio: 0.0, worst_trial: 0 },
        GrowthCheck { name: "low:Psi", max_ratio: 0.0, worst_trial: 0 },
        GrowthCheck { name: "high:Phi", max_ratio: 0.0, worst_trial: 0 },
        GrowthCheck { name: "high:Psi", max_ratio: 0.0, worst_trial: 0 },
    ];
    for (trial, field) in data.iter().enumerate() {
        let grid = field.grid();
        let bands = grid.band_masks();
        let ones = vec![1.0; grid.points()];
        let wts = grid.sobolev_weights(s)?;
        let l = grid.length();
        let state0 = SpectralPair::from_field(field);
        let state = homogeneous_step(&state0, t);
        let k = HIGH_BAND_CONSTANT * t.max(1.0);
        let ratios = [
            band_norm(&state.phi_hat, &bands.low, &ones, l)
                / (t.cosh() * band_norm(&state0.phi_hat, &bands.low, &ones, l)
                    + 2.0 * t.sinh() * band_norm(&state0.psi_hat, &bands.low, &ones, l)),
            band_norm(&state.psi_hat, &bands.low, &ones, l)
                / (t.cosh() * band_norm(&state0.psi_hat, &bands.low, &ones, l)
                    + 2.0 * t.sinh() * band_norm(&state0.phi_hat, &bands.low, &ones, l)),
            band_norm(&state.phi_hat, &bands.high, &wts, l)
                / (band_norm(&state0.phi_hat, &bands.high, &wts, l)
                    + k * band_norm(&state0.psi_hat, &bands.high, &wts, l)),
            band_norm(&state.psi_hat, &bands.high, &wts, l)
                / (band_norm(&state0.psi_hat, &bands.high, &wts, l)
                    + k * band_norm(&state0.phi_hat, &bands.high, &wts, l)),
        ];
        for (check, r) in checks.iter_mut().zip(ratios) {
            // 0/0 when a band carries no data
            let r = if r.is_nan() { 0.0 } else { r };
            if r > check.max_ratio {
                check.max_ratio = r;
                check.worst_trial = trial;
            }
        }
    }
    Ok(CorollaryReport { t, trials: data.len(), checks })
}

/// Random band-limited trials of [`check_corollary_growth`].
pub fn verify_corollary_growth(grid: &Grid1D, t: f64, trials: usize, seed: u64) -> Result<CorollaryReport> {
    let mut rng = crate::random::rng(seed);
    let data: Vec<_> = (0..trials).map(|_| crate::random::band_limited_field(grid, &mut rng, 4.0, true)).collect();
    check_corollary_growth(&data, t, 1.0)
}
