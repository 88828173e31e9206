//! Uniform periodic grid on `[-L/2, L/2)` and the continuum-normalized
//! discrete Fourier transform used throughout the crate.
//!
//! Coefficients are stored in FFT order: index `k < N/2` carries mode `j = k`,
//! index `k >= N/2` carries `j = k - N`. The transform is
//!
//! ```text
//! w_hat(xi_j) = dx * sum_n w(x_n) exp(-i xi_j x_n),   xi_j = 2 pi j / L
//! w(x_n)      = (1/L) * sum_j w_hat(xi_j) exp(i xi_j x_n)
//! ```
//!
//! so that `w_hat` approximates the whole-line transform and Parseval reads
//! `||w||^2 = (1/2pi) sum |w_hat|^2 dxi`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Grid1D {
    length: f64,
    points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D").field("length", &self.length).field("points", &self.points).finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.length.to_bits() == other.length.to_bits() && self.points == other.points
    }
}

/// Index sets of the hyperbolic (`|xi| <= sqrt 2`) and oscillatory bands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandPartition {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
}

impl Grid1D {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if points < 2 || !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("point count must be a positive even integer, got {points}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            length,
            points,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Frequency spacing `2 pi / L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x(&self, n: usize) -> f64 {
        -0.5 * self.length + n as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|n| self.x(n)).collect()
    }

    /// Signed mode number `j` stored at FFT index `k`.
    pub fn mode(&self, k: usize) -> i64 {
        let n = self.points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// FFT index holding mode `j`.
    pub fn index_of_mode(&self, j: i64) -> usize {
        j.rem_euclid(self.points as i64) as usize
    }

    pub fn xi(&self, k: usize) -> f64 {
        self.mode(k) as f64 * self.dxi()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.xi(k)).collect()
    }

    /// Index of the unpaired mode `j = -N/2`.
    pub fn nyquist_index(&self) -> usize {
        self.points / 2
    }

    /// FFT index of `-xi_k` (the Nyquist index maps to itself).
    pub fn mirror(&self, k: usize) -> usize {
        (self.points - k) % self.points
    }

    /// Locates the FFT index whose frequency equals `k` up to `1e-9` relative.
    pub fn find_frequency(&self, k: f64) -> Result<usize> {
        let j = (k / self.dxi()).round() as i64;
        let half = (self.points / 2) as i64;
        let j = j.clamp(-half, half - 1);
        let nearest = j as f64 * self.dxi();
        if (nearest - k).abs() > 1e-9 * k.abs().max(1.0) {
            return Err(Error::FrequencyNotRepresentable { requested: k, nearest });
        }
        Ok(self.index_of_mode(j))
    }

    pub fn band_masks(&self) -> BandPartition {
        let (low, high) = (0..self.points).partition(|&k| self.xi(k).abs() <= SQRT_2);
        BandPartition { low, high }
    }

    pub fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.points, "sample count does not match grid");
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        let dx = self.dx();
        for (k, c) in buf.iter_mut().enumerate() {
            // exp(-i xi_j x_0) = (-1)^j with x_0 = -L/2
            *c *= if k % 2 == 1 { -dx } else { dx };
        }
        buf
    }

    pub fn backward(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coefficients.len(), self.points, "coefficient count does not match grid");
        let inv_l = 1.0 / self.length;
        let mut buf: Vec<Complex64> =
            coefficients.iter().enumerate().map(|(k, &c)| c * if k % 2 == 1 { -inv_l } else { inv_l }).collect();
        self.inverse.process(&mut buf);
        buf
    }

    /// Periodic rectangle rule, `sum f_n dx`.
    pub fn integrate(&self, samples: &[Complex64]) -> Complex64 {
        samples.iter().sum::<Complex64>() * self.dx()
    }

    pub fn integrate_real(&self, samples: &[f64]) -> f64 {
        samples.iter().sum::<f64>() * self.dx()
    }

    /// `(1 + xi^2)^s` for every FFT index.
    pub fn sobolev_weights(&self, s: f64) -> Result<Vec<f64>> {
        if !(s >= 0.0) {
            return Err(Error::NegativeSobolevIndex(s));
        }
        Ok((0..self.points).map(|k| (1.0 + self.xi(k).powi(2)).powf(s)).collect())
    }

    /// Spectral derivative of physical samples. The Nyquist mode is dropped.
    pub fn derivative(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut hat = self.forward(samples);
        for (k, c) in hat.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, self.xi(k));
        }
        hat[self.nyquist_index()] = Complex64::new(0.0, 0.0);
        self.backward(&hat)
    }

    pub fn second_derivative(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut hat = self.forward(samples);
        for (k, c) in hat.iter_mut().enumerate() {
            *c *= -self.xi(k).powi(2);
        }
        self.backward(&hat)
    }

    pub fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Complex field `w = phi + i psi` sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    grid: Grid1D,
    samples: Vec<Complex64>,
}

impl PerturbationField {
    pub fn new(grid: Grid1D, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.points() {
            return Err(Error::InvalidGrid(format!("expected {} samples, got {}", grid.points(), samples.len())));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: &Grid1D) -> Self {
        Self { samples: vec![Complex64::new(0.0, 0.0); grid.points()], grid: grid.clone() }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        Self { samples: grid.xs().into_iter().map(f).collect(), grid: grid.clone() }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn phi(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.re).collect()
    }

    pub fn psi(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.im).collect()
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField { grid: self.grid.clone(), coefficients: self.grid.forward(&self.samples) }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn hs_norm(&self, s: f64) -> Result<f64> {
        hs_norm(self, s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid.clone(), samples: self.samples.iter().map(|c| c * factor).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Continuum-normalized Fourier coefficients in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid1D,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid1D, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.points(),
                coefficients.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn to_physical(&self) -> PerturbationField {
        PerturbationField { grid: self.grid.clone(), samples: self.grid.backward(&self.coefficients) }
    }

    /// `((1/2pi) sum |w_hat|^2 dxi)^(1/2)`.
    pub fn parseval_l2(&self) -> f64 {
        (self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.length()).sqrt()
    }

    pub fn hs_norm(&self, s: f64) -> Result<f64> {
        hs_norm_coefficients(&self.grid, &self.coefficients, s)
    }
}

pub fn forward_transform(field: &PerturbationField) -> SpectralField {
    field.to_spectral()
}

pub fn backward_transform(field: &SpectralField) -> PerturbationField {
    field.to_physical()
}

/// `||w||_{H^s} = ((1/2pi) sum (1 + xi^2)^s |w_hat|^2 dxi)^(1/2)`.
pub fn hs_norm(field: &PerturbationField, s: f64) -> Result<f64> {
    hs_norm_coefficients(field.grid(), &field.grid().forward(field.samples()), s)
}

pub fn hs_norm_coefficients(grid: &Grid1D, coefficients: &[Complex64], s: f64) -> Result<f64> {
    let weights = grid.sobolev_weights(s)?;
    let sum: f64 = coefficients.iter().zip(&weights).map(|(c, w)| w * c.norm_sqr()).sum();
    Ok((sum / grid.length()).sqrt())
}

pub fn band_masks(grid: &Grid1D) -> BandPartition {
    grid.band_masks()
}

pub fn integrate(samples: &[Complex64], grid: &Grid1D) -> Complex64 {
    grid.integrate(samples)
}
