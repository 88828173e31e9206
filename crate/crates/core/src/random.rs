//! Seeded generators for smooth random test fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid1D, PerturbationField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn real_spectrum(grid: &Grid1D, rng: &mut impl Rng, max_freq: f64) -> Vec<Complex64> {
    let n = grid.points();
    let mut hat = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=n / 2 - 1 {
        let xi = grid.xi(k);
        if xi.abs() > max_freq {
            continue;
        }
        let envelope = (-(xi / max_freq).powi(2)).exp() * grid.length();
        let re: f64 = rng.random_range(-1.0..1.0);
        let im: f64 = if k == 0 { 0.0 } else { rng.random_range(-1.0..1.0) };
        let c = Complex64::new(re, im) * envelope;
        hat[k] = c;
        if k != 0 {
            hat[grid.mirror(k)] = c.conj();
        }
    }
    hat
}

/// Random field whose spectrum is supported on `|xi| <= max_freq` with a
/// Gaussian envelope. With `complex = false` the imaginary part is zero.
/// The Nyquist mode is never populated.
pub fn band_limited_field(grid: &Grid1D, rng: &mut impl Rng, max_freq: f64, complex: bool) -> PerturbationField {
    let phi = real_spectrum(grid, rng, max_freq);
    let psi = if complex { real_spectrum(grid, rng, max_freq) } else { vec![Complex64::new(0.0, 0.0); grid.points()] };
    let combined: Vec<Complex64> = phi.iter().zip(&psi).map(|(p, q)| p + Complex64::new(0.0, 1.0) * q).collect();
    let mut samples = grid.backward(&combined);
    // strip rounding-level imaginary parts of the separately real components
    if !complex {
        samples.iter_mut().for_each(|z| z.im = 0.0);
    }
    PerturbationField::new(grid.clone(), samples).expect("sized by grid")
}

/// Random band-limited complex field normalized to `||w||_{H^s} = 1`.
pub fn unit_field(grid: &Grid1D, rng: &mut impl Rng, max_freq: f64, s: f64) -> PerturbationField {
    let w = band_limited_field(grid, rng, max_freq, true);
    let norm = w.hs_norm(s).expect("s is non-negative");
    w.scaled(1.0 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let g = Grid1D::new(20.0, 64).unwrap();
        let a = band_limited_field(&g, &mut rng(9), 3.0, true);
        let b = band_limited_field(&g, &mut rng(9), 3.0, true);
        assert_eq!(a, b);
    }

    #[test]
    fn spectrum_is_band_limited() {
        let g = Grid1D::new(20.0, 128).unwrap();
        let w = band_limited_field(&g, &mut rng(2), 2.0, true);
        let hat = w.to_spectral();
        let peak = hat.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (k, c) in hat.coefficients().iter().enumerate() {
            if g.xi(k).abs() > 2.0 {
                assert!(c.norm() < 1e-12 * peak);
            }
        }
    }

    #[test]
    fn unit_field_is_normalized() {
        let g = Grid1D::new(30.0, 128).unwrap();
        let w = unit_field(&g, &mut rng(4), 3.0, 1.0);
        assert!((w.hs_norm(1.0).unwrap() - 1.0).abs() < 1e-12);
    }
}
