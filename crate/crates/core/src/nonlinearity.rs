//! Cubic source `G[w] = -(2|w|^2 + w^2 + |w|^2 w)` of the offset equation
//! `i w_t + w_xx + 2 Re w = G[w]`, evaluated pseudo-spectrally.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, PerturbationField};

/// `-(2|w|^2 + w^2 + |w|^2 w)`.
#[inline]
pub fn source_pointwise(w: Complex64) -> Complex64 {
    let a2 = w.norm_sqr();
    -(2.0 * a2 + w * w + a2 * w)
}

/// The same polynomial written as `-(|1 + w|^2 - 1)(1 + w) + 2 Re w`.
#[inline]
pub fn source_pointwise_offset_form(w: Complex64) -> Complex64 {
    let one_w = 1.0 + w;
    -(one_w.norm_sqr() - 1.0) * one_w + 2.0 * w.re
}

/// Physical samples of `G = f + i g`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    grid: Grid1D,
    samples: Vec<Complex64>,
}

impl SourceField {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn f(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn g(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.im).collect()
    }

    pub fn into_field(self) -> PerturbationField {
        PerturbationField::new(self.grid, self.samples).expect("sized by grid")
    }
}

/// Highest retained mode number under the 2/3 rule.
pub fn dealias_cutoff(grid: &Grid1D) -> i64 {
    (grid.points() / 3) as i64
}

/// Zeroes `|j| > N/3` and the Nyquist mode.
pub fn dealias(grid: &Grid1D, hat: &mut [Complex64]) {
    let cut = dealias_cutoff(grid);
    for (k, c) in hat.iter_mut().enumerate() {
        if grid.mode(k).abs() > cut {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    hat[grid.nyquist_index()] = Complex64::new(0.0, 0.0);
}

/// Pointwise source without dealiasing.
pub fn evaluate_raw(w: &PerturbationField) -> SourceField {
    SourceField { grid: w.grid().clone(), samples: w.samples().iter().map(|&z| source_pointwise(z)).collect() }
}

/// Dealiased transform of `G[w]` from physical samples.
pub fn source_transform(grid: &Grid1D, samples: &[Complex64]) -> Vec<Complex64> {
    let g: Vec<Complex64> = samples.iter().map(|&z| source_pointwise(z)).collect();
    let mut hat = grid.forward(&g);
    dealias(grid, &mut hat);
    hat
}

/// `G[w]` evaluated pointwise, then dealiased.
pub fn evaluate_g(w: &PerturbationField) -> SourceField {
    let grid = w.grid();
    let hat = source_transform(grid, w.samples());
    SourceField { grid: grid.clone(), samples: grid.backward(&hat) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOrderReport {
    pub s: f64,
    /// `(eps, ||G[eps w]||_{H^s} / eps^2)`, in ladder order.
    pub ratios: Vec<(f64, f64)>,
    /// Least-squares slope of `log ||G[eps w]||` against `log eps`.
    pub slope: f64,
    /// Relative change of the ratio between the two smallest `eps`.
    pub tail_variation: f64,
    /// Smallest `C` with `||G[eps w]|| <= C (eps^2 + eps^3)` over the ladder.
    pub envelope_constant: f64,
}

impl QuadraticOrderReport {
    pub fn passed(&self) -> bool {
        self.tail_variation < 0.05 && self.envelope_constant.is_finite()
    }
}

impl fmt::Display for QuadraticOrderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# quadratic order, s = {}", self.s)?;
        writeln!(f, "eps,ratio")?;
        for (e, r) in &self.ratios {
            writeln!(f, "{e:e},{r:.12}")?;
        }
        writeln!(
            f,
            "# slope = {:.6}, tail variation = {:.3e}, envelope C = {:.6}",
            self.slope, self.tail_variation, self.envelope_constant
        )
    }
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Measures `||G[eps w]||_{H^s} / eps^2` along a ladder of `eps` values for a
/// field with `||w||_{H^s} = 1`.
pub fn quadratic_order_check(w: &PerturbationField, s: f64, ladder: &[f64]) -> Result<QuadraticOrderReport> {
    if s <= 0.5 {
        return Err(Error::InvalidParameter(format!("need s > 1/2, got {s}")));
    }
    if ladder.len() < 2 {
        return Err(Error::InvalidParameter("need at least two eps values".into()));
    }
    let norm = w.hs_norm(s)?;
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("field must have unit H^s norm, got {norm}")));
    }
    let mut ratios = Vec::with_capacity(ladder.len());
    let mut logs = (Vec::new(), Vec::new());
    let mut envelope: f64 = 0.0;
    for &eps in ladder {
        let g = evaluate_g(&w.scaled(eps)).into_field().hs_norm(s)?;
        ratios.push((eps, g / (eps * eps)));
        logs.0.push(eps.ln());
        logs.1.push(g.ln());
        envelope = envelope.max(g / (eps * eps + eps * eps * eps));
    }
    let slope = least_squares_slope(&logs.0, &logs.1);
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (r0, r1) = (sorted[0].1, sorted[1].1);
    Ok(QuadraticOrderReport {
        s,
        ratios,
        slope,
        tail_variation: (r0 - r1).abs() / r0.abs().max(r1.abs()),
        envelope_constant: envelope,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzRow {
    pub bound: f64,
    pub pairs: usize,
    /// Largest `||G1 - G2|| / ||w1 - w2||`.
    pub max_ratio: f64,
    /// Largest ratio divided by `||w1|| + ||w2|| + ||w1||^2 + ||w2||^2`.
    pub max_normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub s: f64,
    pub rows: Vec<LipschitzRow>,
}

impl LipschitzReport {
    /// Ratios are finite and their envelope grows with the ball radius.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.max_ratio.is_finite() && r.max_normalized.is_finite())
            && self.rows.windows(2).all(|w| w[1].max_ratio >= w[0].max_ratio)
    }
}

impl fmt::Display for LipschitzReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# Lipschitz ratios of G, s = {}", self.s)?;
        writeln!(f, "M,pairs,max_ratio,max_normalized")?;
        for r in &self.rows {
            writeln!(f, "{},{},{:.9},{:.9}", r.bound, r.pairs, r.max_ratio, r.max_normalized)?;
        }
        Ok(())
    }
}

/// Lipschitz ratio of `G` on one pair. Returns `None` for identical inputs.
pub fn lipschitz_ratio(w1: &PerturbationField, w2: &PerturbationField, s: f64) -> Result<Option<(f64, f64)>> {
    let dw = w1.sub(w2)?.hs_norm(s)?;
    if dw == 0.0 {
        return Ok(None);
    }
    let dg = evaluate_g(w1).into_field().sub(&evaluate_g(w2).into_field())?.hs_norm(s)?;
    let (n1, n2) = (w1.hs_norm(s)?, w2.hs_norm(s)?);
    let ratio = dg / dw;
    let scale = n1 + n2 + n1 * n1 + n2 * n2;
    Ok(Some((ratio, ratio / scale)))
}

/// Random pairs with `||w_i||_{H^s} <= M` for each `M` in `bounds`. The same
/// unit directions are reused for every `M`.
pub fn lipschitz_check(grid: &Grid1D, bounds: &[f64], pairs: usize, s: f64, seed: u64) -> Result<LipschitzReport> {
    use rand::Rng;
    let mut rng = crate::random::rng(seed);
    let dirs: Vec<(PerturbationField, PerturbationField, f64, f64)> = (0..pairs)
        .map(|_| {
            let a = crate::random::unit_field(grid, &mut rng, 3.0, s);
            let b = crate::random::unit_field(grid, &mut rng, 3.0, s);
            let ra: f64 = rng.random_range(0.1..1.0);
            let rb: f64 = rng.random_range(0.1..1.0);
            (a, b, ra, rb)
        })
        .collect();
    let mut rows = Vec::new();
    for &m in bounds {
        let mut row = LipschitzRow { bound: m, pairs, max_ratio: 0.0, max_normalized: 0.0 };
        for (a, b, ra, rb) in &dirs {
            if let Some((r, rn)) = lipschitz_ratio(&a.scaled(m * ra), &b.scaled(m * rb), s)? {
                row.max_ratio = row.max_ratio.max(r);
                row.max_normalized = row.max_normalized.max(rn);
            }
        }
        rows.push(row);
    }
    Ok(LipschitzReport { s, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid1D::new(10.0, 32).unwrap();
        let src = evaluate_g(&PerturbationField::zeros(&g));
        assert!(src.samples().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn constant_minus_two() {
        let w = Complex64::new(-2.0, 0.0);
        assert_eq!(source_pointwise(w), Complex64::new(-4.0, 0.0));
        assert_eq!(source_pointwise_offset_form(w), Complex64::new(-4.0, 0.0));
        let g = Grid1D::new(10.0, 32).unwrap();
        let field = PerturbationField::from_fn(&g, |_| w);
        for z in evaluate_g(&field).samples() {
            assert!((z - Complex64::new(-4.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn small_imaginary_input() {
        let eps = 1e-3;
        let g = source_pointwise(Complex64::new(0.0, eps));
        let expected = Complex64::new(-eps * eps, -eps * eps * eps);
        assert!((g - expected).norm() < 1e-22);
    }

    #[test]
    fn two_printed_forms_agree() {
        let mut rng = random::rng(1);
        use rand::Rng;
        for _ in 0..10_000 {
            let w = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let a = source_pointwise(w);
            let b = source_pointwise_offset_form(w);
            assert!((a - b).norm() <= 1e-14 * (1.0 + w.norm().powi(3)));
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let g = Grid1D::new(20.0, 128).unwrap();
        let w = random::band_limited_field(&g, &mut random::rng(3), 3.0, true);
        let wbar = PerturbationField::new(g.clone(), w.samples().iter().map(|z| z.conj()).collect()).unwrap();
        let a = evaluate_g(&w);
        let b = evaluate_g(&wbar);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x.conj() - y).norm() < 1e-13);
        }
    }

    #[test]
    fn cubic_support_triples() {
        // band-limited to |j| <= 5, so G has support in |j| <= 15 before dealiasing
        let g = Grid1D::new(2.0 * std::f64::consts::PI, 128).unwrap();
        let w = random::band_limited_field(&g, &mut random::rng(8), 5.0, true);
        let hat = evaluate_raw(&w).into_field().to_spectral();
        let peak = hat.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut top = 0;
        for (k, c) in hat.coefficients().iter().enumerate() {
            if c.norm() > 1e-12 * peak {
                top = top.max(g.mode(k).abs());
            }
        }
        assert_eq!(top, 15);
    }

    #[test]
    fn dealias_zeroes_top_third() {
        let g = Grid1D::new(10.0, 96).unwrap();
        let mut hat = vec![Complex64::new(1.0, 0.0); 96];
        dealias(&g, &mut hat);
        for (k, c) in hat.iter().enumerate() {
            let keep = g.mode(k).abs() <= 32 && k != g.nyquist_index();
            assert_eq!(c.norm() != 0.0, keep, "k={k}");
        }
    }

    #[test]
    fn quadratic_order_on_single_low_mode() {
        let g = Grid1D::new(2.0 * std::f64::consts::PI * 4.0, 128).unwrap();
        let base = PerturbationField::from_fn(&g, |x| Complex64::new((0.5 * x).cos(), 0.0));
        let s = 1.0;
        let w = base.scaled(1.0 / base.hs_norm(s).unwrap());
        let report = quadratic_order_check(&w, s, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
        assert!(report.passed(), "{report}");
        // the limit of the ratio is ||2|w|^2 + w^2||_{H^s}
        let lead = PerturbationField::from_fn(&g, |x| {
            let z = Complex64::new((0.5 * x).cos(), 0.0) / base.hs_norm(s).unwrap();
            2.0 * z.norm_sqr() + z * z
        });
        let limit = lead.hs_norm(s).unwrap();
        let smallest = report.ratios.last().unwrap().1;
        assert!((smallest - limit).abs() < 1e-3 * limit);
        assert!((report.slope - 2.0).abs() < 0.02);
    }

    #[test]
    fn quadratic_order_rejects_bad_input() {
        let g = Grid1D::new(10.0, 32).unwrap();
        let w = PerturbationField::zeros(&g);
        assert!(quadratic_order_check(&w, 0.4, &[0.1, 0.01]).is_err());
        assert!(quadratic_order_check(&w, 1.0, &[0.1, 0.01]).is_err());
    }

    #[test]
    fn lipschitz_identical_and_zero() {
        let g = Grid1D::new(20.0, 64).unwrap();
        let w = random::unit_field(&g, &mut random::rng(5), 2.0, 1.0).scaled(0.1);
        assert_eq!(lipschitz_ratio(&w, &w, 1.0).unwrap(), None);
        // with w2 = 0 the ratio is ||G[w]|| / ||w||
        let (r, _) = lipschitz_ratio(&w, &PerturbationField::zeros(&g), 1.0).unwrap().unwrap();
        let direct = evaluate_g(&w).into_field().hs_norm(1.0).unwrap() / w.hs_norm(1.0).unwrap();
        assert!((r - direct).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_monte_carlo() {
        let g = Grid1D::new(40.0, 128).unwrap();
        let report = lipschitz_check(&g, &[0.05, 0.1, 0.2, 0.4], 50, 1.0, 12).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.rows[1].max_ratio <= 1.0, "{report}");
    }
}
