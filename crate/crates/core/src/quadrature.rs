//! Gauss-Legendre rules and integration over the whole real line.
//!
//! The periodic box cannot represent algebraically decaying profiles such as
//! the Peregrine offset exactly; these rules evaluate closed-form integrands
//! on all of `R` instead.

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre over `[a, b]` with `panels` equal panels.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let partial: f64 = nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum();
        total += 0.5 * h * partial;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WholeLineRule {
    /// Split point: `[-R, R]` is integrated directly, the tails through `x = R/u`.
    pub split: f64,
    pub inner_panels: usize,
    pub tail_panels: usize,
    pub order: usize,
}

impl Default for WholeLineRule {
    fn default() -> Self {
        Self { split: 100.0, inner_panels: 400, tail_panels: 16, order: 20 }
    }
}

impl WholeLineRule {
    pub fn with_split(split: f64) -> Self {
        Self { split, inner_panels: (4.0 * split).ceil().max(8.0) as usize, ..Self::default() }
    }

    /// `int_R f(x) dx` for integrands decaying at least like `|x|^{-2}`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let r = self.split;
        let inner = integrate_interval(&f, -r, r, self.inner_panels, self.order);
        // int_R^inf f(x) dx = int_0^1 f(R/u) R/u^2 du, Gauss nodes avoid u = 0
        let tail = |u: f64| {
            let x = r / u;
            (f(x) + f(-x)) * r / (u * u)
        };
        inner + integrate_interval(tail, 0.0, 1.0, self.tail_panels, self.order)
    }
}

pub fn integrate_whole_line(f: impl Fn(f64) -> f64) -> f64 {
    WholeLineRule::default().integrate(f)
}
