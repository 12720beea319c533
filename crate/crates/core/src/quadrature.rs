//! Quadrature building blocks.
//!
//! Everything here is deterministic: parallel reductions sum per-tile
//! partial results in tile order, so results do not depend on the size of
//! the rayon pool.

use rayon::prelude::*;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre nodes on `[a, b]` split into panels of width at
/// most `panel`.
pub fn composite_nodes(rule: &GaussLegendre, a: f64, b: f64, panel: f64) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let n_panels = ((b - a) / panel).ceil().max(1.0) as usize;
    let width = (b - a) / n_panels as f64;
    let mut out = Vec::with_capacity(n_panels * rule.len());
    for k in 0..n_panels {
        let lo = a + k as f64 * width;
        out.extend(rule.mapped(lo, lo + width));
    }
    out
}

/// Tensor-product integral over `xs × ys` (each a list of `(node, weight)`).
/// Rows of `xs` are summed in parallel, then combined in row order.
pub fn tensor_sum<F>(xs: &[(f64, f64)], ys: &[(f64, f64)], f: F) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rows: Vec<f64> = xs
        .par_iter()
        .map(|&(x, wx)| {
            let mut acc = 0.0;
            for &(y, wy) in ys {
                acc += wy * f(x, y);
            }
            wx * acc
        })
        .collect();
    rows.iter().sum()
}

/// Composite Simpson rule on uniformly spaced samples (odd length).
/// An even-length input falls back to Simpson on all but the last interval
/// plus a trapezoid for the remainder.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * h * (values[0] + values[1]);
    }
    let (body, extra) = if n % 2 == 1 {
        (n, 0.0)
    } else {
        (n - 1, 0.5 * h * (values[n - 2] + values[n - 1]))
    };
    let mut s = values[0] + values[body - 1];
    for (i, v) in values.iter().enumerate().take(body - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0 + extra
}

/// Surface area of the unit sphere `S^{k}` in `R^{k+1}`.
pub fn unit_sphere_area(k: usize) -> f64 {
    let n = (k + 1) as f64;
    2.0 * std::f64::consts::PI.powf(0.5 * n) / gamma(0.5 * n)
}

/// Gamma function for positive half-integer and integer arguments.
fn gamma(x: f64) -> f64 {
    if (x - 0.5).abs() < 1e-12 {
        return std::f64::consts::PI.sqrt();
    }
    if (x - 1.0).abs() < 1e-12 {
        return 1.0;
    }
    (x - 1.0) * gamma(x - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the highest exact degree for 8 nodes
        let s: f64 = rule.mapped(0.0, 2.0).map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-10);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.1;
        let v: Vec<f64> = (0..=20).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson_uniform(&v, h) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(0) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(1) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn tensor_sum_gaussian() {
        let rule = GaussLegendre::new(10);
        let xs = composite_nodes(&rule, -8.0, 8.0, 1.0);
        let s = tensor_sum(&xs, &xs, |x, y| (-(x * x + y * y)).exp());
        assert!((s - std::f64::consts::PI).abs() < 1e-12);
    }
}
