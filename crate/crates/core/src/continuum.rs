//! The periodic system obtained from `T q = b` as `K → ∞`:
//!
//! ```text
//! -(m+1) f + (f'' - g') + d̂ (f + g') = φ
//!  g + (f' - g) - d̂ (f' + g'')       = ϕ
//! ```
//!
//! on `[0, 2π]` with periodic boundary conditions and `∫ g = 0`. With
//! `h = d̂ (f + g')` the second equation integrates to `h = f - Φ - c_h`
//! where `Φ(θ) = ∫_0^θ ϕ`, and the first becomes a scalar equation
//! `f'' - c² f = RHS` with `c² = m - 1 + 1/d̂`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dft::{self, RealCoefficients};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::reduced_linear::build_t;

/// One term `coef · cos(freq θ)` or `coef · sin(freq θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub kind: TrigKind,
    pub freq: u32,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Cos,
    Sin,
}

/// Finite trigonometric sum used as a forcing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrigPolynomial(pub Vec<TrigTerm>);

impl TrigPolynomial {
    pub fn cos(freq: u32, coef: f64) -> TrigTerm {
        TrigTerm { kind: TrigKind::Cos, freq, coef }
    }

    pub fn sin(freq: u32, coef: f64) -> TrigTerm {
        TrigTerm { kind: TrigKind::Sin, freq, coef }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.0
            .iter()
            .map(|t| {
                let a = t.freq as f64 * theta;
                t.coef * if t.kind == TrigKind::Cos { a.cos() } else { a.sin() }
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|t| !t.coef.is_finite()) {
            return Err(Error::InvalidInput("forcing coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Solution of the periodic system on a uniform grid, with Fourier
/// coefficients for evaluation anywhere.
#[derive(Debug, Clone)]
pub struct ContinuumSolution {
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub c: f64,
    pub m: f64,
    pub dhat: f64,
    /// `∫ f`
    pub f_integral: f64,
    pub c_h: f64,
    pub c_g: f64,
    f_coef: RealCoefficients,
    g_coef: RealCoefficients,
    rhs_coef: RealCoefficients,
}

fn eval_series(c: &RealCoefficients, theta: f64) -> f64 {
    let mut acc = c.cos[0];
    for k in 1..c.cos.len() {
        if c.cos[k] != 0.0 || c.sin[k] != 0.0 {
            let (s, co) = (k as f64 * theta).sin_cos();
            acc += c.cos[k] * co + c.sin[k] * s;
        }
    }
    acc
}

/// Coefficients of `d^order/dθ^order` applied to a series; the Nyquist
/// term is dropped for odd orders, where it has no real derivative.
fn differentiate(c: &RealCoefficients, order: u32, n: usize) -> RealCoefficients {
    let mut out = c.clone();
    for k in 0..c.cos.len() {
        let kf = k as f64;
        let (a, b) = (c.cos[k], c.sin[k]);
        let (mut na, mut nb) = (a, b);
        for _ in 0..order {
            let (ta, tb) = (kf * nb, -kf * na);
            na = ta;
            nb = tb;
        }
        if order % 2 == 1 && 2 * k == n {
            na = 0.0;
            nb = 0.0;
        }
        out.cos[k] = na;
        out.sin[k] = nb;
    }
    out
}

/// Zero-mean antiderivative of a zero-mean series.
fn antiderivative(c: &RealCoefficients, n: usize) -> RealCoefficients {
    let mut out = RealCoefficients { cos: vec![0.0; c.cos.len()], sin: vec![0.0; c.cos.len()] };
    for k in 1..c.cos.len() {
        if 2 * k == n {
            continue;
        }
        let kf = k as f64;
        out.cos[k] = -c.sin[k] / kf;
        out.sin[k] = c.cos[k] / kf;
    }
    out
}

/// Solves the periodic system on `n` uniform nodes (`n ≥ 16`, even).
pub fn solve_continuum<P, Q>(phi: P, varphi: Q, m: f64, dhat: f64, n: usize) -> Result<ContinuumSolution>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    if !(dhat > m + 1.0) {
        return Err(Error::DhatTooSmall { dhat, bound: m + 1.0 });
    }
    if n < 16 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("grid size {n} must be even and at least 16")));
    }
    let c2 = m - 1.0 + 1.0 / dhat;
    if !(c2 > 0.0) {
        return Err(Error::InvalidInput(format!("m - 1 + 1/dhat = {c2} must be positive")));
    }
    let step = 2.0 * PI / n as f64;
    let theta: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let phi_v: Vec<f64> = theta.iter().map(|&t| phi(t)).collect();
    let vphi_v: Vec<f64> = theta.iter().map(|&t| varphi(t)).collect();
    let scale = 1.0 + phi_v.iter().chain(&vphi_v).fold(0.0f64, |a, v| a.max(v.abs()));
    let vphi_c = dft::forward(&vphi_v);
    // trapezoid mean of a periodic sample is the zero Fourier coefficient
    if vphi_c.cos[0].abs() > 1e-12 * scale {
        return Err(Error::NonZeroMeanForcing { mean: vphi_c.cos[0] });
    }
    let phi_c = dft::forward(&phi_v);

    let mut big_phi = antiderivative(&vphi_c, n);
    // Φ(θ) = ∫_0^θ ϕ: the antiderivative shifted to vanish at 0
    let at0: f64 = big_phi.cos.iter().sum();
    big_phi.cos[0] = -at0;
    let mean_big_phi = big_phi.cos[0];

    let phi_mean = phi_c.cos[0];
    let f_integral = 2.0 * PI * phi_mean / (dhat - 1.0 - m);
    let kappa = (dhat - 1.0).powi(2) / (dhat * (dhat - 1.0 - m));
    let ratio = (dhat - 1.0) / dhat;

    let mut rhs = phi_c.clone();
    rhs.cos[0] -= kappa * phi_mean;
    for k in 0..rhs.cos.len() {
        rhs.cos[k] += ratio * big_phi.cos[k];
        rhs.sin[k] += ratio * big_phi.sin[k];
    }
    rhs.cos[0] -= ratio * mean_big_phi;

    let mut f_coef = rhs.clone();
    for k in 0..f_coef.cos.len() {
        let den = -((k * k) as f64 + c2);
        f_coef.cos[k] /= den;
        f_coef.sin[k] /= den;
    }

    let c_h = ((1.0 - dhat) * f_integral - 2.0 * PI * mean_big_phi) / (2.0 * PI);
    let mut h_coef = f_coef.clone();
    for k in 0..h_coef.cos.len() {
        h_coef.cos[k] -= big_phi.cos[k];
        h_coef.sin[k] -= big_phi.sin[k];
    }
    h_coef.cos[0] -= c_h;

    let mut dg = h_coef.clone();
    for k in 0..dg.cos.len() {
        dg.cos[k] = h_coef.cos[k] / dhat - f_coef.cos[k];
        dg.sin[k] = h_coef.sin[k] / dhat - f_coef.sin[k];
    }
    let g_coef = antiderivative(&dg, n);
    // g(θ) = ∫_0^θ g' + c_g with c_g fixing ∫ g = 0
    let c_g = g_coef.cos.iter().sum::<f64>();

    Ok(ContinuumSolution {
        f: dft::inverse(&f_coef, n),
        g: dft::inverse(&g_coef, n),
        h: dft::inverse(&h_coef, n),
        theta,
        c: c2.sqrt(),
        m,
        dhat,
        f_integral,
        c_h,
        c_g,
        f_coef,
        g_coef,
        rhs_coef: rhs,
    })
}

impl ContinuumSolution {
    pub fn eval_f(&self, theta: f64) -> f64 {
        eval_series(&self.f_coef, theta)
    }

    pub fn eval_g(&self, theta: f64) -> f64 {
        eval_series(&self.g_coef, theta)
    }

    /// Right-hand side of the scalar equation `f'' - c² f = RHS`.
    pub fn eval_rhs(&self, theta: f64) -> f64 {
        eval_series(&self.rhs_coef, theta)
    }

    fn n(&self) -> usize {
        self.theta.len()
    }

    /// `(f(0) - f(2π), f'(0) - f'(2π), g(0) - g(2π), g'(0) - g'(2π))`.
    pub fn periodicity_defect(&self) -> [f64; 4] {
        let n = self.n();
        let df = differentiate(&self.f_coef, 1, n);
        let dg = differentiate(&self.g_coef, 1, n);
        let tp = 2.0 * PI;
        [
            self.eval_f(0.0) - self.eval_f(tp),
            eval_series(&df, 0.0) - eval_series(&df, tp),
            self.eval_g(0.0) - self.eval_g(tp),
            eval_series(&dg, 0.0) - eval_series(&dg, tp),
        ]
    }

    /// Sup-norm residuals of both equations at the grid nodes, using
    /// spectral derivatives.
    pub fn residuals<P, Q>(&self, phi: P, varphi: Q) -> (f64, f64)
    where
        P: Fn(f64) -> f64,
        Q: Fn(f64) -> f64,
    {
        let n = self.n();
        let f1 = dft::inverse(&differentiate(&self.f_coef, 1, n), n);
        let f2 = dft::inverse(&differentiate(&self.f_coef, 2, n), n);
        let g1 = dft::inverse(&differentiate(&self.g_coef, 1, n), n);
        let g2 = dft::inverse(&differentiate(&self.g_coef, 2, n), n);
        let (m, d) = (self.m, self.dhat);
        let mut r1 = 0.0f64;
        let mut r2 = 0.0f64;
        for i in 0..n {
            let t = self.theta[i];
            let e1 = -(m + 1.0) * self.f[i] + (f2[i] - g1[i]) + d * (self.f[i] + g1[i]) - phi(t);
            let e2 = self.g[i] + (f1[i] - self.g[i]) - d * (f1[i] + g2[i]) - varphi(t);
            r1 = r1.max(e1.abs());
            r2 = r2.max(e2.abs());
        }
        (r1, r2)
    }

    /// Trapezoid `∫_0^{2π} g`.
    pub fn g_integral(&self) -> f64 {
        2.0 * PI * self.g.iter().sum::<f64>() / self.n() as f64
    }

    /// Trapezoid `∫_0^{2π} f`.
    pub fn f_grid_integral(&self) -> f64 {
        2.0 * PI * self.f.iter().sum::<f64>() / self.n() as f64
    }

    /// `f(θ) = -∫ G0(θ, s) RHS(s) ds`, integrating the two smooth branches
    /// of the kernel separately with composite Gauss-Legendre.
    pub fn f_by_green(&self, theta: f64) -> f64 {
        let rule = GaussLegendre::new(20);
        let mut acc = 0.0;
        for (a, b) in [(0.0, theta), (theta, 2.0 * PI)] {
            if b <= a {
                continue;
            }
            let panels = ((b - a) / 0.25).ceil().max(1.0) as usize;
            let w = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * w;
                for (s, ws) in rule.mapped(lo, lo + w) {
                    acc += ws * green_g0(theta, s, self.c) * self.eval_rhs(s);
                }
            }
        }
        -acc
    }

    /// `theta,f,g` rows on the grid.
    pub fn to_csv(&self) -> String {
        crate::io::csv_table(
            &["theta", "f", "g"],
            (0..self.n()).map(|i| vec![self.theta[i], self.f[i], self.g[i]]),
        )
    }
}

/// Periodic Green's function of `-d²/dθ² + c²` on `[0, 2π]`.
pub fn green_g0(theta: f64, s: f64, c: f64) -> f64 {
    let e = (2.0 * PI * c).exp();
    let x = theta - s;
    let pre = 1.0 / (2.0 * c * (e - 1.0));
    if theta <= s {
        pre * (e * (c * x).exp() + (-c * x).exp())
    } else {
        pre * ((c * x).exp() + e * (-c * x).exp())
    }
}

/// Discrete against continuum solution at the ring angles.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteComparison {
    #[serde(rename = "K")]
    pub k: usize,
    pub sup_err_f: f64,
    pub sup_err_g: f64,
    pub theta: Vec<f64>,
    pub f_discrete: Vec<f64>,
    pub g_discrete: Vec<f64>,
    pub f_continuum: Vec<f64>,
    pub g_continuum: Vec<f64>,
}

/// Solves `T q = b + γ q0` with `b` sampled from `(φ, ϕ)` at
/// `θ_j = 2π(j-1)/K` and compares with the continuum solution there.
pub fn compare_discrete<P, Q>(k: usize, phi: P, varphi: Q, m: f64, dhat: f64) -> Result<DiscreteComparison>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    let op = build_t(k, dhat, m)?;
    let theta: Vec<f64> = (0..k).map(|j| 2.0 * PI * j as f64 / k as f64).collect();
    let mut b: Vec<f64> = theta.iter().map(|&t| phi(t)).collect();
    b.extend(theta.iter().map(|&t| varphi(t)));
    let (q, _gamma) = op.solve_constrained(&b)?;
    let n = (8 * k).max(1024);
    let cont = solve_continuum(&phi, &varphi, m, dhat, n)?;
    let f_discrete = q[..k].to_vec();
    let mut g_discrete = q[k..].to_vec();
    // both sides carry mean-zero g
    let mean = g_discrete.iter().sum::<f64>() / k as f64;
    g_discrete.iter_mut().for_each(|v| *v -= mean);
    let f_continuum: Vec<f64> = theta.iter().map(|&t| cont.eval_f(t)).collect();
    let g_continuum: Vec<f64> = theta.iter().map(|&t| cont.eval_g(t)).collect();
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(DiscreteComparison {
        k,
        sup_err_f: sup(&f_discrete, &f_continuum),
        sup_err_g: sup(&g_discrete, &g_continuum),
        theta,
        f_discrete,
        g_discrete,
        f_continuum,
        g_continuum,
    })
}

/// `K,sup_err_f,sup_err_g,ratio` where `ratio` compares the larger of the
/// two errors with the previous row (NaN on the first row).
pub fn convergence_csv(rows: &[DiscreteComparison]) -> String {
    let mut prev: Option<f64> = None;
    crate::io::csv_table(
        &["K", "sup_err_f", "sup_err_g", "ratio"],
        rows.iter().map(|r| {
            let e = r.sup_err_f.max(r.sup_err_g);
            let ratio = prev.map_or(f64::NAN, |p| e / p);
            prev = Some(e);
            vec![r.k as f64, r.sup_err_f, r.sup_err_g, ratio]
        }),
    )
}
