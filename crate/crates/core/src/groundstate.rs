//! Radial ground state of `-Δw + w = w^p`, its integral constants and the
//! two-spike interaction function Ψ.
//!
//! The profile is obtained in two pieces. Bisection on `w(0)` pins the
//! shooting trajectory to the separatrix, which stays accurate only until
//! the unstable mode (growing like `e^r`) amplifies the final rounding of
//! `w(0)`. The profile is therefore matched at a radius where `w` has
//! decayed by four decades to an inward integration started from the
//! modified-Bessel tail at `r_max`; inward integration damps the unwanted
//! mode instead of amplifying it.

use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Stop, Tolerance};
use crate::quadrature::{composite_nodes, simpson_uniform, unit_sphere_area, GaussLegendre};

/// Default spacing of the tabulated profile.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Radius at which the shooting integration leaves the origin.
const START_RADIUS: f64 = 1e-6;
/// Relative level of `w` at which the outward and inward pieces are joined.
const MATCH_LEVEL: f64 = 1e-4;
/// Number of terms kept in the large-r Bessel series.
const TAIL_TERMS: usize = 6;

/// Tabulated radial ground state.
#[derive(Debug)]
pub struct GroundStateProfile {
    pub dim: usize,
    pub p: f64,
    pub step: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    d2w: Vec<f64>,
    /// Limit of `r^{(N-1)/2} e^r w(r)`, extracted by least squares.
    pub c_np: f64,
    /// Amplitude of the Bessel tail matched at `r_max`.
    pub tail_amplitude: f64,
    pub match_radius: f64,
    pub shooting_tol: f64,
    axial: OnceLock<[AxialGrid; 2]>,
}

impl Clone for GroundStateProfile {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            p: self.p,
            step: self.step,
            r: self.r.clone(),
            w: self.w.clone(),
            dw: self.dw.clone(),
            d2w: self.d2w.clone(),
            c_np: self.c_np,
            tail_amplitude: self.tail_amplitude,
            match_radius: self.match_radius,
            shooting_tol: self.shooting_tol,
            axial: OnceLock::new(),
        }
    }
}

/// Integral constants of the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub i0: f64,
    pub a0: f64,
    /// Potential coefficient `a` used for `a0`.
    pub a: f64,
    /// `∫ w²`
    pub mass2: f64,
    pub gamma0: f64,
    /// `∫ (∂_{x1} w)²`
    pub c0: f64,
}

/// Exponent validity for the ground-state problem.
pub fn check_exponent(dim: usize, p: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension {dim} must be at least 2")));
    }
    let ok = p > 1.0 && p.is_finite() && (dim == 2 || p < (dim as f64 + 2.0) / (dim as f64 - 2.0));
    if ok {
        Ok(())
    } else {
        Err(Error::NonSubcriticalExponent { dim, p })
    }
}

fn signed_pow(w: f64, p: f64) -> f64 {
    w.signum() * w.abs().powf(p)
}

fn radial_rhs(dim: usize, p: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    let k = dim as f64 - 1.0;
    move |r, y| [y[1], -k / r * y[1] + y[0] - signed_pow(y[0], p)]
}

/// Behaviour of a shooting trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    /// `w` crossed zero: `w(0)` too large.
    Overshoot,
    /// `w'` turned positive: `w(0)` too small.
    Undershoot,
    Survived,
}

fn series_start(dim: usize, p: f64, w0: f64) -> [f64; 2] {
    // Δw = w - w^p near the origin, so w ≈ w0 + (w0 - w0^p) r² / (2N)
    let c = (w0 - w0.powf(p)) / dim as f64;
    [w0 + 0.5 * c * START_RADIUS * START_RADIUS, c * START_RADIUS]
}

fn shoot(dim: usize, p: f64, w0: f64, r_end: f64) -> Shot {
    let f = radial_rhs(dim, p);
    let tol = Tolerance { rtol: 1e-13, atol: 1e-18, max_step: 0.05 };
    let mut kind = Shot::Survived;
    let (_, _, stop) = ode::integrate(&f, START_RADIUS, series_start(dim, p, w0), r_end, tol, |_, y| {
        if y[0] < 0.0 {
            kind = Shot::Overshoot;
            true
        } else if y[1] > 0.0 {
            kind = Shot::Undershoot;
            true
        } else {
            false
        }
    });
    if stop == Stop::Reached {
        Shot::Survived
    } else {
        kind
    }
}

fn tail_coefficients(dim: usize) -> [f64; TAIL_TERMS] {
    let nu = 0.5 * (dim as f64 - 2.0);
    let mut a = [0.0; TAIL_TERMS];
    a[0] = 1.0;
    for k in 1..TAIL_TERMS {
        let kf = k as f64;
        a[k] = a[k - 1] * (4.0 * nu * nu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf);
    }
    a
}

/// Shape `r^{-(N-1)/2} e^{-r} S(r)` of the decaying solution of the
/// linearized radial equation, and its derivative.
fn tail_shape(dim: usize, r: f64) -> (f64, f64) {
    let beta = 0.5 * (dim as f64 - 1.0);
    let a = tail_coefficients(dim);
    let mut s = 0.0;
    let mut ds = 0.0;
    let inv = 1.0 / r;
    let mut pw = 1.0;
    for (k, ak) in a.iter().enumerate() {
        s += ak * pw;
        ds -= k as f64 * ak * pw * inv;
        pw *= inv;
    }
    let base = r.powf(-beta) * (-r).exp();
    (base * s, base * (ds - s - beta * s * inv))
}

/// Solves for the ground state with the default table step.
pub fn solve_ground_state(dim: usize, p: f64, r_max: f64, tol: f64) -> Result<GroundStateProfile> {
    solve_ground_state_with_step(dim, p, r_max, tol, DEFAULT_STEP)
}

/// Solves for the ground state on a uniform table of spacing `step`.
pub fn solve_ground_state_with_step(
    dim: usize,
    p: f64,
    r_max: f64,
    tol: f64,
    step: f64,
) -> Result<GroundStateProfile> {
    check_exponent(dim, p)?;
    if !(r_max >= 40.0) {
        return Err(Error::InvalidInput(format!("r_max = {r_max} must be at least 40")));
    }
    if !(tol > 0.0) || !(step > 0.0) || step > 0.05 {
        return Err(Error::InvalidInput("tol must be positive and step in (0, 0.05]".into()));
    }

    // w(0) below ((p+1)/2)^{1/(p-1)} cannot reach zero.
    let mut lo = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
    if shoot(dim, p, lo, r_max) != Shot::Undershoot {
        return Err(Error::ShootingFailed(format!("lower bracket {lo} does not undershoot")));
    }
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    loop {
        match shoot(dim, p, hi, r_max) {
            Shot::Overshoot => break,
            Shot::Undershoot => {
                lo = hi;
                hi *= 2.0;
            }
            Shot::Survived => break,
        }
        doublings += 1;
        if doublings > 60 {
            return Err(Error::ShootingFailed("no overshooting upper bracket".into()));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(dim, p, mid, r_max) {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
            Shot::Survived => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    if hi - lo > tol * hi {
        return Err(Error::ShootingFailed(format!(
            "bracket [{lo}, {hi}] collapsed above tolerance {tol}"
        )));
    }
    let w0 = lo;

    let n = (r_max / step).round() as usize;
    let step = r_max / n as f64;
    let r: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let f = radial_rhs(dim, p);
    let fine = Tolerance { rtol: 1e-14, atol: 1e-20, max_step: step };

    // outward piece
    let mut w = vec![0.0; n + 1];
    let mut dw = vec![0.0; n + 1];
    w[0] = w0;
    let mut state = series_start(dim, p, w0);
    let mut t = START_RADIUS;
    let mut i_match = None;
    for i in 1..=n {
        let (_, y, _) = ode::integrate(&f, t, state, r[i], fine, |_, _| false);
        state = y;
        t = r[i];
        w[i] = y[0];
        dw[i] = y[1];
        if y[0] < MATCH_LEVEL * w0 {
            i_match = Some(i);
            break;
        }
        if y[0] <= 0.0 || y[1] > 0.0 {
            return Err(Error::ShootingFailed(format!("trajectory left the separatrix at r = {}", r[i])));
        }
    }
    let i_match = i_match.ok_or_else(|| Error::ShootingFailed("profile never decayed to the matching level".into()))?;
    let r_match = r[i_match];
    let w_match = w[i_match];

    // inward piece: amplitude of the Bessel tail fixed by continuity of w at r_match
    let inward = |amp: f64, store: Option<(&mut [f64], &mut [f64])>| -> f64 {
        let (s, ds) = tail_shape(dim, r_max);
        let mut y = [amp * s, amp * ds];
        let mut t = r_max;
        match store {
            Some((wv, dwv)) => {
                wv[n] = y[0];
                dwv[n] = y[1];
                for i in (i_match..n).rev() {
                    let (_, yn, _) = ode::integrate(&f, t, y, r[i], fine, |_, _| false);
                    y = yn;
                    t = r[i];
                    wv[i] = y[0];
                    dwv[i] = y[1];
                }
            }
            None => {
                for i in (i_match..n).rev() {
                    let (_, yn, _) = ode::integrate(&f, t, y, r[i], fine, |_, _| false);
                    y = yn;
                    t = r[i];
                }
            }
        }
        y[0]
    };
    let (shape_match, _) = tail_shape(dim, r_match);
    let mut a0 = w_match / shape_match;
    let mut g0 = inward(a0, None) - w_match;
    let mut a1 = a0 * (1.0 + 1e-3);
    let mut g1 = inward(a1, None) - w_match;
    for _ in 0..20 {
        if g1 == g0 {
            break;
        }
        let a2 = a1 - g1 * (a1 - a0) / (g1 - g0);
        a0 = a1;
        g0 = g1;
        a1 = a2;
        g1 = inward(a1, None) - w_match;
        if g1.abs() <= 1e-15 * w_match {
            break;
        }
    }
    let amplitude = a1;
    let mut w_in = vec![0.0; n + 1];
    let mut dw_in = vec![0.0; n + 1];
    inward(amplitude, Some((&mut w_in, &mut dw_in)));
    let slope_jump = (dw_in[i_match] - dw[i_match]).abs();
    if slope_jump > 1e-8 * w_match.max(1e-300) / MATCH_LEVEL {
        return Err(Error::ShootingFailed(format!("slope mismatch {slope_jump:.3e} at r = {r_match}")));
    }
    w[i_match..=n].copy_from_slice(&w_in[i_match..=n]);
    dw[i_match..=n].copy_from_slice(&dw_in[i_match..=n]);

    let kdim = dim as f64 - 1.0;
    let d2w: Vec<f64> = r
        .iter()
        .zip(w.iter().zip(&dw))
        .map(|(&ri, (&wi, &dwi))| {
            if ri == 0.0 {
                (wi - wi.powf(p)) / dim as f64
            } else {
                -kdim / ri * dwi + wi - signed_pow(wi, p)
            }
        })
        .collect();

    let c_np = fit_asymptotic_constant(dim, &r, &w, r_max)?;

    Ok(GroundStateProfile {
        dim,
        p,
        step,
        r,
        w,
        dw,
        d2w,
        c_np,
        tail_amplitude: amplitude,
        match_radius: r_match,
        shooting_tol: tol,
        axial: OnceLock::new(),
    })
}

/// Least-squares fit of `ln w + r + (N-1)/2 ln r ≈ c + b1/r + b2/r²` over
/// the last decade of the grid; returns `exp(c)`.
fn fit_asymptotic_constant(dim: usize, r: &[f64], w: &[f64], r_max: f64) -> Result<f64> {
    let beta = 0.5 * (dim as f64 - 1.0);
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let mut count = 0;
    for (ri, wi) in r.iter().zip(w).step_by(10) {
        if *ri < r_max - 10.0 || *wi <= 0.0 {
            continue;
        }
        let y = wi.ln() + ri + beta * ri.ln();
        let row = Vector3::new(1.0, 1.0 / ri, 1.0 / (ri * ri));
        ata += row * row.transpose();
        atb += row * y;
        count += 1;
    }
    if count < 3 {
        return Err(Error::ShootingFailed("too few tail points to fit c_Np".into()));
    }
    let coef = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::ShootingFailed("singular tail fit".into()))?;
    Ok(coef[0].exp())
}

fn hermite(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

impl GroundStateProfile {
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn w0(&self) -> f64 {
        self.w[0]
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let x = r / self.step;
        let i = (x.floor() as usize).min(self.r.len() - 2);
        (i, x - i as f64)
    }

    fn tail(&self, r: f64) -> (f64, f64) {
        let (s, ds) = tail_shape(self.dim, r);
        (self.tail_amplitude * s, self.tail_amplitude * ds)
    }

    /// `w(r)` by cubic Hermite interpolation, Bessel tail beyond `r_max`.
    pub fn w_at(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max() {
            return self.tail(r).0;
        }
        let (i, t) = self.locate(r);
        hermite(t, self.step, self.w[i], self.dw[i], self.w[i + 1], self.dw[i + 1])
    }

    /// `w'(r)`, interpolated with the ODE-consistent second derivative.
    pub fn dw_at(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max() {
            return self.tail(r).1;
        }
        let (i, t) = self.locate(r);
        hermite(t, self.step, self.dw[i], self.d2w[i], self.dw[i + 1], self.d2w[i + 1])
    }

    /// `w` and `w'` together.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        (self.w_at(r), self.dw_at(r))
    }

    /// Asymptotic law `c_Np r^{-(N-1)/2} e^{-r}`.
    pub fn asymptotic_w(&self, r: f64) -> f64 {
        self.c_np * r.powf(-0.5 * (self.dim as f64 - 1.0)) * (-r).exp()
    }

    /// Integral over `R^N` of a radial function given on the table nodes.
    fn radial_integral<F: Fn(usize) -> f64>(&self, g: F) -> (f64, f64) {
        let area = unit_sphere_area(self.dim - 1);
        let k = self.dim as i32 - 1;
        let vals: Vec<f64> = (0..self.r.len()).map(|i| self.r[i].powi(k) * g(i)).collect();
        let fine = area * simpson_uniform(&vals, self.step);
        let coarse_vals: Vec<f64> = vals.iter().step_by(2).copied().collect();
        let coarse = area * simpson_uniform(&coarse_vals, 2.0 * self.step);
        (fine, coarse)
    }

    fn axial_grids(&self) -> &[AxialGrid; 2] {
        self.axial.get_or_init(|| {
            let half_width = self.support_radius();
            [AxialGrid::new(self, half_width, 1.0, 12), AxialGrid::new(self, half_width, 0.5, 12)]
        })
    }

    /// Radius beyond which `w^{p-1}` is negligible against its central value.
    fn support_radius(&self) -> f64 {
        let target = 1e-15f64.ln() / (self.p - 1.0) + self.w0().ln();
        let idx = self.w.iter().position(|&v| v.ln() < target).unwrap_or(self.w.len() - 1);
        (self.r[idx] + 2.0).min(self.r_max()).ceil()
    }

    /// `w^p` and `∂_{x1}(w^p)` at a point given in axial coordinates.
    fn axial_integral<F>(&self, what: &'static str, f: F) -> Result<f64>
    where
        F: Fn(&AxialNode) -> f64 + Sync,
    {
        let [coarse, fine] = self.axial_grids();
        let a = coarse.sum(&f);
        let b = fine.sum(&f);
        let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        if rel > 1e-7 {
            return Err(Error::QuadratureNotConverged { what, rel_change: rel });
        }
        Ok(b)
    }

    fn check_shift(&self, s: f64) -> Result<()> {
        if !(s > 0.0) || s + 10.0 > 2.0 * self.r_max() {
            return Err(Error::OutOfTabulatedRange { s });
        }
        // w(s) w(0)^p bounds the integrand
        if self.w_at(s) * self.w0().powf(self.p) < 1e-300 {
            return Err(Error::OutOfTabulatedRange { s });
        }
        Ok(())
    }

    /// `Ψ(s) = -∫ w(x - s e) ∂_{x1}(w^p)(x) dx`.
    pub fn psi(&self, s: f64) -> Result<f64> {
        self.check_shift(s)?;
        self.axial_integral("psi", |nd| {
            let y = ((nd.x1 - s).powi(2) + nd.rho * nd.rho).sqrt();
            -self.w_at(y) * nd.dwp
        })
    }

    /// `Ψ'(s)`, differentiating the quadrature under the integral sign.
    pub fn psi_derivative(&self, s: f64) -> Result<f64> {
        self.check_shift(s)?;
        self.axial_integral("psi derivative", |nd| {
            let y1 = nd.x1 - s;
            let y = (y1 * y1 + nd.rho * nd.rho).sqrt();
            let d1w = if y > 0.0 { self.dw_at(y) * y1 / y } else { 0.0 };
            d1w * nd.dwp
        })
    }

    /// `-Ψ'(s) s / Ψ(s)`.
    pub fn psi_log_derivative(&self, s: f64) -> Result<f64> {
        if !(s > 1.0) {
            return Err(Error::InvalidInput(format!("log-derivative needs s > 1, got {s}")));
        }
        let psi = self.psi(s)?;
        let dpsi = self.psi_derivative(s)?;
        Ok(-dpsi * s / psi)
    }

    /// `∫ w^p(x) w(x - s e) dx`.
    pub fn overlap(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return self.axial_integral("overlap", |nd| nd.wp * nd.w);
        }
        self.check_shift(s)?;
        self.axial_integral("overlap", |nd| {
            let y = ((nd.x1 - s).powi(2) + nd.rho * nd.rho).sqrt();
            nd.wp * self.w_at(y)
        })
    }

    /// Ground-state invariants evaluated on the table.
    pub fn diagnostics(&self) -> ProfileDiagnostics {
        let n = self.r.len();
        let h = self.step;
        let kdim = self.dim as f64 - 1.0;
        let mut max_residual = 0.0f64;
        for i in 2..n - 2 {
            // fourth-order central difference of the tabulated w'
            let d2 = (-self.dw[i + 2] + 8.0 * self.dw[i + 1] - 8.0 * self.dw[i - 1] + self.dw[i - 2]) / (12.0 * h);
            let ri = self.r[i];
            let res = -d2 - kdim / ri * self.dw[i] + self.w[i] - self.w[i].powf(self.p);
            max_residual = max_residual.max(res.abs());
        }
        let strictly_decreasing = self.w.windows(2).all(|p| p[1] < p[0]) && self.dw[1..].iter().all(|&d| d < 0.0);
        let beta = 0.5 * kdim;
        let r_max = self.r_max();
        let mut worst_ratio = 0.0f64;
        for i in 0..n {
            let ri = self.r[i];
            if ri >= r_max - 10.0 {
                let v = ri.powf(beta) * ri.exp() * self.w[i] / self.c_np;
                worst_ratio = worst_ratio.max((v - 1.0).abs());
            }
        }
        ProfileDiagnostics {
            max_residual,
            strictly_decreasing,
            positive: self.w.iter().all(|&v| v > 0.0),
            tail_constant_deviation: worst_ratio,
            log_derivative_at_rmax: self.dw[n - 1] / self.w[n - 1],
            origin_slope: self.dw[0],
        }
    }
}

/// Results of [`GroundStateProfile::diagnostics`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileDiagnostics {
    /// Largest ODE residual over interior nodes.
    pub max_residual: f64,
    pub strictly_decreasing: bool,
    pub positive: bool,
    /// Worst `|r^{(N-1)/2} e^r w / c_Np - 1|` over `[r_max - 10, r_max]`.
    pub tail_constant_deviation: f64,
    pub log_derivative_at_rmax: f64,
    pub origin_slope: f64,
}

#[derive(Debug, Clone, Copy)]
struct AxialNode {
    x1: f64,
    rho: f64,
    weight: f64,
    w: f64,
    dw: f64,
    wp: f64,
    /// `∂_{x1}(w^p)`
    dwp: f64,
}

/// Tensor Gauss-Legendre grid in axial coordinates `(x1, |x'|)` for
/// integrands with an axis of symmetry; the transverse sphere measure is
/// folded into the weights.
#[derive(Debug)]
struct AxialGrid {
    nodes: Vec<AxialNode>,
}

impl AxialGrid {
    fn new(profile: &GroundStateProfile, half_width: f64, panel: f64, order: usize) -> Self {
        let rule = GaussLegendre::new(order);
        let xs = composite_nodes(&rule, -half_width, half_width, panel);
        let rhos = composite_nodes(&rule, 0.0, half_width, panel);
        let area = unit_sphere_area(profile.dim - 2);
        let k = profile.dim as i32 - 2;
        let p = profile.p;
        let mut nodes = Vec::with_capacity(xs.len() * rhos.len());
        for &(x1, wx) in &xs {
            for &(rho, wr) in &rhos {
                let r = (x1 * x1 + rho * rho).sqrt();
                let (w, dw) = profile.eval(r);
                let wp = w.powf(p);
                let dwp = if r > 0.0 { p * w.powf(p - 1.0) * dw * x1 / r } else { 0.0 };
                nodes.push(AxialNode {
                    x1,
                    rho,
                    weight: wx * wr * area * rho.powi(k),
                    w,
                    dw,
                    wp,
                    dwp,
                });
            }
        }
        Self { nodes }
    }

    fn sum<F: Fn(&AxialNode) -> f64 + Sync>(&self, f: &F) -> f64 {
        let parts: Vec<f64> = self
            .nodes
            .par_chunks(4096)
            .map(|chunk| chunk.iter().map(|nd| nd.weight * f(nd)).sum::<f64>())
            .collect();
        parts.iter().sum()
    }
}

/// Computes the integral constants; `a` is the potential coefficient.
pub fn derive_constants(profile: &GroundStateProfile, a: f64) -> Result<ModelConstants> {
    if !(a > 0.0) {
        return Err(Error::InvalidInput(format!("potential coefficient a = {a} must be positive")));
    }
    let p = profile.p;
    let converged = |what: &'static str, (fine, coarse): (f64, f64)| -> Result<f64> {
        let rel = (fine - coarse).abs() / fine.abs();
        if rel > 1e-6 {
            Err(Error::QuadratureNotConverged { what, rel_change: rel })
        } else {
            Ok(fine)
        }
    };
    let wp1 = converged("int w^(p+1)", profile.radial_integral(|i| profile.w[i].powf(p + 1.0)))?;
    let energy_form = converged(
        "int |grad w|^2 + w^2",
        profile.radial_integral(|i| profile.dw[i].powi(2) + profile.w[i].powi(2)),
    )?;
    if (wp1 - energy_form).abs() > 1e-8 * wp1 {
        return Err(Error::QuadratureNotConverged {
            what: "ground-state identity for I0",
            rel_change: (wp1 - energy_form).abs() / wp1,
        });
    }
    let mass2 = converged("int w^2", profile.radial_integral(|i| profile.w[i].powi(2)))?;
    let grad2 = converged("int |grad w|^2", profile.radial_integral(|i| profile.dw[i].powi(2)))?;
    let gamma0 = profile.axial_integral("gamma0", |nd| nd.wp * (-nd.x1).exp())?;
    let c0 = profile.axial_integral("c0", |nd| {
        let r2 = nd.x1 * nd.x1 + nd.rho * nd.rho;
        if r2 > 0.0 {
            nd.dw * nd.dw * nd.x1 * nd.x1 / r2
        } else {
            0.0
        }
    })?;
    let c0_radial = grad2 / profile.dim as f64;
    if (c0 - c0_radial).abs() > 1e-6 * c0 {
        return Err(Error::QuadratureNotConverged {
            what: "c0 axial vs radial",
            rel_change: (c0 - c0_radial).abs() / c0,
        });
    }
    Ok(ModelConstants {
        i0: (0.5 - 1.0 / (p + 1.0)) * wp1,
        a0: 0.5 * a * mass2,
        a,
        mass2,
        gamma0,
        c0,
    })
}

/// How Ψ is evaluated downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiMode {
    Quadrature,
    Asymptotic,
}

/// Ψ and `-Ψ' s / Ψ` under a fixed mode.
///
/// The asymptotic law is `γ0 c_Np s^{-(N-1)/2} e^{-s}`: for well separated
/// spikes `Ψ(s) ≈ -γ0 w'(s)`, which fixes the prefactor. In quadrature mode
/// values are tabulated on `[s_lo, s_hi]` and interpolated in `ln Ψ`; the
/// asymptotic law, rescaled to be continuous, takes over beyond `s_hi`.
#[derive(Debug, Clone)]
pub struct PsiLaw {
    pub mode: PsiMode,
    dim: usize,
    c_psi: f64,
    table: Option<PsiTable>,
}

#[derive(Debug, Clone)]
struct PsiTable {
    s0: f64,
    h: f64,
    log_psi: Vec<f64>,
    dlog_psi: Vec<f64>,
    /// continuity factor for the far law
    far_scale: f64,
}

impl PsiLaw {
    pub fn asymptotic(profile: &GroundStateProfile, constants: &ModelConstants) -> Self {
        Self { mode: PsiMode::Asymptotic, dim: profile.dim, c_psi: constants.gamma0 * profile.c_np, table: None }
    }

    /// Tabulates quadrature Ψ on `[s_lo, s_hi]` with spacing 0.25.
    pub fn quadrature(profile: &GroundStateProfile, constants: &ModelConstants, s_lo: f64, s_hi: f64) -> Result<Self> {
        let s_lo = s_lo.max(1.5);
        let s_hi = s_hi.min(2.0 * profile.r_max() - 10.0);
        if s_hi <= s_lo {
            return Err(Error::OutOfTabulatedRange { s: s_hi });
        }
        let h = 0.25;
        let n = ((s_hi - s_lo) / h).ceil() as usize + 1;
        let mut log_psi = Vec::with_capacity(n);
        let mut dlog_psi = Vec::with_capacity(n);
        for i in 0..n {
            let s = s_lo + i as f64 * h;
            let psi = profile.psi(s)?;
            if !(psi > 0.0) {
                return Err(Error::InvalidInput(format!("Psi({s}) = {psi} is not positive")));
            }
            log_psi.push(psi.ln());
            dlog_psi.push(profile.psi_derivative(s)? / psi);
        }
        let c_psi = constants.gamma0 * profile.c_np;
        let s_end = s_lo + (n - 1) as f64 * h;
        let beta = 0.5 * (profile.dim as f64 - 1.0);
        let far_at_end = c_psi * s_end.powf(-beta) * (-s_end).exp();
        let far_scale = log_psi[n - 1].exp() / far_at_end;
        Ok(Self {
            mode: PsiMode::Quadrature,
            dim: profile.dim,
            c_psi,
            table: Some(PsiTable { s0: s_lo, h, log_psi, dlog_psi, far_scale }),
        })
    }

    /// Builds the law for `mode`, tabulating around the expected separation range.
    pub fn for_mode(
        mode: PsiMode,
        profile: &GroundStateProfile,
        constants: &ModelConstants,
        s_lo: f64,
        s_hi: f64,
    ) -> Result<Self> {
        match mode {
            PsiMode::Asymptotic => Ok(Self::asymptotic(profile, constants)),
            PsiMode::Quadrature => Self::quadrature(profile, constants, s_lo, s_hi),
        }
    }

    /// Constant of the asymptotic law.
    pub fn asymptotic_constant(&self) -> f64 {
        self.c_psi
    }

    /// Interval covered by quadrature values, if any.
    pub fn tabulated_range(&self) -> Option<(f64, f64)> {
        self.table
            .as_ref()
            .map(|t| (t.s0, t.s0 + (t.log_psi.len() - 1) as f64 * t.h))
    }

    fn beta(&self) -> f64 {
        0.5 * (self.dim as f64 - 1.0)
    }

    /// `(ln Ψ(s), (ln Ψ)'(s))`.
    pub fn log_psi(&self, s: f64) -> Result<(f64, f64)> {
        if !(s > 0.0) {
            return Err(Error::OutOfTabulatedRange { s });
        }
        let beta = self.beta();
        let far = |scale: f64| (scale.ln() + self.c_psi.ln() - beta * s.ln() - s, -beta / s - 1.0);
        match &self.table {
            None => Ok(far(1.0)),
            Some(t) => {
                let x = (s - t.s0) / t.h;
                let last = t.log_psi.len() - 1;
                if x < 0.0 {
                    return Err(Error::OutOfTabulatedRange { s });
                }
                if x >= last as f64 {
                    return Ok(far(t.far_scale));
                }
                let i = x.floor() as usize;
                let u = x - i as f64;
                let v = hermite(u, t.h, t.log_psi[i], t.dlog_psi[i], t.log_psi[i + 1], t.dlog_psi[i + 1]);
                // derivative of the Hermite cubic
                let u2 = u * u;
                let dv = ((6.0 * u2 - 6.0 * u) * t.log_psi[i]
                    + (3.0 * u2 - 4.0 * u + 1.0) * t.h * t.dlog_psi[i]
                    + (-6.0 * u2 + 6.0 * u) * t.log_psi[i + 1]
                    + (3.0 * u2 - 2.0 * u) * t.h * t.dlog_psi[i + 1])
                    / t.h;
                Ok((v, dv))
            }
        }
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        Ok(self.log_psi(s)?.0.exp())
    }

    pub fn psi_derivative(&self, s: f64) -> Result<f64> {
        let (l, dl) = self.log_psi(s)?;
        Ok(dl * l.exp())
    }

    /// `d̂(s) = -Ψ'(s) s / Ψ(s)`.
    pub fn dhat(&self, s: f64) -> Result<f64> {
        Ok(-self.log_psi(s)?.1 * s)
    }
}

/// JSON header stored next to the profile CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileHeader {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    #[serde(rename = "c_Np")]
    pub c_np: f64,
    pub r_max: f64,
    pub step: f64,
    pub tail_amplitude: f64,
    pub match_radius: f64,
    pub shooting_tol: f64,
    pub constants: Option<ModelConstants>,
}

impl GroundStateProfile {
    pub fn header(&self, constants: Option<ModelConstants>) -> ProfileHeader {
        ProfileHeader {
            dim: self.dim,
            p: self.p,
            c_np: self.c_np,
            r_max: self.r_max(),
            step: self.step,
            tail_amplitude: self.tail_amplitude,
            match_radius: self.match_radius,
            shooting_tol: self.shooting_tol,
            constants,
        }
    }

    /// Columnar `r,w,dw` text.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.r.len() * 64);
        s.push_str("r,w,dw\n");
        for i in 0..self.r.len() {
            s.push_str(&format!("{:e},{:e},{:e}\n", self.r[i], self.w[i], self.dw[i]));
        }
        s
    }

    /// Rebuilds a profile from its header and CSV body.
    pub fn from_parts(header: &ProfileHeader, csv: &str) -> Result<Self> {
        check_exponent(header.dim, header.p)?;
        let mut r = Vec::new();
        let mut w = Vec::new();
        let mut dw = Vec::new();
        for (lineno, line) in csv.lines().enumerate() {
            if lineno == 0 {
                if line.trim() != "r,w,dw" {
                    return Err(Error::InvalidInput(format!("unexpected profile header line {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::InvalidInput(format!("line {}: expected 3 columns", lineno + 1)));
            }
            let parse = |c: &str| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))
            };
            r.push(parse(cols[0])?);
            w.push(parse(cols[1])?);
            dw.push(parse(cols[2])?);
        }
        if r.len() < 5 || r[0] != 0.0 {
            return Err(Error::InvalidInput("profile table must start at r = 0".into()));
        }
        let dim = header.dim;
        let p = header.p;
        let kdim = dim as f64 - 1.0;
        let d2w = r
            .iter()
            .zip(w.iter().zip(&dw))
            .map(|(&ri, (&wi, &dwi))| {
                if ri == 0.0 {
                    (wi - wi.powf(p)) / dim as f64
                } else {
                    -kdim / ri * dwi + wi - signed_pow(wi, p)
                }
            })
            .collect();
        Ok(Self {
            dim,
            p,
            step: header.step,
            r,
            w,
            dw,
            d2w,
            c_np: header.c_np,
            tail_amplitude: header.tail_amplitude,
            match_radius: header.match_radius,
            shooting_tol: header.shooting_tol,
            axial: OnceLock::new(),
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str, constants: Option<ModelConstants>) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        crate::io::write_atomic(&dir.join(format!("{stem}.csv")), self.to_csv().as_bytes())?;
        let header = serde_json::to_string_pretty(&self.header(constants))?;
        crate::io::write_atomic(&dir.join(format!("{stem}.json")), header.as_bytes())?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<(Self, ProfileHeader)> {
        let header: ProfileHeader = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let csv = std::fs::read_to_string(dir.join(format!("{stem}.csv")))?;
        Ok((Self::from_parts(&header, &csv)?, header))
    }
}

/// Ratio `Ψ(s) s^{(N-1)/2} e^s`, the slowly varying part of Ψ.
pub fn psi_scaled(profile: &GroundStateProfile, s: f64) -> Result<f64> {
    Ok(profile.psi(s)? * s.powf(0.5 * (profile.dim as f64 - 1.0)) * s.exp())
}
