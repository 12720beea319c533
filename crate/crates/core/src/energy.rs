//! Reduced energy of a spike ring and the rotation-angle landscape.
//!
//! For `U = Σ_j w(x - Q_j)` the energy reduces to
//!
//! ```text
//! J = K I0 + Σ_j P(Q_j) - (γ0/2) Σ_{i≠j} w(|Q_i - Q_j|)
//! ```
//!
//! with `P(x) = a0 |x|^{-m}` for the model potential `1 + a/|x|^m`, or
//! `P(x) = (∫w²/2)(V(x) - V_inf)` for a general [`PotentialModel`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::balance::BalanceResult;
use crate::configuration::{build_config, PerturbationVector, SpikeConfig};
use crate::error::{Error, Result};
use crate::groundstate::{GroundStateProfile, ModelConstants, PsiLaw};
use crate::potential::{regime, PotentialModel};
use crate::quadrature::{composite_nodes, tensor_sum, GaussLegendre};
use crate::reduced_linear::build_t;

/// Single-spike potential energy `P(x)`.
#[derive(Debug, Clone, Copy)]
pub enum PotentialTerm<'a> {
    /// `a0 |x|^{-m}`
    Radial { m: f64 },
    /// `(∫w²/2)(V(x) - V_inf)`
    Model(&'a PotentialModel),
}

impl PotentialTerm<'_> {
    pub fn value(&self, x: [f64; 2], c: &ModelConstants) -> f64 {
        match self {
            Self::Radial { m } => c.a0 * x[0].hypot(x[1]).powf(-m),
            Self::Model(v) => 0.5 * c.mass2 * (v.eval(x) - v.v_inf),
        }
    }

    pub fn gradient(&self, x: [f64; 2], c: &ModelConstants) -> [f64; 2] {
        match self {
            Self::Radial { m } => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let s = -m * c.a0 * r2.powf(-0.5 * m - 1.0);
                [s * x[0], s * x[1]]
            }
            Self::Model(v) => {
                let g = v.gradient(x);
                [0.5 * c.mass2 * g[0], 0.5 * c.mass2 * g[1]]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport {
    pub j_total: f64,
    /// `K I0`
    pub term_const: f64,
    /// `Σ P(Q_j)`
    pub term_potential: f64,
    /// `-(γ0/2) Σ_{i≠j} w(|Q_i - Q_j|)`
    pub term_interaction: f64,
    pub direct_quadrature: Option<f64>,
    pub remainder: Option<f64>,
}

impl EnergyReport {
    /// `J - K I0`, the part that depends on the configuration.
    pub fn variable(&self) -> f64 {
        self.term_potential + self.term_interaction
    }

    pub fn with_direct(mut self, direct: f64) -> Self {
        self.direct_quadrature = Some(direct);
        self.remainder = Some(direct - self.j_total);
        self
    }
}

fn check_separation(config: &SpikeConfig) -> Result<()> {
    if config.k > 1 {
        let rho = config.min_separation();
        if !(rho >= 1.0) {
            return Err(Error::SeparationTooSmall { rho, min: 1.0 });
        }
    }
    Ok(())
}

fn diff(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// `J` for the model potential `1 + a/|x|^m`.
pub fn reduced_energy(
    config: &SpikeConfig,
    m: f64,
    constants: &ModelConstants,
    profile: &GroundStateProfile,
) -> Result<EnergyReport> {
    reduced_energy_with(config, PotentialTerm::Radial { m }, constants, profile)
}

pub fn reduced_energy_with(
    config: &SpikeConfig,
    pot: PotentialTerm<'_>,
    constants: &ModelConstants,
    profile: &GroundStateProfile,
) -> Result<EnergyReport> {
    check_separation(config)?;
    let term_const = config.k as f64 * constants.i0;
    let term_potential: f64 = config.points.iter().map(|&q| pot.value(q, constants)).sum();
    let mut pairs = 0.0;
    for i in 0..config.k {
        for j in i + 1..config.k {
            let d = diff(config.points[i], config.points[j]);
            pairs += profile.w_at(d[0].hypot(d[1]));
        }
    }
    let term_interaction = -constants.gamma0 * pairs;
    Ok(EnergyReport {
        j_total: term_const + term_potential + term_interaction,
        term_const,
        term_potential,
        term_interaction,
        direct_quadrature: None,
        remainder: None,
    })
}

/// `∂J/∂(f, g)` in stacked order.
pub fn reduced_gradient(
    config: &SpikeConfig,
    m: f64,
    constants: &ModelConstants,
    profile: &GroundStateProfile,
) -> Result<Vec<f64>> {
    reduced_gradient_with(config, PotentialTerm::Radial { m }, constants, profile)
}

pub fn reduced_gradient_with(
    config: &SpikeConfig,
    pot: PotentialTerm<'_>,
    constants: &ModelConstants,
    profile: &GroundStateProfile,
) -> Result<Vec<f64>> {
    check_separation(config)?;
    let k = config.k;
    let mut out = vec![0.0; 2 * k];
    for j in 0..k {
        let qj = config.points[j];
        let mut g = pot.gradient(qj, constants);
        for i in 0..k {
            if i == j {
                continue;
            }
            let d = diff(qj, config.points[i]);
            let r = d[0].hypot(d[1]);
            let s = -constants.gamma0 * profile.dw_at(r) / r;
            g[0] += s * d[0];
            g[1] += s * d[1];
        }
        let (n, t) = (config.normals[j], config.tangents[j]);
        out[j] = g[0] * n[0] + g[1] * n[1];
        out[k + j] = g[0] * t[0] + g[1] * t[1];
    }
    Ok(out)
}

/// Per-spike `(normal, tangential)` components of the leading projected
/// error, split into the potential and interaction contributions.
#[derive(Debug, Clone)]
pub struct ProjectedError {
    pub potential: Vec<[f64; 2]>,
    pub interaction: Vec<[f64; 2]>,
}

impl ProjectedError {
    pub fn total(&self) -> Vec<[f64; 2]> {
        self.potential
            .iter()
            .zip(&self.interaction)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
            .collect()
    }

    /// Stacked `(normal_1..normal_K, tangential_1..tangential_K)`.
    pub fn stacked(&self) -> Vec<f64> {
        let t = self.total();
        let mut v: Vec<f64> = t.iter().map(|x| x[0]).collect();
        v.extend(t.iter().map(|x| x[1]));
        v
    }
}

/// `-∇P(Q_k) + Σ_{j≠k} Ψ(|Q_j - Q_k|)(Q_j - Q_k)/|Q_j - Q_k|` on each
/// spike's frame. For the model potential the first term is
/// `a0 m |Q_k|^{-m-1} Q_k/|Q_k|`.
pub fn projected_error_leading(
    config: &SpikeConfig,
    pot: PotentialTerm<'_>,
    constants: &ModelConstants,
    law: &PsiLaw,
) -> Result<ProjectedError> {
    check_separation(config)?;
    let k = config.k;
    let mut potential = Vec::with_capacity(k);
    let mut interaction = Vec::with_capacity(k);
    for j in 0..k {
        let qk = config.points[j];
        let gp = pot.gradient(qk, constants);
        let mut acc = [0.0; 2];
        for i in 0..k {
            if i == j {
                continue;
            }
            let d = diff(config.points[i], qk);
            let r = d[0].hypot(d[1]);
            let psi = law.psi(r)?;
            acc[0] += psi * d[0] / r;
            acc[1] += psi * d[1] / r;
        }
        let (n, t) = (config.normals[j], config.tangents[j]);
        potential.push([-(gp[0] * n[0] + gp[1] * n[1]), -(gp[0] * t[0] + gp[1] * t[1])]);
        interaction.push([acc[0] * n[0] + acc[1] * n[1], acc[0] * t[0] + acc[1] * t[1]]);
    }
    Ok(ProjectedError { potential, interaction })
}

/// Linear frame expansion of the projected error:
/// `-a0 R^{-m-2}` times the per-spike pair
///
/// ```text
/// n: -(m+1) f + (f̈ - ḡ/2) + d̂ (f + ḡ/2)
/// t:  g + (f̄/2 - g) - d̂ (f̄/2 + g̈)
/// ```
///
/// The overall minus sign is that of differentiating `U` in `q`
/// (`∂_q w(x - Q) = -∇w(x - Q)`), so the result equals `-a0 R^{-m-2} T q`.
pub fn projected_error_frame(
    q: &PerturbationVector,
    m: f64,
    constants: &ModelConstants,
    dhat: f64,
    r: f64,
) -> Vec<[f64; 2]> {
    let (fdd, gdd) = q.qddot();
    let (fbar, gbar) = q.qbar();
    let scale = -constants.a0 * r.powf(-m - 2.0);
    (0..q.k())
        .map(|j| {
            let (f, g) = (q.f[j], q.g[j]);
            let n = -(m + 1.0) * f + (fdd[j] - 0.5 * gbar[j]) + dhat * (f + 0.5 * gbar[j]);
            let t = g + (0.5 * fbar[j] - g) - dhat * (0.5 * fbar[j] + gdd[j]);
            [scale * n, scale * t]
        })
        .collect()
}

/// Options for [`solve_reduced_q`].
#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Run even when `(p, m, σ)` is outside the contracting regime.
    pub force: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-10, force: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    pub q: PerturbationVector,
    pub gamma: f64,
    pub iterations: usize,
    /// `‖q_{n+1} - q_n‖*` per iteration
    pub step_norms: Vec<f64>,
    pub in_lambda_k: bool,
}

impl FixedPointResult {
    /// Largest ratio of successive step norms, ignoring steps at rounding level.
    pub fn contraction_estimate(&self) -> f64 {
        self.step_norms
            .windows(2)
            .filter(|w| w[0] > 1e-13)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

/// Fixed point `q = F(q)` of the reduced system at rotation angle `alpha`:
/// each step solves `T q_{n+1} = T q_n - R^{m+2}/(a0 m) Φ(q_n) + γ q1(q_n)`
/// with `q_{n+1} ⊥ q0`, where `Φ` is the leading projected error with the
/// actual potential. The factor `a0 m R^{-m-2}` is the linearization of
/// `Φ` at the balanced ring.
#[allow(clippy::too_many_arguments)]
pub fn solve_reduced_q(
    alpha: f64,
    k: usize,
    potential: &PotentialModel,
    balance: &BalanceResult,
    constants: &ModelConstants,
    profile: &GroundStateProfile,
    law: &PsiLaw,
    opts: FixedPointOptions,
) -> Result<FixedPointResult> {
    potential.validate()?;
    if balance.k != k {
        return Err(Error::InvalidInput(format!("balance solved for K = {}, asked for K = {k}", balance.k)));
    }
    let reg = regime(profile.p, potential.m, potential.sigma);
    if !reg.ok() && !opts.force {
        return Err(Error::RegimeViolated(format!(
            "min(1,(p-1)/2) m = {} and sigma = {} (need > 2 and > 2)",
            reg.decay_product, potential.sigma
        )));
    }
    let m = balance.m;
    let op = build_t(k, balance.dhat, m)?;
    let r = balance.r;
    let scale = r.powf(m + 2.0) / (constants.a0 * m);
    let pot = PotentialTerm::Model(potential);

    let mut q = vec![0.0; 2 * k];
    let mut gamma;
    let mut step_norms = Vec::new();
    let mut rising = 0;
    for it in 1..=opts.max_iter {
        let config = build_config(k, r, alpha, PerturbationVector::from_stacked(&q)?)?;
        let phi = projected_error_leading(&config, pot, constants, law)?.stacked();
        let tq = op.matvec(&q);
        let b: Vec<f64> = tq.iter().zip(&phi).map(|(a, p)| a - scale * p).collect();
        let (q_new, g) = op.solve_constrained_q1(&b, r, &q, constants.c0)?;
        let delta: Vec<f64> = q_new.iter().zip(&q).map(|(a, b)| a - b).collect();
        let step = PerturbationVector::from_stacked(&delta)?.norm_star();
        if let Some(&last) = step_norms.last() {
            if step >= last && step > opts.tol {
                rising += 1;
            } else {
                rising = 0;
            }
        }
        step_norms.push(step);
        q = q_new;
        gamma = g;
        if !step.is_finite() || rising >= 5 {
            return Err(Error::NotContracting { last_step: step });
        }
        if step <= opts.tol {
            let q = PerturbationVector::from_stacked(&q)?;
            let in_lambda_k = q.norm_star() <= 1.0;
            return Ok(FixedPointResult { q, gamma, iterations: it, step_norms, in_lambda_k });
        }
    }
    Err(Error::NotContracting { last_step: step_norms.last().copied().unwrap_or(f64::NAN) })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    /// `F(α)`, NaN when the fixed point failed
    pub f: f64,
    /// `F(α) - K I0`
    pub f_variable: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub q_norm_star: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub index: usize,
    /// parabolic refinement of the grid extremum
    pub alpha: f64,
    pub f: f64,
    /// γ changes sign within one grid cell of `alpha`
    pub gamma_colocated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub extrema: Vec<Extremum>,
    /// `(max F - min F) / |mean F|`
    pub relative_spread: f64,
    pub flat: bool,
    /// `(max - min) / max |·|` of `F - K I0`
    pub variable_spread: f64,
}

/// Relative spread below which `F` is reported as flat.
pub const FLAT_TOLERANCE: f64 = 1e-10;

/// Relative variation of `F - K I0` below which it is treated as rounding
/// noise and no extrema are reported.
pub const RESOLVABLE_VARIATION: f64 = 1e-9;

/// Scans `F(α) = J(Q(α, q(α)))` on `n_alpha` uniform angles in `[0, 2π)`.
#[allow(clippy::too_many_arguments)]
pub fn scan_f(
    k: usize,
    potential: &PotentialModel,
    balance: &BalanceResult,
    constants: &ModelConstants,
    profile: &GroundStateProfile,
    law: &PsiLaw,
    n_alpha: usize,
    opts: FixedPointOptions,
) -> Result<ScanResult> {
    if n_alpha < 16 {
        return Err(Error::InvalidInput(format!("n_alpha = {n_alpha} must be at least 16")));
    }
    let h = 2.0 * PI / n_alpha as f64;
    let rows: Vec<ScanRow> = (0..n_alpha)
        .into_par_iter()
        .map(|i| -> Result<ScanRow> {
            let alpha = i as f64 * h;
            match solve_reduced_q(alpha, k, potential, balance, constants, profile, law, opts) {
                Ok(fp) => {
                    let config = build_config(k, balance.r, alpha, fp.q.clone())?;
                    let rep = reduced_energy_with(&config, PotentialTerm::Model(potential), constants, profile)?;
                    Ok(ScanRow {
                        alpha,
                        f: rep.j_total,
                        f_variable: rep.variable(),
                        gamma: fp.gamma,
                        iterations: fp.iterations,
                        q_norm_star: fp.q.norm_star(),
                        converged: true,
                    })
                }
                Err(Error::NotContracting { .. }) => Ok(ScanRow {
                    alpha,
                    f: f64::NAN,
                    f_variable: f64::NAN,
                    gamma: f64::NAN,
                    iterations: opts.max_iter,
                    q_norm_star: f64::NAN,
                    converged: false,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let good: Vec<&ScanRow> = rows.iter().filter(|r| r.converged).collect();
    if good.is_empty() {
        return Err(Error::NotContracting { last_step: f64::NAN });
    }
    let fmax = good.iter().map(|r| r.f_variable).fold(f64::NEG_INFINITY, f64::max);
    let fmin = good.iter().map(|r| r.f_variable).fold(f64::INFINITY, f64::min);
    let mean_f = good.iter().map(|r| r.f).sum::<f64>() / good.len() as f64;
    let relative_spread = (fmax - fmin) / mean_f.abs();
    let flat = relative_spread <= FLAT_TOLERANCE;
    let vmax = good.iter().map(|r| r.f_variable.abs()).fold(0.0, f64::max);
    let variable_spread = if vmax > 0.0 { (fmax - fmin) / vmax } else { 0.0 };
    let extrema = if variable_spread > RESOLVABLE_VARIATION { locate_extrema(&rows, h) } else { Vec::new() };
    Ok(ScanResult { rows, extrema, relative_spread, flat, variable_spread })
}

/// Cyclic 3-point extrema of `f_variable` with parabolic refinement.
pub fn locate_extrema(rows: &[ScanRow], h: f64) -> Vec<Extremum> {
    let n = rows.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b, c) = (rows[(i + n - 1) % n], rows[i], rows[(i + 1) % n]);
        if !(a.converged && b.converged && c.converged) {
            continue;
        }
        let (fa, fb, fc) = (a.f_variable, b.f_variable, c.f_variable);
        let kind = if fb > fa && fb >= fc {
            ExtremumKind::Max
        } else if fb < fa && fb <= fc {
            ExtremumKind::Min
        } else {
            continue;
        };
        let curv = fa - 2.0 * fb + fc;
        let shift = if curv != 0.0 { 0.5 * (fa - fc) / curv } else { 0.0 };
        let alpha = b.alpha + shift.clamp(-1.0, 1.0) * h;
        let f_ref = b.f - 0.25 * (fa - fc) * shift;
        let gamma_colocated = [(a.gamma, b.gamma), (b.gamma, c.gamma)]
            .iter()
            .any(|(x, y)| x.signum() != y.signum() || *x == 0.0 || *y == 0.0);
        out.push(Extremum { kind, index: i, alpha, f: f_ref, gamma_colocated });
    }
    out
}

/// `alpha,F,gamma,iterations,q_norm_star` rows.
pub fn scan_csv(scan: &ScanResult) -> String {
    crate::io::csv_table(
        &["alpha", "F", "gamma", "iterations", "q_norm_star"],
        scan.rows
            .iter()
            .map(|r| vec![r.alpha, r.f, r.gamma, r.iterations as f64, r.q_norm_star]),
    )
}

/// `E(U)` for `U = Σ w(x - Q_j)` on a uniform planar grid with edge
/// differences for `|∇U|²`. The grid pads the spikes' bounding box by
/// `padding`. Returns the Richardson combination `(4 E_{h/2} - E_h)/3`
/// after checking that halving the step moves the raw value by at most
/// `1e-4` relative.
pub fn direct_energy<V>(config: &SpikeConfig, v: V, profile: &GroundStateProfile, grid_step: f64) -> Result<f64>
where
    V: Fn([f64; 2]) -> f64 + Sync,
{
    direct_energy_padded(config, v, profile, grid_step, 15.0)
}

pub fn direct_energy_padded<V>(
    config: &SpikeConfig,
    v: V,
    profile: &GroundStateProfile,
    grid_step: f64,
    padding: f64,
) -> Result<f64>
where
    V: Fn([f64; 2]) -> f64 + Sync,
{
    if profile.dim != 2 {
        return Err(Error::InvalidInput("grid energy is planar and needs N = 2".into()));
    }
    if padding < 15.0 || !(grid_step > 0.0) {
        return Err(Error::InvalidInput("padding must be at least 15 and grid_step positive".into()));
    }
    let coarse = grid_energy(config, &v, profile, grid_step, padding);
    let fine = grid_energy(config, &v, profile, 0.5 * grid_step, padding);
    let rel = (fine - coarse).abs() / fine.abs();
    if rel > 1e-4 {
        return Err(Error::GridTooCoarse { step: grid_step, rel_change: rel });
    }
    Ok((4.0 * fine - coarse) / 3.0)
}

fn grid_energy<V>(config: &SpikeConfig, v: &V, profile: &GroundStateProfile, h: f64, padding: f64) -> f64
where
    V: Fn([f64; 2]) -> f64 + Sync,
{
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &config.points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a] - padding);
            hi[a] = hi[a].max(p[a] + padding);
        }
    }
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 1;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 1;
    let cut = profile.r_max();
    let field: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let x = lo[0] + (idx / ny) as f64 * h;
            let y = lo[1] + (idx % ny) as f64 * h;
            config
                .points
                .iter()
                .map(|q| {
                    let r = (x - q[0]).hypot(y - q[1]);
                    if r < cut {
                        profile.w_at(r)
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();
    let p = profile.p;
    let rows: Vec<f64> = (1..nx - 1)
        .into_par_iter()
        .map(|i| {
            let x = lo[0] + i as f64 * h;
            let mut acc = 0.0;
            for j in 1..ny - 1 {
                let u = field[i * ny + j];
                // edge differences to the right and above, each a midpoint sample of ∂U
                let ux = (field[(i + 1) * ny + j] - u) / h;
                let uy = (field[i * ny + j + 1] - u) / h;
                let y = lo[1] + j as f64 * h;
                acc += 0.5 * (ux * ux + uy * uy + v([x, y]) * u * u) - u.max(0.0).powf(p + 1.0) / (p + 1.0);
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>() * h * h
}

/// Exact splitting of `E(U)` around the reduced energy.
///
/// With `w_j = w(x - Q_j)`, the ground-state equation gives
///
/// ```text
/// E(U) = K I0 + ½ Σ_j ∫(V-1) w_j² - ½ Σ_{i≠j} I(|Q_i - Q_j|) + J22 - ∫ G
/// ```
///
/// where `I(s) = ∫ w^p(x) w(x - s e)`, `J22 = ½ Σ_{i≠j} ∫ (V-1) w_i w_j`
/// and `G = (U^{p+1} - Σ w_j^{p+1})/(p+1) - Σ_j w_j^p (U - w_j) ≥ 0`.
/// The first three terms sharpen the reduced energy (`a0|Q|^{-m}` and
/// `γ0 w(d)` are their leading parts); the last two are the remainder.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyDecomposition {
    pub k_i0: f64,
    /// `½ Σ_j ∫ (V-1) w_j²`
    pub self_potential: f64,
    /// `-½ Σ_{i≠j} I(d_ij)`
    pub pair_overlap: f64,
    pub j22: f64,
    /// `∫ G`
    pub g_integral: f64,
    /// reduced energy `J`
    pub reduced: f64,
}

impl EnergyDecomposition {
    /// `E(U)` assembled from the pieces.
    pub fn direct(&self) -> f64 {
        self.k_i0 + self.self_potential + self.pair_overlap + self.j22 - self.g_integral
    }

    /// `E(U) - K I0`, free of the large constant.
    pub fn direct_variable(&self) -> f64 {
        self.self_potential + self.pair_overlap + self.j22 - self.g_integral
    }

    /// Sharpened expansion `K I0 + ½Σ∫(V-1)w_j² - ½Σ I(d_ij)`.
    pub fn sharp(&self) -> f64 {
        self.k_i0 + self.self_potential + self.pair_overlap
    }

    /// `E(U) - J`.
    pub fn remainder_leading(&self) -> f64 {
        self.direct_variable() - (self.reduced - self.k_i0)
    }

    /// `E(U) - sharp = J22 - ∫G`.
    pub fn remainder_sharp(&self) -> f64 {
        self.j22 - self.g_integral
    }
}

/// `(1+t)^{p+1} - 1 - (p+1) t`, by series for small `|t|`.
fn second_order_power(t: f64, p: f64) -> f64 {
    let e = p + 1.0;
    if t.abs() < 0.1 {
        let mut term = e * (e - 1.0) / 2.0 * t * t;
        let mut acc = term;
        for k in 3..30 {
            term *= (e - (k - 1) as f64) / k as f64 * t;
            acc += term;
            if term.abs() < 1e-18 * acc.abs() {
                break;
            }
        }
        acc
    } else {
        (1.0 + t).powf(e) - 1.0 - e * t
    }
}

/// Computes the [`EnergyDecomposition`] by planar quadrature.
pub fn energy_decomposition(
    config: &SpikeConfig,
    potential: &PotentialModel,
    constants: &ModelConstants,
    profile: &GroundStateProfile,
) -> Result<EnergyDecomposition> {
    if profile.dim != 2 {
        return Err(Error::InvalidInput("energy decomposition is planar and needs N = 2".into()));
    }
    let reduced = reduced_energy_with(config, PotentialTerm::Model(potential), constants, profile)?.j_total;
    let k = config.k;
    let p = profile.p;
    let rule = GaussLegendre::new(10);
    const PAD: f64 = 20.0;
    let vm1 = |x: [f64; 2]| potential.eval(x) - potential.v_inf;

    let mut self_potential = 0.0;
    let local = composite_nodes(&rule, -PAD, PAD, 0.5);
    for q in &config.points {
        let val = tensor_sum(&local, &local, |x, y| {
            let w = profile.w_at(x.hypot(y));
            vm1([q[0] + x, q[1] + y]) * w * w
        });
        self_potential += 0.5 * val;
    }

    let mut pair_overlap = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let d = diff(config.points[i], config.points[j]);
            let s = d[0].hypot(d[1]);
            pair_overlap -= match profile.overlap(s) {
                Ok(v) => v,
                // beyond the table the overlap is γ0 w(s) up to exponentially smaller terms
                Err(Error::OutOfTabulatedRange { .. }) => constants.gamma0 * profile.w_at(s),
                Err(e) => return Err(e),
            };
        }
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for pt in &config.points {
        for a in 0..2 {
            lo[a] = lo[a].min(pt[a] - PAD);
            hi[a] = hi[a].max(pt[a] + PAD);
        }
    }
    let xs = composite_nodes(&rule, lo[0], hi[0], 0.5);
    let ys = composite_nodes(&rule, lo[1], hi[1], 0.5);
    let cut = profile.r_max();
    let pts = &config.points;
    let pieces = |x: f64, y: f64| -> (f64, f64) {
        let ws: Vec<f64> = pts
            .iter()
            .map(|q| {
                let r = (x - q[0]).hypot(y - q[1]);
                if r < cut {
                    profile.w_at(r)
                } else {
                    0.0
                }
            })
            .collect();
        let u: f64 = ws.iter().sum();
        let sq: f64 = ws.iter().map(|w| w * w).sum();
        let j22 = 0.5 * vm1([x, y]) * (u * u - sq);
        let (jstar, a) = ws
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (i, &w)| if w > best.1 { (i, w) } else { best });
        if a <= 0.0 {
            return (j22, 0.0);
        }
        let rest = u - a;
        let mut g = a.powf(p + 1.0) * second_order_power(rest / a, p) / (p + 1.0);
        for (i, &w) in ws.iter().enumerate() {
            if i != jstar && w > 0.0 {
                g -= w.powf(p + 1.0) / (p + 1.0) + w.powf(p) * (u - w);
            }
        }
        (j22, g)
    };
    let j22 = tensor_sum(&xs, &ys, |x, y| pieces(x, y).0);
    let g_integral = tensor_sum(&xs, &ys, |x, y| pieces(x, y).1);

    Ok(EnergyDecomposition {
        k_i0: k as f64 * constants.i0,
        self_potential,
        pair_overlap,
        j22,
        g_integral,
        reduced,
    })
}

/// Error scale `K e^{-min(2,(p+1)/2) d} + K R^{-2m}` of the reduced energy.
pub fn expansion_error_scale(k: usize, p: f64, d: f64, r: f64, m: f64) -> f64 {
    let kf = k as f64;
    kf * (-(2.0f64.min(0.5 * (p + 1.0))) * d).exp() + kf * r.powf(-2.0 * m)
}
