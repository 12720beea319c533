//! The reduced operator
//!
//! ```text
//! T = [ c1 A1 + c4 I    c2 A2 ]
//!     [   -c2 A2        c3 A1 ]
//! ```
//!
//! acting on stacked perturbations `(f, g)`, where `A1` is the cyclic second
//! difference and `(A2 v)_j = v_{j+1} - v_{j-1}`. Both stencils are
//! diagonalized by the real Fourier basis, so every solve reduces to 2×2
//! blocks per frequency.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::configuration::{next, prev, SpikeConfig};
use crate::dft::{self, RealCoefficients};
use crate::error::{Error, Result};
use crate::groundstate::GroundStateProfile;
use crate::quadrature::{composite_nodes, tensor_sum, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedOperator {
    #[serde(rename = "K")]
    pub k: usize,
    pub dhat: f64,
    pub m: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// Builds `T` for `K ≥ 8` and `d̂ > m + 1`.
pub fn build_t(k: usize, dhat: f64, m: f64) -> Result<ReducedOperator> {
    if k < 8 {
        return Err(Error::InvalidInput(format!("K = {k} must be at least 8")));
    }
    ReducedOperator::with_size(k, dhat, m)
}

impl ReducedOperator {
    /// As [`build_t`] but admitting any `K ≥ 3`, for small closed-form tables.
    pub fn with_size(k: usize, dhat: f64, m: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidInput(format!("K = {k} must be at least 3")));
        }
        if !(dhat > m + 1.0) {
            return Err(Error::DhatTooSmall { dhat, bound: m + 1.0 });
        }
        let kf = k as f64;
        Ok(Self {
            k,
            dhat,
            m,
            c1: kf * kf / (4.0 * PI * PI),
            c2: (dhat - 1.0) * kf / (4.0 * PI),
            c3: -dhat * kf * kf / (4.0 * PI * PI),
            c4: dhat - m - 1.0,
        })
    }

    /// `T q` in O(K).
    pub fn matvec(&self, q: &[f64]) -> Vec<f64> {
        let k = self.k;
        assert_eq!(q.len(), 2 * k);
        let (f, g) = q.split_at(k);
        let mut out = vec![0.0; 2 * k];
        for j in 0..k {
            let (n, p) = (next(j, k), prev(j, k));
            let a1f = f[n] - 2.0 * f[j] + f[p];
            let a1g = g[n] - 2.0 * g[j] + g[p];
            let a2f = f[n] - f[p];
            let a2g = g[n] - g[p];
            out[j] = self.c1 * a1f + self.c4 * f[j] + self.c2 * a2g;
            out[k + j] = -self.c2 * a2f + self.c3 * a1g;
        }
        out
    }

    /// Dense `2K × 2K` matrix; the antisymmetric stencil is written once
    /// and mirrored, so the result is exactly symmetric.
    pub fn dense(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut t = DMatrix::zeros(2 * k, 2 * k);
        for j in 0..k {
            let (n, p) = (next(j, k), prev(j, k));
            t[(j, j)] += -2.0 * self.c1 + self.c4;
            t[(j, n)] += self.c1;
            t[(j, p)] += self.c1;
            t[(k + j, k + j)] += -2.0 * self.c3;
            t[(k + j, k + n)] += self.c3;
            t[(k + j, k + p)] += self.c3;
            t[(j, k + n)] += self.c2;
            t[(j, k + p)] -= self.c2;
        }
        for j in 0..k {
            for i in 0..k {
                t[(k + i, j)] = t[(j, k + i)];
            }
        }
        t
    }

    /// `‖T‖∞`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (4.0 * self.c1 + self.c4.abs() + 2.0 * self.c2.abs()).max(4.0 * self.c3.abs() + 2.0 * self.c2.abs())
    }

    /// `-4 sin²(kπ/K)` and `-4 sin²(2kπ/K)` for zero-based frequency `k`.
    fn symbols(&self, freq: usize) -> (f64, f64) {
        let kf = self.k as f64;
        let a = (freq as f64 * PI / kf).sin();
        let b = (2.0 * freq as f64 * PI / kf).sin();
        (-4.0 * a * a, -4.0 * b * b)
    }

    pub fn spectrum(&self) -> SpectralData {
        let mut rows = Vec::with_capacity(self.k);
        for l in 1..=self.k {
            let (lambda1, lambda2sq) = self.symbols(l - 1);
            let alpha = (self.c1 + self.c3) * lambda1 + self.c4;
            let beta = (self.c1 * lambda1 + self.c4) * (self.c3 * lambda1) + self.c2 * self.c2 * lambda2sq;
            let disc = (alpha * alpha - 4.0 * beta).sqrt();
            // α > 0, so the small root is formed without cancellation
            let big2 = 0.5 * (alpha + disc);
            let big1 = if beta == 0.0 { 0.0 } else { beta / big2 };
            rows.push(FrequencyRow { l, lambda1, lambda2sq, alpha, beta, big1, big2 });
        }
        let tol = 1e-12 * self.norm_inf();
        let (mut n_zero, mut n_neg, mut n_pos) = (0, 0, 0);
        for r in &rows {
            for v in [r.big1, r.big2] {
                if v.abs() <= tol {
                    n_zero += 1;
                } else if v < 0.0 {
                    n_neg += 1;
                } else {
                    n_pos += 1;
                }
            }
        }
        SpectralData { rows, n_zero, n_neg, n_pos }
    }

    /// Solves `T q = b + γ q0` with `q ⊥ q0`, where `q0 = (0, 1)`.
    pub fn solve_constrained(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        let k = self.k;
        if b.len() != 2 * k {
            return Err(Error::InvalidInput(format!("right-hand side has length {}, expected {}", b.len(), 2 * k)));
        }
        let bf = dft::forward(&b[..k]);
        let bg = dft::forward(&b[k..]);
        let nf = dft::n_freq(k);
        let mut f = RealCoefficients { cos: vec![0.0; nf], sin: vec![0.0; nf] };
        let mut g = RealCoefficients { cos: vec![0.0; nf], sin: vec![0.0; nf] };
        let scale = self.norm_inf() * self.norm_inf();

        f.cos[0] = bf.cos[0] / self.c4;
        let gamma = -bg.cos[0];
        for freq in 1..nf {
            let (lambda, _) = self.symbols(freq);
            let s = 2.0 * (2.0 * PI * freq as f64 / k as f64).sin();
            let a11 = self.c1 * lambda + self.c4;
            let a22 = self.c3 * lambda;
            if 2 * freq == k {
                if a11 == 0.0 || a22 == 0.0 {
                    return Err(Error::SingularBlock { freq, det: a11 * a22 });
                }
                f.cos[freq] = bf.cos[freq] / a11;
                g.cos[freq] = bg.cos[freq] / a22;
                continue;
            }
            let off = self.c2 * s;
            let det = a11 * a22 - off * off;
            if !(det.abs() > 1e-14 * scale) {
                return Err(Error::SingularBlock { freq, det });
            }
            // (f-cos, g-sin) block with off-diagonal +c2 s
            f.cos[freq] = (a22 * bf.cos[freq] - off * bg.sin[freq]) / det;
            g.sin[freq] = (a11 * bg.sin[freq] - off * bf.cos[freq]) / det;
            // (f-sin, g-cos) block with off-diagonal -c2 s
            f.sin[freq] = (a22 * bf.sin[freq] + off * bg.cos[freq]) / det;
            g.cos[freq] = (a11 * bg.cos[freq] + off * bf.sin[freq]) / det;
        }
        let mut q = dft::inverse(&f, k);
        q.extend(dft::inverse(&g, k));
        Ok((q, gamma))
    }

    /// Solves `T q = b + γ q1` with `q ⊥ q0`, where
    /// `q1 = c0 (R q0 + q^⊥)` and `q^⊥ = (-g, f)` for the current
    /// perturbation `(f, g)`. When `q = 0` this is the `q0` problem with `γ`
    /// divided by `c0 R`.
    pub fn solve_constrained_q1(&self, b: &[f64], r: f64, pert: &[f64], c0: f64) -> Result<(Vec<f64>, f64)> {
        let q1 = kernel_q1(self.k, r, pert, c0);
        let (xb, gb) = self.solve_constrained(b)?;
        let (x1, g1) = self.solve_constrained(&q1)?;
        if g1 == 0.0 {
            return Err(Error::InvalidInput("q1 is orthogonal to the rotation kernel".into()));
        }
        let gamma = -gb / g1;
        let q = xb.iter().zip(&x1).map(|(a, b)| a + gamma * b).collect();
        Ok((q, gamma))
    }
}

/// `q0 = (0,…,0,1,…,1)`.
pub fn kernel_q0(k: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2 * k];
    v[k..].iter_mut().for_each(|x| *x = 1.0);
    v
}

/// `c0 (R q0 + q^⊥)` for the stacked perturbation `pert`.
pub fn kernel_q1(k: usize, r: f64, pert: &[f64], c0: f64) -> Vec<f64> {
    assert_eq!(pert.len(), 2 * k);
    let mut v = vec![0.0; 2 * k];
    for j in 0..k {
        v[j] = -c0 * pert[k + j];
        v[k + j] = c0 * (r + pert[j]);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub l: usize,
    pub lambda1: f64,
    pub lambda2sq: f64,
    pub alpha: f64,
    pub beta: f64,
    /// smaller root
    pub big1: f64,
    pub big2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralData {
    pub rows: Vec<FrequencyRow>,
    pub n_zero: usize,
    pub n_neg: usize,
    pub n_pos: usize,
}

impl SpectralData {
    pub fn inertia(&self) -> (usize, usize, usize) {
        (self.n_zero, self.n_neg, self.n_pos)
    }

    /// All `2K` eigenvalues in ascending order.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().flat_map(|r| [r.big1, r.big2]).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `l,lambda1,lambda2sq,Lambda1,Lambda2` rows.
    pub fn to_csv(&self) -> String {
        crate::io::csv_table(
            &["l", "lambda1", "lambda2sq", "Lambda1", "Lambda2"],
            self.rows.iter().map(|r| vec![r.l as f64, r.lambda1, r.lambda2sq, r.big1, r.big2]),
        )
    }
}

/// Eigenvalues of the dense operator, ascending.
pub fn dense_eigenvalues(op: &ReducedOperator) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(op.dense()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Solves the bordered system `[[T, -v], [q0ᵀ, 0]] [q; γ] = [b; 0]` densely.
pub fn solve_bordered_dense(op: &ReducedOperator, b: &[f64], v: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = 2 * op.k;
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&op.dense());
    let q0 = kernel_q0(op.k);
    for i in 0..n {
        a[(i, n)] = -v[i];
        a[(n, i)] = q0[i];
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from_slice(b);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularBlock { freq: 0, det: 0.0 })?;
    Ok((x.rows(0, n).iter().copied().collect(), x[n]))
}

/// How the Gram matrix of the spike derivatives is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GramMode {
    /// `c0 I`
    Asymptotic,
    /// pairwise planar quadrature, `N = 2`, `K ≤ 16`
    Quadrature,
}

/// `M_{ab} = ∫ ∂U/∂q_a ∂U/∂q_b` with `U = Σ w(x - Q_j)`, in the stacked
/// `(f, g)` ordering.
pub fn gram_matrix(config: &SpikeConfig, profile: &GroundStateProfile, c0: f64, mode: GramMode) -> Result<DMatrix<f64>> {
    let k = config.k;
    match mode {
        GramMode::Asymptotic => Ok(DMatrix::identity(2 * k, 2 * k) * c0),
        GramMode::Quadrature => {
            if profile.dim != 2 || k > 16 {
                return Err(Error::InvalidInput("quadrature Gram matrix needs N = 2 and K <= 16".into()));
            }
            let mut m = DMatrix::zeros(2 * k, 2 * k);
            let frames: Vec<[[f64; 2]; 2]> = (0..k).map(|j| [config.normals[j], config.tangents[j]]).collect();
            for i in 0..k {
                for j in i..k {
                    let d = [config.points[j][0] - config.points[i][0], config.points[j][1] - config.points[i][1]];
                    let g = gradient_overlap(profile, d);
                    for (a, u) in frames[i].iter().enumerate() {
                        for (b, v) in frames[j].iter().enumerate() {
                            let val = (0..2).map(|x| (0..2).map(|y| u[x] * g[x][y] * v[y]).sum::<f64>()).sum::<f64>();
                            m[(a * k + i, b * k + j)] = val;
                            m[(b * k + j, a * k + i)] = val;
                        }
                    }
                }
            }
            Ok(m)
        }
    }
}

/// `∫ ∇w(y) ∇w(y - D)ᵀ dy` over the plane.
fn gradient_overlap(profile: &GroundStateProfile, d: [f64; 2]) -> [[f64; 2]; 2] {
    const PAD: f64 = 20.0;
    let rule = GaussLegendre::new(10);
    let xs = composite_nodes(&rule, d[0].min(0.0) - PAD, d[0].max(0.0) + PAD, 0.5);
    let ys = composite_nodes(&rule, d[1].min(0.0) - PAD, d[1].max(0.0) + PAD, 0.5);
    let grad = |x: f64, y: f64| {
        let r = x.hypot(y);
        if r == 0.0 {
            [0.0, 0.0]
        } else {
            let s = profile.dw_at(r) / r;
            [s * x, s * y]
        }
    };
    let mut out = [[0.0; 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = tensor_sum(&xs, &ys, |x, y| grad(x, y)[a] * grad(x - d[0], y - d[1])[b]);
        }
    }
    out
}
