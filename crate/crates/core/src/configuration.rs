//! Spike rings `Q_j = (R + f_j) n_j + g_j t_j` and their perturbations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cyclic successor of `j` among `k` indices.
#[inline]
pub fn next(j: usize, k: usize) -> usize {
    if j + 1 == k {
        0
    } else {
        j + 1
    }
}

/// Cyclic predecessor of `j` among `k` indices.
#[inline]
pub fn prev(j: usize, k: usize) -> usize {
    if j == 0 {
        k - 1
    } else {
        j - 1
    }
}

/// Normal and tangential displacements `q = (f, g)` of the spikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationVector {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

fn forward_quotient(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let s = k as f64 / (2.0 * PI);
    (0..k).map(|j| (v[next(j, k)] - v[j]) * s).collect()
}

fn second_quotient(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let s = (k as f64 / (2.0 * PI)).powi(2);
    (0..k).map(|j| (v[next(j, k)] - 2.0 * v[j] + v[prev(j, k)]) * s).collect()
}

fn centered_quotient(v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let s = k as f64 / (2.0 * PI);
    (0..k).map(|j| (v[next(j, k)] - v[prev(j, k)]) * s).collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

impl PerturbationVector {
    pub fn zeros(k: usize) -> Self {
        Self { f: vec![0.0; k], g: vec![0.0; k] }
    }

    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if f.len() != g.len() || f.is_empty() {
            return Err(Error::InvalidInput(format!("f and g lengths {} and {} differ or are zero", f.len(), g.len())));
        }
        Ok(Self { f, g })
    }

    /// From the stacked layout `(f_1..f_K, g_1..g_K)`.
    pub fn from_stacked(q: &[f64]) -> Result<Self> {
        if !q.len().is_multiple_of(2) || q.is_empty() {
            return Err(Error::InvalidInput(format!("stacked vector length {} is not even", q.len())));
        }
        let k = q.len() / 2;
        Ok(Self { f: q[..k].to_vec(), g: q[k..].to_vec() })
    }

    pub fn to_stacked(&self) -> Vec<f64> {
        let mut v = self.f.clone();
        v.extend_from_slice(&self.g);
        v
    }

    pub fn k(&self) -> usize {
        self.f.len()
    }

    /// `(ḟ, ġ)` with factor `K/(2π)`.
    pub fn qdot(&self) -> (Vec<f64>, Vec<f64>) {
        (forward_quotient(&self.f), forward_quotient(&self.g))
    }

    /// `(f̈, g̈)` with factor `K²/(4π²)`.
    pub fn qddot(&self) -> (Vec<f64>, Vec<f64>) {
        (second_quotient(&self.f), second_quotient(&self.g))
    }

    /// `(f̄, ḡ)`, the centred quotients `(v_{j+1} - v_{j-1}) K/(2π)`.
    pub fn qbar(&self) -> (Vec<f64>, Vec<f64>) {
        (centered_quotient(&self.f), centered_quotient(&self.g))
    }

    /// `‖q‖∞ + ‖q̇‖∞ + ‖q̈‖∞`.
    pub fn norm_star(&self) -> f64 {
        let (fd, gd) = self.qdot();
        let (fdd, gdd) = self.qddot();
        sup(&self.f).max(sup(&self.g)) + sup(&fd).max(sup(&gd)) + sup(&fdd).max(sup(&gdd))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { f: self.f.iter().map(|v| v * s).collect(), g: self.g.iter().map(|v| v * s).collect() }
    }
}

/// A ring of `K` spikes in the plane.
#[derive(Debug, Clone)]
pub struct SpikeConfig {
    pub k: usize,
    pub r: f64,
    pub alpha: f64,
    pub q: PerturbationVector,
    pub theta: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub normals: Vec<[f64; 2]>,
    pub tangents: Vec<[f64; 2]>,
    /// `‖q‖* ≤ 1`
    pub in_lambda_k: bool,
}

/// Builds the configuration for any `K ≥ 1`; callers enforcing the ring
/// regime check `K ≥ 8` themselves.
pub fn build_config(k: usize, r: f64, alpha: f64, q: PerturbationVector) -> Result<SpikeConfig> {
    if k == 0 || q.k() != k {
        return Err(Error::InvalidInput(format!("perturbation has {} entries for K = {k}", q.k())));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("R = {r} must be positive")));
    }
    let mut theta = Vec::with_capacity(k);
    let mut points = Vec::with_capacity(k);
    let mut normals = Vec::with_capacity(k);
    let mut tangents = Vec::with_capacity(k);
    for j in 0..k {
        let t = alpha + j as f64 * 2.0 * PI / k as f64;
        let (s, c) = t.sin_cos();
        let n = [c, s];
        let tv = [-s, c];
        let rad = r + q.f[j];
        points.push([rad * n[0] + q.g[j] * tv[0], rad * n[1] + q.g[j] * tv[1]]);
        theta.push(t);
        normals.push(n);
        tangents.push(tv);
    }
    let in_lambda_k = q.norm_star() <= 1.0;
    Ok(SpikeConfig { k, r, alpha, q, theta, points, normals, tangents, in_lambda_k })
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl SpikeConfig {
    /// Unperturbed ring.
    pub fn ring(k: usize, r: f64, alpha: f64) -> Result<Self> {
        build_config(k, r, alpha, PerturbationVector::zeros(k))
    }

    /// Smallest pairwise distance `ρ` (exact, over all pairs).
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.k {
            for j in i + 1..self.k {
                best = best.min(dist(self.points[i], self.points[j]));
            }
        }
        best
    }

    /// Number of spikes with `ℓρ/2 ≤ |Q_j - x| < (ℓ+1)ρ/2`.
    pub fn annulus_count(&self, x: [f64; 2], ell: usize) -> Result<usize> {
        let rho = self.min_separation();
        if !(rho > 0.0) {
            return Err(Error::ZeroSeparation);
        }
        let lo = ell as f64 * rho / 2.0;
        let hi = (ell as f64 + 1.0) * rho / 2.0;
        Ok(self
            .points
            .iter()
            .filter(|&&p| {
                let d = dist(p, x);
                d >= lo && d < hi
            })
            .count())
    }

    /// `Σ_{j≠j0} e^{-η|Q_j - Q_j0|} / e^{-ηρ}`.
    pub fn exp_sum_ratio(&self, j0: usize, eta: f64) -> Result<f64> {
        const RHO0: f64 = 5.0;
        if !(eta > 0.0 && eta < 1.0) || j0 >= self.k {
            return Err(Error::InvalidInput(format!("need 0 < eta < 1 and j0 < K, got eta = {eta}, j0 = {j0}")));
        }
        let rho = self.min_separation();
        if rho < RHO0 {
            return Err(Error::SeparationTooSmall { rho, min: RHO0 });
        }
        let q0 = self.points[j0];
        let s: f64 = (0..self.k)
            .filter(|&j| j != j0)
            .map(|j| (-eta * (dist(self.points[j], q0) - rho)).exp())
            .sum();
        Ok(s)
    }

    /// Stacked rotation generator `R q0 + q^⊥` with `q^⊥ = (-g, f)`, the
    /// derivative of the configuration with respect to `α` in `(f, g)`
    /// coordinates.
    pub fn rotation_generator(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.q.g.iter().map(|g| -g).collect();
        v.extend(self.q.f.iter().map(|f| self.r + f));
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "K": self.k, "R": self.r, "alpha": self.alpha, "f": self.q.f, "g": self.q.g })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(rename = "K")]
            k: usize,
            #[serde(rename = "R")]
            r: f64,
            alpha: f64,
            f: Vec<f64>,
            g: Vec<f64>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        build_config(raw.k, raw.r, raw.alpha, PerturbationVector::new(raw.f, raw.g)?)
    }

    /// `j,theta,x,y` rows.
    pub fn points_csv(&self) -> String {
        crate::io::csv_table(
            &["j", "theta", "x", "y"],
            (0..self.k).map(|j| vec![(j + 1) as f64, self.theta[j], self.points[j][0], self.points[j][1]]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_ring_geometry() {
        let c = SpikeConfig::ring(100, 50.0, 0.3).unwrap();
        let rho = c.min_separation();
        assert!((rho - 100.0 * (PI / 100.0).sin()).abs() < 1e-12);
        for j in 0..c.k {
            let n = c.normals[j];
            let t = c.tangents[j];
            assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-15);
            assert!(((c.points[j][0].hypot(c.points[j][1])) - 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn difference_quotients_on_constant_vanish() {
        let q = PerturbationVector::new(vec![0.2; 12], vec![-0.1; 12]).unwrap();
        let (fd, gd) = q.qdot();
        let (fdd, _) = q.qddot();
        assert!(fd.iter().chain(&gd).chain(&fdd).all(|v| v.abs() < 1e-15));
        assert!((q.norm_star() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn periodic_in_alpha() {
        let k = 16;
        let q = PerturbationVector::new((0..k).map(|j| 0.01 * j as f64).collect(), vec![0.02; k]).unwrap();
        let a = build_config(k, 30.0, 0.7, q.clone()).unwrap();
        let b = build_config(k, 30.0, 0.7 + 2.0 * PI, q).unwrap();
        for j in 0..k {
            assert!(dist(a.points[j], b.points[j]) < 1e-12);
        }
    }

    #[test]
    fn annulus_basic_counts() {
        let c = SpikeConfig::ring(32, 40.0, 0.0).unwrap();
        assert_eq!(c.annulus_count(c.points[0], 0).unwrap(), 1);
        let rho = c.min_separation();
        let top = (2.0 * (40.0 + 1.0) / rho).ceil() as usize;
        let total: usize = (0..=top).map(|l| c.annulus_count([0.0, 0.0], l).unwrap()).sum();
        assert_eq!(total, 32);
    }

    #[test]
    fn coincident_points_have_zero_separation() {
        let mut g = vec![0.0; 8];
        // move spike 2 onto spike 1
        let r = 10.0;
        let step = 2.0 * PI / 8.0;
        let mut f = vec![0.0; 8];
        f[1] = r * step.cos() - r;
        g[1] = -r * step.sin();
        let c = build_config(8, r, 0.0, PerturbationVector::new(f, g).unwrap()).unwrap();
        assert!(!c.in_lambda_k);
        assert!(c.min_separation() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let c = SpikeConfig::ring(8, 12.0, 0.25).unwrap();
        let back = SpikeConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back.points, c.points);
    }
}
