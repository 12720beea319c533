//! Ring balance: the spacing `d` at which the potential's outward push
//! `a0 m R^{-m-1}` equals the neighbour attraction `2 sin(π/K) Ψ(d)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::{ModelConstants, PsiLaw, PsiMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    #[serde(rename = "K")]
    pub k: usize,
    pub m: f64,
    pub d: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub dhat: f64,
    /// `d^{m+1} Ψ(d) - a0 m (2 sin π/K)^m`
    pub residual: f64,
    /// `residual` divided by `a0 m (2 sin π/K)^m`
    pub residual_rel: f64,
    pub mode: PsiMode,
}

/// `m ln K + (m - (N-3)/2) ln(m ln K)`.
pub fn asymptotic_d(k: usize, m: f64, dim: usize) -> f64 {
    let lk = (k as f64).ln();
    m * lk + (m - 0.5 * (dim as f64 - 3.0)) * (m * lk).ln()
}

/// Logarithm of the right-hand side `a0 m (2 sin π/K)^m`.
fn log_target(k: usize, m: f64, constants: &ModelConstants) -> f64 {
    (constants.a0 * m).ln() + m * (2.0 * (PI / k as f64).sin()).ln()
}

/// `g(d) = (m+1) ln d + ln Ψ(d) - ln(a0 m (2 sin π/K)^m)` and `g'(d)`.
pub fn balance_function(d: f64, k: usize, m: f64, constants: &ModelConstants, law: &PsiLaw) -> Result<(f64, f64)> {
    let (lp, dlp) = law.log_psi(d)?;
    Ok(((m + 1.0) * d.ln() + lp - log_target(k, m, constants), (m + 1.0) / d + dlp))
}

/// Search interval `[ln K, 10 m ln K]`, clipped to the tabulated range in
/// quadrature mode.
pub fn search_interval(k: usize, m: f64, law: &PsiLaw) -> (f64, f64) {
    let lk = (k as f64).ln();
    let (mut lo, mut hi) = (lk, 10.0 * m * lk);
    if let Some((a, b)) = law.tabulated_range() {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    (lo, hi)
}

/// Solves the balance equation by Newton's method safeguarded with bisection.
pub fn solve_balance(k: usize, m: f64, constants: &ModelConstants, law: &PsiLaw) -> Result<BalanceResult> {
    if k < 8 {
        return Err(Error::InvalidInput(format!("K = {k} must be at least 8")));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidInput(format!("m = {m} must be positive")));
    }
    let (mut lo, mut hi) = search_interval(k, m, law);
    if !(hi > lo) {
        return Err(Error::NoBracket { lo, hi });
    }
    let g_lo = balance_function(lo, k, m, constants, law)?.0;
    let g_hi = balance_function(hi, k, m, constants, law)?.0;
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    let increasing = g_hi > g_lo;
    let mut d = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, dg) = balance_function(d, k, m, constants, law)?;
        if g == 0.0 {
            break;
        }
        if (g > 0.0) == increasing {
            hi = d;
        } else {
            lo = d;
        }
        let newton = d - g / dg;
        let next = if newton > lo && newton < hi && dg != 0.0 { newton } else { 0.5 * (lo + hi) };
        if (next - d).abs() <= 4.0 * f64::EPSILON * d || hi - lo <= 4.0 * f64::EPSILON * d {
            d = next;
            break;
        }
        d = next;
    }
    let target = log_target(k, m, constants);
    let g = balance_function(d, k, m, constants, law)?.0;
    let residual_rel = g.exp_m1();
    Ok(BalanceResult {
        k,
        m,
        d,
        r: d / (2.0 * (PI / k as f64).sin()),
        dhat: law.dhat(d)?,
        residual: residual_rel * target.exp(),
        residual_rel,
        mode: law.mode,
    })
}

/// CSV table `K,d,R,dhat,residual,asymptotic_d` for a sweep.
pub fn sweep_csv(rows: &[BalanceResult], dim: usize) -> String {
    crate::io::csv_table(
        &["K", "d", "R", "dhat", "residual", "asymptotic_d"],
        rows.iter()
            .map(|b| vec![b.k as f64, b.d, b.r, b.dhat, b.residual, asymptotic_d(b.k, b.m, dim)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{derive_constants, solve_ground_state};

    fn setup() -> (ModelConstants, PsiLaw) {
        let prof = solve_ground_state(2, 3.0, 40.0, 1e-12).unwrap();
        let c = derive_constants(&prof, 1.0).unwrap();
        let law = PsiLaw::asymptotic(&prof, &c);
        (c, law)
    }

    #[test]
    fn asymptotic_formula() {
        let k = 5f64.exp().round() as usize;
        let lk = (k as f64).ln();
        assert_eq!(asymptotic_d(k, 2.0, 2), 2.0 * lk + 2.5 * (2.0 * lk).ln());
        assert!(asymptotic_d(400, 3.0, 2) > asymptotic_d(200, 3.0, 2));
    }

    #[test]
    fn balance_identities() {
        let (c, law) = setup();
        for k in [8, 100, 1000] {
            let b = solve_balance(k, 4.0, &c, &law).unwrap();
            assert!((b.r * 2.0 * (PI / k as f64).sin() - b.d).abs() <= 1e-12 * b.d);
            assert!(b.residual_rel.abs() <= 1e-10);
            assert!(b.dhat - b.d > 0.0 && b.dhat - b.d < 2.0);
        }
    }

    #[test]
    fn rejects_small_k() {
        let (c, law) = setup();
        assert!(solve_balance(4, 4.0, &c, &law).is_err());
    }
}
