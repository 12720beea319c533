//! JSON run configurations, one record per command. Unknown keys are errors.

use std::hash::Hasher;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use ringred::continuum::TrigPolynomial;
use ringred::groundstate::PsiMode;
use ringred::potential::PotentialModel;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::failure::Failure;

/// Ground-state parameters shared by every command that needs a profile.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSpec {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub r_max: f64,
    pub tol: f64,
    /// Coefficient of `|x|^{-m}` used for `a0`.
    pub a: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self { dim: 2, p: 3.0, r_max: 40.0, tol: 1e-12, a: 1.0 }
    }
}

impl ProfileSpec {
    /// File stem identifying the profile: an FNV-1a digest of the
    /// parameters that determine it, stable across platforms.
    pub fn cache_key(&self) -> String {
        let mut h = FnvHasher::default();
        h.write_u64(self.dim as u64);
        for v in [self.p, self.r_max, self.tol] {
            h.write_u64(v.to_bits());
        }
        format!("profile-{:016x}", h.finish())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateConfig {
    #[serde(default)]
    pub ground_state: ProfileSpec,
    /// Directory holding cached profiles; defaults to `<out>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

fn default_m() -> f64 {
    4.0
}

fn default_sweep() -> Vec<usize> {
    vec![100, 200, 400, 800, 1600, 3200, 6400]
}

fn default_mode() -> PsiMode {
    PsiMode::Asymptotic
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSweepConfig {
    #[serde(default)]
    pub ground_state: ProfileSpec,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(rename = "K", default = "default_sweep")]
    pub k: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_mode")]
    pub mode: PsiMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub ground_state: ProfileSpec,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_mode")]
    pub mode: PsiMode,
    /// Use this `d̂` instead of balancing; required for `K < 8`.
    #[serde(default)]
    pub dhat: Option<f64>,
}

fn default_continuum_k() -> Vec<usize> {
    vec![32, 64, 128, 256]
}

fn default_dhat() -> f64 {
    20.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumConfig {
    #[serde(rename = "K", default = "default_continuum_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_dhat")]
    pub dhat: f64,
    /// Normal forcing `φ`.
    pub phi: TrigPolynomial,
    /// Tangential forcing `ϕ`; its mean must vanish.
    #[serde(default)]
    pub varphi: TrigPolynomial,
}

fn default_n_alpha() -> usize {
    128
}

fn default_max_iter() -> usize {
    50
}

fn default_fp_tol() -> f64 {
    1e-10
}

fn default_quadrature() -> PsiMode {
    PsiMode::Quadrature
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyScanConfig {
    #[serde(default)]
    pub ground_state: ProfileSpec,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub potential: PotentialModel,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_n_alpha")]
    pub n_alpha: usize,
    #[serde(default = "default_quadrature")]
    pub mode: PsiMode,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_fp_tol")]
    pub tol: f64,
    /// Run outside the contracting regime.
    #[serde(default)]
    pub force: bool,
}

/// Reads a config file, or parses `{}` when none is given.
pub fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", p.display())))?,
        None => "{}".to_string(),
    };
    serde_json::from_str(&text).map_err(|e| Failure::validation(format!("config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_key_separates_parameters() {
        let a = ProfileSpec::default();
        let b = ProfileSpec { p: 3.0 + 1e-15, ..a };
        assert_ne!(a.cache_key(), b.cache_key());
        assert_eq!(a.cache_key(), ProfileSpec::default().cache_key());
        // a only rescales constants, so it shares the profile
        assert_eq!(a.cache_key(), ProfileSpec { a: 2.0, ..a }.cache_key());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<BalanceSweepConfig>(r#"{"m":4,"kk":1}"#).is_err());
        assert!(serde_json::from_str::<GroundStateConfig>(r#"{"ground_state":{"q":1}}"#).is_err());
        let c: BalanceSweepConfig = serde_json::from_str(r#"{"K":[8,16]}"#).unwrap();
        assert_eq!(c.k, vec![8, 16]);
        let d: BalanceSweepConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(d.k.len(), 7);
    }
}
