#![allow(dead_code)]

use std::sync::OnceLock;

use ringred::groundstate::{derive_constants, solve_ground_state, GroundStateProfile, ModelConstants, PsiLaw};

pub struct Fixture {
    pub profile: GroundStateProfile,
    pub constants: ModelConstants,
    pub asymptotic: PsiLaw,
    pub quadrature: PsiLaw,
}

/// Planar cubic ground state with `a = 1`, shared by every test in a binary.
pub fn townes() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let profile = solve_ground_state(2, 3.0, 40.0, 1e-12).expect("ground state");
        let constants = derive_constants(&profile, 1.0).expect("constants");
        let asymptotic = PsiLaw::asymptotic(&profile, &constants);
        let quadrature = PsiLaw::quadrature(&profile, &constants, 2.0, 70.0).expect("psi table");
        Fixture { profile, constants, asymptotic, quadrature }
    })
}

/// Samples of `(φ, ϕ)` at the ring angles, stacked as `(f, g)`.
pub fn sample(k: usize, phi: impl Fn(f64) -> f64, varphi: impl Fn(f64) -> f64) -> Vec<f64> {
    let th: Vec<f64> = (0..k).map(|j| 2.0 * std::f64::consts::PI * j as f64 / k as f64).collect();
    let mut b: Vec<f64> = th.iter().map(|&t| phi(t)).collect();
    b.extend(th.iter().map(|&t| varphi(t)));
    b
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
