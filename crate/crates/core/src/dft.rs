//! Real Fourier analysis of cyclic sequences in cosine/sine form.
//!
//! A sequence `v_0..v_{K-1}` is written as
//! `v_j = c_0 + Σ_{k=1}^{⌊K/2⌋} (c_k cos(2πkj/K) + s_k sin(2πkj/K))`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Length at and above which the FFT path is used.
pub const FAST_THRESHOLD: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct RealCoefficients {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

/// Number of non-negative frequencies `⌊K/2⌋ + 1`.
pub fn n_freq(k: usize) -> usize {
    k / 2 + 1
}

fn scale(k: usize, freq: usize) -> f64 {
    if freq == 0 || 2 * freq == k {
        1.0 / k as f64
    } else {
        2.0 / k as f64
    }
}

pub fn forward(v: &[f64]) -> RealCoefficients {
    if v.len() >= FAST_THRESHOLD {
        forward_fast(v)
    } else {
        forward_direct(v)
    }
}

pub fn inverse(c: &RealCoefficients, k: usize) -> Vec<f64> {
    if k >= FAST_THRESHOLD {
        inverse_fast(c, k)
    } else {
        inverse_direct(c, k)
    }
}

fn trig_table(k: usize) -> (Vec<f64>, Vec<f64>) {
    (0..k).map(|i| (2.0 * PI * i as f64 / k as f64).sin_cos()).map(|(s, c)| (c, s)).unzip()
}

pub fn forward_direct(v: &[f64]) -> RealCoefficients {
    let k = v.len();
    let (ct, st) = trig_table(k);
    let nf = n_freq(k);
    let mut cos = vec![0.0; nf];
    let mut sin = vec![0.0; nf];
    for f in 0..nf {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, vj) in v.iter().enumerate() {
            let idx = (f * j) % k;
            a += vj * ct[idx];
            b += vj * st[idx];
        }
        let sc = scale(k, f);
        cos[f] = sc * a;
        sin[f] = if f == 0 || 2 * f == k { 0.0 } else { sc * b };
    }
    RealCoefficients { cos, sin }
}

pub fn inverse_direct(c: &RealCoefficients, k: usize) -> Vec<f64> {
    let (ct, st) = trig_table(k);
    (0..k)
        .map(|j| {
            let mut acc = 0.0;
            for f in 0..c.cos.len() {
                let idx = (f * j) % k;
                acc += c.cos[f] * ct[idx] + c.sin[f] * st[idx];
            }
            acc
        })
        .collect()
}

pub fn forward_fast(v: &[f64]) -> RealCoefficients {
    let k = v.len();
    let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(k).process(&mut buf);
    let nf = n_freq(k);
    let mut cos = vec![0.0; nf];
    let mut sin = vec![0.0; nf];
    for f in 0..nf {
        let sc = scale(k, f);
        cos[f] = sc * buf[f].re;
        sin[f] = if f == 0 || 2 * f == k { 0.0 } else { -sc * buf[f].im };
    }
    RealCoefficients { cos, sin }
}

pub fn inverse_fast(c: &RealCoefficients, k: usize) -> Vec<f64> {
    let mut buf = vec![Complex::new(0.0, 0.0); k];
    for f in 0..c.cos.len() {
        if f == 0 || 2 * f == k {
            buf[f] = Complex::new(c.cos[f], 0.0);
        } else {
            let z = Complex::new(0.5 * c.cos[f], -0.5 * c.sin[f]);
            buf[f] = z;
            buf[k - f] = z.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(k).process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}
