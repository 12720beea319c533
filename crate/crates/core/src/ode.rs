//! Dormand-Prince 5(4) integrator for small autonomous-in-form systems.

/// Outcome of an integration that may be stopped early by an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Reached,
    Event,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One DP5 step; returns the new state and the embedded error estimate.
pub fn dp_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> ([f64; N], [f64; N])
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + C2 * h, &axpy(y, &[(A21, &k1)], h));
    let k3 = f(t + C3 * h, &axpy(y, &[(A31, &k1), (A32, &k2)], h));
    let k4 = f(t + C4 * h, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(
        t + C5 * h,
        &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let k6 = f(
        t + h,
        &axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
    );
    let y_new = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    let k7 = f(t + h, &y_new);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, err)
}

/// Integrates from `t0` to `t1` (either direction) with step control.
/// `event` is checked after every accepted step; returning `true` stops the
/// integration and reports `Stop::Event` with the state at that step.
pub fn integrate<const N: usize, F, E>(
    f: &F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerance,
    mut event: E,
) -> (f64, [f64; N], Stop)
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    E: FnMut(f64, &[f64; N]) -> bool,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut h = (tol.max_step).min((t1 - t0).abs()).max(1e-12);
    let mut guard = 0usize;
    while (t1 - t) * dir > 0.0 {
        guard += 1;
        if guard > 50_000_000 {
            break;
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let (y_new, err) = dp_step(f, t, &y, dir * step);
        let mut e = 0.0f64;
        for i in 0..N {
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            e = e.max((err[i] / sc).abs());
        }
        if e <= 1.0 || step <= 1e-14 {
            t = if last { t1 } else { t + dir * step };
            y = y_new;
            if event(t, &y) {
                return (t, y, Stop::Event);
            }
            let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            h = (step * fac).min(tol.max_step);
        } else {
            h = step * (0.9 * e.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    (t, y, Stop::Reached)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let tol = Tolerance { rtol: 1e-12, atol: 1e-14, max_step: 0.5 };
        let (t, y, stop) = integrate(&f, 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, tol, |_, _| false);
        assert_eq!(stop, Stop::Reached);
        assert!((t - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let tol = Tolerance { rtol: 1e-12, atol: 1e-300, max_step: 0.25 };
        let (_, y, _) = integrate(&f, 1.0, [1.0], 0.0, tol, |_, _| false);
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-11);
    }
}
