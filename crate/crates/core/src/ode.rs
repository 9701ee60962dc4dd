//! Adaptive Dormand–Prince 5(4) integration for small complex systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

pub type State<const N: usize> = [Complex64; N];

/// Step-size controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-10, abs: 1e-12, max_steps: 2_000_000 }
    }
}

/// Integration counters.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates y' = f(x, y) from `x0` to `x1` (either direction). The state
/// is reported at every point of `stops` lying strictly between them, in
/// order of traversal; steps are shortened to land on each stop exactly.
#[allow(clippy::too_many_arguments)]
pub fn integrate<const N: usize, F, O>(
    f: F,
    x0: f64,
    x1: f64,
    y0: State<N>,
    stops: &[f64],
    tol: Tolerance,
    h_init: f64,
    mut observe: O,
    stats: &mut Stats,
) -> Result<State<N>>
where
    F: Fn(f64, &State<N>) -> State<N>,
    O: FnMut(f64, &State<N>),
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    if span == 0.0 {
        return Ok(y0);
    }
    let mut y = y0;
    let mut x = x0;
    let mut h = h_init.abs().min(span).max(span * 1e-12);
    let mut k1 = f(x, &y);
    let mut stop_iter = stops.iter().copied().filter(|&s| (s - x0) * dir > 0.0 && (x1 - s) * dir > 0.0);
    let mut next_stop = stop_iter.next();
    loop {
        let target = next_stop.unwrap_or(x1);
        let remaining = (target - x) * dir;
        let mut land = false;
        if h >= remaining {
            h = remaining;
            land = true;
        }
        let hs = h * dir;
        let mut k = [[Complex64::new(0.0, 0.0); N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for n in 0..N {
                        ys[n] += kj[n] * (hs * a);
                    }
                }
            }
            k[s] = f(x + C[s] * hs, &ys);
        }
        // The seventh stage is evaluated at the new fifth-order solution.
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[6][j];
            if b != 0.0 {
                for n in 0..N {
                    y_new[n] += kj[n] * (hs * b);
                }
            }
        }
        let mut err_sq = 0.0;
        for n in 0..N {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[n] * (hs * E[j]);
                }
            }
            let scale = tol.abs + tol.rel * y[n].norm().max(y_new[n].norm());
            err_sq += (e.norm() / scale).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integrator { x, reason: "non-finite state".into() });
        }
        if err <= 1.0 {
            x = if land { target } else { x + hs };
            y = y_new;
            k1 = k[6];
            stats.accepted += 1;
            if land {
                match next_stop {
                    Some(s) => {
                        observe(s, &y);
                        next_stop = stop_iter.next();
                    }
                    None => return Ok(y),
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // A landing step may have been artificially short.
            h = if land { h.max(h_init.abs()).min(span) * factor.min(2.0) } else { h * factor };
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < 1e-14 * x.abs().max(1.0) {
            return Err(Error::Integrator { x, reason: "step size underflow".into() });
        }
        if stats.accepted + stats.rejected > tol.max_steps {
            return Err(Error::Integrator { x, reason: "step budget exhausted".into() });
        }
    }
}
