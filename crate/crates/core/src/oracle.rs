//! Brute-force references: a finite-difference eigensolver, the square-well
//! bound-state condition, and the closed-form Jost function of a well.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

/// Filtered eigenvalues of the truncated finite-difference operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSpectrumResult {
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
    pub eigenvalues: Vec<Complex64>,
    /// Candidates inside the filter region that moved when the box grew,
    /// i.e. discretized continuum rather than bound states.
    pub discarded: Vec<Complex64>,
}

pub const FD_DEFAULT_LENGTH: f64 = 20.0;
pub const FD_DEFAULT_N: usize = 4000;

// Relative motion allowed for an eigenvalue when the box grows to 1.5·L.
const PERSISTENCE_TOL: f64 = 1e-4;

/// Eigenvalues of −D² + V on [0, L] with Dirichlet ends and h = L/n,
/// keeping those with |λ| ≤ (1.1·∫|V|)² at distance > 1e−3 from [0, ∞)
/// that persist when L is enlarged by half at fixed h.
pub fn fd_spectrum(v: &PotentialSpec, length: f64, n: usize) -> Result<FdSpectrumResult> {
    v.validate()?;
    if !(length.is_finite() && length > 0.0) || n < 1000 {
        return Err(Error::InvalidArgument(format!("fd_spectrum needs L > 0 and n >= 1000, got L={length} n={n}")));
    }
    let h = length / n as f64;
    let radius = 1.1 * v.l1();
    let keep = |z: &Complex64| {
        let dist = if z.re >= 0.0 { z.im.abs() } else { z.norm() };
        z.norm() <= radius * radius && dist > 1e-3
    };
    let base: Vec<Complex64> = fd_eigenvalues(v, h, n)?.into_iter().filter(keep).collect();
    if base.is_empty() {
        return Ok(FdSpectrumResult { length, n, eigenvalues: Vec::new(), discarded: Vec::new() });
    }
    let n_big = n + n / 2;
    let big: Vec<Complex64> = fd_eigenvalues(v, h, n_big)?.into_iter().filter(keep).collect();
    let (mut eigenvalues, mut discarded): (Vec<Complex64>, Vec<Complex64>) =
        base.into_iter().partition(|z| big.iter().any(|w| (w - z).norm() <= PERSISTENCE_TOL * z.norm()));
    let order = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
    eigenvalues.sort_by(order);
    discarded.sort_by(order);
    Ok(FdSpectrumResult { length, n, eigenvalues, discarded })
}

/// All n − 1 eigenvalues of the difference operator with step h.
pub fn fd_eigenvalues(v: &PotentialSpec, h: f64, n: usize) -> Result<Vec<Complex64>> {
    let inv_h2 = 1.0 / (h * h);
    // Two-point Gauss average of V over each cell, so jumps at nodes
    // contribute their mean.
    let g = 0.5 / 3f64.sqrt();
    let diag: Vec<Complex64> = (1..n)
        .map(|i| {
            let x = i as f64 * h;
            0.5 * (v.value(x - g * h) + v.value(x + g * h)) + 2.0 * inv_h2
        })
        .collect();
    let off = vec![Complex64::from(-inv_h2); n - 2];
    symmetric_tridiagonal_eigenvalues(diag, off)
}

/// Eigenvalues of a complex symmetric tridiagonal matrix by implicit QL
/// with Wilkinson-type shifts. `off[i]` couples rows i and i + 1.
pub fn symmetric_tridiagonal_eigenvalues(mut d: Vec<Complex64>, off: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    if off.len() + 1 != n {
        return Err(Error::InvalidArgument("off-diagonal must have n - 1 entries".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut e = off;
    e.push(zero);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].norm() + d[m + 1].norm();
                if e[m].norm() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::LinearAlgebra(format!("QL failed to converge at row {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r = (g * g + 1.0).sqrt();
            let denom = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c, mut p) = (Complex64::from(1.0), Complex64::from(1.0), zero);
            let mut early = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                let r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r.norm() == 0.0 {
                    d[i + 1] -= p;
                    e[m] = zero;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let r2 = (d[i] - g) * s + 2.0 * c * b;
                p = s * r2;
                d[i + 1] = g + p;
                g = c * r2 - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = zero;
        }
    }
    if d.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::LinearAlgebra("non-finite eigenvalue".into()));
    }
    Ok(d)
}

/// Decay rates κ > 0 of the Dirichlet bound states of V = −v0 on [0, width],
/// ascending. They solve √(v0 − κ²)·cot(width·√(v0 − κ²)) = −κ.
pub fn well_bound_states(v0: f64, width: f64) -> Vec<f64> {
    if !(v0 > 0.0 && width > 0.0) {
        return Vec::new();
    }
    use std::f64::consts::PI;
    // In s = width·√(v0 − κ²) the condition reads g(s) = s·cot s + √(S² − s²) = 0,
    // with one root per cot-branch (mπ, (m+1)π) on which g changes sign.
    let big_s = width * v0.sqrt();
    let g = |s: f64| s / s.tan() + (big_s * big_s - s * s).max(0.0).sqrt();
    let mut out = Vec::new();
    let mut m = 0.0;
    while m * PI < big_s {
        let lo = m * PI;
        let hi = ((m + 1.0) * PI).min(big_s);
        // g → +∞ (or 1 + S at s = 0) at the left end of each branch, and
        // → −∞ at a pole on the right; otherwise check g(S).
        let right_negative = hi < big_s || g(hi) < 0.0;
        if right_negative {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let gm = if mid == lo { f64::INFINITY } else { g(mid) };
                if gm > 0.0 {
                    a = mid
                } else {
                    b = mid
                }
                if b - a <= 1e-12 * big_s.max(1.0) * 1e-3 {
                    break;
                }
            }
            let s = 0.5 * (a + b);
            let kappa = (big_s * big_s - s * s).max(0.0).sqrt() / width;
            if kappa > 0.0 {
                out.push(kappa);
            }
        }
        m += 1.0;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// a(k) for V = value on [0, width]: e^{ik·w}(cos κw − (ik/κ) sin κw), κ² = k² − value.
pub fn well_jost_function(value: Complex64, width: f64, k: Complex64) -> Complex64 {
    let i = Complex64::i();
    let kappa = (k * k - value).sqrt();
    let kw = kappa * width;
    // (sin κw)/κ is entire in κ², so treat κ → 0 by its limit.
    let sinc = if kappa.norm() < 1e-8 { Complex64::from(width) } else { kw.sin() / kappa };
    (i * k * width).exp() * (kw.cos() - i * k * sinc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ql_matches_schur_on_random_tridiagonals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 17, 40] {
            let d: Vec<Complex64> =
                (0..n).map(|_| c(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0))).collect();
            let e: Vec<Complex64> =
                (0..n.max(1) - 1).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-0.5..0.5))).collect();
            let mut dense = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                dense[(i, i)] = d[i];
                if i + 1 < n {
                    dense[(i, i + 1)] = e[i];
                    dense[(i + 1, i)] = e[i];
                }
            }
            let mut reference: Vec<Complex64> = dense.schur().eigenvalues().expect("schur").iter().copied().collect();
            let mut ours = symmetric_tridiagonal_eigenvalues(d, e).unwrap();
            let key = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
            reference.sort_by(key);
            ours.sort_by(key);
            for (a, b) in ours.iter().zip(&reference) {
                assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()), "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn well_bound_state_examples() {
        let k = well_bound_states(4.0, 1.0);
        assert_eq!(k.len(), 1);
        // Frozen from an independent mpmath root of √(4−κ²)cot√(4−κ²) + κ.
        assert!((k[0] - 0.638_045_048_285_237_7).abs() < 1e-11, "{}", k[0]);
        assert!(well_bound_states(0.1, 1.0).is_empty());
        // S = 10: branches up to 3π contain roots, and S·cot S > 0 at S = 10
        // (10 ∈ (3π, 3.5π)), so three states.
        assert_eq!(well_bound_states(100.0, 1.0).len(), 3);
    }

    #[test]
    fn bound_states_solve_the_condition() {
        for (v0, w) in [(4.0, 1.0), (30.0, 1.0), (12.0, 2.5), (100.0, 1.0)] {
            for kappa in well_bound_states(v0, w) {
                let q: f64 = (v0 - kappa * kappa).sqrt();
                let residual = q / (w * q).tan() + kappa;
                assert!(residual.abs() < 1e-8 * v0, "v0={v0} κ={kappa}: {residual}");
                // The Jost function vanishes at k = iκ.
                assert!(well_jost_function(c(-v0, 0.0), w, c(0.0, kappa)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn well_jost_closed_form_examples() {
        // e^{i}(cos√3 − (i/√3)sin√3) for V = −2 on [0,1], k = 1.
        let a = well_jost_function(c(-2.0, 0.0), 1.0, c(1.0, 0.0));
        assert!((a - c(0.392_771_670_847_723_3, -0.443_000_394_242_351_03)).norm() < 1e-14);
        // κ = 0 exactly: k² = V.
        let a = well_jost_function(c(1.0, 0.0), 1.0, c(1.0, 0.0));
        assert!((a - (Complex64::i()).exp() * c(1.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn fd_spectrum_finds_the_single_bound_state() {
        let v = PotentialSpec::well(c(-4.0, 0.0), 1.0).unwrap();
        let fd = fd_spectrum(&v, FD_DEFAULT_LENGTH, FD_DEFAULT_N).unwrap();
        assert_eq!(fd.eigenvalues.len(), 1);
        let kappa = well_bound_states(4.0, 1.0)[0];
        let exact = -kappa * kappa;
        assert!(((fd.eigenvalues[0].re - exact) / exact).abs() < 1e-4);
        assert!(fd.eigenvalues[0].im.abs() < 1e-10);
        assert!(fd_spectrum(&PotentialSpec::zero(), 20.0, 1000).unwrap().eigenvalues.is_empty());
    }

    #[test]
    fn fd_error_is_second_order() {
        let v = PotentialSpec::well(c(-4.0, 0.0), 1.0).unwrap();
        let kappa = well_bound_states(4.0, 1.0)[0];
        let exact = c(-kappa * kappa, 0.0);
        let err = |n: usize| {
            let fd = fd_spectrum(&v, 20.0, n).unwrap();
            (fd.eigenvalues[0] - exact).norm()
        };
        let ratio = err(2000) / err(4000);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn box_modes_of_complex_wells_are_discarded() {
        let v = PotentialSpec::well(-Complex64::from_polar(4.0, std::f64::consts::FRAC_PI_4), 1.0).unwrap();
        let fd = fd_spectrum(&v, 20.0, 4000).unwrap();
        for z in &fd.eigenvalues {
            let big = fd_eigenvalues(&v, 20.0 / 4000.0, 6000).unwrap();
            let moved = big.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(moved < 1e-6 * z.norm());
        }
    }
}
