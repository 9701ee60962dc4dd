//! Integral kernel of the Dirichlet free resolvent (−d²/dx² − k²)⁻¹ on the
//! half-line, for Im k ≥ 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A wavenumber k with Im k ≥ 0 and k ≠ 0. Real k is the boundary value
/// from the upper half-plane, i.e. the (+i0) side of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct Wavenumber(Complex64);

impl Wavenumber {
    pub fn new(k: Complex64) -> Result<Self> {
        if !(k.re.is_finite() && k.im.is_finite()) {
            return Err(Error::InvalidWavenumber { re: k.re, im: k.im, reason: "non-finite" });
        }
        if k.im < 0.0 {
            return Err(Error::InvalidWavenumber { re: k.re, im: k.im, reason: "Im k < 0" });
        }
        if k.re == 0.0 && k.im == 0.0 {
            return Err(Error::InvalidWavenumber { re: k.re, im: k.im, reason: "k = 0" });
        }
        Ok(Self(k))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    /// z = k².
    pub fn energy(self) -> Complex64 {
        self.0 * self.0
    }
}

impl TryFrom<Complex64> for Wavenumber {
    type Error = Error;
    fn try_from(k: Complex64) -> Result<Self> {
        Self::new(k)
    }
}

impl From<Wavenumber> for Complex64 {
    fn from(k: Wavenumber) -> Self {
        k.0
    }
}

/// G(x, y) = sin(k·min(x,y))·e^{ik·max(x,y)} / k.
pub fn kernel(k: Wavenumber, x: f64, y: f64) -> Result<Complex64> {
    if x < 0.0 || y < 0.0 {
        return Err(Error::NegativePosition(x.min(y)));
    }
    Ok(kernel_unchecked(k.0, x, y))
}

/// Kernel without argument checks; callers guarantee x, y ≥ 0 and k ≠ 0.
#[inline]
pub fn kernel_unchecked(k: Complex64, x: f64, y: f64) -> Complex64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let i = Complex64::i();
    let ka = k * lo;
    if ka.norm() < 1.0 {
        // sin(k·lo) cannot overflow here; avoids cancellation in the
        // exponential form.
        ka.sin() * (i * k * hi).exp() / k
    } else {
        // sin(a)e^{ib} = (e^{i(b+a)} − e^{i(b−a)}) / 2i; both exponents have
        // nonnegative imaginary part so neither factor overflows.
        ((i * k * (hi + lo)).exp() - (i * k * (hi - lo)).exp()) / (2.0 * i * k)
    }
}

/// e^{w} − 1 without cancellation for small |w|.
#[inline]
pub fn exp_m1(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        // Taylor series through w⁵ is exact to ~1e-19 here.
        let mut term = w;
        let mut sum = w;
        for n in 2..=6 {
            term *= w / n as f64;
            sum += term;
        }
        sum
    } else {
        w.exp() - 1.0
    }
}

/// (e^{2ikd} − 1) / (2ik), continuous through k → 0 where it tends to d.
#[inline]
pub fn phi(k: Complex64, d: f64) -> Complex64 {
    let w = 2.0 * Complex64::i() * k;
    if (w * d).norm() < 1e-3 {
        exp_m1(w * d) / (w * d) * d
    } else {
        exp_m1(w * d) / w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use approx::assert_relative_eq;

    fn wn(re: f64, im: f64) -> Wavenumber {
        Wavenumber::from_parts(re, im).unwrap()
    }

    /// (1/π)∫_{−∞}^{∞} sin(ξx)sin(ξy)/(ξ² − k²) dξ by direct quadrature on
    /// [0, Ξ] plus a two-term integration-by-parts tail.
    fn sine_transform_oracle(k: Complex64, x: f64, y: f64) -> Complex64 {
        let xi_max = 2000.0;
        let k2 = k * k;
        let f = |xi: f64| Complex64::from((xi * x).sin() * (xi * y).sin()) / (xi * xi - k2);
        let mut total = Complex64::new(0.0, 0.0);
        let pieces = 4000;
        for j in 0..pieces {
            let a = xi_max * j as f64 / pieces as f64;
            let b = xi_max * (j + 1) as f64 / pieces as f64;
            total += quad::adaptive(f, a, b, 1e-16, 1e-13).unwrap().value;
        }
        // Tail: sin(ξx)sin(ξy) = [cos(ξ|x−y|) − cos(ξ(x+y))]/2 with g(ξ) = 1/(ξ² − k²).
        let g = 1.0 / (xi_max * xi_max - k2);
        let dg = -2.0 * xi_max / ((xi_max * xi_max - k2) * (xi_max * xi_max - k2));
        let cos_tail = |a: f64| -> Complex64 {
            if a == 0.0 {
                // ∫_Ξ^∞ dξ/(ξ² − k²) = log((Ξ + k)/(Ξ − k)) / 2k
                ((xi_max + k) / (xi_max - k)).ln() / (2.0 * k)
            } else {
                -(a * xi_max).sin() * g / a - (a * xi_max).cos() * dg / (a * a)
            }
        };
        total += (cos_tail((x - y).abs()) - cos_tail(x + y)) * 0.5;
        // Even integrand: double the half-line integral.
        total * 2.0 / std::f64::consts::PI
    }

    #[test]
    fn wavenumber_validation() {
        assert!(Wavenumber::from_parts(0.0, 0.0).is_err());
        assert!(Wavenumber::from_parts(1.0, -1e-9).is_err());
        assert!(Wavenumber::from_parts(-2.0, 0.0).is_ok());
    }

    #[test]
    fn kernel_examples() {
        // k = i, x = y = 1 → sinh(1)/e
        let g = kernel(wn(0.0, 1.0), 1.0, 1.0).unwrap();
        assert_relative_eq!(g.re, 0.432_332_358_381_693_65, max_relative = 1e-14);
        assert!(g.im.abs() < 1e-15);
        let oracle = sine_transform_oracle(Complex64::i(), 1.0, 1.0);
        assert!((oracle - g).norm() < 1e-6 * g.norm(), "{oracle} vs {g}");

        assert_eq!(kernel(wn(1.3, 0.4), 0.0, 2.0).unwrap(), Complex64::new(0.0, 0.0));

        // Real k = 1: the residue at ξ = k + i0 gives (i/2k)(e^{ik|x−y|} − e^{ik(x+y)}).
        let g = kernel(wn(1.0, 0.0), 1.0, 2.0).unwrap();
        let i = Complex64::i();
        let residue = i / 2.0 * ((i * 1.0).exp() - (i * 3.0).exp());
        assert!((g - residue).norm() < 1e-15);
        let expected = Complex64::from_polar(1f64.sin(), 2.0);
        assert!((g - expected).norm() < 1e-15);
    }

    #[test]
    fn kernel_rejects_negative_positions() {
        assert!(kernel(wn(1.0, 0.0), -1.0, 0.5).is_err());
    }

    #[test]
    fn closed_form_matches_sine_transform_for_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // The oracle is slow; a dozen points exercise the same code paths as
        // the full sweep.
        for _ in 0..12 {
            let k = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(0.2..3.0));
            let (x, y) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
            let g = kernel_unchecked(k, x, y);
            let o = sine_transform_oracle(k, x, y);
            assert!((g - o).norm() <= 1e-6 * g.norm().max(1e-3), "k={k} x={x} y={y}: {g} vs {o}");
        }
    }

    #[test]
    fn conjugate_side_by_conjugation() {
        // For real k the (−i0) boundary value is the conjugate of the (+i0) one.
        let k = 1.7;
        let plus = kernel_unchecked(Complex64::from(k), 0.4, 1.1);
        let near_minus = kernel_unchecked(Complex64::new(-k, 1e-12), 0.4, 1.1);
        assert!((plus.conj() - near_minus).norm() < 1e-10);
    }

    #[test]
    fn kernel_solves_the_resolvent_equation() {
        // v(x) = ∫G(x,y)u(y)dy should satisfy −v'' − k²v = u.
        let k = Complex64::new(0.8, 0.5);
        let u = |y: f64| if y < 2.0 { (y * (2.0 - y)).powi(3) } else { 0.0 };
        let v = |x: f64| -> Complex64 {
            let left =
                quad::adaptive(|y| kernel_unchecked(k, x, y) * u(y), 0.0, x.min(2.0), 1e-15, 1e-13).unwrap().value;
            let right = if x < 2.0 {
                quad::adaptive(|y| kernel_unchecked(k, x, y) * u(y), x, 2.0, 1e-15, 1e-13).unwrap().value
            } else {
                Complex64::new(0.0, 0.0)
            };
            left + right
        };
        let h = 1e-3;
        for &x in &[0.3, 0.9, 1.4, 1.8] {
            let lap = (v(x + h) - 2.0 * v(x) + v(x - h)) / (h * h);
            let residual = -lap - k * k * v(x) - u(x);
            assert!(residual.norm() < 1e-5 * (1.0 + u(x)), "x={x}: {residual}");
        }
        assert!(v(0.0).norm() < 1e-15);
    }

    #[test]
    fn phi_is_continuous_at_small_argument() {
        let k = Complex64::new(1e-9, 1e-9);
        assert!((phi(k, 2.0) - 2.0).norm() < 1e-7);
        let k = Complex64::new(0.6, 0.2);
        let direct = ((2.0 * Complex64::i() * k * 1.5).exp() - 1.0) / (2.0 * Complex64::i() * k);
        assert!((phi(k, 1.5) - direct).norm() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kernel_is_symmetric_and_bounded(
                re in -20.0..20.0f64, im in 0.0..20.0f64, x in 0.0..10.0f64, y in 0.0..10.0f64
            ) {
                let k = Complex64::new(re, im);
                prop_assume!(k.norm() > 1e-6);
                let a = kernel_unchecked(k, x, y);
                let b = kernel_unchecked(k, y, x);
                prop_assert_eq!(a, b);
                prop_assert!(a.norm() <= (1.0 + 1e-12) / k.norm());
            }
        }
    }
}
