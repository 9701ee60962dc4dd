//! Finite Blaschke products over zeros in the upper half-plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::SpectralPoint;

/// |k − k̄_j| below this is treated as evaluation at a pole.
pub const POLE_PROXIMITY: f64 = 1e-14;

/// Zeros k_j with Im k_j > 0, repeated by multiplicity and stored in
/// ascending modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    zeros: Vec<Complex64>,
    max_modulus: f64,
}

/// Σ Im k_jⁿ for n = 1, 2, 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSums {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl ZeroSet {
    pub fn new(mut zeros: Vec<Complex64>) -> Result<Self> {
        for z in &zeros {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidZeroSet(format!("non-finite zero {z}")));
            }
            if z.im <= 0.0 {
                return Err(Error::InvalidZeroSet(format!("zero {z} not in the upper half-plane")));
            }
        }
        zeros.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)));
        let max_modulus = zeros.last().map_or(0.0, |z| z.norm());
        Ok(Self { zeros, max_modulus })
    }

    pub fn empty() -> Self {
        Self { zeros: Vec::new(), max_modulus: 0.0 }
    }

    pub fn from_spectrum(points: &[SpectralPoint]) -> Result<Self> {
        Self::new(points.iter().flat_map(|p| std::iter::repeat_n(p.k, p.multiplicity as usize)).collect())
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.max_modulus
    }

    fn check_pole(&self, k: Complex64) -> Result<()> {
        for z in &self.zeros {
            let d = (k - z.conj()).norm();
            if d < POLE_PROXIMITY {
                return Err(Error::PoleProximity(d));
            }
        }
        Ok(())
    }

    /// B(k) = ∏ (k − k_j)/(k − k̄_j) · k_j/|k_j|.
    pub fn eval(&self, k: Complex64) -> Result<Complex64> {
        self.check_pole(k)?;
        Ok(self.zeros.iter().fold(Complex64::new(1.0, 0.0), |acc, z| acc * ((k - z) / (k - z.conj()) * (z / z.norm()))))
    }

    /// Σ_j [Log((k − k_j)/(k − k̄_j)) + i·arg k_j], principal per factor.
    /// Agrees with the large-|k| expansion without any 2π shifts.
    pub fn log_eval(&self, k: Complex64) -> Result<Complex64> {
        self.check_pole(k)?;
        let i = Complex64::i();
        Ok(self
            .zeros
            .iter()
            .map(|z| ((k - z) / (k - z.conj())).ln() + i * z.arg())
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b))
    }

    /// i·Σ arg k_j, the constant term log ∏ k_j/|k_j|.
    pub fn expansion_constant(&self) -> Complex64 {
        Complex64::new(0.0, self.zeros.iter().map(|z| z.arg()).sum())
    }

    /// log B(k) through order k⁻³.
    pub fn expansion(&self, k: Complex64) -> Complex64 {
        let ps = self.power_sums();
        let i = Complex64::i();
        self.expansion_constant() - 2.0 * i * ps.s1 / k - i * ps.s2 / (k * k) - 2.0 * i * ps.s3 / (3.0 * k * k * k)
    }

    /// 2·Σ (|k_j|/|k|)⁴/(1 − |k_j|/|k|), a bound on the expansion remainder.
    pub fn expansion_bound(&self, k: Complex64) -> f64 {
        self.zeros
            .iter()
            .map(|z| {
                let q = z.norm() / k.norm();
                2.0 * q.powi(4) / (1.0 - q)
            })
            .sum()
    }

    pub fn power_sums(&self) -> PowerSums {
        let mut s = PowerSums { s1: 0.0, s2: 0.0, s3: 0.0 };
        for z in &self.zeros {
            let z2 = z * z;
            s.s1 += z.im;
            s.s2 += z2.im;
            s.s3 += (z2 * z).im;
        }
        s
    }

    /// Continuous log B along a path, unwrapping each factor separately.
    pub fn log_along_path(&self, path: &[Complex64]) -> Result<Vec<Complex64>> {
        let tau = std::f64::consts::TAU;
        let mut shifts = vec![0.0_f64; self.zeros.len()];
        let mut prev: Vec<f64> = Vec::new();
        let mut out = Vec::with_capacity(path.len());
        let i = Complex64::i();
        for &k in path {
            self.check_pole(k)?;
            let mut total = Complex64::new(0.0, 0.0);
            let mut args = Vec::with_capacity(self.zeros.len());
            for (j, z) in self.zeros.iter().enumerate() {
                let l = ((k - z) / (k - z.conj())).ln();
                if let Some(&p) = prev.get(j) {
                    let jump = l.im - p;
                    shifts[j] -= tau * (jump / tau).round();
                }
                args.push(l.im);
                total += Complex64::new(l.re, l.im + shifts[j]) + i * z.arg();
            }
            prev = args;
            out.push(total);
        }
        Ok(out)
    }
}

pub fn blaschke_eval(zs: &ZeroSet, k: Complex64) -> Result<Complex64> {
    zs.eval(k)
}

pub fn power_sums(zs: &ZeroSet) -> PowerSums {
    zs.power_sums()
}
