//! Complex potentials on the half-line and their L¹ moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta, erf, gamma::gamma};

use crate::error::{Error, Result};
use crate::quad;

/// Default tail mass ∫_X^∞ |V| allowed when truncating a potential.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Longest truncation point used for algebraically decaying tails. Beyond it
/// the tail is accounted for analytically to first order.
pub const POWER_TAIL_CAP: f64 = 1.0e3;

/// One constant piece of a step potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x_lo: f64,
    pub x_hi: f64,
    pub value: Complex64,
}

impl Segment {
    pub fn new(x_lo: f64, x_hi: f64, value: Complex64) -> Self {
        Self { x_lo, x_hi, value }
    }
}

/// A complex potential V: [0, ∞) → ℂ drawn from one of the built-in families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// Piecewise constant, zero outside the segments.
    Step { segments: Vec<Segment> },
    /// A·exp(−((x − center)/width)²).
    Gaussian { amplitude: Complex64, width: f64, center: f64 },
    /// A·exp(−rate·x).
    ExpDecay { amplitude: Complex64, rate: f64 },
    /// A·(1 + x)^(−exponent), exponent > 1.
    PowerTail { amplitude: Complex64, exponent: f64 },
    /// Linear interpolation of samples; zero outside [grid[0], grid[last]].
    Sampled { grid: Vec<f64>, values: Vec<Complex64> },
}

/// ∫|V| and ∫x^p|V| over [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub l1: f64,
    pub weighted: f64,
    pub p: f64,
}

impl PotentialSpec {
    pub fn step(segments: Vec<Segment>) -> Result<Self> {
        let spec = PotentialSpec::Step { segments };
        spec.validate()?;
        Ok(spec)
    }

    /// The single well V = value on [0, width].
    pub fn well(value: Complex64, width: f64) -> Result<Self> {
        Self::step(vec![Segment::new(0.0, width, value)])
    }

    pub fn gaussian(amplitude: Complex64, width: f64, center: f64) -> Result<Self> {
        let spec = PotentialSpec::Gaussian { amplitude, width, center };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exp_decay(amplitude: Complex64, rate: f64) -> Result<Self> {
        let spec = PotentialSpec::ExpDecay { amplitude, rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn power_tail(amplitude: Complex64, exponent: f64) -> Result<Self> {
        let spec = PotentialSpec::PowerTail { amplitude, exponent };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sampled(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        let spec = PotentialSpec::Sampled { grid, values };
        spec.validate()?;
        Ok(spec)
    }

    /// V ≡ 0.
    pub fn zero() -> Self {
        PotentialSpec::Step { segments: Vec::new() }
    }

    /// Checks the family constraints. Deserialized specs must pass this
    /// before use.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        match self {
            PotentialSpec::Step { segments } => {
                let mut last = 0.0_f64;
                for (i, s) in segments.iter().enumerate() {
                    if !(s.x_lo.is_finite() && s.x_hi.is_finite()) || !finite(&s.value) {
                        return bad(format!("segment {i} has non-finite data"));
                    }
                    if s.x_lo < 0.0 {
                        return bad(format!("segment {i} starts at negative x"));
                    }
                    if s.x_hi <= s.x_lo {
                        return bad(format!("segment {i} has x_hi <= x_lo"));
                    }
                    if s.x_lo < last {
                        return bad(format!("segment {i} overlaps or is out of order"));
                    }
                    last = s.x_hi;
                }
            }
            PotentialSpec::Gaussian { amplitude, width, center } => {
                if !finite(amplitude) || !(width.is_finite() && *width > 0.0) {
                    return bad("gaussian needs finite amplitude and width > 0".into());
                }
                if !(center.is_finite() && *center >= 0.0) {
                    return bad("gaussian center must be >= 0".into());
                }
            }
            PotentialSpec::ExpDecay { amplitude, rate } => {
                if !finite(amplitude) || !(rate.is_finite() && *rate > 0.0) {
                    return bad("exp_decay needs finite amplitude and rate > 0".into());
                }
            }
            PotentialSpec::PowerTail { amplitude, exponent } => {
                if !finite(amplitude) || !(exponent.is_finite() && *exponent > 1.0) {
                    return bad("power_tail needs finite amplitude and exponent > 1".into());
                }
            }
            PotentialSpec::Sampled { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return bad("sampled needs >= 2 nodes and matching values".into());
                }
                if grid[0] < 0.0 || grid.iter().any(|x| !x.is_finite()) {
                    return bad("sampled grid must be finite and start at x >= 0".into());
                }
                if grid.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("sampled grid must be strictly increasing".into());
                }
                if !values.iter().all(finite) {
                    return bad("sampled values must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// V(x) for x ≥ 0.
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativePosition(x));
        }
        Ok(self.value(x))
    }

    /// V(x) without the sign check; negative x yields 0.
    pub fn value(&self, x: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        if x < 0.0 {
            return zero;
        }
        match self {
            PotentialSpec::Step { segments } => {
                segments.iter().find(|s| x >= s.x_lo && x < s.x_hi).map_or(zero, |s| s.value)
            }
            PotentialSpec::Gaussian { amplitude, width, center } => {
                let u = (x - center) / width;
                amplitude * (-u * u).exp()
            }
            PotentialSpec::ExpDecay { amplitude, rate } => amplitude * (-rate * x).exp(),
            PotentialSpec::PowerTail { amplitude, exponent } => amplitude * (1.0 + x).powf(-exponent),
            PotentialSpec::Sampled { grid, values } => {
                let last = grid.len() - 1;
                if x < grid[0] || x > grid[last] {
                    return zero;
                }
                let i = match grid.partition_point(|&g| g <= x) {
                    0 => 0,
                    i if i > last => last - 1,
                    i => i - 1,
                };
                let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
                values[i] * (1.0 - t) + values[i + 1] * t
            }
        }
    }

    /// True when every amplitude vanishes.
    pub fn is_zero(&self) -> bool {
        let z = |c: &Complex64| c.re == 0.0 && c.im == 0.0;
        match self {
            PotentialSpec::Step { segments } => segments.iter().all(|s| z(&s.value)),
            PotentialSpec::Gaussian { amplitude, .. }
            | PotentialSpec::ExpDecay { amplitude, .. }
            | PotentialSpec::PowerTail { amplitude, .. } => z(amplitude),
            PotentialSpec::Sampled { values, .. } => values.iter().all(z),
        }
    }

    /// sup |V|.
    pub fn sup_norm(&self) -> f64 {
        match self {
            PotentialSpec::Step { segments } => segments.iter().map(|s| s.value.norm()).fold(0.0, f64::max),
            PotentialSpec::Gaussian { amplitude, .. }
            | PotentialSpec::ExpDecay { amplitude, .. }
            | PotentialSpec::PowerTail { amplitude, .. } => amplitude.norm(),
            PotentialSpec::Sampled { values, .. } => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Right end of the support for compactly supported families.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            PotentialSpec::Step { segments } => Some(segments.last().map_or(0.0, |s| s.x_hi)),
            PotentialSpec::Sampled { grid, .. } => grid.last().copied(),
            _ => None,
        }
    }

    pub fn is_compact(&self) -> bool {
        self.support_end().is_some()
    }

    /// Points where V or its derivative jumps; integration panels are
    /// aligned to these.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            PotentialSpec::Step { segments } => segments.iter().flat_map(|s| [s.x_lo, s.x_hi]).collect(),
            PotentialSpec::Sampled { grid, .. } => grid.clone(),
            PotentialSpec::Gaussian { center, .. } if *center > 0.0 => vec![*center],
            _ => Vec::new(),
        };
        pts.retain(|&x| x > 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Length over which V varies appreciably.
    pub fn length_scale(&self) -> f64 {
        match self {
            PotentialSpec::Step { segments } => {
                segments.iter().map(|s| s.x_hi - s.x_lo).fold(f64::INFINITY, f64::min).min(1.0)
            }
            PotentialSpec::Gaussian { width, .. } => *width,
            PotentialSpec::ExpDecay { rate, .. } => 1.0 / rate,
            PotentialSpec::PowerTail { .. } => 1.0,
            PotentialSpec::Sampled { grid, .. } => grid[grid.len() - 1] - grid[0],
        }
    }

    /// ∫_x^∞ |V(y)| dy.
    pub fn tail_mass(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            PotentialSpec::Step { segments } => segments
                .iter()
                .map(|s| {
                    let lo = s.x_lo.max(x);
                    if s.x_hi > lo {
                        (s.x_hi - lo) * s.value.norm()
                    } else {
                        0.0
                    }
                })
                .sum(),
            PotentialSpec::Gaussian { amplitude, width, center } => {
                amplitude.norm() * width * std::f64::consts::PI.sqrt() / 2.0 * erf::erfc((x - center) / width)
            }
            PotentialSpec::ExpDecay { amplitude, rate } => amplitude.norm() * (-rate * x).exp() / rate,
            PotentialSpec::PowerTail { amplitude, exponent } => {
                amplitude.norm() * (1.0 + x).powf(1.0 - exponent) / (exponent - 1.0)
            }
            PotentialSpec::Sampled { grid, .. } => {
                let start = x.max(grid[0]);
                let end = grid[grid.len() - 1];
                if start >= end {
                    return 0.0;
                }
                self.sampled_integral(start, 0.0).unwrap_or(f64::NAN)
            }
        }
    }

    /// Smallest X with ∫_X^∞|V| ≤ tol, never beyond `POWER_TAIL_CAP` for
    /// algebraic tails. Compact families return the end of their support.
    pub fn truncation_point(&self, tol: f64) -> f64 {
        if let Some(end) = self.support_end() {
            return end;
        }
        match self {
            PotentialSpec::Gaussian { center, width, .. } => {
                if self.tail_mass(0.0) <= tol {
                    return center + width;
                }
                let (mut lo, mut hi) = (*center, center + 40.0 * width);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_mass(mid) > tol {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                hi
            }
            PotentialSpec::ExpDecay { amplitude, rate } => {
                let x = (amplitude.norm() / (rate * tol)).ln() / rate;
                x.max(1.0 / rate)
            }
            PotentialSpec::PowerTail { amplitude, exponent } => {
                let q1 = exponent - 1.0;
                let x = (amplitude.norm() / (q1 * tol)).powf(1.0 / q1) - 1.0;
                x.clamp(1.0, POWER_TAIL_CAP)
            }
            _ => unreachable!("compact families handled above"),
        }
    }

    /// Tail integrals (∫_X^∞ V, ∫_X^∞ e^{2ik(y−X)} V) used to seed the Jost
    /// solution at the truncation point. Zero for compact families.
    pub fn tail_integrals(&self, x: f64, k: Complex64) -> Result<(Complex64, Complex64)> {
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::i();
        match self {
            PotentialSpec::Step { .. } | PotentialSpec::Sampled { .. } => {
                if self.tail_mass(x) == 0.0 {
                    Ok((zero, zero))
                } else {
                    let t0 = quad::adaptive(|y| self.value(y), x, self.support_end().unwrap_or(x), 1e-15, 1e-12)?.value;
                    let end = self.support_end().unwrap_or(x);
                    let t1 =
                        quad::adaptive(|y| (2.0 * i * k * (y - x)).exp() * self.value(y), x, end, 1e-15, 1e-12)?.value;
                    Ok((t0, t1))
                }
            }
            PotentialSpec::ExpDecay { amplitude, rate } => {
                let base = amplitude * (-rate * x).exp();
                Ok((base / rate, base / (Complex64::from(*rate) - 2.0 * i * k)))
            }
            PotentialSpec::Gaussian { amplitude, width, center } => {
                let t0 = amplitude * width * std::f64::consts::PI.sqrt() / 2.0 * erf::erfc((x - center) / width);
                let t1 = quad::adaptive_to_infinity(
                    |t| {
                        let u = (x + t - center) / width;
                        (2.0 * i * k * t).exp() * amplitude * (-u * u).exp()
                    },
                    0.0,
                    1e-18,
                    1e-12,
                )?
                .value;
                Ok((t0, t1))
            }
            PotentialSpec::PowerTail { amplitude, exponent } => {
                let q = *exponent;
                let t0 = amplitude * (1.0 + x).powf(1.0 - q) / (q - 1.0);
                // Rotate t = s·e^{iθ} so that e^{2ikt} = e^{−|2k| s}.
                let omega = 2.0 * k;
                let theta = std::f64::consts::FRAC_PI_2 - omega.arg();
                let dir = Complex64::from_polar(1.0, theta);
                let w = omega.norm();
                if w == 0.0 {
                    return Err(Error::InvalidWavenumber { re: k.re, im: k.im, reason: "k = 0" });
                }
                let integral = quad::adaptive_to_infinity(
                    |s| {
                        let base = Complex64::from(1.0 + x) + dir * (s / w);
                        (-s).exp() * base.powf(-q)
                    },
                    0.0,
                    1e-18,
                    1e-12,
                )?
                .value;
                Ok((t0, amplitude * dir * integral / w))
            }
        }
    }

    /// ∫_0^∞ |V| dx.
    pub fn l1(&self) -> f64 {
        match self {
            PotentialSpec::Step { segments } => segments.iter().map(|s| (s.x_hi - s.x_lo) * s.value.norm()).sum(),
            PotentialSpec::Gaussian { .. } | PotentialSpec::ExpDecay { .. } | PotentialSpec::PowerTail { .. } => {
                self.tail_mass(0.0)
            }
            PotentialSpec::Sampled { .. } => self.sampled_integral(0.0, 0.0).unwrap_or(f64::NAN),
        }
    }

    /// ∫|V| and ∫x^p|V| for 0 < p < 1.
    pub fn moments(&self, p: f64) -> Result<Moments> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ExponentOutOfRange(p));
        }
        let l1 = self.l1();
        let weighted = match self {
            PotentialSpec::Step { segments } => segments
                .iter()
                .map(|s| s.value.norm() * (s.x_hi.powf(1.0 + p) - s.x_lo.powf(1.0 + p)) / (1.0 + p))
                .sum(),
            PotentialSpec::Gaussian { amplitude, width, center } => {
                let a = amplitude.norm();
                if *center == 0.0 {
                    // ∫_0^∞ x^p e^{−x²/w²} dx = w^{1+p} Γ((1+p)/2) / 2
                    a * width.powf(1.0 + p) * gamma((1.0 + p) / 2.0) / 2.0
                } else {
                    let f = |x: f64| {
                        let u = (x - center) / width;
                        x.powf(p) * (-u * u).exp()
                    };
                    let near = quad::adaptive(f, 0.0, *center, 1e-14, 1e-12)?;
                    let far = quad::adaptive_to_infinity(f, *center, 1e-14, 1e-12)?;
                    a * (near.value + far.value)
                }
            }
            PotentialSpec::ExpDecay { amplitude, rate } => amplitude.norm() * gamma(1.0 + p) / rate.powf(1.0 + p),
            PotentialSpec::PowerTail { amplitude, exponent } => {
                if p >= exponent - 1.0 {
                    return Err(Error::DivergentMoment { p, q: *exponent });
                }
                amplitude.norm() * beta(1.0 + p, exponent - 1.0 - p)
            }
            PotentialSpec::Sampled { .. } => self.sampled_integral(0.0, p)?,
        };
        if !l1.is_finite() || !weighted.is_finite() {
            return Err(Error::InvalidPotential("non-finite moment".into()));
        }
        Ok(Moments { l1, weighted, p })
    }

    /// R = 2∫|V|, the contour radius of the trace formula.
    pub fn radius(&self) -> f64 {
        2.0 * self.l1()
    }

    /// c·V.
    pub fn scaled(&self, c: Complex64) -> Self {
        match self {
            PotentialSpec::Step { segments } => PotentialSpec::Step {
                segments: segments.iter().map(|s| Segment { value: s.value * c, ..*s }).collect(),
            },
            PotentialSpec::Gaussian { amplitude, width, center } => {
                PotentialSpec::Gaussian { amplitude: amplitude * c, width: *width, center: *center }
            }
            PotentialSpec::ExpDecay { amplitude, rate } => {
                PotentialSpec::ExpDecay { amplitude: amplitude * c, rate: *rate }
            }
            PotentialSpec::PowerTail { amplitude, exponent } => {
                PotentialSpec::PowerTail { amplitude: amplitude * c, exponent: *exponent }
            }
            PotentialSpec::Sampled { grid, values } => {
                PotentialSpec::Sampled { grid: grid.clone(), values: values.iter().map(|v| v * c).collect() }
            }
        }
    }

    /// The dilation s²·V(s·x). Not defined for power tails, whose offset
    /// (1 + x) is not scale-free.
    pub fn dilated(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidArgument(format!("dilation factor {s}")));
        }
        let s2 = s * s;
        Ok(match self {
            PotentialSpec::Step { segments } => PotentialSpec::Step {
                segments: segments.iter().map(|seg| Segment::new(seg.x_lo / s, seg.x_hi / s, seg.value * s2)).collect(),
            },
            PotentialSpec::Gaussian { amplitude, width, center } => {
                PotentialSpec::Gaussian { amplitude: amplitude * s2, width: width / s, center: center / s }
            }
            PotentialSpec::ExpDecay { amplitude, rate } => {
                PotentialSpec::ExpDecay { amplitude: amplitude * s2, rate: rate * s }
            }
            PotentialSpec::PowerTail { .. } => {
                return Err(Error::InvalidArgument("power tails are not closed under dilation".into()))
            }
            PotentialSpec::Sampled { grid, values } => PotentialSpec::Sampled {
                grid: grid.iter().map(|x| x / s).collect(),
                values: values.iter().map(|v| v * s2).collect(),
            },
        })
    }

    /// ∫_{max(from, grid₀)}^{end} x^p |V| for sampled data, panel by panel.
    fn sampled_integral(&self, from: f64, p: f64) -> Result<f64> {
        let PotentialSpec::Sampled { grid, values } = self else {
            return Err(Error::InvalidArgument("not a sampled potential".into()));
        };
        let mut total = 0.0;
        for i in 0..grid.len() - 1 {
            let (a, b) = (grid[i].max(from), grid[i + 1]);
            if b <= a {
                continue;
            }
            let (va, vb, ga, gb) = (values[i], values[i + 1], grid[i], grid[i + 1]);
            let f = |x: f64| {
                let t = (x - ga) / (gb - ga);
                let v = (va * (1.0 - t) + vb * t).norm();
                if p == 0.0 {
                    v
                } else {
                    x.powf(p) * v
                }
            };
            total += quad::adaptive(f, a, b, 1e-14, 1e-12)?.value;
        }
        Ok(total)
    }
}
