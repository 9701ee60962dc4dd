//! Zeros of a(k) in the upper half-plane by the argument principle.
//!
//! The search rectangle is quadrisected until every box with nonzero winding
//! is small, then each candidate is polished by Newton's method (Muller's
//! method when Newton stalls).

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::Jost;
use crate::ode::Tolerance;
use crate::potential::PotentialSpec;

/// |a| below this on a contour sample counts as a zero on the contour.
pub const ZERO_PROXIMITY: f64 = 1e-7;
/// Boxes are split until their diameter drops below this.
pub const MIN_BOX_DIAMETER: f64 = 1e-4;
/// Polished roots closer than this are merged.
pub const MERGE_DISTANCE: f64 = 1e-7;

const POLISH_TOL: Tolerance = Tolerance { rel: 1e-12, abs: 1e-14, max_steps: 4_000_000 };
const TARGET_RESIDUAL: f64 = 1e-10;
const ACCEPT_RESIDUAL: f64 = 1e-8;
// Off-center split fractions; zeros of real potentials sit on Re k = 0,
// exactly where a midpoint split would run.
const SPLITS: [f64; 5] = [0.5123, 0.4871, 0.5377, 0.4619, 0.5531];

/// An eigenvalue λ = k² with k in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub k: Complex64,
    pub lambda: Complex64,
    pub residual: f64,
    pub multiplicity: u32,
}

/// Axis-aligned rectangle in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub delta: f64,
    pub margin: f64,
}

impl SearchRegion {
    /// The disk |k| ≤ ∫|V| padded by 10%, standing off the real axis by
    /// δ = 1e−6·max(∫|V|, 1).
    pub fn for_potential(v: &PotentialSpec) -> Self {
        let r = v.l1();
        let margin = 0.1 * r;
        let delta = 1e-6 * r.max(1.0);
        let mut im_min = delta;
        if matches!(v, PotentialSpec::PowerTail { .. }) {
            // a(k) is only evaluated for |k| ≥ 1e−3·(2∫|V|) on algebraic tails.
            im_min = im_min.max(2e-3 * r);
        }
        Self { re_min: -r - margin, re_max: r + margin, im_min, im_max: r + margin, delta, margin }
    }

    pub fn rect(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && 0.0 < im_min && im_min < im_max) {
            return Err(Error::InvalidArgument(format!(
                "invalid search rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max, delta: im_min, margin: 0.0 })
    }

    pub fn is_empty(&self) -> bool {
        !(self.re_min < self.re_max && self.im_min < self.im_max)
    }

    pub fn contains(&self, k: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&k.re) && (self.im_min..=self.im_max).contains(&k.im)
    }

    pub fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn grown(&self, by: f64) -> Self {
        Self {
            re_min: self.re_min - by,
            re_max: self.re_max + by,
            im_min: (self.im_min - by).max(0.5 * self.im_min),
            im_max: self.im_max + by,
            ..*self
        }
    }

    fn quarters(&self, frac: f64) -> [Self; 4] {
        let xm = self.re_min + frac * (self.re_max - self.re_min);
        let ym = self.im_min + frac * (self.im_max - self.im_min);
        let b = |re_min, re_max, im_min, im_max| Self { re_min, re_max, im_min, im_max, ..*self };
        [
            b(self.re_min, xm, self.im_min, ym),
            b(xm, self.re_max, self.im_min, ym),
            b(xm, self.re_max, ym, self.im_max),
            b(self.re_min, xm, ym, self.im_max),
        ]
    }
}

/// Output of a full search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub points: Vec<SpectralPoint>,
    pub region: SearchRegion,
    /// Winding number of a around the (possibly perturbed) region.
    pub winding: i64,
    pub evaluations: usize,
}

impl Spectrum {
    pub fn total_multiplicity(&self) -> i64 {
        self.points.iter().map(|p| p.multiplicity as i64).sum()
    }
}

/// Memoized a(k) with contour bookkeeping.
pub struct ZeroSearch<'a> {
    jost: &'a Jost,
    values: RefCell<HashMap<(u64, u64), Complex64>>,
    edges: RefCell<HashMap<[u64; 4], f64>>,
    // Distance over which V still moves the phase of a on the real axis.
    reach: f64,
}

impl<'a> ZeroSearch<'a> {
    pub fn new(jost: &'a Jost) -> Self {
        let v = jost.potential();
        // Phase of a moves on the scale 1/x where most of |V| lives.
        let l1 = v.l1();
        let reach = if l1 > 0.0 { v.truncation_point(1e-3 * l1).max(v.length_scale()) } else { 1.0 };
        Self { jost, values: RefCell::default(), edges: RefCell::default(), reach }
    }

    pub fn evaluations(&self) -> usize {
        self.values.borrow().len()
    }

    pub fn a(&self, k: Complex64) -> Result<Complex64> {
        let key = (k.re.to_bits(), k.im.to_bits());
        if let Some(&v) = self.values.borrow().get(&key) {
            return Ok(v);
        }
        let v = self.jost.a(k)?;
        self.values.borrow_mut().insert(key, v);
        Ok(v)
    }

    fn sample(&self, k: Complex64) -> Result<Complex64> {
        let v = self.a(k)?;
        if v.norm() < ZERO_PROXIMITY {
            return Err(Error::ZeroOnContour { re: k.re, im: k.im });
        }
        Ok(v)
    }

    /// Argument change of a along the segment p → q.
    fn edge(&self, p: Complex64, q: Complex64) -> Result<f64> {
        // Canonical orientation so shared edges of neighbouring boxes reuse
        // the same samples and the same total.
        let flip = (q.re, q.im) < (p.re, p.im);
        let (s, t) = if flip { (q, p) } else { (p, q) };
        let key = [s.re.to_bits(), s.im.to_bits(), t.re.to_bits(), t.im.to_bits()];
        if let Some(&d) = self.edges.borrow().get(&key) {
            return Ok(if flip { -d } else { d });
        }
        let len = (t - s).norm();
        // Off the axis e^{−2x·Im k} cuts the reach down.
        let reach = self.reach.min(1.0 / s.im.min(t.im));
        let pieces = ((len * 2.0 * reach).ceil() as usize).max(8);
        let mut total = 0.0;
        let mut z0 = s;
        let mut a0 = self.sample(s)?;
        for j in 1..=pieces {
            let z1 = if j == pieces { t } else { s + (t - s) * (j as f64 / pieces as f64) };
            let a1 = self.sample(z1)?;
            total += self.refine(z0, a0, z1, a1, len, 0)?;
            z0 = z1;
            a0 = a1;
        }
        self.edges.borrow_mut().insert(key, total);
        Ok(if flip { -total } else { total })
    }

    fn refine(&self, p: Complex64, ap: Complex64, q: Complex64, aq: Complex64, scale: f64, depth: u32) -> Result<f64> {
        let d = (aq / ap).arg();
        if d.abs() < FRAC_PI_2 {
            return Ok(d);
        }
        if depth >= 40 || (q - p).norm() < 1e-12 * scale.max(1e-300) {
            let m = 0.5 * (p + q);
            return Err(Error::ZeroOnContour { re: m.re, im: m.im });
        }
        let m = 0.5 * (p + q);
        let am = self.sample(m)?;
        Ok(self.refine(p, ap, m, am, scale, depth + 1)? + self.refine(m, am, q, aq, scale, depth + 1)?)
    }

    /// Winding number of a around the box boundary (counterclockwise).
    pub fn winding(&self, b: &SearchRegion) -> Result<i64> {
        let c = b.corners();
        let mut total = 0.0;
        for i in 0..4 {
            total += self.edge(c[i], c[(i + 1) % 4])?;
        }
        let w = total / TAU;
        let rounded = w.round();
        if (w - rounded).abs() > 1e-3 {
            return Err(Error::Unwrap { from: format!("{}", c[0]), to: format!("{}", c[0]) });
        }
        Ok(rounded as i64)
    }

    /// Winding around `b`, growing the box slightly when a zero sits on it.
    fn winding_perturbed(&self, b: &SearchRegion) -> Result<(SearchRegion, i64)> {
        let mut region = *b;
        let mut last = None;
        for attempt in 0..=5 {
            match self.winding(&region) {
                Ok(w) => return Ok((region, w)),
                Err(e @ (Error::ZeroOnContour { .. } | Error::Unwrap { .. })) => {
                    log::debug!("perturbing search box after {e}");
                    last = Some(e);
                    region = b.grown(1e-3 * b.diameter() * (attempt as f64 + 1.0) * std::f64::consts::FRAC_1_SQRT_2);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// Splits `b` (known winding w) into boxes of nonzero winding, retrying
    /// with a different split point when children do not add up.
    fn split(&self, b: &SearchRegion, w: i64, out: &mut Vec<(SearchRegion, i64)>) -> Result<()> {
        if w == 0 {
            return Ok(());
        }
        if b.diameter() < MIN_BOX_DIAMETER {
            out.push((*b, w));
            return Ok(());
        }
        let mut last_err = None;
        for &frac in &SPLITS {
            let kids = b.quarters(frac);
            let windings: Result<Vec<i64>> = kids.iter().map(|k| self.winding(k)).collect();
            match windings {
                Ok(ws) if ws.iter().sum::<i64>() == w => {
                    for (kid, kw) in kids.iter().zip(ws) {
                        self.split(kid, kw, out)?;
                    }
                    return Ok(());
                }
                Ok(ws) => {
                    log::debug!("children windings {ws:?} do not sum to {w}; moving split");
                }
                Err(e @ (Error::ZeroOnContour { .. } | Error::Unwrap { .. })) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        // Every split line hit a zero; report the box as unresolved.
        log::warn!("could not subdivide box of diameter {:e}: {:?}", b.diameter(), last_err);
        out.push((*b, w));
        Ok(())
    }

    fn a_tight(&self, k: Complex64) -> Result<Complex64> {
        self.jost.a_with_tolerance(k, POLISH_TOL)
    }

    /// Newton from `k0` with a difference-quotient derivative; falls back to
    /// Muller when Newton stalls or wanders outside `bound`.
    pub fn polish(&self, k0: Complex64, bound: &SearchRegion) -> Result<(Complex64, f64)> {
        if let Some(r) = self.newton(k0, bound)? {
            return Ok(r);
        }
        log::debug!("newton stalled near {k0}; trying muller");
        if let Some(r) = self.muller(k0, bound)? {
            return Ok(r);
        }
        let res = self.a_tight(k0)?.norm();
        Ok((k0, res))
    }

    fn newton(&self, k0: Complex64, bound: &SearchRegion) -> Result<Option<(Complex64, f64)>> {
        let mut k = k0;
        let mut ak = self.a_tight(k)?;
        for _ in 0..50 {
            if ak.norm() <= TARGET_RESIDUAL {
                return Ok(Some((k, ak.norm())));
            }
            let d = self.jost.derivative_with_tolerance(k, POLISH_TOL)?;
            if d.norm() == 0.0 {
                return Ok(None);
            }
            let step = ak / d;
            let next = k - step;
            if !bound.contains(next) {
                return Ok(None);
            }
            let an = self.a_tight(next)?;
            k = next;
            ak = an;
            if step.norm() <= 1e-15 * k.norm().max(1.0) {
                break;
            }
        }
        Ok((ak.norm() <= ACCEPT_RESIDUAL).then_some((k, ak.norm())))
    }

    fn muller(&self, k0: Complex64, bound: &SearchRegion) -> Result<Option<(Complex64, f64)>> {
        let h = 1e-3 * bound.diameter().max(1e-6);
        let mut x = [k0 - h, k0 + h, k0 + Complex64::new(0.0, h)];
        let mut f = [self.a_tight(x[0])?, self.a_tight(x[1])?, self.a_tight(x[2])?];
        for _ in 0..100 {
            let h1 = x[1] - x[0];
            let h2 = x[2] - x[1];
            let d1 = (f[1] - f[0]) / h1;
            let d2 = (f[2] - f[1]) / h2;
            let a = (d2 - d1) / (h2 + h1);
            let b = a * h2 + d2;
            let disc = (b * b - 4.0 * f[2] * a).sqrt();
            let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
            if den.norm() == 0.0 {
                return Ok(None);
            }
            let dx = -2.0 * f[2] / den;
            let next = x[2] + dx;
            if !bound.contains(next) {
                return Ok(None);
            }
            let fn_ = self.a_tight(next)?;
            x = [x[1], x[2], next];
            f = [f[1], f[2], fn_];
            if fn_.norm() <= TARGET_RESIDUAL || dx.norm() <= 1e-15 * next.norm().max(1.0) {
                break;
            }
        }
        let res = f[2].norm();
        Ok((res <= ACCEPT_RESIDUAL).then_some((x[2], res)))
    }
}

/// Zeros of a(k) inside `region`, sorted by (Re k, Im k).
pub fn search(jost: &Jost, region: &SearchRegion) -> Result<Spectrum> {
    if jost.potential().is_zero() || region.is_empty() {
        return Ok(Spectrum { points: Vec::new(), region: *region, winding: 0, evaluations: 0 });
    }
    let zs = ZeroSearch::new(jost);
    let (region, winding) = zs.winding_perturbed(region)?;
    let mut boxes = Vec::new();
    zs.split(&region, winding, &mut boxes)?;
    let mut points: Vec<SpectralPoint> = Vec::new();
    for (b, w) in boxes {
        let center = Complex64::new(0.5 * (b.re_min + b.re_max), 0.5 * (b.im_min + b.im_max));
        let (k, residual) = if w == 1 {
            zs.polish(center, &b.grown(b.diameter()))?
        } else {
            log::warn!("unresolved cluster of {w} zeros near k = {center}");
            (center, zs.a_tight(center)?.norm())
        };
        if w < 0 {
            return Err(Error::InvalidZeroSet(format!("negative winding {w} near {center}")));
        }
        if residual > ACCEPT_RESIDUAL {
            log::warn!("zero near {k} polished only to |a| = {residual:e}");
        }
        points.push(SpectralPoint { k, lambda: k * k, residual, multiplicity: w as u32 });
    }
    points.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    let mut merged: Vec<SpectralPoint> = Vec::with_capacity(points.len());
    for p in points {
        match merged.iter_mut().find(|q| (q.k - p.k).norm() < MERGE_DISTANCE) {
            Some(q) => {
                q.multiplicity += p.multiplicity;
                if p.residual < q.residual {
                    q.k = p.k;
                    q.lambda = p.lambda;
                    q.residual = p.residual;
                }
            }
            None => merged.push(p),
        }
    }
    Ok(Spectrum { points: merged, region, winding, evaluations: zs.evaluations() })
}

/// Argument-principle count of zeros of a(k) inside `region`.
pub fn winding_number(v: &PotentialSpec, region: &SearchRegion) -> Result<i64> {
    if v.is_zero() {
        return Ok(0);
    }
    let jost = Jost::new(v)?;
    ZeroSearch::new(&jost).winding_perturbed(region).map(|r| r.1)
}

/// All eigenvalues off [0, ∞), as zeros k_j of a in the default region.
pub fn find_spectrum(v: &PotentialSpec) -> Result<Vec<SpectralPoint>> {
    let jost = Jost::new(v)?;
    Ok(search(&jost, &SearchRegion::for_potential(v))?.points)
}
