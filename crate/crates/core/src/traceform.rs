//! Contour integrals ∮ log f(k)·(R² − k²) dk over [−R, R] and the upper
//! semicircle, and the trace identity
//!
//! ```text
//! 2πR²·Σ Im k_j − (2π/3)·Σ Im k_j³ = Re ∮ log a(k)·(R² − k²) dk.
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blaschke::ZeroSet;
use crate::error::{Error, Result};
use crate::jost::Jost;
use crate::potential::PotentialSpec;
use crate::quad::{self, GaussRule};
use crate::spectra::{self, SearchRegion, SpectralPoint};

const PANEL_DEGREE: usize = 16;
const MAX_NODES: usize = 1 << 14;
// Phase-unwrapping bisection depth per segment (2^16 subdivisions).
const MAX_UNWRAP_DEPTH: u32 = 16;
/// |a| below this at the innermost interval nodes flags a near-resonance
/// at k = 0.
pub const RESONANCE_GUARD: f64 = 1e-6;

/// The closed contour C_R: [−R, R] followed by the upper semicircle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub radius: f64,
    pub n_interval: usize,
    pub n_arc: usize,
    /// Interval nodes sit at k = ±R·t^grading, clustering toward 0.
    pub grading: f64,
    /// Relative change under node doubling accepted as converged.
    pub rel_tol: f64,
}

impl ContourSpec {
    pub fn new(radius: f64) -> Self {
        Self { radius, n_interval: 128, n_arc: 128, grading: 3.0, rel_tol: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidArgument(format!("contour radius {}", self.radius)));
        }
        if self.n_interval < 64 || self.n_arc < 64 {
            return Err(Error::InvalidArgument("contour node counts must be >= 64".into()));
        }
        if self.grading.is_nan() || self.grading < 1.0 {
            return Err(Error::InvalidArgument(format!("grading exponent {}", self.grading)));
        }
        Ok(())
    }
}

/// The integral split by contour piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourIntegral {
    pub total: Complex64,
    pub interval: Complex64,
    pub arc: Complex64,
    pub n_interval: usize,
    pub n_arc: usize,
    pub converged: bool,
    /// Change of the total at the last doubling.
    pub change: f64,
    /// Smallest |f| at the interval nodes closest to k = 0.
    pub inner_min_abs: f64,
}

/// Both sides of the trace identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    pub arc_part: Complex64,
    pub interval_part: f64,
    pub converged: bool,
    pub n_interval: usize,
    pub n_arc: usize,
    pub near_resonance: bool,
    pub zeros: Vec<Complex64>,
}

/// Contour nodes in traversal order with weights folded with dk/dt.
struct Nodes {
    k: Vec<Complex64>,
    w: Vec<Complex64>,
    // First arc node index.
    split: usize,
}

fn nodes(c: &ContourSpec, n_interval: usize, n_arc: usize) -> Nodes {
    let r = c.radius;
    let rule = GaussRule::new(PANEL_DEGREE);
    let half_panels = (n_interval / 2).div_ceil(PANEL_DEGREE).max(1);
    let edges: Vec<f64> = (0..=half_panels).map(|j| j as f64 / half_panels as f64).collect();
    let (t, wt) = quad::composite_gauss(&edges, &rule);
    let g = c.grading;
    let mut k = Vec::new();
    let mut w = Vec::new();
    // Left half, −R → 0: k = −R(1 − s)^g with s ascending.
    for (&s, &ws) in t.iter().zip(&wt) {
        let u = 1.0 - s;
        k.push(Complex64::from(-r * u.powf(g)));
        w.push(Complex64::from(ws * g * r * u.powf(g - 1.0)));
    }
    for (&s, &ws) in t.iter().zip(&wt) {
        k.push(Complex64::from(r * s.powf(g)));
        w.push(Complex64::from(ws * g * r * s.powf(g - 1.0)));
    }
    let split = k.len();
    let arc_panels = n_arc.div_ceil(PANEL_DEGREE).max(1);
    let edges: Vec<f64> = (0..=arc_panels).map(|j| PI * j as f64 / arc_panels as f64).collect();
    let (th, wth) = quad::composite_gauss(&edges, &rule);
    for (&theta, &wt) in th.iter().zip(&wth) {
        let z = Complex64::from_polar(r, theta);
        k.push(z);
        w.push(Complex64::i() * z * wt);
    }
    Nodes { k, w, split }
}

/// Continuous log f along the node sequence starting at −R, inserting
/// bisection points wherever consecutive arguments differ by π/2 or more.
fn unwrapped_logs<F>(f: &F, c: &ContourSpec, pts: &[Complex64], min_abs: f64) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let r = c.radius;
    // Path parameter: s ∈ [0, 2] on the interval (k = R(s − 1)), then
    // s ∈ [2, 2 + π] on the arc.
    let point = |s: f64| -> Complex64 {
        if s <= 2.0 {
            Complex64::from(r * (s - 1.0))
        } else {
            Complex64::from_polar(r, s - 2.0)
        }
    };
    let param = |k: Complex64, on_arc: bool| -> f64 {
        if on_arc {
            2.0 + k.arg().max(0.0)
        } else {
            k.re / r + 1.0
        }
    };
    let checked = |k: Complex64| -> Result<Complex64> {
        let v = f(k)?;
        if v.norm().is_nan() || v.norm() <= min_abs {
            return Err(Error::ZeroOnContour { re: k.re, im: k.im });
        }
        Ok(v)
    };
    fn arc_change<F: Fn(f64) -> Result<(Complex64, Complex64)>>(
        at: &F,
        s0: f64,
        v0: Complex64,
        s1: f64,
        v1: Complex64,
        depth: u32,
    ) -> Result<f64> {
        let d = (v1 / v0).arg();
        if d.abs() < FRAC_PI_2 {
            return Ok(d);
        }
        let mid = 0.5 * (s0 + s1);
        if depth >= MAX_UNWRAP_DEPTH {
            return Err(Error::Unwrap { from: format!("{s0}"), to: format!("{s1}") });
        }
        let (_, vm) = at(mid)?;
        Ok(arc_change(at, s0, v0, mid, vm, depth + 1)? + arc_change(at, mid, vm, s1, v1, depth + 1)?)
    }
    let at = |s: f64| -> Result<(Complex64, Complex64)> {
        let mut k = point(s);
        if k.norm() == 0.0 {
            // Never evaluate at k = 0; nudge along the path.
            k = Complex64::from(1e-9 * r);
        }
        Ok((k, checked(k)?))
    };
    let start = Complex64::from(-r);
    let mut prev_s = 0.0;
    let mut prev_v = checked(start)?;
    let mut phase = prev_v.arg();
    let mut out = Vec::with_capacity(pts.len());
    for (idx, &k) in pts.iter().enumerate() {
        let on_arc = k.im > 0.0 || (idx > 0 && pts[idx - 1].im > 0.0);
        let s = param(k, on_arc);
        let v = checked(k)?;
        phase += arc_change(&at, prev_s, prev_v, s, v, 0)?;
        out.push(Complex64::new(v.norm().ln(), phase));
        prev_s = s;
        prev_v = v;
    }
    Ok(out)
}

fn integrate_once<F>(f: &F, c: &ContourSpec, n_interval: usize, n_arc: usize) -> Result<ContourIntegral>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let nd = nodes(c, n_interval, n_arc);
    let logs = unwrapped_logs(f, c, &nd.k, 1e-12)?;
    let r2 = c.radius * c.radius;
    let terms: Vec<Complex64> = logs.iter().zip(&nd.k).zip(&nd.w).map(|((l, k), w)| l * (r2 - k * k) * w).collect();
    let interval = quad::pairwise_sum(&terms[..nd.split]);
    let arc = quad::pairwise_sum(&terms[nd.split..]);
    // Innermost interval nodes are the last left and first right ones.
    let half = nd.split / 2;
    let inner_min_abs = logs[half - 1].re.exp().min(logs[half].re.exp());
    Ok(ContourIntegral {
        total: interval + arc,
        interval,
        arc,
        n_interval: nd.split,
        n_arc: nd.k.len() - nd.split,
        converged: false,
        change: f64::INFINITY,
        inner_min_abs,
    })
}

/// The same integral at fixed node counts, without refinement.
pub fn contour_log_integral_at<F>(f: F, c: &ContourSpec, n_interval: usize, n_arc: usize) -> Result<ContourIntegral>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    c.validate()?;
    integrate_once(&f, c, n_interval, n_arc)
}

/// ∮_{C_R} log f(k)·(R² − k²) dk with node doubling until the total moves
/// by less than `rel_tol·(1 + |total|)`.
pub fn contour_log_integral<F>(f: F, c: &ContourSpec) -> Result<ContourIntegral>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    c.validate()?;
    let (mut ni, mut na) = (c.n_interval, c.n_arc);
    let mut prev = integrate_once(&f, c, ni, na)?;
    loop {
        ni *= 2;
        na *= 2;
        let mut cur = integrate_once(&f, c, ni, na)?;
        cur.change = (cur.total - prev.total).norm();
        if cur.change <= c.rel_tol * (1.0 + cur.total.norm()) {
            cur.converged = true;
            return Ok(cur);
        }
        if ni >= MAX_NODES {
            log::warn!("contour integral not converged at {ni} nodes (change {:e})", cur.change);
            return Ok(cur);
        }
        prev = cur;
    }
}

/// 2πR²·s1 − (2π/3)·s3 for the given zeros.
pub fn trace_lhs(zs: &ZeroSet, radius: f64) -> f64 {
    let ps = zs.power_sums();
    2.0 * PI * radius * radius * ps.s1 - 2.0 * PI / 3.0 * ps.s3
}

/// Smallest radius ≥ `radius` with no zero within 1e−6 of |k| = R, found
/// by 1% steps.
pub fn clear_radius(zs: &ZeroSet, mut radius: f64) -> f64 {
    while zs.zeros().iter().any(|z| (z.norm() - radius).abs() < 1e-6) {
        radius *= 1.01;
    }
    radius
}

/// Trace identity for a known zero set on a given contour.
pub fn trace_report_with(jost: &Jost, points: &[SpectralPoint], contour: &ContourSpec) -> Result<TraceReport> {
    let zs = ZeroSet::from_spectrum(points)?;
    let mut contour = *contour;
    contour.radius = clear_radius(&zs, contour.radius);
    let lhs = trace_lhs(&zs, contour.radius);
    let zeros: Vec<Complex64> = zs.zeros().to_vec();
    if jost.potential().is_zero() {
        return Ok(TraceReport {
            radius: contour.radius,
            lhs,
            rhs: 0.0,
            discrepancy: lhs.abs(),
            arc_part: Complex64::new(0.0, 0.0),
            interval_part: 0.0,
            converged: true,
            n_interval: 0,
            n_arc: 0,
            near_resonance: false,
            zeros,
        });
    }
    let mut integral = contour_log_integral(|k| jost.a(k), &contour)?;
    let mut near_resonance = false;
    if integral.inner_min_abs < RESONANCE_GUARD {
        near_resonance = true;
        log::warn!("|a| = {:e} near k = 0; tightening grading", integral.inner_min_abs);
        contour.grading += 1.0;
        integral = contour_log_integral(|k| jost.a(k), &contour)?;
    }
    let rhs = integral.total.re;
    Ok(TraceReport {
        radius: contour.radius,
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
        arc_part: integral.arc,
        interval_part: integral.interval.re,
        converged: integral.converged,
        n_interval: integral.n_interval,
        n_arc: integral.n_arc,
        near_resonance,
        zeros,
    })
}

/// Finds the spectrum and compares both sides of the trace identity at
/// R = 2∫|V|.
pub fn trace_report(v: &PotentialSpec) -> Result<TraceReport> {
    if matches!(v, PotentialSpec::PowerTail { .. }) {
        return Err(Error::InvalidArgument(
            "trace integrals need a(k) down to k = 0, which algebraic tails do not provide".into(),
        ));
    }
    let jost = Jost::new(v)?;
    if v.is_zero() {
        return trace_report_with(&jost, &[], &ContourSpec::new(1.0));
    }
    let spectrum = spectra::search(&jost, &SearchRegion::for_potential(v))?;
    trace_report_with(&jost, &spectrum.points, &ContourSpec::new(v.radius()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_one_integrates_to_zero() {
        let r = contour_log_integral(|_| Ok(c(1.0, 0.0)), &ContourSpec::new(3.0)).unwrap();
        assert_eq!(r.total, c(0.0, 0.0));
        assert!(r.converged);
    }

    #[test]
    fn blaschke_single_zero() {
        let zs = ZeroSet::new(vec![Complex64::i()]).unwrap();
        let r = contour_log_integral(|k| zs.eval(k), &ContourSpec::new(4.0)).unwrap();
        let target = 32.0 * PI + 2.0 * PI / 3.0;
        assert!((r.total.re - target).abs() < 1e-6 * target, "{} vs {target}", r.total.re);
    }

    #[test]
    fn blaschke_two_zeros() {
        let zs = ZeroSet::new(vec![Complex64::i(), c(1.0, 1.0)]).unwrap();
        let r = contour_log_integral(|k| zs.eval(k), &ContourSpec::new(6.0)).unwrap();
        let target = 2.0 * PI * 36.0 * 2.0 - 2.0 * PI / 3.0;
        assert!((r.total.re - target).abs() < 1e-6 * target);
        assert!((trace_lhs(&zs, 6.0) - target).abs() < 1e-12 * target);
    }

    #[test]
    fn zero_potential_report() {
        let rep = trace_report(&PotentialSpec::zero()).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (0.0, 0.0));
    }

    #[test]
    fn single_well_trace_identity() {
        let v = PotentialSpec::well(c(-4.0, 0.0), 1.0).unwrap();
        let rep = trace_report(&v).unwrap();
        let kappa = oracle::well_bound_states(4.0, 1.0)[0];
        let r = 8.0;
        let lhs = 2.0 * PI * r * r * kappa + 2.0 * PI / 3.0 * kappa.powi(3);
        assert!((rep.lhs - lhs).abs() < 1e-8 * lhs);
        assert!(rep.discrepancy <= 1e-5 * (1.0 + rep.lhs.abs()), "{rep:?}");
        assert!(rep.converged);
    }

    #[test]
    fn analytic_ratio_integrates_to_zero() {
        let v = PotentialSpec::well(-Complex64::from_polar(4.0, std::f64::consts::FRAC_PI_4), 1.0).unwrap();
        let jost = Jost::new(&v).unwrap();
        let pts = spectra::find_spectrum(&v).unwrap();
        let zs = ZeroSet::from_spectrum(&pts).unwrap();
        let contour = ContourSpec::new(v.radius());
        let ratio = contour_log_integral(|k| Ok(jost.a(k)? / zs.eval(k)?), &contour).unwrap();
        let scale = contour_log_integral(|k| zs.eval(k), &contour).unwrap().total.norm();
        assert!(ratio.total.re.abs() <= 1e-5 * scale, "{} vs {scale}", ratio.total);
    }

    #[test]
    fn identity_holds_at_a_larger_radius() {
        let v = PotentialSpec::well(c(-4.0, 1.0), 1.0).unwrap();
        let jost = Jost::new(&v).unwrap();
        let pts = spectra::find_spectrum(&v).unwrap();
        for scale in [1.0, 1.05] {
            let rep = trace_report_with(&jost, &pts, &ContourSpec::new(scale * v.radius())).unwrap();
            assert!(rep.discrepancy <= 1e-5 * (1.0 + rep.lhs.abs()), "R×{scale}: {rep:?}");
        }
    }
}
