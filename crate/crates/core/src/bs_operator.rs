//! Nyström discretization of the Birman–Schwinger operator X = W·R(k²)·W,
//! W = |V|^{1/2}, with Schatten norms and perturbation determinants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{PotentialSpec, DEFAULT_TAIL_TOL};
use crate::quad::GaussRule;
use crate::resolvent::{kernel_unchecked, Wavenumber};

pub const PANEL_DEGREE: usize = 10;
pub const DEFAULT_NODES: usize = 400;
const DENSITY_FLOOR: f64 = 0.05;
// Samples per interval when tabulating the panel density.
const DENSITY_SAMPLES: usize = 2000;

/// (x, ∫_lo^x ρ) on a uniform table by the trapezoid rule.
fn cumulative(rho: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let h = (hi - lo) / DENSITY_SAMPLES as f64;
    // Sample just inside the ends so a jump at a breakpoint is not mixed in.
    let inside = |x: f64| rho(x.clamp(lo + 1e-12 * h, hi - 1e-12 * h));
    let mut out = Vec::with_capacity(DENSITY_SAMPLES + 1);
    let mut acc = 0.0;
    let mut prev = inside(lo);
    out.push((lo, 0.0));
    for j in 1..=DENSITY_SAMPLES {
        let x = if j == DENSITY_SAMPLES { hi } else { lo + h * j as f64 };
        let cur = inside(x);
        acc += 0.5 * h * (prev + cur);
        out.push((x, acc));
        prev = cur;
    }
    out
}

/// x with ∫_lo^x ρ = target, by linear interpolation in the table.
fn invert(cum: &[(f64, f64)], target: f64) -> f64 {
    let j = cum.partition_point(|p| p.1 < target).clamp(1, cum.len() - 1);
    let (x0, c0) = cum[j - 1];
    let (x1, c1) = cum[j];
    if c1 > c0 {
        x0 + (x1 - x0) * (target - c0) / (c1 - c0)
    } else {
        x1
    }
}

/// Composite Gauss–Legendre nodes on [0, x_max].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub x_max: f64,
}

impl QuadratureGrid {
    /// About `n` nodes (rounded up to whole panels) on panels aligned to the
    /// breakpoints of `v`, geometric for algebraic tails.
    pub fn for_potential(v: &PotentialSpec, n: usize) -> Result<Self> {
        v.validate()?;
        let mut x_max = v.truncation_point(DEFAULT_TAIL_TOL);
        if x_max <= 0.0 {
            x_max = 1.0;
        }
        let panels = n.div_ceil(PANEL_DEGREE).max(1);
        let mut edges = vec![0.0];
        if let PotentialSpec::PowerTail { .. } = v {
            let top = (1.0 + x_max).ln();
            for j in 1..=panels {
                edges.push(if j == panels { x_max } else { (top * j as f64 / panels as f64).exp() - 1.0 });
            }
        } else {
            let mut fixed: Vec<f64> = v.breakpoints().into_iter().filter(|&b| b > 0.0 && b < x_max).collect();
            fixed.push(x_max);
            // The diagonal kink of the kernel leaves an O(h²|V|) error per
            // panel, so panels equidistribute |V|^{1/3} (plus a floor that
            // keeps the far field covered), at least one per interval.
            let sup = v.sup_norm().max(f64::MIN_POSITIVE);
            let density = |x: f64| (v.value(x).norm() / sup).cbrt() + DENSITY_FLOOR;
            let mut lo = 0.0;
            let mut pieces = Vec::new();
            for &hi in &fixed {
                pieces.push(cumulative(&density, lo, hi));
                lo = hi;
            }
            let total: f64 = pieces.iter().map(|c| c.last().map_or(0.0, |p| p.1)).sum();
            let extra = panels.saturating_sub(pieces.len());
            for cum in &pieces {
                let mass = cum.last().map_or(0.0, |p| p.1);
                let share = (mass / total * extra as f64).round() as usize + 1;
                for j in 1..share {
                    edges.push(invert(cum, mass * j as f64 / share as f64));
                }
                edges.push(cum.last().map_or(0.0, |p| p.0));
            }
        }
        Ok(Self::from_edges(&edges))
    }

    pub fn from_edges(edges: &[f64]) -> Self {
        let rule = GaussRule::new(PANEL_DEGREE);
        let (nodes, weights) = crate::quad::composite_gauss(edges, &rule);
        Self { nodes, weights, x_max: *edges.last().unwrap_or(&0.0) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// M_ij = W_i√w_i·G(x_i, x_j)·√w_j W_j with phases U_i = V_i/|V_i|.
#[derive(Debug, Clone)]
pub struct DiscretizedBS {
    pub k: Wavenumber,
    pub entries: DMatrix<Complex64>,
    pub phases: Vec<Complex64>,
    pub grid: QuadratureGrid,
}

/// Singular values (descending) and the norms built from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenReport {
    pub s1: f64,
    pub s2: f64,
    pub opnorm: f64,
    pub singular_values: Vec<f64>,
}

/// √|V|·√w at each node.
fn scaled_weights(v: &PotentialSpec, grid: &QuadratureGrid) -> (Vec<f64>, Vec<Complex64>) {
    let mut ws = Vec::with_capacity(grid.len());
    let mut phases = Vec::with_capacity(grid.len());
    for (&x, &w) in grid.nodes.iter().zip(&grid.weights) {
        let vx = v.value(x);
        let m = vx.norm();
        ws.push((m * w).sqrt());
        phases.push(if m < 1e-300 { Complex64::new(1.0, 0.0) } else { vx / m });
    }
    (ws, phases)
}

pub fn discretize(v: &PotentialSpec, k: Wavenumber, grid: &QuadratureGrid) -> Result<DiscretizedBS> {
    v.validate()?;
    let (ws, phases) = scaled_weights(v, grid);
    let n = grid.len();
    let kv = k.value();
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        if ws[j] == 0.0 {
            continue;
        }
        for i in j..n {
            if ws[i] == 0.0 {
                continue;
            }
            let e = ws[i] * ws[j] * kernel_unchecked(kv, grid.nodes[i], grid.nodes[j]);
            entries[(i, j)] = e;
            entries[(j, i)] = e;
        }
    }
    if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::LinearAlgebra("non-finite Nystrom entry".into()));
    }
    Ok(DiscretizedBS { k, entries, phases, grid: grid.clone() })
}

pub fn schatten_report(m: &DiscretizedBS) -> Result<SchattenReport> {
    schatten_of(&m.entries)
}

pub fn schatten_of(a: &DMatrix<Complex64>) -> Result<SchattenReport> {
    if a.is_empty() {
        return Ok(SchattenReport { s1: 0.0, s2: 0.0, opnorm: 0.0, singular_values: Vec::new() });
    }
    let svd = a
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::LinearAlgebra("SVD did not converge".into()))?;
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let s1 = sv.iter().sum();
    let s2 = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
    let opnorm = sv.first().copied().unwrap_or(0.0);
    Ok(SchattenReport { s1, s2, opnorm, singular_values: sv })
}

/// ln det(A) by LU with partial pivoting, summing logs of the pivots so the
/// modulus cannot overflow. Imaginary part is the argument modulo 2π.
pub fn log_det(mut a: DMatrix<Complex64>) -> Result<Complex64> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::LinearAlgebra("determinant of a non-square matrix".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for c in 0..n {
        let (p, best) = (c..n).map(|r| (r, a[(r, c)].norm())).fold((c, -1.0), |b, x| if x.1 > b.1 { x } else { b });
        if best == 0.0 {
            return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
        }
        if p != c {
            a.swap_rows(p, c);
            acc += Complex64::new(0.0, std::f64::consts::PI);
        }
        let piv = a[(c, c)];
        acc += piv.ln();
        for r in c + 1..n {
            let f = a[(r, c)] / piv;
            if f.norm() == 0.0 {
                continue;
            }
            for j in c + 1..n {
                let t = a[(c, j)];
                a[(r, j)] -= f * t;
            }
        }
    }
    let phase = acc.im.rem_euclid(std::f64::consts::TAU);
    Ok(Complex64::new(acc.re, if phase > std::f64::consts::PI { phase - std::f64::consts::TAU } else { phase }))
}

/// I + diag(U)·M.
fn identity_plus_um(m: &DiscretizedBS) -> DMatrix<Complex64> {
    let n = m.entries.nrows();
    let mut a = m.entries.clone();
    for i in 0..n {
        let u = m.phases[i];
        for j in 0..n {
            a[(i, j)] *= u;
        }
        a[(i, i)] += 1.0;
    }
    a
}

pub fn trace_um(m: &DiscretizedBS) -> Complex64 {
    (0..m.entries.nrows()).map(|i| m.phases[i] * m.entries[(i, i)]).sum()
}

/// ln det(I + U·M).
pub fn log_perturbation_det(m: &DiscretizedBS) -> Result<Complex64> {
    log_det(identity_plus_um(m))
}

/// det(I + U·M), whose nonzero spectrum matches that of V·R(k²).
pub fn perturbation_det(m: &DiscretizedBS) -> Result<Complex64> {
    Ok(log_perturbation_det(m)?.exp())
}

/// det(I + U·M) at about n and 2n nodes, Richardson-extrapolated against
/// the O(h²) error of the diagonal kink.
pub fn perturbation_det_extrapolated(v: &PotentialSpec, k: Wavenumber, n: usize) -> Result<Complex64> {
    let coarse = perturbation_det(&discretize(v, k, &QuadratureGrid::for_potential(v, n)?)?)?;
    let fine = perturbation_det(&discretize(v, k, &QuadratureGrid::for_potential(v, 2 * n)?)?)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// det₂(I + U·M) = det(I + U·M)·e^{−tr(U·M)}.
pub fn det2(m: &DiscretizedBS) -> Result<Complex64> {
    Ok((log_perturbation_det(m)? - trace_um(m)).exp())
}

/// The functional u ↦ ∫ sin(ξy)·W(y)·u(y) dy in Nyström coordinates,
/// a_i = sin(ξx_i)·W_i·√w_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineFunctional {
    pub xi: f64,
    pub coeffs: Vec<f64>,
}

impl SineFunctional {
    pub fn new(v: &PotentialSpec, xi: f64, grid: &QuadratureGrid) -> Self {
        let (ws, _) = scaled_weights(v, grid);
        let coeffs = grid.nodes.iter().zip(&ws).map(|(&x, &w)| (xi * x).sin() * w).collect();
        Self { xi, coeffs }
    }

    /// ‖l_ξ‖², which is also ‖G_ξ‖ in every Schatten norm.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }

    /// G_ξ = l_ξ* l_ξ as a dense matrix.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let n = self.coeffs.len();
        DMatrix::from_fn(n, n, |i, j| Complex64::from(self.coeffs[i] * self.coeffs[j]))
    }
}

/// ‖aaᵀ − bbᵀ‖_{S₁} = ‖a + b‖·‖a − b‖ for real vectors a, b.
pub fn rank_two_trace_norm(a: &[f64], b: &[f64]) -> f64 {
    let (mut plus, mut minus) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        plus += (x + y) * (x + y);
        minus += (x - y) * (x - y);
    }
    (plus * minus).sqrt()
}

/// l_ξ, l_η and ‖G_ξ − G_η‖_{S₁}.
pub fn sine_rank_one(
    v: &PotentialSpec,
    xi: f64,
    eta: f64,
    grid: &QuadratureGrid,
) -> (SineFunctional, SineFunctional, f64) {
    let a = SineFunctional::new(v, xi, grid);
    let b = SineFunctional::new(v, eta, grid);
    let d = if xi == eta { 0.0 } else { rank_two_trace_norm(&a.coeffs, &b.coeffs) };
    (a, b, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jost::jost_function;
    use crate::quad;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn well() -> PotentialSpec {
        PotentialSpec::well(c(-2.0, 0.0), 1.0).unwrap()
    }

    fn wn(re: f64, im: f64) -> Wavenumber {
        Wavenumber::from_parts(re, im).unwrap()
    }

    #[test]
    fn grid_weights_sum_to_length() {
        for v in [
            well(),
            PotentialSpec::gaussian(c(1.0, 0.0), 1.0, 2.0).unwrap(),
            PotentialSpec::power_tail(c(1.0, 0.0), 2.0).unwrap(),
        ] {
            let g = QuadratureGrid::for_potential(&v, 400).unwrap();
            assert_relative_eq!(g.weights.iter().sum::<f64>(), g.x_max, max_relative = 1e-12);
            assert!(g.nodes.windows(2).all(|p| p[0] < p[1]));
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn zero_potential_gives_zero_operator() {
        let v = PotentialSpec::zero();
        let g = QuadratureGrid::for_potential(&v, 40).unwrap();
        let m = discretize(&v, wn(1.0, 1.0), &g).unwrap();
        assert!(m.entries.iter().all(|z| z.norm() == 0.0));
        let s = schatten_report(&m).unwrap();
        assert_eq!((s.s1, s.s2, s.opnorm), (0.0, 0.0, 0.0));
        assert_eq!(perturbation_det(&m).unwrap(), c(1.0, 0.0));
        assert_eq!(det2(&m).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn trace_matches_closed_form() {
        // ∫₀¹ 2·(e^{2ikx} − 1)/(2ik) dx = 2·[(e^{2ik} − 1)/(2ik) − 1]/(2ik).
        let k = c(0.0, 2.0);
        let i = Complex64::i();
        let exact = 2.0 * (((2.0 * i * k).exp() - 1.0) / (2.0 * i * k) - 1.0) / (2.0 * i * k);
        let g = QuadratureGrid::for_potential(&well(), 400).unwrap();
        let m = discretize(&well(), wn(0.0, 2.0), &g).unwrap();
        assert!((m.entries.trace() - exact).norm() < 1e-8, "{} vs {exact}", m.entries.trace());
    }

    #[test]
    fn entries_are_symmetric() {
        let v = PotentialSpec::gaussian(c(-1.0, 2.0), 1.0, 0.0).unwrap();
        let g = QuadratureGrid::for_potential(&v, 60).unwrap();
        let m = discretize(&v, wn(0.7, 0.2), &g).unwrap();
        assert_eq!(m.entries, m.entries.transpose());
    }

    #[test]
    fn s1_converges_under_refinement() {
        let s = |n| {
            let g = QuadratureGrid::for_potential(&well(), n).unwrap();
            schatten_report(&discretize(&well(), wn(0.0, 2.0), &g).unwrap()).unwrap()
        };
        let (a, b) = (s(400), s(800));
        assert!((a.s1 - b.s1).abs() < 1e-6 * b.s1);
        assert!(a.opnorm <= 1.0 + 1e-8);
        assert!(a.opnorm <= a.s2 && a.s2 <= a.s1);
    }

    #[test]
    fn hilbert_schmidt_norm_matches_double_integral() {
        let v = well();
        let k = c(0.0, 2.0);
        // The kink of G on the diagonal leaves an O(h²) error in the nodal
        // sum, so compare the Richardson limit of n = 400 and 800.
        let s2sq = |n| {
            let g = QuadratureGrid::for_potential(&v, n).unwrap();
            schatten_report(&discretize(&v, wn(0.0, 2.0), &g).unwrap()).unwrap().s2.powi(2)
        };
        let (a, b) = (s2sq(400), s2sq(800));
        let limit = (4.0 * b - a) / 3.0;
        // ∬ |V(x)||G(x,y)|²|V(y)| split on the diagonal.
        let inner = |x: f64| {
            let f = |y: f64| 2.0 * kernel_unchecked(k, x, y).norm_sqr() * 2.0;
            quad::adaptive(f, 0.0, x, 1e-15, 1e-13).unwrap().value
                + quad::adaptive(f, x, 1.0, 1e-15, 1e-13).unwrap().value
        };
        let hs = quad::adaptive(inner, 0.0, 1.0, 1e-14, 1e-12).unwrap().value;
        assert_relative_eq!(limit, hs, max_relative = 1e-6);
        assert_relative_eq!(a, hs, max_relative = 1e-3);
    }

    #[test]
    fn determinant_matches_jost() {
        let v = well();
        let g = QuadratureGrid::for_potential(&v, 400).unwrap();
        for k in [wn(1.0, 2.0), wn(-0.5, 0.3), wn(2.0, 0.1)] {
            let d = perturbation_det(&discretize(&v, k, &g).unwrap()).unwrap();
            let a = jost_function(&v, k).unwrap().a;
            assert!((d - a).norm() <= 1e-4 * a.norm(), "k={:?}: {d} vs {a}", k);
        }
    }

    #[test]
    fn extrapolated_determinant_is_sharper() {
        let v = PotentialSpec::exp_decay(c(-3.0, -1.0), 1.5).unwrap();
        let k = wn(1.0, 0.1);
        let a = jost_function(&v, k).unwrap().a;
        let g = QuadratureGrid::for_potential(&v, 200).unwrap();
        let plain = (perturbation_det(&discretize(&v, k, &g).unwrap()).unwrap() - a).norm();
        let rich = (perturbation_det_extrapolated(&v, k, 200).unwrap() - a).norm();
        assert!(rich < 1e-6 * a.norm() && rich < 0.01 * plain, "{rich:e} vs {plain:e}");
    }

    #[test]
    fn determinant_leading_asymptotics() {
        let v = well();
        let g = QuadratureGrid::for_potential(&v, 400).unwrap();
        let k = c(0.0, 10.0);
        let m = discretize(&v, wn(0.0, 10.0), &g).unwrap();
        let d = perturbation_det(&m).unwrap();
        // exp(tr) is correct to second order; exp(−∫V/(2ik)) drops the
        // ∫V e^{2ikx}/(2ik) part of the trace, an O(|k|⁻²) shift here.
        assert!((d - trace_um(&m).exp()).norm() < 1e-3, "{d}");
        let flat = (-c(-2.0, 0.0) / (2.0 * Complex64::i() * k)).exp();
        let gap = (d - flat).norm();
        assert!(gap < 1e-2 && gap > 1e-3, "{gap}");
    }

    #[test]
    fn det2_relation_on_the_real_axis() {
        // log|a| = Re tr(VR) + log|det₂|, and for real k the trace of the
        // half-line resolvent term is ∫V(e^{2ikx} − 1)/(2ik), whose real part
        // −(1 − cos 2k)/(2k²) for this well does not vanish.
        let v = well();
        let g = QuadratureGrid::for_potential(&v, 400).unwrap();
        for kk in [0.5, 1.0, 3.0, 7.0, 12.0] {
            let k = c(kk, 0.0);
            let m = discretize(&v, wn(kk, 0.0), &g).unwrap();
            let lhs = jost_function(&v, wn(kk, 0.0)).unwrap().a.norm().ln();
            let log_d2 = det2(&m).unwrap().norm().ln();
            let osc = -(1.0 - (2.0 * kk).cos()) / (2.0 * kk * kk);
            assert!((trace_um(&m).re - osc).abs() < 1e-9);
            assert!((lhs - (trace_um(&m).re + log_d2)).abs() < 1e-5, "k = {kk}");
            // Keeping only the non-oscillating part −∫V/(2ik), which is
            // imaginary here, misses by exactly the oscillating term.
            let flat = -(c(-2.0, 0.0) / (2.0 * Complex64::i() * k)).re;
            assert!((lhs - (flat + log_d2) - osc).abs() < 1e-5, "k = {kk}");
        }
    }

    #[test]
    fn det2_rank_one_identity() {
        // A single node turns U·M into the 1×1 matrix t.
        let t = c(0.3, -0.4);
        let m = DiscretizedBS {
            k: wn(1.0, 0.0),
            entries: DMatrix::from_element(1, 1, t),
            phases: vec![c(1.0, 0.0)],
            grid: QuadratureGrid { nodes: vec![0.5], weights: vec![1.0], x_max: 1.0 },
        };
        assert!((det2(&m).unwrap() - (1.0 + t) * (-t).exp()).norm() < 1e-15);
    }

    #[test]
    fn log_det_matches_nalgebra() {
        let a = DMatrix::from_fn(6, 6, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64));
        let ours = log_det(a.clone()).unwrap().exp();
        let theirs = a.determinant();
        assert!((ours - theirs).norm() < 1e-10 * theirs.norm());
    }

    #[test]
    fn determinant_bounded_by_trace_norm() {
        let v = PotentialSpec::well(c(-3.0, 1.0), 1.5).unwrap();
        let g = QuadratureGrid::for_potential(&v, 200).unwrap();
        for k in [wn(0.4, 0.0), wn(1.0, 1.0), wn(-2.0, 0.5)] {
            let m = discretize(&v, k, &g).unwrap();
            let s1 = schatten_report(&m).unwrap().s1;
            assert!(perturbation_det(&m).unwrap().norm() <= s1.exp());
        }
    }

    #[test]
    fn rank_one_norms() {
        let v = well();
        let g = QuadratureGrid::for_potential(&v, 200).unwrap();
        let (a, b, d) = sine_rank_one(&v, 2.0, 2.0, &g);
        assert_eq!(d, 0.0);
        assert_eq!(a, b);
        let s = schatten_of(&a.gram()).unwrap();
        assert_relative_eq!(s.s1, a.norm_sq(), max_relative = 1e-10);
        let (a, b, d) = sine_rank_one(&v, 2.0, 1.0, &g);
        let diff = a.gram() - b.gram();
        assert_relative_eq!(schatten_of(&diff).unwrap().s1, d, max_relative = 1e-9);
    }

    #[test]
    fn functional_bound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let v = PotentialSpec::gaussian(c(-2.0, 1.0), 0.8, 1.0).unwrap();
        let g = QuadratureGrid::for_potential(&v, 400).unwrap();
        for p in [0.25, 0.5, 0.75] {
            let mp = v.moments(p).unwrap().weighted;
            for _ in 0..100 {
                let xi: f64 = rng.random_range(-30.0..30.0);
                let l = SineFunctional::new(&v, xi, &g);
                assert!(l.norm_sq() <= xi.abs().powf(p) * mp * (1.0 + 1e-8));
            }
        }
    }
}
