//! The Jost solution f(x, k) and the perturbation determinant a(k) = f(0, k).
//!
//! Two independent routes are provided. The default integrates the reduced
//! function m = f·e^{−ikx}, which satisfies m'' = V·m − 2ik·m', backward from
//! the truncation point. The second solves the Volterra equation
//!
//! ```text
//! m(x) = 1 + ∫_x^∞ φ(y − x)·V(y)·m(y) dy,   φ(d) = (e^{2ikd} − 1)/(2ik)
//! ```
//!
//! on composite Gauss panels by backward sweeps.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, State, Tolerance};
use crate::potential::{PotentialSpec, DEFAULT_TAIL_TOL};
use crate::quad::{self, GaussRule};
use crate::resolvent::{phi, Wavenumber};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ode,
    Volterra,
}

/// a(k) with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JostValue {
    pub k: Wavenumber,
    pub a: Complex64,
    pub err: f64,
    pub method: Method,
}

/// f and f' sampled on an ascending grid from 0 to the truncation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JostSolution {
    pub k: Wavenumber,
    pub grid: Vec<f64>,
    pub f_values: Vec<Complex64>,
    pub fprime_values: Vec<Complex64>,
    pub method: Method,
}

#[derive(Debug, Clone, Copy)]
pub struct JostSettings {
    pub ode: Tolerance,
    pub tail_tol: f64,
    pub volterra_tol: f64,
    pub volterra_max_sweeps: usize,
    pub panel_degree: usize,
}

impl Default for JostSettings {
    fn default() -> Self {
        Self {
            ode: Tolerance::default(),
            tail_tol: DEFAULT_TAIL_TOL,
            volterra_tol: 1e-12,
            volterra_max_sweeps: 200,
            panel_degree: 10,
        }
    }
}

/// Volterra output on the panel nodes plus the value at 0.
#[derive(Debug, Clone)]
pub struct VolterraResult {
    pub nodes: Vec<f64>,
    pub m: Vec<Complex64>,
    pub mp: Vec<Complex64>,
    pub m0: Complex64,
    pub mp0: Complex64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Reusable evaluator of a(k) for one potential.
#[derive(Debug, Clone)]
pub struct Jost {
    v: PotentialSpec,
    x_max: f64,
    // Interval ends from 0 to x_max, aligned to breakpoints.
    edges: Vec<f64>,
    k_min: f64,
    born_seed: bool,
    settings: JostSettings,
}

impl Jost {
    pub fn new(v: &PotentialSpec) -> Result<Self> {
        Self::with_settings(v, JostSettings::default())
    }

    pub fn with_settings(v: &PotentialSpec, settings: JostSettings) -> Result<Self> {
        v.validate()?;
        let mut x_max = v.truncation_point(settings.tail_tol);
        if x_max <= 0.0 {
            x_max = 1.0;
        }
        let mut edges = vec![0.0];
        edges.extend(v.breakpoints().into_iter().filter(|&b| b < x_max));
        edges.push(x_max);
        edges.dedup();
        // Only algebraic tails leave mass beyond x_max worth seeding; the
        // other families are truncated below tail_tol.
        let power = matches!(v, PotentialSpec::PowerTail { .. });
        let k_min = if power { 1e-3 * v.radius() } else { 0.0 };
        Ok(Self { v: v.clone(), x_max, edges, k_min, born_seed: power, settings })
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.v
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn settings(&self) -> &JostSettings {
        &self.settings
    }

    /// Smallest |k| accepted; nonzero only for algebraic tails.
    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    fn check(&self, k: Complex64) -> Result<()> {
        Wavenumber::new(k)?;
        if k.norm() < self.k_min {
            return Err(Error::InvalidWavenumber {
                re: k.re,
                im: k.im,
                reason: "|k| below the minimum for algebraic tails",
            });
        }
        Ok(())
    }

    /// Tail integrals (∫V, ∫e^{2ik(y−X)}V) over [X, ∞), zero unless seeded.
    fn tail(&self, k: Complex64) -> Result<(Complex64, Complex64)> {
        if self.born_seed {
            self.v.tail_integrals(self.x_max, k)
        } else {
            Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)))
        }
    }

    /// (m, m') at x_max to first order in the tail.
    fn seed(&self, k: Complex64) -> Result<State<2>> {
        let (t0, t1) = self.tail(k)?;
        let m = 1.0 + (t1 - t0) / (2.0 * Complex64::i() * k);
        Ok([m, -t1])
    }

    fn tail_error(&self, k: Complex64) -> f64 {
        if self.born_seed {
            (self.v.tail_mass(self.x_max) / k.norm()).powi(2)
        } else {
            0.0
        }
    }

    /// Integrates the m-system from x_max to 0 interval by interval,
    /// reporting the state at each point of `stops` (descending).
    fn integrate_m(
        &self,
        k: Complex64,
        tol: Tolerance,
        stops: &[f64],
        mut observe: impl FnMut(f64, &State<2>),
    ) -> Result<State<2>> {
        let two_ik = 2.0 * Complex64::i() * k;
        let mut y = self.seed(k)?;
        let mut stats = ode::Stats::default();
        let h0 = (0.5 / k.norm()).min(0.25 * self.v.length_scale());
        for w in self.edges.windows(2).rev() {
            let (lo, hi) = (w[0], w[1]);
            // Keep V on this interval's side of a jump at hi.
            let hi_in = f64::from_bits(hi.to_bits() - 1).max(lo);
            let rhs = |x: f64, s: &State<2>| -> State<2> {
                let vx = self.v.value(x.min(hi_in));
                [s[1], vx * s[0] - two_ik * s[1]]
            };
            y = ode::integrate(rhs, hi, lo, y, stops, tol, h0.min(hi - lo), &mut observe, &mut stats)?;
            if lo > 0.0 {
                observe(lo, &y);
            }
        }
        Ok(y)
    }

    /// a(k) by backward integration only; the fast path for root finding
    /// and contour integrals.
    pub fn a(&self, k: Complex64) -> Result<Complex64> {
        self.a_with_tolerance(k, self.settings.ode)
    }

    pub fn a_with_tolerance(&self, k: Complex64, tol: Tolerance) -> Result<Complex64> {
        self.check(k)?;
        if self.v.is_zero() {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok(self.integrate_m(k, tol, &[], |_, _| {})?[0])
    }

    /// a'(k) by a central difference along the real direction.
    pub fn derivative(&self, k: Complex64) -> Result<Complex64> {
        self.derivative_with_tolerance(k, self.settings.ode)
    }

    pub fn derivative_with_tolerance(&self, k: Complex64, tol: Tolerance) -> Result<Complex64> {
        let h = 1e-6 * (1.0 + k.norm());
        let up = self.a_with_tolerance(k + h, tol)?;
        let down = self.a_with_tolerance(k - h, tol)?;
        Ok((up - down) / (2.0 * h))
    }

    /// Panel edges for the Volterra discretization at this k.
    fn panel_edges(&self, k: Complex64) -> Vec<f64> {
        let h_max = (0.5 * self.v.length_scale()).min(1.0 / (k.norm() + self.v.sup_norm().sqrt()));
        let mut out = vec![0.0];
        for w in self.edges.windows(2) {
            let n = ((w[1] - w[0]) / h_max).ceil().max(1.0) as usize;
            for j in 1..=n {
                out.push(if j == n { w[1] } else { w[0] + (w[1] - w[0]) * j as f64 / n as f64 });
            }
        }
        out
    }

    /// Solves the Volterra equation for m on Gauss panels.
    pub fn volterra(&self, k: Complex64) -> Result<VolterraResult> {
        self.check(k)?;
        let rule = GaussRule::new(self.settings.panel_degree);
        let q = rule.len();
        let edges = self.panel_edges(k);
        let (nodes, weights) = quad::composite_gauss(&edges, &rule);
        let vals: Vec<Complex64> = nodes.iter().map(|&x| self.v.value(x)).collect();
        let n_panels = edges.len() - 1;

        let mut cache: HashMap<u64, LocalOps> = HashMap::new();
        for w in edges.windows(2) {
            let h = w[1] - w[0];
            cache.entry(h.to_bits()).or_insert_with(|| LocalOps::new(k, h, &rule));
        }

        let (t0, t1) = self.tail(k)?;
        let two_ik = 2.0 * Complex64::i() * k;
        let d_tail = (t1 - t0) / two_ik;

        let one = Complex64::new(1.0, 0.0);
        let mut m = vec![one; nodes.len()];
        let mut mp = vec![Complex64::new(0.0, 0.0); nodes.len()];
        let mut g: Vec<Complex64> = vals.clone();
        let mut m0 = one;
        let mut mp0 = Complex64::new(0.0, 0.0);
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < self.settings.volterra_max_sweeps {
            sweeps += 1;
            let (mut d, mut f, mut gg) = (d_tail, t0, t1);
            let mut change = 0.0_f64;
            let mut size = 1.0_f64;
            for p in (0..n_panels).rev() {
                let ops = &cache[&(edges[p + 1] - edges[p]).to_bits()];
                let base = p * q;
                let gp = &g[base..base + q];
                for i in 0..q {
                    let mut s0 = Complex64::new(0.0, 0.0);
                    let mut s1 = Complex64::new(0.0, 0.0);
                    for (j, g) in gp.iter().enumerate() {
                        s0 += ops.s0[i * q + j] * g;
                        s1 += ops.s1[i * q + j] * g;
                    }
                    let mi = one + s0 + ops.e_end[i] * d + ops.phi_end[i] * f;
                    let mpi = -(s1 + ops.e_end[i] * gg);
                    change = change.max((mi - m[base + i]).norm());
                    size = size.max(mi.norm());
                    m[base + i] = mi;
                    mp[base + i] = mpi;
                }
                for i in 0..q {
                    g[base + i] = vals[base + i] * m[base + i];
                }
                let gp = &g[base..base + q];
                let (mut sd, mut sf, mut sg) =
                    (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                for j in 0..q {
                    sd += ops.w_phi[j] * gp[j];
                    sf += gp[j] * weights[base + j];
                    sg += ops.w_exp[j] * gp[j];
                }
                d = sd + ops.e_h * d + ops.phi_h * f;
                f = sf + f;
                gg = sg + ops.e_h * gg;
            }
            let new_m0 = one + d;
            change = change.max((new_m0 - m0).norm());
            m0 = new_m0;
            mp0 = -gg;
            if change < self.settings.volterra_tol * size {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("volterra sweeps did not converge at k = {k}");
        }
        Ok(VolterraResult { nodes, m, mp, m0, mp0, sweeps, converged })
    }

    /// f and f' on the Volterra node grid plus both endpoints.
    pub fn solution(&self, k: Complex64, method: Method) -> Result<JostSolution> {
        self.check(k)?;
        let wk = Wavenumber::new(k)?;
        let vol = self.volterra(k)?;
        let mut grid = Vec::with_capacity(vol.nodes.len() + 2);
        grid.push(0.0);
        grid.extend_from_slice(&vol.nodes);
        grid.push(self.x_max);
        let seed = self.seed(k)?;
        let (ms, mps): (Vec<Complex64>, Vec<Complex64>) = match method {
            Method::Volterra => {
                let mut ms = vec![vol.m0];
                ms.extend_from_slice(&vol.m);
                ms.push(seed[0]);
                let mut mps = vec![vol.mp0];
                mps.extend_from_slice(&vol.mp);
                mps.push(seed[1]);
                (ms, mps)
            }
            Method::Ode => {
                let mut stops: Vec<f64> = vol.nodes.clone();
                stops.extend(self.edges.iter().copied().filter(|&e| e > 0.0 && e < self.x_max));
                stops.sort_by(|a, b| b.total_cmp(a));
                stops.dedup();
                let mut seen: Vec<(f64, State<2>)> = Vec::with_capacity(stops.len());
                let end = self.integrate_m(k, self.settings.ode, &stops, |x, y| seen.push((x, *y)))?;
                seen.sort_by(|a, b| a.0.total_cmp(&b.0));
                let lookup = |x: f64| -> Result<State<2>> {
                    let i = seen.partition_point(|s| s.0 < x);
                    match seen.get(i) {
                        Some(s) if s.0 == x => Ok(s.1),
                        _ => Err(Error::Integrator { x, reason: "grid node was not visited".into() }),
                    }
                };
                let mut ms = vec![end[0]];
                let mut mps = vec![end[1]];
                for &x in &vol.nodes {
                    let s = lookup(x)?;
                    ms.push(s[0]);
                    mps.push(s[1]);
                }
                ms.push(seed[0]);
                mps.push(seed[1]);
                (ms, mps)
            }
        };
        let i = Complex64::i();
        let mut f_values = Vec::with_capacity(grid.len());
        let mut fprime_values = Vec::with_capacity(grid.len());
        for ((&x, &m), &mp) in grid.iter().zip(&ms).zip(&mps) {
            let e = (i * k * x).exp();
            f_values.push(e * m);
            fprime_values.push(e * (mp + i * k * m));
        }
        Ok(JostSolution { k: wk, grid, f_values, fprime_values, method })
    }

    /// a(k) by both routes; err = |a_ode − a_volterra| plus the neglected
    /// second-order tail where one was seeded.
    pub fn value(&self, k: Complex64) -> Result<JostValue> {
        let wk = Wavenumber::new(k)?;
        let a_ode = self.a(k)?;
        let vol = self.volterra(k)?;
        let err = (a_ode - vol.m0).norm() + self.tail_error(k);
        Ok(JostValue { k: wk, a: a_ode, err, method: Method::Ode })
    }
}

/// Per-panel operators of the Volterra sweep, shared by panels of equal
/// length.
#[derive(Debug)]
struct LocalOps {
    // ∫_{u_i}^h φ(y − u_i)ℓ_j(y)dy and ∫_{u_i}^h e^{2ik(y−u_i)}ℓ_j(y)dy, row-major.
    s0: Vec<Complex64>,
    s1: Vec<Complex64>,
    e_end: Vec<Complex64>,
    phi_end: Vec<Complex64>,
    w_phi: Vec<Complex64>,
    w_exp: Vec<Complex64>,
    e_h: Complex64,
    phi_h: Complex64,
}

impl LocalOps {
    fn new(k: Complex64, h: f64, rule: &GaussRule) -> Self {
        let q = rule.len();
        let two_ik = 2.0 * Complex64::i() * k;
        let u: Vec<f64> = rule.mapped(0.0, h).map(|p| p.0).collect();
        let w: Vec<f64> = rule.mapped(0.0, h).map(|p| p.1).collect();
        let bary = quad::barycentric_weights(&u);
        let fine = GaussRule::new(2 * q);
        let mut s0 = vec![Complex64::new(0.0, 0.0); q * q];
        let mut s1 = vec![Complex64::new(0.0, 0.0); q * q];
        let mut basis = vec![0.0; q];
        for i in 0..q {
            for (y, wy) in fine.mapped(u[i], h) {
                quad::lagrange_basis(&u, &bary, y, &mut basis);
                let p = phi(k, y - u[i]) * wy;
                let e = (two_ik * (y - u[i])).exp() * wy;
                for j in 0..q {
                    s0[i * q + j] += p * basis[j];
                    s1[i * q + j] += e * basis[j];
                }
            }
        }
        Self {
            s0,
            s1,
            e_end: u.iter().map(|&x| (two_ik * (h - x)).exp()).collect(),
            phi_end: u.iter().map(|&x| phi(k, h - x)).collect(),
            w_phi: u.iter().zip(&w).map(|(&x, &wx)| phi(k, x) * wx).collect(),
            w_exp: u.iter().zip(&w).map(|(&x, &wx)| (two_ik * x).exp() * wx).collect(),
            e_h: (two_ik * h).exp(),
            phi_h: phi(k, h),
        }
    }
}

/// The Jost solution by backward integration, sampled on the Volterra grid.
pub fn jost_solution(v: &PotentialSpec, k: Wavenumber) -> Result<JostSolution> {
    Jost::new(v)?.solution(k.value(), Method::Ode)
}

/// a(k) = f(0, k), cross-checked against the Volterra route.
pub fn jost_function(v: &PotentialSpec, k: Wavenumber) -> Result<JostValue> {
    Jost::new(v)?.value(k.value())
}
