//! Executes the configured tasks for every (potential, scalar) pair.

use std::collections::BTreeMap;

use jostlab::blaschke::ZeroSet;
use jostlab::bs_operator::{self, QuadratureGrid, SineFunctional};
use jostlab::oracle;
use jostlab::spectra::{self, SearchRegion, SpectralPoint};
use jostlab::traceform::{self, ContourSpec};
use jostlab::{Jost, PotentialSpec, Wavenumber};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{RunConfig, Task};
use crate::report::{
    scalar_label, BoundSample, BoundsSummary, Check, ConstantEstimate, Failure, JobReport, Report, Skipped,
    SpectrumSummary, Summary, TheoremRow, SCHEMA_VERSION,
};

/// |Im λ| ≤ this·|λ| counts as a real eigenvalue.
const REAL_LAMBDA: f64 = 1e-9;
/// Smallest Im k/R among the sampled wavenumbers off the axis.
const DET_MIN_IM: f64 = 0.1;

struct Outcome {
    job: JobReport,
    points: Option<Vec<SpectralPoint>>,
    checks: Vec<Check>,
    errors: Vec<Failure>,
    skipped: Vec<Skipped>,
    arc_c: Option<(f64, f64)>,
    scaling: Option<(f64, f64)>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    id: &'a str,
    c: [f64; 2],
    out: Outcome,
}

impl Ctx<'_> {
    fn check(&mut self, name: &str, module: &'static str, passed: bool, observed: f64, expected: f64, detail: String) {
        self.out.checks.push(Check {
            name: name.to_string(),
            module,
            potential: self.id.to_string(),
            c: self.c,
            passed,
            observed,
            expected,
            detail,
        });
    }

    /// observed ≤ expected, with NaN counted as a violation.
    fn check_le(&mut self, name: &str, module: &'static str, observed: f64, expected: f64, detail: String) {
        self.check(name, module, observed <= expected, observed, expected, detail);
    }

    fn error(&mut self, task: Task, e: impl std::fmt::Display) {
        self.out.errors.push(Failure {
            task: task.name().into(),
            potential: self.id.into(),
            c: self.c,
            message: e.to_string(),
        });
    }

    fn skip(&mut self, task: Task, reason: &str) {
        self.out.skipped.push(Skipped {
            task: task.name().into(),
            potential: self.id.into(),
            c: self.c,
            reason: reason.into(),
        });
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn run(cfg: &RunConfig) -> Report {
    let jobs: Vec<(usize, &String, &PotentialSpec, Complex64)> = cfg
        .potentials
        .iter()
        .flat_map(|(id, v)| cfg.sweep.iter().map(move |&c| (id, v, c)))
        .enumerate()
        .map(|(i, (id, v, c))| (i, id, v, c))
        .collect();
    let outcomes: Vec<Outcome> = jobs.par_iter().map(|&(i, id, v, c)| run_job(cfg, i, id, v, c)).collect();
    assemble(cfg, outcomes)
}

fn run_job(cfg: &RunConfig, index: usize, id: &str, base: &PotentialSpec, c: Complex64) -> Outcome {
    let v = if c == Complex64::new(1.0, 0.0) { base.clone() } else { base.scaled(c) };
    let m1 = v.l1();
    let mp = v.moments(cfg.p).ok().map(|m| m.weighted);
    let mut ctx = Ctx {
        cfg,
        id,
        c: pair(c),
        out: Outcome {
            job: JobReport { potential: id.into(), c: pair(c), m1, mp, spectrum: None, trace: None, bounds: None },
            points: None,
            checks: Vec::new(),
            errors: Vec::new(),
            skipped: Vec::new(),
            arc_c: None,
            scaling: None,
        },
    };
    log::info!("{id} c={}", scalar_label(pair(c)));
    let jost = match Jost::new(&v) {
        Ok(j) => j,
        Err(e) => {
            for t in &cfg.tasks {
                ctx.error(*t, &e);
            }
            return ctx.out;
        }
    };
    if cfg.needs_spectrum() {
        spectrum_task(&mut ctx, &v, &jost);
    }
    if cfg.has(Task::Trace) {
        trace_task(&mut ctx, &v, &jost);
    }
    if cfg.has(Task::Bounds) {
        bounds_task(&mut ctx, &v, index);
    }
    if cfg.has(Task::Theorem) {
        theorem_checks(&mut ctx, &v);
    }
    ctx.out
}

fn spectrum_task(ctx: &mut Ctx, v: &PotentialSpec, jost: &Jost) {
    let sp = match spectra::search(jost, &SearchRegion::for_potential(v)) {
        Ok(s) => s,
        Err(e) => {
            ctx.error(Task::Spectrum, e);
            return;
        }
    };
    let m1 = v.l1();
    let tol = ctx.cfg.tolerances;
    if ctx.cfg.has(Task::Spectrum) {
        let worst = sp.points.iter().map(|p| p.residual).fold(0.0, f64::max);
        ctx.check_le("spectrum.residual", "spectra", worst, tol.residual, "max |a| at polished zeros".into());
        let count = sp.total_multiplicity();
        ctx.check(
            "spectrum.winding",
            "spectra",
            count == sp.winding,
            count as f64,
            sp.winding as f64,
            "zeros vs winding number".into(),
        );
        let disk = sp
            .points
            .iter()
            .filter(|p| p.lambda.im.abs() > REAL_LAMBDA * p.lambda.norm())
            .map(|p| p.lambda.norm() / (m1 * m1))
            .fold(0.0, f64::max);
        ctx.check_le("spectrum.disk", "spectra", disk, 1.0 + tol.bound_slack, "max |λ|/(∫|V|)² over non-real λ".into());
        // Real eigenvalues are only observed against the same radius.
        for p in sp.points.iter().filter(|p| p.lambda.im.abs() <= REAL_LAMBDA * p.lambda.norm() && p.k.norm() > m1) {
            log::warn!("{}: real eigenvalue {} lies outside |k| ≤ ∫|V| = {m1}", ctx.id, p.lambda);
        }
        if ctx.cfg.oracle {
            oracle_check(ctx, v, &sp.points);
        }
    }
    ctx.out.job.spectrum = Some(SpectrumSummary {
        points: sp.points.clone(),
        winding: sp.winding,
        evaluations: sp.evaluations,
        search_box: [sp.region.re_min, sp.region.re_max, sp.region.im_min, sp.region.im_max],
    });
    ctx.out.points = Some(sp.points);
}

fn oracle_check(ctx: &mut Ctx, v: &PotentialSpec, points: &[SpectralPoint]) {
    if !v.is_compact() {
        ctx.skip(Task::Spectrum, "finite-difference oracle needs compact support");
        return;
    }
    let r = ctx.cfg.resolution;
    let fd = match oracle::fd_spectrum(v, r.fd_length, r.fd_nodes) {
        Ok(f) => f,
        Err(e) => {
            ctx.error(Task::Spectrum, e);
            return;
        }
    };
    let ours: Vec<Complex64> =
        points.iter().flat_map(|p| std::iter::repeat_n(p.lambda, p.multiplicity as usize)).collect();
    let count_ok = ours.len() == fd.eigenvalues.len();
    ctx.check(
        "spectrum.oracle_count",
        "oracle",
        count_ok,
        fd.eigenvalues.len() as f64,
        ours.len() as f64,
        "finite-difference eigenvalue count".into(),
    );
    let worst = worst_match(&ours, &fd.eigenvalues);
    ctx.check_le("spectrum.oracle", "oracle", worst, ctx.cfg.tolerances.oracle, "max relative λ mismatch".into());
}

/// Largest relative distance from each of `a` to its nearest unused partner
/// in `b`; infinite when `b` runs out.
pub fn worst_match(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|p, q| (p.1 - x).norm().total_cmp(&(q.1 - x).norm()));
        match best {
            Some((j, y)) => {
                used[j] = true;
                worst = worst.max((y - x).norm() / x.norm().max(f64::MIN_POSITIVE));
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

fn trace_task(ctx: &mut Ctx, v: &PotentialSpec, jost: &Jost) {
    if matches!(v, PotentialSpec::PowerTail { .. }) {
        ctx.skip(Task::Trace, "a(k) is not available down to k = 0 for algebraic tails");
        return;
    }
    let Some(points) = ctx.out.points.clone() else {
        ctx.skip(Task::Trace, "no spectrum");
        return;
    };
    let radius = if v.is_zero() { 1.0 } else { v.radius() };
    let rep = match traceform::trace_report_with(jost, &points, &ContourSpec::new(radius)) {
        Ok(r) => r,
        Err(e) => {
            ctx.error(Task::Trace, e);
            return;
        }
    };
    let rel = rep.discrepancy / (1.0 + rep.lhs.abs());
    let tol = ctx.cfg.tolerances.trace;
    ctx.check_le(
        "trace.identity",
        "traceform",
        rel,
        tol,
        format!("lhs {} rhs {} R {} converged {}", rep.lhs, rep.rhs, rep.radius, rep.converged),
    );
    if !v.is_zero() && rep.n_arc >= 128 {
        // Arc term against πR²∫|V|, and the same at half the nodes.
        let scale = std::f64::consts::PI * rep.radius * rep.radius * v.l1();
        let mut spec = ContourSpec::new(rep.radius);
        if rep.near_resonance {
            spec.grading += 1.0;
        }
        match traceform::contour_log_integral_at(|k| jost.a(k), &spec, rep.n_interval / 2, rep.n_arc / 2) {
            Ok(coarse) => {
                let fine = rep.arc_part.norm() / scale;
                let rough = coarse.arc.norm() / scale;
                ctx.out.arc_c = Some((fine, (fine - rough).abs() / fine.max(f64::MIN_POSITIVE)));
            }
            Err(e) => ctx.error(Task::Trace, e),
        }
    }
    ctx.out.job.trace = Some(rep);
}

/// Sample wavenumbers in units of R: four real, one negative real, three
/// in the open upper half-plane.
const BOUND_KS: [(f64, f64); 8] =
    [(0.01, 0.0), (0.1, 0.0), (0.5, 0.0), (1.0, 0.0), (-0.3, 0.0), (0.2, 0.1), (-0.4, 0.3), (0.05, 0.5)];

fn bounds_task(ctx: &mut Ctx, v: &PotentialSpec, index: usize) {
    if v.is_zero() {
        ctx.skip(Task::Bounds, "V = 0");
        return;
    }
    let res = ctx.cfg.resolution;
    let tol = ctx.cfg.tolerances;
    let m1 = v.l1();
    let r = v.radius();
    let grid = match QuadratureGrid::for_potential(v, res.bs_nodes) {
        Ok(g) => g,
        Err(e) => return ctx.error(Task::Bounds, e),
    };
    // The grid stops at x_max; compare with a(k) only when the mass cut off
    // there is negligible at the sampled |k|.
    let cut = v.tail_mass(grid.x_max) / (DET_MIN_IM * r).min(1.0);
    let compare_det = cut <= 0.1 * tol.determinant;
    if !compare_det {
        ctx.skip(
            Task::Bounds,
            &format!("determinant vs a(k): tail mass beyond the grid is {:.1e}", v.tail_mass(grid.x_max)),
        );
    }
    let mut samples = Vec::new();
    let (mut op, mut hs, mut det_ratio, mut det_err) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (re, im) in BOUND_KS {
        let k = Complex64::new(re * r, im * r);
        let step = (|| -> jostlab::Result<BoundSample> {
            let w = Wavenumber::new(k)?;
            let m = bs_operator::discretize(v, w, &grid)?;
            let s = bs_operator::schatten_report(&m)?;
            let det = bs_operator::perturbation_det(&m)?;
            let jost = if im > 0.0 && compare_det {
                Some((jostlab::jost_function(v, w)?.a, bs_operator::perturbation_det_extrapolated(v, w, res.bs_nodes)?))
            } else {
                None
            };
            Ok(BoundSample {
                k: pair(k),
                opnorm: s.opnorm,
                s2: s.s2,
                s1: s.s1,
                bound: m1 / k.norm(),
                det: pair(det),
                jost: jost.map(|j| pair(j.0)),
                det_extrapolated: jost.map(|j| pair(j.1)),
            })
        })();
        match step {
            Ok(b) => {
                op = op.max(b.opnorm / b.bound);
                hs = hs.max(b.s2 / b.bound);
                let det = Complex64::new(b.det[0], b.det[1]);
                det_ratio = det_ratio.max(det.norm() / b.s1.exp());
                if let (Some(a), Some(d)) = (b.jost, b.det_extrapolated) {
                    let a = Complex64::new(a[0], a[1]);
                    det_err = det_err.max((Complex64::new(d[0], d[1]) - a).norm() / a.norm());
                }
                samples.push(b);
            }
            Err(e) => return ctx.error(Task::Bounds, e),
        }
    }
    let slack = 1.0 + tol.bound_slack;
    ctx.check_le("bounds.opnorm", "bs_operator", op, slack, "max ‖X‖·|k|/∫|V|".into());
    ctx.check_le("bounds.hilbert_schmidt", "bs_operator", hs, slack, "max ‖X‖₂·|k|/∫|V|".into());
    ctx.check_le("bounds.det_trace_norm", "bs_operator", det_ratio, slack, "max |det(I+UX)|/e^{‖X‖₁}".into());
    if compare_det {
        ctx.check_le(
            "bounds.determinant",
            "bs_operator",
            det_err,
            tol.determinant,
            format!("extrapolated det(I+UX) vs a(k) for Im k ≥ {DET_MIN_IM}·R"),
        );
    }

    let Some(mp) = ctx.out.job.mp else {
        ctx.skip(Task::Bounds, "∫x^p|V| diverges; functional and S1 scaling checks skipped");
        ctx.out.job.bounds = Some(BoundsSummary { nodes: res.bs_nodes, samples, s1_scaling: [f64::NAN; 2] });
        return;
    };
    let p = ctx.cfg.p;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed.wrapping_add(index as u64));
    let mut worst: f64 = 0.0;
    for _ in 0..res.functional_samples {
        let xi: f64 = rng.random_range(-3.0 * r..3.0 * r);
        let l = SineFunctional::new(v, xi, &grid);
        let cap = xi.abs().powf(p) * mp;
        if cap > 0.0 {
            worst = worst.max(l.norm_sq() / cap);
        }
    }
    ctx.check_le("bounds.functional", "bs_operator", worst, slack, "max ‖l_ξ‖²/(|ξ|^p ∫x^p|V|)".into());

    let mut sup = [0.0_f64; 2];
    for (slot, n) in [res.bs_nodes, 2 * res.bs_nodes].into_iter().enumerate() {
        let g = match QuadratureGrid::for_potential(v, n) {
            Ok(g) => g,
            Err(e) => return ctx.error(Task::Bounds, e),
        };
        for j in 0..res.scaling_points {
            let t = j as f64 / (res.scaling_points - 1) as f64;
            let k = r * 10f64.powf(-3.0 * (1.0 - t));
            let s1 = Wavenumber::from_parts(k, 0.0)
                .and_then(|w| bs_operator::discretize(v, w, &g))
                .and_then(|m| bs_operator::schatten_report(&m));
            match s1 {
                Ok(s) => sup[slot] = sup[slot].max(k.powf(1.0 - p) * s.s1 / mp),
                Err(e) => return ctx.error(Task::Bounds, e),
            }
        }
    }
    let change = (sup[1] - sup[0]).abs() / sup[1].max(f64::MIN_POSITIVE);
    ctx.check_le(
        "bounds.s1_scaling_stability",
        "bs_operator",
        change,
        tol.stability,
        format!("sup |k|^(1-p) s1/mp = {}", sup[1]),
    );
    ctx.out.scaling = Some((sup[1], change));
    ctx.out.job.bounds = Some(BoundsSummary { nodes: res.bs_nodes, samples, s1_scaling: sup });
}

/// Per-zero checks attached to the theorem rows.
fn theorem_checks(ctx: &mut Ctx, v: &PotentialSpec) {
    let Some(points) = ctx.out.points.clone() else { return };
    let m1 = v.l1();
    let r = v.radius();
    let slack = ctx.cfg.tolerances.bound_slack;
    let disk = points
        .iter()
        .filter(|p| p.lambda.im.abs() > REAL_LAMBDA * p.lambda.norm())
        .map(|p| p.k.norm() / m1)
        .fold(0.0, f64::max);
    ctx.check_le("theorem.disk", "harness", disk, 1.0 + slack, "max |k_j|/∫|V| over non-real λ".into());
    // Im(k³)/(3R²) ≤ Im(k)/4 whenever |k| ≤ R/2.
    let cubic = points
        .iter()
        .filter(|p| p.k.norm() <= 0.5 * r)
        .map(|p| (p.k * p.k * p.k).im / (3.0 * r * r) / (0.25 * p.k.im))
        .fold(0.0, f64::max);
    ctx.check_le("theorem.cubic", "harness", cubic, 1.0 + slack, "max (Im k³/3R²)/(Im k/4)".into());
    let outside = points.iter().filter(|p| p.k.norm() > 0.5 * r).count();
    ctx.check("theorem.cubic_premise", "harness", outside == 0, outside as f64, 0.0, "zeros with |k| > R/2".into());
}

/// One theorem row per job with a spectrum and a finite moment.
pub fn theorem_row(job: &JobReport, points: &[SpectralPoint], p: f64) -> Option<TheoremRow> {
    let mp = job.mp?;
    // An empty f64 sum is −0; adding 0 keeps the table free of "-0".
    let lhs = points.iter().map(|q| q.k.im * q.multiplicity as f64).sum::<f64>() + 0.0;
    let rhs_core = mp * job.m1.powf(p) + job.m1;
    let ratio = if rhs_core > 0.0 { lhs / rhs_core } else { 0.0 };
    Some(TheoremRow { id: job.potential.clone(), c: scalar_label(job.c), lhs, m1: job.m1, mp, rhs_core, ratio })
}

fn assemble(cfg: &RunConfig, outcomes: Vec<Outcome>) -> Report {
    let mut jobs = Vec::new();
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let mut skipped = Vec::new();
    let mut theorem = Vec::new();
    let (mut arc, mut arc_stab, mut have_arc) = (0.0_f64, 0.0_f64, false);
    let (mut scal, mut scal_stab, mut have_scal) = (0.0_f64, 0.0_f64, false);
    for o in outcomes {
        if let (true, Some(pts)) = (cfg.has(Task::Theorem), o.points.as_deref()) {
            match theorem_row(&o.job, pts, cfg.p) {
                Some(row) => theorem.push(row),
                None => skipped.push(Skipped {
                    task: "theorem".into(),
                    potential: o.job.potential.clone(),
                    c: o.job.c,
                    reason: format!("∫x^p|V| diverges at p = {}", cfg.p),
                }),
            }
        }
        if let Some((v, s)) = o.arc_c {
            arc = arc.max(v);
            arc_stab = arc_stab.max(s);
            have_arc = true;
        }
        if let Some((v, s)) = o.scaling {
            scal = scal.max(v);
            scal_stab = scal_stab.max(s);
            have_scal = true;
        }
        jobs.push(o.job);
        checks.extend(o.checks);
        errors.extend(o.errors);
        skipped.extend(o.skipped);
    }

    let mut constants = Vec::new();
    if have_arc {
        constants.push(ConstantEstimate { name: "arc_bound_C".into(), value: arc, stability: arc_stab });
    }
    if have_scal {
        constants.push(ConstantEstimate { name: "s1_scaling_C".into(), value: scal, stability: scal_stab });
    }
    if cfg.has(Task::Theorem) && !theorem.is_empty() {
        let mut by_id: BTreeMap<&str, Vec<&TheoremRow>> = BTreeMap::new();
        for row in &theorem {
            by_id.entry(row.id.as_str()).or_default().push(row);
        }
        for (id, rows) in by_id {
            let finite = rows.iter().all(|r| r.ratio.is_finite());
            let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
            checks.push(Check {
                name: "theorem.finite".into(),
                module: "harness",
                potential: id.into(),
                c: [f64::NAN; 2],
                passed: finite,
                observed: worst,
                expected: f64::INFINITY,
                detail: "every ratio finite".into(),
            });
            // Rows without zeros carry no information about the constant.
            let positive: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|&x| x > 0.0).collect();
            if positive.len() >= 2 {
                let hi = positive.iter().copied().fold(0.0, f64::max);
                let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
                let spread = hi / lo;
                checks.push(Check {
                    name: "theorem.spread".into(),
                    module: "harness",
                    potential: id.into(),
                    c: [f64::NAN; 2],
                    passed: spread <= cfg.tolerances.theorem_spread,
                    observed: spread,
                    expected: cfg.tolerances.theorem_spread,
                    detail: format!("max/min ratio over {} rows with zeros", positive.len()),
                });
            }
        }
        let value = theorem.iter().map(|r| r.ratio).fold(0.0, f64::max);
        // Zeros carry no resolution parameter to refine.
        constants.push(ConstantEstimate { name: "theorem_C".into(), value, stability: 0.0 });
    }
    if constants.iter().any(|c| !c.value.is_finite()) {
        for c in constants.iter().filter(|c| !c.value.is_finite()) {
            checks.push(Check {
                name: format!("constants.{}", c.name),
                module: "harness",
                potential: String::new(),
                c: [f64::NAN; 2],
                passed: false,
                observed: c.value,
                expected: f64::INFINITY,
                detail: "fitted constant must be finite".into(),
            });
        }
    }

    let summary = Summary {
        checks: checks.len(),
        failed: checks.iter().filter(|c| !c.passed).count(),
        errors: errors.len(),
        skipped: skipped.len(),
    };
    Report {
        schema_version: SCHEMA_VERSION,
        p: cfg.p,
        seed: cfg.seed,
        tasks: cfg.tasks.iter().map(|t| t.name().to_string()).collect(),
        jobs,
        theorem,
        constants,
        checks,
        errors,
        skipped,
        summary,
    }
}

/// Zero set of a job, for plotting.
pub fn zero_set(job: &JobReport) -> ZeroSet {
    job.spectrum.as_ref().and_then(|s| ZeroSet::from_spectrum(&s.points).ok()).unwrap_or_else(ZeroSet::empty)
}
