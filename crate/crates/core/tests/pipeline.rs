//! End-to-end checks through the public API, each against a route that
//! shares no code with the one under test.

use jostlab::blaschke::ZeroSet;
use jostlab::bs_operator::{self, QuadratureGrid};
use jostlab::spectra;
use jostlab::traceform::{self, ContourSpec};
use jostlab::{jost_function, Jost, PotentialSpec, Wavenumber};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// f(0, k) for V = value on [0, width], matched by hand at x = width.
fn well_a(value: Complex64, width: f64, k: Complex64) -> Complex64 {
    let q = (k * k - value).sqrt();
    let e = (c(0.0, 1.0) * k * width).exp();
    let sinc = if q.norm() < 1e-12 { c(width, 0.0) } else { (q * width).sin() / q };
    e * ((q * width).cos() - c(0.0, 1.0) * k * sinc)
}

/// Dirichlet bound state of V = −v0 on [0, 1]: √(v0−κ²)·cot √(v0−κ²) = −κ,
/// bracketed on the branch with one root.
fn bisect_bound_state(v0: f64) -> f64 {
    let g = |kappa: f64| {
        let s = (v0 - kappa * kappa).sqrt();
        s * s.cos() + kappa * s.sin()
    };
    let (mut lo, mut hi) = (1e-9, v0.sqrt() - 1e-12);
    assert!(g(lo) * g(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn well_bound_state_matches_transcendental_root() {
    let kappa = bisect_bound_state(4.0);
    assert!((kappa - 0.6380450482852377).abs() < 1e-12);
    let v = PotentialSpec::well(c(-4.0, 0.0), 1.0).unwrap();
    let pts = spectra::find_spectrum(&v).unwrap();
    assert_eq!(pts.len(), 1);
    assert!((pts[0].k - c(0.0, kappa)).norm() < 1e-9, "{}", pts[0].k);
    assert!((pts[0].lambda + kappa * kappa).norm() < 1e-8);
}

#[test]
fn jost_function_matches_matched_solution() {
    let value = c(-3.0, 2.0);
    let v = PotentialSpec::well(value, 1.5).unwrap();
    for k in [c(0.3, 0.0), c(-2.0, 0.0), c(1.0, 0.7), c(-0.4, 2.5), c(6.0, 0.1)] {
        let got = jost_function(&v, Wavenumber::new(k).unwrap()).unwrap().a;
        let want = well_a(value, 1.5, k);
        assert!((got - want).norm() < 1e-8 * (1.0 + want.norm()), "k={k}: {got} vs {want}");
    }
}

#[test]
fn every_zero_found_is_a_zero_of_the_closed_form() {
    let value = c(-10.0, 3.0);
    let v = PotentialSpec::well(value, 1.0).unwrap();
    let pts = spectra::find_spectrum(&v).unwrap();
    assert!(!pts.is_empty());
    let m1 = v.l1();
    for p in &pts {
        assert!(well_a(value, 1.0, p.k).norm() < 1e-7, "{}", p.k);
        assert!(p.lambda.norm() <= m1 * m1);
    }
}

#[test]
fn trace_identity_holds_for_a_complex_step() {
    let v = PotentialSpec::step(vec![
        jostlab::Segment::new(0.0, 0.5, c(-6.0, 0.0)),
        jostlab::Segment::new(0.5, 1.5, c(2.0, 3.0)),
    ])
    .unwrap();
    let rep = traceform::trace_report(&v).unwrap();
    assert!(rep.converged);
    assert!(rep.discrepancy <= 1e-5 * (1.0 + rep.lhs.abs()), "{rep:?}");

    // The left side recomputed from the zeros alone.
    let r = rep.radius;
    let pi = std::f64::consts::PI;
    let lhs: f64 = rep.zeros.iter().map(|z| 2.0 * pi * r * r * z.im - 2.0 * pi / 3.0 * z.powi(3).im).sum();
    assert!((lhs - rep.lhs).abs() < 1e-10 * (1.0 + lhs.abs()));
}

#[test]
fn contour_integral_of_blaschke_product_counts_its_zeros() {
    // B has the same zeros as a and no outer factor, so the identity holds
    // for it with nothing on the right but the zero sum.
    let zs = ZeroSet::new(vec![c(0.5, 0.4), c(-1.0, 0.25)]).unwrap();
    let spec = ContourSpec::new(3.0);
    let got = traceform::contour_log_integral(|k| zs.eval(k), &spec).unwrap();
    let lhs = traceform::trace_lhs(&zs, 3.0);
    assert!((got.total.re - lhs).abs() < 1e-7 * (1.0 + lhs.abs()), "{} vs {lhs}", got.total);
}

#[test]
fn perturbation_determinant_agrees_with_jost_function() {
    let v = PotentialSpec::gaussian(c(-3.0, 1.0), 1.0, 1.0).unwrap();
    let jost = Jost::new(&v).unwrap();
    for k in [c(0.8, 0.3), c(-1.5, 1.0), c(0.1, 2.0)] {
        let w = Wavenumber::new(k).unwrap();
        let d = bs_operator::perturbation_det_extrapolated(&v, w, 200).unwrap();
        let a = jost.a(k).unwrap();
        assert!((d - a).norm() < 1e-6 * a.norm(), "k={k}: {d} vs {a}");
    }
}

#[test]
fn operator_norms_respect_the_l1_bound() {
    let v = PotentialSpec::exp_decay(c(-3.0, -1.0), 1.5).unwrap();
    let grid = QuadratureGrid::for_potential(&v, 200).unwrap();
    for k in [c(0.05, 0.0), c(1.0, 0.0), c(-2.0, 0.0), c(0.5, 0.5)] {
        let m = bs_operator::discretize(&v, Wavenumber::new(k).unwrap(), &grid).unwrap();
        let s = bs_operator::schatten_report(&m).unwrap();
        let bound = v.l1() / k.norm();
        assert!(s.opnorm <= s.s2 * (1.0 + 1e-12) && s.s2 <= bound * (1.0 + 1e-8), "k={k}");
    }
}
