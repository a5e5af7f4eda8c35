mod common;

use std::f64::consts::PI;

use shapelab_core::distances::{ball_eigenfunction, d1, distance_report, matched_ball, GridField, GridSpec};
use shapelab_core::elliptic::{solve_spectrum, SpectralResult};
use shapelab_core::mesh::{assemble, triangulate, FemSystem};
use shapelab_core::{BallSpec, Error, FourierMode, Point, StarDomain};

fn solved(d: &StarDomain, h: f64) -> (FemSystem, SpectralResult) {
    let sys = assemble(triangulate(d, h).unwrap()).unwrap();
    let s = solve_spectrum(&sys).unwrap();
    (sys, s)
}

fn mode_domain(k: u32, t: f64) -> StarDomain {
    StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(k, t, 0.0)]).unwrap()
}

#[test]
fn matched_ball_examples() {
    let b = matched_ball(&StarDomain::disk(Point::ORIGIN, 1.0).unwrap());
    assert!(b.center.norm() < 1e-14 && (b.radius - 1.0).abs() < 1e-14);
    let b = matched_ball(&mode_domain(2, 0.1));
    assert!((b.radius - 1.005f64.sqrt()).abs() < 1e-12 && b.center.norm() < 1e-14);
    assert!((b.radius - 1.002497).abs() < 1e-6);
    let b = matched_ball(&StarDomain::disk(Point::new(2.0, 0.0), 1.0).unwrap());
    assert!(b.center.dist(Point::new(2.0, 0.0)) < 1e-12 && (b.radius - 1.0).abs() < 1e-12);
}

#[test]
fn ball_eigenfunction_matches_series_oracle() {
    let b = BallSpec::new(Point::ORIGIN, 1.3).unwrap();
    let j0 = common::j01();
    let norm = 1.0 / (1.3 * PI.sqrt() * common::bessel_j(1, j0));
    for r in [0.0, 0.3, 0.9, 1.29] {
        let exact = norm * common::bessel_j(0, j0 * r / 1.3);
        assert!((ball_eigenfunction(&b, Point::new(r, 0.0)) - exact).abs() < 1e-12);
    }
    assert_eq!(ball_eigenfunction(&b, Point::new(1.31, 0.0)), 0.0);
}

#[test]
fn disk_against_itself_is_within_floor() {
    let d = StarDomain::disk(Point::ORIGIN, 1.0).unwrap();
    let (sys, s) = solved(&d, 0.02);
    let b = BallSpec::new(Point::ORIGIN, 1.0).unwrap();
    assert!(d1(&sys, &s, &b, 0.01).unwrap() < 5e-3);
    let r = distance_report(&d, &sys, &s, None, None).unwrap();
    assert!(r.d0 < 5e-3 && r.d1 < 5e-3 && r.asym < 5e-3 && r.d_star_sq < 5e-3);
}

#[test]
fn shifted_ball_distance_is_linear_in_shift() {
    let d = StarDomain::disk(Point::ORIGIN, 1.0).unwrap();
    let (sys, s) = solved(&d, 0.01);
    let ratio = |t: f64| d1(&sys, &s, &BallSpec::new(Point::new(t, 0.0), 1.0).unwrap(), 0.005).unwrap() / t;
    let (r1, r2) = (ratio(0.05), ratio(0.025));
    let extrapolated = 2.0 * r2 - r1;
    let exact = (common::j01().powi(2) / 2.0).sqrt();
    assert!((exact - 1.70046).abs() < 1e-5);
    assert!((extrapolated / exact - 1.0).abs() < 1e-2, "{r1} {r2} -> {extrapolated} vs {exact}");
}

#[test]
fn d1_is_translation_invariant() {
    let d = StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(2, 0.06, 0.02)]).unwrap();
    let v = Point::new(0.37, -0.21);
    let (sys, s) = solved(&d, 0.02);
    let (tsys, ts) = solved(&d.translate(v), 0.02);
    let b = matched_ball(&d);
    let tb = BallSpec::new(b.center + v, b.radius).unwrap();
    let (a, c) = (d1(&sys, &s, &b, 0.01).unwrap(), d1(&tsys, &ts, &tb, 0.01).unwrap());
    assert!((a - c).abs() < 1e-3 * a, "{a} vs {c}");
}

#[test]
fn coarse_grids_are_rejected() {
    let d = StarDomain::disk(Point::ORIGIN, 1.0).unwrap();
    let (sys, s) = solved(&d, 0.05);
    let b = matched_ball(&d);
    assert!(matches!(d1(&sys, &s, &b, 0.03), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn report_for_perturbed_domain() {
    let d = mode_domain(2, 0.05);
    let (sys, s) = solved(&d, 0.02);
    let r = distance_report(&d, &sys, &s, None, None).unwrap();
    assert!(r.d0 > 0.0 && r.d1 > 0.0 && r.asym > 0.0);
    assert!(r.d_star_sq >= r.d1 * r.d1 && r.d_star_sq >= r.asym);
    let c = r.d_star_sq / (r.d0 * r.d0);
    eprintln!("d_star_sq / d0^2 = {c:.4}");
    assert!(c > 0.0 && c.is_finite());
    assert!((r.matched_ball.area() - d.area()).abs() < 1e-10);
    assert!(r.matched_ball.center.dist(d.barycenter()) < 1e-12);
}

#[test]
fn matched_ball_absorbs_dilation() {
    let d = StarDomain::disk(Point::ORIGIN, 1.05).unwrap();
    let (sys, s) = solved(&d, 0.02);
    let r = distance_report(&d, &sys, &s, None, None).unwrap();
    assert!(r.d0 < 5e-3 && r.d_star_sq < 5e-3, "{r:?}");
    assert!((r.matched_ball.radius - 1.05).abs() < 1e-12);
}

#[test]
fn sweep_invariants_and_grid_stability() {
    let mut c_emp = f64::INFINITY;
    for (k, t) in [(2, 0.05), (3, 0.05), (4, 0.03), (2, 0.1), (5, 0.02)] {
        let d = mode_domain(k, t);
        let (sys, s) = solved(&d, 0.02);
        let r = distance_report(&d, &sys, &s, None, None).unwrap();
        assert!(r.d0 >= 0.0 && r.d1 >= 0.0 && r.asym >= 0.0);
        assert!(r.d_star_sq >= r.d1 * r.d1 && r.d_star_sq >= r.asym);
        c_emp = c_emp.min(r.asym / (r.d0 * r.d0));
        let fine = distance_report(&d, &sys, &s, None, Some(0.005)).unwrap();
        assert!((fine.d1 / r.d1 - 1.0).abs() < 0.01, "k = {k}: {} vs {}", r.d1, fine.d1);
        eprintln!("k = {k}, t = {t}: d0^2 / d1^2 = {:.4}", (r.d0 / r.d1).powi(2));
    }
    eprintln!("asym >= {c_emp:.4} d0^2");
    assert!(c_emp > 0.0);
}

#[test]
fn grid_fields_integrate_exactly_on_constants() {
    let g = GridSpec::covering(Point::new(0.0, 0.0), Point::new(1.0, 1.0), 0.1);
    let f = GridField::from_fn(g, |_| 2.0);
    assert!((f.integral() - 2.0 * g.len() as f64 * 0.01).abs() < 1e-12);
    let z = GridField::from_fn(g, |_| 0.0);
    assert!((f.l2_difference(&z) - (4.0 * g.len() as f64 * 0.01).sqrt()).abs() < 1e-12);
}
