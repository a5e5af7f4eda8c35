mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;
use shapelab_core::distances::matched_ball;
use shapelab_core::geometry::{asymmetry, psi_eval, symmetric_difference_ball};
use shapelab_core::{BallSpec, Error, FourierMode, Point, PsiWeight, StarDomain};

fn domain(r0: f64, modes: &[(u32, f64, f64)]) -> StarDomain {
    let modes = modes.iter().map(|&(k, a, b)| FourierMode::new(k, a, b)).collect();
    StarDomain::new(Point::ORIGIN, r0, modes).unwrap()
}

fn unit_ball() -> BallSpec {
    BallSpec::new(Point::ORIGIN, 1.0).unwrap()
}

#[test]
fn area_examples() {
    assert!((domain(1.0, &[]).area() - PI).abs() < 1e-12);
    assert!((domain(2.0, &[]).area() - 4.0 * PI).abs() < 1e-12);
    let d = domain(1.0, &[(2, 0.1, 0.0)]);
    assert!((d.area() - PI * 1.005).abs() < 1e-12);
    assert!((d.area() - 3.157301).abs() < 1e-6);
}

#[test]
fn area_and_centroid_match_monte_carlo() {
    let d = domain(1.0, &[(1, 0.1, 0.0), (2, 0.05, -0.03), (3, 0.0, 0.04)]);
    let (a, cx, cy) =
        common::monte_carlo_moments(|x, y| d.contains(Point::new(x, y)), [-1.3, 1.3, -1.3, 1.3], 400_000, 11);
    let c = d.barycenter();
    assert!((a - d.area()).abs() < 0.015, "{a} vs {}", d.area());
    assert!((cx - c.x).abs() < 5e-3 && (cy - c.y).abs() < 5e-3, "({cx}, {cy}) vs {c:?}");
}

#[test]
fn barycenter_examples() {
    let c = domain(1.0, &[]).barycenter();
    assert!(c.norm() < 1e-14);
    let c = domain(1.0, &[(1, 0.1, 0.0)]).barycenter();
    let exact = (0.1 + 0.1f64.powi(3) / 4.0) / 1.005;
    assert!((c.x - exact).abs() < 1e-12 && c.y.abs() < 1e-14);
    assert!((c.x - 0.09975).abs() < 1e-5);
    let c = StarDomain::disk(Point::new(3.0, -1.0), 1.0).unwrap().barycenter();
    assert!(c.dist(Point::new(3.0, -1.0)) < 1e-12);
}

#[test]
fn symmetric_difference_examples() {
    let d = domain(1.0, &[]);
    assert!(symmetric_difference_ball(&d, &unit_ball()).value.abs() < 1e-14);

    let shifted = BallSpec::new(Point::new(0.1, 0.0), 1.0).unwrap();
    let lens = 2.0 * (PI - common::unit_lens(0.1));
    let e = symmetric_difference_ball(&d, &shifted);
    assert!((e.value - lens).abs() < 1e-9, "{} vs {lens}", e.value);
    assert!((e.value - 0.399834).abs() < 1e-6);

    let big = domain(1.05, &[]);
    let e = symmetric_difference_ball(&big, &unit_ball());
    assert!((e.value - PI * (1.05f64.powi(2) - 1.0)).abs() < 1e-12);
    assert!((e.value - 0.322013).abs() < 1e-6);
}

#[test]
fn symmetric_difference_falls_back_to_monte_carlo() {
    // the ball center lies outside the domain, so no common polar frame
    let d = domain(0.5, &[]);
    let b = BallSpec::new(Point::new(0.6, 0.0), 0.5).unwrap();
    let e = symmetric_difference_ball(&d, &b);
    assert!(e.monte_carlo);
    let exact = 2.0 * 0.25 * PI - 2.0 * 0.25 * common::unit_lens(0.6 / 0.5);
    assert!((e.value - exact).abs() < 4.0 * e.std_error + 1e-3, "{} ± {} vs {exact}", e.value, e.std_error);
}

#[test]
fn psi_examples() {
    let w = PsiWeight::new(unit_ball(), 0.2).unwrap();
    assert_eq!(psi_eval(&w, Point::new(1.0, 0.0)), 0.0);
    assert!((psi_eval(&w, Point::new(0.9, 0.0)) - 0.1).abs() < 1e-14);
    assert!((psi_eval(&w, Point::ORIGIN) - 0.327324).abs() < 1e-6);
    assert!((w.plateau - 0.2 * (1.0 + 2.0 / PI)).abs() < 1e-15);
    assert!((psi_eval(&w, Point::new(1.1, 0.0)) + 0.1).abs() < 1e-14);
}

#[test]
fn psi_profile_is_monotone_and_c1() {
    let w = PsiWeight::new(unit_ball(), 0.2).unwrap();
    let mut prev = 0.0;
    for i in 0..=1000 {
        let t = 0.6 * i as f64 / 1000.0;
        let f = w.profile(t);
        assert!(f >= prev - 1e-15);
        prev = f;
    }
    for knot in [0.2, 0.4] {
        let e = 1e-7;
        assert!((w.profile_derivative(knot - e) - w.profile_derivative(knot + e)).abs() < 1e-5);
        let fd = (w.profile(knot + e) - w.profile(knot - e)) / (2.0 * e);
        assert!((fd - w.profile_derivative(knot)).abs() < 1e-5);
    }
}

#[test]
fn asymmetry_examples() {
    let d = domain(1.0, &[]);
    assert!(asymmetry(&d, &unit_ball(), 0.2).unwrap().value.abs() < 1e-14);
    // ∫₀^{0.05} t · 2π(1 + t) dt
    let exact = 2.0 * PI * (0.05f64.powi(2) / 2.0 + 0.05f64.powi(3) / 3.0);
    let a = asymmetry(&domain(1.05, &[]), &unit_ball(), 0.2).unwrap().value;
    assert!((a - exact).abs() < 1e-12, "{a} vs {exact}");
    assert!((a - 0.008116).abs() < 1e-6);
}

#[test]
fn asymmetry_of_shifted_disk_matches_monte_carlo() {
    let d = domain(1.0, &[]);
    let b = BallSpec::new(Point::new(0.15, 0.05), 1.0).unwrap();
    let w = PsiWeight::new(b, 0.2).unwrap();
    let a = asymmetry(&d, &b, 0.2).unwrap().value;
    let n = 400_000;
    let mut rng = common::rng(5);
    let mut sum = 0.0;
    for _ in 0..n {
        let x = Point::new(rng.random_range(-1.3..1.3), rng.random_range(-1.3..1.3));
        if d.contains(x) != b.contains(x) {
            sum += psi_eval(&w, x).abs();
        }
    }
    let mc = sum / n as f64 * 2.6 * 2.6;
    assert!((a - mc).abs() < 2e-3 * a.max(1e-3) + 2e-4, "{a} vs {mc}");
}

#[test]
fn invalid_domains_are_rejected() {
    let r = StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(2, 0.95, 0.0)]);
    assert!(matches!(r, Err(Error::StarShapeViolation { .. })));
    assert!(StarDomain::new(Point::ORIGIN, -1.0, vec![]).is_err());
    assert!(StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(0, 0.1, 0.0)]).is_err());
    assert!(StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(33, 0.01, 0.0)]).is_err());
    assert!(BallSpec::new(Point::ORIGIN, 0.0).is_err());
    assert!(PsiWeight::new(unit_ball(), 0.0).is_err());
}

#[test]
fn domain_round_trips_through_toml() {
    let d = StarDomain::new(Point::new(0.5, -0.25), 1.1, vec![FourierMode::new(2, 0.05, -0.02)]).unwrap();
    let text = toml::to_string(&d).unwrap();
    let back: StarDomain = toml::from_str(&text).unwrap();
    assert_eq!(d, back);
    let bad = "center = [0.0, 0.0]\nr0 = 1.0\nmodes = [[2, 0.95, 0.0]]\n";
    assert!(toml::from_str::<StarDomain>(bad).is_err());
}

#[test]
fn asymmetry_is_comparable_to_squared_symmetric_difference() {
    // normal-graph perturbations with ‖ξ‖∞ ≤ c0/2 about the matched ball
    let mut rng = common::rng(21);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..40 {
        let modes: Vec<(u32, f64, f64)> =
            (2..=4).map(|k| (k, rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.03))).collect();
        let d = domain(1.0, &modes);
        let b = matched_ball(&d);
        let d0 = symmetric_difference_ball(&d, &b).value;
        let a = asymmetry(&d, &b, 0.2 * b.radius).unwrap().value;
        let ratio = a / (d0 * d0);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let c = hi.max(1.0 / lo);
    eprintln!("asymmetry / d0^2 in [{lo:.4}, {hi:.4}], C = {c:.3}");
    assert!(c < 20.0);
}

fn arb_domain() -> impl Strategy<Value = StarDomain> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        0.5..2.0f64,
        proptest::collection::vec((1u32..6, -0.08..0.08f64, -0.08..0.08f64), 0..4),
    )
        .prop_map(|(cx, cy, r0, modes)| {
            let modes = modes.into_iter().map(|(k, a, b)| FourierMode::new(k, a, b)).collect();
            StarDomain::new(Point::new(cx, cy), r0, modes).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_equivariance(d in arb_domain(), vx in -3.0..3.0f64, vy in -3.0..3.0f64) {
        let v = Point::new(vx, vy);
        let t = d.translate(v);
        prop_assert!((t.area() - d.area()).abs() < 1e-10 * d.area());
        prop_assert!(t.barycenter().dist(d.barycenter() + v) < 1e-10);
        let b = matched_ball(&d);
        let tb = BallSpec::new(b.center + v, b.radius).unwrap();
        let s0 = symmetric_difference_ball(&d, &b).value;
        let s1 = symmetric_difference_ball(&t, &tb).value;
        prop_assert!((s0 - s1).abs() < 1e-10);
    }

    #[test]
    fn dilation_scales_area(d in arb_domain(), s in 0.2..3.0f64) {
        let a = d.dilate(s).unwrap().area();
        prop_assert!((a / (s * s * d.area()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetry_is_nonnegative_and_detects_difference(d in arb_domain()) {
        let b = matched_ball(&d);
        let a = asymmetry(&d, &b, 0.2 * b.radius).unwrap().value;
        let d0 = symmetric_difference_ball(&d, &b).value;
        prop_assert!(a >= 0.0);
        if d0 > 1e-9 {
            prop_assert!(a > 0.0);
        } else {
            prop_assert!(a < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_area_and_rotates_barycenter(d in arb_domain(), angle in -PI..PI) {
        let r = d.rotate(angle);
        prop_assert!((r.area() - d.area()).abs() < 1e-10 * d.area());
        prop_assert!(r.barycenter().dist(d.barycenter().rotated(angle)) < 1e-10);
    }
}
