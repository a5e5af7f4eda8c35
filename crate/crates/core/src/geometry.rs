//! Star-shaped Fourier domains, balls, and the exact-quadrature geometry
//! built on them: area, barycenter, perimeter, symmetric differences and the
//! smoothed signed-distance asymmetry.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_panel, periodic_trapezoid, periodic_with_breaks, PERIODIC_POINTS};

/// Lower bound on `1 + xi(theta)` accepted by [`StarDomain::new`].
pub const STAR_FLOOR: f64 = 0.1;
/// Largest Fourier wavenumber accepted in a domain description.
pub const MAX_MODE: u32 = 32;
/// Sample count for the Monte-Carlo fallback.
pub const MONTE_CARLO_SAMPLES: usize = 1_000_000;

const MONTE_CARLO_SEED: u64 = 0x005e_ed0f_5a3d;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise rotation about the origin.
    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// One term `a cos k(θ-φ) + b sin k(θ-φ)` of a Fourier series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(u32, f64, f64)", into = "(u32, f64, f64)")]
pub struct FourierMode {
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

impl FourierMode {
    pub const fn new(k: u32, a: f64, b: f64) -> Self {
        Self { k, a, b }
    }

    pub fn value(&self, theta: f64) -> f64 {
        let (s, c) = (self.k as f64 * theta).sin_cos();
        self.a * c + self.b * s
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let k = self.k as f64;
        let (s, c) = (k * theta).sin_cos();
        k * (self.b * c - self.a * s)
    }

    /// Coefficients of the same function written in a frame whose phase is
    /// `delta` larger, i.e. `g(θ - φ) = g'(θ - φ - δ)` becomes
    /// `g(θ' + δ)` in terms of `θ' = θ - φ - δ`.
    pub fn shifted(&self, delta: f64) -> Self {
        let (s, c) = (self.k as f64 * delta).sin_cos();
        Self::new(self.k, self.a * c + self.b * s, self.b * c - self.a * s)
    }
}

impl From<(u32, f64, f64)> for FourierMode {
    fn from((k, a, b): (u32, f64, f64)) -> Self {
        Self::new(k, a, b)
    }
}

impl From<FourierMode> for (u32, f64, f64) {
    fn from(m: FourierMode) -> Self {
        (m.k, m.a, m.b)
    }
}

/// Adds `scale * m` into a mode list, merging equal wavenumbers.
pub(crate) fn accumulate_mode(modes: &mut Vec<FourierMode>, m: FourierMode, scale: f64) {
    if let Some(existing) = modes.iter_mut().find(|e| e.k == m.k) {
        existing.a += scale * m.a;
        existing.b += scale * m.b;
    } else {
        modes.push(FourierMode::new(m.k, scale * m.a, scale * m.b));
        modes.sort_by_key(|e| e.k);
    }
}

/// Planar domain `{center + ρ(cos θ, sin θ) : ρ < r(θ)}` with
/// `r(θ) = r0 (1 + ξ(θ - phase))` and `ξ` a finite Fourier series.
///
/// `phase` rotates the body frame; meshes are built in the body frame so a
/// rotated domain is discretized identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StarDomainRecord", into = "StarDomainRecord")]
pub struct StarDomain {
    center: Point,
    r0: f64,
    modes: Vec<FourierMode>,
    phase: f64,
}

#[derive(Serialize, Deserialize)]
struct StarDomainRecord {
    #[serde(default)]
    center: Point,
    r0: f64,
    #[serde(default)]
    modes: Vec<FourierMode>,
    #[serde(default, skip_serializing_if = "is_zero")]
    phase: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl TryFrom<StarDomainRecord> for StarDomain {
    type Error = Error;
    fn try_from(r: StarDomainRecord) -> Result<Self> {
        StarDomain::with_phase(r.center, r.r0, r.modes, r.phase)
    }
}

impl From<StarDomain> for StarDomainRecord {
    fn from(d: StarDomain) -> Self {
        Self { center: d.center, r0: d.r0, modes: d.modes, phase: d.phase }
    }
}

impl StarDomain {
    pub fn new(center: Point, r0: f64, modes: Vec<FourierMode>) -> Result<Self> {
        Self::with_phase(center, r0, modes, 0.0)
    }

    pub fn with_phase(center: Point, r0: f64, modes: Vec<FourierMode>, phase: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidDomain(format!("r0 must be positive, got {r0}")));
        }
        if !(center.x.is_finite() && center.y.is_finite() && phase.is_finite()) {
            return Err(Error::InvalidDomain("non-finite center or phase".into()));
        }
        let mut merged: Vec<FourierMode> = Vec::with_capacity(modes.len());
        for m in modes {
            if m.k == 0 || m.k > MAX_MODE {
                return Err(Error::InvalidDomain(format!("mode wavenumber {} outside 1..={MAX_MODE}", m.k)));
            }
            if !(m.a.is_finite() && m.b.is_finite()) {
                return Err(Error::InvalidDomain(format!("non-finite coefficient for k = {}", m.k)));
            }
            accumulate_mode(&mut merged, m, 1.0);
        }
        let d = Self { center, r0, modes: merged, phase };
        let min = d.min_relative_radius();
        if min < STAR_FLOOR {
            return Err(Error::StarShapeViolation { min, floor: STAR_FLOOR });
        }
        Ok(d)
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, Vec::new())
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn max_wavenumber(&self) -> u32 {
        self.modes.iter().map(|m| m.k).max().unwrap_or(0)
    }

    /// Relative perturbation ξ at absolute angle θ.
    pub fn xi(&self, theta: f64) -> f64 {
        let t = theta - self.phase;
        self.modes.iter().map(|m| m.value(t)).sum()
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.r0 * (1.0 + self.xi(theta))
    }

    pub fn radius_derivative(&self, theta: f64) -> f64 {
        let t = theta - self.phase;
        self.r0 * self.modes.iter().map(|m| m.derivative(t)).sum::<f64>()
    }

    pub fn boundary_point(&self, theta: f64) -> Point {
        self.center + Point::polar(self.radius(theta), theta)
    }

    /// dP/dθ of the boundary parametrization.
    pub fn boundary_tangent(&self, theta: f64) -> Point {
        let (s, c) = theta.sin_cos();
        let r = self.radius(theta);
        let dr = self.radius_derivative(theta);
        Point::new(dr * c - r * s, dr * s + r * c)
    }

    /// Arclength density |dP/dθ| = sqrt(r² + r'²).
    pub fn arclength_density(&self, theta: f64) -> f64 {
        self.radius(theta).hypot(self.radius_derivative(theta))
    }

    pub fn max_radius(&self) -> f64 {
        let n = 4096;
        (0..n).map(|i| self.radius(2.0 * PI * i as f64 / n as f64)).fold(0.0, f64::max)
    }

    pub fn min_relative_radius(&self) -> f64 {
        let n = 4096.max(64 * self.max_wavenumber() as usize);
        (0..n).map(|i| 1.0 + self.xi(2.0 * PI * i as f64 / n as f64)).fold(f64::INFINITY, f64::min)
    }

    /// Whether `x` lies strictly inside the domain.
    pub fn contains(&self, x: Point) -> bool {
        let v = x - self.center;
        let rho = v.norm();
        rho < self.radius(v.y.atan2(v.x))
    }

    /// `½∫ r(θ)² dθ`.
    pub fn area(&self) -> f64 {
        periodic_trapezoid(PERIODIC_POINTS, |t| 0.5 * self.radius(t).powi(2))
    }

    pub fn perimeter(&self) -> f64 {
        periodic_trapezoid(PERIODIC_POINTS, |t| self.arclength_density(t))
    }

    /// `center + (1/A) · ⅓∫ r³ (cos θ, sin θ) dθ`.
    pub fn barycenter(&self) -> Point {
        let mx = periodic_trapezoid(PERIODIC_POINTS, |t| self.radius(t).powi(3) * t.cos() / 3.0);
        let my = periodic_trapezoid(PERIODIC_POINTS, |t| self.radius(t).powi(3) * t.sin() / 3.0);
        self.center + Point::new(mx, my) * (1.0 / self.area())
    }

    /// Scaling about the domain center.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        Self::with_phase(self.center, self.r0 * t, self.modes.clone(), self.phase)
    }

    pub fn translate(&self, v: Point) -> Self {
        Self { center: self.center + v, ..self.clone() }
    }

    /// Rotation about the origin by `angle`.
    pub fn rotate(&self, angle: f64) -> Self {
        Self { center: self.center.rotated(angle), phase: self.phase + angle, ..self.clone() }
    }

    /// Rescales r0 so the area equals `v`.
    pub fn with_area(&self, v: f64) -> Result<Self> {
        if !(v > 0.0) {
            return Err(Error::InvalidParams(format!("target area must be positive, got {v}")));
        }
        self.dilate((v / self.area()).sqrt())
    }

    /// Translates the domain so its barycenter sits at `p`.
    pub fn with_barycenter(&self, p: Point) -> Self {
        let shift = p - self.barycenter();
        self.translate(shift)
    }

    pub fn with_modes(&self, r0: f64, modes: Vec<FourierMode>) -> Result<Self> {
        Self::with_phase(self.center, r0, modes, self.phase)
    }

    /// Whether the boundary is a radial graph about `origin`.
    pub fn is_star_shaped_about(&self, origin: Point) -> bool {
        PolarFrame::new(self, origin).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParams(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, x: Point) -> bool {
        x.dist(self.center) < self.radius
    }

    /// Signed distance to the sphere, positive inside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.radius - x.dist(self.center)
    }

    pub fn to_domain(&self) -> Result<StarDomain> {
        StarDomain::disk(self.center, self.radius)
    }
}

/// The smoothed signed-distance weight ψ_B of a ball.
///
/// The transition profile is `f(t) = t` on `[0, c0]`, a quarter sine on
/// `[c0, 2c0]`, and the constant `c0 (1 + 2/π)` beyond, which makes `f`
/// nondecreasing and C¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiWeight {
    pub ball: BallSpec,
    pub c0: f64,
    pub plateau: f64,
}

impl PsiWeight {
    pub fn new(ball: BallSpec, c0: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidParams(format!("c0 must be positive, got {c0}")));
        }
        Ok(Self { ball, c0, plateau: c0 * (1.0 + 2.0 / PI) })
    }

    /// Default transition scale: one fifth of the ball radius.
    pub fn default_c0(ball: &BallSpec) -> f64 {
        0.2 * ball.radius
    }

    pub fn profile(&self, t: f64) -> f64 {
        let c0 = self.c0;
        if t <= c0 {
            t
        } else if t <= 2.0 * c0 {
            c0 + (2.0 * c0 / PI) * (PI * (t - c0) / (2.0 * c0)).sin()
        } else {
            self.plateau
        }
    }

    pub fn profile_derivative(&self, t: f64) -> f64 {
        let c0 = self.c0;
        if t <= c0 {
            1.0
        } else if t <= 2.0 * c0 {
            (PI * (t - c0) / (2.0 * c0)).cos()
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        let d = self.ball.signed_distance(x);
        d.signum() * self.profile(d.abs())
    }

    /// `∫ g(|s - R|) s ds` over the radial band between `R` and `rho`,
    /// split at the profile kinks.
    fn band_integral(&self, rho: f64, g: impl Fn(f64) -> f64) -> f64 {
        let big_r = self.ball.radius;
        let sign = if rho >= big_r { 1.0 } else { -1.0 };
        let len = (rho - big_r).abs();
        let mut edges = vec![0.0];
        for cut in [self.c0, 2.0 * self.c0] {
            if cut < len {
                edges.push(cut);
            }
        }
        edges.push(len);
        edges.windows(2).map(|w| gauss_panel(w[0], w[1], |t| g(t) * (big_r + sign * t))).sum()
    }
}

/// An estimate with a standard error; quadrature results report zero error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub monte_carlo: bool,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, monte_carlo: false }
    }
}

/// Polar description of a domain about a foreign origin. The boundary is
/// parametrized by the domain's own angle φ; the polar angle θ' about the
/// new origin is monotone in φ exactly when the domain is star-shaped
/// about it.
pub(crate) struct PolarFrame<'a> {
    domain: &'a StarDomain,
    origin: Point,
}

impl<'a> PolarFrame<'a> {
    pub(crate) fn new(domain: &'a StarDomain, origin: Point) -> Option<Self> {
        let n = 4096.max(64 * domain.max_wavenumber() as usize);
        let scale = domain.r0 * domain.r0;
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            let rel = domain.boundary_point(t) - origin;
            if rel.cross(domain.boundary_tangent(t)) <= 1e-9 * scale {
                return None;
            }
        }
        Some(Self { domain, origin })
    }

    pub(crate) fn rho(&self, phi: f64) -> f64 {
        self.domain.boundary_point(phi).dist(self.origin)
    }

    /// dθ'/dφ.
    pub(crate) fn jacobian(&self, phi: f64) -> f64 {
        let rel = self.domain.boundary_point(phi) - self.origin;
        rel.cross(self.domain.boundary_tangent(phi)) / rel.dot(rel)
    }

    /// `∫ F(ρ(θ')) dθ'` where `F` is smooth except where `ρ` crosses one of
    /// `levels`.
    pub(crate) fn integrate(&self, radial: impl Fn(f64) -> f64, levels: &[f64]) -> f64 {
        let fns: Vec<Box<dyn Fn(f64) -> f64 + '_>> =
            levels.iter().map(|&l| Box::new(move |phi: f64| self.rho(phi) - l) as Box<dyn Fn(f64) -> f64>).collect();
        let refs: Vec<&dyn Fn(f64) -> f64> = fns.iter().map(|b| b.as_ref()).collect();
        periodic_with_breaks(|phi| radial(self.rho(phi)) * self.jacobian(phi), &refs)
    }
}

/// `|Ω △ B|`, by angular quadrature about the ball center when Ω is
/// star-shaped about it, otherwise by seeded Monte-Carlo.
pub fn symmetric_difference_ball(d: &StarDomain, b: &BallSpec) -> Estimate {
    let big_r = b.radius;
    match PolarFrame::new(d, b.center) {
        Some(frame) => Estimate::exact(frame.integrate(|rho| 0.5 * (rho * rho - big_r * big_r).abs(), &[big_r])),
        None => monte_carlo(d, b, |x| if d.contains(x) != b.contains(x) { 1.0 } else { 0.0 }),
    }
}

/// `∫_{Ω△B} |ψ_B|`, the smoothed asymmetry of Ω against the ball.
///
/// With ψ positive inside the ball this equals `∫_B ψ_B - ∫_Ω ψ_B`.
pub fn asymmetry(d: &StarDomain, b: &BallSpec, c0: f64) -> Result<Estimate> {
    let w = PsiWeight::new(*b, c0)?;
    Ok(asymmetry_with(d, &w))
}

pub fn asymmetry_with(d: &StarDomain, w: &PsiWeight) -> Estimate {
    let big_r = w.ball.radius;
    let levels = [big_r, big_r - w.c0, big_r + w.c0, big_r - 2.0 * w.c0, big_r + 2.0 * w.c0];
    match PolarFrame::new(d, w.ball.center) {
        Some(frame) => Estimate::exact(frame.integrate(|rho| w.band_integral(rho, |t| w.profile(t)).abs(), &levels)),
        None => monte_carlo(d, &w.ball, |x| if d.contains(x) != w.ball.contains(x) { w.eval(x).abs() } else { 0.0 }),
    }
}

/// `∂/∂R` of the asymmetry at a fixed domain: `∫_{B\Ω} f' - ∫_{Ω\B} f'`
/// with `f'` evaluated at the distance to the sphere.
pub fn asymmetry_radius_sensitivity(d: &StarDomain, w: &PsiWeight) -> Option<f64> {
    let big_r = w.ball.radius;
    let levels = [big_r, big_r - w.c0, big_r + w.c0, big_r - 2.0 * w.c0, big_r + 2.0 * w.c0];
    let frame = PolarFrame::new(d, w.ball.center)?;
    Some(frame.integrate(
        |rho| {
            let band = w.band_integral(rho, |t| w.profile_derivative(t));
            if rho >= big_r {
                -band
            } else {
                band
            }
        },
        &levels,
    ))
}

fn monte_carlo(d: &StarDomain, b: &BallSpec, indicator: impl Fn(Point) -> f64) -> Estimate {
    let rmax = d.max_radius();
    let lo = Point::new((d.center.x - rmax).min(b.center.x - b.radius), (d.center.y - rmax).min(b.center.y - b.radius));
    let hi = Point::new((d.center.x + rmax).max(b.center.x + b.radius), (d.center.y + rmax).max(b.center.y + b.radius));
    let box_area = (hi.x - lo.x) * (hi.y - lo.y);
    let mut rng = ChaCha8Rng::seed_from_u64(MONTE_CARLO_SEED);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..MONTE_CARLO_SAMPLES {
        let x = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        let v = indicator(x);
        sum += v;
        sum_sq += v * v;
    }
    let n = MONTE_CARLO_SAMPLES as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Estimate { value: box_area * mean, std_error: box_area * (var / n).sqrt(), monte_carlo: true }
}

/// `sign(x ∈ B) · f(dist(x, ∂B))`.
pub fn psi_eval(w: &PsiWeight, x: Point) -> f64 {
    w.eval(x)
}

pub fn area(d: &StarDomain) -> f64 {
    d.area()
}

pub fn barycenter(d: &StarDomain) -> Point {
    d.barycenter()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> StarDomain {
        StarDomain::disk(Point::ORIGIN, 1.0).unwrap()
    }

    #[test]
    fn rejects_star_floor_violations() {
        let err = StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(3, 0.95, 0.0)]);
        assert!(matches!(err, Err(Error::StarShapeViolation { .. })));
        assert!(StarDomain::new(Point::ORIGIN, -1.0, vec![]).is_err());
        assert!(StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(0, 0.1, 0.0)]).is_err());
        assert!(StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(33, 0.1, 0.0)]).is_err());
    }

    #[test]
    fn disk_area_and_scaling() {
        assert!((unit_disk().area() - PI).abs() < 1e-12);
        let d2 = StarDomain::disk(Point::ORIGIN, 2.0).unwrap();
        assert!((d2.area() - 4.0 * PI).abs() < 1e-12);
        assert!((unit_disk().perimeter() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn psi_profile_values() {
        let w = PsiWeight::new(BallSpec::new(Point::ORIGIN, 1.0).unwrap(), 0.2).unwrap();
        assert_eq!(w.eval(Point::new(1.0, 0.0)), 0.0);
        assert!((w.eval(Point::new(0.9, 0.0)) - 0.1).abs() < 1e-15);
        assert!((w.eval(Point::ORIGIN) - 0.2 * (1.0 + 2.0 / PI)).abs() < 1e-15);
        assert!((w.eval(Point::new(1.1, 0.0)) + 0.1).abs() < 1e-15);
        // continuity and monotonicity across the blend
        let mut prev = 0.0;
        for i in 1..=1000 {
            let t = 0.6 * i as f64 / 1000.0;
            let v = w.profile(t);
            assert!(v >= prev);
            assert!(v - prev < 0.6 / 1000.0 + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn mode_shift_represents_same_function() {
        let m = FourierMode::new(3, 0.3, -0.2);
        let delta = 0.37;
        let s = m.shifted(delta);
        for i in 0..10 {
            let t = i as f64 * 0.61;
            assert!((m.value(t + delta) - s.value(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_preserves_shape() {
        let d = StarDomain::new(Point::new(0.2, 0.1), 1.0, vec![FourierMode::new(2, 0.1, 0.05)]).unwrap();
        let r = d.rotate(0.7);
        assert!((d.area() - r.area()).abs() < 1e-12);
        let p = d.boundary_point(0.3).rotated(0.7);
        assert!(p.dist(r.boundary_point(1.0)) < 1e-12);
    }

    #[test]
    fn non_star_shaped_center_uses_monte_carlo() {
        let d = StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(2, 0.5, 0.0)]).unwrap();
        let b = BallSpec::new(Point::new(0.0, 0.48), 0.4).unwrap();
        assert!(!d.is_star_shaped_about(b.center));
        let e = symmetric_difference_ball(&d, &b);
        assert!(e.monte_carlo && e.std_error > 0.0 && e.value > 0.0);
    }

    #[test]
    fn domain_round_trips_through_toml() {
        let d = StarDomain::new(Point::new(0.5, -1.0), 1.2, vec![FourierMode::new(2, 0.1, 0.0)]).unwrap();
        let text = toml::to_string(&d).unwrap();
        let back: StarDomain = toml::from_str(&text).unwrap();
        assert_eq!(d, back);
        let bad = "r0 = 1.0\nmodes = [[2, 0.99, 0.0]]\n";
        assert!(toml::from_str::<StarDomain>(bad).is_err());
    }
}
