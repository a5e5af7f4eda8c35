//! First variations along radial boundary velocities, the truncated
//! free-boundary residual, and a finite-difference validation harness.
//!
//! A [`BoundaryField`] is a radial velocity profile `ρ(θ)`: the boundary
//! moves as `r_t(θ) = r(θ) + t ρ(θ)`. Its normal speed is
//! `ρ r / sqrt(r² + r'²)`, so `V_n ds = ρ r dθ` and every Hadamard integral
//! becomes a plain periodic integral in θ.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distances::{d1, matched_ball};
use crate::elliptic::{boundary_traces, solve_spectrum_with, BoundaryTrace};
use crate::energy::{volume_penalty_slopes, EnergyParams, Evaluation, VolumeTrack};
use crate::error::{Error, Result};
use crate::geometry::{
    accumulate_mode, asymmetry_radius_sensitivity, asymmetry_with, FourierMode, Point, PsiWeight, StarDomain,
};
use crate::mesh::{assemble, triangulate_with, MeshTemplate};
use crate::quadrature::{periodic_trapezoid, periodic_with_breaks, PERIODIC_POINTS};

/// Step used to difference the eigenfunction-distance term.
pub const D1_FD_STEP: f64 = 1e-3;
/// Half-width of the band around `|Ω| = v` treated as the penalty kink.
pub const KINK_BAND: f64 = 1e-8;

/// Radial velocity `ρ(θ) = constant + Σ modes(θ − phase)` in length units,
/// with modes in the body frame of the domain it is applied to.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryField {
    pub constant: f64,
    pub modes: Vec<FourierMode>,
}

impl BoundaryField {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, modes: Vec::new() }
    }

    pub fn mode(k: u32, a: f64, b: f64) -> Self {
        Self { constant: 0.0, modes: vec![FourierMode::new(k, a, b)] }
    }

    /// The field `r(θ)` itself, i.e. the derivative of the boundary with
    /// respect to a dilation factor.
    pub fn radial_of(d: &StarDomain) -> Self {
        Self {
            constant: d.r0(),
            modes: d.modes().iter().map(|m| FourierMode::new(m.k, d.r0() * m.a, d.r0() * m.b)).collect(),
        }
    }

    pub fn value(&self, d: &StarDomain, theta: f64) -> f64 {
        let t = theta - d.phase();
        self.constant + self.modes.iter().map(|m| m.value(t)).sum::<f64>()
    }

    pub fn normal_speed(&self, d: &StarDomain, theta: f64) -> f64 {
        self.value(d, theta) * d.radius(theta) / d.arclength_density(theta)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            constant: s * self.constant,
            modes: self.modes.iter().map(|m| FourierMode::new(m.k, s * m.a, s * m.b)).collect(),
        }
    }

    pub fn plus(&self, other: &BoundaryField, s: f64) -> Self {
        let mut modes = self.modes.clone();
        for m in &other.modes {
            accumulate_mode(&mut modes, *m, s);
        }
        Self { constant: self.constant + s * other.constant, modes }
    }

    /// Coefficient ∞-norm, a proxy for the field size.
    pub fn norm(&self) -> f64 {
        self.modes.iter().fold(self.constant.abs(), |acc, m| acc.max(m.a.abs()).max(m.b.abs()))
    }

    /// Boundary moved to `r + tρ`, represented exactly as a star domain.
    pub fn perturb(&self, d: &StarDomain, t: f64) -> Result<StarDomain> {
        let r0 = d.r0() + t * self.constant;
        if !(r0 > 0.0) {
            return Err(Error::InvalidDomain(format!("perturbation drives r0 to {r0}")));
        }
        let mut modes: Vec<FourierMode> = Vec::new();
        for m in d.modes() {
            accumulate_mode(&mut modes, *m, d.r0() / r0);
        }
        for m in &self.modes {
            accumulate_mode(&mut modes, *m, t / r0);
        }
        modes.retain(|m| m.a != 0.0 || m.b != 0.0);
        StarDomain::with_phase(d.center(), r0, modes, d.phase())
    }

    /// `∮ V_n ds`.
    pub fn volume_rate(&self, d: &StarDomain) -> f64 {
        periodic_trapezoid(PERIODIC_POINTS, |t| self.value(d, t) * d.radius(t))
    }

    pub fn is_volume_preserving(&self, d: &StarDomain) -> bool {
        self.volume_rate(d).abs() < 1e-10
    }

    /// Removes the dilation component so that `∮ V_n ds = 0`.
    pub fn volume_projected(&self, d: &StarDomain) -> Self {
        let alpha = self.volume_rate(d) / (2.0 * d.area());
        self.plus(&Self::radial_of(d), -alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeGradient {
    pub d_lambda1: f64,
    pub d_tor: f64,
    pub d_vol: f64,
    pub d_bary: Point,
}

/// Hadamard derivatives of λ₁, tor, |Ω| and the barycenter.
pub fn hadamard(d: &StarDomain, traces: &BoundaryTrace, field: &BoundaryField) -> ShapeGradient {
    let nb = traces.theta.len();
    let dt = 2.0 * PI / nb as f64;
    let (mut dl, mut dtor) = (0.0, 0.0);
    for k in 0..nb {
        let th = traces.theta[k];
        let vr = field.value(d, th) * d.radius(th);
        dl -= traces.grad_u[k].powi(2) * vr * dt;
        dtor -= 0.5 * traces.grad_w[k].powi(2) * vr * dt;
    }
    let (d_vol, d_bary) = geometric_rates(d, field);
    ShapeGradient { d_lambda1: dl, d_tor: dtor, d_vol, d_bary }
}

fn geometric_rates(d: &StarDomain, field: &BoundaryField) -> (f64, Point) {
    let d_vol = field.volume_rate(d);
    let area = d.area();
    let mx = periodic_trapezoid(PERIODIC_POINTS, |t| d.radius(t).powi(2) * field.value(d, t) * t.cos());
    let my = periodic_trapezoid(PERIODIC_POINTS, |t| d.radius(t).powi(2) * field.value(d, t) * t.sin());
    let rel = d.barycenter() - d.center();
    let d_bary = (Point::new(mx, my) - rel * d_vol) * (1.0 / area);
    (d_vol, d_bary)
}

fn psi_breaks<'a>(d: &'a StarDomain, w: &PsiWeight) -> Vec<Box<dyn Fn(f64) -> f64 + 'a>> {
    let (c, r) = (w.ball.center, w.ball.radius);
    [r, r - w.c0, r + w.c0, r - 2.0 * w.c0, r + 2.0 * w.c0]
        .into_iter()
        .map(move |l| Box::new(move |t: f64| d.boundary_point(t).dist(c) - l) as Box<dyn Fn(f64) -> f64>)
        .collect()
}

/// Derivative of the smoothed asymmetry against the matched ball, including
/// the motion of the ball's radius and center (and of `c0` when it is tied
/// to the radius).
pub fn asymmetry_derivative(d: &StarDomain, field: &BoundaryField, c0: Option<f64>) -> Result<f64> {
    let b = matched_ball(d);
    let c0v = c0.unwrap_or_else(|| PsiWeight::default_c0(&b));
    let w = PsiWeight::new(b, c0v)?;
    let breaks = psi_breaks(d, &w);
    let refs: Vec<&dyn Fn(f64) -> f64> = breaks.iter().map(|f| f.as_ref()).collect();

    let boundary = -periodic_with_breaks(|t| w.eval(d.boundary_point(t)) * field.value(d, t) * d.radius(t), &refs);
    let (d_vol, d_bary) = geometric_rates(d, field);
    let r_dot = d_vol / (2.0 * PI * b.radius);

    let d_r = match asymmetry_radius_sensitivity(d, &w) {
        Some(v) => v,
        None => {
            let e = 1e-4 * b.radius;
            let at = |dr: f64| {
                let mut ww = w;
                ww.ball.radius += dr;
                asymmetry_with(d, &ww).value
            };
            (at(e) - at(-e)) / (2.0 * e)
        }
    };
    // ∂_c A = ∮ ψ ν ds, with ν ds = (y', −x') dθ
    let nu_x = periodic_with_breaks(|t| w.eval(d.boundary_point(t)) * d.boundary_tangent(t).y, &refs);
    let nu_y = periodic_with_breaks(|t| -w.eval(d.boundary_point(t)) * d.boundary_tangent(t).x, &refs);
    let mut total = boundary + d_r * r_dot + nu_x * d_bary.x + nu_y * d_bary.y;

    if c0.is_none() {
        let e = 1e-5 * c0v;
        let at = |dc: f64| asymmetry_with(d, &PsiWeight::new(b, c0v + dc).expect("positive c0")).value;
        total += (at(e) - at(-e)) / (2.0 * e) * 0.2 * r_dot;
    }
    Ok(total)
}

/// Central difference of `d1²` against the matched ball, re-meshing on the
/// template of the base evaluation.
pub fn d1_sq_derivative(eval: &Evaluation, p: &EnergyParams, field: &BoundaryField, step: f64) -> Result<f64> {
    let template = eval.system.mesh.template;
    let h = eval.system.mesh.h;
    let at = |t: f64| -> Result<f64> {
        let dt = field.perturb(&eval.domain, t)?;
        let sys = assemble(triangulate_with(&dt, template, h)?)?;
        let s = solve_spectrum_with(&sys, p.gap_min)?;
        Ok(d1(&sys, &s, &matched_ball(&dt), 0.5 * h)?.powi(2))
    };
    let s = step / field.norm().max(1e-12);
    Ok((at(s)? - at(-s)?) / (2.0 * s))
}

/// Pieces of the directional derivative of ℱ_τ. The volume penalty enters
/// as `slope · d_vol` with the slope chosen by the caller at the kink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradParts {
    pub shape: ShapeGradient,
    /// λ₁ + 𝔗 tor + τ 𝔥 part.
    pub smooth: f64,
    pub d_asym: f64,
    pub d_d1_sq: f64,
    pub d_h: f64,
    pub d_vol: f64,
    pub slope_below: f64,
    pub slope_above: f64,
}

impl GradParts {
    /// Directional derivative using penalty slope `mu`.
    pub fn with_slope(&self, mu: f64) -> f64 {
        self.smooth + mu * self.d_vol
    }

    /// One-sided derivative for a step in the `+field` direction.
    pub fn forward(&self) -> f64 {
        let mu = if self.d_vol > 0.0 { self.slope_above } else { self.slope_below };
        self.with_slope(mu)
    }
}

pub fn grad_parts(eval: &Evaluation, p: &EnergyParams, field: &BoundaryField, track: VolumeTrack) -> Result<GradParts> {
    let d = &eval.domain;
    let field = match track {
        VolumeTrack::Renormalize => field.volume_projected(d),
        VolumeTrack::Penalized => field.clone(),
    };
    let traces = boundary_traces(&eval.system, &eval.spectrum, &eval.torsion);
    let shape = hadamard(d, &traces, &field);
    let mut smooth = shape.d_lambda1 + p.tfrak * shape.d_tor;
    let (mut d_asym, mut d_d1_sq, mut d_h) = (0.0, 0.0, 0.0);
    if p.tau > 0.0 {
        d_asym = asymmetry_derivative(d, &field, p.c0)?;
        d_d1_sq = d1_sq_derivative(eval, p, &field, D1_FD_STEP)?;
        d_h = p.h_slope(eval.report.distances.d_star_sq) * (d_asym + d_d1_sq);
        smooth += p.tau * d_h;
    }
    let (slope_below, slope_above) = match track {
        VolumeTrack::Renormalize => (0.0, 0.0),
        VolumeTrack::Penalized => {
            let area = eval.report.vol;
            if (area - p.v).abs() < KINK_BAND {
                (p.eta, 1.0 / p.eta)
            } else {
                volume_penalty_slopes(area, p.v, p.eta)
            }
        }
    };
    Ok(GradParts { shape, smooth, d_asym, d_d1_sq, d_h, d_vol: shape.d_vol, slope_below, slope_above })
}

/// Directional derivative of ℱ_τ along `field`. On the penalized track at
/// the volume kink the derivative is one-sided and both slopes are returned
/// in the error.
pub fn grad_f(eval: &Evaluation, p: &EnergyParams, field: &BoundaryField, track: VolumeTrack) -> Result<f64> {
    let parts = grad_parts(eval, p, field, track)?;
    if track == VolumeTrack::Penalized && parts.slope_below != parts.slope_above && parts.d_vol != 0.0 {
        return Err(Error::KinkAtConstraint {
            below: parts.with_slope(parts.slope_below),
            above: parts.with_slope(parts.slope_above),
        });
    }
    Ok(parts.with_slope(parts.slope_above))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbResidual {
    pub theta: Vec<f64>,
    pub residual: Vec<f64>,
    pub a0: f64,
    pub sup: f64,
    /// Arclength-weighted coefficient of variation of `q`.
    pub cv: f64,
}

/// Truncated Euler-Lagrange residual `q − A₀` with
/// `q = |∂_ν u|² + (𝔗/2)|∂_ν w|²` and `A₀` its arclength mean.
pub fn fb_residual(traces: &BoundaryTrace, p: &EnergyParams) -> FbResidual {
    let q: Vec<f64> =
        traces.grad_u.iter().zip(&traces.grad_w).map(|(gu, gw)| gu * gu + 0.5 * p.tfrak * gw * gw).collect();
    let total: f64 = traces.weight.iter().sum();
    let a0 = q.iter().zip(&traces.weight).map(|(a, w)| a * w).sum::<f64>() / total;
    let residual: Vec<f64> = q.iter().map(|v| v - a0).collect();
    let var = residual.iter().zip(&traces.weight).map(|(r, w)| r * r * w).sum::<f64>() / total;
    FbResidual {
        theta: traces.theta.clone(),
        sup: residual.iter().fold(0.0, |m, r| m.max(r.abs())),
        residual,
        a0,
        cv: var.sqrt() / a0,
    }
}

/// Functionals covered by the finite-difference harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Lambda1,
    Torsion,
    Volume,
    BarycenterX,
    BarycenterY,
}

impl Functional {
    pub const ALL: [Functional; 5] = [Self::Lambda1, Self::Torsion, Self::Volume, Self::BarycenterX, Self::BarycenterY];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lambda1 => "lambda1",
            Self::Torsion => "tor",
            Self::Volume => "vol",
            Self::BarycenterX => "bary_x",
            Self::BarycenterY => "bary_y",
        }
    }

    fn pick(&self, g: &ShapeGradient) -> f64 {
        match self {
            Self::Lambda1 => g.d_lambda1,
            Self::Torsion => g.d_tor,
            Self::Volume => g.d_vol,
            Self::BarycenterX => g.d_bary.x,
            Self::BarycenterY => g.d_bary.y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckRow {
    pub functional: Functional,
    pub analytic: f64,
    /// Central differences at steps `s`, `s/2`, `s/4`.
    pub fd: [f64; 3],
    pub rel_err: f64,
    /// `log2` of the ratio of successive FD changes; infinite when the FD
    /// sequence is already converged to rounding.
    pub order: f64,
}

fn functional_values(d: &StarDomain, template: MeshTemplate, h: f64, gap_min: f64) -> Result<[f64; 5]> {
    let sys = assemble(triangulate_with(d, template, h)?)?;
    let s = solve_spectrum_with(&sys, gap_min)?;
    let t = crate::elliptic::solve_torsion(&sys)?;
    let b = d.barycenter();
    Ok([s.lambda1, t.tor, d.area(), b.x, b.y])
}

/// Compares Hadamard derivatives with central differences of the discrete
/// functionals at steps `s`, `s/2`, `s/4` on a fixed mesh template.
pub fn gradient_check(d: &StarDomain, field: &BoundaryField, h: f64, step: f64) -> Result<Vec<GradientCheckRow>> {
    let template = MeshTemplate::for_domain(d, h)?;
    let sys = assemble(triangulate_with(d, template, h)?)?;
    let s = solve_spectrum_with(&sys, 0.0)?;
    let t = crate::elliptic::solve_torsion(&sys)?;
    let g = hadamard(d, &boundary_traces(&sys, &s, &t), field);

    let mut fds = [[0.0; 5]; 3];
    for (k, fd) in fds.iter_mut().enumerate() {
        let e = step / 2f64.powi(k as i32);
        let plus = functional_values(&field.perturb(d, e)?, template, h, 0.0)?;
        let minus = functional_values(&field.perturb(d, -e)?, template, h, 0.0)?;
        for i in 0..5 {
            fd[i] = (plus[i] - minus[i]) / (2.0 * e);
        }
    }
    Ok(Functional::ALL
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let analytic = f.pick(&g);
            let fd = [fds[0][i], fds[1][i], fds[2][i]];
            let (c1, c2) = ((fd[0] - fd[1]).abs(), (fd[1] - fd[2]).abs());
            let scale = fd[2].abs().max(1e-300);
            let order = if c1 < 1e-10 * scale.max(1.0) || c2 < 1e-12 * scale.max(1.0) {
                f64::INFINITY
            } else {
                (c1 / c2).log2()
            };
            GradientCheckRow { functional: *f, analytic, fd, rel_err: (analytic - fd[2]).abs() / scale, order }
        })
        .collect())
}

/// Random field with a radial part of size in `[0.5, 1]` and first-order
/// modes in `[0.3, 0.6]`, plus small higher modes, scaled by `r0`.
pub fn random_field(rng: &mut ChaCha8Rng, r0: f64, kmax: u32) -> BoundaryField {
    let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut f = BoundaryField::constant(r0 * sign(rng) * rng.random_range(0.5..1.0));
    let (a, b) = (sign(rng) * rng.random_range(0.3..0.6), sign(rng) * rng.random_range(0.3..0.6));
    f.modes.push(FourierMode::new(1, r0 * a, r0 * b));
    for k in 2..=kmax {
        f.modes.push(FourierMode::new(k, r0 * rng.random_range(-0.2..0.2), r0 * rng.random_range(-0.2..0.2)));
    }
    f
}

pub fn field_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random star domain about the origin with modes `1..=kmax` of amplitude
/// below `amplitude / k`, rescaled to area `v`. The `1/k` decay keeps
/// `|r'/r| <= amplitude·kmax`, inside the range the polar mesh accepts.
pub fn random_domain(rng: &mut ChaCha8Rng, amplitude: f64, kmax: u32, v: f64) -> Result<StarDomain> {
    let modes = (1..=kmax)
        .map(|k| {
            let a = amplitude / k as f64;
            FourierMode::new(k, rng.random_range(-a..a), rng.random_range(-a..a))
        })
        .collect();
    StarDomain::new(Point::ORIGIN, 1.0, modes)?.with_area(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturb_matches_radial_motion() {
        let d = StarDomain::new(Point::new(0.1, 0.2), 1.1, vec![FourierMode::new(2, 0.05, 0.02)]).unwrap();
        let f = BoundaryField { constant: 0.3, modes: vec![FourierMode::new(3, 0.1, -0.2)] };
        let p = f.perturb(&d, 0.01).unwrap();
        for i in 0..16 {
            let th = 0.4 * i as f64;
            assert!((p.radius(th) - d.radius(th) - 0.01 * f.value(&d, th)).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_kills_volume_rate() {
        let d = StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(2, 0.1, 0.0)]).unwrap();
        let f = BoundaryField::mode(2, 0.5, 0.0).plus(&BoundaryField::constant(0.2), 1.0);
        assert!(!f.is_volume_preserving(&d));
        assert!(f.volume_projected(&d).is_volume_preserving(&d));
    }
}
