//! Armijo descent on Fourier coefficients, the selection-principle driver,
//! the linear-stability sweep and the nested-domain eigenfunction estimate.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::j0_first_zero;
use crate::distances::{common_grid, rasterize, GridSpec};
use crate::elliptic::{solve_spectrum_with, solve_torsion};
use crate::energy::{evaluate, evaluate_full, EnergyParams, EnergyReport, Evaluation, VolumeTrack};
use crate::error::{Error, Result};
use crate::geometry::{FourierMode, Point, StarDomain, MAX_MODE};
use crate::mesh::{assemble, triangulate, MeshTemplate};
use crate::shapegrad::{grad_parts, BoundaryField, GradParts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Highest Fourier wavenumber in the descent space.
    pub k_max: u32,
    pub initial_step: f64,
    pub armijo_factor: f64,
    pub sufficient_decrease: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub min_step: f64,
    pub track: VolumeTrack,
    pub h_coarse: f64,
    pub h_fine: f64,
    /// Iterations run on the fine mesh at the end.
    pub fine_iters: usize,
    /// Relative width of the band around `|Ω| = v` in which the penalized
    /// track uses the minimum-norm subgradient.
    pub kink_band: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            k_max: 8,
            initial_step: 1e-2,
            armijo_factor: 0.5,
            sufficient_decrease: 1e-4,
            max_iter: 60,
            grad_tol: 1e-3,
            min_step: 1e-9,
            track: VolumeTrack::Renormalize,
            h_coarse: 0.04,
            h_fine: 0.02,
            fine_iters: 10,
            kink_band: 1e-9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.k_max == 0 || self.k_max > MAX_MODE {
            return bad(format!("k_max must lie in 1..={MAX_MODE}, got {}", self.k_max));
        }
        if !(self.armijo_factor > 0.0 && self.armijo_factor < 1.0) {
            return bad(format!("armijo_factor must lie in (0, 1), got {}", self.armijo_factor));
        }
        for (name, v) in [
            ("initial_step", self.initial_step),
            ("sufficient_decrease", self.sufficient_decrease),
            ("grad_tol", self.grad_tol),
            ("min_step", self.min_step),
            ("h_coarse", self.h_coarse),
            ("h_fine", self.h_fine),
            ("kink_band", self.kink_band),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.fine_iters > self.max_iter {
            return bad("fine_iters exceeds max_iter".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub h: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub area: f64,
    pub d_star_sq: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub domain: StarDomain,
    pub report: EnergyReport,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// The line search failed to find a decrease before convergence.
    pub stalled: bool,
}

/// Coordinate vector `[r0?, a_1, b_1, …, a_K, b_K]` in the body frame.
fn coordinates(d: &StarDomain, k_max: u32, with_r0: bool) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * k_max as usize + 1);
    if with_r0 {
        x.push(d.r0());
    }
    for k in 1..=k_max {
        let m = d.modes().iter().find(|m| m.k == k);
        x.push(m.map_or(0.0, |m| m.a));
        x.push(m.map_or(0.0, |m| m.b));
    }
    x
}

fn domain_from(template: &StarDomain, x: &[f64], k_max: u32, track: VolumeTrack, v: f64) -> Result<StarDomain> {
    let (r0, rest) = match track {
        VolumeTrack::Penalized => (x[0], &x[1..]),
        VolumeTrack::Renormalize => (template.r0(), x),
    };
    let mut modes: Vec<FourierMode> = template.modes().iter().filter(|m| m.k > k_max).copied().collect();
    for k in 1..=k_max {
        let i = 2 * (k as usize - 1);
        if rest[i] != 0.0 || rest[i + 1] != 0.0 {
            modes.push(FourierMode::new(k, rest[i], rest[i + 1]));
        }
    }
    let d = StarDomain::with_phase(template.center(), r0, modes, template.phase())?;
    match track {
        VolumeTrack::Renormalize => d.with_area(v),
        VolumeTrack::Penalized => Ok(d),
    }
}

fn coordinate_fields(d: &StarDomain, k_max: u32, with_r0: bool) -> Vec<BoundaryField> {
    let mut f = Vec::new();
    if with_r0 {
        f.push(BoundaryField::radial_of(d).scaled(1.0 / d.r0()));
    }
    for k in 1..=k_max {
        f.push(BoundaryField::mode(k, d.r0(), 0.0));
        f.push(BoundaryField::mode(k, 0.0, d.r0()));
    }
    f
}

/// Descent direction data at an evaluated iterate.
fn gradient(eval: &Evaluation, p: &EnergyParams, cfg: &OptimizerConfig, precond: &[f64]) -> Result<Vec<f64>> {
    let with_r0 = cfg.track == VolumeTrack::Penalized;
    let fields = coordinate_fields(&eval.domain, cfg.k_max, with_r0);
    let parts: Vec<GradParts> = fields.par_iter().map(|f| grad_parts(eval, p, f, cfg.track)).collect::<Result<_>>()?;
    let gs: Vec<f64> = parts.iter().map(|q| q.smooth).collect();
    let gv: Vec<f64> = parts.iter().map(|q| q.d_vol).collect();
    let mu = match cfg.track {
        VolumeTrack::Renormalize => 0.0,
        VolumeTrack::Penalized => {
            let area = eval.report.vol;
            if (area - p.v).abs() <= cfg.kink_band * p.v {
                // minimum-norm element of the subdifferential in the
                // preconditioned metric
                let gg: f64 = gv.iter().zip(precond).map(|(v, w)| w * v * v).sum();
                let sg: f64 = gs.iter().zip(&gv).zip(precond).map(|((a, b), w)| w * a * b).sum();
                if gg > 0.0 {
                    (-sg / gg).clamp(p.eta, 1.0 / p.eta)
                } else {
                    p.eta
                }
            } else if area < p.v {
                p.eta
            } else {
                1.0 / p.eta
            }
        }
    };
    Ok(gs.iter().zip(&gv).map(|(s, v)| s + mu * v).collect())
}

fn admissible(eval: &Evaluation) -> bool {
    eval.report.gap_ok && eval.report.f_total.is_finite()
}

/// Armijo descent on the Fourier coefficients of `start`, first on the
/// coarse mesh and then for `fine_iters` iterations on the fine mesh.
pub fn minimize(start: &StarDomain, p: &EnergyParams, cfg: &OptimizerConfig) -> Result<MinimizeResult> {
    p.validate()?;
    cfg.validate()?;
    let start = match cfg.track {
        VolumeTrack::Renormalize => start.with_area(p.v)?,
        VolumeTrack::Penalized => start.clone(),
    };
    let mut trace = Vec::new();
    let mut domain = start;
    let mut converged = false;
    let mut stalled = false;
    let coarse_iters = cfg.max_iter - cfg.fine_iters;
    let mut iteration = 0;
    let mut report = None;
    for (h, budget) in [(cfg.h_coarse, coarse_iters), (cfg.h_fine, cfg.fine_iters)] {
        let phase = descend(&domain, p, cfg, h, budget, &mut iteration, &mut trace)?;
        domain = phase.domain;
        converged = phase.converged;
        stalled = phase.stalled;
        report = Some(phase.report);
    }
    let report = report.expect("two phases always run");
    Ok(MinimizeResult { domain, report, trace, converged, stalled })
}

struct Phase {
    domain: StarDomain,
    report: EnergyReport,
    converged: bool,
    stalled: bool,
}

fn descend(
    start: &StarDomain,
    p: &EnergyParams,
    cfg: &OptimizerConfig,
    h: f64,
    budget: usize,
    iteration: &mut usize,
    trace: &mut Vec<TraceRow>,
) -> Result<Phase> {
    let template = MeshTemplate::for_domain(start, h)?;
    let with_r0 = cfg.track == VolumeTrack::Penalized;
    let mut eval = evaluate_full(start, p, template, h)?;
    if !admissible(&eval) {
        return Err(Error::Precondition("start domain has a spectral gap below gap_min".into()));
    }
    let mut step = cfg.initial_step;
    let mut converged = false;
    let mut stalled = false;
    // mode k is weighted by 1/k: the curvature of λ₁ along cos kθ grows
    // roughly linearly in k, so plain gradient steps zigzag on high modes
    let precond: Vec<f64> =
        (0..with_r0 as usize).map(|_| 1.0).chain((1..=cfg.k_max).flat_map(|k| [1.0 / k as f64; 2])).collect();
    let mut grad = gradient(&eval, p, cfg, &precond)?;
    let mut gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    trace.push(row(*iteration, h, &eval, gnorm, 0.0));
    for _ in 0..budget {
        if gnorm < cfg.grad_tol {
            converged = true;
            break;
        }
        let x = coordinates(&eval.domain, cfg.k_max, with_r0);
        let f0 = eval.report.f_total;
        let slope: f64 = (0..grad.len()).map(|i| precond[i] * grad[i] * grad[i]).sum();
        let mut accepted = None;
        let mut trial_step = step;
        while trial_step >= cfg.min_step {
            let xt: Vec<f64> = (0..x.len()).map(|i| x[i] - trial_step * precond[i] * grad[i]).collect();
            if let Ok(dt) = domain_from(&eval.domain, &xt, cfg.k_max, cfg.track, p.v) {
                if let Ok(et) = evaluate_full(&dt, p, template, h) {
                    if admissible(&et) && et.report.f_total <= f0 - cfg.sufficient_decrease * trial_step * slope {
                        accepted = Some(et);
                        break;
                    }
                }
            }
            trial_step *= cfg.armijo_factor;
        }
        let Some(mut next) = accepted else {
            stalled = true;
            break;
        };
        if cfg.track == VolumeTrack::Penalized {
            // the penalty kink at |Ω| = v is the minimizer along dilations;
            // snapping to it is accepted only when it lowers the objective
            if let Ok(snapped) = next.domain.with_area(p.v) {
                if let Ok(es) = evaluate_full(&snapped, p, template, h) {
                    if admissible(&es) && es.report.f_total < next.report.f_total {
                        next = es;
                    }
                }
            }
        }
        debug_assert!(next.report.f_total <= f0);
        eval = next;
        *iteration += 1;
        step = (trial_step * 2.0).min(1.0);
        grad = gradient(&eval, p, cfg, &precond)?;
        gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        trace.push(row(*iteration, h, &eval, gnorm, trial_step));
    }
    if gnorm < cfg.grad_tol {
        converged = true;
    }
    Ok(Phase { domain: eval.domain.clone(), report: eval.report, converged, stalled })
}

fn row(iteration: usize, h: f64, e: &Evaluation, grad_norm: f64, step: f64) -> TraceRow {
    TraceRow {
        iteration,
        h,
        objective: e.report.f_total,
        grad_norm,
        area: e.report.vol,
        d_star_sq: e.report.distances.d_star_sq,
        step,
    }
}

/// Discretization floors measured on the disk of area `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Floors {
    /// `|λ₁,h(B) − λ₁(B)|`.
    pub lambda: f64,
    /// `d_*` of the discrete disk against its own matched ball.
    pub distance: f64,
    /// Base energy of the discrete disk.
    pub e_ball: f64,
}

pub fn discretization_floors(p: &EnergyParams, h: f64) -> Result<Floors> {
    let radius = (p.v / PI).sqrt();
    let disk = StarDomain::disk(Point::ORIGIN, radius)?;
    let r = evaluate(&disk, p, h)?;
    let exact = (j0_first_zero() / radius).powi(2);
    Ok(Floors { lambda: (r.lambda1 - exact).abs(), distance: r.distances.d_star_sq.max(0.0).sqrt(), e_ball: r.e_base })
}

#[derive(Debug, Clone)]
pub struct SelectionRun {
    pub seed: StarDomain,
    pub d_j: f64,
    pub c_nl: f64,
    pub h_scale: f64,
    pub minimizer: StarDomain,
    pub e_seed: f64,
    pub e_minimizer: f64,
    pub e_ball: f64,
    pub deficit_seed: f64,
    pub deficit_minimizer: f64,
    pub d_star_minimizer: f64,
    pub floors: Floors,
    pub tol_a: f64,
    pub tol_b: f64,
    pub converged: bool,
    pub stalled: bool,
    pub verdict_a: bool,
    pub verdict_b: bool,
    pub trace: Vec<TraceRow>,
}

/// One selection-principle step: `c = d_*(seed)²`, minimize ℱ_τ from the
/// seed and compare deficits and distances. 𝔥 is divided by `c(√2 − 1)` so
/// that it ranges over `[0, 1]` for `d_*² ∈ [0, 2c]`.
pub fn selection_step(seed: &StarDomain, p_base: &EnergyParams, cfg: &OptimizerConfig) -> Result<SelectionRun> {
    p_base.validate()?;
    let seed = match cfg.track {
        VolumeTrack::Renormalize => seed.with_area(p_base.v)?,
        VolumeTrack::Penalized => seed.clone(),
    };
    let c0 = p_base.c0.unwrap_or(0.2 * (p_base.v / PI).sqrt());
    let p0 = EnergyParams { tau: 0.0, c0: Some(c0), ..*p_base };
    let floors = discretization_floors(&p0, cfg.h_fine)?;
    let seed_report = evaluate(&seed, &p0, cfg.h_fine)?;
    let d_j = seed_report.distances.d_star_sq.max(0.0).sqrt();
    if d_j <= 3.0 * floors.distance {
        return Err(Error::Precondition(format!(
            "seed distance {d_j:.3e} is within three discretization floors ({:.3e})",
            floors.distance
        )));
    }
    let c_nl = d_j * d_j;
    let h_scale = c_nl * (2f64.sqrt() - 1.0);
    let p = EnergyParams { c_nl, h_scale, c0: Some(c0), ..*p_base };
    let run = minimize(&seed, &p, cfg)?;
    let e_min = run.report.e_base;
    let d_star_min = run.report.distances.d_star_sq.max(0.0).sqrt();
    let deficit_seed = seed_report.e_base - floors.e_ball;
    let deficit_min = e_min - floors.e_ball;
    let tol_a = 3.0 * floors.lambda;
    let tol_b = 3.0 * floors.distance;
    let done = run.converged || run.stalled || !run.trace.is_empty();
    Ok(SelectionRun {
        seed,
        d_j,
        c_nl,
        h_scale,
        minimizer: run.domain,
        e_seed: seed_report.e_base,
        e_minimizer: e_min,
        e_ball: floors.e_ball,
        deficit_seed,
        deficit_minimizer: deficit_min,
        d_star_minimizer: d_star_min,
        floors,
        tol_a,
        tol_b,
        converged: run.converged,
        stalled: run.stalled,
        verdict_a: done && deficit_min <= deficit_seed + tol_a,
        verdict_b: done && 0.5 * d_j <= d_star_min + tol_b,
        trace: run.trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub k: u32,
    pub t: f64,
    pub deficit: f64,
    pub d0: f64,
    pub d1: f64,
    pub d_star_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    /// Least-squares `c_k` in `deficit ≈ c_k t²`, per wavenumber.
    pub fits: Vec<(u32, f64)>,
    /// `min deficit / d_*²` over rows with `k ≥ 2`.
    pub min_ratio: f64,
}

/// Domain `r0 (1 + t cos kθ)` with area `v` and barycenter at the origin.
pub fn sweep_domain(k: u32, t: f64, v: f64) -> Result<StarDomain> {
    let d = StarDomain::new(Point::ORIGIN, 1.0, vec![FourierMode::new(k, t, 0.0)])?;
    Ok(d.with_area(v)?.with_barycenter(Point::ORIGIN))
}

pub fn stability_sweep(ks: &[u32], ts: &[f64], p: &EnergyParams, h: f64) -> Result<SweepSummary> {
    let p = EnergyParams { tau: 0.0, ..*p };
    let e_ball = discretization_floors(&p, h)?.e_ball;
    let jobs: Vec<(u32, f64)> = ks.iter().flat_map(|&k| ts.iter().map(move |&t| (k, t))).collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(k, t)| {
            let d = sweep_domain(k, t, p.v)?;
            let r = evaluate(&d, &p, h)?;
            Ok(SweepRow {
                k,
                t,
                deficit: r.e_base - e_ball,
                d0: r.distances.d0,
                d1: r.distances.d1,
                d_star_sq: r.distances.d_star_sq,
            })
        })
        .collect::<Result<_>>()?;
    let fits = ks
        .iter()
        .map(|&k| {
            let (num, den) = rows
                .iter()
                .filter(|r| r.k == k)
                .fold((0.0, 0.0), |(n, d), r| (n + r.deficit * r.t * r.t, d + r.t.powi(4)));
            (k, if den > 0.0 { num / den } else { 0.0 })
        })
        .collect();
    let min_ratio = rows
        .iter()
        .filter(|r| r.k >= 2 && r.d_star_sq > 0.0)
        .map(|r| r.deficit / r.d_star_sq)
        .fold(f64::INFINITY, f64::min);
    Ok(SweepSummary { rows, fits, min_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyEstimateReport {
    /// `|∫ (u_outer − u_inner)|`, i.e. `f ≡ 1`.
    pub lhs_const: f64,
    /// `∫ |u_outer − u_inner|`, i.e. `f = sign(u_outer − u_inner)`.
    pub lhs_sign: f64,
    pub delta_tor: f64,
    pub delta_lambda: f64,
    pub rhs: f64,
    /// `max(lhs) / rhs`, zero when both vanish.
    pub c_emp: f64,
    pub monotone: bool,
}

/// Whether `inner ⊆ outer`, checked on the inner boundary.
pub fn is_nested(inner: &StarDomain, outer: &StarDomain) -> bool {
    let n = 4096;
    let c = outer.center();
    if !outer.contains(inner.center()) && inner.center().dist(c) > 0.0 {
        return false;
    }
    (0..n).all(|i| {
        let p = inner.boundary_point(2.0 * PI * i as f64 / n as f64);
        let v = p - c;
        v.norm() <= outer.radius(v.y.atan2(v.x)) * (1.0 + 1e-12) + 1e-14
    })
}

/// Compares eigenfunctions of nested domains with the energy gaps
/// `Δtor + Δλ₁`.
pub fn key_estimate_check(inner: &StarDomain, outer: &StarDomain, h: f64) -> Result<KeyEstimateReport> {
    if !is_nested(inner, outer) {
        return Err(Error::NotNested);
    }
    let si = assemble(triangulate(inner, h)?)?;
    let so = assemble(triangulate(outer, h)?)?;
    let (ei, eo) = (solve_spectrum_with(&si, 0.0)?, solve_spectrum_with(&so, 0.0)?);
    let (ti, to) = (solve_torsion(&si)?, solve_torsion(&so)?);
    let ball = crate::distances::matched_ball(outer);
    let grid: GridSpec = common_grid(&so.mesh, &ball, 0.5 * h);
    let ui = rasterize(&si.mesh, &ei.u, grid);
    let uo = rasterize(&so.mesh, &eo.u, grid);
    let diff: Vec<f64> = uo.values.iter().zip(&ui.values).map(|(a, b)| a - b).collect();
    let cell = grid.cell_area();
    let lhs_const = diff.iter().sum::<f64>().abs() * cell;
    let lhs_sign = diff.iter().map(|v| v.abs()).sum::<f64>() * cell;
    let delta_tor = ti.tor - to.tor;
    let delta_lambda = ei.lambda1 - eo.lambda1;
    let rhs = delta_tor + delta_lambda;
    let lhs = lhs_const.max(lhs_sign);
    let c_emp = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(KeyEstimateReport {
        lhs_const,
        lhs_sign,
        delta_tor,
        delta_lambda,
        rhs,
        c_emp,
        monotone: delta_tor >= -1e-12 && delta_lambda >= -1e-12,
    })
}
