//! Base energy `λ₁ + 𝔗·tor + f_{v,η}(|Ω|)`, the nonlinearity 𝔥 and the
//! penalized functional `ℱ_τ = ℰ + τ𝔥`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::distances::{distance_report, DistanceReport};
use crate::elliptic::{solve_spectrum_with, solve_torsion, SpectralResult, TorsionResult, DEFAULT_GAP_MIN};
use crate::error::{Error, Result};
use crate::geometry::StarDomain;
use crate::mesh::{assemble, triangulate_with, FemSystem, MeshTemplate};

/// How the volume constraint is imposed during descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeTrack {
    /// r0 is rescaled so the area stays exactly `v`.
    Renormalize,
    /// Area is free and priced by `f_{v,η}`.
    Penalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub v: f64,
    pub vmax: f64,
    pub eta: f64,
    pub tfrak: f64,
    pub tau: f64,
    /// The constant `c` of 𝔥.
    pub c_nl: f64,
    /// ψ transition scale; `None` means one fifth of the matched radius.
    pub c0: Option<f64>,
    /// Divisor applied to 𝔥.
    pub h_scale: f64,
    pub gap_min: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            v: PI,
            vmax: 2.0 * PI,
            eta: 0.1,
            tfrak: 0.05,
            tau: 0.0,
            c_nl: 0.04,
            c0: None,
            h_scale: 1.0,
            gap_min: DEFAULT_GAP_MIN,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.v > 0.0 && self.v < self.vmax) {
            return bad(format!("need 0 < v < vmax, got v = {}, vmax = {}", self.v, self.vmax));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.tfrak >= 0.0 && self.tfrak <= 1.0) {
            return bad(format!("Tfrak must lie in [0, 1], got {}", self.tfrak));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be nonnegative, got {}", self.tau));
        }
        if self.tau > 0.0 && !(self.c_nl > 0.0) {
            return bad(format!("c_nl must be positive when tau > 0, got {}", self.c_nl));
        }
        if !(self.h_scale > 0.0 && self.h_scale.is_finite()) {
            return bad(format!("h_scale must be positive, got {}", self.h_scale));
        }
        if let Some(c0) = self.c0 {
            if !(c0 > 0.0) {
                return bad(format!("c0 must be positive, got {c0}"));
            }
        }
        if !(self.gap_min >= 0.0) {
            return bad(format!("gap_min must be nonnegative, got {}", self.gap_min));
        }
        Ok(())
    }

    /// `𝔥` divided by `h_scale`.
    pub fn h_value(&self, d_star_sq: f64) -> f64 {
        nonlinearity_h(d_star_sq, self.c_nl) / self.h_scale
    }

    /// d(h_value)/d(d_star_sq).
    pub fn h_slope(&self, d_star_sq: f64) -> f64 {
        let c = self.c_nl;
        let e = d_star_sq - c;
        e / (c * c + e * e).sqrt() / self.h_scale
    }
}

/// `f_{v,η}(t)`: slope η below `v`, slope 1/η above.
pub fn volume_penalty(t: f64, v: f64, eta: f64) -> f64 {
    if t <= v {
        eta * (t - v)
    } else {
        (t - v) / eta
    }
}

/// One-sided slopes `(below, above)` of `f_{v,η}` at `t`.
pub fn volume_penalty_slopes(t: f64, v: f64, eta: f64) -> (f64, f64) {
    if t < v {
        (eta, eta)
    } else if t > v {
        (1.0 / eta, 1.0 / eta)
    } else {
        (eta, 1.0 / eta)
    }
}

/// `sqrt(c² + (c − s)²) − c`, minimal at `s = c`.
pub fn nonlinearity_h(d_star_sq: f64, c: f64) -> f64 {
    (c * c + (c - d_star_sq).powi(2)).sqrt() - c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub tor: f64,
    pub vol: f64,
    pub f_pen: f64,
    pub distances: DistanceReport,
    pub h_val: f64,
    pub e_base: f64,
    pub f_total: f64,
    pub gap_ok: bool,
}

/// Everything computed on one domain, kept for derivative evaluation.
pub struct Evaluation {
    pub domain: StarDomain,
    pub system: FemSystem,
    pub spectrum: SpectralResult,
    pub torsion: TorsionResult,
    pub report: EnergyReport,
}

pub fn evaluate(d: &StarDomain, p: &EnergyParams, h: f64) -> Result<EnergyReport> {
    Ok(evaluate_full(d, p, MeshTemplate::for_domain(d, h)?, h)?.report)
}

pub fn evaluate_full(d: &StarDomain, p: &EnergyParams, template: MeshTemplate, h: f64) -> Result<Evaluation> {
    p.validate()?;
    let vol = d.area();
    if vol > p.vmax {
        return Err(Error::HardCapViolation { area: vol, vmax: p.vmax });
    }
    let system = assemble(triangulate_with(d, template, h)?)?;
    let spectrum = solve_spectrum_with(&system, p.gap_min)?;
    let torsion = solve_torsion(&system)?;
    let distances = distance_report(d, &system, &spectrum, p.c0, None)?;
    let f_pen = volume_penalty(vol, p.v, p.eta);
    let e_base = spectrum.lambda1 + p.tfrak * torsion.tor + f_pen;
    let h_val = p.h_value(distances.d_star_sq);
    let report = EnergyReport {
        lambda1: spectrum.lambda1,
        lambda2: spectrum.lambda2,
        tor: torsion.tor,
        vol,
        f_pen,
        distances,
        h_val,
        e_base,
        f_total: e_base + p.tau * h_val,
        gap_ok: spectrum.gap_ok,
    };
    Ok(Evaluation { domain: d.clone(), system, spectrum, torsion, report })
}
