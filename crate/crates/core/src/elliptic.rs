//! Dirichlet eigenpairs and the torsion function on an assembled system,
//! with variational recovery of boundary normal derivatives.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::mesh::FemSystem;

/// Block size of the subspace iteration. Six vectors cover λ₁ and the
/// (possibly doubly degenerate) λ₂ with a comfortable convergence ratio.
const BLOCK: usize = 6;
pub const MAX_ITER: usize = 500;
pub const RESIDUAL_TARGET: f64 = 1e-10;
pub const DEFAULT_GAP_MIN: f64 = 0.5;

/// Vertex values of a P1 function, zero on the boundary for Dirichlet
/// solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda1: f64,
    pub lambda2: f64,
    pub u: ScalarField,
    pub residual1: f64,
    pub residual2: f64,
    pub iterations: usize,
    pub gap_ok: bool,
}

#[derive(Debug, Clone)]
pub struct TorsionResult {
    pub w: ScalarField,
    pub tor: f64,
    /// `wᵀKw`, the discrete ∫|∇w|².
    pub dirichlet_energy: f64,
    /// `∫w` with the consistent mass matrix.
    pub integral: f64,
}

impl TorsionResult {
    /// `|∫|∇w|² − ∫w| / |∫w|`.
    pub fn identity_gap(&self) -> f64 {
        (self.dirichlet_energy - self.integral).abs() / self.integral.abs()
    }
}

/// Normal-derivative magnitudes per boundary vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFlux {
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
}

/// `|∂_ν u|` and `|∂_ν w|` sharing the boundary indexing of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub theta: Vec<f64>,
    pub grad_u: Vec<f64>,
    pub grad_w: Vec<f64>,
    /// Lumped arclength weight of each boundary vertex.
    pub weight: Vec<f64>,
}

fn m_inner(sys: &FemSystem, a: &[f64], b: &[f64]) -> f64 {
    (0..a.len()).map(|i| a[i] * sys.mass_ii.row_dot(i, b)).sum()
}

fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Two lowest eigenpairs of `K u = λ M u` by block inverse iteration with
/// Rayleigh-Ritz projection.
pub fn solve_spectrum(sys: &FemSystem) -> Result<SpectralResult> {
    solve_spectrum_with(sys, DEFAULT_GAP_MIN)
}

pub fn solve_spectrum_with(sys: &FemSystem, gap_min: f64) -> Result<SpectralResult> {
    let n = sys.n_interior();
    if n < BLOCK + 2 {
        return Err(Error::DegenerateMesh(format!("only {n} interior unknowns")));
    }
    let verts = &sys.mesh.vertices;
    let c = sys.mesh.vertices[0];
    let scale = sys.interior.iter().map(|&g| verts[g].dist(c)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut x = Mat::<f64>::from_fn(n, BLOCK, |i, j| {
        let p = verts[sys.interior[i]] - c;
        let (xs, ys) = (p.x / scale, p.y / scale);
        let poly = match j {
            0 => 1.0,
            1 => xs,
            2 => ys,
            3 => xs * xs - ys * ys,
            4 => 2.0 * xs * ys,
            _ => xs * xs + ys * ys,
        };
        // deterministic jitter so no start vector is orthogonal to a target mode
        poly + 1e-3 * ((i * 7919 + j * 104_729) % 1000) as f64 / 1000.0
    });

    let mut lambdas = [0.0; BLOCK];
    let mut res = [f64::INFINITY; 2];
    for iter in 1..=MAX_ITER {
        // y = K⁻¹ M x
        let mut y = Mat::<f64>::from_fn(n, BLOCK, |_, _| 0.0);
        for j in 0..BLOCK {
            let mx = sys.mass_ii.mul_vec(&column(&x, j));
            for i in 0..n {
                y[(i, j)] = mx[i];
            }
        }
        sys.solve_in_place(y.as_mut());

        // M-orthonormalize (modified Gram-Schmidt, twice for stability)
        let mut cols: Vec<Vec<f64>> = (0..BLOCK).map(|j| column(&y, j)).collect();
        for _ in 0..2 {
            for j in 0..BLOCK {
                for k in 0..j {
                    let proj = m_inner(sys, &cols[j], &cols[k]);
                    let (head, tail) = cols.split_at_mut(j);
                    for (a, b) in tail[0].iter_mut().zip(&head[k]) {
                        *a -= proj * b;
                    }
                }
                let nrm = m_inner(sys, &cols[j], &cols[j]).sqrt();
                if !(nrm > 0.0 && nrm.is_finite()) {
                    return Err(Error::SolveFailure("subspace collapsed".into()));
                }
                cols[j].iter_mut().for_each(|v| *v /= nrm);
            }
        }

        // Rayleigh-Ritz on the M-orthonormal basis
        let kcols: Vec<Vec<f64>> = cols.iter().map(|v| sys.stiffness_ii.mul_vec(v)).collect();
        let a = Mat::<f64>::from_fn(BLOCK, BLOCK, |i, j| {
            let s: f64 = cols[i].iter().zip(&kcols[j]).map(|(p, q)| p * q).sum();
            let t: f64 = cols[j].iter().zip(&kcols[i]).map(|(p, q)| p * q).sum();
            0.5 * (s + t)
        });
        let evd =
            a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::SolveFailure(format!("Ritz eigenproblem: {e:?}")))?;
        let q = evd.U();
        let s = evd.S();
        for j in 0..BLOCK {
            lambdas[j] = s[j];
        }
        x = Mat::<f64>::from_fn(n, BLOCK, |i, j| (0..BLOCK).map(|k| cols[k][i] * q[(k, j)]).sum());

        for (j, r) in res.iter_mut().enumerate() {
            let v = column(&x, j);
            let kv = sys.stiffness_ii.mul_vec(&v);
            let mv = sys.mass_ii.mul_vec(&v);
            let num: f64 = kv.iter().zip(&mv).map(|(a, b)| (a - lambdas[j] * b).powi(2)).sum();
            let den: f64 = mv.iter().map(|b| b * b).sum();
            *r = (num / den).sqrt() / lambdas[j];
        }
        if res[0] < RESIDUAL_TARGET && res[1] < RESIDUAL_TARGET {
            let mut u = column(&x, 0);
            let nrm = m_inner(sys, &u, &u).sqrt();
            let mean: f64 = (0..n).map(|i| sys.mass_ii.row_dot(i, &u)).sum();
            let sign = if mean < 0.0 { -1.0 } else { 1.0 };
            u.iter_mut().for_each(|v| *v *= sign / nrm);
            let u = ScalarField { values: sys.extend(&u) };
            let min = u.min();
            if min < -1e-10 {
                return Err(Error::SignViolation { min });
            }
            return Ok(SpectralResult {
                lambda1: lambdas[0],
                lambda2: lambdas[1],
                u,
                residual1: res[0] * lambdas[0],
                residual2: res[1] * lambdas[1],
                iterations: iter,
                gap_ok: lambdas[1] - lambdas[0] >= gap_min,
            });
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITER, residual: res[0].max(res[1]) })
}

/// Solves `-Δw = 1` with zero Dirichlet data.
pub fn solve_torsion(sys: &FemSystem) -> Result<TorsionResult> {
    let n = sys.n_interior();
    let ones = vec![1.0; sys.mesh.n_vertices()];
    let load_full = sys.mass.mul_vec(&ones);
    let load: Vec<f64> = sys.interior.iter().map(|&g| load_full[g]).collect();
    let mut w = sys.solve(&load);
    // one step of iterative refinement
    let kw = sys.stiffness_ii.mul_vec(&w);
    let r: Vec<f64> = (0..n).map(|i| load[i] - kw[i]).collect();
    let dw = sys.solve(&r);
    w.iter_mut().zip(&dw).for_each(|(a, b)| *a += b);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveFailure("torsion solve produced non-finite values".into()));
    }
    let dirichlet_energy = sys.stiffness_ii.quad_form(&w);
    let integral: f64 = w.iter().zip(&load).map(|(a, b)| a * b).sum();
    Ok(TorsionResult {
        w: ScalarField { values: sys.extend(&w) },
        tor: 0.5 * dirichlet_energy - integral,
        dirichlet_energy,
        integral,
    })
}

/// Variational flux recovery: `|(K u − M rhs)_b|` divided by the lumped
/// boundary length at `b`.
pub fn boundary_flux(sys: &FemSystem, field: &ScalarField, rhs: &ScalarField) -> BoundaryFlux {
    let mesh = &sys.mesh;
    let values = mesh
        .boundary
        .iter()
        .zip(&sys.boundary_length)
        .map(|(&b, &len)| {
            let r = sys.stiffness.row_dot(b, &field.values) - sys.mass.row_dot(b, &rhs.values);
            r.abs() / len
        })
        .collect();
    BoundaryFlux { theta: mesh.boundary_theta.clone(), values }
}

pub fn boundary_traces(sys: &FemSystem, s: &SpectralResult, t: &TorsionResult) -> BoundaryTrace {
    let nv = sys.mesh.n_vertices();
    let lu = ScalarField { values: s.u.values.iter().map(|v| s.lambda1 * v).collect() };
    let fu = boundary_flux(sys, &s.u, &lu);
    let fw = boundary_flux(sys, &t.w, &ScalarField::constant(nv, 1.0));
    BoundaryTrace { theta: fu.theta, grad_u: fu.values, grad_w: fw.values, weight: sys.boundary_length.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthDiagnostics {
    pub up: f64,
    pub down: f64,
}

/// Vertex-sampled estimates of the growth quantities
/// `sup (u + √𝔗 w)/dist(x, ∂Ω)` and
/// `inf_{y ∈ ∂Ω, r} sup_{B_r(y)} (u + √𝔗 w)/r`.
pub fn growth_diagnostics(sys: &FemSystem, s: &SpectralResult, t: &TorsionResult, tfrak: f64) -> GrowthDiagnostics {
    let mesh = &sys.mesh;
    let st = tfrak.max(0.0).sqrt();
    let g: Vec<f64> = (0..mesh.n_vertices()).map(|i| s.u.values[i] + st * t.w.values[i]).collect();
    let up = sys
        .interior
        .iter()
        .map(|&i| {
            let d = mesh.distance_to_boundary(mesh.vertices[i]);
            if d > 0.0 {
                g[i] / d
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);

    let c = mesh.vertices[0];
    let inradius = mesh.distance_to_boundary(c);
    let radii: Vec<f64> = (1..8).map(|k| inradius * 0.5f64.powi(k)).filter(|&r| r >= 4.0 * mesh.h).collect();
    let nb = mesh.boundary.len();
    let stride = (nb / 64).max(1);
    let mut down = f64::INFINITY;
    for k in (0..nb).step_by(stride) {
        let y = mesh.vertices[mesh.boundary[k]];
        let mut best = vec![0.0f64; radii.len()];
        for (i, p) in mesh.vertices.iter().enumerate() {
            let dist = p.dist(y);
            for (j, &r) in radii.iter().enumerate() {
                if dist < r {
                    best[j] = best[j].max(g[i]);
                }
            }
        }
        for (j, &r) in radii.iter().enumerate() {
            down = down.min(best[j] / r);
        }
    }
    if !down.is_finite() {
        down = 0.0;
    }
    GrowthDiagnostics { up, down }
}
