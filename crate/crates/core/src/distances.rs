//! Distances between a domain and its matched ball: symmetric difference,
//! L² distance of zero-extended eigenfunctions on a background grid, and the
//! combined quantity entering the nonlinearity.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::bessel::{j0, j0_first_zero, j1};
use crate::elliptic::{ScalarField, SpectralResult};
use crate::error::{Error, Result};
use crate::geometry::{asymmetry_with, symmetric_difference_ball, BallSpec, Point, PsiWeight, StarDomain};
use crate::mesh::{FemSystem, TriMesh};

/// Uniform grid of cell centers `origin + (i g, j g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub g: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid covering `[lo, hi]` plus a two-cell margin, with cell centers on
    /// the lattice `(k + ½) g`.
    pub fn covering(lo: Point, hi: Point, g: f64) -> Self {
        let i0 = ((lo.x - 2.0 * g) / g).floor();
        let j0 = ((lo.y - 2.0 * g) / g).floor();
        let i1 = ((hi.x + 2.0 * g) / g).ceil();
        let j1 = ((hi.y + 2.0 * g) / g).ceil();
        Self { origin: Point::new((i0 + 0.5) * g, (j0 + 0.5) * g), g, nx: (i1 - i0) as usize, ny: (j1 - j0) as usize }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.g * self.g
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        self.origin + Point::new(i as f64 * self.g, j as f64 * self.g)
    }
}

/// Field values at grid cell centers, row-major in `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> f64 + Sync) -> Self {
        let values = (0..grid.ny)
            .into_par_iter()
            .flat_map_iter(|j| (0..grid.nx).map(move |i| (i, j)).collect::<Vec<_>>())
            .map(|(i, j)| f(grid.point(i, j)))
            .collect();
        Self { grid, values }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `∫ |a - b|^p`.
    pub fn lp_difference(&self, other: &GridField, p: i32) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs().powi(p)).sum::<f64>() * self.grid.cell_area()
    }

    pub fn l2_difference(&self, other: &GridField) -> f64 {
        self.lp_difference(other, 2).sqrt()
    }
}

/// Bucket grid over mesh triangles for point location.
pub struct TriangleLocator<'a> {
    mesh: &'a TriMesh,
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl<'a> TriangleLocator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let (mut lo, mut hi) = (mesh.vertices[0], mesh.vertices[0]);
        for p in &mesh.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cell = (2.0 * mesh.h).max(1e-12);
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.triangles.len() {
            let p = mesh.triangle_points(t);
            let bx0 = ((p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min) - lo.x) / cell) as usize;
            let by0 = ((p.iter().map(|q| q.y).fold(f64::INFINITY, f64::min) - lo.y) / cell) as usize;
            let bx1 = ((p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max) - lo.x) / cell) as usize;
            let by1 = ((p.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max) - lo.y) / cell) as usize;
            for by in by0..=by1.min(ny - 1) {
                for bx in bx0..=bx1.min(nx - 1) {
                    buckets[by * nx + bx].push(t as u32);
                }
            }
        }
        Self { mesh, lo, cell, nx, ny, buckets }
    }

    /// Containing triangle and barycentric coordinates of `x`.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        let fx = (x.x - self.lo.x) / self.cell;
        let fy = (x.y - self.lo.y) / self.cell;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (bx, by) = (fx as usize, fy as usize);
        if bx >= self.nx || by >= self.ny {
            return None;
        }
        for &t in &self.buckets[by * self.nx + bx] {
            let [a, b, c] = self.mesh.triangle_points(t as usize);
            let det = (b - a).cross(c - a);
            let l1 = (x - a).cross(c - a) / det;
            let l2 = (b - a).cross(x - a) / det;
            let l0 = 1.0 - l1 - l2;
            let tol = -1e-12;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                return Some((t as usize, [l0, l1, l2]));
            }
        }
        None
    }

    /// Barycentric interpolation of a P1 field, zero outside the mesh.
    pub fn interpolate(&self, field: &ScalarField, x: Point) -> f64 {
        match self.locate(x) {
            Some((t, l)) => {
                let tri = self.mesh.triangles[t];
                (0..3).map(|k| l[k] * field.values[tri[k]]).sum()
            }
            None => 0.0,
        }
    }
}

/// Rasterizes a P1 field, extended by zero, onto `grid`.
pub fn rasterize(mesh: &TriMesh, field: &ScalarField, grid: GridSpec) -> GridField {
    let loc = TriangleLocator::new(mesh);
    GridField::from_fn(grid, |x| loc.interpolate(field, x))
}

/// First Dirichlet eigenfunction of a ball, normalized to unit L² norm and
/// positive, extended by zero.
pub fn ball_eigenfunction(b: &BallSpec, x: Point) -> f64 {
    let r = x.dist(b.center);
    if r >= b.radius {
        return 0.0;
    }
    let j = j0_first_zero();
    j0(j * r / b.radius) / (b.radius * PI.sqrt() * j1(j))
}

pub fn ball_eigenvalue(b: &BallSpec) -> f64 {
    (j0_first_zero() / b.radius).powi(2)
}

/// Ball with the area and barycenter of `d`.
pub fn matched_ball(d: &StarDomain) -> BallSpec {
    BallSpec { center: d.barycenter(), radius: (d.area() / PI).sqrt() }
}

fn mesh_bounds(mesh: &TriMesh) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &mesh.vertices {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Grid covering the mesh and the ball.
pub fn common_grid(mesh: &TriMesh, b: &BallSpec, g: f64) -> GridSpec {
    let (lo, hi) = mesh_bounds(mesh);
    let r = Point::new(b.radius, b.radius);
    let blo = b.center - r;
    let bhi = b.center + r;
    GridSpec::covering(Point::new(lo.x.min(blo.x), lo.y.min(blo.y)), Point::new(hi.x.max(bhi.x), hi.y.max(bhi.y)), g)
}

pub fn check_grid(g: f64, h: f64) -> Result<()> {
    if !(g > 0.0) || g > 0.5 * h * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { grid: g, h });
    }
    Ok(())
}

/// `‖u_Ω − u_B‖_{L²}` with the ball eigenfunction in closed form.
pub fn d1(sys: &FemSystem, s: &SpectralResult, b: &BallSpec, grid_g: f64) -> Result<f64> {
    check_grid(grid_g, sys.mesh.h)?;
    let grid = common_grid(&sys.mesh, b, grid_g);
    let uo = rasterize(&sys.mesh, &s.u, grid);
    let ub = GridField::from_fn(grid, |x| ball_eigenfunction(b, x));
    Ok(uo.l2_difference(&ub))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub d0: f64,
    /// Standard error of `d0` when it came from the Monte-Carlo fallback.
    pub d0_std_error: f64,
    pub d1: f64,
    pub asym: f64,
    pub d_star_sq: f64,
    pub matched_ball: BallSpec,
    pub c0: f64,
}

/// Composes matched ball, `d0`, asymmetry and `d1`. `c0` defaults to one
/// fifth of the matched radius and `grid_g` to half the mesh size.
pub fn distance_report(
    d: &StarDomain,
    sys: &FemSystem,
    s: &SpectralResult,
    c0: Option<f64>,
    grid_g: Option<f64>,
) -> Result<DistanceReport> {
    let b = matched_ball(d);
    let c0 = c0.unwrap_or_else(|| PsiWeight::default_c0(&b));
    let w = PsiWeight::new(b, c0)?;
    let d0 = symmetric_difference_ball(d, &b);
    let asym = asymmetry_with(d, &w);
    let d1 = d1(sys, s, &b, grid_g.unwrap_or(0.5 * sys.mesh.h))?;
    Ok(DistanceReport {
        d0: d0.value,
        d0_std_error: d0.std_error,
        d1,
        asym: asym.value,
        d_star_sq: asym.value + d1 * d1,
        matched_ball: b,
        c0,
    })
}
