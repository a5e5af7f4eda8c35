//! Mapped-polar triangulation of star-shaped domains and P1 assembly.
//!
//! The reference mesh is a hexagonal disk: ring `i` carries `6i` vertices at
//! uniform reference angles and consecutive rings are zipped together by
//! angle. Vertex `(i, m)` maps to `center + (i/N) r(θ) (cos θ, sin θ)`, so the
//! outer ring lies exactly on the boundary curve.

use std::f64::consts::PI;
use std::io::{self, Write};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatMut, Side};

use crate::error::{Error, Result};
use crate::geometry::{Point, StarDomain};

/// Ring count of a mapped-polar mesh. Perturbed domains built from the same
/// template share connectivity, which keeps finite differences smooth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshTemplate {
    pub rings: usize,
}

impl MeshTemplate {
    pub fn for_domain(d: &StarDomain, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= d.r0() / 4.0) {
            return Err(Error::InvalidParams(format!(
                "mesh size h = {h} must lie in (0, r0/4] = (0, {}]",
                d.r0() / 4.0
            )));
        }
        Ok(Self { rings: ((d.max_radius() / h).ceil() as usize).max(2) })
    }

    pub fn vertex_count(&self) -> usize {
        1 + 3 * self.rings * (self.rings + 1)
    }

    pub fn triangle_count(&self) -> usize {
        6 * self.rings * self.rings
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    /// Boundary vertex indices in counterclockwise order.
    pub boundary: Vec<usize>,
    /// Absolute polar angle (about the domain center) of each boundary vertex.
    pub boundary_theta: Vec<f64>,
    pub h: f64,
    pub template: MeshTemplate,
}

fn ring_start(i: usize) -> usize {
    if i == 0 {
        0
    } else {
        1 + 3 * i * (i - 1)
    }
}

fn ring_len(i: usize) -> usize {
    if i == 0 {
        1
    } else {
        6 * i
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Smallest triangle angle a mesh may have.
pub const MIN_ANGLE_DEG: f64 = 20.0;

pub fn triangulate(d: &StarDomain, h: f64) -> Result<TriMesh> {
    let template = MeshTemplate::for_domain(d, h)?;
    triangulate_with(d, template, h)
}

/// Meshes `d` on a fixed template; `h` is recorded for bookkeeping only.
pub fn triangulate_with(d: &StarDomain, template: MeshTemplate, h: f64) -> Result<TriMesh> {
    let n = template.rings;
    if n < 1 {
        return Err(Error::InvalidParams("mesh template needs at least one ring".into()));
    }
    let c = d.center();
    let mut vertices = Vec::with_capacity(template.vertex_count());
    vertices.push(c);
    let mut boundary_theta = Vec::with_capacity(6 * n);
    for i in 1..=n {
        let s = i as f64 / n as f64;
        let len = ring_len(i);
        for m in 0..len {
            let theta = d.phase() + 2.0 * PI * m as f64 / len as f64;
            let r = if i == n { d.radius(theta) } else { s * d.radius(theta) };
            if r <= 0.0 {
                return Err(Error::DegenerateMesh(format!("non-positive radius at θ = {theta}")));
            }
            vertices.push(c + Point::polar(r, theta));
            if i == n {
                boundary_theta.push(theta);
            }
        }
    }

    let mut triangles = Vec::with_capacity(template.triangle_count());
    for m in 0..6 {
        triangles.push([0, 1 + m, 1 + (m + 1) % 6]);
    }
    for i in 1..n {
        let (a0, na) = (ring_start(i), ring_len(i));
        let (b0, nb) = (ring_start(i + 1), ring_len(i + 1));
        let (mut p, mut q) = (0usize, 0usize);
        while p < na || q < nb {
            let next_a = (p + 1) as f64 / na as f64;
            let next_b = (q + 1) as f64 / nb as f64;
            let ia = a0 + p % na;
            let ib = b0 + q % nb;
            if q < nb && (p == na || next_b <= next_a) {
                triangles.push([ia, ib, b0 + (q + 1) % nb]);
                q += 1;
            } else {
                triangles.push([ia, ib, a0 + (p + 1) % na]);
                p += 1;
            }
        }
    }

    for (t, tri) in triangles.iter().enumerate() {
        let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if !(area > 0.0) {
            return Err(Error::DegenerateMesh(format!("triangle {t} has signed area {area:.3e}")));
        }
    }

    let b0 = ring_start(n);
    let mesh = TriMesh { vertices, triangles, boundary: (b0..b0 + ring_len(n)).collect(), boundary_theta, h, template };
    let angle = mesh.min_angle_deg();
    if angle < MIN_ANGLE_DEG {
        return Err(Error::DegenerateMesh(format!(
            "minimum angle {angle:.2}° is below {MIN_ANGLE_DEG}°; the boundary is too steep for the polar template"
        )));
    }
    Ok(mesh)
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                signed_area(a, b, c)
            })
            .sum()
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let ang = u.cross(v).abs().atan2(u.dot(v));
                min = min.min(ang);
            }
        }
        min.to_degrees()
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n_vertices()];
        for &b in &self.boundary {
            flags[b] = true;
        }
        flags
    }

    /// Distance from `x` to the boundary polygon.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        let nb = self.boundary.len();
        (0..nb)
            .map(|k| {
                let a = self.vertices[self.boundary[k]];
                let b = self.vertices[self.boundary[(k + 1) % nb]];
                let ab = b - a;
                let t = ((x - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
                x.dist(a + ab * t)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes vertices and triangles as two CSV sections.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "vertex,x,y,boundary")?;
        let flags = self.is_boundary();
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(w, "{i},{:.17e},{:.17e},{}", p.x, p.y, flags[i] as u8)?;
        }
        writeln!(w, "triangle,a,b,c")?;
        for (t, tri) in self.triangles.iter().enumerate() {
            writeln!(w, "{t},{},{},{}", tri[0], tri[1], tri[2])?;
        }
        Ok(())
    }
}

/// Compressed sparse row matrix with sorted, merged columns.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(j, v)| v * x[j]).sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row_dot(i, x)).sum()
    }

    /// Largest |A_ij - A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `keep`, where `map[i]` is the new index of `i`.
    fn restrict(&self, map: &[Option<usize>], m: usize) -> Self {
        let mut entries = Vec::new();
        for i in 0..self.n {
            let Some(ri) = map[i] else { continue };
            for (j, v) in self.row(i) {
                if let Some(rj) = map[j] {
                    entries.push((ri, rj, v));
                }
            }
        }
        Self::from_triplets(m, entries)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut trip = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                trip.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::SolveFailure(format!("sparse structure: {e:?}")))
    }
}

/// Assembled P1 stiffness and mass matrices with the Dirichlet-reduced
/// stiffness factorized once.
pub struct FemSystem {
    pub mesh: TriMesh,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// Global indices of the interior unknowns.
    pub interior: Vec<usize>,
    /// Interior index of each vertex, `None` on the boundary.
    pub dof: Vec<Option<usize>>,
    pub stiffness_ii: CsrMatrix,
    pub mass_ii: CsrMatrix,
    /// Half the length of the two boundary edges adjacent to each boundary vertex.
    pub boundary_length: Vec<f64>,
    factor: Llt<usize, f64>,
}

impl std::fmt::Debug for FemSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FemSystem")
            .field("vertices", &self.mesh.n_vertices())
            .field("interior", &self.interior.len())
            .finish()
    }
}

pub fn assemble(mesh: TriMesh) -> Result<FemSystem> {
    let nv = mesh.n_vertices();
    let mut k_entries = Vec::with_capacity(9 * mesh.triangles.len());
    let mut m_entries = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(t);
        let area = signed_area(p[0], p[1], p[2]);
        // gradient of the hat at vertex k is perp(opposite edge) / (2 area)
        let g: [Point; 3] = std::array::from_fn(|k| {
            let e = p[(k + 2) % 3] - p[(k + 1) % 3];
            Point::new(-e.y, e.x) * (1.0 / (2.0 * area))
        });
        for a in 0..3 {
            for b in 0..3 {
                k_entries.push((tri[a], tri[b], area * g[a].dot(g[b])));
                let mv = if a == b { area / 6.0 } else { area / 12.0 };
                m_entries.push((tri[a], tri[b], mv));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(nv, k_entries);
    let mass = CsrMatrix::from_triplets(nv, m_entries);

    let flags = mesh.is_boundary();
    let mut dof = vec![None; nv];
    let mut interior = Vec::with_capacity(nv);
    for i in 0..nv {
        if !flags[i] {
            dof[i] = Some(interior.len());
            interior.push(i);
        }
    }
    let stiffness_ii = stiffness.restrict(&dof, interior.len());
    let mass_ii = mass.restrict(&dof, interior.len());
    let factor = stiffness_ii
        .to_faer()?
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::SolveFailure(format!("Cholesky of the stiffness matrix: {e:?}")))?;

    let nb = mesh.boundary.len();
    let boundary_length = (0..nb)
        .map(|k| {
            let v = |j: usize| mesh.vertices[mesh.boundary[j % nb]];
            0.5 * (v(k).dist(v(k + 1)) + v(k).dist(v(k + nb - 1)))
        })
        .collect();

    Ok(FemSystem { mesh, stiffness, mass, interior, dof, stiffness_ii, mass_ii, boundary_length, factor })
}

impl FemSystem {
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Solves `K_II x = b` in place for every column of `b`.
    pub fn solve_in_place(&self, b: MatMut<'_, f64>) {
        self.factor.solve_in_place(b);
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|i| b[(i, 0)]).collect()
    }

    /// Extends interior values by zero to every vertex.
    pub fn extend(&self, interior_values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.mesh.n_vertices()];
        for (k, &g) in self.interior.iter().enumerate() {
            full[g] = interior_values[k];
        }
        full
    }

    /// `∫ f` for a P1 field given by vertex values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.mass.mul_vec(values).iter().sum()
    }
}
