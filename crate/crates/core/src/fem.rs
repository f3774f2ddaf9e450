//! P1 finite elements on the unit interval and unit square with homogeneous
//! Dirichlet conditions. The 2D mesh is the uniform criss-cross triangulation:
//! every h-square is split along the diagonal from its lower-left to its
//! upper-right corner.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{BandMatrix, Csr};

/// Assembled interior-DOF mass and stiffness matrices.
#[derive(Debug, Clone)]
pub struct SpatialDiscretization {
    pub dim: usize,
    pub h: f64,
    pub n_dof: usize,
    pub mass: Csr,
    pub stiffness: Csr,
    /// Interior node coordinates; y = 0 in 1D.
    pub node_coords: Vec<[f64; 2]>,
}

/// Problem data to be projected or integrated against the basis.
pub enum SpatialData<'a> {
    Function(&'a dyn Fn(f64, f64) -> f64),
    /// Characteristic function of (a, b) in 1D.
    Chi1d { a: f64, b: f64 },
    /// Characteristic function of (x0, x1) x (y0, y1) in 2D.
    Chi2d { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Dirac measure at an interior point.
    PointMass { x: f64, y: f64 },
}

fn cells_per_side(h: f64) -> Result<usize> {
    let inv = 1.0 / h;
    let n = inv.round();
    if !(n >= 2.0 && (inv - n).abs() < 1e-9 * n) {
        return Err(Error::InvalidMesh(inv));
    }
    Ok(n as usize)
}

/// Assemble mass and stiffness on the unit interval (dim=1) or square (dim=2).
pub fn assemble(dim: usize, h: f64) -> Result<SpatialDiscretization> {
    match dim {
        1 => assemble_1d(h),
        2 => assemble_2d(h),
        _ => Err(Error::Config(format!("unsupported spatial dimension {dim}"))),
    }
}

fn assemble_1d(h: f64) -> Result<SpatialDiscretization> {
    let n = cells_per_side(h)?;
    let n_dof = n - 1;
    let dof = |node: usize| -> Option<usize> {
        if node >= 1 && node < n {
            Some(node - 1)
        } else {
            None
        }
    };
    let mut km = Vec::new();
    let mut mm = Vec::new();
    let ke = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let me = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
    for e in 0..n {
        let nodes = [e, e + 1];
        for (a, &na) in nodes.iter().enumerate() {
            let Some(i) = dof(na) else { continue };
            for (b, &nb) in nodes.iter().enumerate() {
                let Some(j) = dof(nb) else { continue };
                km.push((i, j, ke[a][b]));
                mm.push((i, j, me[a][b]));
            }
        }
    }
    let node_coords = (1..n).map(|i| [i as f64 * h, 0.0]).collect();
    Ok(SpatialDiscretization {
        dim: 1,
        h,
        n_dof,
        mass: Csr::from_triplets(n_dof, &mm),
        stiffness: Csr::from_triplets(n_dof, &km),
        node_coords,
    })
}

/// Element stiffness/mass for a P1 triangle given its vertex coordinates.
fn triangle_matrices(p: &[[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3], f64) {
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let det = b[0] * c[1] - b[1] * c[0];
    let area = 0.5 * det.abs();
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (ke, me, area)
}

/// Vertex coordinates of the two triangles in cell (i, j).
fn cell_triangles(i: usize, j: usize, h: f64) -> [[[f64; 2]; 3]; 2] {
    let (x0, y0) = (i as f64 * h, j as f64 * h);
    let (x1, y1) = (x0 + h, y0 + h);
    [
        [[x0, y0], [x1, y0], [x1, y1]],
        [[x0, y0], [x1, y1], [x0, y1]],
    ]
}

fn assemble_2d(h: f64) -> Result<SpatialDiscretization> {
    let n = cells_per_side(h)?;
    let n_dof = (n - 1) * (n - 1);
    let dof = |x: f64, y: f64| -> Option<usize> {
        let i = (x / h).round() as isize;
        let j = (y / h).round() as isize;
        let n = n as isize;
        if i >= 1 && i < n && j >= 1 && j < n {
            Some(((j - 1) * (n - 1) + (i - 1)) as usize)
        } else {
            None
        }
    };
    let mut km = Vec::new();
    let mut mm = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for tri in cell_triangles(i, j, h) {
                let (ke, me, _) = triangle_matrices(&tri);
                for a in 0..3 {
                    let Some(r) = dof(tri[a][0], tri[a][1]) else { continue };
                    for b in 0..3 {
                        let Some(c) = dof(tri[b][0], tri[b][1]) else { continue };
                        km.push((r, c, ke[a][b]));
                        mm.push((r, c, me[a][b]));
                    }
                }
            }
        }
    }
    let mut node_coords = Vec::with_capacity(n_dof);
    for j in 1..n {
        for i in 1..n {
            node_coords.push([i as f64 * h, j as f64 * h]);
        }
    }
    Ok(SpatialDiscretization {
        dim: 2,
        h,
        n_dof,
        mass: Csr::from_triplets(n_dof, &mm),
        stiffness: Csr::from_triplets(n_dof, &km),
        node_coords,
    })
}

impl SpatialDiscretization {
    fn dof_of_node_1d(&self, node: usize) -> Option<usize> {
        let n = cells_per_side(self.h).unwrap();
        if node >= 1 && node < n {
            Some(node - 1)
        } else {
            None
        }
    }

    fn dof_of_node_2d(&self, i: usize, j: usize) -> Option<usize> {
        let n = cells_per_side(self.h).unwrap();
        if i >= 1 && i < n && j >= 1 && j < n {
            Some((j - 1) * (n - 1) + (i - 1))
        } else {
            None
        }
    }

    /// Assemble `rhs_i = integral(data * phi_i)`, or `phi_i(x0)` for a point
    /// mass.
    pub fn data_functional(&self, data: &SpatialData) -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; self.n_dof];
        match (self.dim, data) {
            (1, SpatialData::Function(f)) => {
                let n = cells_per_side(self.h)?;
                let h = self.h;
                // 2-point Gauss per element
                let g = 0.5 / 3.0f64.sqrt();
                for e in 0..n {
                    let xl = e as f64 * h;
                    for s in [0.5 - g, 0.5 + g] {
                        let x = xl + s * h;
                        let w = 0.5 * h;
                        let val = f(x, 0.0);
                        if let Some(i) = self.dof_of_node_1d(e) {
                            rhs[i] += w * val * (1.0 - s);
                        }
                        if let Some(i) = self.dof_of_node_1d(e + 1) {
                            rhs[i] += w * val * s;
                        }
                    }
                }
            }
            (1, SpatialData::Chi1d { a, b }) => {
                let n = cells_per_side(self.h)?;
                let h = self.h;
                for e in 0..n {
                    let (xl, xr) = (e as f64 * h, (e + 1) as f64 * h);
                    let c = a.max(xl);
                    let d = b.min(xr);
                    if d <= c {
                        continue;
                    }
                    // exact integrals of the two hats over [c, d]
                    let int_left = ((xr - c).powi(2) - (xr - d).powi(2)) / (2.0 * h);
                    let int_right = ((d - xl).powi(2) - (c - xl).powi(2)) / (2.0 * h);
                    if let Some(i) = self.dof_of_node_1d(e) {
                        rhs[i] += int_left;
                    }
                    if let Some(i) = self.dof_of_node_1d(e + 1) {
                        rhs[i] += int_right;
                    }
                }
            }
            (1, SpatialData::PointMass { x, y: _ }) => {
                if !(*x > 0.0 && *x < 1.0) {
                    return Err(Error::OutsideDomain(*x, 0.0));
                }
                let n = cells_per_side(self.h)?;
                let e = ((x / self.h).floor() as usize).min(n - 1);
                let s = (x - e as f64 * self.h) / self.h;
                if let Some(i) = self.dof_of_node_1d(e) {
                    rhs[i] += 1.0 - s;
                }
                if let Some(i) = self.dof_of_node_1d(e + 1) {
                    rhs[i] += s;
                }
            }
            (2, SpatialData::Function(f)) => {
                self.for_each_triangle(|disc, tri| {
                    let (_, _, area) = triangle_matrices(tri);
                    // edge-midpoint rule, exact for quadratics
                    for a in 0..3 {
                        let (p, q) = (tri[(a + 1) % 3], tri[(a + 2) % 3]);
                        let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                        let val = f(mid[0], mid[1]);
                        for b in 0..3 {
                            // phi_b at the midpoint opposite vertex a
                            let phi = if b == a { 0.0 } else { 0.5 };
                            if let Some(i) = disc.dof_of_point(tri[b]) {
                                rhs[i] += area / 3.0 * val * phi;
                            }
                        }
                    }
                });
            }
            (2, SpatialData::Chi2d { x0, x1, y0, y1 }) => {
                let rect = [*x0, *x1, *y0, *y1];
                self.for_each_triangle(|disc, tri| {
                    for b in 0..3 {
                        let mut phi = [0.0; 3];
                        phi[b] = 1.0;
                        let v = integrate_hat_over_rect(tri, &phi, &rect, 0);
                        if let Some(i) = disc.dof_of_point(tri[b]) {
                            rhs[i] += v;
                        }
                    }
                });
            }
            (2, SpatialData::PointMass { x, y }) => {
                if !(*x > 0.0 && *x < 1.0 && *y > 0.0 && *y < 1.0) {
                    return Err(Error::OutsideDomain(*x, *y));
                }
                let n = cells_per_side(self.h)?;
                let h = self.h;
                let i = ((x / h).floor() as usize).min(n - 1);
                let j = ((y / h).floor() as usize).min(n - 1);
                let (lx, ly) = ((x - i as f64 * h) / h, (y - j as f64 * h) / h);
                // lower triangle covers lx >= ly
                let (tri, bary) = if lx >= ly {
                    (cell_triangles(i, j, h)[0], [1.0 - lx, lx - ly, ly])
                } else {
                    (cell_triangles(i, j, h)[1], [1.0 - ly, lx, ly - lx])
                };
                for b in 0..3 {
                    if let Some(idx) = self.dof_of_point(tri[b]) {
                        rhs[idx] += bary[b];
                    }
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "data kind not supported in dimension {}",
                    self.dim
                )))
            }
        }
        Ok(rhs)
    }

    fn dof_of_point(&self, p: [f64; 2]) -> Option<usize> {
        match self.dim {
            1 => self.dof_of_node_1d((p[0] / self.h).round() as usize),
            _ => self.dof_of_node_2d(
                (p[0] / self.h).round() as usize,
                (p[1] / self.h).round() as usize,
            ),
        }
    }

    fn for_each_triangle(&self, mut body: impl FnMut(&Self, &[[f64; 2]; 3])) {
        let n = cells_per_side(self.h).unwrap();
        for i in 0..n {
            for j in 0..n {
                for tri in cell_triangles(i, j, self.h) {
                    body(self, &tri);
                }
            }
        }
    }

    /// Factor the mass matrix for repeated L2 projections.
    pub fn factor_mass(&self) -> Result<crate::linalg::BandLu> {
        let band = self.mass.bandwidth();
        let mut m = BandMatrix::zeros(self.n_dof, band, band);
        for i in 0..self.n_dof {
            let (cols, vals) = self.mass.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m.add(i, j, Complex64::new(v, 0.0));
            }
        }
        m.factorize()
    }
}

/// Integral of a linear function (given by vertex values `phi`) over the part
/// of the triangle inside the rectangle `[x0, x1] x [y0, y1]`. Mesh-aligned
/// rectangles resolve exactly; cut triangles fall back to recursive bisection.
fn integrate_hat_over_rect(tri: &[[f64; 2]; 3], phi: &[f64; 3], rect: &[f64; 4], depth: u32) -> f64 {
    let (_, _, area) = triangle_matrices(tri);
    let inside = |p: [f64; 2]| {
        p[0] >= rect[0] - 1e-13 && p[0] <= rect[1] + 1e-13 && p[1] >= rect[2] - 1e-13 && p[1] <= rect[3] + 1e-13
    };
    let all_in = tri.iter().all(|&p| inside(p));
    if all_in {
        return area * (phi[0] + phi[1] + phi[2]) / 3.0;
    }
    let (min_x, max_x) = tri.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[0]), b.max(p[0])));
    let (min_y, max_y) = tri.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[1]), b.max(p[1])));
    if max_x <= rect[0] + 1e-13 || min_x >= rect[1] - 1e-13 || max_y <= rect[2] + 1e-13 || min_y >= rect[3] - 1e-13 {
        return 0.0;
    }
    if depth >= 12 {
        let cx = (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0;
        let cy = (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0;
        return if inside([cx, cy]) { area * (phi[0] + phi[1] + phi[2]) / 3.0 } else { 0.0 };
    }
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let (m01, m12, m20) = (mid(tri[0], tri[1]), mid(tri[1], tri[2]), mid(tri[2], tri[0]));
    let pm = |a: f64, b: f64| (a + b) / 2.0;
    let (f01, f12, f20) = (pm(phi[0], phi[1]), pm(phi[1], phi[2]), pm(phi[2], phi[0]));
    let subs: [([[f64; 2]; 3], [f64; 3]); 4] = [
        ([tri[0], m01, m20], [phi[0], f01, f20]),
        ([m01, tri[1], m12], [f01, phi[1], f12]),
        ([m20, m12, tri[2]], [f20, f12, phi[2]]),
        ([m01, m12, m20], [f01, f12, f20]),
    ];
    subs.iter().map(|(t, p)| integrate_hat_over_rect(t, p, rect, depth + 1)).sum()
}

/// L2 projection of `data` onto the interior FEM space: solve `M v = rhs`.
pub fn l2_project(disc: &SpatialDiscretization, data: &SpatialData) -> Result<Vec<f64>> {
    let rhs = disc.data_functional(data)?;
    let lu = disc.factor_mass()?;
    Ok(lu.solve_real(&rhs))
}

/// Load vector `rhs_i = integral(f(x, t) phi_i(x))` at a fixed time.
pub fn load_vector(
    disc: &SpatialDiscretization,
    f: &dyn Fn(f64, f64, f64) -> f64,
    t: f64,
) -> Result<Vec<f64>> {
    let frozen = move |x: f64, y: f64| f(x, y, t);
    disc.data_functional(&SpatialData::Function(&frozen))
}
