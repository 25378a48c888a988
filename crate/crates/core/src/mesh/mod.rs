//! Straight conforming triangulations.

mod disk;
mod gmsh;
mod refine;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::BoundaryChart;
use crate::Vec2;

pub use disk::generate_disk_mesh;
pub use gmsh::{read_gmsh, write_gmsh22};
pub use refine::{refinement_sequence, uniform_refine};

/// An edge with its one or two incident triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints, lower vertex index first. This is also the global edge
    /// orientation.
    pub vertices: [usize; 2],
    /// `(triangle, local edge index)` pairs; the second is `None` on the
    /// boundary.
    pub triangles: [Option<(usize, usize)>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

/// A straight triangulation `T_h¹` whose boundary vertices carry chart
/// parameters.
///
/// Local edge `i` of a triangle is the edge opposite local vertex `i`, i.e.
/// from vertex `(i + 1) % 3` to vertex `(i + 2) % 3`.
#[derive(Clone, Debug)]
pub struct Triangulation {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Global edge index of each local edge.
    pub triangle_edges: Vec<[usize; 3]>,
    /// Chart parameter of each vertex on `∂Ω`.
    pub boundary_params: Vec<Option<f64>>,
    pub boundary_edges: Vec<usize>,
    /// Maximal element diameter.
    pub h: f64,
}

impl Triangulation {
    /// Builds the edge structure. Clockwise triangles are reoriented;
    /// degenerate or non-manifold input is rejected.
    pub fn new(
        vertices: Vec<Vec2>,
        mut triangles: Vec<[usize; 3]>,
        boundary_params: Vec<Option<f64>>,
    ) -> Result<Self> {
        if boundary_params.len() != vertices.len() {
            return Err(Error::InvalidMesh(
                "boundary parameter list does not match vertex count".into(),
            ));
        }
        for (i, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {i} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area == 0.0 || !area.is_finite() {
                return Err(Error::InvalidMesh(format!("triangle {i} is degenerate")));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let idx = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        triangles: [None, None],
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[idx];
                if edge.triangles[0].is_none() {
                    edge.triangles[0] = Some((t, i));
                } else if edge.triangles[1].is_none() {
                    edge.triangles[1] = Some((t, i));
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) has more than two triangles",
                        key.0, key.1
                    )));
                }
                *slot = idx;
            }
            triangle_edges.push(local);
        }
        let boundary_edges = (0..edges.len()).filter(|&e| edges[e].is_boundary()).collect();
        let h = triangles
            .iter()
            .map(|tri| diameter(&vertices, tri))
            .fold(0.0, f64::max);
        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            boundary_params,
            boundary_edges,
            h,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    /// Local index of the edge of triangle `t` lying on the boundary, if any.
    pub fn boundary_local_edge(&self, t: usize) -> Option<usize> {
        (0..3).find(|&i| self.edges[self.triangle_edges[t][i]].is_boundary())
    }

    /// Marks vertices on the boundary: those with a chart parameter or on a
    /// boundary edge.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask: Vec<bool> = self.boundary_params.iter().map(Option::is_some).collect();
        for &e in &self.boundary_edges {
            for v in self.edges[e].vertices {
                mask[v] = true;
            }
        }
        mask
    }

    /// Checks that every boundary-edge endpoint carries a parameter placing
    /// it on `chart` within `tol`.
    pub fn check_on_chart(&self, chart: &BoundaryChart, tol: f64) -> Result<()> {
        for &e in &self.boundary_edges {
            for v in self.edges[e].vertices {
                let t = self.boundary_params[v].ok_or_else(|| {
                    Error::InvalidMesh(format!("boundary vertex {v} has no chart parameter"))
                })?;
                let distance = (chart.eval(t)? - self.vertices[v]).norm();
                if distance > tol {
                    return Err(Error::ProjectionDistance {
                        vertex: v,
                        distance,
                        allowed: tol,
                    });
                }
            }
        }
        Ok(())
    }

    /// Structured `n × n` mesh of the unit square, each cell cut along its
    /// diagonal. Carries no chart parameters.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("unit square needs n ≥ 1".into()));
        }
        let step = 1.0 / n as f64;
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Vec2::new(i as f64 * step, j as f64 * step));
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        let nv = vertices.len();
        Self::new(vertices, triangles, vec![None; nv])
    }
}

pub(crate) fn signed_area(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    0.5 * ((b - a).perp(&(c - a)))
}

fn diameter(vertices: &[Vec2], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| vertices[v]);
    (a - b).norm().max((b - c).norm()).max((c - a).norm())
}

fn min_angle_deg(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let angle = |p: Vec2, q: Vec2, r: Vec2| {
        let u = q - p;
        let v = r - p;
        (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
    };
    angle(a, b, c)
        .min(angle(b, c, a))
        .min(angle(c, a, b))
        .to_degrees()
}

/// Summary of a triangulation and of the boundary-layer hypothesis: no
/// triangle may have three boundary vertices or two boundary edges.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshReport {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub n_edges: usize,
    pub h: f64,
    /// Smallest interior angle over all triangles, in degrees.
    pub min_angle: f64,
    pub boundary_hypothesis_ok: bool,
    pub offending_triangles: Vec<usize>,
}

pub fn validate_mesh(mesh: &Triangulation) -> MeshReport {
    let on_boundary = mesh.boundary_vertex_mask();
    let mut offending = Vec::new();
    let mut min_angle = f64::INFINITY;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = mesh.triangle_points(t);
        min_angle = min_angle.min(min_angle_deg(a, b, c));
        let boundary_vertices = tri.iter().filter(|&&v| on_boundary[v]).count();
        let boundary_edges = mesh.triangle_edges[t]
            .iter()
            .filter(|&&e| mesh.edges[e].is_boundary())
            .count();
        if boundary_vertices > 2 || boundary_edges > 1 {
            offending.push(t);
        }
    }
    MeshReport {
        n_vertices: mesh.n_vertices(),
        n_triangles: mesh.n_triangles(),
        n_edges: mesh.n_edges(),
        h: mesh.h,
        min_angle: if min_angle.is_finite() { min_angle } else { 0.0 },
        boundary_hypothesis_ok: offending.is_empty(),
        offending_triangles: offending,
    }
}
