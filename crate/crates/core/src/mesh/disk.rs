use std::collections::HashMap;
use std::f64::consts::TAU;

use super::{min_angle_deg, signed_area, Triangulation};
use crate::error::{Error, Result};
use crate::geometry::BoundaryChart;
use crate::Vec2;

const MAX_TRIANGLES: usize = 10_000_000;

/// Concentric-ring mesh of a star-shaped chart domain (intended for the unit
/// disk).
///
/// Ring `j` of `N = ⌈1/target_h⌉` carries `6j` vertices at uniform chart
/// parameters and is scaled by `j/N` towards the origin; ring `N` lies on the
/// chart. Neighbouring rings are stitched by a sweep over parameters and the
/// result is improved by Delaunay edge flips.
pub fn generate_disk_mesh(chart: &BoundaryChart, target_h: f64) -> Result<Triangulation> {
    if !(target_h > 0.0 && target_h <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target_h must lie in (0, 1], got {target_h}"
        )));
    }
    let rings = (1.0 / target_h - 1e-9).ceil().max(1.0) as usize;
    let n_triangles = 6usize.saturating_mul(rings).saturating_mul(rings);
    if n_triangles > MAX_TRIANGLES {
        return Err(Error::MeshTooLarge(n_triangles));
    }

    let mut vertices = vec![Vec2::zeros()];
    let mut params = vec![None];
    // (vertex index, parameter) per ring
    let mut ring_members: Vec<Vec<(usize, f64)>> = vec![vec![(0, 0.0)]];
    for j in 1..=rings {
        let count = 6 * j;
        let scale = j as f64 / rings as f64;
        let mut ring = Vec::with_capacity(count);
        for i in 0..count {
            let t = TAU * i as f64 / count as f64;
            let on_chart = chart.eval(t)?;
            ring.push((vertices.len(), t));
            if j == rings {
                vertices.push(on_chart);
                params.push(Some(t));
            } else {
                vertices.push(on_chart * scale);
                params.push(None);
            }
        }
        ring_members.push(ring);
    }

    let mut triangles = Vec::with_capacity(n_triangles);
    for j in 1..=rings {
        stitch(&ring_members[j - 1], &ring_members[j], &mut triangles);
    }
    for tri in &mut triangles {
        if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
    }
    let boundary: Vec<bool> = params.iter().map(Option::is_some).collect();
    delaunay_flips(&vertices, &boundary, &mut triangles);

    let mesh = Triangulation::new(vertices, triangles, params)?;
    let worst = (0..mesh.n_triangles())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            min_angle_deg(a, b, c)
        })
        .fold(f64::INFINITY, f64::min);
    if worst < 20.0 {
        return Err(Error::InvalidMesh(format!(
            "disk mesher produced a {worst:.1}° angle; chart is not star-shaped enough"
        )));
    }
    Ok(mesh)
}

/// Triangulates the annulus between two rings by merging their parameter
/// sequences.
fn stitch(inner: &[(usize, f64)], outer: &[(usize, f64)], out: &mut Vec<[usize; 3]>) {
    let angle = |ring: &[(usize, f64)], i: usize| {
        let n = ring.len();
        ring[i % n].1 + TAU * (i / n) as f64
    };
    if inner.len() == 1 {
        let c = inner[0].0;
        for i in 0..outer.len() {
            out.push([c, outer[i].0, outer[(i + 1) % outer.len()].0]);
        }
        return;
    }
    let (mut i, mut j) = (0, 0);
    while i < inner.len() || j < outer.len() {
        let advance_inner =
            j == outer.len() || (i < inner.len() && angle(inner, i + 1) <= angle(outer, j + 1));
        let a = inner[i % inner.len()].0;
        let b = outer[j % outer.len()].0;
        if advance_inner {
            out.push([a, b, inner[(i + 1) % inner.len()].0]);
            i += 1;
        } else {
            out.push([a, b, outer[(j + 1) % outer.len()].0]);
            j += 1;
        }
    }
}

fn in_circumcircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    // a, b, c counterclockwise
    let m = [
        [a.x - d.x, a.y - d.y, (a - d).norm_squared()],
        [b.x - d.x, b.y - d.y, (b - d).norm_squared()],
        [c.x - d.x, c.y - d.y, (c - d).norm_squared()],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    det > 1e-12
}

/// Lawson flips, never creating a triangle whose three vertices are all on
/// the boundary.
fn delaunay_flips(vertices: &[Vec2], boundary: &[bool], triangles: &mut [[usize; 3]]) {
    for _pass in 0..100 {
        let mut flipped = false;
        let mut owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                owner.insert((tri[(i + 1) % 3], tri[(i + 2) % 3]), (t, i));
            }
        }
        let mut touched = vec![false; triangles.len()];
        for t in 0..triangles.len() {
            for i in 0..3 {
                if touched[t] {
                    break;
                }
                let tri = triangles[t];
                let (a, b, c) = (tri[(i + 1) % 3], tri[(i + 2) % 3], tri[i]);
                let Some(&(u, k)) = owner.get(&(b, a)) else { continue };
                if touched[u] {
                    continue;
                }
                let d = triangles[u][k];
                let [pa, pb, pc, pd] = [a, b, c, d].map(|v| vertices[v]);
                if !in_circumcircle(pa, pb, pc, pd) {
                    continue;
                }
                // new triangles (c, a, d) and (d, b, c); keep both positive
                if signed_area(pc, pa, pd) <= 0.0 || signed_area(pd, pb, pc) <= 0.0 {
                    continue;
                }
                let all_boundary = |x: usize, y: usize, z: usize| boundary[x] && boundary[y] && boundary[z];
                if all_boundary(c, a, d) || all_boundary(d, b, c) {
                    continue;
                }
                triangles[t] = [c, a, d];
                triangles[u] = [d, b, c];
                touched[t] = true;
                touched[u] = true;
                flipped = true;
            }
        }
        if !flipped {
            break;
        }
    }
}
