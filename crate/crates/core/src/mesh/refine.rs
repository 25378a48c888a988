use super::Triangulation;
use crate::error::{Error, Result};
use crate::geometry::BoundaryChart;

/// Red refinement: every triangle is split into four through its edge
/// midpoints.
///
/// Midpoints of boundary edges are placed on the chart at the average of the
/// endpoint parameters (unwrapped across the period), then projected with
/// that value as a hint. Without a chart they stay on the chord.
pub fn uniform_refine(mesh: &Triangulation, chart: Option<&BoundaryChart>) -> Result<Triangulation> {
    let mut vertices = mesh.vertices.clone();
    let mut params = mesh.boundary_params.clone();
    let mut midpoint = vec![0usize; mesh.n_edges()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        let [a, b] = edge.vertices;
        let mut x = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
        let mut t = None;
        if edge.is_boundary() {
            if let (Some(chart), Some(ta), Some(tb)) = (chart, params[a], params[b]) {
                let hint = 0.5 * (ta + chart.unwrap_towards(ta, tb));
                let hint = chart.reduce(hint)?;
                let p = chart.project(chart.eval(hint)?, Some(hint))?;
                x = p.x;
                t = Some(p.t);
            } else if chart.is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a}, {b}) has an endpoint without a chart parameter"
                )));
            }
        }
        midpoint[e] = vertices.len();
        vertices.push(x);
        params.push(t);
    }

    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [m0, m1, m2] = mesh.triangle_edges[t].map(|e| midpoint[e]);
        let [v0, v1, v2] = *tri;
        triangles.push([v0, m2, m1]);
        triangles.push([m2, v1, m0]);
        triangles.push([m1, m0, v2]);
        triangles.push([m0, m1, m2]);
    }
    Triangulation::new(vertices, triangles, params)
}

/// Refines `levels` times, returning every level including the input.
pub fn refinement_sequence(
    mesh: Triangulation,
    chart: Option<&BoundaryChart>,
    levels: usize,
) -> Result<Vec<Triangulation>> {
    let mut out = vec![mesh];
    for _ in 1..levels {
        let next = uniform_refine(out.last().expect("nonempty"), chart)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_builtin_chart;
    use crate::mesh::{generate_disk_mesh, validate_mesh};

    #[test]
    fn refinement_quadruples_and_keeps_boundary_on_chart() {
        let chart = make_builtin_chart("circle").unwrap();
        let coarse = generate_disk_mesh(&chart, 1.0 / 3.0).unwrap();
        assert_eq!(coarse.n_triangles(), 54);
        let fine = uniform_refine(&coarse, Some(&chart)).unwrap();
        assert_eq!(fine.n_triangles(), 216);
        assert!(fine.h < coarse.h);
        fine.check_on_chart(&chart, 1e-12).unwrap();
        assert!(validate_mesh(&fine).boundary_hypothesis_ok);
        let total: f64 = (0..fine.n_triangles()).map(|t| fine.area(t)).sum();
        let coarse_total: f64 = (0..coarse.n_triangles()).map(|t| coarse.area(t)).sum();
        assert!(total > coarse_total && total < std::f64::consts::PI);
    }

    #[test]
    fn square_refinement_without_chart() {
        let m = Triangulation::unit_square(1).unwrap();
        let levels = refinement_sequence(m, None, 3).unwrap();
        assert_eq!(levels[2].n_triangles(), 32);
        assert_eq!(levels[2].n_edges(), 56);
        let area: f64 = (0..32).map(|t| levels[2].area(t)).sum();
        assert!((area - 1.0).abs() < 1e-14);
    }
}
