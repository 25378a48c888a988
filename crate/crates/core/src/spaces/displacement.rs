use nalgebra::DVector;

use super::scalar::{poly_dim, ScalarBasis};
use crate::curving::CurvedMesh;
use crate::error::{Error, Result};

/// Discontinuous vector-valued space with orthonormal modal bases.
///
/// Element `t` owns `2 · dim P_q` consecutive coefficients starting at
/// `offsets[t]`: first all modes of the first component, then the second.
#[derive(Clone, Debug)]
pub struct DisplacementSpace {
    pub k: usize,
    pub enriched: bool,
    /// Postprocessing variant of degree `k + 1` (`k + 2` on enriched
    /// boundary elements).
    pub star: bool,
    pub degrees: Vec<usize>,
    pub offsets: Vec<usize>,
    pub n_dofs: usize,
    bases: Vec<ScalarBasis>,
}

pub fn build_displacement_space(
    cm: &CurvedMesh,
    k: usize,
    enriched: bool,
    star: bool,
) -> Result<DisplacementSpace> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("k must be ≥ 3, got {k}")));
    }
    let base = if star { k + 1 } else { k - 1 };
    let degrees: Vec<usize> = (0..cm.n_triangles())
        .map(|t| base + usize::from(enriched && cm.is_boundary(t)))
        .collect();
    let mut offsets = Vec::with_capacity(degrees.len());
    let mut next = 0;
    for &q in &degrees {
        offsets.push(next);
        next += 2 * poly_dim(q as isize);
    }
    let max = degrees.iter().copied().max().unwrap_or(base);
    Ok(DisplacementSpace {
        k,
        enriched,
        star,
        degrees,
        offsets,
        n_dofs: next,
        bases: (0..=max).map(ScalarBasis::new).collect(),
    })
}

impl DisplacementSpace {
    pub fn basis(&self, q: usize) -> &ScalarBasis {
        &self.bases[q]
    }

    /// Scalar modes on element `t`.
    pub fn n_modes(&self, t: usize) -> usize {
        poly_dim(self.degrees[t] as isize)
    }

    pub fn element_range(&self, t: usize) -> std::ops::Range<usize> {
        self.offsets[t]..self.offsets[t] + 2 * self.n_modes(t)
    }

    /// `u_h` at reference points of element `t`.
    pub fn eval(&self, t: usize, global: &[f64], points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = self.n_modes(t);
        let off = self.offsets[t];
        let tab = self.bases[self.degrees[t]].tabulate(points);
        let c0 = DVector::from_column_slice(&global[off..off + n]);
        let c1 = DVector::from_column_slice(&global[off + n..off + 2 * n]);
        let v0 = &tab.vals * c0;
        let v1 = &tab.vals * c1;
        (0..points.len()).map(|q| [v0[q], v1[q]]).collect()
    }
}
