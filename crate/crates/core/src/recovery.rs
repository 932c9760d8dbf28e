//! Nodal averaging of the discontinuous finite-element flux `-A∇u_h` into a
//! continuous piecewise-linear vector field.

use serde::{Deserialize, Serialize};

use crate::fem::{FeScalarField, FeVectorField, ProblemSpec};
use crate::mesh::ElementGeometry;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    #[default]
    AreaWeighted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub weighting: Weighting,
}

/// Average `-A∇u` over the triangles incident to each node. Boundary nodes
/// only see their incident triangles; no extrapolation is applied.
pub fn recover_flux(u: &FeScalarField, problem: &ProblemSpec, cfg: RecoveryConfig) -> FeVectorField {
    let mesh = u.mesh();
    let mut sx = vec![0.0; mesh.num_nodes()];
    let mut sy = vec![0.0; mesh.num_nodes()];
    let mut wsum = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let flux = problem.diffusion.apply(u.gradient_on(t));
        let w = match cfg.weighting {
            Weighting::Uniform => 1.0,
            Weighting::AreaWeighted => ElementGeometry::from_vertices(mesh.vertices(t)).area,
        };
        for &k in tri {
            sx[k] -= w * flux[0];
            sy[k] -= w * flux[1];
            wsum[k] += w;
        }
    }
    for k in 0..mesh.num_nodes() {
        sx[k] /= wsum[k];
        sy[k] /= wsum[k];
    }
    FeVectorField::new(mesh.clone(), sx, sy).expect("lengths match the mesh")
}

/// Exact divergence of a continuous P1 vector field, one value per triangle.
pub fn divergence(z: &FeVectorField) -> Vec<f64> {
    let mesh = z.mesh();
    (0..mesh.num_triangles()).map(|t| divergence_on(z, t)).collect()
}

pub(crate) fn divergence_on(z: &FeVectorField, t: usize) -> f64 {
    let mesh = z.mesh();
    let tri = mesh.triangles()[t];
    let geo = ElementGeometry::from_vertices(mesh.vertices(t));
    (0..3).map(|k| z.x()[tri[k]] * geo.grads[k][0] + z.y()[tri[k]] * geo.grads[k][1]).sum()
}
