use super::{Assembly, EtaPolicy, RawGenerator, SpaceKind, SplineSpace};
use crate::boxmesh::BoxMesh;
use crate::bspline::{OpenKnotVector, TensorBSpline};
use crate::error::{Error, Result};
use crate::multiindex::box_indices;

/// Tensor-product B-splines of the given open knot vectors, one per axis.
pub fn build_tps(knots: &[OpenKnotVector]) -> Result<SplineSpace> {
    if knots.is_empty() {
        return Err(Error::Empty("knot vectors"));
    }
    let breaks: Vec<Vec<f64>> = knots.iter().map(OpenKnotVector::breakpoints).collect();
    let mesh = BoxMesh::tensor(&breaks)?;
    let counts: Vec<usize> = knots.iter().map(|k| k.basis_count() - 1).collect();
    let raws = box_indices(&counts)
        .into_iter()
        .map(|j| {
            let axes = j.entries().iter().zip(knots).map(|(&ji, k)| k.basis(ji)).collect();
            Ok(RawGenerator::single(TensorBSpline::new(axes)?, 0))
        })
        .collect::<Result<Vec<_>>>()?;
    let element_level = vec![0; mesh.len()];
    let assembly = Assembly {
        kind: SpaceKind::Tps,
        degree: knots.iter().map(OpenKnotVector::degree).collect(),
        mesh,
        nesting: vec![Vec::new(); raws.len()],
        raws,
        element_level,
    };
    SplineSpace::assemble(assembly, EtaPolicy::default())
}
