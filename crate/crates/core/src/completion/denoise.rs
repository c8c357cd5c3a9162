use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::backend::{validate_output, CompletionBackend, INPUT_VALID};
use crate::descriptor::{DescriptorBuilder, KaplanConfig, KaplanDescriptor};
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::scalar::Scalar;

/// Relative eigenvalue cutoff of the plane-normal scatter matrix.
const RANK_TOLERANCE: f64 = 1e-9;

/// Central-cell denoising: every point moves according to the depth its
/// descriptor predicts at the central cell of each plane.
///
/// A descriptor is built at every point of `cloud` and passed to the backend.
/// Each plane whose central output cell is valid (>= `valid_threshold`) asks
/// for a displacement of `depth_out - depth_in` along its normal, where
/// `depth_in` is the input central depth (0 when that cell is empty). The
/// point moves by the least-squares displacement satisfying all these
/// requests; points with no valid plane stay put. The raw backend output is
/// used, because restoring input cells would erase the correction. Point
/// count, order and normals are unchanged.
pub fn denoise<S: Scalar>(
    cloud: &PointCloud<S>,
    backend: &dyn CompletionBackend<S>,
    config: &KaplanConfig<S>,
    valid_threshold: S,
) -> Result<PointCloud<S>> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    config.validate()?;
    let builder = DescriptorBuilder::new(cloud);
    let moved = super::pipeline::map_queries(cloud.len(), backend.max_concurrency(), |q| -> Result<Point3<S>> {
        let p = cloud.points()[q];
        let k0 = builder.build(p, q, config)?;
        let k = backend.predict(&k0).map_err(|source| Error::Backend { query: q, source })?;
        validate_output(&k0, &k).map_err(|source| Error::Backend { query: q, source })?;
        let d = central_displacement(&k0, &k, valid_threshold);
        // Skipping a zero move keeps the coordinates bit-identical (-0.0 + 0.0 would be +0.0).
        Ok(if d == Point3::zero() { p } else { p + d })
    });
    let points = moved.into_iter().collect::<Result<Vec<_>>>()?;
    let (_, normals) = cloud.clone().into_parts();
    match normals {
        Some(ns) => PointCloud::with_normals(points, ns),
        None => PointCloud::new(points),
    }
}

/// Least-squares displacement from the per-plane central depth corrections.
fn central_displacement<S: Scalar>(k0: &KaplanDescriptor<S>, k: &KaplanDescriptor<S>, valid_threshold: S) -> Point3<S> {
    let observed = S::lit(INPUT_VALID);
    let mut scatter = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let mut any = false;
    for (a, b) in k0.planes.iter().zip(&k.planes) {
        let c = a.frame.central_index();
        if b.valid(c, c) < valid_threshold {
            continue;
        }
        let depth_in = if a.valid(c, c) >= observed { a.depth(c, c) } else { S::zero() };
        let delta = (b.depth(c, c) - depth_in).as_f64();
        let w = Vector3::from(a.frame.w_axis.to_array().map(S::as_f64));
        scatter += w * w.transpose();
        rhs += w * delta;
        any |= delta != 0.0;
    }
    if !any {
        return Point3::zero();
    }
    let eig = SymmetricEigen::new(scatter);
    let cutoff = eig.eigenvalues.amax() * RANK_TOLERANCE;
    let mut solution = Vector3::zeros();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let e = eig.eigenvectors.column(i);
            solution += e * (e.dot(&rhs) / lambda);
        }
    }
    Point3::new(S::lit(solution.x), S::lit(solution.y), S::lit(solution.z))
}
