//! Completion backends: map an input descriptor to a completed one.
//!
//! A backend only produces a raw prediction. [`complete_descriptor`] wraps
//! every call, checks the output layout and valid-flag range, and re-imposes
//! skip-connection semantics: cells valid in the input keep their input
//! values exactly, cells invalid in both input and output are zeroed.

mod external;
mod identity;
mod oracle;

use std::time::Duration;

use thiserror::Error;

pub use external::ExternalBackend;
pub use identity::IdentityBackend;
pub use oracle::GtOracleBackend;

use crate::descriptor::format::FormatError;
use crate::descriptor::{Channel, KaplanDescriptor};
use crate::geometry::Point3;
use crate::scalar::Scalar;

/// Input cells with a valid flag at or above this value count as observed.
pub const INPUT_VALID: f64 = 0.5;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("output layout does not match the input: {0}")]
    ShapeMismatch(String),
    #[error("invalid output: {0}")]
    InvalidOutput(String),
    #[error("output changed input-valid cell ({i}, {j}) of plane {plane}")]
    SkipViolation { plane: usize, i: usize, j: usize },
    #[error("backend process exited with {status}: {stderr}")]
    ProcessFailed { status: String, stderr: String },
    #[error("backend process timed out after {0:?}")]
    Timeout(Duration),
    #[error("malformed backend output: {0}")]
    Malformed(#[source] FormatError),
    #[error("descriptor rebuild failed: {0}")]
    Rebuild(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A model that completes descriptors.
pub trait CompletionBackend<S: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the backend predicts meaningful normal channels.
    fn supports_normals(&self) -> bool {
        true
    }

    /// Maximum number of concurrent [`predict`](Self::predict) calls; `None` for unlimited.
    fn max_concurrency(&self) -> Option<usize> {
        None
    }

    /// Raw prediction for `k0`, before skip-connection enforcement.
    fn predict(&self, k0: &KaplanDescriptor<S>) -> Result<KaplanDescriptor<S>, BackendError>;
}

/// Checks layout and valid range of a raw output against its input.
pub fn validate_output<S: Scalar>(k0: &KaplanDescriptor<S>, out: &KaplanDescriptor<S>) -> Result<(), BackendError> {
    if out.num_planes() != k0.num_planes() {
        return Err(BackendError::ShapeMismatch(format!(
            "{} planes, expected {}",
            out.num_planes(),
            k0.num_planes()
        )));
    }
    if out.resolution() != k0.resolution() {
        return Err(BackendError::ShapeMismatch(format!(
            "resolution {}, expected {}",
            out.resolution(),
            k0.resolution()
        )));
    }
    for (k, (a, b)) in k0.planes.iter().zip(&out.planes).enumerate() {
        let fa = &a.frame;
        let fb = &b.frame;
        let close = |x: Point3<S>, y: Point3<S>| x.distance(y) <= S::lit(1e-6);
        if !(close(fa.origin, fb.origin)
            && close(*fa.u_axis, *fb.u_axis)
            && close(*fa.v_axis, *fb.v_axis)
            && close(*fa.w_axis, *fb.w_axis)
            && (fa.side_length - fb.side_length).abs() <= S::lit(1e-9) * fa.side_length.max(S::one()))
        {
            return Err(BackendError::ShapeMismatch(format!("plane {k} frame differs")));
        }
        if let Some(v) = b
            .channel(Channel::Valid)
            .values()
            .iter()
            .find(|v| !(**v >= S::zero() && **v <= S::one()))
        {
            return Err(BackendError::InvalidOutput(format!("valid flag {v} outside [0, 1] on plane {k}")));
        }
        if b.channels.iter().any(|c| c.values().iter().any(|v| !v.is_finite())) {
            return Err(BackendError::InvalidOutput(format!("non-finite value on plane {k}")));
        }
    }
    Ok(())
}

/// Applies skip-connection semantics to `out` in place.
///
/// Frames, query and provenance are copied from `k0`; input-valid cells are
/// copied verbatim; cells below `valid_threshold` in the output that were
/// also invalid in the input get zero depth and normal.
pub fn enforce_skip_connection<S: Scalar>(k0: &KaplanDescriptor<S>, out: &mut KaplanDescriptor<S>, valid_threshold: S) {
    let observed = S::lit(INPUT_VALID);
    out.query = k0.query;
    out.query_index = k0.query_index;
    for (input, output) in k0.planes.iter().zip(out.planes.iter_mut()) {
        output.frame = input.frame;
        let r = input.frame.resolution;
        for i in 0..r {
            for j in 0..r {
                if input.valid(i, j) >= observed {
                    output.copy_cell_from(input, i, j);
                } else if output.valid(i, j) < valid_threshold {
                    let v = output.valid(i, j);
                    output.set_cell(i, j, S::zero(), v, Point3::zero());
                }
            }
        }
    }
}

/// Runs `backend` on `k0` and returns an output that honours the backend contract.
pub fn complete_descriptor<S: Scalar>(
    backend: &dyn CompletionBackend<S>,
    k0: &KaplanDescriptor<S>,
    valid_threshold: S,
) -> Result<KaplanDescriptor<S>, BackendError> {
    let mut out = backend.predict(k0)?;
    validate_output(k0, &out)?;
    enforce_skip_connection(k0, &mut out, valid_threshold);
    Ok(out)
}
