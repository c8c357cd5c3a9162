//! Plane instantiation: canonical, random and tangential orientations.

use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{KaplanConfig, OrientationMode, PlaneFrame};
use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3};
use crate::scalar::Scalar;

/// Maximum number of rejected draws when sampling random plane normals.
const MAX_REJECTIONS: usize = 1000;

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

/// `(u, v, w)` axes in f64.
#[derive(Debug, Clone, Copy)]
struct Axes {
    u: Vec3,
    v: Vec3,
    w: Vec3,
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn apply(m: &Mat3, a: Vec3) -> Vec3 {
    [dot(m[0], a), dot(m[1], a), dot(m[2], a)]
}

fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// Rotation about coordinate axis `axis` by `steps` multiples of 45 degrees.
fn axis_rotation(axis: usize, steps: i32) -> Mat3 {
    let steps = steps.rem_euclid(8);
    let (s, c) = match steps {
        0 => (0.0, 1.0),
        2 => (1.0, 0.0),
        4 => (0.0, -1.0),
        6 => (-1.0, 0.0),
        _ => (f64::from(steps) * FRAC_PI_4).sin_cos(),
    };
    match axis {
        0 => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        1 => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        _ => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
    }
}

fn rotate(m: &Mat3, a: &Axes) -> Axes {
    Axes { u: apply(m, a.u), v: apply(m, a.v), w: apply(m, a.w) }
}

/// Axis-aligned frames with normals x, y, z; `u` is the next axis cyclically, `v = w x u`.
fn base_frames() -> [Axes; 3] {
    let e = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    std::array::from_fn(|k| {
        let w = e[k];
        let u = e[(k + 1) % 3];
        Axes { u, v: cross(w, u), w }
    })
}

/// Acute angle between two plane normals, in degrees.
fn line_angle(a: Vec3, b: Vec3) -> f64 {
    dot(a, b).abs().min(1.0).acos().to_degrees()
}

fn canonical_axes(count: usize) -> Vec<Axes> {
    let base = base_frames();
    let mut frames = base.to_vec();
    if count == 3 {
        return frames;
    }
    // Each family turns about its own u axis (the next coordinate axis): x about y, y about z, z about x.
    for (k, frame) in base.iter().enumerate() {
        let companion = (k + 1) % 3;
        for steps in [1, -1] {
            frames.push(rotate(&axis_rotation(companion, steps), frame));
        }
    }
    if count == 9 {
        return frames;
    }

    // 45 degree compositions about all three axes, deduplicated as lines, then
    // extended from the 9-plane set by farthest-first selection.
    let mut candidates: Vec<Axes> = Vec::new();
    for a in 0..8 {
        for b in 0..8 {
            for c in 0..8 {
                let m = mul(&mul(&axis_rotation(0, a), &axis_rotation(1, b)), &axis_rotation(2, c));
                for frame in &base {
                    let r = rotate(&m, frame);
                    if candidates.iter().all(|x| dot(x.w, r.w).abs() < 1.0 - 1e-9) {
                        candidates.push(r);
                    }
                }
            }
        }
    }
    while frames.len() < count {
        let mut best: Option<(f64, Axes)> = None;
        for cand in &candidates {
            let sep = frames
                .iter()
                .map(|f| line_angle(f.w, cand.w))
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(d, _)| sep > *d + 1e-9) {
                best = Some((sep, *cand));
            }
        }
        frames.push(best.expect("candidate set is non-empty").1);
    }
    frames
}

/// In-plane axes for normal `w`: `u` is the coordinate axis least aligned with `w`
/// made orthogonal to it, `v = w x u`.
fn axes_from_normal(w: Vec3) -> Axes {
    let w = normalize(w);
    let helper = (0..3)
        .min_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(a.cmp(&b)))
        .expect("three axes");
    let mut e = [0.0; 3];
    e[helper] = 1.0;
    let proj = dot(e, w);
    let u = normalize([e[0] - proj * w[0], e[1] - proj * w[1], e[2] - proj * w[2]]);
    Axes { u, v: cross(w, u), w }
}

fn random_axes(count: usize, seed: u64) -> Result<Vec<Axes>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_cos = 30f64.to_radians().cos();
    let mut normals: Vec<Vec3> = Vec::with_capacity(count);
    let mut rejected = 0;
    while normals.len() < count {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        let n = [r * phi.cos(), r * phi.sin(), z];
        if normals.iter().all(|m| dot(*m, n).abs() <= min_cos) {
            normals.push(n);
        } else {
            rejected += 1;
            if rejected > MAX_REJECTIONS {
                return Err(Error::PlaneSampling { planes: count, rounds: MAX_REJECTIONS });
            }
        }
    }
    Ok(normals.into_iter().map(axes_from_normal).collect())
}

fn to_frame<S: Scalar>(origin: Point3<S>, a: &Axes, config: &KaplanConfig<S>) -> PlaneFrame<S> {
    let cv = |v: Vec3| UnitVector3::new_unchecked(Point3::new(S::lit(v[0]), S::lit(v[1]), S::lit(v[2])));
    PlaneFrame {
        origin,
        u_axis: cv(a.u),
        v_axis: cv(a.v),
        w_axis: cv(a.w),
        side_length: config.side_length,
        resolution: config.resolution,
    }
}

/// Frame at `origin` whose plane normal is `normal`.
pub fn frame_from_normal<S: Scalar>(
    origin: Point3<S>,
    normal: UnitVector3<S>,
    side_length: S,
    resolution: usize,
) -> Result<PlaneFrame<S>> {
    let axes = axes_from_normal([normal.x.as_f64(), normal.y.as_f64(), normal.z.as_f64()]);
    let frame = to_frame(
        origin,
        &axes,
        &KaplanConfig { side_length, resolution, ..KaplanConfig::default() },
    );
    frame.validate()?;
    Ok(frame)
}

/// Instantiates the planes of a descriptor at `query`.
///
/// `surface_normal` is required by the tangential mode and ignored otherwise.
pub fn make_planes<S: Scalar>(
    query: Point3<S>,
    surface_normal: Option<UnitVector3<S>>,
    config: &KaplanConfig<S>,
) -> Result<Vec<PlaneFrame<S>>> {
    config.validate()?;
    let axes = match config.orientation {
        OrientationMode::Canonical => canonical_axes(config.num_planes),
        OrientationMode::RandomMin30 => random_axes(config.num_planes, config.rng_seed)?,
        OrientationMode::Tangential => {
            let n = surface_normal.ok_or_else(|| {
                Error::InvalidArgument("tangential planes need a surface normal".into())
            })?;
            vec![axes_from_normal([n.x.as_f64(), n.y.as_f64(), n.z.as_f64()])]
        }
    };
    Ok(axes.iter().map(|a| to_frame(query, a, config)).collect())
}
