#![allow(dead_code)]

use kaplan_core::datagen::{synthesize_hole, HoleSpec};
use kaplan_core::geometry::{Point3, PointCloud, UnitVector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

/// `n` points uniformly on a sphere of radius 0.5 at the origin, with outward normals.
pub fn sphere(n: usize, seed: u64) -> PointCloud<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    let mut ns = Vec::with_capacity(n);
    while pts.len() < n {
        let v = Point3::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
        let Some(u) = UnitVector3::new(v) else { continue };
        pts.push(*u * 0.5);
        ns.push(u);
    }
    PointCloud::with_normals(pts, ns).unwrap()
}

/// The sphere fixture with a hole: (complete, incomplete, missing).
pub fn holed_sphere(n: usize, fraction: f64, seed: u64) -> (PointCloud<f64>, PointCloud<f64>, PointCloud<f64>) {
    let complete = sphere(n, seed);
    let split = synthesize_hole(&complete, &HoleSpec::new(fraction, seed)).unwrap();
    (complete, split.incomplete, split.missing)
}

/// A unit square in z = 0 sampled at `n` random points, and the same points with Gaussian z noise.
pub fn noisy_plane(n: usize, sigma: f64, seed: u64) -> (PointCloud<f64>, PointCloud<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut clean = Vec::with_capacity(n);
    let mut noisy = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, y) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        clean.push(Point3::new(x, y, 0.0));
        noisy.push(Point3::new(x, y, noise.sample(&mut rng)));
    }
    let ns = vec![UnitVector3::z_axis(); n];
    (PointCloud::with_normals(noisy, ns.clone()).unwrap(), PointCloud::with_normals(clean, ns).unwrap())
}

pub fn random_points(n: usize, rng: &mut ChaCha8Rng) -> Vec<Point3<f64>> {
    (0..n).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect()
}

pub fn mean_abs_z(cloud: &PointCloud<f64>) -> f64 {
    cloud.points().iter().map(|p| p.z.abs()).sum::<f64>() / cloud.len() as f64
}

/// Order-sensitive hash of every coordinate and normal bit pattern.
pub fn cloud_hash(cloud: &PointCloud<f64>) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for p in cloud.points() {
        p.to_array().map(f64::to_bits).hash(&mut h);
    }
    if let Some(ns) = cloud.normals() {
        for n in ns {
            n.to_array().map(f64::to_bits).hash(&mut h);
        }
    }
    h.finish()
}
