#![allow(dead_code)]

use ambient_attitude::so3::{exp_so3, Mat3, Vec3};
use rand::Rng;

pub fn eye(s: f64) -> Mat3 {
    Mat3::identity() * s
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

pub fn random_mat(rng: &mut impl Rng, scale: f64) -> Mat3 {
    Mat3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

/// Rotation by an angle drawn uniformly from `[0, max_angle]` about a random axis.
pub fn random_rotation(rng: &mut impl Rng, max_angle: f64) -> Mat3 {
    let axis = loop {
        let v = random_vec(rng, 1.0);
        if v.norm() > 1e-3 {
            break v.normalize();
        }
    };
    exp_so3(&(axis * rng.gen_range(0.0..=max_angle)))
}

pub fn benchmark_r0() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0))
}
