#![allow(dead_code)]

use hexfem::element::{Nodes, NODE_NATURAL};
use hexfem::tensor::Mat3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(r: &mut impl Rng, scale: f64) -> Mat3<f64> {
    let v: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| r.random_range(-scale..=scale)));
    Mat3::from_rows(v)
}

pub fn random_sym(r: &mut impl Rng, scale: f64) -> Mat3<f64> {
    random_mat(r, scale).sym()
}

/// Symmetric positive definite `I + sym(A)` kept away from singularity.
pub fn random_spd(r: &mut impl Rng, scale: f64) -> Mat3<f64> {
    let a = random_mat(r, scale);
    a.transpose() * a + Mat3::identity()
}

/// Rotation from a random axis and angle (Rodrigues).
pub fn random_rotation(r: &mut impl Rng) -> Mat3<f64> {
    let mut axis = [0.0; 3];
    loop {
        for a in &mut axis {
            *a = r.random_range(-1.0..=1.0);
        }
        let n: f64 = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 {
            axis.iter_mut().for_each(|a| *a /= n);
            break;
        }
    }
    let th: f64 = r.random_range(-3.0..=3.0);
    let k = Mat3::from_rows([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]]);
    Mat3::identity() + k.scale(th.sin()) + (k * k).scale(1.0 - th.cos())
}

/// A brick `[0,a]×[0,b]×[0,c]` in natural node order.
pub fn brick(a: f64, b: f64, c: f64) -> Nodes {
    NODE_NATURAL.map(|p| [(p[0] + 1.0) * 0.5 * a, (p[1] + 1.0) * 0.5 * b, (p[2] + 1.0) * 0.5 * c])
}

/// A parallelepiped: affine image of the reference cube.
pub fn parallelepiped(r: &mut impl Rng) -> Nodes {
    let a = Mat3::identity() + random_mat(r, 0.3);
    let b = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
    NODE_NATURAL.map(|p| {
        let q = a * p;
        [q[0] + b[0], q[1] + b[1], q[2] + b[2]]
    })
}

/// Unit-scale brick with every node moved by up to `d` in each direction.
pub fn distorted(r: &mut impl Rng, d: f64) -> Nodes {
    let mut x = brick(1.0, 0.8, 1.2);
    for p in &mut x {
        for c in p.iter_mut() {
            *c += r.random_range(-d..=d);
        }
    }
    x
}

pub fn random_u(r: &mut impl Rng, scale: f64) -> [f64; 24] {
    std::array::from_fn(|_| r.random_range(-scale..=scale))
}

pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-300)
}

pub fn mat_max_diff(a: &Mat3<f64>, b: &Mat3<f64>) -> f64 {
    (*a - *b).max_abs()
}
