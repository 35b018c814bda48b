//! Forward-mode automatic differentiation.
//!
//! Two carriers are provided: [`Dual`] numbers with a fixed number of tangent
//! directions, and [`Taylor`] polynomials truncated to the bilinear basis
//! `{1, ξ, η, ζ, ξη, ξζ, ηζ}`. Both implement [`Scalar`] and can be nested;
//! [`DualTaylor`] carries element-DOF tangents inside every Taylor coefficient.

mod dual;
mod scalar;
mod taylor;

pub use dual::Dual;
pub use scalar::Scalar;
pub use taylor::{basis, extract_bilinear_coeffs, DualTaylor, Taylor};

use crate::tensor::Mat3;

/// Dual number with 24 tangents, one per hexahedron displacement DOF.
pub type Dual24 = Dual<f64, 24>;

/// Jacobian `∂f_i/∂ξ_k` of a map from three natural coordinates to three reals.
pub fn jacobian3<F>(f: F, xi: [f64; 3]) -> Mat3<f64>
where
    F: Fn([Dual<f64, 3>; 3]) -> [Dual<f64, 3>; 3],
{
    let out = f(Dual::seed(xi, 0));
    Mat3::from_fn(|i, k| out[i].d[k])
}

/// Values and rows `∂f_i/∂U` of a vector function of the 24 element DOFs.
pub fn gradient24<F>(f: F, u: &[f64; 24]) -> (Vec<f64>, Vec<[f64; 24]>)
where
    F: Fn(&[Dual24; 24]) -> Vec<Dual24>,
{
    let seeded: [Dual24; 24] = Dual::seed(*u, 0);
    let out = f(&seeded);
    let values = out.iter().map(|x| x.v).collect();
    let rows = out.iter().map(|x| x.d).collect();
    (values, rows)
}
