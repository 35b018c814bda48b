use crate::autodiff::{Dual, Scalar};
use crate::error::{FemError, Result};
use crate::tensor::Mat3;

use super::{sym_gradient, ElasticParams};

/// St. Venant–Kirchhoff law `S = λ tr(E) I + 2μ E` (strain-like in, stress-like out).
pub fn stvk_stress<T: Scalar>(e: &[T; 6], p: &ElasticParams) -> [T; 6] {
    let tr = e[0] + e[1] + e[2];
    std::array::from_fn(|k| if k < 3 { tr * p.lambda + e[k] * (2.0 * p.mu) } else { e[k] * p.mu })
}

/// `ψ = μ/2 (tr C − 3 − ln det C) + λ/4 (det C − 1 − ln det C)`.
pub fn neo_hooke_energy<T: Scalar>(c: &Mat3<T>, p: &ElasticParams) -> T {
    let det = c.det();
    let ln_det = det.ln();
    (c.trace() - 3.0 - ln_det) * (p.mu * 0.5) + (det - 1.0 - ln_det) * (p.lambda * 0.25)
}

/// `S = 2 ∂ψ/∂C` of the compressible Neo-Hooke energy, as a stress-like Nye vector.
pub fn neo_hooke_stress<T: Scalar>(c: &Mat3<T>, p: &ElasticParams) -> Result<[T; 6]> {
    if c.det().value() <= 0.0 || c.trace().value() <= 0.0 {
        return Err(FemError::NotPositiveDefinite);
    }
    let (_, g) = sym_gradient(|x: &Mat3<Dual<T, 6>>| neo_hooke_energy(x, p), c);
    Ok(g.scale_f64(2.0).to_stress_nye())
}
