//! Constitutive models.
//!
//! Three models are available behind [`MaterialModel`]:
//! St. Venant–Kirchhoff, a compressible Neo-Hooke solid and a finite-strain
//! elasto-plastic model with nonlinear kinematic (Armstrong–Frederick type)
//! and Voce isotropic hardening formulated in the co-rotated intermediate
//! configuration. All stresses are second Piola–Kirchhoff stresses obtained
//! by differentiating a stored energy with forward-mode AD.
//!
//! The common entry point is [`MaterialModel::evaluate`], which takes a
//! strain-like Nye vector of the Green–Lagrange strain and returns the
//! stress-like Nye vector of `S`, the consistent tangent `dŜ/dÊ` and the
//! updated history.

mod elastic;
mod plastic;

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Dual, Scalar};
use crate::error::{FemError, Result};
use crate::tensor::{Mat3, Mat6, NYE_PAIRS};

pub use elastic::{neo_hooke_energy, neo_hooke_stress, stvk_stress};
pub use plastic::{
    psi_elastic, psi_plastic, pk2_stress, return_mapping, yield_and_forces, ReturnMapOutcome, ThermoForces,
    LOCAL_MAX_ITER, YIELD_TOL,
};

/// Lamé parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    pub lambda: f64,
    pub mu: f64,
}

impl ElasticParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        let p = ElasticParams { lambda, mu };
        p.validate()?;
        Ok(p)
    }

    /// Bulk modulus `λ + 2μ/3`.
    pub fn kappa(&self) -> f64 {
        self.lambda + 2.0 * self.mu / 3.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !(self.kappa() > 0.0) {
            return Err(FemError::BadInput(format!(
                "elastic parameters need mu > 0 and kappa > 0 (mu = {}, kappa = {})",
                self.mu,
                self.kappa()
            )));
        }
        Ok(())
    }
}

/// Hardening and yield parameters of the elasto-plastic model.
///
/// `a`, `b` drive kinematic hardening, `e`, `f` the saturating isotropic
/// hardening, `sigma_y0` is the initial yield stress.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlasticParams {
    pub a: f64,
    pub b: f64,
    pub e: f64,
    pub f: f64,
    pub sigma_y0: f64,
}

impl PlasticParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma_y0 > 0.0 && self.a >= 0.0 && self.b >= 0.0 && self.e >= 0.0 && (self.e == 0.0 || self.f > 0.0);
        if !ok {
            return Err(FemError::BadInput(format!("invalid plastic parameters {self:?}")));
        }
        Ok(())
    }

    /// Isotropic hardening force `q_p = e (1 − exp(−f ξ_p))`.
    pub fn hardening_force<T: Scalar>(&self, xi: T) -> T {
        if self.e == 0.0 {
            return T::zero();
        }
        ((xi * (-self.f)).exp() * (-1.0) + 1.0) * self.e
    }
}

/// Per-integration-point plastic history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialState {
    /// Plastic stretch.
    pub up: Mat3<f64>,
    /// Irrecoverable part of the plastic stretch (kinematic hardening).
    pub upi: Mat3<f64>,
    /// Isotropic hardening variable.
    pub xi: f64,
    /// Accumulated plastic strain written to output; equal to `xi` here.
    pub kappa_acc: f64,
}

impl Default for MaterialState {
    fn default() -> Self {
        MaterialState { up: Mat3::identity(), upi: Mat3::identity(), xi: 0.0, kappa_acc: 0.0 }
    }
}

impl MaterialState {
    pub fn virgin() -> Self {
        Self::default()
    }
}

/// Constitutive model selector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaterialModel {
    StVenantKirchhoff(ElasticParams),
    NeoHooke(ElasticParams),
    ElastoPlastic(ElasticParams, PlasticParams),
}

/// Stress, tangent and updated history at one point.
#[derive(Clone, Copy, Debug)]
pub struct MaterialResponse {
    /// Stress-like Nye vector of `S`.
    pub stress: [f64; 6],
    /// `dŜ/dÊ` with `Ê` strain-like.
    pub tangent: Mat6,
    pub state: MaterialState,
    /// Pressure `κ (J − 1)`.
    pub pressure: f64,
    /// Yield function after the update (`−σ_y0` scale or below for elastic models).
    pub phi: f64,
}

thread_local! {
    static EVALUATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of constitutive evaluations performed on the calling thread.
pub fn evaluation_count() -> u64 {
    EVALUATIONS.with(|c| c.get())
}

pub fn reset_evaluation_count() {
    EVALUATIONS.with(|c| c.set(0));
}

/// Right Cauchy–Green tensor from a strain-like Nye vector of `E`.
pub fn cauchy_green_from_strain<T: Scalar>(e: &[T; 6]) -> Mat3<T> {
    let mut c = Mat3::identity();
    for (k, &(i, j)) in NYE_PAIRS.iter().enumerate() {
        if k < 3 {
            c.m[i][i] = e[k] * 2.0 + 1.0;
        } else {
            c.m[i][j] = e[k];
            c.m[j][i] = e[k];
        }
    }
    c
}

/// Value and symmetric gradient `∂ψ/∂A` of a scalar function of a symmetric matrix.
pub fn sym_gradient<T, F>(psi: F, a: &Mat3<T>) -> (T, Mat3<T>)
where
    T: Scalar,
    F: Fn(&Mat3<Dual<T, 6>>) -> Dual<T, 6>,
{
    let mut x = Mat3::<Dual<T, 6>>::zeros();
    for (k, &(i, j)) in NYE_PAIRS.iter().enumerate() {
        let v = Dual::variable(a.m[i][j], k);
        x.m[i][j] = v;
        x.m[j][i] = v;
    }
    let out = psi(&x);
    let mut g = Mat3::zeros();
    for (k, &(i, j)) in NYE_PAIRS.iter().enumerate() {
        if i == j {
            g.m[i][i] = out.d[k];
        } else {
            let h = out.d[k] * 0.5;
            g.m[i][j] = h;
            g.m[j][i] = h;
        }
    }
    (out.v, g)
}

impl MaterialModel {
    pub fn elastic(&self) -> &ElasticParams {
        match self {
            MaterialModel::StVenantKirchhoff(p) | MaterialModel::NeoHooke(p) | MaterialModel::ElastoPlastic(p, _) => p,
        }
    }

    pub fn shear_modulus(&self) -> f64 {
        self.elastic().mu
    }

    pub fn validate(&self) -> Result<()> {
        self.elastic().validate()?;
        if let MaterialModel::ElastoPlastic(_, pp) = self {
            pp.validate()?;
        }
        Ok(())
    }

    /// Stress, tangent and updated history for the Green–Lagrange strain `e` (strain-like Nye).
    pub fn evaluate(&self, e: &[f64; 6], state: &MaterialState) -> Result<MaterialResponse> {
        EVALUATIONS.with(|c| c.set(c.get() + 1));
        let seeded: [Dual<f64, 6>; 6] = Dual::seed(*e, 0);
        let pack = |s: [Dual<f64, 6>; 6]| {
            let stress = s.map(|x| x.v);
            let tangent = Mat6::from_fn(|i, j| s[i].d[j]);
            (stress, tangent)
        };
        match self {
            MaterialModel::StVenantKirchhoff(p) => {
                let (stress, tangent) = pack(stvk_stress(&seeded, p));
                let c = cauchy_green_from_strain(e);
                let j = c.det().max(0.0).sqrt();
                Ok(MaterialResponse { stress, tangent, state: *state, pressure: p.kappa() * (j - 1.0), phi: f64::NEG_INFINITY })
            }
            MaterialModel::NeoHooke(p) => {
                let c = cauchy_green_from_strain(&seeded);
                let (stress, tangent) = pack(neo_hooke_stress(&c, p)?);
                let j = c.det().v.sqrt();
                Ok(MaterialResponse { stress, tangent, state: *state, pressure: p.kappa() * (j - 1.0), phi: f64::NEG_INFINITY })
            }
            MaterialModel::ElastoPlastic(ep, pp) => {
                let c = cauchy_green_from_strain(e);
                let out = return_mapping(&c, state, ep, pp)?;
                let s_d = plastic::stress_with_tangent(&seeded, state, &out, ep, pp)?;
                let (stress, tangent) = pack(s_d);
                Ok(MaterialResponse { stress, tangent, state: out.state, pressure: out.pressure, phi: out.phi })
            }
        }
    }
}
