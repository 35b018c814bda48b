//! Finite-strain elasto-plasticity in the co-rotated intermediate configuration.
//!
//! The evolution equations are integrated with an implicit exponential map on
//! the plastic right Cauchy–Green tensors,
//!
//! ```text
//! C_p^{n+1}  = U_p^n  exp(2 Δγ N)        U_p^n,    U_p  = sqrt(C_p)
//! C_pi^{n+1} = U_pi^n exp(2 Δγ (b/a) dev Θ̌) U_pi^n, U_pi = sqrt(C_pi)
//! ξ_p^{n+1}  = ξ_p^n + Δγ
//! ```
//!
//! with both flow directions evaluated at the end of the step. Because the
//! directions are deviatoric, `det U_p = det U_pi = 1` is preserved. The
//! scalar consistency condition `Φ(Δγ) = 0` is solved by a safeguarded Newton
//! iteration for fixed directions, and the directions are refreshed by an
//! outer fixed-point loop. When that loop stops contracting, the coupled
//! system in `(Δγ, N, M)` is solved by Newton's method instead. The
//! consistent tangent follows from the implicit function theorem applied to
//! the same coupled system.

use crate::autodiff::{Dual, Scalar};
use crate::error::{FemError, Result};
use crate::tensor::{expm, sqrtm, Mat3, NYE_PAIRS};

use super::{cauchy_green_from_strain, sym_gradient, ElasticParams, MaterialState, PlasticParams};

/// Yield-function tolerance relative to `σ_y0`.
pub const YIELD_TOL: f64 = 1e-10;
/// Iteration cap of the local solver.
pub const LOCAL_MAX_ITER: usize = 50;

const DIRECTION_TOL: f64 = 1e-12;
const PICARD_MAX_ITER: usize = 12;
const COUPLED_MAX_ITER: usize = 100;

fn psi_e<T: Scalar>(cbar: &Mat3<T>, p: &ElasticParams) -> T {
    let d = cbar.det();
    let iso_trace = cbar.trace() * d.powf(-1.0 / 3.0);
    (iso_trace - 3.0) * (0.5 * p.mu) + (d.sqrt() - 1.0).square() * (0.5 * p.kappa())
}

fn psi_e_vol<T: Scalar>(cbar: &Mat3<T>, p: &ElasticParams) -> T {
    (cbar.det().sqrt() - 1.0).square() * (0.5 * p.kappa())
}

fn psi_p<T: Scalar>(bpe: &Mat3<T>, xi: T, pp: &PlasticParams) -> T {
    let kin = (bpe.trace() - 3.0 - bpe.det().ln()) * (0.5 * pp.a);
    if pp.e == 0.0 {
        return kin;
    }
    kin + (xi + ((xi * (-pp.f)).exp() - 1.0) / pp.f) * pp.e
}

fn require_pd<T: Scalar>(m: &Mat3<T>) -> Result<()> {
    let v = m.values();
    let m1 = v.m[0][0];
    let m2 = v.m[0][0] * v.m[1][1] - v.m[0][1] * v.m[1][0];
    if m1 > 0.0 && m2 > 0.0 && v.det() > 0.0 {
        Ok(())
    } else {
        Err(FemError::NotPositiveDefinite)
    }
}

/// Elastic energy `μ/2 (tr(det(C̄_e)^{-1/3} C̄_e) − 3) + κ/2 (√det C̄_e − 1)²`.
pub fn psi_elastic(cbar: &Mat3<f64>, p: &ElasticParams) -> Result<f64> {
    require_pd(cbar)?;
    Ok(psi_e(cbar, p))
}

/// Plastic energy `a/2 (tr B̄_pe − 3 − ln det B̄_pe) + e (ξ + (exp(−f ξ) − 1)/f)`.
pub fn psi_plastic(bpe: &Mat3<f64>, xi: f64, pp: &PlasticParams) -> Result<f64> {
    require_pd(bpe)?;
    if xi < 0.0 {
        return Err(FemError::BadInput(format!("negative hardening variable {xi}")));
    }
    Ok(psi_p(bpe, xi, pp))
}

/// Stress-like quantities at a given deformation and plastic state.
#[derive(Clone, Copy, Debug)]
pub struct ThermoForces<T> {
    /// Second Piola–Kirchhoff stress.
    pub s: Mat3<T>,
    /// Volumetric part of `S` from the volumetric energy alone.
    pub s_vol: Mat3<T>,
    /// Mandel stress `2 C̄_e ∂ψ/∂C̄_e`.
    pub sigma: Mat3<T>,
    /// Back stress `2 (∂ψ/∂B̄_pe) B̄_pe`.
    pub chi: Mat3<T>,
    /// Relative stress `Σ̄ − χ̄`.
    pub gamma: Mat3<T>,
    /// Kinematic driving force `2 U_pi Θ U_pi`.
    pub theta_check: Mat3<T>,
    pub qp: T,
    pub phi: T,
    /// `κ (J − 1)`.
    pub pressure: T,
}

fn forces<T: Scalar>(
    c: &Mat3<T>,
    up: &Mat3<T>,
    upi: &Mat3<T>,
    xi: T,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<ThermoForces<T>> {
    let up_inv = up.try_inv()?;
    let cbar = (up_inv * *c * up_inv).sym();
    require_pd(&cbar)?;
    let (_, dpsi_e) = sym_gradient(|x: &Mat3<Dual<T, 6>>| psi_e(x, ep), &cbar);
    let (_, dpsi_vol) = sym_gradient(|x: &Mat3<Dual<T, 6>>| psi_e_vol(x, ep), &cbar);
    let s = (up_inv * dpsi_e * up_inv).scale_f64(2.0).sym();
    let s_vol = (up_inv * dpsi_vol * up_inv).scale_f64(2.0).sym();
    let sigma = (cbar * dpsi_e).scale_f64(2.0).sym();

    let cpi = (*upi * *upi).sym();
    let cpi_inv = cpi.try_inv()?;
    let bpe = (*up * cpi_inv * *up).sym();
    require_pd(&bpe)?;
    let xi_const = Dual::constant(xi);
    let (_, dpsi_p) = sym_gradient(|x: &Mat3<Dual<T, 6>>| psi_p(x, xi_const, pp), &bpe);
    let chi = (dpsi_p * bpe).scale_f64(2.0).sym();
    let gamma = sigma - chi;
    let theta = cpi_inv * *up * dpsi_p * *up * cpi_inv;
    let theta_check = (*upi * theta * *upi).scale_f64(2.0).sym();

    let qp = pp.hardening_force(xi);
    let phi = equivalent(&gamma) - qp - pp.sigma_y0;
    let pressure = (c.det().sqrt() - 1.0) * ep.kappa();
    Ok(ThermoForces { s, s_vol, sigma, chi, gamma, theta_check, qp, phi, pressure })
}

/// `√(3/2 tr(dev Γ̄²))`, with a zero tangent at the origin where the root is not differentiable.
fn equivalent<T: Scalar>(gamma: &Mat3<T>) -> T {
    let n2 = gamma.dev().norm_sq() * 1.5;
    if n2.value() <= 0.0 {
        T::zero()
    } else {
        n2.sqrt()
    }
}

/// Flow directions `(∂Φ/∂Γ̄, (b/a) dev Θ̌)`.
fn directions<T: Scalar>(f: &ThermoForces<T>, pp: &PlasticParams) -> (Mat3<T>, Mat3<T>) {
    let dg = f.gamma.dev();
    let eq = equivalent(&f.gamma);
    let n = if eq.value() > 0.0 { dg.scale(eq.recip() * 1.5) } else { Mat3::zeros() };
    let m = if pp.a > 0.0 { f.theta_check.dev().scale_f64(pp.b / pp.a) } else { Mat3::zeros() };
    (n, m)
}

fn lift<T: Scalar>(m: &Mat3<f64>) -> Mat3<T> {
    m.map(T::from_f64)
}

/// Exponential-map update of the plastic stretches for a multiplier increment.
fn advance<T: Scalar>(
    st: &MaterialState,
    dgamma: T,
    n: &Mat3<T>,
    m: &Mat3<T>,
) -> Result<(Mat3<T>, Mat3<T>, T)> {
    let up_n: Mat3<T> = lift(&st.up);
    let upi_n: Mat3<T> = lift(&st.upi);
    let two_dg = dgamma * 2.0;
    let cp = (up_n * expm(&n.scale(two_dg)) * up_n).sym();
    let cpi = (upi_n * expm(&m.scale(two_dg)) * upi_n).sym();
    let up = sqrtm(&cp)?;
    let upi = sqrtm(&cpi)?;
    Ok((up, upi, dgamma + st.xi))
}

/// Result of one return-mapping call.
#[derive(Clone, Copy, Debug)]
pub struct ReturnMapOutcome {
    pub state: MaterialState,
    /// Stress-like Nye vector of `S`.
    pub stress: [f64; 6],
    /// Stress-like Nye vector of the volumetric stress.
    pub s_vol: [f64; 6],
    pub pressure: f64,
    pub phi: f64,
    pub dgamma: f64,
    /// `dΦ/dΔγ` at fixed directions, at the solution.
    pub dphi: f64,
    pub flow: Mat3<f64>,
    pub kin_flow: Mat3<f64>,
    pub plastic: bool,
    pub forces: ThermoForces<f64>,
}

/// Second Piola–Kirchhoff stress, pressure and volumetric stress at a fixed plastic state.
pub fn pk2_stress(
    c: &Mat3<f64>,
    st: &MaterialState,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<ThermoForces<f64>> {
    require_pd(c)?;
    forces(c, &st.up, &st.upi, st.xi, ep, pp)
}

/// Yield function and thermodynamic forces at a fixed plastic state.
pub fn yield_and_forces(
    c: &Mat3<f64>,
    st: &MaterialState,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<ThermoForces<f64>> {
    pk2_stress(c, st, ep, pp)
}

/// Φ and dΦ/dΔγ at fixed directions.
fn phi_and_slope(
    c: &Mat3<f64>,
    st: &MaterialState,
    dg: f64,
    n: &Mat3<f64>,
    m: &Mat3<f64>,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<(f64, f64)> {
    type D1 = Dual<f64, 1>;
    let x = D1::variable(dg, 0);
    let (up, upi, xi) = advance(st, x, &lift(n), &lift(m))?;
    let f = forces(&lift::<D1>(c), &up, &upi, xi, ep, pp)?;
    Ok((f.phi.v, f.phi.d[0]))
}

/// Safeguarded Newton on `Φ(Δγ) = 0` for fixed directions.
#[allow(clippy::too_many_arguments)]
fn solve_consistency(
    c: &Mat3<f64>,
    st: &MaterialState,
    guess: f64,
    phi_trial: f64,
    n: &Mat3<f64>,
    m: &Mat3<f64>,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<(f64, f64)> {
    let tol = YIELD_TOL * pp.sigma_y0;
    let mut lo = 0.0;
    let mut hi = (phi_trial / (3.0 * ep.mu)).max(1e-14);
    let mut expansions = 0;
    loop {
        match phi_and_slope(c, st, hi, n, m, ep, pp) {
            Ok((ph, _)) if ph <= 0.0 => break,
            Ok(_) => {}
            // A bracket end outside the admissible region is pulled back later by bisection.
            Err(_) => break,
        }
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(FemError::NoConvergence("return mapping: no bracket for the plastic multiplier".into()));
        }
    }
    let mut x = if guess > lo && guess < hi { guess } else { lo };
    for _ in 0..LOCAL_MAX_ITER {
        let (ph, dph) = match phi_and_slope(c, st, x, n, m, ep, pp) {
            Ok(v) => v,
            Err(_) => {
                hi = x;
                x = 0.5 * (lo + hi);
                continue;
            }
        };
        if ph.abs() <= tol {
            return Ok((x, dph));
        }
        if ph > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - ph / dph;
        x = if dph < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(FemError::NoConvergence(format!(
        "return mapping: scalar consistency iteration exceeded {LOCAL_MAX_ITER} iterations"
    )))
}

/// Implicit return mapping for the trial right Cauchy–Green tensor `c`.
pub fn return_mapping(
    c: &Mat3<f64>,
    st: &MaterialState,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<ReturnMapOutcome> {
    require_pd(c)?;
    let trial = forces(c, &st.up, &st.upi, st.xi, ep, pp)?;
    let tol = YIELD_TOL * pp.sigma_y0;
    if trial.phi <= tol {
        return Ok(ReturnMapOutcome {
            state: *st,
            stress: trial.s.to_stress_nye(),
            s_vol: trial.s_vol.to_stress_nye(),
            pressure: trial.pressure,
            phi: trial.phi,
            dgamma: 0.0,
            dphi: 0.0,
            flow: Mat3::zeros(),
            kin_flow: Mat3::zeros(),
            plastic: false,
            forces: trial,
        });
    }
    let (mut n, mut m) = directions(&trial, pp);
    let mut dg = 0.0;
    let mut last_change = f64::INFINITY;
    for _ in 0..PICARD_MAX_ITER {
        let Ok((x, dphi)) = solve_consistency(c, st, dg, trial.phi, &n, &m, ep, pp) else {
            break;
        };
        dg = x;
        let (up, upi, xi) = advance(st, dg, &n, &m)?;
        let f = forces(c, &up, &upi, xi, ep, pp)?;
        let (n2, m2) = directions(&f, pp);
        let dn = (n2 - n).max_abs();
        let dm = (m2 - m).max_abs() / m.max_abs().max(1.0);
        if dn <= DIRECTION_TOL && dm <= DIRECTION_TOL && f.phi.abs() <= tol {
            return Ok(plastic_outcome(st, up, upi, xi, dg, dphi, n, m, f));
        }
        let change = dn.max(dm);
        if change > 0.5 * last_change {
            break;
        }
        last_change = change;
        n = n2;
        m = m2;
    }
    if dg <= 0.0 {
        dg = trial.phi / (3.0 * ep.mu);
    }
    newton_return(c, st, dg, &n, &m, ep, pp)
}

#[allow(clippy::too_many_arguments)]
fn plastic_outcome(
    _st: &MaterialState,
    up: Mat3<f64>,
    upi: Mat3<f64>,
    xi: f64,
    dg: f64,
    dphi: f64,
    n: Mat3<f64>,
    m: Mat3<f64>,
    f: ThermoForces<f64>,
) -> ReturnMapOutcome {
    ReturnMapOutcome {
        state: MaterialState { up, upi, xi, kappa_acc: xi },
        stress: f.s.to_stress_nye(),
        s_vol: f.s_vol.to_stress_nye(),
        pressure: f.pressure,
        phi: f.phi,
        dgamma: dg,
        dphi,
        flow: n,
        kin_flow: m,
        plastic: true,
        forces: f,
    }
}

const NX: usize = 13;

fn sym_from<T: Scalar>(v: &[T]) -> Mat3<T> {
    let mut m = Mat3::zeros();
    for (k, &(i, j)) in NYE_PAIRS.iter().enumerate() {
        m.m[i][j] = v[k];
        m.m[j][i] = v[k];
    }
    m
}

fn sym_into<T: Scalar>(m: &Mat3<T>, out: &mut [T]) {
    for (k, &(i, j)) in NYE_PAIRS.iter().enumerate() {
        out[k] = m.m[i][j];
    }
}

/// Residual of the coupled local system in the unknowns `(Δγ, N, M)`:
/// the scaled yield function and the mismatch between the assumed and the
/// end-of-step flow directions.
fn local_residual<T: Scalar>(
    c: &Mat3<T>,
    st: &MaterialState,
    x: &[T; NX],
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<([T; NX], ThermoForces<T>, Mat3<T>, Mat3<T>, T)> {
    let n = sym_from(&x[1..7]);
    let m = sym_from(&x[7..13]);
    let (up, upi, xi) = advance(st, x[0], &n, &m)?;
    let f = forces(c, &up, &upi, xi, ep, pp)?;
    let (n2, m2) = directions(&f, pp);
    let mut r = [T::zero(); NX];
    r[0] = f.phi * (1.0 / pp.sigma_y0);
    sym_into(&(n - n2), &mut r[1..7]);
    sym_into(&(m - m2), &mut r[7..13]);
    Ok((r, f, up, upi, xi))
}

fn pack_unknowns(dg: f64, n: &Mat3<f64>, m: &Mat3<f64>) -> [f64; NX] {
    let mut x = [0.0; NX];
    x[0] = dg;
    sym_into(n, &mut x[1..7]);
    sym_into(m, &mut x[7..13]);
    x
}

type LocalMat = nalgebra::SMatrix<f64, NX, NX>;

/// Residual and Jacobian of the local system at fixed `C`.
fn local_jacobian(
    c: &Mat3<f64>,
    st: &MaterialState,
    x: &[f64; NX],
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<([f64; NX], LocalMat)> {
    type DX = Dual<f64, NX>;
    let xd: [DX; NX] = Dual::seed(*x, 0);
    let (r, ..) = local_residual(&lift::<DX>(c), st, &xd, ep, pp)?;
    Ok((r.map(|v| v.v), LocalMat::from_fn(|i, j| r[i].d[j])))
}

fn residual_norm(r: &[f64; NX]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Newton iteration on the coupled local system with a backtracking line search.
fn newton_return(
    c: &Mat3<f64>,
    st: &MaterialState,
    dg0: f64,
    n0: &Mat3<f64>,
    m0: &Mat3<f64>,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<ReturnMapOutcome> {
    let tol = YIELD_TOL * pp.sigma_y0;
    let mut x = pack_unknowns(dg0, n0, m0);
    for _ in 0..COUPLED_MAX_ITER {
        let (r, jac) = local_jacobian(c, st, &x, ep, pp)?;
        let dir_res = r[1..].iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if (r[0] * pp.sigma_y0).abs() <= tol && dir_res <= DIRECTION_TOL {
            let (_, f, up, upi, xi) = local_residual(c, st, &x, ep, pp)?;
            let n = sym_from(&x[1..7]);
            let m = sym_from(&x[7..13]);
            let (_, dphi) = phi_and_slope(c, st, x[0], &n, &m, ep, pp)?;
            return Ok(plastic_outcome(st, up, upi, xi, x[0], dphi, n, m, f));
        }
        let rhs = nalgebra::SVector::<f64, NX>::from_fn(|i, _| -r[i]);
        let dx = jac.lu().solve(&rhs).ok_or_else(|| FemError::NoConvergence("return mapping: singular local Jacobian".into()))?;
        let r0 = residual_norm(&r);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: [f64; NX] = std::array::from_fn(|i| x[i] + step * dx[i]);
            if trial[0] > 0.0 {
                if let Ok((rt, ..)) = local_residual(c, st, &trial, ep, pp) {
                    if residual_norm(&rt) < (1.0 - 1e-4 * step) * r0 || r0 < 1e-14 {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(FemError::NoConvergence("return mapping: line search failed".into()));
        }
    }
    Err(FemError::NoConvergence(format!("return mapping: coupled Newton exceeded {COUPLED_MAX_ITER} iterations")))
}

/// Stress with tangents along the six strain components, consistent with a converged return map.
///
/// The sensitivities of `(Δγ, N, M)` follow from the implicit function
/// theorem on the coupled local residual, `dx = −J⁻¹ ∂r/∂E`, and are pushed
/// through the exponential-map update in dual arithmetic.
pub(super) fn stress_with_tangent(
    e: &[Dual<f64, 6>; 6],
    st: &MaterialState,
    out: &ReturnMapOutcome,
    ep: &ElasticParams,
    pp: &PlasticParams,
) -> Result<[Dual<f64, 6>; 6]> {
    type D6 = Dual<f64, 6>;
    let c = cauchy_green_from_strain(e);
    let mut s = if !out.plastic {
        forces(&c, &lift(&st.up), &lift(&st.upi), D6::constant(st.xi), ep, pp)?.s.to_stress_nye()
    } else {
        let x = pack_unknowns(out.dgamma, &out.flow, &out.kin_flow);
        let c0 = c.values();
        let (_, jac) = local_jacobian(&c0, st, &x, ep, pp)?;
        let xc: [D6; NX] = x.map(D6::constant);
        let (r, ..) = local_residual(&c, st, &xc, ep, pp)?;
        let g = nalgebra::SMatrix::<f64, NX, 6>::from_fn(|i, k| r[i].d[k]);
        let lu = jac.lu();
        let dx = lu.solve(&(-g)).ok_or_else(|| FemError::NoConvergence("consistent tangent: singular local Jacobian".into()))?;
        let xd: [D6; NX] = std::array::from_fn(|i| Dual { v: x[i], d: std::array::from_fn(|k| dx[(i, k)]) });
        let n = sym_from(&xd[1..7]);
        let m = sym_from(&xd[7..13]);
        let (up, upi, xi) = advance(st, xd[0], &n, &m)?;
        forces(&c, &up, &upi, xi, ep, pp)?.s.to_stress_nye()
    };
    for k in 0..6 {
        s[k].v = out.stress[k];
    }
    Ok(s)
}
