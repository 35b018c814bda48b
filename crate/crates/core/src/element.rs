//! Hexahedral element kernels.
//!
//! * [`ElementKind::Q1`]: trilinear hexahedron with 2×2×2 Gauss quadrature.
//! * [`ElementKind::Q1STc`]: one constitutive evaluation at the element center,
//!   six enhanced strain modes condensed at element level and an hourglass
//!   stress `C^hg (Ê^hg1 + Ê^hg2 + Ê_enh)` integrated in closed form. The
//!   inverse Jacobian is expanded linearly about the center, and so is the
//!   transformation matrix `T`.
//! * [`ElementKind::Q1STcPlus`]: identical except that the inverse Jacobian is
//!   carried exactly through truncated Taylor arithmetic, so every bilinear
//!   coefficient of the compatible strain reflects the true geometry.
//!
//! For the single-point elements all seven Taylor coefficients of the
//! cartesian Green–Lagrange strain are produced in one pass of
//! [`DualTaylor`] arithmetic: the Taylor coefficients give `Ê^k`, their
//! 24 tangents give `B^k`.
//!
//! The stiffness combines two parts. The material and condensation part is the
//! AD derivative of the stress-like vectors that multiply each `B^k`. The
//! geometric part `(∂B^k/∂U)ᵀ v_k` is assembled in closed form because the
//! strain is exactly quadratic in the nodal displacements.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::autodiff::{basis, jacobian3, Dual, Dual24, Scalar, Taylor};
use crate::error::{FemError, Result};
use crate::material::{MaterialModel, MaterialState};
use crate::tensor::{BMat, ElemMat, ElemVec, Mat3, Mat6};

/// Element formulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Q1,
    Q1STc,
    Q1STcPlus,
}

impl ElementKind {
    pub fn label(&self) -> &'static str {
        match self {
            ElementKind::Q1 => "Q1",
            ElementKind::Q1STc => "Q1STc",
            ElementKind::Q1STcPlus => "Q1STc+",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q1" => Some(ElementKind::Q1),
            "q1stc" => Some(ElementKind::Q1STc),
            "q1stc+" | "q1stcplus" | "q1stc-plus" => Some(ElementKind::Q1STcPlus),
            _ => None,
        }
    }

    /// Number of material points carried in the history.
    pub fn material_points(&self) -> usize {
        match self {
            ElementKind::Q1 => 8,
            _ => 1,
        }
    }
}

impl std::fmt::Display for ElementKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Natural coordinates of the eight nodes: bottom face counterclockwise, then top face.
pub const NODE_NATURAL: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Node indices of the six faces, outward normal by the right-hand rule.
pub const FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1], // ζ = −1
    [4, 5, 6, 7], // ζ = +1
    [0, 1, 5, 4], // η = −1
    [2, 3, 7, 6], // η = +1
    [0, 4, 7, 3], // ξ = −1
    [1, 2, 6, 5], // ξ = +1
];

/// 2×2×2 Gauss points (all weights equal one).
pub fn gauss_points() -> [[f64; 3]; 8] {
    let g = 1.0 / 3f64.sqrt();
    NODE_NATURAL.map(|p| p.map(|c| c * g))
}

pub type Nodes = [[f64; 3]; 8];

/// Trilinear shape functions `N_I = (1 + ξ_I ξ)(1 + η_I η)(1 + ζ_I ζ) / 8`.
pub fn shape_functions<T: Scalar>(xi: [T; 3]) -> [T; 8] {
    std::array::from_fn(|i| {
        let n = NODE_NATURAL[i];
        (xi[0] * n[0] + 1.0) * (xi[1] * n[1] + 1.0) * (xi[2] * n[2] + 1.0) * 0.125
    })
}

/// Natural-coordinate gradients of the shape functions at a point.
pub fn shape_gradients(xi: [f64; 3]) -> [[f64; 3]; 8] {
    let seeded: [Dual<f64, 3>; 3] = Dual::seed(xi, 0);
    shape_functions(seeded).map(|n| n.d)
}

/// Shape-function gradients as truncated Taylor polynomials about the center.
pub fn shape_gradient_polynomials() -> [[Taylor<f64>; 3]; 8] {
    let seeded: [Dual<Taylor<f64>, 3>; 3] = std::array::from_fn(|k| Dual::variable(Taylor::coordinate(k), k));
    shape_functions(seeded).map(|n| n.d)
}

fn interpolate<T: Scalar>(x: &Nodes, n: &[T; 8]) -> [T; 3] {
    std::array::from_fn(|i| (0..8).fold(T::zero(), |acc, a| acc + n[a] * x[a][i]))
}

/// `J = ∂X/∂ξ` at a point, obtained by differentiating the isoparametric map.
pub fn jacobian(x: &Nodes, xi: [f64; 3]) -> Mat3<f64> {
    jacobian3(|p| interpolate(x, &shape_functions(p)), xi)
}

/// `J_cur = ∂(X + u)/∂ξ` at a point.
pub fn jacobian_current(x: &Nodes, u: &[f64; 24], xi: [f64; 3]) -> Mat3<f64> {
    jacobian(&current_nodes(x, u), xi)
}

pub fn current_nodes(x: &Nodes, u: &[f64; 24]) -> Nodes {
    std::array::from_fn(|a| std::array::from_fn(|i| x[a][i] + u[3 * a + i]))
}

/// `F = J_cur J⁻¹`.
pub fn deformation_gradient(x: &Nodes, u: &[f64; 24], xi: [f64; 3]) -> Result<Mat3<f64>> {
    let j = jacobian(x, xi);
    Ok(jacobian_current(x, u, xi) * j.try_inv()?)
}

/// Jacobian as a Taylor polynomial (exact: its entries are bilinear in ξ).
pub fn jacobian_polynomial(x: &Nodes) -> Mat3<Taylor<f64>> {
    let g = shape_gradient_polynomials();
    Mat3::from_fn(|i, a| (0..8).fold(Taylor::constant(0.0), |acc, n| acc + g[n][a] * x[n][i]))
}

/// Center inverse Jacobian and its linear slopes `j^{ξ_i} = −j⁰ J^{ξ_i} j⁰`.
pub fn inverse_jacobian_taylor(x: &Nodes) -> Result<[Mat3<f64>; 4]> {
    let jp = jacobian_polynomial(x);
    let j0 = coefficient(&jp, basis::ONE);
    check_center(&j0)?;
    let inv0 = j0.try_inv()?;
    let slope = |k: usize| -(inv0 * coefficient(&jp, k) * inv0);
    Ok([inv0, slope(basis::XI), slope(basis::ETA), slope(basis::ZETA)])
}

/// Exact inverse Jacobian carried in truncated Taylor arithmetic.
pub fn inverse_jacobian_exact(x: &Nodes) -> Result<Mat3<Taylor<f64>>> {
    let jp = jacobian_polynomial(x);
    check_center(&coefficient(&jp, basis::ONE))?;
    jp.try_inv()
}

fn check_center(j0: &Mat3<f64>) -> Result<()> {
    let d = j0.det();
    if d <= 0.0 {
        return Err(FemError::SingularMatrix { det: d, floor: 0.0 });
    }
    Ok(())
}

/// Coefficient `k` of every entry of a Taylor-valued matrix.
pub fn coefficient<T: Scalar>(m: &Mat3<Taylor<T>>, k: usize) -> Mat3<T> {
    Mat3::from_fn(|i, j| m.m[i][j].c[k])
}

/// Linear Taylor representation `j⁰ + Σ j^{ξ_i} ξ_i`.
pub fn linearized_inverse(parts: &[Mat3<f64>; 4]) -> Mat3<Taylor<f64>> {
    Mat3::from_fn(|i, j| {
        let mut c = [0.0; 7];
        c[basis::ONE] = parts[0].m[i][j];
        for (s, &k) in basis::LINEAR.iter().enumerate() {
            c[k] = parts[s + 1].m[i][j];
        }
        Taylor::from_coeffs(c)
    })
}

/// Transformation matrix mapping convective strain-like Nye vectors
/// `(11, 22, 33, 12, 23, 13)` to cartesian ones `(11, 22, 33, 12, 13, 23)`.
pub fn transformation_matrix<T: Scalar>(j: &Mat3<T>) -> [[T; 6]; 6] {
    let q = |r: usize, c: usize| j.m[r - 1][c - 1];
    let row = |a: usize, b: usize| -> [T; 6] {
        if a == b {
            [
                q(1, a) * q(1, a),
                q(2, a) * q(2, a),
                q(3, a) * q(3, a),
                q(1, a) * q(2, a),
                q(2, a) * q(3, a),
                q(1, a) * q(3, a),
            ]
        } else {
            [
                q(1, a) * q(1, b) * 2.0,
                q(2, a) * q(2, b) * 2.0,
                q(3, a) * q(3, b) * 2.0,
                q(1, b) * q(2, a) + q(1, a) * q(2, b),
                q(2, b) * q(3, a) + q(2, a) * q(3, b),
                q(1, b) * q(3, a) + q(1, a) * q(3, b),
            ]
        }
    };
    [row(1, 1), row(2, 2), row(3, 3), row(1, 2), row(1, 3), row(2, 3)]
}

pub fn transformation_matrix_f64(j: &Mat3<f64>) -> Mat6 {
    let t = transformation_matrix(j);
    Mat6::from_fn(|r, c| t[r][c])
}

/// Convective index pairs in the column order of the transformation matrix.
const CONV_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

/// `∂B̄_enh/∂ξ_i` (the enhanced operator is linear in ξ).
pub fn enhanced_b_slope(i: usize) -> Mat6 {
    let mut m = Mat6::zeros();
    match i {
        0 => {
            m[(3, 1)] = 1.0;
            m[(5, 4)] = 1.0;
        }
        1 => {
            m[(3, 0)] = 1.0;
            m[(4, 3)] = 1.0;
        }
        2 => {
            m[(4, 2)] = 1.0;
            m[(5, 5)] = 1.0;
        }
        _ => panic!("natural coordinate index {i} out of range"),
    }
    m
}

/// `B_enh(ξ) = T⁰ B̄_enh(ξ)`.
pub fn enhanced_b(xi: [f64; 3], t0: &Mat6) -> Mat6 {
    let bbar = (0..3).fold(Mat6::zeros(), |acc, i| acc + enhanced_b_slope(i) * xi[i]);
    t0 * bbar
}

/// `C^hg = μ_eff/3 [[4,−2,−2],[−2,4,−2],[−2,−2,4]] ⊕ 3 I`.
pub fn hourglass_tangent(mu_eff: f64) -> Mat6 {
    let mut c = Mat6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = if i == j { 4.0 } else { -2.0 };
        }
        c[(i + 3, i + 3)] = 3.0;
    }
    c * (mu_eff / 3.0)
}

/// Floor on `tr(dev E⁰²)` below which the effective shear modulus is not updated.
pub const DEV_STRAIN_FLOOR: f64 = 1e-24;

/// `μ_eff = ½ √(tr(dev S⁰²) / tr(dev E⁰²))`, keeping `previous` when the strain deviator vanishes.
pub fn effective_shear_modulus(s0: &[f64; 6], e0: &[f64; 6], previous: f64) -> f64 {
    let ds = Mat3::from_stress_nye(s0).dev().norm_sq();
    let de = Mat3::from_strain_nye(e0).dev().norm_sq();
    if de < DEV_STRAIN_FLOOR || !ds.is_finite() {
        return previous;
    }
    let mu = 0.5 * (ds / de).sqrt();
    if mu > 0.0 && mu.is_finite() {
        mu
    } else {
        previous
    }
}

/// History of one element: material points plus the hourglass modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementState {
    pub points: Vec<MaterialState>,
    pub mu_eff: f64,
}

impl ElementState {
    pub fn new(kind: ElementKind, model: &MaterialModel) -> Self {
        ElementState { points: vec![MaterialState::virgin(); kind.material_points()], mu_eff: model.shear_modulus() }
    }

    /// Mean accumulated plastic strain over the material points.
    pub fn kappa_acc(&self) -> f64 {
        self.points.iter().map(|p| p.kappa_acc).sum::<f64>() / self.points.len() as f64
    }
}

/// Everything one element evaluation produces.
#[derive(Clone, Debug)]
pub struct ElementKernelOutput {
    pub residual: ElemVec,
    pub stiffness: ElemMat,
    pub state: ElementState,
    /// Stress-like Nye vector at the center (mean over Gauss points for Q1).
    pub center_stress: [f64; 6],
    /// Strain-like Nye vector at the center (mean over Gauss points for Q1).
    pub center_strain: [f64; 6],
}

/// Weight of the closed-form integral for each Taylor slot (times `det J⁰`).
pub const SLOT_WEIGHTS: [f64; 7] = [8.0, 8.0 / 3.0, 8.0 / 3.0, 8.0 / 3.0, 8.0 / 9.0, 8.0 / 9.0, 8.0 / 9.0];

/// Taylor coefficients of the compatible strain and their B-operators.
#[derive(Clone, Debug)]
pub struct StcExpansion {
    /// `det J⁰`.
    pub det0: f64,
    /// Transformation matrix at the center.
    pub t0: Mat6,
    /// Strain-like Nye coefficients `Ê⁰, Ê^ξ, Ê^η, Ê^ζ, Ê^ξη, Ê^ξζ, Ê^ηζ`.
    pub e: [[f64; 6]; 7],
    /// Matching `B` coefficients.
    pub b: [BMat; 7],
    /// `B_enh^{ξ_i} = T⁰ ∂B̄_enh/∂ξ_i`.
    pub benh: [Mat6; 3],
    strain: [[Dual24; 6]; 7],
    /// Cartesian second derivatives of the strain per node pair, by slot: `q[k][m][I][J]`.
    curvature: Box<[[[[f64; 8]; 8]; 6]; 7]>,
}

/// Transformation matrix polynomial used by each single-point variant.
fn transformation_polynomial(x: &Nodes, kind: ElementKind) -> Result<[[Taylor<f64>; 6]; 6]> {
    match kind {
        ElementKind::Q1STc => {
            let j = linearized_inverse(&inverse_jacobian_taylor(x)?);
            Ok(transformation_matrix(&j).map(|r| r.map(|t| t.linear_part())))
        }
        ElementKind::Q1STcPlus => Ok(transformation_matrix(&inverse_jacobian_exact(x)?)),
        ElementKind::Q1 => Err(FemError::BadInput("Q1 has no Taylor expansion".into())),
    }
}

/// Compatible strain and B-operator coefficients about the element center.
pub fn compatible_strain_and_b(x: &Nodes, u: &[f64; 24], kind: ElementKind) -> Result<StcExpansion> {
    let t = transformation_polynomial(x, kind)?;
    let g = shape_gradient_polynomials();
    let jp = jacobian_polynomial(x);
    let j0 = coefficient(&jp, basis::ONE);
    let det0 = j0.det();
    let t0 = Mat6::from_fn(|r, c| t[r][c].c[basis::ONE]);

    let useed: [Dual24; 24] = Dual::seed(*u, 0);
    // Current Jacobian J_cur[i][a] = Σ_I (X_Ii + u_Ii) g_Ia.
    let jcur: [[Taylor<Dual24>; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|a| {
            let mut acc = Taylor::<Dual24>::constant(Dual24::constant(0.0));
            for n in 0..8 {
                let xn = useed[3 * n + i] + x[n][i];
                for k in 0..7 {
                    acc.c[k] += xn * g[n][a].c[k];
                }
            }
            acc
        })
    });
    let jtj = |a: usize, b: usize| {
        let mut s = Taylor::<f64>::constant(0.0);
        for i in 0..3 {
            s += jp.m[i][a] * jp.m[i][b];
        }
        s
    };
    let conv: [Taylor<Dual24>; 6] = std::array::from_fn(|n| {
        let (a, b) = CONV_PAIRS[n];
        let mut s = jcur[0][a] * jcur[0][b];
        for i in 1..3 {
            s += jcur[i][a] * jcur[i][b];
        }
        let s = s - jtj(a, b).lift();
        if a == b {
            s * 0.5
        } else {
            s
        }
    });
    let cart: [Taylor<Dual24>; 6] = std::array::from_fn(|m| {
        let mut s = conv[0].mul_real(&t[m][0]);
        for n in 1..6 {
            s += conv[n].mul_real(&t[m][n]);
        }
        s
    });
    let strain: [[Dual24; 6]; 7] = std::array::from_fn(|k| std::array::from_fn(|m| cart[m].c[k]));
    let e = strain.map(|row| row.map(|d| d.v));
    let b = strain.map(|row| BMat::from_fn(|m, c| row[m].d[c]));
    let benh = std::array::from_fn(|i| t0 * enhanced_b_slope(i));

    // Second derivatives of the cartesian strain with respect to u_Ik, u_Jk (same k).
    let mut curvature = Box::new([[[[0.0; 8]; 8]; 6]; 7]);
    for p in 0..8 {
        for q in p..8 {
            let h: [Taylor<f64>; 6] = std::array::from_fn(|n| {
                let (a, b) = CONV_PAIRS[n];
                if a == b {
                    g[p][a] * g[q][a]
                } else {
                    g[p][a] * g[q][b] + g[p][b] * g[q][a]
                }
            });
            for m in 0..6 {
                let mut s = t[m][0] * h[0];
                for n in 1..6 {
                    s += t[m][n] * h[n];
                }
                for k in 0..7 {
                    curvature[k][m][p][q] = s.c[k];
                    curvature[k][m][q][p] = s.c[k];
                }
            }
        }
    }

    Ok(StcExpansion { det0, t0, e, b, benh, strain, curvature })
}

impl StcExpansion {
    /// `K_ww = 8/3 det J⁰ Σ_i B_enh^iᵀ C^hg B_enh^i`.
    pub fn kww(&self, chg: &Mat6) -> Mat6 {
        let w = SLOT_WEIGHTS[1] * self.det0;
        (0..3).fold(Mat6::zeros(), |acc, i| acc + self.benh[i].transpose() * chg * self.benh[i] * w)
    }

    /// `R_w = 8/3 det J⁰ Σ_i B_enh^iᵀ C^hg Ê^i`.
    pub fn rw(&self, chg: &Mat6) -> [f64; 6] {
        let w = SLOT_WEIGHTS[1] * self.det0;
        let mut r = [0.0; 6];
        for i in 0..3 {
            let e = nalgebra::Vector6::from_column_slice(&self.e[basis::LINEAR[i]]);
            let v = self.benh[i].transpose() * chg * e * w;
            for a in 0..6 {
                r[a] += v[a];
            }
        }
        r
    }

    /// Enhanced parameters `W = −K_ww⁻¹ R_w`.
    pub fn enhanced_parameters(&self, chg: &Mat6) -> Result<[f64; 6]> {
        let kinv = invert6(&self.kww(chg))?;
        let rw = nalgebra::Vector6::from(self.rw(chg));
        let w = -(kinv * rw);
        Ok(std::array::from_fn(|a| w[a]))
    }

    /// Closed-form condensed residual for a given center stress.
    pub fn residual(&self, s0: &[f64; 6], chg: &Mat6) -> Result<ElemVec> {
        let w = self.enhanced_parameters(chg)?;
        let wv = nalgebra::Vector6::from(w);
        let mut r = ElemVec::zeros();
        for k in 0..7 {
            let v = if k == 0 {
                nalgebra::Vector6::from(*s0)
            } else {
                let mut e = nalgebra::Vector6::from(self.e[k]);
                if k <= 3 {
                    e += self.benh[k - 1] * wv;
                }
                chg * e
            };
            r += self.b[k].transpose() * v * (SLOT_WEIGHTS[k] * self.det0);
        }
        Ok(r)
    }
}

fn invert6(m: &Mat6) -> Result<Mat6> {
    m.try_inverse().ok_or(FemError::SingularMatrix { det: m.determinant(), floor: 0.0 })
}

fn mat6_apply<T: Scalar>(m: &Mat6, v: &[T; 6]) -> [T; 6] {
    std::array::from_fn(|r| (0..6).fold(T::zero(), |acc, c| acc + v[c] * m[(r, c)]))
}

/// Element residual, stiffness and updated history.
pub fn element_kernel(
    kind: ElementKind,
    x: &Nodes,
    u: &[f64; 24],
    state: &ElementState,
    model: &MaterialModel,
) -> Result<ElementKernelOutput> {
    match kind {
        ElementKind::Q1 => q1_kernel(x, u, state, model),
        _ => stc_kernel(kind, x, u, state, model),
    }
}

fn stc_kernel(
    kind: ElementKind,
    x: &Nodes,
    u: &[f64; 24],
    state: &ElementState,
    model: &MaterialModel,
) -> Result<ElementKernelOutput> {
    let ex = compatible_strain_and_b(x, u, kind)?;
    let chg = hourglass_tangent(state.mu_eff);
    let resp = model.evaluate(&ex.e[0], &state.points[0])?;

    // Stress-like vectors multiplying each B^k, carrying tangents along U.
    let e0: [Dual24; 6] = ex.strain[0];
    let s0: [Dual24; 6] = std::array::from_fn(|r| {
        let mut d = Dual24::constant(resp.stress[r]);
        for c in 0..6 {
            for q in 0..24 {
                d.d[q] += resp.tangent[(r, c)] * e0[c].d[q];
            }
        }
        d
    });
    let kinv = invert6(&ex.kww(&chg))?;
    let rw: [Dual24; 6] = {
        let mut acc = [Dual24::constant(0.0); 6];
        for i in 0..3 {
            let m = ex.benh[i].transpose() * chg;
            let v = mat6_apply(&m, &ex.strain[basis::LINEAR[i]]);
            for a in 0..6 {
                acc[a] += v[a];
            }
        }
        acc.map(|x| x * (SLOT_WEIGHTS[1] * ex.det0))
    };
    let wdual: [Dual24; 6] = mat6_apply(&(-kinv), &rw);
    let v: [[Dual24; 6]; 7] = std::array::from_fn(|k| {
        if k == 0 {
            return s0;
        }
        let mut e = ex.strain[k];
        if k <= 3 {
            let add = mat6_apply(&ex.benh[k - 1], &wdual);
            for a in 0..6 {
                e[a] += add[a];
            }
        }
        mat6_apply(&chg, &e)
    });

    let mut residual = ElemVec::zeros();
    let mut stiffness = ElemMat::zeros();
    let mut geo = SMatrix::<f64, 8, 8>::zeros();
    for k in 0..7 {
        let w = SLOT_WEIGHTS[k] * ex.det0;
        let vval = nalgebra::Vector6::from(v[k].map(|d| d.v));
        let vder = BMat::from_fn(|m, q| v[k][m].d[q]);
        residual += ex.b[k].transpose() * vval * w;
        stiffness += ex.b[k].transpose() * vder * w;
        for m in 0..6 {
            let s = vval[m] * w;
            if s != 0.0 {
                for p in 0..8 {
                    for q in 0..8 {
                        geo[(p, q)] += s * ex.curvature[k][m][p][q];
                    }
                }
            }
        }
    }
    add_geometric(&mut stiffness, &geo);

    let mu_eff = effective_shear_modulus(&resp.stress, &ex.e[0], state.mu_eff);
    Ok(ElementKernelOutput {
        residual,
        stiffness,
        state: ElementState { points: vec![resp.state], mu_eff },
        center_stress: resp.stress,
        center_strain: ex.e[0],
    })
}

fn add_geometric(k: &mut ElemMat, geo: &SMatrix<f64, 8, 8>) {
    for p in 0..8 {
        for q in 0..8 {
            let g = geo[(p, q)];
            for c in 0..3 {
                k[(3 * p + c, 3 * q + c)] += g;
            }
        }
    }
}

fn q1_kernel(x: &Nodes, u: &[f64; 24], state: &ElementState, model: &MaterialModel) -> Result<ElementKernelOutput> {
    let useed: [Dual24; 24] = Dual::seed(*u, 0);
    let mut residual = ElemVec::zeros();
    let mut stiffness = ElemMat::zeros();
    let mut geo = SMatrix::<f64, 8, 8>::zeros();
    let mut points = Vec::with_capacity(8);
    let mut mean_s = [0.0; 6];
    let mut mean_e = [0.0; 6];
    for (gp, xi) in gauss_points().iter().enumerate() {
        let gnat = shape_gradients(*xi);
        let j = jacobian(x, *xi);
        let detj = j.det();
        if detj <= 0.0 {
            return Err(FemError::SingularMatrix { det: detj, floor: 0.0 });
        }
        let jinv = j.try_inv()?;
        // Cartesian gradients ∂N_I/∂X_a = Σ_b g_Ib j_ba.
        let grad: [[f64; 3]; 8] =
            std::array::from_fn(|n| std::array::from_fn(|a| (0..3).map(|b| gnat[n][b] * jinv.m[b][a]).sum()));
        let f: Mat3<Dual24> = Mat3::from_fn(|i, a| {
            let mut s = Dual24::constant(if i == a { 1.0 } else { 0.0 });
            for n in 0..8 {
                s += useed[3 * n + i] * grad[n][a];
            }
            s
        });
        let e: Mat3<Dual24> = (f.transpose() * f - Mat3::identity()).scale_f64(0.5);
        let en = e.to_strain_nye();
        let eval = en.map(|d| d.v);
        let bm = BMat::from_fn(|m, q| en[m].d[q]);
        let resp = model.evaluate(&eval, &state.points[gp])?;
        let sv = nalgebra::Vector6::from(resp.stress);
        residual += bm.transpose() * sv * detj;
        stiffness += bm.transpose() * resp.tangent * bm * detj;
        let smat = Mat3::from_stress_nye(&resp.stress);
        for p in 0..8 {
            let sp = smat * grad[p];
            for q in 0..8 {
                geo[(p, q)] += detj * (0..3).map(|a| sp[a] * grad[q][a]).sum::<f64>();
            }
        }
        for c in 0..6 {
            mean_s[c] += resp.stress[c] / 8.0;
            mean_e[c] += eval[c] / 8.0;
        }
        points.push(resp.state);
    }
    add_geometric(&mut stiffness, &geo);
    Ok(ElementKernelOutput {
        residual,
        stiffness,
        state: ElementState { points, mu_eff: state.mu_eff },
        center_stress: mean_s,
        center_strain: mean_e,
    })
}

/// Volume by 2×2×2 quadrature of `det J`.
pub fn element_volume(x: &Nodes) -> f64 {
    gauss_points().iter().map(|xi| jacobian(x, *xi).det()).sum()
}

/// `det J` at the element center.
pub fn center_jacobian_det(x: &Nodes) -> f64 {
    jacobian(x, [0.0; 3]).det()
}

/// Smallest `det J` over the center and the eight Gauss points.
pub fn min_jacobian_det(x: &Nodes) -> f64 {
    gauss_points().iter().map(|xi| jacobian(x, *xi).det()).fold(center_jacobian_det(x), f64::min)
}
