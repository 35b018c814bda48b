mod common;

use common::*;
use hexfem::autodiff::{basis, Taylor};
use hexfem::element::*;
use hexfem::material::{evaluation_count, reset_evaluation_count, ElasticParams, MaterialModel, MaterialState, PlasticParams};
use hexfem::tensor::{BMat, ElemMat, Mat3, Mat6};
use nalgebra::Vector6;
use proptest::prelude::*;
use rand::Rng;

const KINDS: [ElementKind; 3] = [ElementKind::Q1, ElementKind::Q1STc, ElementKind::Q1STcPlus];

fn neo_hooke() -> MaterialModel {
    MaterialModel::NeoHooke(ElasticParams::new(200.0, 80.0).unwrap())
}

fn stvk() -> MaterialModel {
    MaterialModel::StVenantKirchhoff(ElasticParams::new(120.0, 80.0).unwrap())
}

#[test]
fn shape_function_kronecker_and_center() {
    for (i, p) in NODE_NATURAL.iter().enumerate() {
        let n = shape_functions(*p);
        for (j, v) in n.iter().enumerate() {
            assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
        }
    }
    assert!(shape_functions([0.0; 3]).iter().all(|&v| v == 0.125));
}

proptest! {
    #[test]
    fn partition_of_unity(xi in prop::array::uniform3(-1.0f64..1.0)) {
        let s: f64 = shape_functions(xi).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-15);
        let g = shape_gradients(xi);
        for k in 0..3 {
            prop_assert!(g.iter().map(|gi| gi[k]).sum::<f64>().abs() < 1e-15);
        }
    }
}

#[test]
fn jacobian_of_boxes_and_undeformed_gradient() {
    assert!(mat_max_diff(&jacobian(&NODE_NATURAL, [0.2, 0.1, -0.4]), &Mat3::identity()) < 1e-15);
    let x = brick(2.0, 3.0, 0.5);
    let j = jacobian(&x, [0.3, -0.7, 0.1]);
    assert!(mat_max_diff(&j, &Mat3::diag([1.0, 1.5, 0.25])) < 1e-15);
    assert!((element_volume(&x) - 3.0).abs() < 1e-14);
    let mut r = rng(41);
    let d = distorted(&mut r, 0.2);
    let f = deformation_gradient(&d, &[0.0; 24], [0.5, 0.5, -0.5]).unwrap();
    assert!(mat_max_diff(&f, &Mat3::identity()) < 1e-14);
}

#[test]
fn linear_inverse_jacobian() {
    let [j0, a, b, c] = inverse_jacobian_taylor(&NODE_NATURAL).unwrap();
    assert!(mat_max_diff(&j0, &Mat3::identity()) < 1e-15);
    assert!(a.max_abs() + b.max_abs() + c.max_abs() < 1e-15);

    let mut r = rng(42);
    for _ in 0..10 {
        let p = parallelepiped(&mut r);
        let lin = inverse_jacobian_taylor(&p).unwrap();
        assert!(lin[1..].iter().all(|m| m.max_abs() < 1e-14));
        let exact = inverse_jacobian_exact(&p).unwrap();
        for k in 0..7 {
            let expect = if k == basis::ONE { lin[0] } else { Mat3::zeros() };
            assert!(mat_max_diff(&coefficient(&exact, k), &expect) < 1e-13);
        }
    }

    let h = 1e-6;
    for _ in 0..10 {
        let x = distorted(&mut r, 0.25);
        let lin = inverse_jacobian_taylor(&x).unwrap();
        for k in 0..3 {
            let mut p = [0.0; 3];
            p[k] = h;
            let ip = jacobian(&x, p).try_inv().unwrap();
            p[k] = -h;
            let im = jacobian(&x, p).try_inv().unwrap();
            let fd = (ip - im).scale(1.0 / (2.0 * h));
            assert!(mat_max_diff(&lin[k + 1], &fd) < 1e-7 * fd.max_abs().max(1.0));
        }
        let exact = inverse_jacobian_exact(&x).unwrap();
        assert_eq!(coefficient(&exact, basis::ONE), jacobian(&x, [0.0; 3]).try_inv().unwrap());
    }
}

/// `jᵀ E j` written out index by index.
fn brute_transform(j: &Mat3<f64>, e: &Mat3<f64>) -> Mat3<f64> {
    let mut out = Mat3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let mut s = 0.0;
            for r in 0..3 {
                for q in 0..3 {
                    s += j.m[r][a] * e.m[r][q] * j.m[q][b];
                }
            }
            out.m[a][b] = s;
        }
    }
    out
}

/// Convective strain-like Nye vector in the order (11, 22, 33, 12, 23, 13).
fn convective_nye(e: &Mat3<f64>) -> Vector6<f64> {
    Vector6::new(e.m[0][0], e.m[1][1], e.m[2][2], 2.0 * e.m[0][1], 2.0 * e.m[1][2], 2.0 * e.m[0][2])
}

#[test]
fn transformation_matrix_oracles() {
    // With j = I the map only reorders the shear slots (12, 23, 13) into (12, 13, 23).
    let e = Mat3::from_rows([[1.0, 4.0, 6.0], [4.0, 2.0, 5.0], [6.0, 5.0, 3.0]]);
    let v = transformation_matrix_f64(&Mat3::identity()) * convective_nye(&e);
    assert_eq!(v.as_slice(), e.to_strain_nye().as_slice());
    let s = 1.7;
    let t = transformation_matrix_f64(&Mat3::identity().scale(s));
    let v = t * convective_nye(&e);
    for (a, b) in v.iter().zip(e.to_strain_nye()) {
        assert!((a - s * s * b).abs() < 1e-13);
    }

    let mut r = rng(43);
    for _ in 0..50 {
        let j = random_mat(&mut r, 1.0);
        let e = random_sym(&mut r, 1.0);
        let v = transformation_matrix_f64(&j) * convective_nye(&e);
        let oracle = brute_transform(&j, &e).to_strain_nye();
        for k in 0..6 {
            assert!((v[k] - oracle[k]).abs() < 1e-13);
        }
    }
}

#[test]
fn enhanced_operator() {
    let mut r = rng(44);
    let t0 = Mat6::from_fn(|_, _| r.random_range(-1.0..1.0));
    assert_eq!(enhanced_b([0.0; 3], &t0), Mat6::zeros());
    let b = enhanced_b([1.0, 0.0, 0.0], &Mat6::identity());
    assert_eq!(b.row(3).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(b.row(5).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    for _ in 0..10 {
        let xi = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let [x, e, z] = xi;
        let mut bbar = Mat6::zeros();
        bbar[(3, 0)] = e;
        bbar[(3, 1)] = x;
        bbar[(4, 2)] = z;
        bbar[(4, 3)] = e;
        bbar[(5, 4)] = x;
        bbar[(5, 5)] = z;
        assert!((enhanced_b(xi, &t0) - t0 * bbar).abs().max() < 1e-15);
    }
}

#[test]
fn hourglass_tangent_and_effective_modulus() {
    let c = hourglass_tangent(3.0);
    let vol = Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0) * 0.01;
    assert!((c * vol).norm() < 1e-15);
    assert_eq!(c, c.transpose());

    let mu = 80.0;
    let mut r = rng(45);
    for _ in 0..10 {
        let e = random_sym(&mut r, 1e-3);
        let s = e.dev().scale(2.0 * mu) + Mat3::identity().scale(500.0 * e.trace());
        let m = effective_shear_modulus(&s.to_stress_nye(), &e.to_strain_nye(), 1.0);
        assert!((m - mu).abs() < 1e-9 * mu);
    }
    let dil = Mat3::identity().scale(1e-3);
    assert_eq!(effective_shear_modulus(&dil.scale(300.0).to_stress_nye(), &dil.to_strain_nye(), 42.0), 42.0);
    let st = ElementState::new(ElementKind::Q1STcPlus, &neo_hooke());
    assert_eq!(st.mu_eff, 80.0);
}

#[test]
fn zero_displacement_expansion() {
    let mut r = rng(46);
    let x = distorted(&mut r, 0.2);
    for kind in [ElementKind::Q1STc, ElementKind::Q1STcPlus] {
        let ex = compatible_strain_and_b(&x, &[0.0; 24], kind).unwrap();
        assert!(ex.e.iter().flatten().all(|v| v.abs() < 1e-15));
        // Small-strain operator from cartesian gradients at the center.
        let g = shape_gradients([0.0; 3]);
        let jinv = jacobian(&x, [0.0; 3]).try_inv().unwrap();
        let grad: Vec<[f64; 3]> = g.iter().map(|gi| std::array::from_fn(|a| (0..3).map(|b| gi[b] * jinv.m[b][a]).sum())).collect();
        let mut b0 = BMat::zeros();
        for (n, d) in grad.iter().enumerate() {
            for a in 0..3 {
                b0[(a, 3 * n + a)] = d[a];
            }
            b0[(3, 3 * n)] = d[1];
            b0[(3, 3 * n + 1)] = d[0];
            b0[(4, 3 * n)] = d[2];
            b0[(4, 3 * n + 2)] = d[0];
            b0[(5, 3 * n + 1)] = d[2];
            b0[(5, 3 * n + 2)] = d[1];
        }
        assert!((ex.b[0] - b0).abs().max() < 1e-13);
    }
}

#[test]
fn homogeneous_deformation_of_parallelepiped_has_no_gradients() {
    let mut r = rng(47);
    for _ in 0..10 {
        let x = parallelepiped(&mut r);
        let h = random_mat(&mut r, 0.05);
        let u: [f64; 24] = std::array::from_fn(|k| {
            let p = x[k / 3];
            (0..3).map(|b| h.m[k % 3][b] * p[b]).sum()
        });
        for kind in [ElementKind::Q1STc, ElementKind::Q1STcPlus] {
            let ex = compatible_strain_and_b(&x, &u, kind).unwrap();
            let f = Mat3::identity() + h;
            let e = (f.transpose() * f - Mat3::identity()).scale(0.5).to_strain_nye();
            for m in 0..6 {
                assert!((ex.e[0][m] - e[m]).abs() < 1e-14);
            }
            assert!(ex.e[1..].iter().flatten().all(|v| v.abs() < 1e-14));
        }
    }
}

/// Cartesian strain-like Nye vector at ξ for a given inverse-Jacobian map.
fn strain_with(x: &Nodes, u: &[f64; 24], xi: [f64; 3], t: &dyn Fn([f64; 3]) -> Mat6) -> Vector6<f64> {
    let j = jacobian(x, xi);
    let jc = jacobian_current(x, u, xi);
    let g = (jc.transpose() * jc - j.transpose() * j).scale(0.5);
    t(xi) * convective_nye(&g)
}

/// Value, first partials and mixed partials at the center by central differences.
fn fd_coefficients(f: &dyn Fn([f64; 3]) -> Vector6<f64>, h: f64) -> [Vector6<f64>; 7] {
    let mut out = [Vector6::zeros(); 7];
    out[0] = f([0.0; 3]);
    for k in 0..3 {
        let mut p = [0.0; 3];
        p[k] = h;
        let fp = f(p);
        p[k] = -h;
        out[basis::LINEAR[k]] = (fp - f(p)) / (2.0 * h);
    }
    for (slot, i, j) in basis::BILINEAR {
        let at = |si: f64, sj: f64| {
            let mut p = [0.0; 3];
            p[i] = si * h;
            p[j] = sj * h;
            f(p)
        };
        out[slot] = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
    }
    out
}

#[test]
fn strain_coefficients_match_variant_oracles() {
    let mut r = rng(48);
    for _ in 0..10 {
        let x = distorted(&mut r, 0.25);
        let u = random_u(&mut r, 0.05);

        let exact_t = |xi: [f64; 3]| transformation_matrix_f64(&jacobian(&x, xi).try_inv().unwrap());
        let lin = inverse_jacobian_taylor(&x).unwrap();
        let jlin = |xi: [f64; 3]| lin[0] + lin[1].scale(xi[0]) + lin[2].scale(xi[1]) + lin[3].scale(xi[2]);
        // T of the linearized inverse, itself truncated to its linear part.
        let t0 = transformation_matrix_f64(&lin[0]);
        let h = 1e-4;
        let dt: [Mat6; 3] = std::array::from_fn(|k| {
            let mut p = [0.0; 3];
            p[k] = h;
            let tp = transformation_matrix_f64(&jlin(p));
            p[k] = -h;
            (tp - transformation_matrix_f64(&jlin(p))) / (2.0 * h)
        });
        let approx_t = |xi: [f64; 3]| t0 + dt[0] * xi[0] + dt[1] * xi[1] + dt[2] * xi[2];

        let plus = compatible_strain_and_b(&x, &u, ElementKind::Q1STcPlus).unwrap();
        let stc = compatible_strain_and_b(&x, &u, ElementKind::Q1STc).unwrap();
        let o_plus = fd_coefficients(&|xi| strain_with(&x, &u, xi, &exact_t), 1e-3);
        let o_stc = fd_coefficients(&|xi| strain_with(&x, &u, xi, &approx_t), 1e-3);
        let mut differ = 0.0_f64;
        for k in 0..7 {
            for m in 0..6 {
                let scale = o_plus[k].amax().max(1e-3);
                assert!((plus.e[k][m] - o_plus[k][m]).abs() < 1e-6 * scale, "Q1STc+ slot {k}");
                assert!((stc.e[k][m] - o_stc[k][m]).abs() < 1e-6 * scale, "Q1STc slot {k}");
                differ = differ.max((plus.e[k][m] - stc.e[k][m]).abs());
            }
        }
        assert!(differ > 1e-6);
    }
}

#[test]
fn rigid_translation_is_force_free() {
    let mut r = rng(49);
    for _ in 0..5 {
        let x = distorted(&mut r, 0.2);
        let shift = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let u: [f64; 24] = std::array::from_fn(|k| shift[k % 3]);
        for kind in KINDS {
            for model in [neo_hooke(), stvk()] {
                let st = ElementState::new(kind, &model);
                let out = element_kernel(kind, &x, &u, &st, &model).unwrap();
                assert!(out.residual.amax() < 1e-10 * out.stiffness.amax(), "{kind}");
            }
        }
    }
}

#[test]
fn single_point_variants_agree_on_parallelepipeds() {
    let mut r = rng(50);
    for _ in 0..10 {
        let x = parallelepiped(&mut r);
        let u = random_u(&mut r, 0.05);
        let model = neo_hooke();
        let st = ElementState::new(ElementKind::Q1STc, &model);
        let a = element_kernel(ElementKind::Q1STc, &x, &u, &st, &model).unwrap();
        let b = element_kernel(ElementKind::Q1STcPlus, &x, &u, &st, &model).unwrap();
        assert!((a.residual - b.residual).amax() <= 1e-12 * a.residual.amax());
        assert!((a.stiffness - b.stiffness).amax() <= 1e-12 * a.stiffness.amax());
        assert_eq!(a.state.mu_eff.to_bits(), b.state.mu_eff.to_bits());
    }
}

fn m_k(k: usize, xi: [f64; 3]) -> f64 {
    Taylor::<f64>::from_coeffs(std::array::from_fn(|i| if i == k { 1.0 } else { 0.0 })).eval(xi)
}

#[test]
fn closed_form_integrals_equal_gauss_quadrature() {
    let mut r = rng(51);
    for _ in 0..10 {
        let x = distorted(&mut r, 0.25);
        let u = random_u(&mut r, 0.05);
        for kind in [ElementKind::Q1STc, ElementKind::Q1STcPlus] {
            let ex = compatible_strain_and_b(&x, &u, kind).unwrap();
            let chg = hourglass_tangent(r.random_range(10.0..100.0));
            let s0 = Vector6::from_fn(|_, _| r.random_range(-10.0..10.0));
            let w = Vector6::from(ex.enhanced_parameters(&chg).unwrap());

            let mut kww = Mat6::zeros();
            let mut rw = Vector6::zeros();
            let mut res = nalgebra::SVector::<f64, 24>::zeros();
            let mut orth = Vector6::<f64>::zeros();
            for xi in gauss_points() {
                let benh = enhanced_b(xi, &ex.t0);
                let ehg: Vector6<f64> = (1..7).fold(Vector6::zeros(), |acc, k| acc + Vector6::from(ex.e[k]) * m_k(k, xi));
                let b: BMat = (0..7).fold(BMat::zeros(), |acc, k| acc + ex.b[k] * m_k(k, xi));
                kww += benh.transpose() * chg * benh * ex.det0;
                rw += benh.transpose() * chg * ehg * ex.det0;
                res += b.transpose() * (s0 + chg * (ehg + benh * w)) * ex.det0;
                orth += benh.transpose() * s0 * ex.det0;
            }
            assert!((kww - ex.kww(&chg)).amax() <= 1e-12 * kww.amax());
            assert!((rw - Vector6::from(ex.rw(&chg))).amax() <= 1e-12 * rw.amax().max(1e-300));
            let closed = ex.residual(&s0.into(), &chg).unwrap();
            assert!((res - closed).amax() <= 1e-12 * res.amax());
            assert!(orth.amax() < 1e-14 * s0.amax() * ex.det0 * 10.0);
        }
    }
}

fn fd_stiffness(kind: ElementKind, x: &Nodes, u: &[f64; 24], st: &ElementState, model: &MaterialModel, h: f64) -> ElemMat {
    let mut k = ElemMat::zeros();
    for q in 0..24 {
        let (mut up, mut um) = (*u, *u);
        up[q] += h;
        um[q] -= h;
        let rp = element_kernel(kind, x, &up, st, model).unwrap().residual;
        let rm = element_kernel(kind, x, &um, st, model).unwrap().residual;
        k.set_column(q, &((rp - rm) / (2.0 * h)));
    }
    k
}

#[test]
fn stiffness_matches_finite_differences_on_distorted_elements() {
    let mut r = rng(52);
    for case in 0..20 {
        let x = distorted(&mut r, 0.25);
        let u = random_u(&mut r, 0.04);
        let model = if case % 2 == 0 { neo_hooke() } else { stvk() };
        for kind in KINDS {
            let mut st = ElementState::new(kind, &model);
            st.mu_eff *= r.random_range(0.5..1.5);
            let out = element_kernel(kind, &x, &u, &st, &model).unwrap();
            let fd = fd_stiffness(kind, &x, &u, &st, &model, 1e-6);
            let err = (out.stiffness - fd).amax() / fd.amax();
            assert!(err < 1e-6, "{kind} case {case}: {err:e}");
        }
    }
}

#[test]
fn plastic_stiffness_matches_finite_differences() {
    let model = MaterialModel::ElastoPlastic(
        ElasticParams::new(25000.0, 55000.0).unwrap(),
        PlasticParams { a: 62.5, b: 2.5, e: 125.0, f: 6.0, sigma_y0: 300.0 },
    );
    let mut r = rng(53);
    for kind in KINDS {
        let x = distorted(&mut r, 0.2);
        let u = random_u(&mut r, 0.01);
        let st = ElementState::new(kind, &model);
        let out = element_kernel(kind, &x, &u, &st, &model).unwrap();
        assert!(out.state.kappa_acc() > 0.0, "{kind} should yield");
        let fd = fd_stiffness(kind, &x, &u, &st, &model, 1e-8);
        let err = (out.stiffness - fd).amax() / fd.amax();
        assert!(err < 1e-5, "{kind}: {err:e}");
    }
}

#[test]
fn single_constitutive_call_per_evaluation() {
    let mut r = rng(54);
    let x = distorted(&mut r, 0.2);
    let u = random_u(&mut r, 0.02);
    let model = neo_hooke();
    for (kind, calls) in [(ElementKind::Q1STc, 1), (ElementKind::Q1STcPlus, 1), (ElementKind::Q1, 8)] {
        let st = ElementState::new(kind, &model);
        reset_evaluation_count();
        element_kernel(kind, &x, &u, &st, &model).unwrap();
        assert_eq!(evaluation_count(), calls, "{kind}");
    }
}

#[test]
fn enhanced_stiffness_is_positive_definite() {
    let mut r = rng(55);
    for _ in 0..50 {
        let x = distorted(&mut r, 0.3);
        for kind in [ElementKind::Q1STc, ElementKind::Q1STcPlus] {
            let ex = compatible_strain_and_b(&x, &[0.0; 24], kind).unwrap();
            let k = ex.kww(&hourglass_tangent(r.random_range(1.0..100.0)));
            assert!((k - k.transpose()).amax() <= 1e-12 * k.amax());
            let eig = k.symmetric_eigen().eigenvalues;
            assert!(eig.min() > 1e-10 * eig.max(), "{eig:?}");
        }
    }
}

#[test]
fn center_outputs_and_history() {
    let mut r = rng(56);
    let x = distorted(&mut r, 0.2);
    let u = random_u(&mut r, 0.02);
    let model = neo_hooke();
    let st = ElementState::new(ElementKind::Q1STcPlus, &model);
    let out = element_kernel(ElementKind::Q1STcPlus, &x, &u, &st, &model).unwrap();
    let ex = compatible_strain_and_b(&x, &u, ElementKind::Q1STcPlus).unwrap();
    assert_eq!(out.center_strain, ex.e[0]);
    let resp = model.evaluate(&ex.e[0], &MaterialState::virgin()).unwrap();
    assert_eq!(out.center_stress, resp.stress);
    assert_eq!(out.state.mu_eff, effective_shear_modulus(&resp.stress, &ex.e[0], st.mu_eff));
    let closed = ex.residual(&resp.stress, &hourglass_tangent(st.mu_eff)).unwrap();
    assert!((closed - out.residual).amax() <= 1e-12 * closed.amax());
}
