//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Set `HEXFEM_FULL=1` to add the 1728 and 5832 element cube runs.

use std::time::Instant;

use hexfem::autodiff::Taylor;
use hexfem::element::{
    compatible_strain_and_b, element_kernel, enhanced_b, gauss_points, hourglass_tangent, ElementKind, ElementState, Nodes,
    NODE_NATURAL,
};
use hexfem::material::{cauchy_green_from_strain, return_mapping, ElasticParams, MaterialModel, MaterialState};
use hexfem::tensor::{BMat, ElemMat, ElemVec, Mat3, Mat6, Vec6};
use hexfem_bench::cases::{MEMBRANE_PLASTIC_PARAMS, NOTCHED_PLASTIC_PARAMS};
use hexfem_bench::{compare_distortion_sensitivity, run_benchmark, BenchmarkCase, NotchedOptions, Report, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [ElementKind; 3] = [ElementKind::Q1, ElementKind::Q1STc, ElementKind::Q1STcPlus];

struct Outcome {
    passed: bool,
    detail: String,
}

/// All named required checks must exist and pass.
fn from_checks(reports: &[&Report], names: &[&str]) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for name in names {
        match reports.iter().find_map(|r| r.check(name)) {
            Some(c) => {
                passed &= c.passed;
                parts.push(format!("[{}] {}: {}", if c.passed { "ok" } else { "FAILED" }, c.name, c.detail));
            }
            None => {
                passed = false;
                parts.push(format!("[MISSING] {name}"));
            }
        }
    }
    Outcome { passed, detail: parts.join("\n      ") }
}

fn merge(a: Outcome, b: Outcome) -> Outcome {
    Outcome { passed: a.passed && b.passed, detail: format!("{}\n      {}", a.detail, b.detail) }
}

fn all_kinds() -> RunOptions {
    RunOptions { kinds: KINDS.to_vec(), ..Default::default() }
}

fn criterion_4(full: bool) -> (Outcome, Vec<Report>) {
    let mut sizes = vec![8, 10];
    if full {
        sizes.extend([12, 18]);
    }
    let mut reports = Vec::new();
    let mut outcome = Outcome { passed: true, detail: String::new() };
    let opts = RunOptions { kinds: vec![ElementKind::Q1STcPlus, ElementKind::Q1], ..Default::default() };
    let mut q1_series = Vec::new();
    for n in sizes {
        let report = match run_benchmark(&BenchmarkCase::Cube { per_side: n }, &opts) {
            Ok(r) => r,
            Err(e) => {
                outcome.passed = false;
                outcome.detail += &format!("\n      cube {}: error {e}", n * n * n);
                continue;
            }
        };
        let checks = from_checks(
            &[&report],
            &["Q1STc+ cube displacement", "Q1 cube displacement", "Q1 cube locking bound", "Q1 locks relative to Q1STc+"],
        );
        outcome.passed &= checks.passed;
        outcome.detail += &format!("\n      cube {}:\n      {}", n * n * n, checks.detail);
        if n <= 10 {
            for r in &report.runs {
                let fast = r.elapsed_s < 60.0;
                outcome.passed &= fast;
                outcome.detail += &format!("\n      [{}] {} runtime {:.1} s (limit 60 s)", if fast { "ok" } else { "FAILED" }, r.label, r.elapsed_s);
            }
        }
        if let Some(q1) = report.run("Q1") {
            q1_series.push(q1.curve.last().map_or(0.0, |c| c.u.abs()));
        }
        reports.push(report);
    }
    let monotone = q1_series.windows(2).all(|w| w[1] > w[0]);
    outcome.passed &= monotone;
    outcome.detail += &format!("\n      [{}] Q1 |u_y| increases with refinement: {q1_series:.5?}", if monotone { "ok" } else { "FAILED" });
    outcome.detail = outcome.detail.trim_start_matches('\n').trim_start().to_string();
    (outcome, reports)
}

fn criterion_6() -> (Outcome, Option<Report>) {
    let start = Instant::now();
    let kinds = [ElementKind::Q1STc, ElementKind::Q1STcPlus];
    let report = match compare_distortion_sensitivity(&NotchedOptions::default(), &kinds, &[0.2, 0.5], &RunOptions::default()) {
        Ok(r) => r,
        Err(e) => return (Outcome { passed: false, detail: format!("error {e}") }, None),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let mut o = from_checks(
        &[&report],
        &["Q1STc+ insensitive to d=0.2", "Q1STc more distortion sensitive than Q1STc+ at d=0.5", "Q1STc and Q1STc+ agree on the undistorted mesh"],
    );
    let slowest = report.runs.iter().map(|r| r.elapsed_s).fold(0.0, f64::max);
    let fast = slowest < 600.0;
    o.passed &= fast;
    o.detail += &format!(
        "\n      [{}] slowest run {:.1} s on {} elements (limit 600 s); {} runs in {:.1} s",
        if fast { "ok" } else { "FAILED" },
        slowest,
        report.runs[0].elements,
        report.runs.len(),
        elapsed
    );
    (o, Some(report))
}

// Property suite.

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn distorted(r: &mut impl Rng, d: f64) -> Nodes {
    NODE_NATURAL.map(|p| {
        let base = [(p[0] + 1.0) * 0.5, (p[1] + 1.0) * 0.4, (p[2] + 1.0) * 0.6];
        base.map(|c| c + r.random_range(-d..=d))
    })
}

fn parallelepiped(r: &mut impl Rng) -> Nodes {
    let a: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| f64::from(i == j as usize) + r.random_range(-0.3..=0.3)));
    NODE_NATURAL.map(|p| std::array::from_fn(|i| (0..3).map(|j| a[i][j] * p[j]).sum::<f64>() + 0.1 * i as f64))
}

fn random_u(r: &mut impl Rng, s: f64) -> [f64; 24] {
    std::array::from_fn(|_| r.random_range(-s..=s))
}

fn fd_stiffness(kind: ElementKind, x: &Nodes, u: &[f64; 24], st: &ElementState, model: &MaterialModel, h: f64) -> ElemMat {
    let mut k = ElemMat::zeros();
    for q in 0..24 {
        let (mut up, mut um) = (*u, *u);
        up[q] += h;
        um[q] -= h;
        let rp = element_kernel(kind, x, &up, st, model).expect("kernel").residual;
        let rm = element_kernel(kind, x, &um, st, model).expect("kernel").residual;
        k.set_column(q, &((rp - rm) / (2.0 * h)));
    }
    k
}

fn ad_vs_fd() -> Outcome {
    let mut r = rng(2024);
    let neo = MaterialModel::NeoHooke(ElasticParams { lambda: 200.0, mu: 80.0 });
    let stvk = MaterialModel::StVenantKirchhoff(ElasticParams { lambda: 120.0, mu: 80.0 });
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let x = distorted(&mut r, 0.2);
        let u = random_u(&mut r, 0.04);
        let model = if case % 2 == 0 { neo } else { stvk };
        for kind in KINDS {
            let st = ElementState::new(kind, &model);
            let out = element_kernel(kind, &x, &u, &st, &model).expect("kernel");
            let fd = fd_stiffness(kind, &x, &u, &st, &model, 1e-6);
            worst = worst.max((out.stiffness - fd).amax() / fd.amax());
        }
    }
    Outcome {
        passed: worst <= 1e-6,
        detail: format!("AD stiffness vs central differences of the residual, 20 distorted elements x 3 kinds: max relative {worst:.2e} (limit 1e-6)"),
    }
}

fn m_k(k: usize, xi: [f64; 3]) -> f64 {
    Taylor::<f64>::from_coeffs(std::array::from_fn(|i| f64::from(i == k))).eval(xi)
}

fn closed_form_vs_quadrature() -> Outcome {
    let mut r = rng(2025);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = distorted(&mut r, 0.2);
        let u = random_u(&mut r, 0.05);
        for kind in [ElementKind::Q1STc, ElementKind::Q1STcPlus] {
            let ex = compatible_strain_and_b(&x, &u, kind).expect("expansion");
            let chg = hourglass_tangent(r.random_range(10.0..100.0));
            let s0 = Vec6::from_fn(|_, _| r.random_range(-10.0..10.0));
            let w = Vec6::from(ex.enhanced_parameters(&chg).expect("enhanced parameters"));
            let mut kww = Mat6::zeros();
            let mut rw = Vec6::zeros();
            let mut res = ElemVec::zeros();
            for xi in gauss_points() {
                let benh = enhanced_b(xi, &ex.t0);
                let ehg: Vec6 = (1..7).fold(Vec6::zeros(), |acc, k| acc + Vec6::from(ex.e[k]) * m_k(k, xi));
                let b: BMat = (0..7).fold(BMat::zeros(), |acc, k| acc + ex.b[k] * m_k(k, xi));
                kww += benh.transpose() * chg * benh * ex.det0;
                rw += benh.transpose() * chg * ehg * ex.det0;
                res += b.transpose() * (s0 + chg * (ehg + benh * w)) * ex.det0;
            }
            let closed = ex.residual(&s0.into(), &chg).expect("closed-form residual");
            worst = worst
                .max((kww - ex.kww(&chg)).amax() / kww.amax())
                .max((rw - Vec6::from(ex.rw(&chg))).amax() / rw.amax().max(1e-300))
                .max((res - closed).amax() / res.amax());
        }
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("closed-form K_ww, R_w and residual vs 2x2x2 Gauss, 20 elements: max relative {worst:.2e} (limit 1e-12)"),
    }
}

fn parallelepiped_equivalence() -> Outcome {
    let mut r = rng(2026);
    let model = MaterialModel::NeoHooke(ElasticParams { lambda: 200.0, mu: 80.0 });
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = parallelepiped(&mut r);
        let u = random_u(&mut r, 0.05);
        let st = ElementState::new(ElementKind::Q1STc, &model);
        let a = element_kernel(ElementKind::Q1STc, &x, &u, &st, &model).expect("kernel");
        let b = element_kernel(ElementKind::Q1STcPlus, &x, &u, &st, &model).expect("kernel");
        worst = worst
            .max((a.residual - b.residual).amax() / a.residual.amax())
            .max((a.stiffness - b.stiffness).amax() / a.stiffness.amax());
    }
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("Q1STc vs Q1STc+ residual and stiffness on 20 parallelepipeds: max relative {worst:.2e} (limit 1e-12)"),
    }
}

fn return_mapping_consistency() -> Outcome {
    let mut r = rng(2027);
    let mut plastic_steps = 0;
    let mut worst_phi: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    let mut errors = 0;
    for (k, (lambda, mu, pp)) in
        [(25000.0, 55000.0, MEMBRANE_PLASTIC_PARAMS), (25000.0, 55000.0, NOTCHED_PLASTIC_PARAMS)].iter().cycle().enumerate()
    {
        if plastic_steps >= 1000 || k > 10_000 {
            break;
        }
        let ep = ElasticParams { lambda: *lambda, mu: *mu };
        let dir: [f64; 6] = std::array::from_fn(|_| r.random_range(-1.0..=1.0));
        let mut e = [0.0; 6];
        let mut st = MaterialState::virgin();
        for _ in 0..10 {
            for c in 0..6 {
                e[c] += 1.5e-3 * (dir[c] + 0.5 * r.random_range(-1.0..=1.0));
            }
            let c: Mat3<f64> = cauchy_green_from_strain(&e);
            match return_mapping(&c, &st, &ep, pp) {
                Ok(out) => {
                    if out.plastic {
                        plastic_steps += 1;
                        worst_phi = worst_phi.max(out.phi.abs() / pp.sigma_y0);
                        worst_det = worst_det.max((out.state.up.det() - 1.0).abs()).max((out.state.upi.det() - 1.0).abs());
                    }
                    st = out.state;
                }
                Err(_) => {
                    errors += 1;
                    break;
                }
            }
        }
    }
    Outcome {
        passed: plastic_steps >= 1000 && errors == 0 && worst_phi <= 1e-9 && worst_det <= 1e-8,
        detail: format!(
            "{plastic_steps} plastic steps, {errors} failures: max |phi|/sigma_y0 {worst_phi:.2e} (limit 1e-9), max |det U_p - 1| {worst_det:.2e} (limit 1e-8)"
        ),
    }
}

fn equilibrium(reports: &[&Report]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let mut passed = true;
    for r in reports {
        for c in r.checks.iter().filter(|c| c.name.ends_with(" equilibrium")) {
            passed &= c.passed;
        }
        for run in &r.runs {
            runs += 1;
            worst = worst.max(run.equilibrium_error);
        }
    }
    Outcome {
        passed: passed && runs > 0,
        detail: format!("sum of reactions + loads over {runs} benchmark runs: max {worst:.2e} of the reference force (limit 1e-8)"),
    }
}

fn main() {
    let full = std::env::var("HEXFEM_FULL").is_ok_and(|v| !v.is_empty() && v != "0");
    let mut lines: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut reports: Vec<Report> = Vec::new();

    let membrane = run_benchmark(&BenchmarkCase::MembraneElastic, &all_kinds()).expect("membrane patch runs");
    lines.push((
        1,
        "membrane patch, Q1STc+ homogeneous",
        from_checks(&[&membrane], &["Q1STc+ reproduces the homogeneous membrane stress", "Q1STc+ membrane runtime"]),
    ));
    lines.push((
        2,
        "membrane patch, Q1STc error band and pattern",
        from_checks(&[&membrane], &["Q1STc membrane Sxx deviations in the published error band", "Q1STc membrane sign pattern"]),
    ));
    reports.push(membrane);

    let solid = run_benchmark(&BenchmarkCase::SolidPatch, &all_kinds()).expect("solid patch runs");
    lines.push((
        3,
        "solid patch",
        from_checks(
            &[&solid],
            &[
                "Q1 passes the solid patch test",
                "Q1STc fails the solid patch test",
                "Q1STc+ fails the solid patch test",
                "Q1STc+ solid patch errors in the published band",
                "Q1STc+ solid patch error pattern",
            ],
        ),
    ));
    reports.push(solid);

    let (cube, cube_reports) = criterion_4(full);
    lines.push((4, if full { "cube under compression (512..5832)" } else { "cube under compression (512, 1000)" }, cube));
    reports.extend(cube_reports);

    let plastic = run_benchmark(&BenchmarkCase::MembranePlastic, &all_kinds()).expect("plastic membrane runs");
    lines.push((
        5,
        "membrane plasticity",
        from_checks(
            &[&plastic],
            &[
                "Q1STc+ plastic membrane curve follows the reference trace",
                "Q1STc plastic membrane curve follows the reference trace",
                "Q1STc plastic membrane overshoot",
            ],
        ),
    ));
    reports.push(plastic);

    let (notched, notched_report) = criterion_6();
    lines.push((6, "notched specimen distortion sensitivity", notched));
    reports.extend(notched_report);

    let refs: Vec<&Report> = reports.iter().collect();
    let props = [ad_vs_fd(), closed_form_vs_quadrature(), parallelepiped_equivalence(), return_mapping_consistency(), equilibrium(&refs)];
    let seven = props.into_iter().reduce(merge).expect("property checks");
    lines.push((7, "property suite", seven));

    let mut failed = 0;
    for (id, name, o) in &lines {
        println!("criterion {id}: {} {name}", if o.passed { "PASS" } else { "FAIL" });
        println!("      {}", o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
