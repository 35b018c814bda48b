use std::path::Path;
use std::process::Command;

use hexfem::element::ElementKind;
use hexfem::mesh::{CurveRow, CSV_HEADER};
use hexfem::solver::case::CaseFile;
use hexfem_bench::cases::{self, cube_side, NotchedOptions};
use hexfem_bench::reference::{self, membrane_plastic_trace, membrane_plastic_traces};
use hexfem_bench::{max_relative_deviation, run_benchmark, run_case_file, BenchmarkCase, Check, Report, RunOptions};

fn cases_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("cases")
}

#[test]
fn embedded_traces_have_fifty_points() {
    let traces = membrane_plastic_traces();
    let labels: Vec<&str> = traces.iter().map(|t| t.label.as_str()).collect();
    assert_eq!(labels, ["Q1STc", "Q1STc+", "U-P-SBFEM", "Q1"]);
    for t in &traces {
        assert_eq!(t.u.len(), 50);
        assert_eq!(t.normalized.len(), 50);
        for (k, u) in t.u.iter().enumerate() {
            assert!((u - 6e-5 * k as f64).abs() < 1e-12, "{} sample {k}", t.label);
        }
    }
    let plus = membrane_plastic_trace("Q1STc+").unwrap();
    assert_eq!(plus.at(0.00048), 1.0);
    assert!((plus.at(0.00294) - 1.24103).abs() < 1e-5);
    assert!(membrane_plastic_trace("Q2").is_none());
}

#[test]
fn trace_interpolation_and_clamping() {
    let t = reference::Trace { label: "t".into(), u: vec![0.0, 1.0, 3.0], normalized: vec![0.0, 2.0, 4.0] };
    assert_eq!(t.at(-1.0), 0.0);
    assert_eq!(t.at(0.5), 1.0);
    assert_eq!(t.at(2.0), 3.0);
    assert_eq!(t.at(3.0), 4.0);
    assert_eq!(t.at(9.0), 4.0);
}

#[test]
fn reference_tables_are_consistent() {
    // The published Q1STc membrane table reproduces the error pattern the checks look for.
    let a = reference::MEMBRANE_ANALYTIC[0];
    let dev: Vec<f64> = reference::MEMBRANE_Q1STC.iter().map(|r| (r[0] - a).abs() / a).collect();
    assert!(dev.iter().all(|d| (0.0009..0.033).contains(d)), "{dev:?}");
    assert!(reference::MEMBRANE_Q1STC[3][0] > a && reference::MEMBRANE_Q1STC[2][0] < a);
    for table in [reference::CUBE_Q1, reference::CUBE_Q1STC_PLUS] {
        assert!(table.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
    }
}

#[test]
fn cube_side_accepts_cube_numbers_only() {
    assert_eq!(cube_side(512), Some(8));
    assert_eq!(cube_side(1000), Some(10));
    assert_eq!(cube_side(5832), Some(18));
    assert_eq!(cube_side(1), Some(1));
    assert_eq!(cube_side(999), None);
    assert_eq!(cube_side(0), None);
}

#[test]
fn cube_setup_tracks_the_corner_on_the_loaded_face() {
    let s = cases::cube(4).unwrap();
    let d = s.track.unwrap();
    assert_eq!(d % 3, 1);
    assert_eq!(s.mesh.nodes[d / 3], [0.0, 1.0, 0.0]);
    assert_eq!(s.mesh.face_set("load").unwrap().len(), 4);
}

#[test]
fn deviation_metric() {
    let row = |f: f64| CurveRow { step: 0, load_factor: 0.0, u: 0.0, force: f, normalized: f };
    let base = [row(0.0), row(2.0), row(4.0)];
    let other = [row(0.0), row(2.1), row(3.9)];
    assert!((max_relative_deviation(&other, &base) - 0.025).abs() < 1e-12);
    assert_eq!(max_relative_deviation(&base, &base), 0.0);
    assert_eq!(max_relative_deviation(&base, &[row(0.0)]), 0.0);
}

#[test]
fn informational_checks_never_fail_a_report() {
    let mut r = Report::new("x");
    r.checks.push(Check::info("note", false, ""));
    assert!(r.passed());
    r.checks.push(Check::required("hard", false, "detail"));
    assert!(!r.passed());
    let text = r.to_text();
    assert!(text.contains("FAIL  hard: detail") && text.contains("note  note"));
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["checks"][1]["required"], true);
}

#[test]
fn membrane_benchmark_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { kinds: vec![ElementKind::Q1STcPlus], out: Some(dir.path().to_path_buf()), parallel: false };
    let report = run_benchmark(&BenchmarkCase::MembraneElastic, &opts).unwrap();
    assert!(report.passed(), "{}", report.to_text());
    assert_eq!(report.runs.len(), 1);
    assert_eq!(report.runs[0].center_stress.len(), 5);
    for a in &report.artifacts {
        assert!(a.exists(), "{}", a.display());
    }
    let csv = std::fs::read_to_string(dir.path().join("membrane-elastic_q1stc-plus.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(csv.lines().count(), 3);
    let vtk = std::fs::read_to_string(dir.path().join("membrane-elastic_q1stc-plus.vtk")).unwrap();
    assert!(vtk.contains("CELL_DATA 5") && vtk.contains("SCALARS kappa_acc") && vtk.contains("VECTORS u"));
    let gp = std::fs::read_to_string(dir.path().join("membrane-elastic.gp")).unwrap();
    assert!(gp.contains("membrane-elastic_q1stc-plus.csv"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["case"], "membrane-elastic");
}

#[test]
fn plastic_membrane_curve_starts_unloaded_and_has_fifty_rows() {
    let opts = RunOptions { kinds: vec![ElementKind::Q1STcPlus], ..Default::default() };
    let report = run_benchmark(&BenchmarkCase::MembranePlastic, &opts).unwrap();
    let curve = &report.runs[0].curve;
    assert_eq!(curve.len(), 50);
    assert_eq!((curve[0].u, curve[0].force), (0.0, 0.0));
    assert!((curve[49].u - 0.00294).abs() < 1e-12);
    assert!(report.passed(), "{}", report.to_text());
}

#[test]
fn reports_are_deterministic() {
    let opts = RunOptions { kinds: vec![ElementKind::Q1STc], ..Default::default() };
    let a = run_benchmark(&BenchmarkCase::MembranePlastic, &opts).unwrap();
    let b = run_benchmark(&BenchmarkCase::MembranePlastic, &opts).unwrap();
    let bits = |r: &Report| r.runs[0].curve.iter().map(|c| c.force.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn notched_setup_is_reproducible() {
    let o = NotchedOptions { d_xy: 0.2, ..Default::default() };
    let a = cases::notched(&o).unwrap();
    let b = cases::notched(&o).unwrap();
    assert_eq!(a.mesh, b.mesh);
    assert_eq!(a.mesh.hexes.len(), 702);
    let c = cases::notched(&NotchedOptions { seed: 8, ..o }).unwrap();
    assert_ne!(a.mesh.nodes, c.mesh.nodes);
}

#[test]
fn shipped_case_files_parse() {
    for name in ["cube.toml", "membrane.toml", "notched_distorted.toml"] {
        let case = CaseFile::load(&cases_dir().join(name)).unwrap();
        case.kind().unwrap();
        case.material.model().unwrap();
    }
}

#[test]
fn membrane_case_file_matches_the_builtin_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let case = CaseFile::load(&cases_dir().join("membrane.toml")).unwrap();
    let report = run_case_file(&case, Some(dir.path())).unwrap();
    assert!(report.passed());
    let builtin = run_benchmark(
        &BenchmarkCase::MembraneElastic,
        &RunOptions { kinds: vec![ElementKind::Q1STcPlus], ..Default::default() },
    )
    .unwrap();
    assert_eq!(report.runs[0].curve, builtin.runs[0].curve);
    assert!(dir.path().join("membrane_q1stc-plus.csv").exists());
    assert!(!dir.path().join("membrane_q1stc-plus.vtk").exists());
}

fn bench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hexfem-bench")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    assert_eq!(bench(&["--help"]).status.code(), Some(0));
    assert_eq!(bench(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(bench(&["cube", "--nel", "100"]).status.code(), Some(3));
    assert_eq!(bench(&["patch-membrane", "--kind", "q9"]).status.code(), Some(3));
    assert_eq!(bench(&["run", "/nonexistent/case.toml"]).status.code(), Some(3));

    let ok = bench(&["patch-membrane", "--kind", "q1stc+", "--report", "json"]);
    assert_eq!(ok.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(json["runs"][0]["kind"], "Q1STc+");
}

#[test]
fn cli_reports_solver_errors_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("floating.toml");
    std::fs::write(
        &path,
        r#"
element = "q1"
[mesh]
builder = "block"
n = [1, 1, 1]
lengths = [1.0, 1.0, 1.0]
[material]
model = "neo-hooke"
lambda = 100.0
mu = 50.0
[[boundary.pressures]]
set = "y1"
magnitude = 1.0
"#,
    )
    .unwrap();
    let out = bench(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
