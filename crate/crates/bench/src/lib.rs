//! Benchmark harness for the `hexfem` element formulations.
//!
//! Each [`BenchmarkCase`] builds its problem, runs the requested element
//! kinds on the same mesh, compares the results against the embedded
//! reference data in [`reference`] and collects everything in a [`Report`].
//! Curves, VTK snapshots, a gnuplot script and `report.json` are written when
//! an output directory is given.

pub mod cases;
pub mod reference;
pub mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hexfem::element::ElementKind;
use hexfem::mesh::{self, build_notched_specimen, distort, CurveRow, Field, Mesh};
use hexfem::solver::case::CaseFile;
use hexfem::solver::{reactions, resolve_boundary, solve_case, total_reaction, Problem, SolutionRecord};
use hexfem::{FemError, Result};

pub use cases::{NotchedOptions, Setup};
pub use report::{Check, Deviation, Report, RunSummary};

use reference::{MEMBRANE_ANALYTIC, MEMBRANE_Q1STC, SOLID_ANALYTIC, SOLID_Q1STC, SOLID_Q1STC_PLUS};

/// Equilibrium tolerance relative to the reference force of each step.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Agreement threshold between Q1STc and Q1STc+ on the undistorted notched mesh.
pub const NOTCHED_KIND_AGREEMENT: f64 = 0.05;

pub const ALL_KINDS: [ElementKind; 3] = [ElementKind::Q1STc, ElementKind::Q1STcPlus, ElementKind::Q1];

#[derive(Clone, Debug, PartialEq)]
pub enum BenchmarkCase {
    MembraneElastic,
    MembranePlastic,
    SolidPatch,
    /// Unit cube with `per_side³` elements.
    Cube { per_side: usize },
    Notched(NotchedOptions),
}

impl BenchmarkCase {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkCase::MembraneElastic => "membrane-elastic",
            BenchmarkCase::MembranePlastic => "membrane-plastic",
            BenchmarkCase::SolidPatch => "solid-patch",
            BenchmarkCase::Cube { .. } => "cube",
            BenchmarkCase::Notched(_) => "notched",
        }
    }

    /// Element kinds run when none are requested.
    pub fn default_kinds(&self) -> Vec<ElementKind> {
        match self {
            BenchmarkCase::Cube { .. } => vec![ElementKind::Q1STcPlus, ElementKind::Q1],
            BenchmarkCase::Notched(_) => vec![ElementKind::Q1STcPlus],
            _ => ALL_KINDS.to_vec(),
        }
    }

    pub fn setup(&self) -> Result<Setup> {
        match self {
            BenchmarkCase::MembraneElastic => Ok(cases::membrane_elastic()),
            BenchmarkCase::MembranePlastic => Ok(cases::membrane_plastic()),
            BenchmarkCase::SolidPatch => Ok(cases::solid_patch()),
            BenchmarkCase::Cube { per_side } => cases::cube(*per_side),
            BenchmarkCase::Notched(o) => cases::notched(o),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Element kinds to run; the case defaults when empty.
    pub kinds: Vec<ElementKind>,
    /// Artifact directory; nothing is written when absent.
    pub out: Option<PathBuf>,
    /// Run the element kinds concurrently.
    pub parallel: bool,
}

/// One finished solver run.
#[derive(Clone, Debug)]
pub struct Run {
    pub kind: ElementKind,
    pub record: SolutionRecord,
    pub summary: RunSummary,
}

/// File-name friendly element label.
pub fn kind_slug(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::Q1 => "q1",
        ElementKind::Q1STc => "q1stc",
        ElementKind::Q1STcPlus => "q1stc-plus",
    }
}

/// Load-displacement curve of a run, starting with the unloaded state.
pub fn curve(setup: &Setup, record: &SolutionRecord) -> Result<Vec<CurveRow>> {
    let Some((set, comp)) = &setup.reaction else {
        return Ok(Vec::new());
    };
    let forces = reactions(record, set)?;
    let mut rows = vec![CurveRow { step: 0, load_factor: 0.0, u: 0.0, force: 0.0, normalized: 0.0 }];
    for (k, (step, f)) in record.steps.iter().zip(&forces).enumerate() {
        let u = setup.track.map_or(step.load_factor, |d| step.u[d]);
        rows.push(CurveRow { step: k + 1, load_factor: step.load_factor, u, force: f[*comp], normalized: f[*comp] / setup.f0 });
    }
    Ok(rows)
}

/// Largest `|Σ reactions + Σ applied|` component over all steps, relative to
/// the step's reference force norm.
pub fn equilibrium_error(mesh: &Mesh, setup: &Setup, record: &SolutionRecord) -> Result<f64> {
    let bc = resolve_boundary(mesh, &setup.bcs)?;
    let mut worst: f64 = 0.0;
    for step in &record.steps {
        let r = total_reaction(step, &bc.constrained);
        let applied_norm = step.applied.iter().map(|a| a * a).sum::<f64>().sqrt();
        let scale = step.reference_norm.max(applied_norm).max(f64::MIN_POSITIVE);
        for c in 0..3 {
            worst = worst.max((r[c] + step.applied[c]).abs() / scale);
        }
    }
    Ok(worst)
}

/// Solves `setup` with one element kind.
pub fn execute(setup: &Setup, kind: ElementKind, label: &str) -> Result<Run> {
    let start = Instant::now();
    let problem = Problem { mesh: &setup.mesh, kind, model: setup.model, bcs: &setup.bcs };
    let record = solve_case(&problem, &setup.config)?;
    let elapsed_s = start.elapsed().as_secs_f64();
    let summary = RunSummary {
        label: label.to_string(),
        kind: kind.label().to_string(),
        elements: setup.mesh.hexes.len(),
        steps: record.steps.len(),
        newton_iterations: record.steps.iter().map(|s| s.residual_history.len().saturating_sub(1).max(s.iterations)).sum(),
        cutbacks: record.steps.iter().map(|s| s.cutbacks).sum(),
        equilibrium_error: equilibrium_error(&setup.mesh, setup, &record)?,
        elapsed_s,
        curve: curve(setup, &record)?,
        center_stress: if setup.mesh.hexes.len() <= 16 { record.last().center_stress.clone() } else { Vec::new() },
    };
    Ok(Run { kind, record, summary })
}

/// Runs the jobs, concurrently when `parallel` is set, keeping the input order.
fn execute_all(jobs: &[(&Setup, ElementKind, String)], parallel: bool) -> Result<Vec<Run>> {
    if !parallel || jobs.len() < 2 {
        return jobs.iter().map(|(s, k, l)| execute(s, *k, l)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|(s, k, l)| scope.spawn(move || execute(s, *k, l))).collect();
        handles.into_iter().map(|h| h.join().expect("benchmark thread panicked")).collect()
    })
}

fn equilibrium_checks(report: &mut Report) {
    for r in report.runs.clone() {
        report.checks.push(Check::required(
            format!("{} equilibrium", r.label),
            r.equilibrium_error <= EQUILIBRIUM_TOL,
            format!("max |sum of reactions + loads| / reference force = {:.2e} (limit {EQUILIBRIUM_TOL:.0e})", r.equilibrium_error),
        ));
    }
}

/// Runs a built-in benchmark case and checks it against its reference data.
pub fn run_benchmark(case: &BenchmarkCase, opts: &RunOptions) -> Result<Report> {
    let setup = case.setup()?;
    let kinds = if opts.kinds.is_empty() { case.default_kinds() } else { opts.kinds.clone() };
    let jobs: Vec<_> = kinds.iter().map(|&k| (&setup, k, k.label().to_string())).collect();
    let runs = execute_all(&jobs, opts.parallel)?;

    let mut report = Report::new(setup.name.clone());
    report.runs = runs.iter().map(|r| r.summary.clone()).collect();
    match case {
        BenchmarkCase::MembraneElastic => membrane_elastic_checks(&mut report, &runs),
        BenchmarkCase::MembranePlastic => membrane_plastic_checks(&mut report, &runs),
        BenchmarkCase::SolidPatch => solid_checks(&mut report, &runs),
        BenchmarkCase::Cube { per_side } => cube_checks(&mut report, &runs, per_side.pow(3)),
        BenchmarkCase::Notched(_) => {}
    }
    equilibrium_checks(&mut report);
    if let Some(dir) = &opts.out {
        write_artifacts(dir, &mut report, &setup, &runs)?;
    }
    Ok(report)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn find(runs: &[Run], kind: ElementKind) -> Option<&Run> {
    runs.iter().find(|r| r.kind == kind)
}

/// Largest relative deviation of the nonzero analytic components and largest
/// absolute value of the zero ones, over all elements.
fn homogeneity(stress: &[[f64; 6]], analytic: &[f64; 6]) -> (f64, f64) {
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for s in stress {
        for c in 0..6 {
            if analytic[c] == 0.0 {
                worst_abs = worst_abs.max(s[c].abs());
            } else {
                worst_rel = worst_rel.max(rel(s[c], analytic[c]));
            }
        }
    }
    (worst_rel, worst_abs)
}

fn fmt_row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

fn membrane_elastic_checks(report: &mut Report, runs: &[Run]) {
    for kind in [ElementKind::Q1STcPlus, ElementKind::Q1] {
        let Some(run) = find(runs, kind) else { continue };
        let (worst_rel, worst_abs) = homogeneity(&run.record.last().center_stress, &MEMBRANE_ANALYTIC);
        report.checks.push(Check::required(
            format!("{} reproduces the homogeneous membrane stress", kind.label()),
            worst_rel <= 1e-3 && worst_abs < 1e-3,
            format!(
                "max relative deviation {:.2e} (limit 1e-3), max |zero component| {:.2e} N/mm² (limit 1e-3); analytic St. Venant-Kirchhoff solution",
                worst_rel, worst_abs
            ),
        ));
    }
    if let Some(run) = find(runs, ElementKind::Q1STcPlus) {
        report.checks.push(Check::required(
            "Q1STc+ membrane runtime",
            run.summary.elapsed_s < 1.0,
            format!("{:.3} s (limit 1 s)", run.summary.elapsed_s),
        ));
    }
    if let Some(run) = find(runs, ElementKind::Q1STc) {
        let sxx: Vec<f64> = run.record.last().center_stress.iter().map(|s| s[0]).collect();
        let dev: Vec<f64> = sxx.iter().map(|&s| rel(s, MEMBRANE_ANALYTIC[0])).collect();
        let in_band = dev.iter().all(|&d| (0.0009..=0.033).contains(&d));
        report.checks.push(Check::required(
            "Q1STc membrane Sxx deviations in the published error band",
            in_band,
            format!("per-element deviations [{}]% (band 0.09%..3.3%)", fmt_row(&dev.iter().map(|d| 100.0 * d).collect::<Vec<_>>())),
        ));
        let a = MEMBRANE_ANALYTIC[0];
        let pattern = sxx.len() == 5 && sxx[3] > a && sxx[2] < a && sxx[4] < a;
        report.checks.push(Check::required(
            "Q1STc membrane sign pattern",
            pattern,
            format!("Sxx per element [{}]; element IV must lie above and III, V below {a}", fmt_row(&sxx)),
        ));
        let worst = sxx.iter().zip(&MEMBRANE_Q1STC).map(|(s, t)| rel(*s, t[0])).fold(0.0, f64::max);
        report.checks.push(Check::info(
            "Q1STc membrane Sxx against the published per-element values",
            worst < 1e-3,
            format!("max relative difference {:.2e} against the published Q1STc table", worst),
        ));
    }
}

/// Relative pointwise agreement with a reference trace at the trace's own abscissae.
fn trace_deviation(curve: &[CurveRow], trace: &reference::Trace) -> (f64, f64) {
    let ours = reference::Trace {
        label: String::new(),
        u: curve.iter().map(|r| r.u).collect(),
        normalized: curve.iter().map(|r| r.normalized).collect(),
    };
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for (&u, &f) in trace.u.iter().zip(&trace.normalized) {
        let d = (ours.at(u) - f).abs() / f.abs().max(1e-12);
        if f.abs() > 1e-9 && d > worst {
            worst = d;
            at = u;
        }
    }
    (worst, at)
}

fn membrane_plastic_checks(report: &mut Report, runs: &[Run]) {
    for (kind, tol) in [(ElementKind::Q1STcPlus, 0.02), (ElementKind::Q1STc, 0.05)] {
        let Some(run) = find(runs, kind) else { continue };
        let trace = reference::membrane_plastic_trace(kind.label()).expect("embedded trace");
        let (worst, at) = trace_deviation(&run.summary.curve, &trace);
        report.checks.push(Check::required(
            format!("{} plastic membrane curve follows the reference trace", kind.label()),
            worst <= tol,
            format!("max relative deviation {:.3}% at u = {at:.5} (limit {}%) over {} trace points", 100.0 * worst, 100.0 * tol, trace.u.len()),
        ));
    }
    if let Some(run) = find(runs, ElementKind::Q1STc) {
        let past: Vec<&CurveRow> = run.summary.curve.iter().filter(|r| r.u >= 0.0006 - 1e-12).collect();
        let lowest = past.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
        report.checks.push(Check::required(
            "Q1STc plastic membrane overshoot",
            !past.is_empty() && lowest >= 1.29,
            format!("min F/F0 for u >= 0.0006 is {lowest:.4} (required >= 1.29)"),
        ));
    }
    if let Some(run) = find(runs, ElementKind::Q1) {
        let trace = reference::membrane_plastic_trace("Q1").expect("embedded trace");
        let (worst, at) = trace_deviation(&run.summary.curve, &trace);
        report.checks.push(Check::info(
            "Q1 plastic membrane curve against the reference trace",
            worst <= 0.02,
            format!("max relative deviation {:.3}% at u = {at:.5}", 100.0 * worst),
        ));
    }
}

fn solid_checks(report: &mut Report, runs: &[Run]) {
    if let Some(run) = find(runs, ElementKind::Q1) {
        let (worst, _) = homogeneity(&run.record.last().center_stress, &SOLID_ANALYTIC);
        report.checks.push(Check::required(
            "Q1 passes the solid patch test",
            worst <= 1e-3,
            format!("max relative deviation {worst:.2e} from the analytic stress (limit 1e-3)"),
        ));
    }
    for (kind, table) in [(ElementKind::Q1STc, &SOLID_Q1STC), (ElementKind::Q1STcPlus, &SOLID_Q1STC_PLUS)] {
        let Some(run) = find(runs, kind) else { continue };
        let stress = &run.record.last().center_stress;
        let (worst, _) = homogeneity(stress, &SOLID_ANALYTIC);
        report.checks.push(Check::required(
            format!("{} fails the solid patch test", kind.label()),
            worst > 0.01,
            format!("max relative deviation {:.2}% from the analytic stress (must exceed 1%)", 100.0 * worst),
        ));
        let mut agree = 0;
        let mut counted = 0;
        let mut digits: f64 = 0.0;
        for (s, t) in stress.iter().zip(table.iter()) {
            for c in 0..6 {
                digits = digits.max(rel(s[c], t[c]));
                if rel(t[c], SOLID_ANALYTIC[c]) > 1e-3 {
                    counted += 1;
                    if (s[c] - SOLID_ANALYTIC[c]).signum() == (t[c] - SOLID_ANALYTIC[c]).signum() {
                        agree += 1;
                    }
                }
            }
        }
        report.checks.push(Check::required(
            format!("{} solid patch error pattern", kind.label()),
            stress.len() == 7 && agree == counted,
            format!("{agree}/{counted} deviations share the sign of the published table"),
        ));
        report.checks.push(Check::info(
            format!("{} solid patch stresses against the published table", kind.label()),
            digits < 1e-3,
            format!("max relative difference {digits:.2e}"),
        ));
        if kind == ElementKind::Q1STcPlus {
            let errs: Vec<f64> =
                stress.iter().flat_map(|s| (0..6).map(move |c| rel(s[c], SOLID_ANALYTIC[c]))).collect();
            let lo = errs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = errs.iter().copied().fold(0.0, f64::max);
            report.checks.push(Check::required(
                "Q1STc+ solid patch errors in the published band",
                lo >= 4e-4 && hi <= 0.145,
                format!("component errors {:.3}%..{:.2}% (band 0.04%..14.5%)", 100.0 * lo, 100.0 * hi),
            ));
        }
    }
}

fn cube_checks(report: &mut Report, runs: &[Run], elements: usize) {
    let tracked = |k| find(runs, k).map(|r| r.summary.curve.last().map_or(0.0, |c| c.u.abs()));
    let plus = tracked(ElementKind::Q1STcPlus);
    let q1 = tracked(ElementKind::Q1);
    let lookup = |table: &[(usize, f64)]| table.iter().find(|(n, _)| *n == elements).map(|(_, v)| *v);
    if let (Some(u), Some(r)) = (plus, lookup(&reference::CUBE_Q1STC_PLUS)) {
        report.checks.push(Check::required(
            "Q1STc+ cube displacement",
            rel(u, r) <= 0.01,
            format!("|u_y| = {u:.5} vs {r:.5} ({:.3}%, limit 1%)", 100.0 * rel(u, r)),
        ));
    }
    if let (Some(u), Some(r)) = (q1, lookup(&reference::CUBE_Q1)) {
        report.checks.push(Check::required(
            "Q1 cube displacement",
            rel(u, r) <= 0.03,
            format!("|u_y| = {u:.5} vs {r:.5} ({:.3}%, limit 3%)", 100.0 * rel(u, r)),
        ));
    }
    if let Some(u) = q1 {
        report.checks.push(Check::required("Q1 cube locking bound", u <= 0.45, format!("|u_y| = {u:.5} (limit 0.45)")));
    }
    if let (Some(a), Some(b)) = (q1, plus) {
        report.checks.push(Check::required("Q1 locks relative to Q1STc+", a < b, format!("Q1 {a:.5} < Q1STc+ {b:.5}")));
    }
}

/// Largest `|F_a − F_b|` over the common steps, relative to `max |F_b|`.
pub fn max_relative_deviation(a: &[CurveRow], b: &[CurveRow]) -> f64 {
    let scale = b.iter().map(|r| r.force.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x.force - y.force).abs()).fold(0.0, f64::max) / scale
}

/// Notched-specimen curves for every `(kind, distortion)` pair.
///
/// All kinds of one distortion level share the same distorted mesh. Each
/// curve is compared against the same kind's undistorted curve, and the
/// undistorted kinds against each other.
pub fn compare_distortion_sensitivity(
    base: &NotchedOptions,
    kinds: &[ElementKind],
    distortions: &[f64],
    opts: &RunOptions,
) -> Result<Report> {
    let mut levels: Vec<f64> = distortions.to_vec();
    if !levels.contains(&0.0) {
        levels.insert(0, 0.0);
    }
    let reference_mesh = build_notched_specimen(base.preset);
    let mut setups = Vec::new();
    for &d in &levels {
        let o = NotchedOptions { d_xy: d, ..base.clone() };
        setups.push(cases::notched_on(distort(&reference_mesh, &o.distortion())?, &o)?);
    }
    let mut jobs = Vec::new();
    for (setup, &d) in setups.iter().zip(&levels) {
        for &k in kinds {
            jobs.push((setup, k, format!("{} d={d}", k.label())));
        }
    }
    let runs = execute_all(&jobs, opts.parallel)?;

    let mut report = Report::new("notched-distortion");
    report.runs = runs.iter().map(|r| r.summary.clone()).collect();
    let dev = |kind: ElementKind, d: f64| -> Option<f64> {
        let i = levels.iter().position(|&x| x == d)?;
        let k = kinds.iter().position(|&x| x == kind)?;
        let z = kinds.len() * levels.iter().position(|&x| x == 0.0)? + k;
        Some(max_relative_deviation(&runs[kinds.len() * i + k].summary.curve, &runs[z].summary.curve))
    };
    for &k in kinds {
        for &d in levels.iter().filter(|&&d| d != 0.0) {
            report.deviations.push(Deviation {
                run: format!("{} d={d}", k.label()),
                baseline: format!("{} d=0", k.label()),
                max_relative: dev(k, d).expect("run present"),
            });
        }
    }
    if let Some(x) = dev(ElementKind::Q1STcPlus, 0.2) {
        report.checks.push(Check::required(
            "Q1STc+ insensitive to d=0.2",
            x < 0.01,
            format!("max relative deviation from d=0 is {:.3}% (limit 1%)", 100.0 * x),
        ));
    }
    if let (Some(a), Some(b)) = (dev(ElementKind::Q1STc, 0.5), dev(ElementKind::Q1STcPlus, 0.5)) {
        report.checks.push(Check::required(
            "Q1STc more distortion sensitive than Q1STc+ at d=0.5",
            a > b,
            format!("Q1STc {:.3}% vs Q1STc+ {:.3}%", 100.0 * a, 100.0 * b),
        ));
    }
    let z = levels.iter().position(|&x| x == 0.0).expect("d=0 level") * kinds.len();
    if let (Some(a), Some(b)) =
        (kinds.iter().position(|&k| k == ElementKind::Q1STc), kinds.iter().position(|&k| k == ElementKind::Q1STcPlus))
    {
        let x = max_relative_deviation(&runs[z + a].summary.curve, &runs[z + b].summary.curve);
        report.deviations.push(Deviation { run: "Q1STc d=0".into(), baseline: "Q1STc+ d=0".into(), max_relative: x });
        report.checks.push(Check::required(
            "Q1STc and Q1STc+ agree on the undistorted mesh",
            x <= NOTCHED_KIND_AGREEMENT,
            format!("max relative deviation {:.3}% (limit {}%)", 100.0 * x, 100.0 * NOTCHED_KIND_AGREEMENT),
        ));
    }
    equilibrium_checks(&mut report);
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir)?;
        let mut csvs = Vec::new();
        for (i, run) in runs.iter().enumerate() {
            let setup = jobs[i].0;
            let stem = format!("notched_{}_d{}", kind_slug(run.kind), setup.name.trim_start_matches("notched-d="));
            csvs.extend(write_run(dir, &stem, setup, run, true, &mut report.artifacts)?);
        }
        write_gnuplot(dir, "notched", &csvs, "u_y [mm]", "F [N]", "F", None, &mut report.artifacts)?;
        write_report(dir, &mut report)?;
    }
    Ok(report)
}

/// Runs a TOML case file.
pub fn run_case_file(case: &CaseFile, out: Option<&Path>) -> Result<Report> {
    let kind = case.kind()?;
    let mesh = case.build_mesh()?;
    let o = &case.output;
    let track = o.track_node.map(|n| 3 * n + o.track_component);
    if let Some(d) = track {
        if d >= 3 * mesh.nodes.len() || o.track_component > 2 {
            return Err(FemError::BadInput("tracked node or component out of range".into()));
        }
    }
    let name = if case.name.is_empty() { "case".to_string() } else { case.name.clone() };
    let setup = Setup {
        name: name.clone(),
        mesh,
        bcs: case.boundary.clone(),
        model: case.material.model()?,
        config: case.newton.clone(),
        track,
        reaction: o.reaction_set.clone().map(|s| (s, o.reaction_component)),
        f0: o.f0.unwrap_or(1.0),
    };
    let run = execute(&setup, kind, kind.label())?;
    let mut report = Report::new(name.clone());
    report.runs.push(run.summary.clone());
    equilibrium_checks(&mut report);
    let dir = out.map(Path::to_path_buf).or_else(|| o.dir.as_ref().map(|d| case.base_dir.join(d)));
    if let Some(dir) = dir {
        std::fs::create_dir_all(&dir)?;
        let stem = format!("{}_{}", name, kind_slug(kind));
        if let Some(csv) = write_run(&dir, &stem, &setup, &run, o.vtk, &mut report.artifacts)? {
            write_gnuplot(&dir, &name, &[csv], "u", "F/F0", "F_over_F0", None, &mut report.artifacts)?;
        }
        write_report(&dir, &mut report)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Artifacts

/// Writes the curve CSV (if any) and optionally a VTK snapshot of the last step.
/// Returns `(label, csv path)` of the curve.
fn write_run(
    dir: &Path,
    stem: &str,
    setup: &Setup,
    run: &Run,
    vtk: bool,
    artifacts: &mut Vec<PathBuf>,
) -> Result<Option<(String, PathBuf)>> {
    if vtk {
        write_snapshot(dir, stem, setup, run, artifacts)?;
    }
    if run.summary.curve.is_empty() {
        return Ok(None);
    }
    let csv = dir.join(format!("{stem}.csv"));
    mesh::write_csv(&run.summary.curve, &csv)?;
    artifacts.push(csv.clone());
    Ok(Some((run.summary.label.clone(), csv)))
}

/// VTK file of the last step: displacements, accumulated plastic strain and center stresses.
fn write_snapshot(dir: &Path, stem: &str, setup: &Setup, run: &Run, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    let last = run.record.last();
    let u: Vec<[f64; 3]> = last.u.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let kappa: Vec<f64> = last.states.iter().map(|s| s.kappa_acc()).collect();
    let names = ["S_xx", "S_yy", "S_zz", "S_xy", "S_xz", "S_yz"];
    let comps: Vec<Vec<f64>> = (0..6).map(|c| last.center_stress.iter().map(|s| s[c]).collect()).collect();
    let mut cells = vec![Field::Scalar("kappa_acc", &kappa)];
    for (n, v) in names.iter().zip(&comps) {
        cells.push(Field::Scalar(n, v));
    }
    let vtk = dir.join(format!("{stem}.vtk"));
    mesh::write_vtk(&setup.mesh, &[Field::Vector("u", &u)], &cells, &vtk)?;
    artifacts.push(vtk);
    Ok(())
}

/// Gnuplot script plotting `column` over `u` for each CSV, optionally with a reference table.
#[allow(clippy::too_many_arguments)]
fn write_gnuplot(
    dir: &Path,
    name: &str,
    csvs: &[(String, PathBuf)],
    xlabel: &str,
    ylabel: &str,
    column: &str,
    reference: Option<(&Path, &[&str])>,
    artifacts: &mut Vec<PathBuf>,
) -> Result<()> {
    let file_name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','\nset key autotitle columnhead left top");
    let _ = writeln!(s, "set xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset grid");
    let _ = writeln!(s, "set terminal pngcairo size 900,600\nset output '{name}.png'");
    let mut plots: Vec<String> = csvs
        .iter()
        .map(|(l, p)| format!("'{}' using 'u':'{column}' with linespoints title '{l}'", file_name(p)))
        .collect();
    if let Some((path, cols)) = reference {
        for c in cols {
            plots.push(format!("'{}' using 'u':'{c}' with lines dashtype 2 title 'reference {c}'", file_name(path)));
        }
    }
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    let path = dir.join(format!("{name}.gp"));
    std::fs::write(&path, s)?;
    artifacts.push(path);
    Ok(())
}

fn write_report(dir: &Path, report: &mut Report) -> Result<()> {
    let path = dir.join("report.json");
    report.artifacts.push(path.clone());
    std::fs::write(&path, report.to_json())?;
    Ok(())
}

fn write_artifacts(dir: &Path, report: &mut Report, setup: &Setup, runs: &[Run]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csvs = Vec::new();
    for run in runs {
        let stem = format!("{}_{}", setup.name, kind_slug(run.kind));
        csvs.extend(write_run(dir, &stem, setup, run, true, &mut report.artifacts)?);
    }
    let reference = if setup.name == "membrane-plastic" {
        let path = dir.join("membrane-plastic_reference.csv");
        std::fs::write(&path, include_str!("../data/membrane_plastic.csv"))?;
        report.artifacts.push(path.clone());
        Some(path)
    } else {
        None
    };
    if !csvs.is_empty() {
        let (xl, yl, col) = if setup.f0 != 1.0 { ("u_x [mm]", "F/F0", "F_over_F0") } else { ("u [mm]", "F [N]", "F") };
        let cols = ["Q1STc", "Q1STc+", "U-P-SBFEM", "Q1"];
        write_gnuplot(dir, &setup.name, &csvs, xl, yl, col, reference.as_deref().map(|p| (p, &cols[..])), &mut report.artifacts)?;
    }
    write_report(dir, report)
}
