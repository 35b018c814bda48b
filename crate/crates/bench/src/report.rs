//! Pass/fail reports.

use std::fmt::Write as _;
use std::path::PathBuf;

use hexfem::mesh::CurveRow;
use serde::Serialize;

/// One comparison against a reference or a structural property.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks are reported but never fail the case.
    pub required: bool,
    pub detail: String,
}

impl Check {
    pub fn required(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, required: true, detail: detail.into() }
    }

    pub fn info(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, required: false, detail: detail.into() }
    }
}

/// Summary of one solver run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub kind: String,
    pub elements: usize,
    pub steps: usize,
    pub newton_iterations: usize,
    pub cutbacks: usize,
    /// Largest `|Σ reactions + Σ applied|` over the steps, relative to the step's force scale.
    pub equilibrium_error: f64,
    pub elapsed_s: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curve: Vec<CurveRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub center_stress: Vec<[f64; 6]>,
}

/// Largest relative curve deviation between two runs of the same case.
#[derive(Clone, Debug, Serialize)]
pub struct Deviation {
    pub run: String,
    pub baseline: String,
    pub max_relative: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub case: String,
    pub runs: Vec<RunSummary>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub deviations: Vec<Deviation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<PathBuf>,
}

impl Report {
    pub fn new(case: impl Into<String>) -> Self {
        Report { case: case.into(), ..Default::default() }
    }

    /// True when every required check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.required)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn run(&self, label: &str) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case {}", self.case);
        for r in &self.runs {
            let _ = writeln!(
                s,
                "  run {:<24} {:>6} elements {:>3} steps {:>4} iterations {:>2} cutbacks  equilibrium {:.1e}  {:.2} s",
                r.label, r.elements, r.steps, r.newton_iterations, r.cutbacks, r.equilibrium_error, r.elapsed_s
            );
        }
        for d in &self.deviations {
            let _ = writeln!(s, "  deviation {} vs {}: {:.3}%", d.run, d.baseline, 100.0 * d.max_relative);
        }
        for c in &self.checks {
            let tag = match (c.passed, c.required) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "note",
            };
            let _ = writeln!(s, "  {tag}  {}: {}", c.name, c.detail);
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "  wrote {}", a.display());
        }
        let _ = writeln!(s, "  result: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}
