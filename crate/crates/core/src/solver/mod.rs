//! Global assembly, boundary conditions and Newton–Raphson load stepping.

pub mod case;
pub mod skyline;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::{element_kernel, ElementKernelOutput, ElementKind, ElementState, FACES};
use crate::error::{FemError, Result};
use crate::material::MaterialModel;
use crate::mesh::Mesh;

pub use skyline::{reverse_cuthill_mckee, SkylineMatrix};

// ---------------------------------------------------------------------------
// Boundary conditions

/// Prescribed displacement of one component at load factor 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prescribed {
    /// The same value for every node of the set.
    Value(f64),
    /// Affine field `u = G X + c`, evaluated at the reference position.
    Field { gradient: [[f64; 3]; 3], offset: [f64; 3] },
}

impl Prescribed {
    pub fn at(&self, x: &[f64; 3], component: usize) -> f64 {
        match self {
            Prescribed::Value(v) => *v,
            Prescribed::Field { gradient, offset } => {
                offset[component] + (0..3).map(|b| gradient[component][b] * x[b]).sum::<f64>()
            }
        }
    }
}

/// Dirichlet entry, ramped linearly with the load factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dirichlet {
    pub set: String,
    pub components: Vec<usize>,
    pub value: Prescribed,
}

/// Dead pressure on the reference faces of a face set; positive pushes inward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pressure {
    pub set: String,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    #[serde(default)]
    pub dirichlet: Vec<Dirichlet>,
    #[serde(default)]
    pub pressures: Vec<Pressure>,
}

impl BoundarySpec {
    /// Fixes components of a node set to zero.
    pub fn fix(mut self, set: &str, components: &[usize]) -> Self {
        self.dirichlet.push(Dirichlet { set: set.into(), components: components.to_vec(), value: Prescribed::Value(0.0) });
        self
    }

    pub fn prescribe(mut self, set: &str, components: &[usize], value: Prescribed) -> Self {
        self.dirichlet.push(Dirichlet { set: set.into(), components: components.to_vec(), value });
        self
    }

    pub fn pressure(mut self, set: &str, magnitude: f64) -> Self {
        self.pressures.push(Pressure { set: set.into(), magnitude });
        self
    }
}

/// Boundary conditions mapped to degrees of freedom at load factor 1.
#[derive(Clone, Debug)]
pub struct ResolvedBoundary {
    /// Global DOF (`3 node + component`) to prescribed value.
    pub constrained: BTreeMap<usize, f64>,
    /// External nodal forces, full length.
    pub f_ext: Vec<f64>,
}

pub fn resolve_boundary(mesh: &Mesh, bcs: &BoundarySpec) -> Result<ResolvedBoundary> {
    let mut constrained = BTreeMap::new();
    for d in &bcs.dirichlet {
        for &n in mesh.node_set(&d.set)? {
            for &c in &d.components {
                if c > 2 {
                    return Err(FemError::BadInput(format!("component {c} out of range")));
                }
                let v = d.value.at(&mesh.nodes[n], c);
                if let Some(old) = constrained.insert(3 * n + c, v) {
                    if (old - v).abs() > 1e-12 * (1.0 + old.abs().max(v.abs())) {
                        return Err(FemError::BadInput(format!(
                            "node {n} component {c} constrained to both {old} and {v}"
                        )));
                    }
                }
            }
        }
    }
    let mut f_ext = vec![0.0; 3 * mesh.nodes.len()];
    for p in &bcs.pressures {
        for &(e, f) in mesh.face_set(&p.set)? {
            let nodes = FACES[f].map(|i| mesh.hexes[e][i]);
            for (a, force) in face_pressure_forces(mesh, e, f, p.magnitude).iter().enumerate() {
                for c in 0..3 {
                    f_ext[3 * nodes[a] + c] += force[c];
                }
            }
        }
    }
    Ok(ResolvedBoundary { constrained, f_ext })
}

/// Consistent nodal forces `−p ∫ N_a n dA` of a bilinear face (2×2 Gauss).
pub fn face_pressure_forces(mesh: &Mesh, e: usize, f: usize, p: f64) -> [[f64; 3]; 4] {
    let x = FACES[f].map(|i| mesh.nodes[mesh.hexes[e][i]]);
    let corner = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    let g = 1.0 / 3f64.sqrt();
    let mut out = [[0.0; 3]; 4];
    for s in [-g, g] {
        for t in [-g, g] {
            let n: [f64; 4] = std::array::from_fn(|a| 0.25 * (1.0 + corner[a][0] * s) * (1.0 + corner[a][1] * t));
            let mut xs = [0.0; 3];
            let mut xt = [0.0; 3];
            for a in 0..4 {
                for c in 0..3 {
                    xs[c] += 0.25 * corner[a][0] * (1.0 + corner[a][1] * t) * x[a][c];
                    xt[c] += 0.25 * corner[a][1] * (1.0 + corner[a][0] * s) * x[a][c];
                }
            }
            let nda = [xs[1] * xt[2] - xs[2] * xt[1], xs[2] * xt[0] - xs[0] * xt[2], xs[0] * xt[1] - xs[1] * xt[0]];
            for a in 0..4 {
                for c in 0..3 {
                    out[a][c] -= p * n[a] * nda[c];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// DOF numbering and assembly

/// Equation numbers of the free DOFs, ordered node-wise by reverse Cuthill–McKee.
#[derive(Clone, Debug)]
pub struct DofMap {
    /// `eq[3 node + c]` is the equation of a free DOF.
    pub eq: Vec<Option<usize>>,
    pub n_free: usize,
    first: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, constrained: &BTreeMap<usize, f64>) -> Self {
        let n = mesh.nodes.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for h in &mesh.hexes {
            for &a in h {
                for &b in h {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let order = reverse_cuthill_mckee(&adj);
        let mut eq = vec![None; 3 * n];
        let mut next = 0;
        for &node in &order {
            for c in 0..3 {
                if !constrained.contains_key(&(3 * node + c)) {
                    eq[3 * node + c] = Some(next);
                    next += 1;
                }
            }
        }
        let mut first: Vec<usize> = (0..next).collect();
        for h in &mesh.hexes {
            let eqs: Vec<usize> = h.iter().flat_map(|&nd| (0..3).map(move |c| 3 * nd + c)).filter_map(|d| eq[d]).collect();
            if let Some(&lo) = eqs.iter().min() {
                for &q in &eqs {
                    first[q] = first[q].min(lo);
                }
            }
        }
        DofMap { eq, n_free: next, first }
    }

    pub fn empty_matrix(&self) -> SkylineMatrix {
        SkylineMatrix::new(self.first.clone())
    }
}

/// Result of one global assembly.
#[derive(Clone, Debug)]
pub struct Assembly {
    /// Internal minus external forces over all DOFs.
    pub residual: Vec<f64>,
    /// Internal nodal forces over all DOFs.
    pub f_int: Vec<f64>,
    /// Free–free block of the tangent.
    pub matrix: SkylineMatrix,
    /// Free–constrained block as `(free equation, global DOF, value)`.
    pub coupling: Vec<(usize, usize, f64)>,
    pub outputs: Vec<ElementKernelOutput>,
}

/// Evaluates every element (in parallel) and scatters in element order.
#[allow(clippy::too_many_arguments)]
pub fn assemble(
    mesh: &Mesh,
    kind: ElementKind,
    model: &MaterialModel,
    states: &[ElementState],
    u: &[f64],
    f_ext: &[f64],
    dofs: &DofMap,
) -> Result<Assembly> {
    if u.len() != 3 * mesh.nodes.len() || states.len() != mesh.hexes.len() {
        return Err(FemError::BadInput("displacement or state vector has the wrong size".into()));
    }
    let outputs: Vec<ElementKernelOutput> = (0..mesh.hexes.len())
        .into_par_iter()
        .map(|e| {
            let h = &mesh.hexes[e];
            let x = mesh.element_nodes(e);
            let ue: [f64; 24] = std::array::from_fn(|k| u[3 * h[k / 3] + k % 3]);
            element_kernel(kind, &x, &ue, &states[e], model)
                .map_err(|err| FemError::InElement { element: e, source: Box::new(err) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut f_int = vec![0.0; u.len()];
    let mut matrix = dofs.empty_matrix();
    let mut coupling = Vec::new();
    for (e, out) in outputs.iter().enumerate() {
        let h = &mesh.hexes[e];
        let gdof: [usize; 24] = std::array::from_fn(|k| 3 * h[k / 3] + k % 3);
        for a in 0..24 {
            f_int[gdof[a]] += out.residual[a];
            let Some(ra) = dofs.eq[gdof[a]] else { continue };
            for b in 0..24 {
                let v = out.stiffness[(a, b)];
                match dofs.eq[gdof[b]] {
                    Some(rb) => matrix.add(ra, rb, v),
                    None => coupling.push((ra, gdof[b], v)),
                }
            }
        }
    }
    let residual = f_int.iter().zip(f_ext).map(|(a, b)| a - b).collect();
    Ok(Assembly { residual, f_int, matrix, coupling, outputs })
}

// ---------------------------------------------------------------------------
// Newton–Raphson load stepping

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Equal load increments up to factor 1 when `load_factors` is empty.
    pub steps: usize,
    /// Explicit increasing load factors; overrides `steps`.
    pub load_factors: Vec<f64>,
    /// Maximum number of step halvings before giving up.
    pub max_cutbacks: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: 1e-8, max_iter: 25, steps: 1, load_factors: Vec::new(), max_cutbacks: 4 }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || (self.steps == 0 && self.load_factors.is_empty()) {
            return Err(FemError::BadInput("Newton tolerance, iterations and steps must be positive".into()));
        }
        if self.load_factors.windows(2).any(|w| !(w[1] > w[0])) || self.load_factors.iter().any(|&l| !(l > 0.0)) {
            return Err(FemError::BadInput("load factors must be positive and increasing".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<f64> {
        if self.load_factors.is_empty() {
            (1..=self.steps).map(|i| i as f64 / self.steps as f64).collect()
        } else {
            self.load_factors.clone()
        }
    }
}

/// Converged state at one scheduled load factor.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub load_factor: f64,
    pub u: Vec<f64>,
    /// `f_int − f_ext` over all DOFs; nonzero only at constrained DOFs up to the tolerance.
    pub reaction: Vec<f64>,
    /// Sum of the applied external forces.
    pub applied: [f64; 3],
    pub states: Vec<ElementState>,
    pub center_stress: Vec<[f64; 6]>,
    pub center_strain: Vec<[f64; 6]>,
    /// Newton iterations of the last sub-step.
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub reference_norm: f64,
    pub cutbacks: usize,
    /// Load factors of the accepted sub-steps since the previous record, ending at `load_factor`.
    pub substeps: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SolutionRecord {
    pub kind: ElementKind,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub steps: Vec<StepRecord>,
}

impl SolutionRecord {
    pub fn last(&self) -> &StepRecord {
        self.steps.last().expect("solution without steps")
    }
}

/// Per-step sums of `f_int − f_ext` over a node set, per component.
pub fn reactions(record: &SolutionRecord, node_set: &str) -> Result<Vec<[f64; 3]>> {
    let set = record.node_sets.get(node_set).ok_or_else(|| FemError::UnknownNodeSet(node_set.into()))?;
    Ok(record
        .steps
        .iter()
        .map(|s| {
            let mut r = [0.0; 3];
            for &n in set {
                for c in 0..3 {
                    r[c] += s.reaction[3 * n + c];
                }
            }
            r
        })
        .collect())
}

/// Sum over every constrained DOF, per component.
pub fn total_reaction(step: &StepRecord, constrained: &BTreeMap<usize, f64>) -> [f64; 3] {
    let mut r = [0.0; 3];
    for &d in constrained.keys() {
        r[d % 3] += step.reaction[d];
    }
    r
}

/// A complete boundary value problem.
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    pub mesh: &'a Mesh,
    pub kind: ElementKind,
    pub model: MaterialModel,
    pub bcs: &'a BoundarySpec,
}

struct Trial {
    u: Vec<f64>,
    asm: Assembly,
    iterations: usize,
    history: Vec<f64>,
    reference: f64,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the problem over the load schedule of `config`.
///
/// Each increment starts with a tangent predictor that carries the change of
/// the prescribed displacements, then iterates until the free residual drops
/// below `tol` times the reference norm. Failed increments are halved up to
/// `max_cutbacks` times; histories are committed only after convergence.
pub fn solve_case(problem: &Problem, config: &NewtonConfig) -> Result<SolutionRecord> {
    config.validate()?;
    problem.model.validate()?;
    let mesh = problem.mesh;
    mesh.validate()?;
    let bc = resolve_boundary(mesh, problem.bcs)?;
    let dofs = DofMap::new(mesh, &bc.constrained);
    let ndof = 3 * mesh.nodes.len();

    let mut u = vec![0.0; ndof];
    let mut states: Vec<ElementState> = vec![ElementState::new(problem.kind, &problem.model); mesh.hexes.len()];
    let mut lambda = 0.0;
    let mut record = SolutionRecord { kind: problem.kind, node_sets: mesh.node_sets.clone(), steps: Vec::new() };
    let mut previous: Option<Assembly> = None;

    for target in config.schedule() {
        let mut dl = target - lambda;
        let mut cutbacks = 0;
        let mut substeps = Vec::new();
        loop {
            let next = if lambda + dl >= target - 1e-14 * target.abs() { target } else { lambda + dl };
            match newton_increment(problem, config, &bc, &dofs, &u, &states, lambda, next, previous.as_ref()) {
                Ok(trial) => {
                    u = trial.u;
                    states = trial.asm.outputs.iter().map(|o| o.state.clone()).collect();
                    lambda = next;
                    substeps.push(lambda);
                    let done = lambda == target;
                    if done {
                        let f_ext: Vec<f64> = bc.f_ext.iter().map(|f| f * lambda).collect();
                        let mut applied = [0.0; 3];
                        for (d, f) in f_ext.iter().enumerate() {
                            applied[d % 3] += f;
                        }
                        record.steps.push(StepRecord {
                            load_factor: lambda,
                            reaction: trial.asm.residual.clone(),
                            u: u.clone(),
                            applied,
                            center_stress: trial.asm.outputs.iter().map(|o| o.center_stress).collect(),
                            center_strain: trial.asm.outputs.iter().map(|o| o.center_strain).collect(),
                            states: states.clone(),
                            iterations: trial.iterations,
                            residual_history: trial.history,
                            reference_norm: trial.reference,
                            cutbacks,
                            substeps: std::mem::take(&mut substeps),
                        });
                    }
                    previous = Some(trial.asm);
                    if done {
                        break;
                    }
                }
                Err(err) if err.is_convergence_failure() => {
                    cutbacks += 1;
                    if cutbacks > config.max_cutbacks {
                        return Err(FemError::NoConvergence(format!(
                            "load factor {next:.6} after {} cutbacks (last error: {err})",
                            config.max_cutbacks
                        )));
                    }
                    dl *= 0.5;
                }
                Err(err) => return Err(err),
            }
        }
    }
    Ok(record)
}

#[allow(clippy::too_many_arguments)]
fn newton_increment(
    problem: &Problem,
    config: &NewtonConfig,
    bc: &ResolvedBoundary,
    dofs: &DofMap,
    u_old: &[f64],
    states: &[ElementState],
    lambda_old: f64,
    lambda: f64,
    previous: Option<&Assembly>,
) -> Result<Trial> {
    let f_ext: Vec<f64> = bc.f_ext.iter().map(|f| f * lambda).collect();
    let mut du_c = vec![0.0; u_old.len()];
    for (&d, &v) in &bc.constrained {
        du_c[d] = (lambda - lambda_old) * v;
    }
    let assemble_at =
        |u: &[f64]| assemble(problem.mesh, problem.kind, &problem.model, states, u, &f_ext, dofs);

    // The predictor reuses the tangent of the last converged iteration, which
    // carries the elasto-plastic response; the first increment assembles it.
    let fresh;
    let (mut matrix, coupling, f_int) = match previous {
        Some(p) => (p.matrix.clone(), &p.coupling, &p.f_int),
        None => {
            fresh = assemble_at(u_old)?;
            (fresh.matrix.clone(), &fresh.coupling, &fresh.f_int)
        }
    };
    let mut rhs = vec![0.0; dofs.n_free];
    for (d, q) in dofs.eq.iter().enumerate() {
        if let Some(q) = q {
            rhs[*q] = f_ext[d] - f_int[d];
        }
    }
    for &(q, d, v) in coupling {
        rhs[q] -= v * du_c[d];
    }
    let reference = norm(rhs.iter().copied()).max(norm(dofs.eq.iter().zip(&f_ext).filter(|(q, _)| q.is_some()).map(|(_, f)| *f)));

    let mut u: Vec<f64> = u_old.iter().zip(&du_c).map(|(a, b)| a + b).collect();
    let u_scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-12 * matrix.max_diagonal() * u_scale;

    matrix.factor()?;
    let du = matrix.solve(&rhs);
    apply(&mut u, &du, dofs);
    let mut asm;

    let mut history = Vec::new();
    let mut iterations = 1;
    loop {
        asm = assemble_at(&u)?;
        let g = norm(dofs.eq.iter().zip(&asm.residual).filter(|(q, _)| q.is_some()).map(|(_, r)| *r));
        history.push(g);
        if !g.is_finite() {
            return Err(FemError::NoConvergence(format!("non-finite residual at load factor {lambda}")));
        }
        if g <= (config.tol * reference).max(floor) {
            return Ok(Trial { u, asm, iterations, history, reference });
        }
        if iterations >= config.max_iter {
            return Err(FemError::NoConvergence(format!(
                "{} iterations at load factor {lambda}, residual {g:e} vs reference {reference:e}",
                config.max_iter
            )));
        }
        let mut rhs = vec![0.0; dofs.n_free];
        for (d, q) in dofs.eq.iter().enumerate() {
            if let Some(q) = q {
                rhs[*q] = -asm.residual[d];
            }
        }
        asm.matrix.factor()?;
        let du = asm.matrix.solve(&rhs);
        apply(&mut u, &du, dofs);
        iterations += 1;
    }
}

fn apply(u: &mut [f64], du: &[f64], dofs: &DofMap) {
    for (d, q) in dofs.eq.iter().enumerate() {
        if let Some(q) = q {
            u[d] += du[*q];
        }
    }
}
