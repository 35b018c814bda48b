//! Problem definitions of the built-in benchmarks.

use hexfem::material::{ElasticParams, MaterialModel, PlasticParams};
use hexfem::mesh::{build_block, build_membrane_patch, build_notched_specimen, build_solid_patch, distort};
use hexfem::mesh::{DistortionSpec, Mesh, NotchedPreset};
use hexfem::solver::{BoundarySpec, NewtonConfig, Prescribed};
use hexfem::Result;
use serde::Serialize;

/// A fully specified boundary value problem plus what to record from it.
#[derive(Clone, Debug)]
pub struct Setup {
    pub name: String,
    pub mesh: Mesh,
    pub bcs: BoundarySpec,
    pub model: MaterialModel,
    pub config: NewtonConfig,
    /// Global DOF whose displacement is the curve abscissa; the load factor when absent.
    pub track: Option<usize>,
    /// Node set and component whose reaction sum is the curve ordinate.
    pub reaction: Option<(String, usize)>,
    /// Force normalization of the curve.
    pub f0: f64,
}

/// Newton settings of the benchmark runs.
///
/// The residual tolerance sits two orders below the equilibrium check so the
/// global force balance of every converged step has margin.
pub fn newton(steps: usize) -> NewtonConfig {
    NewtonConfig { tol: BENCH_TOL, steps, ..Default::default() }
}

pub const BENCH_TOL: f64 = 1e-10;

/// Membrane patch displacement field `u = G x` scaled by `s`.
fn membrane_field(s: f64) -> Prescribed {
    Prescribed::Field { gradient: [[1e-3 * s, 0.5e-3 * s, 0.0], [0.5e-3 * s, 1e-3 * s, 0.0], [0.0; 3]], offset: [0.0; 3] }
}

fn membrane_bcs() -> BoundarySpec {
    BoundarySpec::default().prescribe("outer", &[0, 1], membrane_field(1.0)).fix("bottom_layer", &[2])
}

/// Node whose `u_x` is the abscissa of the membrane curves (top-right corner, bottom layer).
pub const MEMBRANE_TRACK_NODE: usize = 6;

pub fn membrane_elastic() -> Setup {
    Setup {
        name: "membrane-elastic".into(),
        mesh: build_membrane_patch(),
        bcs: membrane_bcs(),
        model: MaterialModel::StVenantKirchhoff(ElasticParams { lambda: 400000.0, mu: 400000.0 }),
        config: newton(1),
        track: Some(3 * MEMBRANE_TRACK_NODE),
        reaction: Some(("right".into(), 0)),
        f0: 1.0,
    }
}

pub const MEMBRANE_PLASTIC_PARAMS: PlasticParams = PlasticParams { a: 62.5, b: 2.5, e: 125.0, f: 6.0, sigma_y0: 300.0 };

/// Elasto-plastic membrane patch driven to 9.8 times the elastic field in 49 steps.
pub fn membrane_plastic() -> Setup {
    Setup {
        name: "membrane-plastic".into(),
        mesh: build_membrane_patch(),
        bcs: membrane_bcs(),
        model: MaterialModel::ElastoPlastic(ElasticParams { lambda: 25000.0, mu: 55000.0 }, MEMBRANE_PLASTIC_PARAMS),
        config: NewtonConfig { load_factors: (1..=49).map(|k| 0.2 * k as f64).collect(), ..newton(1) },
        track: Some(3 * MEMBRANE_TRACK_NODE),
        reaction: Some(("right".into(), 0)),
        f0: crate::reference::MEMBRANE_F0,
    }
}

pub fn solid_patch() -> Setup {
    let g = [[1e-3, 0.5e-3, 0.5e-3], [0.5e-3, 1e-3, 0.5e-3], [0.5e-3, 0.5e-3, 1e-3]];
    Setup {
        name: "solid-patch".into(),
        mesh: build_solid_patch(),
        bcs: BoundarySpec::default().prescribe("outer", &[0, 1, 2], Prescribed::Field { gradient: g, offset: [0.0; 3] }),
        model: MaterialModel::StVenantKirchhoff(ElasticParams { lambda: 400000.0, mu: 400000.0 }),
        config: newton(1),
        track: None,
        reaction: None,
        f0: 1.0,
    }
}

/// Dead pressure on the loaded quarter of the top face (N/mm²).
pub const CUBE_PRESSURE: f64 = 200.0;

/// Unit cube, `n³` elements, pressure on `x, z ≤ 0.5` of `y = 1`.
///
/// Symmetry planes `x = 0` and `z = 0`, the bottom slides on `y = 0` and the
/// top face is held in `x` and `z`. The tracked node is `(0, 1, 0)`.
pub fn cube(n: usize) -> Result<Setup> {
    let mut mesh = build_block(n, n, n, [1.0; 3], [0.0; 3])?;
    let tol = 1e-9;
    mesh.add_face_set("load", |p| (p[1] - 1.0).abs() < tol && p[0] <= 0.5 + tol && p[2] <= 0.5 + tol);
    let marked = mesh.nodes.iter().position(|p| p[0] == 0.0 && p[1] == 1.0 && p[2] == 0.0).expect("corner node");
    Ok(Setup {
        name: format!("cube-{}", n * n * n),
        mesh,
        bcs: BoundarySpec::default()
            .fix("x0", &[0])
            .fix("z0", &[2])
            .fix("y0", &[1])
            .fix("y1", &[0, 2])
            .pressure("load", CUBE_PRESSURE),
        model: MaterialModel::NeoHooke(ElasticParams { lambda: 40016.806, mu: 80.194 }),
        config: newton(10),
        track: Some(3 * marked + 1),
        reaction: Some(("y0".into(), 1)),
        f0: 1.0,
    })
}

/// Elements per side of a cube with `nel` elements, if `nel` is a cube number.
pub fn cube_side(nel: usize) -> Option<usize> {
    let n = (nel as f64).cbrt().round() as usize;
    (n >= 1 && n * n * n == nel).then_some(n)
}

/// Notched specimen run parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotchedOptions {
    pub preset: NotchedPreset,
    pub d_xy: f64,
    pub d_z: f64,
    pub seed: u64,
    pub steps: usize,
    /// Final top displacement (mm).
    pub u_max: f64,
}

impl Default for NotchedOptions {
    fn default() -> Self {
        NotchedOptions { preset: NotchedPreset::Coarse, d_xy: 0.0, d_z: 0.0, seed: 7, steps: 15, u_max: 0.3 }
    }
}

pub const NOTCHED_PLASTIC_PARAMS: PlasticParams = PlasticParams { a: 62.5, b: 2.5, e: 125.0, f: 5.0, sigma_y0: 100.0 };

impl NotchedOptions {
    pub fn distortion(&self) -> DistortionSpec {
        DistortionSpec { d_xy: self.d_xy, d_z: self.d_z, seed: self.seed, protected: vec!["notch".into()] }
    }

    pub fn label(&self) -> String {
        format!("d={}", self.d_xy)
            + &(if self.d_z > 0.0 { format!(",dz={}", self.d_z) } else { String::new() })
    }
}

/// Notched specimen on a given (possibly distorted) mesh: bottom clamped, top pulled in `y`.
pub fn notched_on(mesh: Mesh, opts: &NotchedOptions) -> Result<Setup> {
    let top = *mesh.node_set("top")?.first().expect("top nodes");
    Ok(Setup {
        name: format!("notched-{}", opts.label()),
        mesh,
        bcs: BoundarySpec::default()
            .fix("bottom", &[0, 1, 2])
            .fix("top", &[0, 2])
            .prescribe("top", &[1], Prescribed::Value(opts.u_max)),
        model: MaterialModel::ElastoPlastic(ElasticParams { lambda: 25000.0, mu: 55000.0 }, NOTCHED_PLASTIC_PARAMS),
        config: newton(opts.steps),
        track: Some(3 * top + 1),
        reaction: Some(("top".into(), 1)),
        f0: 1.0,
    })
}

pub fn notched(opts: &NotchedOptions) -> Result<Setup> {
    let mesh = distort(&build_notched_specimen(opts.preset), &opts.distortion())?;
    notched_on(mesh, opts)
}
