//! TOML case files.
//!
//! ```toml
//! name = "cube"
//! element = "Q1STc+"
//!
//! [mesh]
//! builder = "block"          # block | membrane | solid-patch | notched | file
//! n = [8, 8, 8]
//! lengths = [1.0, 1.0, 1.0]
//!
//! [[sets]]                    # extra sets selected by bounding box
//! kind = "face"
//! name = "load"
//! min = [0.0, 1.0, 0.0]
//! max = [0.5, 1.0, 0.5]
//!
//! [material]
//! model = "neo-hooke"        # stvk | neo-hooke | elasto-plastic
//! lambda = 40016.806
//! mu = 80.194
//!
//! [[boundary.dirichlet]]
//! set = "y0"
//! components = [1]
//! value = 0.0
//!
//! [[boundary.pressures]]
//! set = "load"
//! magnitude = 100.0
//!
//! [newton]
//! steps = 10
//!
//! [output]
//! dir = "out/cube"
//! track_node = 0
//! track_component = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BoundarySpec, NewtonConfig};
use crate::element::ElementKind;
use crate::error::{FemError, Result};
use crate::material::{ElasticParams, MaterialModel, PlasticParams};
use crate::mesh::{self, DistortionSpec, Mesh, NotchedPreset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSpec {
    Block {
        n: [usize; 3],
        lengths: [f64; 3],
        #[serde(default)]
        origin: [f64; 3],
    },
    Membrane,
    SolidPatch,
    Notched {
        preset: NotchedPreset,
    },
    /// Mesh file, relative to the case file.
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Node,
    Face,
}

/// Node or boundary-face set of everything inside an axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub kind: SetKind,
    pub name: String,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoxSet {
    pub fn apply(&self, mesh: &mut Mesh) {
        let (lo, hi) = (self.min, self.max);
        let inside = move |p: &[f64; 3]| (0..3).all(|a| p[a] >= lo[a] - 1e-9 && p[a] <= hi[a] + 1e-9);
        match self.kind {
            SetKind::Node => mesh.add_node_set(&self.name, inside),
            SetKind::Face => mesh.add_face_set(&self.name, inside),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MaterialSpec {
    Stvk { lambda: f64, mu: f64 },
    NeoHooke { lambda: f64, mu: f64 },
    ElastoPlastic { lambda: f64, mu: f64, a: f64, b: f64, e: f64, f: f64, sigma_y0: f64 },
}

impl MaterialSpec {
    pub fn model(&self) -> Result<MaterialModel> {
        let m = match *self {
            MaterialSpec::Stvk { lambda, mu } => MaterialModel::StVenantKirchhoff(ElasticParams::new(lambda, mu)?),
            MaterialSpec::NeoHooke { lambda, mu } => MaterialModel::NeoHooke(ElasticParams::new(lambda, mu)?),
            MaterialSpec::ElastoPlastic { lambda, mu, a, b, e, f, sigma_y0 } => {
                MaterialModel::ElastoPlastic(ElasticParams::new(lambda, mu)?, PlasticParams { a, b, e, f, sigma_y0 })
            }
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Node set whose reaction sum forms the force column of the curve.
    pub reaction_set: Option<String>,
    pub reaction_component: usize,
    /// Node whose displacement forms the displacement column of the curve.
    pub track_node: Option<usize>,
    pub track_component: usize,
    /// Force normalization; 1 when absent.
    pub f0: Option<f64>,
    pub vtk: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default)]
    pub name: String,
    pub element: String,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub sets: Vec<BoxSet>,
    pub material: MaterialSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub newton: NewtonConfig,
    pub distortion: Option<DistortionSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory the case was read from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CaseFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FemError::BadInput(format!("case file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut case = Self::parse(&std::fs::read_to_string(path)?)?;
        case.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(case)
    }

    pub fn kind(&self) -> Result<ElementKind> {
        ElementKind::parse(&self.element).ok_or_else(|| FemError::BadInput(format!("unknown element `{}`", self.element)))
    }

    /// Builds the mesh, adds the box sets and applies the distortion.
    pub fn build_mesh(&self) -> Result<Mesh> {
        let mut m = match &self.mesh {
            MeshSpec::Block { n, lengths, origin } => mesh::build_block(n[0], n[1], n[2], *lengths, *origin)?,
            MeshSpec::Membrane => mesh::build_membrane_patch(),
            MeshSpec::SolidPatch => mesh::build_solid_patch(),
            MeshSpec::Notched { preset } => mesh::build_notched_specimen(*preset),
            MeshSpec::File { path } => mesh::read_mesh(&self.base_dir.join(path))?,
        };
        for s in &self.sets {
            s.apply(&mut m);
        }
        if let Some(d) = &self.distortion {
            m = mesh::distort(&m, d)?;
        }
        m.validate()?;
        Ok(m)
    }
}
