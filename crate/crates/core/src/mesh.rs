//! Mesh construction, distortion and export.
//!
//! Hexahedra use the node ordering of [`crate::element::NODE_NATURAL`], which
//! is also the VTK ordering of cell type 12.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::element::{center_jacobian_det, element_volume, min_jacobian_det, Nodes, FACES};
use crate::error::{FemError, Result};

/// Unstructured hexahedral mesh with named node and face sets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 3]>,
    pub hexes: Vec<[usize; 8]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    /// `(element, local face)` pairs; local faces index [`FACES`].
    pub face_sets: BTreeMap<String, Vec<(usize, usize)>>,
}

impl Mesh {
    pub fn element_nodes(&self, e: usize) -> Nodes {
        self.hexes[e].map(|n| self.nodes[n])
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets.get(name).map(|v| v.as_slice()).ok_or_else(|| FemError::UnknownNodeSet(name.into()))
    }

    pub fn face_set(&self, name: &str) -> Result<&[(usize, usize)]> {
        self.face_sets.get(name).map(|v| v.as_slice()).ok_or_else(|| FemError::UnknownFaceSet(name.into()))
    }

    /// Sum of element volumes (2×2×2 quadrature).
    pub fn volume(&self) -> f64 {
        (0..self.hexes.len()).map(|e| element_volume(&self.element_nodes(e))).sum()
    }

    /// Index checks, positive center Jacobians and face conformity.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (e, h) in self.hexes.iter().enumerate() {
            if h.iter().any(|&i| i >= n) {
                return Err(FemError::BadInput(format!("element {e} references a missing node")));
            }
        }
        for (name, set) in &self.node_sets {
            if set.iter().any(|&i| i >= n) {
                return Err(FemError::BadInput(format!("node set `{name}` references a missing node")));
            }
        }
        for (name, set) in &self.face_sets {
            if set.iter().any(|&(e, f)| e >= self.hexes.len() || f >= 6) {
                return Err(FemError::BadInput(format!("face set `{name}` references a missing face")));
            }
        }
        let bad = self.inverted_elements();
        if !bad.is_empty() {
            return Err(FemError::InvertedElement(bad));
        }
        if !self.is_conforming() {
            return Err(FemError::BadInput("non-conforming faces".into()));
        }
        Ok(())
    }

    /// Elements whose Jacobian is not positive at the center or at a Gauss point.
    pub fn inverted_elements(&self) -> Vec<usize> {
        (0..self.hexes.len())
            .filter(|&e| {
                let x = self.element_nodes(e);
                !(center_jacobian_det(&x) > 0.0 && min_jacobian_det(&x) > 0.0)
            })
            .collect()
    }

    /// Every face is shared by at most two elements, with matching node sets.
    pub fn is_conforming(&self) -> bool {
        let mut count: HashMap<[usize; 4], usize> = HashMap::new();
        for h in &self.hexes {
            for f in FACES {
                let mut key = f.map(|i| h[i]);
                key.sort_unstable();
                *count.entry(key).or_default() += 1;
            }
        }
        count.values().all(|&c| c <= 2)
    }

    /// Faces referenced by exactly one element.
    pub fn boundary_faces(&self) -> Vec<(usize, usize)> {
        let mut seen: HashMap<[usize; 4], Vec<(usize, usize)>> = HashMap::new();
        for (e, h) in self.hexes.iter().enumerate() {
            for (fi, f) in FACES.iter().enumerate() {
                let mut key = f.map(|i| h[i]);
                key.sort_unstable();
                seen.entry(key).or_default().push((e, fi));
            }
        }
        let mut out: Vec<(usize, usize)> = seen.into_values().filter(|v| v.len() == 1).map(|v| v[0]).collect();
        out.sort_unstable();
        out
    }

    /// Outward unit normal and area of a face, from the reference coordinates.
    pub fn face_normal(&self, e: usize, f: usize) -> ([f64; 3], f64) {
        let p = FACES[f].map(|i| self.nodes[self.hexes[e][i]]);
        let d1 = sub(p[2], p[0]);
        let d2 = sub(p[3], p[1]);
        let n = cross(d1, d2);
        let len = norm(n);
        ([n[0] / len, n[1] / len, n[2] / len], 0.5 * len)
    }

    /// Adds a node set collecting the nodes that satisfy `pred`.
    pub fn add_node_set(&mut self, name: &str, pred: impl Fn(&[f64; 3]) -> bool) {
        let ids = (0..self.nodes.len()).filter(|&i| pred(&self.nodes[i])).collect();
        self.node_sets.insert(name.into(), ids);
    }

    /// Adds a face set of boundary faces whose nodes all satisfy `pred`.
    pub fn add_face_set(&mut self, name: &str, pred: impl Fn(&[f64; 3]) -> bool) {
        let faces = self
            .boundary_faces()
            .into_iter()
            .filter(|&(e, f)| FACES[f].iter().all(|&i| pred(&self.nodes[self.hexes[e][i]])))
            .collect();
        self.face_sets.insert(name.into(), faces);
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

// ---------------------------------------------------------------------------
// Builders

/// Structured block of `nx × ny × nz` equal hexahedra.
///
/// Node sets and boundary face sets `x0, x1, y0, y1, z0, z1` name the six sides.
pub fn build_block(nx: usize, ny: usize, nz: usize, lengths: [f64; 3], origin: [f64; 3]) -> Result<Mesh> {
    if nx == 0 || ny == 0 || nz == 0 || lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(FemError::BadInput("block needs positive counts and lengths".into()));
    }
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([
                    origin[0] + lengths[0] * i as f64 / nx as f64,
                    origin[1] + lengths[1] * j as f64 / ny as f64,
                    origin[2] + lengths[2] * k as f64 / nz as f64,
                ]);
            }
        }
    }
    let mut hexes = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                hexes.push([
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ]);
            }
        }
    }
    let mut mesh = Mesh { nodes, hexes, ..Default::default() };
    add_side_sets(&mut mesh, origin, lengths);
    Ok(mesh)
}

fn add_side_sets(mesh: &mut Mesh, origin: [f64; 3], lengths: [f64; 3]) {
    let tol = 1e-9 * lengths.iter().cloned().fold(0.0, f64::max);
    for (axis, name) in ["x", "y", "z"].iter().enumerate() {
        let lo = origin[axis];
        let hi = origin[axis] + lengths[axis];
        mesh.add_node_set(&format!("{name}0"), |p| (p[axis] - lo).abs() < tol);
        mesh.add_node_set(&format!("{name}1"), |p| (p[axis] - hi).abs() < tol);
        mesh.add_face_set(&format!("{name}0"), |p| (p[axis] - lo).abs() < tol);
        mesh.add_face_set(&format!("{name}1"), |p| (p[axis] - hi).abs() < tol);
    }
}

/// Membrane patch dimensions: length, height and thickness (mm).
pub const MEMBRANE_SIZE: [f64; 3] = [0.24, 0.12, 0.001];

/// In-plane coordinates of the eight patch nodes: four interior nodes
/// (MacNeal–Harder membrane patch) followed by the four corners.
pub const MEMBRANE_POINTS: [[f64; 2]; 8] = [
    [0.04, 0.02],
    [0.18, 0.03],
    [0.16, 0.08],
    [0.08, 0.08],
    [0.0, 0.0],
    [0.24, 0.0],
    [0.24, 0.12],
    [0.0, 0.12],
];

/// Quadrilaterals of the membrane patch by in-plane point index:
/// bottom, right, top, left strip elements and the central element.
pub const MEMBRANE_QUADS: [[usize; 4]; 5] = [[4, 5, 1, 0], [5, 6, 2, 1], [6, 7, 3, 2], [7, 4, 0, 3], [0, 1, 2, 3]];

/// Five-element membrane patch, one element through the thickness.
///
/// Nodes `0..8` lie on `z = 0`, nodes `8..16` on `z = t`, both in the order of
/// [`MEMBRANE_POINTS`]. Node sets: `outer` (corner nodes of both layers),
/// `right` (`x = 0.24`), `bottom_layer` (`z = 0`), `corner_7` (the top-right
/// corner at `z = 0`).
pub fn build_membrane_patch() -> Mesh {
    let t = MEMBRANE_SIZE[2];
    let mut nodes = Vec::with_capacity(16);
    for z in [0.0, t] {
        for p in MEMBRANE_POINTS {
            nodes.push([p[0], p[1], z]);
        }
    }
    let hexes = MEMBRANE_QUADS.iter().map(|q| [q[0], q[1], q[2], q[3], q[0] + 8, q[1] + 8, q[2] + 8, q[3] + 8]).collect();
    let mut mesh = Mesh { nodes, hexes, ..Default::default() };
    mesh.node_sets.insert("outer".into(), vec![4, 5, 6, 7, 12, 13, 14, 15]);
    mesh.node_sets.insert("right".into(), vec![5, 6, 13, 14]);
    mesh.node_sets.insert("bottom_layer".into(), (0..8).collect());
    mesh.node_sets.insert("corner_7".into(), vec![6]);
    mesh
}

/// Interior hexahedron of the MacNeal–Harder solid patch in the unit cube.
pub const SOLID_PATCH_INTERIOR: [[f64; 3]; 8] = [
    [0.249, 0.342, 0.192],
    [0.826, 0.288, 0.288],
    [0.850, 0.649, 0.263],
    [0.273, 0.750, 0.230],
    [0.320, 0.186, 0.643],
    [0.677, 0.305, 0.683],
    [0.788, 0.693, 0.644],
    [0.165, 0.745, 0.702],
];

/// Outer-face order of the solid patch elements after the interior one:
/// `x = 0`, `y = 1`, `x = 1`, `y = 0`, `z = 1`, `z = 0` as local faces of the interior hex.
pub const SOLID_PATCH_FACE_ORDER: [usize; 6] = [4, 3, 5, 2, 1, 0];

/// Seven-element solid patch in the unit cube.
///
/// Nodes `0..8` are the cube corners, `8..16` the interior hexahedron. Element
/// 0 is the interior hexahedron, elements 1–6 connect it to the cube faces in
/// the order of [`SOLID_PATCH_FACE_ORDER`]. Node set `outer` holds the corners.
pub fn build_solid_patch() -> Mesh {
    let corners: [[f64; 3]; 8] = crate::element::NODE_NATURAL.map(|p| p.map(|c| 0.5 * (c + 1.0)));
    let mut nodes: Vec<[f64; 3]> = corners.to_vec();
    nodes.extend_from_slice(&SOLID_PATCH_INTERIOR);
    let mut hexes = vec![std::array::from_fn(|i| i + 8)];
    for &f in &SOLID_PATCH_FACE_ORDER {
        let face = FACES[f];
        let outer = face.map(|i| i);
        let inner = face.map(|i| i + 8);
        let mut h = [outer[0], outer[1], outer[2], outer[3], inner[0], inner[1], inner[2], inner[3]];
        let x: Nodes = h.map(|n| nodes[n]);
        if center_jacobian_det(&x) < 0.0 {
            h = [inner[0], inner[1], inner[2], inner[3], outer[0], outer[1], outer[2], outer[3]];
        }
        hexes.push(h);
    }
    let mut mesh = Mesh { nodes, hexes, ..Default::default() };
    mesh.node_sets.insert("outer".into(), (0..8).collect());
    mesh
}

/// Notched specimen resolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NotchedPreset {
    /// 9 × 26 × 3 = 702 elements.
    Coarse,
    /// 18 × 56 × 3 = 3024 elements.
    Medium,
}

impl NotchedPreset {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coarse" => Ok(NotchedPreset::Coarse),
            "medium" => Ok(NotchedPreset::Medium),
            other => Err(FemError::UnsupportedResolution(other.into())),
        }
    }

    /// Closest preset to a requested element count.
    pub fn for_target(target: usize) -> Result<Self> {
        match target {
            400..=1500 => Ok(NotchedPreset::Coarse),
            1501..=5000 => Ok(NotchedPreset::Medium),
            _ => Err(FemError::UnsupportedResolution(format!("{target} elements"))),
        }
    }

    /// Columns across the width and rows in the three length segments.
    fn divisions(&self) -> (usize, [usize; 3]) {
        match self {
            NotchedPreset::Coarse => (9, [5, 16, 5]),
            NotchedPreset::Medium => (18, [10, 36, 10]),
        }
    }
}

/// Notched specimen geometry (mm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NotchedGeometry {
    pub width: f64,
    pub length: f64,
    pub thickness: f64,
    /// Right notch: circular arc of this radius whose center lies outside the specimen.
    pub right_radius: f64,
    pub right_depth: f64,
    pub right_center_y: f64,
    /// Left notch: semicircle centered on the left edge.
    pub left_radius: f64,
    pub left_center_y: f64,
    /// Limits of the finely divided middle segment.
    pub refine: [f64; 2],
}

impl Default for NotchedGeometry {
    fn default() -> Self {
        NotchedGeometry {
            width: 18.0,
            length: 70.0,
            thickness: 3.0,
            right_radius: 7.25,
            right_depth: 5.0,
            right_center_y: 35.0,
            left_radius: 2.5,
            left_center_y: 45.0,
            refine: [27.0, 49.0],
        }
    }
}

impl NotchedGeometry {
    /// Left boundary `x_L(y)`.
    pub fn left_edge(&self, y: f64) -> f64 {
        let d = y - self.left_center_y;
        if d.abs() < self.left_radius {
            (self.left_radius * self.left_radius - d * d).sqrt()
        } else {
            0.0
        }
    }

    /// Right boundary `x_R(y)`.
    pub fn right_edge(&self, y: f64) -> f64 {
        let cx = self.width - self.right_depth + self.right_radius;
        let d = y - self.right_center_y;
        let r = self.right_radius;
        let x = if d.abs() < r { cx - (r * r - d * d).sqrt() } else { f64::INFINITY };
        x.min(self.width)
    }

    pub fn in_left_notch(&self, y: f64) -> bool {
        self.left_edge(y) > 0.0
    }

    pub fn in_right_notch(&self, y: f64) -> bool {
        self.right_edge(y) < self.width
    }
}

/// Asymmetrically notched specimen, three element layers through the thickness.
///
/// Each row of nodes is spread evenly between the left and right boundary
/// curves, so boundary nodes lie exactly on the notch arcs. Node sets:
/// `bottom` (`y = 0`), `top` (`y = length`), `notch` (nodes on either arc).
pub fn build_notched_specimen(preset: NotchedPreset) -> Mesh {
    build_notched_with(preset, &NotchedGeometry::default())
}

pub fn build_notched_with(preset: NotchedPreset, g: &NotchedGeometry) -> Mesh {
    let (nx, rows) = preset.divisions();
    let nz = 3;
    let mut ys = Vec::new();
    let segs = [(0.0, g.refine[0], rows[0]), (g.refine[0], g.refine[1], rows[1]), (g.refine[1], g.length, rows[2])];
    for (s, (a, b, n)) in segs.iter().enumerate() {
        for j in 0..*n {
            if s > 0 && j == 0 {
                continue;
            }
            ys.push(a + (b - a) * j as f64 / *n as f64);
        }
        ys.push(*b);
    }
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let ny = ys.len() - 1;
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        let z = g.thickness * k as f64 / nz as f64;
        for &y in &ys {
            let xl = g.left_edge(y);
            let xr = g.right_edge(y);
            for i in 0..=nx {
                nodes.push([xl + (xr - xl) * i as f64 / nx as f64, y, z]);
            }
        }
    }
    let mut hexes = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                hexes.push([
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ]);
            }
        }
    }
    let mut mesh = Mesh { nodes, hexes, ..Default::default() };
    let tol = 1e-9;
    let (len, gg) = (g.length, *g);
    mesh.add_node_set("bottom", |p| p[1].abs() < tol);
    mesh.add_node_set("top", |p| (p[1] - len).abs() < tol);
    mesh.add_node_set("notch", move |p| {
        (gg.in_left_notch(p[1]) && (p[0] - gg.left_edge(p[1])).abs() < tol)
            || (gg.in_right_notch(p[1]) && (p[0] - gg.right_edge(p[1])).abs() < tol)
    });
    mesh.add_face_set("bottom", |p| p[1].abs() < tol);
    mesh.add_face_set("top", |p| (p[1] - len).abs() < tol);
    mesh
}

// ---------------------------------------------------------------------------
// Distortion

/// Seeded random nodal perturbation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    /// Half-range of the in-plane (x, y) perturbation.
    pub d_xy: f64,
    /// Half-range of the z perturbation.
    pub d_z: f64,
    pub seed: u64,
    /// Node sets that are never moved.
    #[serde(default)]
    pub protected: Vec<String>,
}

/// Perturbs every unprotected node by independent uniform draws in `[−d, d]`.
///
/// Draws come from a ChaCha8 stream seeded with `spec.seed`, three per node in
/// node order, so results are identical on every platform. Boundary nodes
/// keep the geometry: on axis-aligned boundary planes only tangential
/// components move, and nodes touching a curved boundary face stay put.
pub fn distort(mesh: &Mesh, spec: &DistortionSpec) -> Result<Mesh> {
    if spec.d_xy < 0.0 || spec.d_z < 0.0 {
        return Err(FemError::BadInput("distortion ranges must be non-negative".into()));
    }
    let mut out = mesh.clone();
    if spec.d_xy == 0.0 && spec.d_z == 0.0 {
        return Ok(out);
    }
    let mut frozen = vec![[false; 3]; mesh.nodes.len()];
    for name in &spec.protected {
        for &n in mesh.node_set(name)? {
            frozen[n] = [true; 3];
        }
    }
    for (e, f) in mesh.boundary_faces() {
        let (normal, _) = mesh.face_normal(e, f);
        let axis = (0..3).find(|&a| (normal[a].abs() - 1.0).abs() < 1e-9);
        let planar = {
            let p = FACES[f].map(|i| mesh.nodes[mesh.hexes[e][i]]);
            axis.map(|a| p.iter().all(|q| (q[a] - p[0][a]).abs() < 1e-9)).unwrap_or(false)
        };
        for &i in &FACES[f] {
            let n = mesh.hexes[e][i];
            match (axis, planar) {
                (Some(a), true) => frozen[n][a] = true,
                _ => frozen[n] = [true; 3],
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let range = [spec.d_xy, spec.d_xy, spec.d_z];
    for (n, p) in out.nodes.iter_mut().enumerate() {
        for a in 0..3 {
            let r: f64 = rng.random_range(-1.0..=1.0);
            if !frozen[n][a] {
                p[a] += r * range[a];
            }
        }
    }
    let bad = out.inverted_elements();
    if !bad.is_empty() {
        return Err(FemError::InvertedElement(bad));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Mesh file

/// Writes the plain-text mesh format documented in `docs/mesh-format.md`.
pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::from("hexfem-mesh 1\n");
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "hexes {}", mesh.hexes.len());
    for h in &mesh.hexes {
        let line: Vec<String> = h.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    for (name, ids) in &mesh.node_sets {
        let _ = writeln!(s, "nodeset {} {}", name, ids.len());
        let line: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    for (name, faces) in &mesh.face_sets {
        let _ = writeln!(s, "faceset {} {}", name, faces.len());
        for (e, f) in faces {
            let _ = writeln!(s, "{e} {f}");
        }
    }
    s.push_str("end\n");
    s
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let bad = |m: &str| FemError::BadInput(format!("mesh file: {m}"));
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .peekable();
    let mut next = || tokens.next().ok_or_else(|| bad("unexpected end of file"));
    if next()? != "hexfem-mesh" || next()? != "1" {
        return Err(bad("missing `hexfem-mesh 1` header"));
    }
    let num = |t: &str| t.parse::<usize>().map_err(|_| bad(&format!("expected an integer, found `{t}`")));
    let real = |t: &str| t.parse::<f64>().map_err(|_| bad(&format!("expected a number, found `{t}`")));
    let mut mesh = Mesh::default();
    loop {
        let key = next()?;
        match key {
            "nodes" => {
                let n = num(next()?)?;
                for _ in 0..n {
                    let p = [real(next()?)?, real(next()?)?, real(next()?)?];
                    mesh.nodes.push(p);
                }
            }
            "hexes" => {
                let n = num(next()?)?;
                for _ in 0..n {
                    let mut h = [0usize; 8];
                    for v in h.iter_mut() {
                        *v = num(next()?)?;
                    }
                    mesh.hexes.push(h);
                }
            }
            "nodeset" => {
                let name = next()?.to_string();
                let n = num(next()?)?;
                let ids = (0..n).map(|_| next().and_then(|t| num(t))).collect::<Result<Vec<_>>>()?;
                mesh.node_sets.insert(name, ids);
            }
            "faceset" => {
                let name = next()?.to_string();
                let n = num(next()?)?;
                let mut faces = Vec::with_capacity(n);
                for _ in 0..n {
                    faces.push((num(next()?)?, num(next()?)?));
                }
                mesh.face_sets.insert(name, faces);
            }
            "end" => break,
            other => return Err(bad(&format!("unknown section `{other}`"))),
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

// ---------------------------------------------------------------------------
// VTK and CSV

/// A named field attached to points or cells.
#[derive(Clone, Debug)]
pub enum Field<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector(&'a str, &'a [[f64; 3]]),
}

impl Field<'_> {
    fn len(&self) -> usize {
        match self {
            Field::Scalar(_, v) => v.len(),
            Field::Vector(_, v) => v.len(),
        }
    }
}

/// Legacy ASCII VTK unstructured grid with hexahedral cells (type 12).
pub fn write_vtk(mesh: &Mesh, point_fields: &[Field], cell_fields: &[Field], path: &Path) -> Result<()> {
    let s = vtk_string(mesh, point_fields, cell_fields)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(s.as_bytes())?;
    Ok(())
}

pub fn vtk_string(mesh: &Mesh, point_fields: &[Field], cell_fields: &[Field]) -> Result<String> {
    for f in point_fields {
        if f.len() != mesh.nodes.len() {
            return Err(FemError::BadInput("point field length does not match the node count".into()));
        }
    }
    for f in cell_fields {
        if f.len() != mesh.hexes.len() {
            return Err(FemError::BadInput("cell field length does not match the element count".into()));
        }
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nhexfem output\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "CELLS {} {}", mesh.hexes.len(), 9 * mesh.hexes.len());
    for h in &mesh.hexes {
        let _ = writeln!(s, "8 {} {} {} {} {} {} {} {}", h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.hexes.len());
    for _ in &mesh.hexes {
        s.push_str("12\n");
    }
    let block = |s: &mut String, fields: &[Field]| {
        for f in fields {
            match f {
                Field::Scalar(name, v) => {
                    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                    for x in v.iter() {
                        let _ = writeln!(s, "{x:e}");
                    }
                }
                Field::Vector(name, v) => {
                    let _ = writeln!(s, "VECTORS {name} double");
                    for x in v.iter() {
                        let _ = writeln!(s, "{:e} {:e} {:e}", x[0], x[1], x[2]);
                    }
                }
            }
        }
    };
    if !point_fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.nodes.len());
        block(&mut s, point_fields);
    }
    if !cell_fields.is_empty() {
        let _ = writeln!(s, "CELL_DATA {}", mesh.hexes.len());
        block(&mut s, cell_fields);
    }
    Ok(s)
}

/// One row of a load-displacement table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub step: usize,
    pub load_factor: f64,
    pub u: f64,
    pub force: f64,
    pub normalized: f64,
}

pub const CSV_HEADER: &str = "step,load_factor,u,F,F_over_F0";

pub fn csv_string(rows: &[CurveRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{:.12e},{:.12e},{:.12e},{:.12e}", r.step, r.load_factor, r.u, r.force, r.normalized);
    }
    s
}

pub fn write_csv(rows: &[CurveRow], path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(rows))?;
    Ok(())
}

/// Node ids that appear in at least one element.
pub fn used_nodes(mesh: &Mesh) -> BTreeSet<usize> {
    mesh.hexes.iter().flatten().copied().collect()
}
