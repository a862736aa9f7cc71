//! Conforming triangulations of axis-aligned rectangles.
//!
//! Meshes are built from a [`RectSpec`] by splitting every cell of a
//! structured grid along its lower-left to upper-right diagonal. A mesh can
//! be refined barycentrically (each triangle split at its centroid into
//! three), which is the refinement needed for the P2/P0 velocity-pressure
//! pair.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

/// Side of the bounding rectangle a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "bottom" => Some(Side::Bottom),
            "top" => Some(Side::Top),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("invalid rectangle bounds [{x0}, {x1}] x [{y0}, {y1}]")]
    InvalidBounds { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("subdivision counts must be at least 1 (got nx = {nx}, ny = {ny})")]
    InvalidSubdivision { nx: usize, ny: usize },
    #[error("mesh failed validation: {0}")]
    Invalid(MeshDiagnostics),
}

/// Axis-aligned rectangle with a structured subdivision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RectSpec {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Self {
        Self { x0, x1, y0, y1, nx, ny }
    }

    pub fn unit_square(n: usize) -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0, n, n)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn check(&self) -> Result<(), MeshError> {
        let finite = [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(MeshError::InvalidBounds { x0: self.x0, x1: self.x1, y0: self.y0, y1: self.y1 });
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(MeshError::InvalidSubdivision { nx: self.nx, ny: self.ny });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub side: Side,
}

/// Unique undirected edges of a mesh together with the triangle-to-edge map.
///
/// Local edge `k` of a triangle joins local vertices `k` and `(k + 1) % 3`.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
}

impl EdgeTable {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    edge_table: EdgeTable,
    h: f64,
    barycentric: bool,
}

impl Mesh {
    /// Builds a mesh from raw parts without checking any invariant.
    /// Use [`validate`] to inspect the result.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Self {
        let edge_table = build_edge_table(&triangles);
        let h = triangles
            .iter()
            .map(|t| longest_edge(&vertices, t))
            .fold(0.0_f64, f64::max);
        Self { vertices, triangles, boundary_edges, edge_table, h, barycentric: false }
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn edges(&self) -> &EdgeTable {
        &self.edge_table
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_table.len()
    }

    /// Maximum triangle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// True when the mesh was produced by [`barycentric_refine`].
    pub fn is_barycentric(&self) -> bool {
        self.barycentric
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        signed_area(&self.triangle_coords(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Axis-aligned bounding box `[xmin, xmax, ymin, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for v in &self.vertices {
            bb[0] = bb[0].min(v[0]);
            bb[1] = bb[1].max(v[0]);
            bb[2] = bb[2].min(v[1]);
            bb[3] = bb[3].max(v[1]);
        }
        bb
    }

    /// Writes the mesh as plain text: one `x y` line per vertex followed by
    /// one zero-based `i j k` line per triangle.
    pub fn write_node_element<W: Write>(&self, mut out: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

pub fn signed_area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn longest_edge(vertices: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let a = vertices[t[k]];
            let b = vertices[t[(k + 1) % 3]];
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .fold(0.0_f64, f64::max)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn build_edge_table(triangles: &[[usize; 3]]) -> EdgeTable {
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
    let mut edges = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for t in triangles {
        let mut local = [0usize; 3];
        for (k, slot) in local.iter_mut().enumerate() {
            let key = edge_key(t[k], t[(k + 1) % 3]);
            *slot = *index.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edges.len() - 1
            });
        }
        triangle_edges.push(local);
    }
    EdgeTable { edges, triangle_edges }
}

/// Structured triangulation of a rectangle with `2 * nx * ny` triangles.
///
/// Vertex `(i, j)` has index `j * (nx + 1) + i`. Each cell is split along
/// its lower-left to upper-right diagonal.
pub fn build_rect_mesh(spec: &RectSpec) -> Result<Mesh, MeshError> {
    spec.check()?;
    let RectSpec { x0, x1, y0, y1, nx, ny } = *spec;
    let stride = nx + 1;
    let mut vertices = Vec::with_capacity(stride * (ny + 1));
    for j in 0..=ny {
        // Endpoints are set exactly so that the bounding box matches the spec.
        let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = j * stride + i;
            let v10 = v00 + 1;
            let v01 = v00 + stride;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { vertices: [i, i + 1], side: Side::Bottom });
        let top = ny * stride + i;
        boundary_edges.push(BoundaryEdge { vertices: [top + 1, top], side: Side::Top });
    }
    for j in 0..ny {
        let left = j * stride;
        boundary_edges.push(BoundaryEdge { vertices: [left + stride, left], side: Side::Left });
        let right = j * stride + nx;
        boundary_edges.push(BoundaryEdge { vertices: [right, right + stride], side: Side::Right });
    }

    Ok(Mesh::from_parts(vertices, triangles, boundary_edges))
}

/// Splits every triangle at its barycenter into three children.
///
/// The parent vertices keep their indices; the barycenter of triangle `t`
/// becomes vertex `n_vertices + t`. Boundary edges are unchanged.
pub fn barycentric_refine(mesh: &Mesh) -> Result<Mesh, MeshError> {
    // Area is not checked: refinement is defined for any valid triangulation.
    let mut diag = validate(mesh);
    diag.issues.retain(|i| !matches!(i, MeshIssue::AreaMismatch { .. }));
    if !diag.is_ok() {
        return Err(MeshError::Invalid(diag));
    }
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(mesh.n_triangles());
    let mut triangles = Vec::with_capacity(3 * mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_coords(t);
        vertices.push([(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]);
        let c = nv + t;
        triangles.push([tri[0], tri[1], c]);
        triangles.push([tri[1], tri[2], c]);
        triangles.push([tri[2], tri[0], c]);
    }
    let mut refined = Mesh::from_parts(vertices, triangles, mesh.boundary_edges.clone());
    refined.barycentric = true;
    Ok(refined)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshIssue {
    /// Triangle with non-positive signed area.
    Orientation { triangle: usize, area: f64 },
    /// Edge shared by more than two triangles.
    NonManifoldEdge { edge: [usize; 2], count: usize },
    /// Edge used by one triangle but not tagged as a boundary edge.
    UntaggedBoundaryEdge { edge: [usize; 2] },
    /// Tagged boundary edge that is not used by exactly one triangle.
    BadBoundaryTag { edge: [usize; 2], count: usize },
    /// Vertex index out of range.
    BadVertexIndex { triangle: usize, index: usize },
    /// Sum of triangle areas differs from the bounding-box area.
    AreaMismatch { total: f64, expected: f64 },
}

impl fmt::Display for MeshIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshIssue::Orientation { triangle, area } => {
                write!(f, "orientation violation at triangle {triangle} (signed area {area:e})")
            }
            MeshIssue::NonManifoldEdge { edge, count } => {
                write!(f, "non-manifold edge ({}, {}) shared by {count} triangles", edge[0], edge[1])
            }
            MeshIssue::UntaggedBoundaryEdge { edge } => {
                write!(f, "boundary edge ({}, {}) has no side marker", edge[0], edge[1])
            }
            MeshIssue::BadBoundaryTag { edge, count } => {
                write!(f, "tagged boundary edge ({}, {}) used by {count} triangles", edge[0], edge[1])
            }
            MeshIssue::BadVertexIndex { triangle, index } => {
                write!(f, "triangle {triangle} references missing vertex {index}")
            }
            MeshIssue::AreaMismatch { total, expected } => {
                write!(f, "total area {total:e} differs from rectangle area {expected:e}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshDiagnostics {
    pub issues: Vec<MeshIssue>,
}

impl MeshDiagnostics {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for MeshDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Relative tolerance for the area check in [`validate`].
pub const AREA_RTOL: f64 = 1e-12;

/// Checks orientation, edge manifoldness, boundary tagging and that the
/// triangles tile the bounding rectangle.
pub fn validate(mesh: &Mesh) -> MeshDiagnostics {
    let mut issues = Vec::new();
    let nv = mesh.n_vertices();
    let mut indices_ok = true;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            if v >= nv {
                issues.push(MeshIssue::BadVertexIndex { triangle: t, index: v });
                indices_ok = false;
            }
        }
    }
    if !indices_ok {
        return MeshDiagnostics { issues };
    }

    for t in 0..mesh.n_triangles() {
        let area = mesh.signed_area(t);
        if !(area > 0.0) {
            issues.push(MeshIssue::Orientation { triangle: t, area });
        }
    }

    let mut use_count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            *use_count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
    for be in &mesh.boundary_edges {
        *tagged.entry(edge_key(be.vertices[0], be.vertices[1])).or_default() += 1;
    }

    let mut edges: Vec<_> = use_count.iter().map(|(k, c)| (*k, *c)).collect();
    edges.sort_unstable();
    for ((a, b), count) in edges {
        if count > 2 {
            issues.push(MeshIssue::NonManifoldEdge { edge: [a, b], count });
        } else if count == 1 && !tagged.contains_key(&(a, b)) {
            issues.push(MeshIssue::UntaggedBoundaryEdge { edge: [a, b] });
        }
    }
    let mut tags: Vec<_> = tagged.keys().copied().collect();
    tags.sort_unstable();
    for (a, b) in tags {
        let count = use_count.get(&(a, b)).copied().unwrap_or(0);
        if count != 1 || tagged[&(a, b)] != 1 {
            issues.push(MeshIssue::BadBoundaryTag { edge: [a, b], count });
        }
    }

    let bb = mesh.bounding_box();
    let expected = (bb[1] - bb[0]) * (bb[3] - bb[2]);
    let total: f64 = (0..mesh.n_triangles()).map(|t| mesh.signed_area(t).abs()).sum();
    if !((total - expected).abs() <= AREA_RTOL * expected) {
        issues.push(MeshIssue::AreaMismatch { total, expected });
    }

    MeshDiagnostics { issues }
}
