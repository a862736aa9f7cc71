use std::collections::BTreeMap;
use std::sync::Arc;

use crate::mesh::{Mesh, Side};

use super::element::ElementKind;

/// Global numbering of the degrees of freedom of a scalar Lagrange space.
///
/// P1 dofs are the vertices; P2 dofs are the vertices followed by the edge
/// midpoints (`n_vertices + edge`); P0 dofs are the triangles. Vector fields
/// use two copies of a scalar map, stored component-blocked.
#[derive(Debug, Clone)]
pub struct DofMap {
    kind: ElementKind,
    mesh: Arc<Mesh>,
    n_dofs: usize,
    cell_dofs: Vec<usize>,
    dof_coords: Vec<[f64; 2]>,
    boundary: BTreeMap<Side, Vec<usize>>,
}

impl DofMap {
    pub fn new(mesh: Arc<Mesh>, kind: ElementKind) -> Self {
        let nl = kind.n_local();
        let nv = mesh.n_vertices();
        let nt = mesh.n_triangles();
        let mut cell_dofs = Vec::with_capacity(nt * nl);
        let (n_dofs, dof_coords) = match kind {
            ElementKind::P0 => {
                cell_dofs.extend(0..nt);
                let coords = (0..nt)
                    .map(|t| {
                        let p = mesh.triangle_coords(t);
                        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
                    })
                    .collect();
                (nt, coords)
            }
            ElementKind::P1 => {
                for tri in mesh.triangles() {
                    cell_dofs.extend_from_slice(tri);
                }
                (nv, mesh.vertices().to_vec())
            }
            ElementKind::P2 => {
                let edges = mesh.edges();
                for (tri, te) in mesh.triangles().iter().zip(&edges.triangle_edges) {
                    cell_dofs.extend_from_slice(tri);
                    cell_dofs.extend(te.iter().map(|e| nv + e));
                }
                let mut coords = mesh.vertices().to_vec();
                coords.extend(edges.edges.iter().map(|&[a, b]| {
                    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                    [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
                }));
                (nv + edges.len(), coords)
            }
        };

        let mut boundary: BTreeMap<Side, Vec<usize>> = Side::ALL.iter().map(|s| (*s, Vec::new())).collect();
        if kind != ElementKind::P0 {
            let edge_index: std::collections::HashMap<(usize, usize), usize> = mesh
                .edges()
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| ((e[0], e[1]), i))
                .collect();
            for be in mesh.boundary_edges() {
                let list = boundary.get_mut(&be.side).expect("all sides present");
                list.extend_from_slice(&be.vertices);
                if kind == ElementKind::P2 {
                    let [a, b] = be.vertices;
                    let key = if a < b { (a, b) } else { (b, a) };
                    if let Some(e) = edge_index.get(&key) {
                        list.push(nv + e);
                    }
                }
            }
            for list in boundary.values_mut() {
                list.sort_unstable();
                list.dedup();
            }
        }

        Self { kind, mesh, n_dofs, cell_dofs, dof_coords, boundary }
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.kind.n_local()
    }

    /// Global dofs of triangle `t` in local order.
    #[inline]
    pub fn cell(&self, t: usize) -> &[usize] {
        let n = self.kind.n_local();
        &self.cell_dofs[t * n..(t + 1) * n]
    }

    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    pub fn boundary_dofs(&self, side: Side) -> &[usize] {
        &self.boundary[&side]
    }

    /// Sorted union of the boundary dofs on the given sides.
    pub fn boundary_dofs_on(&self, sides: &[Side]) -> Vec<usize> {
        let mut all: Vec<usize> = sides.iter().flat_map(|s| self.boundary[s].iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// True when both maps number the same mesh.
    pub fn same_mesh(&self, other: &DofMap) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }
}
