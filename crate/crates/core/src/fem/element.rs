use std::fmt;

use crate::mesh::Mesh;

use super::quadrature::QuadratureRule;

/// Lagrange element family on triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P0,
    P1,
    P2,
}

impl ElementKind {
    pub fn degree(self) -> usize {
        match self {
            ElementKind::P0 => 0,
            ElementKind::P1 => 1,
            ElementKind::P2 => 2,
        }
    }

    pub fn n_local(self) -> usize {
        match self {
            ElementKind::P0 => 1,
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
        }
    }

    /// Local basis values at reference point `(x, y)`.
    ///
    /// P2 ordering: the three vertices, then the midpoints of local edges
    /// (0,1), (1,2), (2,0).
    pub fn eval(self, x: f64, y: f64, out: &mut [f64]) {
        let l = [1.0 - x - y, x, y];
        match self {
            ElementKind::P0 => out[0] = 1.0,
            ElementKind::P1 => out[..3].copy_from_slice(&l),
            ElementKind::P2 => {
                for i in 0..3 {
                    out[i] = l[i] * (2.0 * l[i] - 1.0);
                    out[3 + i] = 4.0 * l[i] * l[(i + 1) % 3];
                }
            }
        }
    }

    /// Local basis gradients with respect to the reference coordinates.
    pub fn eval_ref_grad(self, x: f64, y: f64, out: &mut [[f64; 2]]) {
        const DL: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let l = [1.0 - x - y, x, y];
        match self {
            ElementKind::P0 => out[0] = [0.0, 0.0],
            ElementKind::P1 => out[..3].copy_from_slice(&DL),
            ElementKind::P2 => {
                for i in 0..3 {
                    let s = 4.0 * l[i] - 1.0;
                    out[i] = [s * DL[i][0], s * DL[i][1]];
                    let j = (i + 1) % 3;
                    out[3 + i] = [
                        4.0 * (l[j] * DL[i][0] + l[i] * DL[j][0]),
                        4.0 * (l[j] * DL[i][1] + l[i] * DL[j][1]),
                    ];
                }
            }
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P0" => Some(ElementKind::P0),
            "P1" => Some(ElementKind::P1),
            "P2" => Some(ElementKind::P2),
            _ => None,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.degree())
    }
}

/// Velocity/pressure pair. Velocity and temperature are always P2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementPair {
    /// Taylor-Hood P2/P1.
    P2P1,
    /// P2/P0, intended for barycentric-refined meshes.
    P2P0,
}

impl ElementPair {
    pub fn velocity(self) -> ElementKind {
        ElementKind::P2
    }

    pub fn pressure(self) -> ElementKind {
        match self {
            ElementPair::P2P1 => ElementKind::P1,
            ElementPair::P2P0 => ElementKind::P0,
        }
    }

    /// Warning text when the pair is used outside its intended mesh family.
    pub fn compatibility_warning(self, mesh: &Mesh) -> Option<String> {
        match self {
            ElementPair::P2P0 if !mesh.is_barycentric() => Some(
                "P2/P0 on a mesh without barycentric refinement: inf-sup stability is not guaranteed".to_string(),
            ),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let t: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match t.to_ascii_uppercase().as_str() {
            "P2P1" => Some(ElementPair::P2P1),
            "P2P0" => Some(ElementPair::P2P0),
            _ => None,
        }
    }
}

impl fmt::Display for ElementPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.velocity(), self.pressure())
    }
}

/// Basis values and reference gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub kind: ElementKind,
    pub n_local: usize,
    /// `values[q * n_local + i]`
    pub values: Vec<f64>,
    /// `ref_grads[q * n_local + i]`
    pub ref_grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn new(kind: ElementKind, rule: &QuadratureRule) -> Self {
        let n = kind.n_local();
        let mut values = vec![0.0; n * rule.len()];
        let mut ref_grads = vec![[0.0; 2]; n * rule.len()];
        for (q, p) in rule.points.iter().enumerate() {
            kind.eval(p[0], p[1], &mut values[q * n..(q + 1) * n]);
            kind.eval_ref_grad(p[0], p[1], &mut ref_grads[q * n..(q + 1) * n]);
        }
        Self { kind, n_local: n, values, ref_grads }
    }

    #[inline]
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_local..(q + 1) * self.n_local]
    }

    #[inline]
    pub fn ref_grads_at(&self, q: usize) -> &[[f64; 2]] {
        &self.ref_grads[q * self.n_local..(q + 1) * self.n_local]
    }
}

/// Affine map from the reference triangle onto a mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    origin: [f64; 2],
    jac: [[f64; 2]; 2],
    /// Inverse transpose of the Jacobian.
    jinv_t: [[f64; 2]; 2],
    /// Jacobian determinant (twice the triangle area).
    pub det: f64,
}

impl AffineMap {
    pub fn new(p: &[[f64; 2]; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let jinv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Self { origin: p[0], jac, jinv_t, det }
    }

    #[inline]
    pub fn map(&self, r: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.jinv_t[0][0] * g[0] + self.jinv_t[0][1] * g[1],
            self.jinv_t[1][0] * g[0] + self.jinv_t[1][1] * g[1],
        ]
    }
}
