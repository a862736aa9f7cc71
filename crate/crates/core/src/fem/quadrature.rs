//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)`.

use super::FemError;

/// Highest polynomial degree a rule is available for.
pub const MAX_DEGREE: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates `(x, y)` of the points.
    pub points: Vec<[f64; 2]>,
    /// Weights, summing to the reference area 1/2.
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates `(1 - x - y, x, y)` of point `q`.
    pub fn barycentric(&self, q: usize) -> [f64; 3] {
        let [x, y] = self.points[q];
        [1.0 - x - y, x, y]
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p[0], p[1])).sum()
    }
}

/// Returns a rule exact for all polynomials of total degree `degree`.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule, FemError> {
    match degree {
        1 => Ok(QuadratureRule { points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5], degree: 1 }),
        2 => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            Ok(QuadratureRule {
                points: vec![[a, a], [b, a], [a, b]],
                weights: vec![1.0 / 6.0; 3],
                degree: 2,
            })
        }
        3 => Ok(collapsed_gauss(3)),
        4 | 5 => Ok(radon_seven_point()),
        6 | 7 => Ok(collapsed_gauss(7)),
        _ => Err(FemError::UnsupportedQuadrature { degree }),
    }
}

/// Seven-point symmetric rule of degree 5.
fn radon_seven_point() -> QuadratureRule {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 2400.0;
    let w2 = (155.0 + s15) / 2400.0;
    let c = 1.0 / 3.0;
    let mut points = vec![[c, c]];
    let mut weights = vec![9.0 / 80.0];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        points.extend_from_slice(&[[a, a], [b, a], [a, b]]);
        weights.extend_from_slice(&[w, w, w]);
    }
    QuadratureRule { points, weights, degree: 5 }
}

/// Tensor Gauss-Legendre rule mapped through the collapsed-square map
/// `x = u, y = v (1 - u)`.
fn collapsed_gauss(degree: usize) -> QuadratureRule {
    let nu = (degree + 3) / 2;
    let nv = (degree + 2) / 2;
    let (xu, wu) = gauss_legendre_unit(nu);
    let (xv, wv) = gauss_legendre_unit(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (u, wu) in xu.iter().zip(&wu) {
        for (v, wv) in xv.iter().zip(&wv) {
            points.push([*u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, degree }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
