use std::sync::OnceLock;

use super::ElementError;
use crate::mesh::Point;

/// Highest polynomial degree a triangle rule may be requested for.
pub const MAX_TRIANGLE_DEGREE: usize = 10;
/// Highest polynomial degree an edge rule may be requested for.
pub const MAX_EDGE_DEGREE: usize = 39;

#[derive(Clone, Debug)]
pub struct QuadratureRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl<P> QuadratureRule<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1, 1] -> [0, 1]
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `min_degree`.
pub fn edge_rule(min_degree: usize) -> Result<QuadratureRule<f64>, ElementError> {
    if min_degree > MAX_EDGE_DEGREE {
        return Err(ElementError::UnsupportedQuadrature(min_degree));
    }
    let n = (min_degree + 2) / 2;
    let (points, weights) = gauss_legendre(n.max(1));
    Ok(QuadratureRule {
        points,
        weights,
        exactness: 2 * n.max(1) - 1,
    })
}

/// Collapsed Gauss product rule on the reference triangle, exact for
/// polynomials of total degree `min_degree`.
pub fn triangle_rule(min_degree: usize) -> Result<QuadratureRule<Point>, ElementError> {
    if min_degree > MAX_TRIANGLE_DEGREE {
        return Err(ElementError::UnsupportedQuadrature(min_degree));
    }
    // x^a y^b pulls back to u^a (1-u)^(b+1) v^b: degree d+1 in u, d in v
    let n = (min_degree + 3) / 2;
    let (g, gw) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in g.iter().zip(&gw) {
        for (&v, &wv) in g.iter().zip(&gw) {
            points.push([u, (1.0 - u) * v]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness: 2 * n - 2,
    })
}

/// Shared triangle rule for `degree` (clamped to the supported range).
pub(crate) fn cached_triangle_rule(degree: usize) -> &'static QuadratureRule<Point> {
    static CACHE: OnceLock<Vec<QuadratureRule<Point>>> = OnceLock::new();
    let rules = CACHE.get_or_init(|| {
        (0..=MAX_TRIANGLE_DEGREE)
            .map(|d| triangle_rule(d).expect("supported degree"))
            .collect()
    });
    &rules[degree.min(MAX_TRIANGLE_DEGREE)]
}
