use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::ElementError;
use crate::mesh::Point;

pub const MAX_DEGREE: usize = 4;

/// Values and reference derivatives of every shape function at one point.
#[derive(Clone, Debug, Default)]
pub struct BasisTable {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    /// `(xx, xy, yy)`.
    pub hessians: Vec<[f64; 3]>,
}

/// Nodal Lagrange basis of degree `k` on the reference triangle.
///
/// Nodes are ordered vertices first, then the `k-1` interior nodes of local
/// edges 0, 1, 2 (edge `i` runs from vertex `i+1` to vertex `i+2`), then
/// interior nodes.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    degree: usize,
    /// Barycentric multi-indices `(b0, b1, b2)` summing to `degree`.
    nodes: Vec<[usize; 3]>,
    monomials: Vec<(i32, i32)>,
    /// `coeff[i * n + j]`: coefficient of monomial `j` in shape function `i`.
    coeff: Vec<f64>,
}

fn barycentric_nodes(k: usize) -> Vec<[usize; 3]> {
    let mut nodes = vec![[k, 0, 0], [0, k, 0], [0, 0, k]];
    for local in 0..3 {
        let (a, b) = ((local + 1) % 3, (local + 2) % 3);
        for j in 1..k {
            let mut n = [0; 3];
            n[a] = k - j;
            n[b] = j;
            nodes.push(n);
        }
    }
    for b2 in 1..k {
        for b1 in 1..k {
            if b1 + b2 < k {
                nodes.push([k - b1 - b2, b1, b2]);
            }
        }
    }
    nodes
}

fn monomial_list(k: usize) -> Vec<(i32, i32)> {
    let mut m = Vec::new();
    for total in 0..=k as i32 {
        for b in 0..=total {
            m.push((total - b, b));
        }
    }
    m
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Result<Self, ElementError> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(ElementError::UnsupportedDegree(degree));
        }
        let nodes = barycentric_nodes(degree);
        let monomials = monomial_list(degree);
        let n = nodes.len();
        debug_assert_eq!(n, monomials.len());
        let vander = DMatrix::from_fn(n, n, |i, j| {
            let p = Self::node_point(nodes[i], degree);
            let (a, b) = monomials[j];
            p[0].powi(a) * p[1].powi(b)
        });
        let inv = vander
            .try_inverse()
            .ok_or(ElementError::UnsupportedDegree(degree))?;
        let mut coeff = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                coeff[i * n + j] = inv[(j, i)];
            }
        }
        Ok(Self {
            degree,
            nodes,
            monomials,
            coeff,
        })
    }

    fn node_point(b: [usize; 3], k: usize) -> Point {
        [b[1] as f64 / k as f64, b[2] as f64 / k as f64]
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn barycentric(&self, i: usize) -> [usize; 3] {
        self.nodes[i]
    }

    /// Reference coordinates of node `i`.
    pub fn node(&self, i: usize) -> Point {
        Self::node_point(self.nodes[i], self.degree)
    }

    /// Local nodes on local edge `local`, from its start vertex to its end vertex.
    pub fn edge_nodes(&self, local: usize) -> Vec<usize> {
        let k = self.degree;
        let mut out = vec![(local + 1) % 3];
        out.extend((0..k - 1).map(|j| 3 + local * (k - 1) + j));
        out.push((local + 2) % 3);
        out
    }

    pub fn eval(&self, p: Point) -> BasisTable {
        let n = self.dim();
        let k = self.degree as i32;
        let mut xp = vec![1.0; (k + 1) as usize];
        let mut yp = vec![1.0; (k + 1) as usize];
        for i in 1..=k as usize {
            xp[i] = xp[i - 1] * p[0];
            yp[i] = yp[i - 1] * p[1];
        }
        let pw = |v: &[f64], e: i32| if e < 0 { 0.0 } else { v[e as usize] };
        let mut mv = vec![[0.0; 6]; n];
        for (j, &(a, b)) in self.monomials.iter().enumerate() {
            let (af, bf) = (a as f64, b as f64);
            mv[j] = [
                pw(&xp, a) * pw(&yp, b),
                af * pw(&xp, a - 1) * pw(&yp, b),
                bf * pw(&xp, a) * pw(&yp, b - 1),
                af * (af - 1.0) * pw(&xp, a - 2) * pw(&yp, b),
                af * bf * pw(&xp, a - 1) * pw(&yp, b - 1),
                bf * (bf - 1.0) * pw(&xp, a) * pw(&yp, b - 2),
            ];
        }
        let mut table = BasisTable {
            values: Vec::with_capacity(n),
            gradients: Vec::with_capacity(n),
            hessians: Vec::with_capacity(n),
        };
        for i in 0..n {
            let row = &self.coeff[i * n..(i + 1) * n];
            let mut acc = [0.0; 6];
            for (c, m) in row.iter().zip(&mv) {
                for d in 0..6 {
                    acc[d] += c * m[d];
                }
            }
            table.values.push(acc[0]);
            table.gradients.push([acc[1], acc[2]]);
            table.hessians.push([acc[3], acc[4], acc[5]]);
        }
        table
    }
}

/// Shared basis of degree `k` (1..=4).
pub fn lagrange(degree: usize) -> Result<&'static LagrangeBasis, ElementError> {
    static CACHE: [OnceLock<LagrangeBasis>; MAX_DEGREE] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    if degree == 0 || degree > MAX_DEGREE {
        return Err(ElementError::UnsupportedDegree(degree));
    }
    Ok(CACHE[degree - 1].get_or_init(|| LagrangeBasis::new(degree).expect("supported degree")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_barycentric_values() {
        let b = lagrange(1).unwrap();
        let t = b.eval([1.0 / 3.0, 1.0 / 3.0]);
        for v in t.values {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kronecker_and_dimension() {
        for k in 1..=MAX_DEGREE {
            let b = lagrange(k).unwrap();
            assert_eq!(b.dim(), (k + 1) * (k + 2) / 2);
            for j in 0..b.dim() {
                let t = b.eval(b.node(j));
                for (i, v) in t.values.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "k={k} i={i} j={j} v={v}");
                }
            }
        }
    }

    #[test]
    fn quadratic_hessians_are_constant() {
        let b = lagrange(2).unwrap();
        let h1 = b.eval([0.1, 0.2]).hessians;
        let h2 = b.eval([0.6, 0.3]).hessians;
        for (a, c) in h1.iter().zip(&h2) {
            for d in 0..3 {
                assert!((a[d] - c[d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edge_nodes_lie_on_edge() {
        let b = lagrange(3).unwrap();
        for local in 0..3 {
            let nodes = b.edge_nodes(local);
            assert_eq!(nodes.len(), 4);
            for &n in &nodes {
                assert_eq!(b.barycentric(n)[local], 0);
            }
            // ordered from start vertex (local+1) to end vertex (local+2)
            let start = (local + 1) % 3;
            let w: Vec<usize> = nodes.iter().map(|&n| b.barycentric(n)[start]).collect();
            assert_eq!(w, vec![3, 2, 1, 0]);
        }
    }

    #[test]
    fn rejects_unsupported_degree() {
        assert!(lagrange(0).is_err());
        assert!(lagrange(5).is_err());
    }
}
