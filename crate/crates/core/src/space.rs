//! Global numbering of the deflection space (degree k+1) and rotation
//! space (degree k, two components) with their essential constraints.

use std::collections::HashMap;

use thiserror::Error;

use crate::element::{lagrange, ElementError, LagrangeBasis};
use crate::mesh::{BoundaryLabel, Mesh, Point};

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("unsupported degree k = {0} (expected 1..=3)")]
    UnsupportedK(usize),
    #[error("the mesh has no clamped boundary edge; rigid motions are not handled")]
    NoClampedBoundary,
    #[error(transparent)]
    Element(#[from] ElementError),
}

/// Essential condition attached to a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constraint {
    Free,
    Zero,
    /// Vector node whose tangential component vanishes.
    TangentialZero {
        tangent: [f64; 2],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(usize),
    /// Edge `(lo, hi)` with weight of `lo` in the barycentric multi-index.
    Edge(usize, usize, usize),
    Interior(usize, usize),
}

/// Continuous Lagrange node numbering of one degree.
#[derive(Clone, Debug)]
pub struct DofMap {
    degree: usize,
    n_local: usize,
    elem_nodes: Vec<usize>,
    coords: Vec<Point>,
    edge_nodes: Vec<Vec<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self, ElementError> {
        let basis = lagrange(degree)?;
        let n_local = basis.dim();
        let mut keys: HashMap<NodeKey, usize> = HashMap::new();
        let mut coords = Vec::new();
        let mut elem_nodes = Vec::with_capacity(n_local * mesh.n_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let geom = mesh.geometry(t);
            for i in 0..n_local {
                let b = basis.barycentric(i);
                let nz: Vec<usize> = (0..3).filter(|&j| b[j] > 0).collect();
                let key = match nz.len() {
                    1 => NodeKey::Vertex(tri[nz[0]]),
                    2 => {
                        let (ga, gb) = (tri[nz[0]], tri[nz[1]]);
                        let (lo, w) = if ga < gb {
                            (ga, b[nz[0]])
                        } else {
                            (gb, b[nz[1]])
                        };
                        NodeKey::Edge(lo, ga.max(gb), w)
                    }
                    _ => NodeKey::Interior(t, i),
                };
                let id = *keys.entry(key).or_insert_with(|| {
                    coords.push(geom.to_physical(basis.node(i)));
                    coords.len() - 1
                });
                elem_nodes.push(id);
            }
        }
        let mut edge_nodes = Vec::with_capacity(mesh.edges().len());
        for edge in mesh.edges() {
            let (t, local) = edge.first;
            let mut nodes: Vec<usize> = basis
                .edge_nodes(local)
                .into_iter()
                .map(|i| elem_nodes[t * n_local + i])
                .collect();
            // local edge runs tri[local+1] -> tri[local+2]; store from vertices[0]
            if mesh.triangles()[t][(local + 1) % 3] != edge.vertices[0] {
                nodes.reverse();
            }
            edge_nodes.push(nodes);
        }
        Ok(Self {
            degree,
            n_local,
            elem_nodes,
            coords,
            edge_nodes,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &'static LagrangeBasis {
        lagrange(self.degree).expect("validated at construction")
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn n_elements(&self) -> usize {
        self.elem_nodes.len() / self.n_local
    }

    /// Global nodes of triangle `t` in local basis order.
    pub fn element(&self, t: usize) -> &[usize] {
        &self.elem_nodes[t * self.n_local..(t + 1) * self.n_local]
    }

    pub fn coords(&self, node: usize) -> Point {
        self.coords[node]
    }

    /// Nodes on a mesh edge, ordered from `edge.vertices[0]` to `edge.vertices[1]`.
    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edge_nodes[e]
    }
}

/// Deflection and rotation spaces of order `k`.
///
/// Full unknown layout: all deflection nodes, then rotation nodes with the
/// two components interleaved (`n_w + 2 node + c`).
#[derive(Clone, Debug)]
pub struct FeSpacePair {
    k: usize,
    scalar: DofMap,
    vector: DofMap,
    scalar_constraints: Vec<Constraint>,
    vector_constraints: Vec<Constraint>,
    reduce: Vec<Option<(usize, f64)>>,
    n_reduced: usize,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl FeSpacePair {
    pub fn new(mesh: &Mesh, k: usize) -> Result<Self, SpaceError> {
        if !(1..=3).contains(&k) {
            return Err(SpaceError::UnsupportedK(k));
        }
        if !mesh.has_label(BoundaryLabel::Clamped) {
            return Err(SpaceError::NoClampedBoundary);
        }
        let scalar = DofMap::new(mesh, k + 1)?;
        let vector = DofMap::new(mesh, k)?;

        let mut scalar_constraints = vec![Constraint::Free; scalar.n_nodes()];
        let mut clamped_vec = vec![false; vector.n_nodes()];
        let mut tangents: Vec<Vec<[f64; 2]>> = vec![Vec::new(); vector.n_nodes()];
        for (e, edge) in mesh.edges().iter().enumerate() {
            let Some(label) = edge.label() else { continue };
            if label == BoundaryLabel::Free {
                continue;
            }
            for &n in scalar.edge(e) {
                scalar_constraints[n] = Constraint::Zero;
            }
            match label {
                BoundaryLabel::Clamped => {
                    for &n in vector.edge(e) {
                        clamped_vec[n] = true;
                    }
                }
                BoundaryLabel::SimplySupported => {
                    let [a, b] = edge.vertices.map(|v| mesh.vertices()[v]);
                    let len = mesh.edge_length(e);
                    let s = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
                    for &n in vector.edge(e) {
                        tangents[n].push(s);
                    }
                }
                BoundaryLabel::Free => unreachable!(),
            }
        }
        let vector_constraints: Vec<Constraint> = (0..vector.n_nodes())
            .map(|n| {
                if clamped_vec[n] {
                    return Constraint::Zero;
                }
                let ts = &tangents[n];
                match ts.first() {
                    None => Constraint::Free,
                    Some(&t0) => {
                        if ts.iter().any(|&t| cross(t0, t).abs() > 1e-9) {
                            Constraint::Zero
                        } else {
                            Constraint::TangentialZero { tangent: t0 }
                        }
                    }
                }
            })
            .collect();

        let n_w = scalar.n_nodes();
        let mut reduce = vec![None; n_w + 2 * vector.n_nodes()];
        let mut next = 0;
        for (i, c) in scalar_constraints.iter().enumerate() {
            if *c == Constraint::Free {
                reduce[i] = Some((next, 1.0));
                next += 1;
            }
        }
        for (n, c) in vector_constraints.iter().enumerate() {
            let (ix, iy) = (n_w + 2 * n, n_w + 2 * n + 1);
            match *c {
                Constraint::Free => {
                    reduce[ix] = Some((next, 1.0));
                    reduce[iy] = Some((next + 1, 1.0));
                    next += 2;
                }
                Constraint::Zero => {}
                Constraint::TangentialZero { tangent } => {
                    // the only remaining unknown is the normal component
                    let normal = [tangent[1], -tangent[0]];
                    for (idx, coef) in [(ix, normal[0]), (iy, normal[1])] {
                        if coef != 0.0 {
                            reduce[idx] = Some((next, coef));
                        }
                    }
                    next += 1;
                }
            }
        }
        Ok(Self {
            k,
            scalar,
            vector,
            scalar_constraints,
            vector_constraints,
            reduce,
            n_reduced: next,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scalar(&self) -> &DofMap {
        &self.scalar
    }

    pub fn vector(&self) -> &DofMap {
        &self.vector
    }

    pub fn scalar_constraint(&self, node: usize) -> Constraint {
        self.scalar_constraints[node]
    }

    pub fn vector_constraint(&self, node: usize) -> Constraint {
        self.vector_constraints[node]
    }

    pub fn n_full(&self) -> usize {
        self.reduce.len()
    }

    pub fn n_reduced(&self) -> usize {
        self.n_reduced
    }

    pub fn n_scalar(&self) -> usize {
        self.scalar.n_nodes()
    }

    /// Where a full unknown lives in the reduced system, with its coefficient.
    pub fn reduction(&self, full: usize) -> Option<(usize, f64)> {
        self.reduce[full]
    }

    /// Full unknown indices of triangle `t`: deflection nodes, then
    /// rotation `(x, y)` pairs.
    pub fn element_dofs(&self, t: usize) -> Vec<usize> {
        let n_w = self.scalar.n_nodes();
        let mut out: Vec<usize> = self.scalar.element(t).to_vec();
        for &n in self.vector.element(t) {
            out.push(n_w + 2 * n);
            out.push(n_w + 2 * n + 1);
        }
        out
    }

    /// Maps reduced coefficients back to `(w, beta)` with beta interleaved.
    pub fn expand(&self, reduced: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let full: Vec<f64> = self
            .reduce
            .iter()
            .map(|r| r.map_or(0.0, |(i, c)| c * reduced[i]))
            .collect();
        let n_w = self.scalar.n_nodes();
        (full[..n_w].to_vec(), full[n_w..].to_vec())
    }

    /// Transpose of [`expand`](Self::expand): folds a full vector onto the reduced unknowns.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_reduced];
        for (v, r) in full.iter().zip(&self.reduce) {
            if let Some((i, c)) = r {
                out[*i] += c * v;
            }
        }
        out
    }
}
