//! Conforming triangulations with labeled boundaries.
//!
//! A [`Mesh`] is immutable once built. Refinement (see [`refine`]) always
//! produces a new mesh and records the parent of every child triangle so
//! that solutions can be transferred between nested meshes.
//!
//! Triangles are stored counterclockwise. The first vertex of each triangle
//! is its "newest vertex": the opposite edge (local edge 0) is the
//! refinement edge used by bisection.

mod geometry;
pub mod io;
pub mod refine;

use std::collections::HashMap;
use std::f64::consts::PI;

use thiserror::Error;

pub use geometry::{EdgeGeometry, ElementGeometry};

/// A point in the plane.
pub type Point = [f64; 2];

/// Tolerance on `|angle - pi|` used to decide whether a boundary vertex is
/// a geometric corner.
pub const CORNER_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("boundary edge ({0}, {1}) carries no label")]
    UnlabeledBoundary(usize, usize),
    #[error("triangle {0} is degenerate")]
    Degenerate(usize),
    #[error("triangle {0} is listed clockwise")]
    Clockwise(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boundary condition carried by a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryLabel {
    Clamped,
    SimplySupported,
    Free,
}

impl BoundaryLabel {
    /// Rank used at vertices shared by differently labeled edges: the
    /// higher rank wins (clamped > simply supported > free).
    pub fn precedence(self) -> u8 {
        match self {
            BoundaryLabel::Clamped => 2,
            BoundaryLabel::SimplySupported => 1,
            BoundaryLabel::Free => 0,
        }
    }

    pub fn code(self) -> char {
        match self {
            BoundaryLabel::Clamped => 'C',
            BoundaryLabel::SimplySupported => 'S',
            BoundaryLabel::Free => 'F',
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "C" => Some(BoundaryLabel::Clamped),
            "S" => Some(BoundaryLabel::SimplySupported),
            "F" => Some(BoundaryLabel::Free),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary(BoundaryLabel),
}

/// An edge of the triangulation.
#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints, ascending by global index.
    pub vertices: [usize; 2],
    /// `(triangle, local edge)` of the first adjacent triangle.
    pub first: (usize, usize),
    /// Second adjacent triangle for interior edges.
    pub second: Option<(usize, usize)>,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn label(&self) -> Option<BoundaryLabel> {
        match self.kind {
            EdgeKind::Boundary(l) => Some(l),
            EdgeKind::Interior => None,
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, EdgeKind::Boundary(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementKind {
    /// Midpoint quadrisection of every triangle.
    Red,
    /// Newest-vertex bisection of a marked set plus closure.
    Bisection,
}

/// How a mesh was derived from its coarser predecessor.
#[derive(Clone, Debug)]
pub struct Lineage {
    pub kind: RefinementKind,
    /// Parent triangle (in the coarse mesh) of every triangle.
    pub parent: Vec<usize>,
    pub coarse_vertices: usize,
    pub coarse_triangles: usize,
}

/// Whether clockwise input triangles are fixed up or rejected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Orientation {
    #[default]
    Reorient,
    Strict,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    tri_edges: Vec<[usize; 3]>,
    corners: Vec<usize>,
    generation: usize,
    lineage: Option<Lineage>,
}

/// Summary sizes of a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStats {
    pub h_max: f64,
    pub h_min: f64,
    pub n_triangles: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
}

impl MeshStats {
    /// Number of Lagrange nodes of degree `degree` on the mesh.
    pub fn lagrange_nodes(&self, degree: usize) -> usize {
        if degree == 0 {
            return self.n_triangles;
        }
        self.n_vertices
            + (degree - 1) * self.n_edges
            + (degree - 1) * (degree.saturating_sub(2)) / 2 * self.n_triangles
    }

    /// Unconstrained unknown count of the (k+1, k) deflection/rotation pair.
    pub fn dof_estimate(&self, k: usize) -> usize {
        self.lagrange_nodes(k + 1) + 2 * self.lagrange_nodes(k)
    }
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Builds a mesh from raw parts.
    ///
    /// Every boundary edge must appear in `labels`; labels on interior
    /// edges are rejected. Each triangle is rotated so that its longest
    /// edge becomes the refinement edge.
    pub fn new(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        labels: &[([usize; 2], BoundaryLabel)],
        orientation: Orientation,
    ) -> Result<Self, MeshError> {
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::Topology(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Degenerate(t));
            }
            let area = signed_area([vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            if !area.is_finite() || area == 0.0 {
                return Err(MeshError::Degenerate(t));
            }
            if area < 0.0 {
                match orientation {
                    Orientation::Strict => return Err(MeshError::Clockwise(t)),
                    Orientation::Reorient => tri.swap(1, 2),
                }
            }
            *tri = rotate_longest_first(&vertices, *tri);
        }
        if vertices
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(MeshError::Topology("non-finite vertex coordinate".into()));
        }
        let mut map = HashMap::with_capacity(labels.len());
        for &([a, b], label) in labels {
            if map.insert(edge_key(a, b), label).is_some() {
                return Err(MeshError::Topology(format!(
                    "boundary edge ({a}, {b}) labeled twice"
                )));
            }
        }
        Self::build(vertices, triangles, map, 0, None)
    }

    /// Builds derived topology without touching triangle vertex order.
    pub(crate) fn build(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        labels: HashMap<(usize, usize), BoundaryLabel>,
        generation: usize,
        lineage: Option<Lineage>,
    ) -> Result<Self, MeshError> {
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 2);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for (local, slot) in te.iter_mut().enumerate() {
                let a = tri[(local + 1) % 3];
                let b = tri[(local + 2) % 3];
                let key = edge_key(a, b);
                match index.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.second.is_some() {
                            return Err(MeshError::Topology(format!(
                                "edge ({}, {}) shared by more than two triangles",
                                key.0, key.1
                            )));
                        }
                        // Conforming + consistent orientation: the neighbor
                        // traverses the shared edge in the opposite direction.
                        let (ft, fl) = edge.first;
                        let ftri = triangles[ft];
                        if ftri[(fl + 1) % 3] == a {
                            return Err(MeshError::Topology(format!(
                                "triangles {ft} and {t} overlap along edge ({}, {})",
                                key.0, key.1
                            )));
                        }
                        edge.second = Some((t, local));
                        edge.kind = EdgeKind::Interior;
                        *slot = e;
                    }
                    None => {
                        let e = edges.len();
                        index.insert(key, e);
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            first: (t, local),
                            second: None,
                            kind: EdgeKind::Interior,
                        });
                        *slot = e;
                    }
                }
            }
            tri_edges.push(te);
        }
        for edge in edges.iter_mut() {
            let key = (edge.vertices[0], edge.vertices[1]);
            let label = labels.get(&key).copied();
            if edge.second.is_none() {
                match label {
                    Some(l) => edge.kind = EdgeKind::Boundary(l),
                    None => return Err(MeshError::UnlabeledBoundary(key.0, key.1)),
                }
            } else if label.is_some() {
                return Err(MeshError::Topology(format!(
                    "interior edge ({}, {}) carries a boundary label",
                    key.0, key.1
                )));
            }
        }
        if labels.len() != edges.iter().filter(|e| e.is_boundary()).count() {
            return Err(MeshError::Topology(
                "boundary label refers to an edge that is not in the mesh".into(),
            ));
        }
        let mut mesh = Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            corners: Vec::new(),
            generation,
            lineage,
        };
        mesh.corners = mesh.detect_corners();
        Ok(mesh)
    }

    /// Structured mesh of `[0,1]^2` with `n x n` cells, each split along the
    /// diagonal from lower-left to upper-right. `label` gives the label of
    /// the bottom, right, top and left sides in that order.
    pub fn unit_square(n: usize, labels: [BoundaryLabel; 4]) -> Self {
        Self::rectangle([0.0, 0.0], [1.0, 1.0], n, n, labels)
    }

    pub fn rectangle(
        lo: Point,
        hi: Point,
        nx: usize,
        ny: usize,
        labels: [BoundaryLabel; 4],
    ) -> Self {
        assert!(nx > 0 && ny > 0);
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
                ]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut bl = Vec::new();
        for i in 0..nx {
            bl.push(([id(i, 0), id(i + 1, 0)], labels[0]));
            bl.push(([id(i, ny), id(i + 1, ny)], labels[2]));
        }
        for j in 0..ny {
            bl.push(([id(nx, j), id(nx, j + 1)], labels[1]));
            bl.push(([id(0, j), id(0, j + 1)], labels[3]));
        }
        Self::new(vertices, triangles, &bl, Orientation::Strict).expect("structured mesh is valid")
    }

    /// L-shaped domain `[0,1]^2 \ (1/2,1]^2` with every boundary edge
    /// labeled `label`; each of the three quarter squares is split into
    /// `n x n` cells.
    pub fn l_shape(n: usize, label: BoundaryLabel) -> Self {
        assert!(n > 0);
        let m = 2 * n;
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut vertices = Vec::new();
        let inside = |i: usize, j: usize| i <= n || j <= n;
        for j in 0..=m {
            for i in 0..=m {
                if inside(i, j) {
                    ids.insert((i, j), vertices.len());
                    vertices.push([i as f64 / m as f64, j as f64 / m as f64]);
                }
            }
        }
        let mut triangles = Vec::new();
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for j in 0..m {
            for i in 0..m {
                if i >= n && j >= n {
                    continue;
                }
                let (a, b, c, d) = (
                    ids[&(i, j)],
                    ids[&(i + 1, j)],
                    ids[&(i + 1, j + 1)],
                    ids[&(i, j + 1)],
                );
                for tri in [[a, b, c], [a, c, d]] {
                    for l in 0..3 {
                        *edge_count
                            .entry(edge_key(tri[l], tri[(l + 1) % 3]))
                            .or_default() += 1;
                    }
                    triangles.push(tri);
                }
            }
        }
        let mut bl: Vec<([usize; 2], BoundaryLabel)> = edge_count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|((a, b), _)| ([a, b], label))
            .collect();
        bl.sort();
        Self::new(vertices, triangles, &bl, Orientation::Strict).expect("L-shaped mesh is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge ids of a triangle; local edge `i` is opposite vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Vertices where two free edges meet at an angle different from pi.
    pub fn corner_set(&self) -> &[usize] {
        &self.corners
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn lineage(&self) -> Option<&Lineage> {
        self.lineage.as_ref()
    }

    pub fn geometry(&self, t: usize) -> ElementGeometry {
        let [a, b, c] = self.triangles[t];
        ElementGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Element diameter (longest edge).
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn stats(&self) -> MeshStats {
        let (mut h_max, mut h_min) = (0.0f64, f64::INFINITY);
        for t in 0..self.n_triangles() {
            let h = self.diameter(t);
            h_max = h_max.max(h);
            h_min = h_min.min(h);
        }
        MeshStats {
            h_max,
            h_min,
            n_triangles: self.n_triangles(),
            n_vertices: self.n_vertices(),
            n_edges: self.edges.len(),
        }
    }

    pub fn has_label(&self, label: BoundaryLabel) -> bool {
        self.edges.iter().any(|e| e.label() == Some(label))
    }

    /// Interior angle of the domain at every vertex (`2 pi` inside).
    pub fn vertex_angles(&self) -> Vec<f64> {
        let mut angle = vec![0.0; self.n_vertices()];
        for tri in &self.triangles {
            let p = tri.map(|v| self.vertices[v]);
            for i in 0..3 {
                let (o, a, b) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
                let u = [a[0] - o[0], a[1] - o[1]];
                let v = [b[0] - o[0], b[1] - o[1]];
                let cross = u[0] * v[1] - u[1] * v[0];
                let dot = u[0] * v[0] + u[1] * v[1];
                angle[tri[i]] += cross.atan2(dot);
            }
        }
        angle
    }

    /// Boundary edges incident to each vertex.
    fn boundary_incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_vertices()];
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.is_boundary() {
                inc[edge.vertices[0]].push(e);
                inc[edge.vertices[1]].push(e);
            }
        }
        inc
    }

    fn detect_corners(&self) -> Vec<usize> {
        let angles = self.vertex_angles();
        self.boundary_incidence()
            .iter()
            .enumerate()
            .filter(|(v, inc)| {
                inc.len() == 2
                    && inc
                        .iter()
                        .all(|&e| self.edges[e].label() == Some(BoundaryLabel::Free))
                    && (angles[*v] - PI).abs() > CORNER_ANGLE_TOL
            })
            .map(|(v, _)| v)
            .collect()
    }

    /// Number of maximal straight pieces of the boundary.
    pub fn boundary_segments(&self) -> usize {
        let angles = self.vertex_angles();
        self.boundary_incidence()
            .iter()
            .enumerate()
            .filter(|(v, inc)| !inc.is_empty() && (angles[*v] - PI).abs() > CORNER_ANGLE_TOL)
            .count()
    }

    /// Checks the conformity and orientation invariants. Used by tests and
    /// after refinement in debug builds.
    pub fn audit(&self) -> Result<(), MeshError> {
        for t in 0..self.n_triangles() {
            if self.area(t) <= 0.0 {
                return Err(MeshError::Degenerate(t));
            }
        }
        let mut uses = vec![0usize; self.edges.len()];
        for te in &self.tri_edges {
            for &e in te {
                uses[e] += 1;
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let expected = if edge.is_boundary() { 1 } else { 2 };
            if uses[e] != expected || edge.second.is_some() == edge.is_boundary() {
                return Err(MeshError::Topology(format!("edge {e} is not conforming")));
            }
        }
        Ok(())
    }

    /// Triangle containing `x` (closed), if any.
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.n_triangles()).find(|&t| {
            let xi = self.geometry(t).to_reference(x);
            let tol = 1e-12;
            xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol
        })
    }

    /// Minimum interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for tri in &self.triangles {
            let p = tri.map(|v| self.vertices[v]);
            for i in 0..3 {
                let (o, a, b) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
                let u = [a[0] - o[0], a[1] - o[1]];
                let v = [b[0] - o[0], b[1] - o[1]];
                let ang = (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);
                min = min.min(ang);
            }
        }
        min
    }
}

fn rotate_longest_first(vertices: &[Point], tri: [usize; 3]) -> [usize; 3] {
    let p = tri.map(|v| vertices[v]);
    let opposite = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
    let mut best = 0;
    for i in 1..3 {
        if opposite[i] > opposite[best] * (1.0 + 1e-12) {
            best = i;
        }
    }
    [tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryLabel::*;

    fn two_triangle_square(labels: [BoundaryLabel; 4]) -> Mesh {
        Mesh::unit_square(1, labels)
    }

    #[test]
    fn smallest_square_topology() {
        let m = two_triangle_square([Clamped; 4]);
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.edges().iter().filter(|e| e.is_boundary()).count(), 4);
        assert_eq!(m.edges().iter().filter(|e| !e.is_boundary()).count(), 1);
        assert!(m.corner_set().is_empty());
        m.audit().unwrap();
    }

    #[test]
    fn free_corners_detected() {
        // left clamped, others free
        let m = two_triangle_square([Free, Free, Free, Clamped]);
        let mut corners: Vec<Point> = m.corner_set().iter().map(|&v| m.vertices()[v]).collect();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(corners, vec![[1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn stats_of_reference_shapes() {
        let m = two_triangle_square([Clamped; 4]);
        assert!((m.stats().h_max - 2f64.sqrt()).abs() < 1e-15);
        let tri = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            &[([0, 1], Clamped), ([1, 2], Free), ([2, 0], Free)],
            Orientation::Strict,
        )
        .unwrap();
        assert!((tri.stats().h_max - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clockwise_input() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let labels = [([0, 1], Clamped), ([1, 2], Clamped), ([2, 0], Clamped)];
        let err = Mesh::new(verts.clone(), vec![[0, 2, 1]], &labels, Orientation::Strict);
        assert!(matches!(err, Err(MeshError::Clockwise(0))));
        let m = Mesh::new(verts, vec![[0, 2, 1]], &labels, Orientation::Reorient).unwrap();
        assert!(m.area(0) > 0.0);
    }

    #[test]
    fn unlabeled_boundary_rejected() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err = Mesh::new(
            verts,
            vec![[0, 1, 2]],
            &[([0, 1], Clamped)],
            Orientation::Strict,
        );
        assert!(matches!(err, Err(MeshError::UnlabeledBoundary(..))));
    }

    #[test]
    fn non_conforming_rejected() {
        // three triangles sharing one edge
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]];
        let err = Mesh::new(
            verts,
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
            &[],
            Orientation::Strict,
        );
        assert!(matches!(err, Err(MeshError::Topology(_))));
    }

    #[test]
    fn l_shape_has_six_segments_and_reentrant_corner() {
        let m = Mesh::l_shape(1, Clamped);
        assert_eq!(m.boundary_segments(), 6);
        assert!((m.total_area() - 0.75).abs() < 1e-15);
        let angles = m.vertex_angles();
        let v = m.vertices().iter().position(|p| *p == [0.5, 0.5]).unwrap();
        assert!((angles[v] - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn dof_estimate_counts_lagrange_nodes() {
        let s = two_triangle_square([Clamped; 4]).stats();
        assert_eq!(s.lagrange_nodes(2), 9);
        assert_eq!(s.lagrange_nodes(3), 16);
        assert_eq!(s.dof_estimate(1), 9 + 8);
    }
}
