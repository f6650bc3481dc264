//! Red (midpoint) refinement and newest-vertex bisection.

use std::collections::{BTreeSet, HashMap};

use super::{edge_key, rotate_longest_first, Lineage, Mesh, Point, RefinementKind};

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Splits every triangle into four by connecting the edge midpoints.
///
/// The midpoint of edge `e` becomes vertex `n_vertices + e`; child `i` of
/// triangle `t` is triangle `4 t + i`, with child 3 the middle triangle.
pub fn uniform_refine(mesh: &Mesh) -> Mesh {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend(
        mesh.edges
            .iter()
            .map(|e| midpoint(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]])),
    );
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    let mut parent = Vec::with_capacity(4 * mesh.n_triangles());
    for (t, &[v0, v1, v2]) in mesh.triangles.iter().enumerate() {
        let [e0, e1, e2] = mesh.tri_edges[t];
        let (m0, m1, m2) = (nv + e0, nv + e1, nv + e2);
        for child in [[v0, m2, m1], [m2, v1, m0], [m1, m0, v2], [m0, m1, m2]] {
            triangles.push(rotate_longest_first(&vertices, child));
            parent.push(t);
        }
    }
    let mut labels = HashMap::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        if let Some(l) = edge.label() {
            let [a, b] = edge.vertices;
            labels.insert(edge_key(a, nv + e), l);
            labels.insert(edge_key(nv + e, b), l);
        }
    }
    let lineage = Lineage {
        kind: RefinementKind::Red,
        parent,
        coarse_vertices: nv,
        coarse_triangles: mesh.n_triangles(),
    };
    let fine = Mesh::build(
        vertices,
        triangles,
        labels,
        mesh.generation + 1,
        Some(lineage),
    )
    .expect("red refinement preserves conformity");
    debug_assert!(fine.audit().is_ok());
    fine
}

/// Newest-vertex bisection of the marked triangles, followed by the
/// closure needed to keep the mesh conforming.
///
/// Every marked triangle is bisected at least once. Unmarked triangles are
/// only split when a neighbor's refinement forces it.
pub fn bisect_marked(mesh: &Mesh, marked: &BTreeSet<usize>) -> Mesh {
    let n_edges = mesh.edges.len();
    let mut edge_marked = vec![false; n_edges];
    let mut queue = Vec::new();
    for &t in marked {
        let e = mesh.tri_edges[t][0];
        if !edge_marked[e] {
            edge_marked[e] = true;
            queue.push(e);
        }
    }
    // closure: a triangle with any marked edge must have its refinement edge marked
    while let Some(e) = queue.pop() {
        let edge = &mesh.edges[e];
        for (t, _) in std::iter::once(edge.first).chain(edge.second) {
            let r = mesh.tri_edges[t][0];
            if !edge_marked[r] {
                edge_marked[r] = true;
                queue.push(r);
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge_marked[e] {
            let [a, b] = edge.vertices;
            mid.insert((a, b), vertices.len());
            vertices.push(midpoint(mesh.vertices[a], mesh.vertices[b]));
        }
    }

    let mut triangles = Vec::with_capacity(mesh.n_triangles() + 2 * mid.len());
    let mut parent = Vec::with_capacity(triangles.capacity());
    for (t, &tri) in mesh.triangles.iter().enumerate() {
        split(tri, &mid, &mut |child| {
            triangles.push(child);
            parent.push(t);
        });
    }

    let mut labels = HashMap::new();
    for edge in &mesh.edges {
        if let Some(l) = edge.label() {
            let [a, b] = edge.vertices;
            match mid.get(&(a, b)) {
                Some(&m) => {
                    labels.insert(edge_key(a, m), l);
                    labels.insert(edge_key(m, b), l);
                }
                None => {
                    labels.insert((a, b), l);
                }
            }
        }
    }
    let lineage = Lineage {
        kind: RefinementKind::Bisection,
        parent,
        coarse_vertices: mesh.n_vertices(),
        coarse_triangles: mesh.n_triangles(),
    };
    let fine = Mesh::build(
        vertices,
        triangles,
        labels,
        mesh.generation + 1,
        Some(lineage),
    )
    .expect("closure keeps bisection conforming");
    debug_assert!(fine.audit().is_ok());
    fine
}

fn split(
    [v0, v1, v2]: [usize; 3],
    mid: &HashMap<(usize, usize), usize>,
    emit: &mut dyn FnMut([usize; 3]),
) {
    match mid.get(&edge_key(v1, v2)) {
        Some(&m) => {
            split([m, v0, v1], mid, emit);
            split([m, v2, v0], mid, emit);
        }
        None => emit([v0, v1, v2]),
    }
}
