//! Plain-text mesh format.
//!
//! ```text
//! $Nodes
//! <n>
//! <id> <x> <y>
//! $Triangles
//! <m>
//! <id> <v1> <v2> <v3>
//! $BoundaryEdges
//! <b>
//! <id> <v1> <v2> <C|S|F>
//! ```
//!
//! Ids are 1-based and consecutive. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryLabel, Mesh, MeshError, Orientation};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Some((i + 1, line));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), MeshError> {
        self.next().ok_or_else(|| MeshError::Parse {
            line: 0,
            message: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn section_header(lines: &mut Lines, name: &str) -> Result<usize, MeshError> {
    let (ln, head) = lines.expect(name)?;
    if head != name {
        return Err(parse_err(ln, format!("expected `{name}`, found `{head}`")));
    }
    let (ln, count) = lines.expect("a count")?;
    count
        .parse()
        .map_err(|_| parse_err(ln, format!("invalid count `{count}`")))
}

fn fields(line: &str, ln: usize, n: usize, id: usize) -> Result<Vec<&str>, MeshError> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != n {
        return Err(parse_err(
            ln,
            format!("expected {n} fields, found {}", f.len()),
        ));
    }
    if f[0].parse::<usize>().ok() != Some(id) {
        return Err(parse_err(ln, format!("expected id {id}, found `{}`", f[0])));
    }
    Ok(f)
}

fn vertex_ref(s: &str, ln: usize, n: usize) -> Result<usize, MeshError> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 && v <= n => Ok(v - 1),
        _ => Err(parse_err(ln, format!("invalid vertex reference `{s}`"))),
    }
}

pub fn parse_mesh(text: &str, orientation: Orientation) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let n = section_header(&mut lines, "$Nodes")?;
    let mut vertices = Vec::with_capacity(n);
    for id in 1..=n {
        let (ln, line) = lines.expect("a node")?;
        let f = fields(line, ln, 3, id)?;
        let x: f64 = f[1]
            .parse()
            .map_err(|_| parse_err(ln, "invalid x coordinate"))?;
        let y: f64 = f[2]
            .parse()
            .map_err(|_| parse_err(ln, "invalid y coordinate"))?;
        vertices.push([x, y]);
    }
    let m = section_header(&mut lines, "$Triangles")?;
    let mut triangles = Vec::with_capacity(m);
    for id in 1..=m {
        let (ln, line) = lines.expect("a triangle")?;
        let f = fields(line, ln, 4, id)?;
        triangles.push([
            vertex_ref(f[1], ln, n)?,
            vertex_ref(f[2], ln, n)?,
            vertex_ref(f[3], ln, n)?,
        ]);
    }
    let b = section_header(&mut lines, "$BoundaryEdges")?;
    let mut labels = Vec::with_capacity(b);
    for id in 1..=b {
        let (ln, line) = lines.expect("a boundary edge")?;
        let f = fields(line, ln, 4, id)?;
        let label = BoundaryLabel::from_code(f[3])
            .ok_or_else(|| parse_err(ln, format!("unknown boundary label `{}`", f[3])))?;
        labels.push(([vertex_ref(f[1], ln, n)?, vertex_ref(f[2], ln, n)?], label));
    }
    if let Some((ln, line)) = lines.next() {
        return Err(parse_err(ln, format!("trailing content `{line}`")));
    }
    Mesh::new(vertices, triangles, &labels, orientation)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    load_mesh_with(path, Orientation::Reorient)
}

pub fn load_mesh_with(path: impl AsRef<Path>, orientation: Orientation) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, orientation)
}

/// Serializes a mesh; coordinates use the shortest round-trip representation.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "$Nodes\n{}", mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(out, "{} {:?} {:?}", i + 1, p[0], p[1]);
    }
    let _ = writeln!(out, "$Triangles\n{}", mesh.n_triangles());
    for (i, t) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1);
    }
    let boundary: Vec<_> = mesh.edges().iter().filter(|e| e.is_boundary()).collect();
    let _ = writeln!(out, "$BoundaryEdges\n{}", boundary.len());
    for (i, e) in boundary.iter().enumerate() {
        let label = e.label().expect("boundary edge");
        let _ = writeln!(
            out,
            "{} {} {} {}",
            i + 1,
            e.vertices[0] + 1,
            e.vertices[1] + 1,
            label.code()
        );
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}
