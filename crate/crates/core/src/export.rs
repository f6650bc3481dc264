//! CSV tables, JSON metadata and legacy VTK output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::adaptive::AdaptiveStep;
use crate::estimator::IndicatorSet;
use crate::shear::ShearField;
use crate::solve::Solution;
use crate::study::{StudyResult, RATE_COLUMNS};
use crate::Result;

/// Scientific notation with 16 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.15e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

const VALUE_COLUMNS: [&str; 10] = [
    "eta",
    "triple",
    "norm_2h",
    "seminorm_h",
    "beta_h1",
    "w_h1",
    "w_l2",
    "shear_neg",
    "ref_triple",
    "h_max",
];

/// Header and one row per level.
pub fn write_study_csv<W: Write>(result: &StudyResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = vec!["level".into(), "n_dof".into(), "n_triangles".into()];
    header.extend(VALUE_COLUMNS.iter().map(|c| c.to_string()));
    header.extend(RATE_COLUMNS.iter().map(|c| format!("rate_{c}")));
    w.write_record(&header)?;
    for row in &result.rows {
        let mut rec = vec![
            row.level.to_string(),
            row.n_dof.to_string(),
            row.n_triangles.to_string(),
        ];
        rec.extend(VALUE_COLUMNS.iter().map(|c| opt(row.column(c))));
        rec.extend(
            RATE_COLUMNS
                .iter()
                .map(|c| opt(result.row_rate(c, row.level))),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_adaptive_csv<W: Write>(steps: &[AdaptiveStep], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "n_dof",
        "n_triangles",
        "marked",
        "h_min",
        "h_max",
        "eta",
    ])?;
    for (i, s) in steps.iter().enumerate() {
        let st = s.mesh.stats();
        w.write_record([
            i.to_string(),
            s.n_dofs().to_string(),
            s.mesh.n_triangles().to_string(),
            s.marked.to_string(),
            fmt_float(st.h_min),
            fmt_float(st.h_max),
            fmt_float(s.eta()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Vertex values of a solution.
pub fn write_solution_csv<W: Write>(sol: &Solution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex", "x", "y", "w", "beta_x", "beta_y"])?;
    let rot = sol.vertex_rotation();
    for (i, (p, d)) in sol
        .mesh
        .vertices()
        .iter()
        .zip(sol.vertex_deflection())
        .enumerate()
    {
        w.write_record([
            i.to_string(),
            fmt_float(p[0]),
            fmt_float(p[1]),
            fmt_float(d),
            fmt_float(rot[i][0]),
            fmt_float(rot[i][1]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Run metadata written next to a table.
#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata<P: Serialize> {
    pub version: String,
    pub timestamp_unix: u64,
    pub params: P,
}

impl<P: Serialize> RunMetadata<P> {
    pub fn new(params: P) -> Self {
        Self {
            version: format!("kplate-{}", env!("CARGO_PKG_VERSION")),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            params,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Legacy ASCII VTK unstructured grid: `w_h` and `beta_h` at the vertices,
/// `eta_K` and `|q_h|` (at the centroid) per triangle.
pub fn vtk_string(sol: &Solution, shear: &ShearField, indicators: Option<&IndicatorSet>) -> String {
    let mesh = &sol.mesh;
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "kplate solution k={}", sol.k());
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", fmt_float(p[0]), fmt_float(p[1]));
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(s, "CELLS {} {}", nt, 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
    let _ = writeln!(s, "SCALARS w_h double 1\nLOOKUP_TABLE default");
    for w in sol.vertex_deflection() {
        let _ = writeln!(s, "{}", fmt_float(w));
    }
    let _ = writeln!(s, "VECTORS beta_h double");
    for b in sol.vertex_rotation() {
        let _ = writeln!(s, "{} {} 0", fmt_float(b[0]), fmt_float(b[1]));
    }
    let _ = writeln!(s, "CELL_DATA {nt}");
    if let Some(ind) = indicators {
        let _ = writeln!(s, "SCALARS eta_K double 1\nLOOKUP_TABLE default");
        for t in 0..nt {
            let _ = writeln!(s, "{}", fmt_float(ind.eta_k(t)));
        }
    }
    let _ = writeln!(s, "SCALARS q_h_magnitude double 1\nLOOKUP_TABLE default");
    for t in 0..nt {
        let q = shear.value(t, [1.0 / 3.0, 1.0 / 3.0]);
        let _ = writeln!(s, "{}", fmt_float(q[0].hypot(q[1])));
    }
    s
}

pub fn write_vtk(
    path: impl AsRef<Path>,
    sol: &Solution,
    shear: &ShearField,
    indicators: Option<&IndicatorSet>,
) -> Result<()> {
    std::fs::write(path, vtk_string(sol, shear, indicators))?;
    Ok(())
}
