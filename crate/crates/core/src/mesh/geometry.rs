use super::Point;

/// Affine map from the reference triangle `(0,0), (1,0), (0,1)` onto a
/// mesh triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    /// `jac[r][c] = d x_r / d xi_c`.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
    /// Longest edge.
    pub diameter: f64,
}

/// Outward normal and counterclockwise tangent of one triangle edge.
#[derive(Clone, Copy, Debug)]
pub struct EdgeGeometry {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
}

impl EdgeGeometry {
    pub fn point(&self, t: f64) -> Point {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }
}

pub(crate) const REFERENCE_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let jac = [
            [p1[0] - p0[0], p2[0] - p0[0]],
            [p1[1] - p0[1], p2[1] - p0[1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let d = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
        let diameter = d(p0, p1).max(d(p1, p2)).max(d(p2, p0));
        Self {
            vertices,
            jac,
            inv,
            det,
            diameter,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    pub fn to_physical(&self, xi: Point) -> Point {
        let p0 = self.vertices[0];
        [
            p0[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            p0[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> Point {
        let d = [x[0] - self.vertices[0][0], x[1] - self.vertices[0][1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient (`J^{-T} g`).
    #[inline]
    pub fn gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    /// Physical Hessian `(xx, xy, yy)` from a reference Hessian.
    #[inline]
    pub fn hessian(&self, h: [f64; 3]) -> [f64; 3] {
        let r = [[h[0], h[1]], [h[1], h[2]]];
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        s += self.inv[a][i] * r[a][b] * self.inv[b][j];
                    }
                }
                *o = s;
            }
        }
        [out[0][0], out[0][1], out[1][1]]
    }

    /// Local edge `i` runs from vertex `i+1` to vertex `i+2` (mod 3), which
    /// is counterclockwise for a positively oriented triangle.
    pub fn edge(&self, local: usize) -> EdgeGeometry {
        let start = self.vertices[(local + 1) % 3];
        let end = self.vertices[(local + 2) % 3];
        let length = (end[0] - start[0]).hypot(end[1] - start[1]);
        let tangent = [(end[0] - start[0]) / length, (end[1] - start[1]) / length];
        EdgeGeometry {
            start,
            end,
            length,
            tangent,
            normal: [tangent[1], -tangent[0]],
        }
    }

    /// Reference coordinates of the point at parameter `t` along local edge `local`.
    pub fn reference_edge_point(local: usize, t: f64) -> Point {
        let a = REFERENCE_VERTICES[(local + 1) % 3];
        let b = REFERENCE_VERTICES[(local + 2) % 3];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_normals() {
        let g = ElementGeometry::new([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]);
        let x = g.to_physical([0.3, 0.25]);
        let xi = g.to_reference(x);
        assert!((xi[0] - 0.3).abs() < 1e-14 && (xi[1] - 0.25).abs() < 1e-14);
        for l in 0..3 {
            let e = g.edge(l);
            // outward: points away from the opposite vertex
            let opp = g.vertices[l];
            let mid = e.point(0.5);
            let d = [mid[0] - opp[0], mid[1] - opp[1]];
            assert!(d[0] * e.normal[0] + d[1] * e.normal[1] > 0.0);
            let r = ElementGeometry::reference_edge_point(l, 0.4);
            let p = g.to_physical(r);
            let q = e.point(0.4);
            assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
        }
    }
}
