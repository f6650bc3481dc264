//! Computable inverse-inequality constants and the automatic choice of the
//! stabilization parameters derived from them.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::kernels::KernelContext;
use super::material::MaterialParams;
use super::AssemblyError;
use crate::mesh::{BoundaryLabel, Mesh};

/// Relative threshold below which an eigenvalue of `a_K` counts as kernel.
const KERNEL_TOL: f64 = 1e-10;
/// Dimension of the rigid motions annihilated by `a_K`.
const RIGID_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseConstants {
    /// `+inf` for `k = 1`, where the second-order operator vanishes.
    pub c_i: f64,
    /// `+inf` when the mesh has no free edge.
    pub c_i_prime: f64,
}

/// Largest eigenvalue of `b x = lambda a x` on the complement of the rigid
/// kernel of `a`.
fn deflated_max_eigenvalue(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    t: usize,
) -> Result<f64, AssemblyError> {
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > KERNEL_TOL * top)
        .collect();
    if eig.eigenvalues.len() - keep.len() != RIGID_DIM {
        return Err(AssemblyError::DegenerateElement(t));
    }
    let n = a.nrows();
    let mut p = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt().recip();
        for r in 0..n {
            p[(r, c)] = eig.eigenvectors[(r, i)] * scale;
        }
    }
    let reduced = p.transpose() * b * &p;
    let sym = 0.5 * (&reduced + reduced.transpose());
    Ok(SymmetricEigen::new(sym).eigenvalues.max().max(0.0))
}

/// Elementwise generalized eigenvalue estimates of `C_I` and `C_I'`.
pub fn estimate_inverse_constants(
    mesh: &Mesh,
    k: usize,
    mat: &MaterialParams,
) -> Result<InverseConstants, AssemblyError> {
    let ctx = KernelContext::new(k, *mat, 1.0, 1.0);
    let per_element: Vec<Result<(f64, f64), AssemblyError>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let geom = mesh.geometry(t);
            let (a, ll) = ctx.rotation_forms(&geom);
            let lam = if k == 1 {
                0.0
            } else {
                deflated_max_eigenvalue(&a, &ll, t)?
            };
            let mut edge_gram: Option<DMatrix<f64>> = None;
            for (local, &e) in mesh.triangle_edges(t).iter().enumerate() {
                if mesh.edges()[e].label() == Some(BoundaryLabel::Free) {
                    let g = ctx.twisting_gram(&geom, local);
                    edge_gram = Some(match edge_gram {
                        Some(acc) => acc + g,
                        None => g,
                    });
                }
            }
            let lam_edge = match edge_gram {
                Some(g) => deflated_max_eigenvalue(&a, &g, t)?,
                None => 0.0,
            };
            Ok((lam, lam_edge))
        })
        .collect();
    let (mut lam, mut lam_edge) = (0.0f64, 0.0f64);
    for r in per_element {
        let (a, b) = r?;
        lam = lam.max(a);
        lam_edge = lam_edge.max(b);
    }
    Ok(InverseConstants {
        c_i: if lam > 0.0 { 1.0 / lam } else { f64::INFINITY },
        c_i_prime: if lam_edge > 0.0 {
            1.0 / lam_edge
        } else {
            f64::INFINITY
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::refine::uniform_refine;
    use rand::{Rng, SeedableRng};
    use BoundaryLabel::*;

    fn square() -> Mesh {
        Mesh::unit_square(2, [Free, Free, Free, Clamped])
    }

    #[test]
    fn linear_case() {
        let c = estimate_inverse_constants(&square(), 1, &MaterialParams::default()).unwrap();
        assert!(c.c_i.is_infinite());
        assert!(c.c_i_prime.is_finite() && c.c_i_prime > 0.0);
    }

    #[test]
    fn refinement_invariance() {
        let mat = MaterialParams::default();
        let m = square();
        let fine = uniform_refine(&m);
        for k in 2..=3 {
            let a = estimate_inverse_constants(&m, k, &mat).unwrap();
            let b = estimate_inverse_constants(&fine, k, &mat).unwrap();
            assert!(((a.c_i - b.c_i) / a.c_i).abs() < 0.01);
            assert!(((a.c_i_prime - b.c_i_prime) / a.c_i_prime).abs() < 0.01);
        }
    }

    #[test]
    fn no_free_edges() {
        let m = Mesh::unit_square(2, [Clamped; 4]);
        let c = estimate_inverse_constants(&m, 2, &MaterialParams::default()).unwrap();
        assert!(c.c_i.is_finite());
        assert!(c.c_i_prime.is_infinite());
    }

    #[test]
    fn inverse_inequality_holds_for_random_rotations() {
        let mat = MaterialParams::default();
        let m = square();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for k in 2..=3 {
            let c = estimate_inverse_constants(&m, k, &mat).unwrap();
            let ctx = KernelContext::new(k, mat, 1.0, 1.0);
            for t in 0..m.n_triangles() {
                let (a, ll) = ctx.rotation_forms(&m.geometry(t));
                for _ in 0..100 {
                    let x =
                        nalgebra::DVector::from_fn(a.nrows(), |_, _| rng.random_range(-1.0..1.0));
                    let lhs = (x.transpose() * &ll * &x)[(0, 0)];
                    let rhs = (x.transpose() * &a * &x)[(0, 0)];
                    assert!(lhs <= (1.0 / c.c_i + 1e-10) * rhs + 1e-12);
                }
            }
        }
    }
}
