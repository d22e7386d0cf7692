//! Exact P1 assembly of mass, stiffness, convection and boundary operators.
//!
//! Coefficients are interpolated linearly per element and every integrand of
//! total degree at most three is integrated in closed form through the
//! barycentric moment formula
//! `int_K l1^a l2^b l3^c = 2|K| a! b! c! / (a + b + c + 2)!`.

use std::sync::Arc;

use rayon::prelude::*;

use super::sparse::{Pattern, SparseMatrix};
use crate::mesh::Mesh;
use crate::scalar::{dot2, Scalar};

/// `int_K l_c l_a l_b` divided by `|K|`.
#[inline]
fn cubic_moment<T: Scalar>(c: usize, a: usize, b: usize) -> T {
    if a == b && b == c {
        T::of(1.0 / 10.0)
    } else if a == b || b == c || a == c {
        T::of(1.0 / 30.0)
    } else {
        T::of(1.0 / 60.0)
    }
}

/// `int_K l_a l_b` divided by `|K|`.
#[inline]
fn quadratic_moment<T: Scalar>(a: usize, b: usize) -> T {
    if a == b {
        T::of(1.0 / 6.0)
    } else {
        T::of(1.0 / 12.0)
    }
}

/// Fills `m` row by row; `kernel(k, a, b)` is the contribution of triangle
/// `k` to (test function at local vertex `a`, trial function at local `b`).
///
/// Rows are independent, so the result does not depend on the thread count.
fn fill_rows<T, F>(mesh: &Mesh<T>, m: &mut SparseMatrix<T>, kernel: F)
where
    T: Scalar,
    F: Fn(usize, usize, usize) -> T + Sync,
{
    let pattern = Arc::clone(m.pattern());
    let mut rows = m.rows_mut();
    rows.par_iter_mut().with_min_len(64).for_each(|(j, base, row)| {
        row.iter_mut().for_each(|v| *v = T::zero());
        for &(k, a) in mesh.star(*j) {
            let slots = pattern.tri_slots(k);
            for b in 0..3 {
                row[slots[a][b] - *base] += kernel(k, a, b);
            }
        }
    });
}

fn element_means<T: Scalar>(mesh: &Mesh<T>, nodal: &[T]) -> Vec<T> {
    let third = T::one() / T::of(3.0);
    mesh.triangles()
        .iter()
        .map(|t| (nodal[t.nodes[0]] + nodal[t.nodes[1]] + nodal[t.nodes[2]]) * third)
        .collect()
}

/// Mass matrix with a linear nodal weight and an optional per-element factor:
/// `A_ji = sum_K s_K int_K c phi_i phi_j`.
pub fn fill_weighted_mass<T: Scalar>(
    mesh: &Mesh<T>,
    m: &mut SparseMatrix<T>,
    nodal: Option<&[T]>,
    element: Option<&[T]>,
) {
    let tris = mesh.triangles();
    fill_rows(mesh, m, |k, a, b| {
        let t = &tris[k];
        let s = element.map_or(T::one(), |e| e[k]);
        let integral = match nodal {
            Some(c) => (0..3).map(|v| c[t.nodes[v]] * cubic_moment::<T>(v, a, b)).sum::<T>(),
            None => quadratic_moment(a, b),
        };
        s * t.area * integral
    });
    m.set_symmetric(true);
}

/// `A_ji = int c phi_i phi_j`, c linear per element, integrated exactly.
pub fn assemble_weighted_mass<T: Scalar>(mesh: &Mesh<T>, pattern: &Arc<Pattern>, c: &[T]) -> SparseMatrix<T> {
    let mut m = SparseMatrix::zeros(pattern, true);
    fill_weighted_mass(mesh, &mut m, Some(c), None);
    m
}

/// Stiffness with one coefficient per element: `A_ji = sum_K c_K int_K grad phi_i . grad phi_j`.
pub fn fill_stiffness_elementwise<T: Scalar>(mesh: &Mesh<T>, m: &mut SparseMatrix<T>, coef: &[T]) {
    let tris = mesh.triangles();
    fill_rows(mesh, m, |k, a, b| {
        let t = &tris[k];
        coef[k] * t.area * dot2(t.gradients[a], t.gradients[b])
    });
    m.set_symmetric(true);
}

/// `A_ji = int c grad phi_i . grad phi_j` with `c` replaced by its element mean.
pub fn assemble_weighted_stiffness<T: Scalar>(mesh: &Mesh<T>, pattern: &Arc<Pattern>, c: &[T]) -> SparseMatrix<T> {
    let mut m = SparseMatrix::zeros(pattern, true);
    fill_stiffness_elementwise(mesh, &mut m, &element_means(mesh, c));
    m
}

/// Density convection, `C_ji = int phi_i (u . grad phi_j)`, u linear per element.
pub fn fill_convection<T: Scalar>(mesh: &Mesh<T>, m: &mut SparseMatrix<T>, u: &[[T; 2]]) {
    let tris = mesh.triangles();
    fill_rows(mesh, m, |k, a, b| {
        let t = &tris[k];
        let g = t.gradients[a];
        t.area
            * (0..3)
                .map(|c| dot2(u[t.nodes[c]], g) * quadratic_moment::<T>(c, b))
                .sum::<T>()
    });
    m.set_symmetric(false);
}

pub fn assemble_convection<T: Scalar>(mesh: &Mesh<T>, pattern: &Arc<Pattern>, u: &[[T; 2]]) -> SparseMatrix<T> {
    let mut m = SparseMatrix::zeros(pattern, false);
    fill_convection(mesh, &mut m, u);
    m
}

/// Momentum advection `(u . grad) w`, tested against `phi_j`:
/// `A_ji = sum_K s_K int_K phi_j (u . grad phi_i)`.
pub fn fill_advection<T: Scalar>(mesh: &Mesh<T>, m: &mut SparseMatrix<T>, u: &[[T; 2]], element: Option<&[T]>) {
    let tris = mesh.triangles();
    fill_rows(mesh, m, |k, a, b| {
        let t = &tris[k];
        let g = t.gradients[b];
        let s = element.map_or(T::one(), |e| e[k]);
        s * t.area
            * (0..3)
                .map(|c| dot2(u[t.nodes[c]], g) * quadratic_moment::<T>(c, a))
                .sum::<T>()
    });
    m.set_symmetric(false);
}

/// `B_ji = sum over outer edges of int_e phi_i (u . n) phi_j`, exact for the
/// cubic integrand.
pub fn fill_outer_boundary_mass<T: Scalar>(mesh: &Mesh<T>, m: &mut SparseMatrix<T>, u: &[[T; 2]]) {
    m.clear();
    let (quarter, twelfth) = (T::of(0.25), T::of(1.0 / 12.0));
    for e in mesh.outer_edges() {
        let [p, q] = e.nodes;
        let (wp, wq) = (dot2(u[p], e.normal), dot2(u[q], e.normal));
        let l = e.length;
        m.add_at(p, p, l * (quarter * wp + twelfth * wq));
        m.add_at(q, q, l * (twelfth * wp + quarter * wq));
        let off = l * twelfth * (wp + wq);
        m.add_at(p, q, off);
        m.add_at(q, p, off);
    }
    m.set_symmetric(true);
}

pub fn assemble_outer_boundary_mass<T: Scalar>(
    mesh: &Mesh<T>,
    pattern: &Arc<Pattern>,
    u: &[[T; 2]],
) -> SparseMatrix<T> {
    let mut m = SparseMatrix::zeros(pattern, true);
    fill_outer_boundary_mass(mesh, &mut m, u);
    m
}

/// `b_j = int f phi_j`, f linear per element.
pub fn assemble_load<T: Scalar>(mesh: &Mesh<T>, f: &[T]) -> Vec<T> {
    let mut b = vec![T::zero(); mesh.num_nodes()];
    assemble_load_into(mesh, f, &mut b);
    b
}

pub fn assemble_load_into<T: Scalar>(mesh: &Mesh<T>, f: &[T], b: &mut [T]) {
    let tris = mesh.triangles();
    b.par_iter_mut().with_min_len(256).enumerate().for_each(|(j, bj)| {
        let mut s = T::zero();
        for &(k, a) in mesh.star(j) {
            let t = &tris[k];
            s += t.area * (0..3).map(|c| f[t.nodes[c]] * quadratic_moment::<T>(c, a)).sum::<T>();
        }
        *bj = s;
    });
}

/// `a_j = sum_K s_K int_K u . grad phi_j`, the element-mean pressure vector.
pub fn assemble_divergence_load<T: Scalar>(mesh: &Mesh<T>, u: &[[T; 2]], element: &[T]) -> Vec<T> {
    let third = T::one() / T::of(3.0);
    let tris = mesh.triangles();
    (0..mesh.num_nodes())
        .into_par_iter()
        .with_min_len(256)
        .map(|j| {
            let mut s = T::zero();
            for &(k, a) in mesh.star(j) {
                let t = &tris[k];
                let ub = [
                    (u[t.nodes[0]][0] + u[t.nodes[1]][0] + u[t.nodes[2]][0]) * third,
                    (u[t.nodes[0]][1] + u[t.nodes[1]][1] + u[t.nodes[2]][1]) * third,
                ];
                s += element[k] * t.area * dot2(ub, t.gradients[a]);
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, BoundaryTag};

    fn reference() -> (Mesh<f64>, Arc<Pattern>) {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                ([0, 1], BoundaryTag::Outer),
                ([1, 2], BoundaryTag::Outer),
                ([2, 0], BoundaryTag::Outer),
            ],
        )
        .unwrap();
        let p = Pattern::from_mesh(&m);
        (m, p)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15
    }

    #[test]
    fn reference_mass() {
        let (m, p) = reference();
        let a = assemble_weighted_mass(&m, &p, &[1.0; 3]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!(close(a.get(i, j), want));
            }
        }
        let z = assemble_weighted_mass(&m, &p, &[0.0; 3]);
        assert!(z.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reference_stiffness() {
        let (m, p) = reference();
        let a = assemble_weighted_stiffness(&m, &p, &[1.0; 3]);
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(a.get(i, j), want[i][j]));
            }
        }
        let a2 = assemble_weighted_stiffness(&m, &p, &[2.0; 3]);
        for (x, y) in a.values().iter().zip(a2.values()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn reference_convection() {
        let (m, p) = reference();
        let c = assemble_convection(&m, &p, &[[1.0, 0.0]; 3]);
        let gx = [-1.0, 1.0, 0.0];
        for j in 0..3 {
            for i in 0..3 {
                assert!(close(c.get(j, i), gx[j] / 6.0));
            }
        }
        let z = assemble_convection(&m, &p, &[[0.0, 0.0]; 3]);
        assert!(z.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reference_load() {
        let (m, _) = reference();
        let b = assemble_load(&m, &[1.0; 3]);
        assert!(b.iter().all(|v| close(*v, 1.0 / 6.0)));
        assert!(assemble_load(&m, &[0.0; 3]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_edge_boundary_block() {
        let m: Mesh<f64> = rectangle(1, 1, [0.0, 1.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        // u . n = 1 only on the bottom edge y = 0 (n = (0, -1))
        let u: Vec<[f64; 2]> = m
            .nodes()
            .iter()
            .map(|x| if x[1] == 0.0 { [0.0, -1.0] } else { [0.0, 0.0] })
            .collect();
        let b = assemble_outer_boundary_mass(&m, &p, &u);
        let bottom: Vec<usize> = (0..4).filter(|&i| m.nodes()[i][1] == 0.0).collect();
        let (i, j) = (bottom[0], bottom[1]);
        // side edges see u . n = 0 but one endpoint on the bottom contributes L/12
        assert!(close(b.get(i, j), 1.0 / 6.0));
        assert!(b.get(i, i) >= 1.0 / 3.0 - 1e-15);
        let interior = assemble_outer_boundary_mass(&m, &p, &[[0.0; 2]; 4]);
        assert!(interior.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn stiffness_rows_sum_to_zero_and_mass_partition_of_unity() {
        let m: Mesh<f64> = rectangle(5, 4, [0.0, 2.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        let c: Vec<f64> = m.nodes().iter().map(|x| 1.0 + x[0] * x[1]).collect();
        let k = assemble_weighted_stiffness(&m, &p, &c);
        assert!(k.row_sums().iter().all(|s| s.abs() < 1e-12));
        assert!(k.asymmetry() < 1e-14);
        let mass = assemble_weighted_mass(&m, &p, &vec![1.0; m.num_nodes()]);
        let total: f64 = mass.row_sums().iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
        let b = assemble_load(&m, &vec![1.0; m.num_nodes()]);
        assert!((b.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn convection_row_sums_match_boundary_flux() {
        let m: Mesh<f64> = rectangle(4, 3, [0.0, 1.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        let u0 = [0.7, -0.3];
        let c = assemble_convection(&m, &p, &vec![u0; m.num_nodes()]);
        let mut flux = vec![0.0; m.num_nodes()];
        for e in m.boundary_edges() {
            let un = u0[0] * e.normal[0] + u0[1] * e.normal[1];
            for &n in &e.nodes {
                flux[n] += 0.5 * e.length * un;
            }
        }
        for (s, f) in c.row_sums().iter().zip(&flux) {
            assert!((s - f).abs() < 1e-13, "{s} vs {f}");
        }
        assert!(c.col_sums().iter().all(|s| s.abs() < 1e-13));
    }

    #[test]
    fn advection_is_transposed_convection() {
        let m: Mesh<f64> = rectangle(3, 3, [0.0, 1.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        let u: Vec<[f64; 2]> = m.nodes().iter().map(|x| [x[1], -x[0]]).collect();
        let c = assemble_convection(&m, &p, &u);
        let mut a = SparseMatrix::zeros(&p, false);
        fill_advection(&m, &mut a, &u, None);
        for i in 0..m.num_nodes() {
            for j in 0..m.num_nodes() {
                assert!((a.get(i, j) - c.get(j, i)).abs() < 1e-15);
            }
        }
    }
}
