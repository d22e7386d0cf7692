use super::sparse::SparseMatrix;
use crate::error::SolverError;
use crate::scalar::Scalar;

/// Default relative residual for SPD solves.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// True relative residual `|b - Ax| / |b|` at exit.
    pub residual: f64,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` by Jacobi-preconditioned
/// conjugate gradients, starting from zero.
pub fn solve_spd<T: Scalar>(a: &SparseMatrix<T>, b: &[T], tol: f64) -> Result<Vec<T>, SolverError> {
    let mut x = vec![T::zero(); b.len()];
    solve_spd_with_guess(a, b, &mut x, tol)?;
    Ok(x)
}

/// As [`solve_spd`], starting from and overwriting `x`.
///
/// The iteration cap is `10 n`. Convergence is judged on the recomputed true
/// residual, so the returned `x` always satisfies the tolerance.
pub fn solve_spd_with_guess<T: Scalar>(
    a: &SparseMatrix<T>,
    b: &[T],
    x: &mut [T],
    tol: f64,
) -> Result<CgStats, SolverError> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(SolverError::DimensionMismatch {
            matrix: n,
            vector: b.len().min(x.len()),
        });
    }
    if b.iter().chain(x.iter()).chain(a.values()).any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteInput);
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(CgStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
        .collect();
    let tol_t = T::of(tol);
    let cap = 10 * n.max(1);

    let mut r = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut ap = vec![T::zero(); n];
    let mut iterations = 0;

    loop {
        a.matvec_into(x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        let true_res = dot(&r, &r).sqrt() / bnorm;
        if true_res <= tol_t {
            return Ok(CgStats {
                iterations,
                residual: true_res.as_f64(),
            });
        }
        if iterations >= cap {
            return Err(SolverError::NotConverged {
                iterations,
                residual: true_res.as_f64(),
            });
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
            p[i] = z[i];
        }
        let mut rz = dot(&r, &z);
        // Recurrence target sits a little below the tolerance so the
        // recomputed residual usually passes on the first check.
        let target = tol_t * T::of(0.5) * bnorm;
        while iterations < cap {
            a.matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > T::zero()) {
                // breakdown: A is not positive definite on the Krylov space
                return Err(SolverError::NotConverged {
                    iterations,
                    residual: (dot(&r, &r).sqrt() / bnorm).as_f64(),
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if dot(&r, &r).sqrt() <= target {
                break;
            }
            for i in 0..n {
                z[i] = inv_diag[i] * r[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(SolverError::NonFiniteInput);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_weighted_mass, assemble_weighted_stiffness, Pattern};
    use crate::mesh::{rectangle, Mesh};

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            b.swap(c, piv);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn diagonal_system() {
        let m: Mesh<f64> = rectangle(3, 3, [0.0, 1.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        let mut a = crate::fem::SparseMatrix::zeros(&p, true);
        for i in 0..p.dim() {
            a.add_at(i, i, 1.0 + i as f64);
        }
        let b: Vec<f64> = (0..p.dim()).map(|i| (i as f64).sin()).collect();
        let x = solve_spd(&a, &b, 1e-12).unwrap();
        for i in 0..p.dim() {
            assert!((x[i] - b[i] / (1.0 + i as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_oracle() {
        let m: Mesh<f64> = rectangle(1, 1, [0.0, 1.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        let mut a = assemble_weighted_stiffness(&m, &p, &[1.0; 4]);
        a.add_scaled(1.0, &assemble_weighted_mass(&m, &p, &[1.0, 2.0, 3.0, 4.0]));
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let x = solve_spd(&a, &b, 1e-12).unwrap();
        let oracle = dense_solve(a.to_dense(), b.clone());
        for (u, v) in x.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-9);
        }
        let ax = a.matvec(&x);
        let res: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(res / b.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m: Mesh<f64> = rectangle(2, 2, [0.0, 1.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        let a = assemble_weighted_mass(&m, &p, &[1.0; 9]);
        assert!(solve_spd(&a, &[0.0; 9], 1e-10).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_finite_and_singular_inputs() {
        let m: Mesh<f64> = rectangle(2, 2, [0.0, 1.0], [0.0, 1.0]);
        let p = Pattern::from_mesh(&m);
        let a = assemble_weighted_mass(&m, &p, &[1.0; 9]);
        let mut b = vec![1.0; 9];
        b[3] = f64::NAN;
        assert_eq!(solve_spd(&a, &b, 1e-10), Err(SolverError::NonFiniteInput));
        // pure Neumann Laplacian with a non-compatible right-hand side
        let k = assemble_weighted_stiffness(&m, &p, &[1.0; 9]);
        let err = solve_spd(&k, &[1.0; 9], 1e-10).unwrap_err();
        assert!(matches!(err, SolverError::NotConverged { .. }));
    }
}
