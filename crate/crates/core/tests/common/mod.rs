#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use porous_traffic::eikonal::{EikonalConfig, EikonalSolver};
use porous_traffic::fem::Pattern;
use porous_traffic::mesh::{rectangle, BoundaryTag, Mesh};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// Jittered `nx` x `ny` grid on the unit square with random diagonals and
/// random outer/wall tags. At most `2 nx ny` triangles.
pub fn random_mesh(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> Mesh<f64> {
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let mut x = i as f64 * hx;
            let mut y = j as f64 * hy;
            if i > 0 && i < nx {
                x += rng.gen_range(-0.25..0.25) * hx;
            }
            if j > 0 && j < ny {
                y += rng.gen_range(-0.25..0.25) * hy;
            }
            // shear and scale so nothing is axis aligned
            nodes.push([0.3 + 1.7 * x + 0.4 * y, -0.2 + 0.3 * x + 1.1 * y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if rng.gen_bool(0.5) {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    // random clockwise orderings exercise the orientation handling
    for t in &mut tris {
        if rng.gen_bool(0.3) {
            t.swap(1, 2);
        }
    }
    let boundary = boundary_edges(&tris)
        .into_iter()
        .map(|e| {
            let tag = if rng.gen_bool(0.5) { BoundaryTag::Outer } else { BoundaryTag::Wall };
            (e, tag)
        })
        .collect();
    Mesh::new(nodes, tris, boundary).expect("valid random mesh")
}

pub fn boundary_edges(tris: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut count: HashMap<[usize; 2], usize> = HashMap::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry([a.min(b), a.max(b)]).or_default() += 1;
        }
    }
    let mut out: Vec<_> = count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect();
    out.sort();
    out
}

/// Degree-5 seven-point rule on the reference triangle, barycentric points.
pub fn gauss7() -> Vec<([f64; 3], f64)> {
    let (a1, b1, w1) = (0.059715871789770, 0.470142064105115, 0.132394152788506);
    let (a2, b2, w2) = (0.797426985353087, 0.101286507323456, 0.125939180544827);
    vec![
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// Local P1 data computed from scratch: area and basis gradients from the
/// inverse of the vertex matrix `[x y 1]`.
pub struct Local {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

pub fn local(p: [[f64; 2]; 3]) -> Local {
    let m = [
        [p[0][0], p[0][1], 1.0],
        [p[1][0], p[1][1], 1.0],
        [p[2][0], p[2][1], 1.0],
    ];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    // columns of the inverse give the coefficients of each basis function
    let cof = |r: usize, c: usize| {
        let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..3).filter(|&j| j != c).collect();
        let minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
        if (r + c) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    let mut grads = [[0.0; 2]; 3];
    for (i, g) in grads.iter_mut().enumerate() {
        // inverse[k][i] = cof(i, k) / det
        *g = [cof(i, 0) / det, cof(i, 1) / det];
    }
    Local {
        area: det.abs() / 2.0,
        grads,
    }
}

pub type Dense = Vec<Vec<f64>>;

pub fn zeros(n: usize) -> Dense {
    vec![vec![0.0; n]; n]
}

/// Brute-force element loop: `out[j][i] += int_K kernel(lambda, i_local, j_local)`
/// where `j` is the test index.
pub fn integrate<F>(mesh: &Mesh<f64>, mut kernel: F) -> Dense
where
    F: FnMut(usize, &Local, [f64; 3], usize, usize) -> f64,
{
    let n = mesh.num_nodes();
    let mut out = zeros(n);
    for (k, t) in mesh.triangles().iter().enumerate() {
        let p = t.nodes.map(|v| mesh.nodes()[v]);
        let loc = local(p);
        for (lam, w) in gauss7() {
            for a in 0..3 {
                for b in 0..3 {
                    out[t.nodes[a]][t.nodes[b]] += w * loc.area * kernel(k, &loc, lam, b, a);
                }
            }
        }
    }
    out
}

/// Vector counterpart of [`integrate`]: `out[j] += int_K kernel(lambda, j_local)`.
pub fn integrate_vec<F>(mesh: &Mesh<f64>, mut kernel: F) -> Vec<f64>
where
    F: FnMut(usize, &Local, [f64; 3], usize) -> f64,
{
    let mut out = vec![0.0; mesh.num_nodes()];
    for (k, t) in mesh.triangles().iter().enumerate() {
        let loc = local(t.nodes.map(|v| mesh.nodes()[v]));
        for (lam, w) in gauss7() {
            for a in 0..3 {
                out[t.nodes[a]] += w * loc.area * kernel(k, &loc, lam, a);
            }
        }
    }
    out
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn interp(nodal: &[f64], nodes: [usize; 3], lam: [f64; 3]) -> f64 {
    (0..3).map(|c| nodal[nodes[c]] * lam[c]).sum()
}

pub fn max_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Largest entrywise gap between every assembled operator and its
/// quadrature oracle on `mesh`, with random linear coefficients.
pub fn assembly_max_error(mesh: &Mesh<f64>, rng: &mut ChaCha8Rng) -> f64 {
    use porous_traffic::fem::{
        assemble_convection, assemble_divergence_load, assemble_load, assemble_outer_boundary_mass,
        assemble_weighted_mass, assemble_weighted_stiffness, fill_advection, fill_weighted_mass,
        SparseMatrix,
    };
    let n = mesh.num_nodes();
    let pattern = Pattern::from_mesh(mesh);
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    let u: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]).collect();
    let s: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.gen_range(0.5..1.5)).collect();
    let tris = mesh.triangles();
    let mut worst: f64 = 0.0;

    let mass = integrate(mesh, |k, _, lam, i, j| {
        let t = tris[k].nodes;
        interp(&c, t, lam) * lam[i] * lam[j]
    });
    worst = worst.max(max_diff(&assemble_weighted_mass(mesh, &pattern, &c).to_dense(), &mass));

    let plain = integrate(mesh, |_, _, lam, i, j| lam[i] * lam[j]);
    let mut m = SparseMatrix::zeros(&pattern, true);
    fill_weighted_mass(mesh, &mut m, None, None);
    worst = worst.max(max_diff(&m.to_dense(), &plain));

    let scaled = integrate(mesh, |k, _, lam, i, j| s[k] * interp(&c, tris[k].nodes, lam) * lam[i] * lam[j]);
    fill_weighted_mass(mesh, &mut m, Some(&c), Some(&s));
    worst = worst.max(max_diff(&m.to_dense(), &scaled));

    let stiff = integrate(mesh, |k, loc, lam, i, j| {
        let g = (loc.grads[i][0] * loc.grads[j][0]) + (loc.grads[i][1] * loc.grads[j][1]);
        interp(&c, tris[k].nodes, lam) * g
    });
    worst = worst.max(max_diff(&assemble_weighted_stiffness(mesh, &pattern, &c).to_dense(), &stiff));

    let ux: Vec<f64> = u.iter().map(|v| v[0]).collect();
    let uy: Vec<f64> = u.iter().map(|v| v[1]).collect();
    let conv = integrate(mesh, |k, loc, lam, i, j| {
        let t = tris[k].nodes;
        let w = [interp(&ux, t, lam), interp(&uy, t, lam)];
        lam[i] * (w[0] * loc.grads[j][0] + w[1] * loc.grads[j][1])
    });
    worst = worst.max(max_diff(&assemble_convection(mesh, &pattern, &u).to_dense(), &conv));

    let adv = integrate(mesh, |k, loc, lam, i, j| {
        let t = tris[k].nodes;
        let w = [interp(&ux, t, lam), interp(&uy, t, lam)];
        s[k] * lam[j] * (w[0] * loc.grads[i][0] + w[1] * loc.grads[i][1])
    });
    let mut a = SparseMatrix::zeros(&pattern, false);
    fill_advection(mesh, &mut a, &u, Some(&s));
    worst = worst.max(max_diff(&a.to_dense(), &adv));

    worst = worst.max(max_diff(
        &assemble_outer_boundary_mass(mesh, &pattern, &u).to_dense(),
        &boundary_oracle(mesh, &u),
    ));

    let load_ref = integrate_vec(mesh, |k, _, lam, j| interp(&c, tris[k].nodes, lam) * lam[j]);
    worst = worst.max(max_gap(&assemble_load(mesh, &c), &load_ref));

    let div_ref = integrate_vec(mesh, |k, loc, lam, j| {
        let t = tris[k].nodes;
        s[k] * (interp(&ux, t, lam) * loc.grads[j][0] + interp(&uy, t, lam) * loc.grads[j][1])
    });
    worst = worst.max(max_gap(&assemble_divergence_load(mesh, &u, &s), &div_ref));
    worst
}

/// `int_e phi_i (u . n) phi_j` over outer edges by 3-point Gauss-Legendre,
/// with the outward normal taken away from the opposite vertex.
pub fn boundary_oracle(mesh: &Mesh<f64>, u: &[[f64; 2]]) -> Dense {
    let n = mesh.num_nodes();
    let mut out = zeros(n);
    let gl = [
        (-(0.6f64).sqrt(), 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        ((0.6f64).sqrt(), 5.0 / 9.0),
    ];
    let x = mesh.nodes();
    for e in mesh.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::Outer) {
        let [p, q] = e.nodes;
        let third = mesh.triangles()[e.triangle].nodes.into_iter().find(|v| *v != p && *v != q).unwrap();
        let d = [x[q][0] - x[p][0], x[q][1] - x[p][1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let mut nrm = [d[1] / len, -d[0] / len];
        let to_third = [x[third][0] - x[p][0], x[third][1] - x[p][1]];
        if nrm[0] * to_third[0] + nrm[1] * to_third[1] > 0.0 {
            nrm = [-nrm[0], -nrm[1]];
        }
        for (xi, w) in gl {
            let s = 0.5 * (xi + 1.0);
            let phi = [1.0 - s, s];
            let un = (0..2)
                .map(|c| phi[c] * (u[[p, q][c]][0] * nrm[0] + u[[p, q][c]][1] * nrm[1]))
                .sum::<f64>();
            for a in 0..2 {
                for b in 0..2 {
                    out[[p, q][a]][[p, q][b]] += 0.5 * len * w * phi[a] * un * phi[b];
                }
            }
        }
    }
    out
}

fn exact(x: [f64; 2]) -> f64 {
    (PI * x[0]).cos() * (PI * x[1]).cos() + 2.0
}

/// L2 error of the P1 solution of `eta^2 lap psi - r psi = G` against the
/// manufactured solution, measured with the seven-point rule.
pub fn manufactured_error(n: usize, eta: f64, r: f64) -> f64 {
    let mesh: Mesh<f64> = rectangle(n, n, [0.0, 1.0], [0.0, 1.0]);
    let g: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|x| -2.0 * PI * PI * eta * eta * (exact(*x) - 2.0) - r * exact(*x))
        .collect();
    let cfg = EikonalConfig {
        eta,
        solver_tol: 1e-13,
        ..Default::default()
    };
    let mut solver = EikonalSolver::new(&mesh, &Pattern::from_mesh(&mesh), cfg);
    let psi = solver.solve_with_reaction(&mesh, &vec![r; mesh.num_nodes()], &g).unwrap().to_vec();
    let mut err2 = 0.0;
    for t in mesh.triangles() {
        let p = t.nodes.map(|v| mesh.nodes()[v]);
        for (lam, w) in gauss7() {
            let x = [
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ];
            let uh: f64 = (0..3).map(|c| lam[c] * psi[t.nodes[c]]).sum();
            err2 += w * t.area * (uh - exact(x)).powi(2);
        }
    }
    err2.sqrt()
}
