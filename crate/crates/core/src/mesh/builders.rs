//! Structured triangulations of rectangles, used by tests and examples.

use std::collections::HashMap;

use super::{BoundaryTag, Mesh};
use crate::scalar::Scalar;

/// Uniform `nx` x `ny` cell grid over `[x0, x1] x [y0, y1]`, each cell split
/// along its south-west to north-east diagonal. All boundary edges are outer.
pub fn rectangle<T: Scalar>(nx: usize, ny: usize, xr: [f64; 2], yr: [f64; 2]) -> Mesh<T> {
    rectangle_with_hole(nx, ny, xr, yr, [0, 0], [0, 0])
}

/// Like [`rectangle`], with the cells `i in hole_i[0]..hole_i[1]`,
/// `j in hole_j[0]..hole_j[1]` removed. Edges around the hole are walls.
pub fn rectangle_with_hole<T: Scalar>(
    nx: usize,
    ny: usize,
    xr: [f64; 2],
    yr: [f64; 2],
    hole_i: [usize; 2],
    hole_j: [usize; 2],
) -> Mesh<T> {
    assert!(nx > 0 && ny > 0, "grid needs at least one cell");
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let in_hole = |i: usize, j: usize| i >= hole_i[0] && i < hole_i[1] && j >= hole_j[0] && j < hole_j[1];

    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if in_hole(i, j) {
                continue;
            }
            let (a, b, c, d) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }

    let mut remap = HashMap::new();
    let mut nodes = Vec::new();
    for t in &mut tris {
        for n in t.iter_mut() {
            let next = remap.len();
            let id = *remap.entry(*n).or_insert_with(|| {
                let (i, j) = (*n % (nx + 1), *n / (nx + 1));
                let x = xr[0] + (xr[1] - xr[0]) * i as f64 / nx as f64;
                let y = yr[0] + (yr[1] - yr[0]) * j as f64 / ny as f64;
                nodes.push([T::of(x), T::of(y)]);
                next
            });
            *n = id;
        }
    }

    let mut count: HashMap<[usize; 2], usize> = HashMap::new();
    for t in &tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry([a.min(b), a.max(b)]).or_default() += 1;
        }
    }
    let on_outer = |p: [T; 2]| {
        let (x, y) = (p[0].as_f64(), p[1].as_f64());
        let tol = 1e-12 * (xr[1] - xr[0]).abs().max((yr[1] - yr[0]).abs());
        (x - xr[0]).abs() < tol || (x - xr[1]).abs() < tol || (y - yr[0]).abs() < tol || (y - yr[1]).abs() < tol
    };
    let mut boundary: Vec<([usize; 2], BoundaryTag)> = count
        .into_iter()
        .filter(|(_, c)| *c == 1)
        .map(|(e, _)| {
            let mid_on_outer = {
                let (a, b) = (nodes[e[0]], nodes[e[1]]);
                let two = T::of(2.0);
                on_outer([(a[0] + b[0]) / two, (a[1] + b[1]) / two])
            };
            let tag = if mid_on_outer { BoundaryTag::Outer } else { BoundaryTag::Wall };
            (e, tag)
        })
        .collect();
    boundary.sort();
    Mesh::new(nodes, tris, boundary).expect("structured grid is a valid mesh")
}
