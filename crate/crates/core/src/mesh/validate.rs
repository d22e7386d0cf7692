use std::collections::HashMap;
use std::fmt;

use super::{BoundaryTag, Mesh};
use crate::scalar::{sub2, Scalar};

/// Summary of mesh quality and consistency checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport {
    pub nodes: usize,
    pub triangles: usize,
    pub area_sum: f64,
    /// Area enclosed by the boundary loops (shoelace over oriented edges).
    pub boundary_enclosed_area: f64,
    pub min_area: f64,
    pub max_area: f64,
    /// Smallest interior angle over all triangles, degrees.
    pub min_angle_deg: f64,
    pub boundary_loops: usize,
    pub outer_edges: usize,
    pub wall_edges: usize,
    pub failures: Vec<String>,
}

impl MeshReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for MeshReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes            {}", self.nodes)?;
        writeln!(f, "triangles        {}", self.triangles)?;
        writeln!(f, "area sum         {:.12} km^2", self.area_sum)?;
        writeln!(f, "boundary area    {:.12} km^2", self.boundary_enclosed_area)?;
        writeln!(f, "triangle area    {:.3e} .. {:.3e} km^2", self.min_area, self.max_area)?;
        writeln!(f, "min angle        {:.2} deg", self.min_angle_deg)?;
        writeln!(f, "boundary loops   {}", self.boundary_loops)?;
        writeln!(f, "outer/wall edges {}/{}", self.outer_edges, self.wall_edges)?;
        if self.passed() {
            writeln!(f, "status           pass")
        } else {
            writeln!(f, "status           FAIL: {}", self.failures.join("; "))
        }
    }
}

/// Checks orientation, edge usage, gradient consistency and area balance.
pub fn validate_mesh<T: Scalar>(mesh: &Mesh<T>) -> MeshReport {
    let mut failures = Vec::new();
    let nodes = mesh.nodes();

    let mut min_area = f64::INFINITY;
    let mut max_area = 0.0f64;
    let mut min_angle = 180.0f64;
    let mut clockwise = 0;
    let mut bad_gradients = 0;
    for t in mesh.triangles() {
        let a = t.area.as_f64();
        min_area = min_area.min(a);
        max_area = max_area.max(a);
        if t.signed_double_area <= T::zero() {
            clockwise += 1;
        }
        let gx: f64 = t.gradients.iter().map(|g| g[0].as_f64()).sum();
        let gy: f64 = t.gradients.iter().map(|g| g[1].as_f64()).sum();
        let scale = t.gradients.iter().map(|g| g[0].as_f64().abs() + g[1].as_f64().abs()).sum::<f64>();
        if gx.abs() > 1e-12 * scale.max(1.0) || gy.abs() > 1e-12 * scale.max(1.0) {
            bad_gradients += 1;
        }
        for i in 0..3 {
            let p = nodes[t.nodes[i]];
            let u = sub2(nodes[t.nodes[(i + 1) % 3]], p);
            let v = sub2(nodes[t.nodes[(i + 2) % 3]], p);
            let (u, v) = ([u[0].as_f64(), u[1].as_f64()], [v[0].as_f64(), v[1].as_f64()]);
            let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
            min_angle = min_angle.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
        }
    }
    if clockwise > 0 {
        failures.push(format!("orientation: {clockwise} clockwise triangle(s)"));
    }
    if bad_gradients > 0 {
        failures.push(format!("gradients: {bad_gradients} triangle(s) whose basis gradients do not sum to zero"));
    }

    let mut usage: HashMap<[usize; 2], usize> = HashMap::new();
    for t in mesh.triangles() {
        for i in 0..3 {
            let (a, b) = (t.nodes[i], t.nodes[(i + 1) % 3]);
            *usage.entry([a.min(b), a.max(b)]).or_default() += 1;
        }
    }
    let overused = usage.values().filter(|&&c| c > 2).count();
    if overused > 0 {
        failures.push(format!("connectivity: {overused} edge(s) shared by more than two triangles"));
    }
    let topo_boundary = usage.values().filter(|&&c| c == 1).count();
    if topo_boundary != mesh.boundary_edges().len() {
        failures.push(format!(
            "tagging: {} boundary edges but {} tagged",
            topo_boundary,
            mesh.boundary_edges().len()
        ));
    }
    for (i, n) in mesh.wall_nodes() {
        let len = n[0].as_f64().hypot(n[1].as_f64());
        if (len - 1.0).abs() > 1e-12 {
            failures.push(format!("wall normal at node {i} has length {len}"));
            break;
        }
    }

    // Green's theorem: orient each edge with the domain on its left.
    let mut enclosed = 0.0;
    for e in mesh.boundary_edges() {
        let (mut a, mut b) = (nodes[e.nodes[0]], nodes[e.nodes[1]]);
        let d = sub2(b, a);
        // outward normal of a counter-clockwise traversal is (dy, -dx)
        if (d[1] * e.normal[0] - d[0] * e.normal[1]).as_f64() < 0.0 {
            std::mem::swap(&mut a, &mut b);
        }
        enclosed += 0.5 * (a[0].as_f64() * b[1].as_f64() - b[0].as_f64() * a[1].as_f64());
    }
    let area_sum: f64 = mesh.triangles().iter().map(|t| t.area.as_f64()).sum();
    if (area_sum - enclosed).abs() > 1e-10 * area_sum.max(1e-300) && clockwise == 0 {
        failures.push(format!("area: triangles sum to {area_sum}, boundary encloses {enclosed}"));
    }

    MeshReport {
        nodes: mesh.num_nodes(),
        triangles: mesh.num_triangles(),
        area_sum,
        boundary_enclosed_area: enclosed,
        min_area,
        max_area,
        min_angle_deg: min_angle,
        boundary_loops: count_loops(mesh),
        outer_edges: mesh.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::Outer).count(),
        wall_edges: mesh.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::Wall).count(),
        failures,
    }
}

fn count_loops<T: Scalar>(mesh: &Mesh<T>) -> usize {
    let mut parent: HashMap<usize, usize> = HashMap::new();
    fn find(p: &mut HashMap<usize, usize>, x: usize) -> usize {
        let mut r = x;
        while p[&r] != r {
            r = p[&r];
        }
        let mut c = x;
        while p[&c] != r {
            let next = p[&c];
            p.insert(c, r);
            c = next;
        }
        r
    }
    for e in mesh.boundary_edges() {
        for n in e.nodes {
            parent.entry(n).or_insert(n);
        }
        let (a, b) = (find(&mut parent, e.nodes[0]), find(&mut parent, e.nodes[1]));
        if a != b {
            parent.insert(a, b);
        }
    }
    let keys: Vec<usize> = parent.keys().copied().collect();
    let mut roots: Vec<usize> = keys.into_iter().map(|k| find(&mut parent, k)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangle, rectangle_with_hole};

    #[test]
    fn valid_square_passes() {
        let m: Mesh<f64> = rectangle(5, 5, [0.0, 1.0], [0.0, 1.0]);
        let r = validate_mesh(&m);
        assert!(r.passed(), "{r}");
        assert!((r.area_sum - 1.0).abs() < 1e-14);
        assert_eq!(r.boundary_loops, 1);
        assert!((r.min_angle_deg - 45.0).abs() < 1e-9);
    }

    #[test]
    fn clockwise_triangle_fails_orientation() {
        let m: Mesh<f64> = Mesh::new(
            vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
            vec![[0, 1, 2]],
            vec![
                ([0, 1], BoundaryTag::Outer),
                ([1, 2], BoundaryTag::Outer),
                ([2, 0], BoundaryTag::Outer),
            ],
        )
        .unwrap();
        let r = validate_mesh(&m);
        assert!(!r.passed());
        assert!(r.failures[0].starts_with("orientation"));
    }

    #[test]
    fn mesh_with_hole_has_two_loops() {
        let m: Mesh<f64> = rectangle_with_hole(6, 6, [0.0, 1.0], [0.0, 1.0], [2, 4], [2, 4]);
        let r = validate_mesh(&m);
        assert!(r.passed(), "{r}");
        assert_eq!(r.boundary_loops, 2);
        assert!((r.area_sum - (1.0 - 1.0 / 9.0)).abs() < 1e-12);
        assert!((r.boundary_enclosed_area - r.area_sum).abs() < 1e-12);
    }
}
