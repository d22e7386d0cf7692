//! Conforming triangulations of a polygonal city with polygonal obstacles.
//!
//! A [`Mesh`] is immutable once built: node coordinates, triangle
//! connectivity with areas and P1 basis gradients, tagged boundary edges
//! with outward unit normals, and averaged unit normals at wall nodes.

mod builders;
mod msh;
mod validate;

use std::collections::HashMap;

pub use builders::{rectangle, rectangle_with_hole};
pub use msh::{load_msh, parse_msh, BoundaryGroups, RawMesh};
pub use validate::{validate_mesh, MeshReport};

use crate::error::MeshError;
use crate::scalar::{norm2, sub2, Scalar};

/// Triangles smaller than this (km^2) are rejected as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-14;

/// Which part of the boundary an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    /// City limit, where traffic may leave by convection.
    Outer,
    /// Obstacle wall, where the slip condition holds.
    Wall,
}

#[derive(Debug, Clone)]
pub struct Triangle<T> {
    pub nodes: [usize; 3],
    /// Unsigned area in km^2.
    pub area: T,
    /// Twice the signed area; negative for clockwise triangles.
    pub signed_double_area: T,
    /// Gradients of the three P1 basis functions (1/km).
    pub gradients: [[T; 2]; 3],
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge<T> {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    /// Outward unit normal (out of the traffic domain).
    pub normal: [T; 2],
    pub length: T,
    /// Triangle owning this edge.
    pub triangle: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh<T> {
    nodes: Vec<[T; 2]>,
    triangles: Vec<Triangle<T>>,
    boundary: Vec<BoundaryEdge<T>>,
    wall_normals: Vec<Option<[T; 2]>>,
    /// For every node, the triangles containing it and the node's local index.
    stars: Vec<Vec<(usize, usize)>>,
}

impl<T: Scalar> Mesh<T> {
    /// Builds a mesh from raw connectivity and tagged boundary edges,
    /// computing all geometry.
    ///
    /// Every edge that belongs to exactly one triangle must appear in
    /// `boundary` (in either orientation).
    pub fn new(
        nodes: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], BoundaryTag)>,
    ) -> Result<Self, MeshError> {
        for (k, tri) in triangles.iter().enumerate() {
            for &n in tri {
                if n >= nodes.len() {
                    return Err(MeshError::MissingNode { element: k, node: n });
                }
            }
        }
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(MeshError::Invalid("non-finite node coordinate".into()));
        }
        let triangles = compute_geometry(&nodes, &triangles)?;

        let mut stars = vec![Vec::new(); nodes.len()];
        for (k, tri) in triangles.iter().enumerate() {
            for (local, &n) in tri.nodes.iter().enumerate() {
                stars[n].push((k, local));
            }
        }

        let owners = boundary_edge_owners(&triangles);
        let mut tags: HashMap<[usize; 2], BoundaryTag> = HashMap::new();
        for (edge, tag) in boundary {
            tags.insert(sorted(edge), tag);
        }
        let mut edges = Vec::with_capacity(owners.len());
        for (key, (edge, owner)) in owners {
            let tag = *tags
                .get(&key)
                .ok_or(MeshError::UntaggedBoundaryEdge(edge[0], edge[1]))?;
            edges.push(make_edge(&nodes, &triangles[owner], edge, owner, tag));
        }
        if tags.len() != edges.len() {
            return Err(MeshError::Invalid(format!(
                "{} tagged edges but only {} topological boundary edges",
                tags.len(),
                edges.len()
            )));
        }
        edges.sort_by_key(|e| sorted(e.nodes));

        let wall_normals = wall_node_normals(nodes.len(), &edges);
        Ok(Mesh {
            nodes,
            triangles,
            boundary: edges,
            wall_normals,
            stars,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[Triangle<T>] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge<T>] {
        &self.boundary
    }

    pub fn outer_edges(&self) -> impl Iterator<Item = &BoundaryEdge<T>> {
        self.boundary.iter().filter(|e| e.tag == BoundaryTag::Outer)
    }

    /// Averaged unit normal at a wall node, `None` elsewhere.
    pub fn wall_normal(&self, node: usize) -> Option<[T; 2]> {
        self.wall_normals[node]
    }

    pub fn wall_nodes(&self) -> impl Iterator<Item = (usize, [T; 2])> + '_ {
        self.wall_normals
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.map(|n| (i, n)))
    }

    /// Triangles around `node`, with the node's local index in each.
    pub fn star(&self, node: usize) -> &[(usize, usize)] {
        &self.stars[node]
    }

    pub fn total_area(&self) -> T {
        self.triangles.iter().map(|t| t.area).sum()
    }

    pub fn centroid(&self, tri: usize) -> [T; 2] {
        let third = T::one() / T::of(3.0);
        let [a, b, c] = self.triangles[tri].nodes;
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [
            (pa[0] + pb[0] + pc[0]) * third,
            (pa[1] + pb[1] + pc[1]) * third,
        ]
    }

    /// Area-weighted centroid of the whole domain.
    pub fn domain_centroid(&self) -> [T; 2] {
        let mut acc = [T::zero(); 2];
        for k in 0..self.triangles.len() {
            let c = self.centroid(k);
            let a = self.triangles[k].area;
            acc[0] += a * c[0];
            acc[1] += a * c[1];
        }
        let total = self.total_area();
        [acc[0] / total, acc[1] / total]
    }

    /// Shortest edge length over all triangles.
    pub fn min_edge_length(&self) -> T {
        let mut h = T::infinity();
        for t in &self.triangles {
            for i in 0..3 {
                let a = self.nodes[t.nodes[i]];
                let b = self.nodes[t.nodes[(i + 1) % 3]];
                h = h.min(norm2(sub2(a, b)));
            }
        }
        h
    }

    /// Copy of this mesh with every outer edge re-tagged as a wall.
    pub fn with_closed_boundary(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.boundary {
            e.tag = BoundaryTag::Wall;
        }
        out.wall_normals = wall_node_normals(out.nodes.len(), &out.boundary);
        out
    }

    /// Converts coordinates and geometry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Result<Mesh<U>, MeshError> {
        let nodes = self
            .nodes
            .iter()
            .map(|p| [U::of(p[0].as_f64()), U::of(p[1].as_f64())])
            .collect();
        let tris = self.triangles.iter().map(|t| t.nodes).collect();
        let edges = self.boundary.iter().map(|e| (e.nodes, e.tag)).collect();
        Mesh::new(nodes, tris, edges)
    }
}

/// Computes unsigned area, signed double area and P1 gradients per triangle.
///
/// The gradient of the basis function at vertex `i` is the perpendicular of
/// the opposite edge divided by twice the signed area.
pub fn compute_geometry<T: Scalar>(
    nodes: &[[T; 2]],
    triangles: &[[usize; 3]],
) -> Result<Vec<Triangle<T>>, MeshError> {
    let half = T::of(0.5);
    triangles
        .iter()
        .enumerate()
        .map(|(k, tri)| {
            let p = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
            let e1 = sub2(p[1], p[0]);
            let e2 = sub2(p[2], p[0]);
            let cross = e1[0] * e2[1] - e1[1] * e2[0];
            let area = half * cross.abs();
            if !(area.as_f64() >= DEGENERATE_AREA) {
                return Err(MeshError::DegenerateTriangle {
                    index: k,
                    area: area.as_f64(),
                });
            }
            let mut gradients = [[T::zero(); 2]; 3];
            for (i, g) in gradients.iter_mut().enumerate() {
                let pj = p[(i + 1) % 3];
                let pk = p[(i + 2) % 3];
                *g = [(pj[1] - pk[1]) / cross, (pk[0] - pj[0]) / cross];
            }
            Ok(Triangle {
                nodes: *tri,
                area,
                signed_double_area: cross,
                gradients,
            })
        })
        .collect()
}

fn sorted(e: [usize; 2]) -> [usize; 2] {
    if e[0] <= e[1] {
        e
    } else {
        [e[1], e[0]]
    }
}

/// Edges used by exactly one triangle, keyed by sorted node pair.
fn boundary_edge_owners<T>(triangles: &[Triangle<T>]) -> HashMap<[usize; 2], ([usize; 2], usize)> {
    let mut count: HashMap<[usize; 2], ([usize; 2], usize, usize)> = HashMap::new();
    for (k, t) in triangles.iter().enumerate() {
        for i in 0..3 {
            let e = [t.nodes[i], t.nodes[(i + 1) % 3]];
            count
                .entry(sorted(e))
                .and_modify(|c| c.2 += 1)
                .or_insert((e, k, 1));
        }
    }
    count
        .into_iter()
        .filter(|(_, c)| c.2 == 1)
        .map(|(key, (e, k, _))| (key, (e, k)))
        .collect()
}

fn make_edge<T: Scalar>(
    nodes: &[[T; 2]],
    tri: &Triangle<T>,
    edge: [usize; 2],
    owner: usize,
    tag: BoundaryTag,
) -> BoundaryEdge<T> {
    let a = nodes[edge[0]];
    let b = nodes[edge[1]];
    let d = sub2(b, a);
    let length = norm2(d);
    let mut normal = [d[1] / length, -d[0] / length];
    let third = tri
        .nodes
        .iter()
        .copied()
        .find(|n| *n != edge[0] && *n != edge[1])
        .expect("triangle has a vertex off the edge");
    let to_inside = sub2(nodes[third], a);
    if normal[0] * to_inside[0] + normal[1] * to_inside[1] > T::zero() {
        normal = [-normal[0], -normal[1]];
    }
    BoundaryEdge {
        nodes: edge,
        tag,
        normal,
        length,
        triangle: owner,
    }
}

/// Normalized sum of the unit normals of wall edges meeting at each node.
fn wall_node_normals<T: Scalar>(n: usize, edges: &[BoundaryEdge<T>]) -> Vec<Option<[T; 2]>> {
    let mut acc: Vec<Option<([T; 2], [T; 2])>> = vec![None; n];
    for e in edges.iter().filter(|e| e.tag == BoundaryTag::Wall) {
        for &node in &e.nodes {
            let slot = acc[node].get_or_insert(([T::zero(); 2], e.normal));
            slot.0[0] += e.normal[0];
            slot.0[1] += e.normal[1];
        }
    }
    acc.into_iter()
        .map(|s| {
            s.map(|(sum, first)| {
                let len = norm2(sum);
                // opposite normals cancel on a zero-thickness spike
                if len.as_f64() > 1e-12 {
                    [sum[0] / len, sum[1] / len]
                } else {
                    first
                }
            })
        })
        .collect()
}
