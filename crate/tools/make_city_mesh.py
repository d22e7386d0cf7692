#!/usr/bin/env python3
"""Generate the synthetic concentric-city mesh shipped in data/.

An irregular outer limit (about 8.4 x 7.2 km) with five polygonal
obstacles (two parks, a golf club, a university campus and an industrial
zone). Triangles are refined near the obstacle walls. The mesh is written
as Gmsh MSH 2.2 and 4.1 ASCII with physical groups "outer", "wall_*" and
"domain".

Requires the `triangle` Python package (pip install triangle).
"""
import argparse
import math

import numpy as np
import triangle

OUTER = [
    (0.6, 0.3), (2.6, 0.0), (4.4, 0.2), (6.3, 0.1), (7.9, 0.8), (8.4, 2.4),
    (8.2, 4.3), (8.3, 5.6), (7.4, 6.9), (5.6, 7.2), (3.7, 6.9), (1.9, 7.1),
    (0.5, 6.2), (0.0, 4.6), (0.3, 2.9), (0.0, 1.5),
]

HOLES = {
    "wall_park_west": [(1.3, 3.3), (2.1, 3.1), (2.4, 3.8), (1.9, 4.4), (1.2, 4.1)],
    "wall_park_north": [(3.6, 5.5), (4.5, 5.4), (4.6, 6.0), (3.7, 6.1)],
    "wall_golf": [(2.4, 1.1), (3.6, 1.0), (3.9, 1.7), (3.1, 2.2), (2.3, 1.8)],
    "wall_campus": [(5.2, 1.4), (6.1, 1.3), (6.3, 2.0), (5.4, 2.3)],
    "wall_industrial": [(6.0, 3.2), (7.3, 3.0), (7.5, 4.1), (7.1, 5.0), (6.2, 4.8), (5.8, 4.0)],
}


def subdivide(poly, spacing):
    pts = []
    n = len(poly)
    for k in range(n):
        a = np.array(poly[k])
        b = np.array(poly[(k + 1) % n])
        m = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
        for s in range(m):
            pts.append(a + (b - a) * s / m)
    return pts


def build(outer_spacing, wall_spacing, max_area):
    vertices, segments, markers, holes = [], [], [], []
    groups = [("outer", OUTER, outer_spacing)] + [
        (name, poly, wall_spacing) for name, poly in HOLES.items()
    ]
    for tag, (name, poly, spacing) in enumerate(groups, start=1):
        pts = subdivide(poly, spacing)
        base = len(vertices)
        vertices.extend(pts)
        for k in range(len(pts)):
            segments.append((base + k, base + (k + 1) % len(pts)))
            markers.append(tag)
        if name != "outer":
            holes.append(np.mean(np.array(poly), axis=0))
    geom = {
        "vertices": np.array(vertices),
        "segments": np.array(segments),
        "segment_markers": np.array(markers, dtype=np.int32),
        "holes": np.array(holes),
    }
    mesh = triangle.triangulate(geom, "pq30a%gY" % max_area)
    names = [g[0] for g in groups]
    return mesh, names


def orient_ccw(nodes, tris):
    out = []
    for t in tris:
        a, b, c = (nodes[i] for i in t)
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        out.append(t if cross > 0 else (t[0], t[2], t[1]))
    return out


def boundary_lines(mesh):
    segs = mesh["segments"]
    marks = mesh["segment_markers"].ravel()
    return [(int(s[0]), int(s[1]), int(m)) for s, m in zip(segs, marks)]


def write_msh22(path, nodes, tris, lines, names):
    domain_tag = len(names) + 1
    with open(path, "w") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        f.write("$PhysicalNames\n%d\n" % (len(names) + 1))
        for tag, name in enumerate(names, start=1):
            f.write('1 %d "%s"\n' % (tag, name))
        f.write('2 %d "domain"\n' % domain_tag)
        f.write("$EndPhysicalNames\n")
        f.write("$Nodes\n%d\n" % len(nodes))
        for i, (x, y) in enumerate(nodes):
            f.write("%d %.12g %.12g 0\n" % (i + 1, x, y))
        f.write("$EndNodes\n")
        f.write("$Elements\n%d\n" % (len(lines) + len(tris)))
        eid = 1
        for a, b, tag in lines:
            f.write("%d 1 2 %d %d %d %d\n" % (eid, tag, tag, a + 1, b + 1))
            eid += 1
        for t in tris:
            f.write("%d 2 2 %d 1 %d %d %d\n" % (eid, domain_tag, t[0] + 1, t[1] + 1, t[2] + 1))
            eid += 1
        f.write("$EndElements\n")


def write_msh41(path, nodes, tris, lines, names):
    domain_tag = len(names) + 1
    ncurves = len(names)
    with open(path, "w") as f:
        f.write("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
        f.write("$PhysicalNames\n%d\n" % (len(names) + 1))
        for tag, name in enumerate(names, start=1):
            f.write('1 %d "%s"\n' % (tag, name))
        f.write('2 %d "domain"\n' % domain_tag)
        f.write("$EndPhysicalNames\n")
        f.write("$Entities\n0 %d 1 0\n" % ncurves)
        for tag in range(1, ncurves + 1):
            f.write("%d 0 0 0 0 0 0 1 %d 0\n" % (tag, tag))
        f.write("1 0 0 0 0 0 0 1 %d %d %s\n" % (
            domain_tag, ncurves, " ".join(str(t) for t in range(1, ncurves + 1))))
        f.write("$EndEntities\n")
        n = len(nodes)
        f.write("$Nodes\n1 %d 1 %d\n2 1 0 %d\n" % (n, n, n))
        for i in range(n):
            f.write("%d\n" % (i + 1))
        for x, y in nodes:
            f.write("%.12g %.12g 0\n" % (x, y))
        f.write("$EndNodes\n")
        by_curve = {}
        for a, b, tag in lines:
            by_curve.setdefault(tag, []).append((a, b))
        nelem = len(lines) + len(tris)
        f.write("$Elements\n%d %d 1 %d\n" % (len(by_curve) + 1, nelem, nelem))
        eid = 1
        for tag in sorted(by_curve):
            segs = by_curve[tag]
            f.write("1 %d 1 %d\n" % (tag, len(segs)))
            for a, b in segs:
                f.write("%d %d %d\n" % (eid, a + 1, b + 1))
                eid += 1
        f.write("2 1 2 %d\n" % len(tris))
        for t in tris:
            f.write("%d %d %d %d\n" % (eid, t[0] + 1, t[1] + 1, t[2] + 1))
            eid += 1
        f.write("$EndElements\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outer-spacing", type=float, default=0.35)
    ap.add_argument("--wall-spacing", type=float, default=0.15)
    ap.add_argument("--max-area", type=float, default=0.03)
    ap.add_argument("--out", default="data/city")
    args = ap.parse_args()
    mesh, names = build(args.outer_spacing, args.wall_spacing, args.max_area)
    nodes = [tuple(p) for p in mesh["vertices"]]
    tris = orient_ccw(nodes, [tuple(int(i) for i in t) for t in mesh["triangles"]])
    lines = boundary_lines(mesh)
    write_msh22(args.out + ".msh", nodes, tris, lines, names)
    write_msh41(args.out + "_v41.msh", nodes, tris, lines, names)
    print("nodes=%d triangles=%d boundary_edges=%d" % (len(nodes), len(tris), len(lines)))


if __name__ == "__main__":
    main()
