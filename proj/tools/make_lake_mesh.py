#!/usr/bin/env python3
"""Generate the synthetic lake meshes used as test fixtures.

The outline is the polygon r(theta) = R0 (1 + 0.25 sin 3 theta + 0.15 cos 5 theta)
sampled at spacing ~h; its lobes give sheltered inlets. The fine mesh is a red
refinement of the coarse one (every triangle split into four), so both meshes
cover exactly the same polygon and element diameters are halved.

Usage: make_lake_mesh.py OUTDIR [--radius 1000] [--h 100]
"""
import argparse
import pathlib

import numpy as np
from matplotlib.path import Path
from scipy.spatial import Delaunay


def outline(radius, h):
    theta = np.linspace(0.0, 2.0 * np.pi, 4000, endpoint=False)
    r = radius * (1.0 + 0.25 * np.sin(3 * theta) + 0.15 * np.cos(5 * theta))
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    seg = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    n = int(round(arc[-1] / h))
    targets = np.linspace(0.0, arc[-1], n, endpoint=False)
    idx = np.searchsorted(arc, targets, side="right") - 1
    return pts[idx]


def interior_points(boundary, h):
    path = Path(boundary)
    lo, hi = boundary.min(axis=0), boundary.max(axis=0)
    pts = []
    dy = h * np.sqrt(3.0) / 2.0
    for j, y in enumerate(np.arange(lo[1], hi[1] + dy, dy)):
        shift = 0.5 * h if j % 2 else 0.0
        for x in np.arange(lo[0] + shift, hi[0] + h, h):
            pts.append((x, y))
    pts = np.array(pts)
    pts = pts[path.contains_points(pts)]
    d = np.min(np.linalg.norm(pts[:, None, :] - boundary[None, :, :], axis=2), axis=1)
    return pts[d > 0.6 * h]


def polygon_area(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def lake_mesh(radius, h):
    boundary = outline(radius, h)
    nodes = np.vstack([boundary, interior_points(boundary, h)])
    tri = Delaunay(nodes).simplices
    centroids = nodes[tri].mean(axis=1)
    tri = tri[Path(boundary).contains_points(centroids)]
    tri = orient(nodes, tri)
    area = triangle_areas(nodes, tri).sum()
    assert abs(area - polygon_area(boundary)) < 1e-6 * area, "mesh does not tile the outline"
    used = np.unique(tri)
    assert len(used) == len(nodes), "unreferenced nodes"
    return nodes, tri


def triangle_areas(nodes, tri):
    a, b, c = nodes[tri[:, 0]], nodes[tri[:, 1]], nodes[tri[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def orient(nodes, tri):
    tri = tri.copy()
    flip = triangle_areas(nodes, tri) < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return tri


def red_refine(nodes, tri):
    nodes = list(map(tuple, nodes))
    mid = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid:
            pa, pb = nodes[a], nodes[b]
            nodes.append(((pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0))
            mid[key] = len(nodes) - 1
        return mid[key]

    out = []
    for a, b, c in tri:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    return np.array(nodes), np.array(out)


def boundary_edges(tri):
    count = {}
    for t in tri:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    return [k for k, v in count.items() if v == 1]


def write_msh22(path, nodes, tri):
    edges = boundary_edges(tri)
    with open(path, "w") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        f.write(f"$Nodes\n{len(nodes)}\n")
        for i, (x, y) in enumerate(nodes, 1):
            f.write(f"{i} {x:.12g} {y:.12g} 0\n")
        f.write("$EndNodes\n")
        f.write(f"$Elements\n{len(edges) + len(tri)}\n")
        k = 1
        for a, b in edges:
            f.write(f"{k} 1 2 1 1 {a + 1} {b + 1}\n")
            k += 1
        for a, b, c in tri:
            f.write(f"{k} 2 2 2 1 {a + 1} {b + 1} {c + 1}\n")
            k += 1
        f.write("$EndElements\n")


def write_msh41(path, nodes, tri):
    n = len(nodes)
    with open(path, "w") as f:
        f.write("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
        f.write("$Entities\n0 0 1 0\n1 %g %g 0 %g %g 0 1 1 0\n$EndEntities\n" % (
            nodes[:, 0].min(), nodes[:, 1].min(), nodes[:, 0].max(), nodes[:, 1].max()))
        f.write(f"$Nodes\n1 {n} 1 {n}\n2 1 0 {n}\n")
        for i in range(n):
            f.write(f"{i + 1}\n")
        for x, y in nodes:
            f.write(f"{x:.12g} {y:.12g} 0\n")
        f.write("$EndNodes\n")
        f.write(f"$Elements\n1 {len(tri)} 1 {len(tri)}\n2 1 2 {len(tri)}\n")
        for k, (a, b, c) in enumerate(tri, 1):
            f.write(f"{k} {a + 1} {b + 1} {c + 1}\n")
        f.write("$EndElements\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=pathlib.Path)
    ap.add_argument("--radius", type=float, default=1000.0)
    ap.add_argument("--h", type=float, default=100.0)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    nodes, tri = lake_mesh(args.radius, args.h)
    fine_nodes, fine_tri = red_refine(nodes, tri)
    write_msh22(args.outdir / "lake_coarse.msh", nodes, tri)
    write_msh41(args.outdir / "lake_coarse_v41.msh", nodes, tri)
    write_msh22(args.outdir / "lake_fine.msh", fine_nodes, fine_tri)
    print(f"coarse: {len(nodes)} nodes, {len(tri)} triangles; fine: {len(fine_nodes)} nodes, {len(fine_tri)} triangles")


if __name__ == "__main__":
    main()
