"""Graded coarse mesh of the three-leaf domain in Gmsh 2.2 format.

Boundary nodes lie exactly on the chart; element sizes shrink towards the
three concave points. Triangles with two boundary edges are split at their
centroid so that every triangle touches the boundary in at most one edge.

Usage: python3 generate.py [h_max] [output]
"""

import math
import sys

import numpy as np
import triangle

H_MAX = 0.26
H_MIN = 0.09
GRADING_RADIUS = 0.6
CONCAVE_PARAMS = [math.pi / 3, math.pi, 5 * math.pi / 3]


def chart(t):
    c3 = math.cos(3 * t)
    return np.array([(1 + 0.4 * c3) * math.cos(t), (1 + (0.4 + 0.22 * math.sin(t)) * c3) * math.sin(t)])


CONCAVE_POINTS = [chart(t) for t in CONCAVE_PARAMS]


def size(x, h_max):
    d = min(np.linalg.norm(x - p) for p in CONCAVE_POINTS)
    h_min = H_MIN * h_max / H_MAX
    return h_min + (h_max - h_min) * min(1.0, d / GRADING_RADIUS)


def boundary_params(h_max):
    ts = np.linspace(0.0, 2 * math.pi, 20001)
    speed = []
    for t in ts:
        e = 1e-6
        speed.append(np.linalg.norm(chart(t + e) - chart(t - e)) / (2 * e) / size(chart(t), h_max))
    speed = np.array(speed)
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(ts))])
    n = max(12, int(round(cumulative[-1])))
    targets = np.linspace(0.0, cumulative[-1], n + 1)[:-1]
    return np.interp(targets, cumulative, ts)


def split_ears(vertices, triangles, n_boundary):
    out = []
    vertices = list(vertices)
    for tri in triangles:
        if all(v < n_boundary for v in tri):
            c = sum(np.array(vertices[v]) for v in tri) / 3.0
            vertices.append(c)
            k = len(vertices) - 1
            a, b, d = tri
            out += [[a, b, k], [b, d, k], [d, a, k]]
        else:
            out.append(list(tri))
    return np.array(vertices), out


def write_msh(path, vertices, triangles, n_boundary):
    lines = [[i, (i + 1) % n_boundary] for i in range(n_boundary)]
    with open(path, "w") as f:
        f.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        f.write('$PhysicalNames\n2\n1 1 "boundary"\n2 2 "domain"\n$EndPhysicalNames\n')
        f.write("$Nodes\n%d\n" % len(vertices))
        for i, (x, y) in enumerate(vertices):
            f.write("%d %.17g %.17g 0\n" % (i + 1, x, y))
        f.write("$EndNodes\n$Elements\n%d\n" % (len(lines) + len(triangles)))
        tag = 1
        for a, b in lines:
            f.write("%d 1 2 1 1 %d %d\n" % (tag, a + 1, b + 1))
            tag += 1
        for a, b, c in triangles:
            f.write("%d 2 2 2 1 %d %d %d\n" % (tag, a + 1, b + 1, c + 1))
            tag += 1
        f.write("$EndElements\n")


def main():
    h_max = float(sys.argv[1]) if len(sys.argv) > 1 else H_MAX
    out = sys.argv[2] if len(sys.argv) > 2 else "three_leaf_coarse.msh"
    params = boundary_params(h_max)
    pts = np.array([chart(t) for t in params])
    n = len(pts)
    segs = np.array([[i, (i + 1) % n] for i in range(n)])
    mesh = triangle.triangulate({"vertices": pts, "segments": segs}, "pq30Y")
    for _ in range(6):
        areas = []
        for tri in mesh["triangles"]:
            c = mesh["vertices"][tri].mean(axis=0)
            areas.append(math.sqrt(3) / 4 * size(c, h_max) ** 2)
        mesh["triangle_max_area"] = np.array(areas)
        mesh = triangle.triangulate(mesh, "rpq30Ya")
    vertices = mesh["vertices"]
    # Triangle keeps input vertices first, in order
    assert np.allclose(vertices[:n], pts)
    vertices, tris = split_ears(vertices, mesh["triangles"], n)
    write_msh(out, vertices, tris, n)
    print("%d boundary nodes, %d nodes, %d triangles -> %s" % (n, len(vertices), len(tris), out))


if __name__ == "__main__":
    main()
