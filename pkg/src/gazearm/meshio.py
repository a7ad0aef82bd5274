"""Mesh and point cloud file I/O (ASCII STL, OFF, CSV) and primitive shapes."""

from __future__ import annotations

import math

import numpy as np

from .geometry import PointCloud, TriMesh


class MeshFormatError(Exception):
    pass


# ---------------------------------------------------------------------------
# ASCII STL


def read_stl(path) -> TriMesh:
    verts: list[tuple] = []
    tris: list[list[int]] = []
    vmap: dict[tuple, int] = {}
    cur: list[int] = []
    with open(path) as fh:
        for line in fh:
            tok = line.split()
            if not tok:
                continue
            if tok[0] == "vertex":
                key = tuple(float(x) for x in tok[1:4])
                if key not in vmap:
                    vmap[key] = len(verts)
                    verts.append(key)
                cur.append(vmap[key])
            elif tok[0] == "endfacet":
                if len(cur) != 3:
                    raise MeshFormatError(f"facet with {len(cur)} vertices")
                tris.append(cur)
                cur = []
    if not tris:
        raise MeshFormatError(f"no facets in {path}")
    return TriMesh(np.array(verts), np.array(tris))


def write_stl(path, mesh: TriMesh, name="mesh"):
    v, f = mesh.vertices, mesh.triangles
    with open(path, "w") as fh:
        fh.write(f"solid {name}\n")
        for tri in f:
            a, b, c = v[tri[0]], v[tri[1]], v[tri[2]]
            n = np.cross(b - a, c - a)
            n = n / (np.linalg.norm(n) or 1.0)
            fh.write(f"  facet normal {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}\n")
            fh.write("    outer loop\n")
            for p in (a, b, c):
                fh.write(f"      vertex {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
            fh.write("    endloop\n  endfacet\n")
        fh.write(f"endsolid {name}\n")


# ---------------------------------------------------------------------------
# OFF


def read_off(path) -> TriMesh:
    with open(path) as fh:
        tokens = [t for line in fh for t in line.split("#")[0].split()]
    if not tokens or tokens[0] != "OFF":
        raise MeshFormatError(f"{path} is not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4  # skip edge count
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    tris = []
    for _ in range(nf):
        k = int(tokens[pos])
        face = [int(x) for x in tokens[pos + 1:pos + 1 + k]]
        pos += 1 + k
        for i in range(1, k - 1):  # fan-triangulate polygons
            tris.append([face[0], face[i], face[i + 1]])
    return TriMesh(verts, np.array(tris))


def write_off(path, mesh: TriMesh):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.triangles)} 0\n")
        for p in mesh.vertices:
            fh.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def read_mesh(path) -> TriMesh:
    s = str(path)
    if s.lower().endswith(".stl"):
        return read_stl(path)
    if s.lower().endswith(".off"):
        return read_off(path)
    raise MeshFormatError(f"unsupported mesh format: {path}")


# ---------------------------------------------------------------------------
# CSV point clouds: x,y,z[,label]


def read_cloud_csv(path) -> PointCloud:
    pts = []
    labels = []
    has_labels = False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            pts.append([float(parts[0]), float(parts[1]), float(parts[2])])
            if len(parts) > 3 and parts[3]:
                labels.append(parts[3])
                has_labels = True
            else:
                labels.append(None)
    return PointCloud(np.array(pts), tuple(labels) if has_labels else None)


def write_cloud_csv(path, cloud: PointCloud):
    with open(path, "w") as fh:
        for i, p in enumerate(cloud.points):
            lbl = cloud.labels[i] if cloud.labels is not None else None
            suffix = f",{lbl}" if lbl is not None else ("," if cloud.labels is not None else "")
            fh.write(f"{p[0]:.9g},{p[1]:.9g},{p[2]:.9g}{suffix}\n")


# ---------------------------------------------------------------------------
# primitive meshes (object database defaults)


def box_mesh(w: float, d: float, h: float) -> TriMesh:
    """Axis-aligned box centered at the origin, extents (w, d, h)."""
    hx, hy, hz = w / 2, d / 2, h / 2
    v = np.array([[sx * hx, sy * hy, sz * hz]
                  for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x faces
        (0, 4, 5, 1), (2, 3, 7, 6),  # y faces
        (0, 2, 6, 4), (1, 5, 7, 3),  # z faces
    ]
    tris = []
    for a, b, c, d_ in quads:
        tris.append([a, b, c])
        tris.append([a, c, d_])
    return TriMesh(v, np.array(tris))


def cylinder_mesh(radius: float, height: float, segments: int = 24) -> TriMesh:
    """Closed cylinder along +z, centered at the origin."""
    hz = height / 2
    ring = [(radius * math.cos(2 * math.pi * i / segments),
             radius * math.sin(2 * math.pi * i / segments)) for i in range(segments)]
    verts = [[x, y, -hz] for x, y in ring] + [[x, y, hz] for x, y in ring]
    verts += [[0.0, 0.0, -hz], [0.0, 0.0, hz]]
    bot_c, top_c = 2 * segments, 2 * segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris.append([i, j, segments + i])
        tris.append([j, segments + j, segments + i])
        tris.append([bot_c, j, i])
        tris.append([top_c, segments + i, segments + j])
    return TriMesh(np.array(verts, dtype=float), np.array(tris))


def hemisphere_mesh(radius: float, rings: int = 6, segments: int = 16) -> TriMesh:
    """Upward-open hemisphere bowl (dome pointing down), rim at z = +radius.

    Models a bowl sitting on the table: lowest point at z = 0 after the
    caller shifts by +radius; here centered so the rim circle is at z = radius
    and the dome bottom at z = 0.
    """
    verts = [[0.0, 0.0, 0.0]]  # bottom pole
    for r in range(1, rings + 1):
        phi = (math.pi / 2) * r / rings
        z = radius * (1 - math.cos(phi))
        rr = radius * math.sin(phi)
        for s in range(segments):
            th = 2 * math.pi * s / segments
            verts.append([rr * math.cos(th), rr * math.sin(th), z])
    tris = []
    for s in range(segments):
        tris.append([0, 1 + s, 1 + (s + 1) % segments])
    for r in range(1, rings):
        base0 = 1 + (r - 1) * segments
        base1 = 1 + r * segments
        for s in range(segments):
            s2 = (s + 1) % segments
            tris.append([base0 + s, base1 + s, base1 + s2])
            tris.append([base0 + s, base1 + s2, base0 + s2])
    return TriMesh(np.array(verts, dtype=float), np.array(tris))


def quad_mesh(corners) -> TriMesh:
    """Two-triangle quad from 4 corner points (counter-clockwise)."""
    c = np.asarray(corners, dtype=float)
    return TriMesh(c, np.array([[0, 1, 2], [0, 2, 3]]))


def sample_mesh_surface(mesh: TriMesh, spacing: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform surface samples at roughly one point per spacing^2 of area."""
    areas = mesh.triangle_areas()
    counts = np.maximum(1, np.round(areas / (spacing * spacing)).astype(int))
    total = int(counts.sum())
    tri_idx = np.repeat(np.arange(len(areas)), counts)
    u = rng.random(total)
    v = rng.random(total)
    flip = u + v > 1
    u[flip] = 1 - u[flip]
    v[flip] = 1 - v[flip]
    a = mesh.vertices[mesh.triangles[tri_idx, 0]]
    b = mesh.vertices[mesh.triangles[tri_idx, 1]]
    c = mesh.vertices[mesh.triangles[tri_idx, 2]]
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)
