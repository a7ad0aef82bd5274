"""Core 3D math: rigid transforms, pinhole cameras, rays, meshes, point clouds.

All lengths are in meters and all angles in radians internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

ORTHO_TOL = 1e-9


class GeometryError(Exception):
    pass


class BehindCamera(GeometryError):
    pass


class OutOfImage(GeometryError):
    pass


class EmptyCloud(GeometryError):
    pass


def _as_array(x, shape=None):
    a = np.asarray(x, dtype=float)
    if shape is not None and a.shape != shape:
        raise ValueError(f"expected shape {shape}, got {a.shape}")
    return a


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) pose: p_out = rotation @ p_in + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = _as_array(self.rotation, (3, 3)).copy()
        t = _as_array(self.translation, (3,)).copy()
        err = np.abs(R.T @ R - np.eye(3)).max()
        if err > 1e-6:
            raise ValueError(f"rotation not orthonormal (err={err:.3g})")
        if err > ORTHO_TOL:
            # renormalize accumulated drift from long compose chains
            U, _, Vt = np.linalg.svd(R)
            R = U @ Vt
        if np.linalg.det(R) < 0:
            raise ValueError("rotation has negative determinant")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_quat(quat, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """quat is (x, y, z, w), scipy convention."""
        return RigidTransform(Rotation.from_quat(quat).as_matrix(), translation)

    def to_quat(self) -> np.ndarray:
        return Rotation.from_matrix(self.rotation).as_quat()

    @staticmethod
    def from_axis_angle(axis, angle, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        axis = _as_array(axis, (3,))
        axis = axis / np.linalg.norm(axis)
        return RigidTransform(Rotation.from_rotvec(axis * angle).as_matrix(), translation)

    @staticmethod
    def from_translation(t) -> "RigidTransform":
        return RigidTransform(np.eye(3), t)

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def apply_vector(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.rotation.T

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """a after b: apply(compose(a, b), p) == apply(a, apply(b, p))."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: RigidTransform) -> RigidTransform:
    return RigidTransform(t.rotation.T, -t.rotation.T @ t.translation)


def rotation_angle_between(a: RigidTransform, b: RigidTransform) -> float:
    """Geodesic angle (rad) between the rotations of two transforms."""
    dR = a.rotation.T @ b.rotation
    c = (np.trace(dR) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = _as_array(self.origin, (3,)).copy()
        d = _as_array(self.direction, (3,)).copy()
        n = np.linalg.norm(d)
        if n < 1e-12:
            raise ValueError("zero-length ray direction")
        d = d / n
        o.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction

    def transformed(self, T: RigidTransform) -> "Ray":
        return Ray(T.apply(self.origin), T.apply_vector(self.direction))


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point outside image")

    def contains(self, u: float, v: float) -> bool:
        return 0 <= u <= self.width and 0 <= v <= self.height


# ETG scene camera: the resolution is known (1280x960); focal length is a
# configurable placeholder (~66 deg horizontal FOV).
ETG_CAMERA = PinholeCamera(fx=980.0, fy=980.0, cx=640.0, cy=480.0, width=1280, height=960)


def project(cam: PinholeCamera, p) -> np.ndarray:
    """Project a camera-frame point to pixel coordinates (u, v)."""
    p = _as_array(p, (3,))
    if p[2] <= 0:
        raise BehindCamera(f"point z={p[2]} not in front of camera")
    return np.array([cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy])


def project_many(cam: PinholeCamera, pts: np.ndarray) -> np.ndarray:
    """Vectorized projection; caller guarantees z > 0."""
    pts = np.asarray(pts, dtype=float)
    z = pts[:, 2]
    return np.stack([cam.fx * pts[:, 0] / z + cam.cx, cam.fy * pts[:, 1] / z + cam.cy], axis=1)


def backproject(cam: PinholeCamera, px) -> Ray:
    """Pixel -> unit ray from the camera center (camera frame, +z forward)."""
    u, v = float(px[0]), float(px[1])
    if not cam.contains(u, v):
        raise OutOfImage(f"pixel ({u}, {v}) outside {cam.width}x{cam.height}")
    d = np.array([(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0])
    return Ray(np.zeros(3), d)


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray   # (n, 3)
    triangles: np.ndarray  # (m, 3) int

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        f = np.asarray(self.triangles, dtype=int)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (n, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError("triangles must be (m, 3)")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("triangle index out of range")
        areas = self._areas(v, f)
        if f.size and areas.min() <= 1e-12:
            raise ValueError("degenerate triangle (area <= 1e-12)")
        v = v.copy()
        f = f.copy()
        v.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", f)

    @staticmethod
    def _areas(v, f):
        if not len(f):
            return np.zeros(0)
        a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def triangle_areas(self) -> np.ndarray:
        return self._areas(self.vertices, self.triangles)

    def centroid(self) -> np.ndarray:
        """Area-weighted surface centroid."""
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        tri_c = (a + b + c) / 3.0
        w = self.triangle_areas()
        return (tri_c * w[:, None]).sum(axis=0) / w.sum()

    def bounds(self) -> "Aabb":
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def transformed(self, T: RigidTransform) -> "TriMesh":
        return TriMesh(T.apply(self.vertices), self.triangles)


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray            # (n, 3)
    labels: tuple | None = None   # optional per-point object id (str or None)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3).copy()
        if not np.isfinite(p).all():
            raise ValueError("non-finite point coordinates")
        p.flags.writeable = False
        object.__setattr__(self, "points", p)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(p):
                raise ValueError("labels length mismatch")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = _as_array(self.min, (3,)).copy()
        hi = _as_array(self.max, (3,)).copy()
        if (lo > hi).any():
            raise ValueError("Aabb min > max")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool((p >= self.min).all() and (p <= self.max).all())

    def distance_to(self, p) -> float:
        """Euclidean distance from point to the box (0 inside)."""
        p = np.asarray(p, dtype=float)
        d = np.maximum(self.min - p, 0.0) + np.maximum(p - self.max, 0.0)
        return float(np.linalg.norm(d))

    def expanded(self, margin: float) -> "Aabb":
        return Aabb(self.min - margin, self.max + margin)

    def intersects(self, other: "Aabb") -> bool:
        return bool((self.min <= other.max).all() and (other.min <= self.max).all())

    def center(self) -> np.ndarray:
        return (self.min + self.max) / 2.0


# ---------------------------------------------------------------------------
# ray / mesh intersection


def _moller_trumbore_batch(ray: Ray, v0, v1, v2, eps=1e-12):
    """Vectorized Moller-Trumbore; returns t array with inf for misses."""
    e1 = v1 - v0
    e2 = v2 - v0
    h = np.cross(ray.direction[None, :], e2)
    a = np.einsum("ij,ij->i", e1, h)
    t = np.full(len(v0), np.inf)
    ok = np.abs(a) > eps
    if not ok.any():
        return t
    f = np.zeros_like(a)
    f[ok] = 1.0 / a[ok]
    s = ray.origin[None, :] - v0
    u = f * np.einsum("ij,ij->i", s, h)
    ok &= (u >= -1e-12) & (u <= 1.0 + 1e-12)
    q = np.cross(s, e1)
    v = f * (q @ ray.direction)
    ok &= (v >= -1e-12) & (u + v <= 1.0 + 1e-12)
    tt = f * np.einsum("ij,ij->i", q, e2)
    ok &= tt > 1e-9
    t[ok] = tt[ok]
    return t


def ray_mesh_intersect(ray: Ray, mesh: TriMesh):
    """Nearest positive intersection of ray with mesh.

    Returns (t, point, triangle_index) or None on miss.  Ties on t break
    toward the lowest triangle index for determinism.
    """
    f = mesh.triangles
    if not len(f):
        return None
    v = mesh.vertices
    t = _moller_trumbore_batch(ray, v[f[:, 0]], v[f[:, 1]], v[f[:, 2]])
    i = int(np.argmin(t))
    if not np.isfinite(t[i]):
        return None
    return float(t[i]), ray.at(float(t[i])), i


# ---------------------------------------------------------------------------
# point cloud indexing / compression


class SpatialIndex:
    """Read-only radius-search index over a point cloud (k-d tree backed)."""

    def __init__(self, cloud: PointCloud):
        if len(cloud) == 0:
            raise EmptyCloud("cannot index an empty cloud")
        self.cloud = cloud
        self._tree = cKDTree(cloud.points)

    def radius_search(self, p, r: float) -> list[int]:
        """Indices of points with ||point - p|| <= r, ascending."""
        if r <= 0:
            raise ValueError("radius must be positive")
        idx = self._tree.query_ball_point(np.asarray(p, dtype=float), r)
        return sorted(int(i) for i in idx)


def build_kdtree(cloud: PointCloud) -> SpatialIndex:
    return SpatialIndex(cloud)


def radius_search(index: SpatialIndex, p, r: float) -> list[int]:
    return index.radius_search(p, r)


def voxel_downsample(cloud: PointCloud, leaf: float) -> PointCloud:
    """One point per occupied voxel: centroid position, majority label."""
    if leaf <= 0:
        raise ValueError("leaf size must be positive")
    if len(cloud) == 0:
        return cloud
    keys = np.floor(cloud.points / leaf).astype(np.int64)
    # deterministic voxel order: lexicographic on the key
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    keys_sorted = keys[order]
    boundaries = np.any(np.diff(keys_sorted, axis=0) != 0, axis=1)
    starts = np.concatenate([[0], np.flatnonzero(boundaries) + 1, [len(cloud)]])
    pts_out = []
    labels_out = [] if cloud.labels is not None else None
    for s, e in zip(starts[:-1], starts[1:]):
        members = order[s:e]
        pts_out.append(cloud.points[members].mean(axis=0))
        if labels_out is not None:
            votes: dict = {}
            for i in members:
                lbl = cloud.labels[i]
                votes[lbl] = votes.get(lbl, 0) + 1
            best = max(votes.items(), key=lambda kv: (kv[1], str(kv[0])))
            labels_out.append(best[0])
    return PointCloud(np.array(pts_out), tuple(labels_out) if labels_out is not None else None)
