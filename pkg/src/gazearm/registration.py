"""Rigid registration between coordinate frames and the frame graph.

Frames: r = robot/world, k = RGB-D camera, o = head-mounted scene camera,
g = gaze, e = end-effector.  The robot frame is the world frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import RigidTransform, compose, invert


class DegenerateGeometry(Exception):
    pass


class NoPath(Exception):
    pass


def fit_rigid(points_a: np.ndarray, points_b: np.ndarray) -> RigidTransform:
    """Least-squares rigid transform mapping frame-A points onto frame-B.

    Kabsch/Arun closed form, scale fixed at 1: minimizes sum ||T a_i - b_i||^2.
    """
    a = np.asarray(points_a, dtype=float).reshape(-1, 3)
    b = np.asarray(points_b, dtype=float).reshape(-1, 3)
    if len(a) != len(b):
        raise ValueError("correspondence sets differ in length")
    if len(a) < 3:
        raise DegenerateGeometry(f"need >= 3 pairs, got {len(a)}")
    ca = a.mean(axis=0)
    cb = b.mean(axis=0)
    H = (a - ca).T @ (b - cb)
    # collinear (or coincident) points leave the rotation about the line free
    if np.linalg.matrix_rank((a - ca), tol=1e-9) < 2:
        raise DegenerateGeometry("points are collinear")
    U, S, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = cb - R @ ca
    return RigidTransform(R, t)


def fit_residual_rms(T: RigidTransform, points_a, points_b) -> float:
    a = np.asarray(points_a, dtype=float).reshape(-1, 3)
    b = np.asarray(points_b, dtype=float).reshape(-1, 3)
    return float(np.sqrt(np.mean(np.sum((T.apply(a) - b) ** 2, axis=1))))


@dataclass
class CalibrationResult:
    transform: RigidTransform          # maps camera-frame points into robot frame
    residual_rms_m: float
    board: dict
    pairs: list

    def to_json(self) -> str:
        return json.dumps({
            "board": self.board,
            "pairs": self.pairs,
            "rotation": self.transform.rotation.tolist(),
            "translation": self.transform.translation.tolist(),
            "residual_rms_m": self.residual_rms_m,
        }, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "CalibrationResult":
        d = json.loads(text)
        return CalibrationResult(
            RigidTransform(np.array(d["rotation"]), np.array(d["translation"])),
            d["residual_rms_m"], d["board"], d["pairs"])


def checkerboard_corners(cols: int = 7, rows: int = 5, pitch: float = 0.03) -> np.ndarray:
    """Inner-corner grid in the board plane (z = 0)."""
    xs = np.arange(cols) * pitch
    ys = np.arange(rows) * pitch
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel(), np.zeros(cols * rows)], axis=1)


def calibrate_robot_camera(corner_touch: np.ndarray, corner_seen: np.ndarray,
                           board: dict | None = None) -> CalibrationResult:
    """Fit T^r_k from corners touched by the end-effector (robot frame)
    and the same corners seen by the RGB-D camera (camera frame)."""
    T = fit_rigid(corner_seen, corner_touch)
    rms = fit_residual_rms(T, corner_seen, corner_touch)
    pairs = [[list(map(float, s)), list(map(float, t))]
             for s, t in zip(np.asarray(corner_seen), np.asarray(corner_touch))]
    return CalibrationResult(T, rms, board or {}, pairs)


FRAMES = ("r", "k", "o", "g", "e")


@dataclass
class FrameGraph:
    """Directed graph of timestamped rigid transforms between named frames.

    An edge (a, b) stores T such that p_b = T(p_a).  resolve() composes the
    latest edge per link along a BFS path, inverting reversed edges.
    """

    _edges: dict = field(default_factory=dict)  # (a, b) -> (RigidTransform, stamp)

    def set_edge(self, frame_from: str, frame_to: str, T: RigidTransform, stamp: float = 0.0):
        old = self._edges.get((frame_from, frame_to))
        if old is None or stamp >= old[1]:
            self._edges[(frame_from, frame_to)] = (T, stamp)

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self._edges or (b, a) in self._edges

    def _neighbors(self, f: str):
        out = []
        for (a, b) in self._edges:
            if a == f:
                out.append(b)
            elif b == f:
                out.append(a)
        return sorted(set(out))

    def resolve(self, frame_from: str, frame_to: str) -> RigidTransform:
        """Transform mapping frame_from coordinates into frame_to."""
        if frame_from == frame_to:
            return RigidTransform.identity()
        # BFS over the undirected view
        prev: dict = {frame_from: None}
        queue = [frame_from]
        while queue:
            cur = queue.pop(0)
            if cur == frame_to:
                break
            for nxt in self._neighbors(cur):
                if nxt not in prev:
                    prev[nxt] = cur
                    queue.append(nxt)
        if frame_to not in prev:
            raise NoPath(f"no transform path {frame_from} -> {frame_to}")
        path = [frame_to]
        while path[-1] != frame_from:
            path.append(prev[path[-1]])
        path.reverse()
        T = RigidTransform.identity()
        for a, b in zip(path[:-1], path[1:]):
            if (a, b) in self._edges:
                step = self._edges[(a, b)][0]
            else:
                step = invert(self._edges[(b, a)][0])
            T = compose(step, T)
        return T
