"""Scene-camera pose from 2D-3D correspondences.

Stands in for the feature-matching front end: correspondences are given
(or synthesized), and the pose is solved by DLT initialization, RANSAC over
minimal 6-point subsets, and Gauss-Newton reprojection refinement.

Pose convention: the returned RigidTransform maps camera-frame points into
the world (RGB-D) frame, i.e. it is the camera pose T^k_o.  A world point X
projects through invert(pose).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import PinholeCamera, RigidTransform, compose, invert, project_many


class DegenerateConfiguration(Exception):
    pass


class NoConsensus(Exception):
    pass


@dataclass(frozen=True)
class Correspondence2D3D:
    pixel: tuple   # (u, v) on the head-camera image
    point: tuple   # 3D point in the world (RGB-D) frame, meters


@dataclass
class PoseEstimate:
    pose: RigidTransform       # camera-to-world (T^k_o)
    inliers: list              # indices into the input correspondences
    rmse_px: float             # reprojection RMSE over inliers


@dataclass
class RefineResult:
    pose: RigidTransform
    converged: bool
    cost_history: list


def _split(corrs):
    px = np.array([c.pixel for c in corrs], dtype=float)
    X = np.array([c.point for c in corrs], dtype=float)
    return px, X


def reprojection_errors(pose: RigidTransform, corrs, cam: PinholeCamera) -> np.ndarray:
    px, X = _split(corrs)
    Xc = invert(pose).apply(X)
    if np.any(Xc[:, 2] <= 1e-9):
        # points behind the camera get an effectively infinite error
        err = np.full(len(corrs), 1e9)
        ok = Xc[:, 2] > 1e-9
        if ok.any():
            err[ok] = np.linalg.norm(project_many(cam, Xc[ok]) - px[ok], axis=1)
        return err
    return np.linalg.norm(project_many(cam, Xc) - px, axis=1)


def reprojection_rmse(pose, corrs, cam) -> float:
    e = reprojection_errors(pose, corrs, cam)
    return float(np.sqrt(np.mean(e ** 2)))


def solve_pnp(corrs, cam: PinholeCamera) -> RigidTransform:
    """Direct linear transform pose from >= 6 correspondences.

    Works in normalized image coordinates; the rotation block is projected
    onto SO(3) and the sign fixed by cheirality.
    """
    if len(corrs) < 6:
        raise DegenerateConfiguration(f"need >= 6 correspondences, got {len(corrs)}")
    px, X = _split(corrs)
    if np.linalg.matrix_rank(X - X.mean(axis=0), tol=1e-9) < 2:
        raise DegenerateConfiguration("3D points are collinear")
    x = (px[:, 0] - cam.cx) / cam.fx
    y = (px[:, 1] - cam.cy) / cam.fy
    n = len(corrs)
    # scale 3D points for conditioning
    c3 = X.mean(axis=0)
    s3 = np.mean(np.linalg.norm(X - c3, axis=1))
    if s3 < 1e-12:
        raise DegenerateConfiguration("3D points are coincident")
    Xn = (X - c3) / s3
    A = np.zeros((2 * n, 12))
    Xh = np.hstack([Xn, np.ones((n, 1))])
    A[0::2, 0:4] = Xh
    A[0::2, 8:12] = -x[:, None] * Xh
    A[1::2, 4:8] = Xh
    A[1::2, 8:12] = -y[:, None] * Xh
    _, sv, Vt = np.linalg.svd(A)
    if sv[-2] < 1e-10 * sv[0]:
        raise DegenerateConfiguration("rank-deficient DLT system")
    P = Vt[-1].reshape(3, 4)

    def extract(P):
        M = P[:, :3]
        U, S, Vt2 = np.linalg.svd(M)
        if S[-1] < 1e-10 * S[0]:
            raise DegenerateConfiguration("singular projection matrix")
        R = U @ Vt2
        scale = S.mean()
        if np.linalg.det(R) < 0:
            R = -R
            scale = -scale
        t = P[:, 3] / scale
        # undo the 3D normalization Xn = (X - c3)/s3:
        # Xc = s3 * (R Xn + t) = R X + (s3 t - R c3)
        return R, s3 * t - R @ c3

    R_wc, t_wc = extract(P)
    Xc = X @ R_wc.T + t_wc
    # cheirality check: a healthy solution puts the points in front
    if np.median(Xc[:, 2]) <= 0:
        raise DegenerateConfiguration("solution places points behind the camera")
    return invert(RigidTransform(R_wc, t_wc))


def _skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0.0]])


def refine_gauss_newton(pose: RigidTransform, corrs, cam: PinholeCamera,
                        max_iters: int = 20, tol: float = 1e-10) -> RefineResult:
    """Minimize summed squared reprojection error from an initial pose.

    The world-to-camera rotation is updated on a local axis-angle chart;
    steps that would increase the cost are halved (up to 20 times), so the
    cost sequence is non-increasing.
    """
    px, X = _split(corrs)
    wc = invert(pose)  # optimize world->camera
    R, t = wc.rotation.copy(), wc.translation.copy()

    def residual_and_cost(R, t):
        Xc = X @ R.T + t
        if np.any(Xc[:, 2] <= 1e-9):
            return None, np.inf, None
        u = cam.fx * Xc[:, 0] / Xc[:, 2] + cam.cx
        v = cam.fy * Xc[:, 1] / Xc[:, 2] + cam.cy
        r = np.stack([u, v], axis=1) - px
        return r.ravel(), float(np.sum(r ** 2)), Xc

    r, cost, Xc = residual_and_cost(R, t)
    history = [cost]
    if r is None:
        return RefineResult(pose, False, history)
    converged = True
    for _ in range(max_iters):
        # Jacobian of pixel residuals wrt (omega, dt): Xc' = exp(omega) R X + t + dt
        n = len(X)
        J = np.zeros((2 * n, 6))
        x, y, z = Xc[:, 0], Xc[:, 1], Xc[:, 2]
        iz = 1.0 / z
        # d(pixel)/d(Xc)
        du = np.stack([cam.fx * iz, np.zeros(n), -cam.fx * x * iz * iz], axis=1)
        dv = np.stack([np.zeros(n), cam.fy * iz, -cam.fy * y * iz * iz], axis=1)
        for i in range(n):
            dXc = np.hstack([-_skew(Xc[i]), np.eye(3)])  # wrt (omega, dt)
            J[2 * i] = du[i] @ dXc
            J[2 * i + 1] = dv[i] @ dXc
        JtJ = J.T @ J
        g = J.T @ r
        try:
            step = np.linalg.solve(JtJ, -g)
        except np.linalg.LinAlgError:
            converged = False
            break
        if not np.isfinite(step).all():
            converged = False
            break
        # backtracking to guarantee monotone cost
        alpha = 1.0
        improved = False
        for _ls in range(20):
            dR = Rotation.from_rotvec(alpha * step[:3]).as_matrix()
            R_new = dR @ R
            t_new = t + alpha * step[3:]
            r_new, cost_new, Xc_new = residual_and_cost(R_new, t_new)
            if r_new is not None and cost_new <= cost:
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
        drop = cost - cost_new
        R, t, r, cost, Xc = R_new, t_new, r_new, cost_new, Xc_new
        history.append(cost)
        if drop < tol:
            break
    # re-orthonormalize after the chained increments
    U, _, Vt = np.linalg.svd(R)
    R = U @ Vt
    return RefineResult(invert(RigidTransform(R, t)), converged, history)


def ransac_pnp(corrs, cam: PinholeCamera, inlier_threshold_px: float = 2.0,
               confidence: float = 0.999, max_iters: int = 1000,
               seed: int = 0) -> PoseEstimate:
    """Robust pose: minimal 6-point DLT hypotheses scored by reprojection
    error, final fit refined by Gauss-Newton on the consensus set."""
    n = len(corrs)
    if n < 6:
        raise NoConsensus(f"need >= 6 correspondences, got {n}")
    rng = np.random.default_rng(seed)
    best_inliers: np.ndarray | None = None
    iters_needed = max_iters
    it = 0
    while it < min(max_iters, iters_needed):
        it += 1
        subset = rng.choice(n, size=6, replace=False)
        try:
            pose = solve_pnp([corrs[i] for i in subset], cam)
        except DegenerateConfiguration:
            continue
        err = reprojection_errors(pose, corrs, cam)
        inliers = np.flatnonzero(err < inlier_threshold_px)
        if best_inliers is None or len(inliers) > len(best_inliers):
            best_inliers = inliers
            w = len(inliers) / n
            if w > 0:
                denom = np.log(max(1e-12, 1.0 - w ** 6))
                if denom < 0:
                    iters_needed = int(np.ceil(np.log(1.0 - confidence) / denom))
    if best_inliers is None or len(best_inliers) < 6:
        raise NoConsensus("no 6-point consensus found")
    subset = [corrs[i] for i in best_inliers]
    pose = solve_pnp(subset, cam)
    pose = refine_gauss_newton(pose, subset, cam).pose
    # final inlier set and RMSE from the refined pose
    err = reprojection_errors(pose, corrs, cam)
    inliers = np.flatnonzero(err < inlier_threshold_px)
    if len(inliers) < 6:
        inliers = best_inliers
    rmse = float(np.sqrt(np.mean(err[inliers] ** 2)))
    return PoseEstimate(pose, [int(i) for i in inliers], rmse)


@dataclass
class SynthProblem:
    corrs: list
    outlier_mask: np.ndarray
    true_pose: RigidTransform


def synth_correspondences(true_pose: RigidTransform, cam: PinholeCamera, n: int,
                          outlier_ratio: float = 0.0, noise_px: float = 0.0,
                          seed: int = 0, depth: float = 1.2) -> SynthProblem:
    """Random scene points projected through a known camera pose.

    Inlier pixels get Gaussian noise; outliers get uniform random pixels.
    The outlier count is round(n * outlier_ratio), reproducible by seed.
    """
    if n < 6:
        raise ValueError("need n >= 6")
    if not (0 <= outlier_ratio < 1):
        raise ValueError("outlier_ratio must be in [0, 1)")
    rng = np.random.default_rng(seed)
    margin = 40
    u = rng.uniform(margin, cam.width - margin, n)
    v = rng.uniform(margin, cam.height - margin, n)
    z = rng.uniform(0.8 * depth, 1.2 * depth, n)
    Xc = np.stack([(u - cam.cx) / cam.fx * z, (v - cam.cy) / cam.fy * z, z], axis=1)
    Xw = true_pose.apply(Xc)
    px = np.stack([u, v], axis=1)
    n_out = int(round(n * outlier_ratio))
    mask = np.zeros(n, dtype=bool)
    if n_out:
        mask[rng.choice(n, size=n_out, replace=False)] = True
    if noise_px > 0:
        px[~mask] += rng.normal(0.0, noise_px, size=((~mask).sum(), 2))
    if n_out:
        px[mask, 0] = rng.uniform(0, cam.width, n_out)
        px[mask, 1] = rng.uniform(0, cam.height, n_out)
    corrs = [Correspondence2D3D((float(px[i, 0]), float(px[i, 1])), tuple(Xw[i]))
             for i in range(n)]
    return SynthProblem(corrs, mask, true_pose)
