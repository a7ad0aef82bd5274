import numpy as np
import pytest

from gazearm.geometry import (Aabb, BehindCamera, ETG_CAMERA, EmptyCloud, OutOfImage,
                              PinholeCamera, PointCloud, Ray, RigidTransform, TriMesh,
                              backproject, build_kdtree, compose, invert, project,
                              project_many, radius_search, ray_mesh_intersect,
                              rotation_angle_between, voxel_downsample)


def random_transform(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return RigidTransform.from_axis_angle(axis, rng.uniform(-np.pi, np.pi),
                                          rng.uniform(-1, 1, 3))


def random_mesh(rng, n_tris=8, scale=0.5):
    tris = []
    verts = []
    for _ in range(n_tris):
        while True:
            v = rng.uniform(-scale, scale, (3, 3))
            if 0.5 * np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0])) > 1e-4:
                break
        base = len(verts)
        verts.extend(v)
        tris.append([base, base + 1, base + 2])
    return TriMesh(np.array(verts), np.array(tris))


# --- rigid transforms --------------------------------------------------------

def test_compose_matches_sequential_apply():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = random_transform(rng), random_transform(rng)
        p = rng.uniform(-1, 1, (5, 3))
        assert np.allclose(compose(a, b).apply(p), a.apply(b.apply(p)))


def test_invert_roundtrip():
    rng = np.random.default_rng(4)
    T = random_transform(rng)
    I = compose(T, invert(T))
    assert np.allclose(I.rotation, np.eye(3), atol=1e-12)
    assert np.allclose(I.translation, 0, atol=1e-12)


def test_rotation_validation():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 2.0, np.zeros(3))
    with pytest.raises(ValueError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_rotation_angle_between():
    a = RigidTransform.identity()
    b = RigidTransform.from_axis_angle([0, 0, 1], 0.3)
    assert rotation_angle_between(a, b) == pytest.approx(0.3)


def test_matrix_and_quat_roundtrip():
    rng = np.random.default_rng(5)
    T = random_transform(rng)
    m = T.matrix()
    assert np.allclose(m[:3, :3], T.rotation)
    T2 = RigidTransform.from_quat(T.to_quat(), T.translation)
    assert np.allclose(T2.rotation, T.rotation)


# --- rays and cameras --------------------------------------------------------

def test_ray_normalizes_direction():
    r = Ray([0, 0, 0], [0, 0, 5])
    assert np.allclose(r.direction, [0, 0, 1])
    assert np.allclose(r.at(2.0), [0, 0, 2])
    with pytest.raises(ValueError):
        Ray([0, 0, 0], [0, 0, 0])


def test_project_backproject_roundtrip():
    rng = np.random.default_rng(6)
    for _ in range(50):
        p = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2), rng.uniform(0.5, 2)])
        px = project(ETG_CAMERA, p)
        ray = backproject(ETG_CAMERA, px)
        # the original point lies on the backprojected ray
        t = p[2] / ray.direction[2]
        assert np.allclose(ray.at(t), p, atol=1e-9)


def test_project_rejects_behind_camera():
    with pytest.raises(BehindCamera):
        project(ETG_CAMERA, [0, 0, -1.0])


def test_backproject_rejects_outside_image():
    with pytest.raises(OutOfImage):
        backproject(ETG_CAMERA, (1281, 480))


def test_project_many_matches_scalar():
    rng = np.random.default_rng(7)
    pts = np.column_stack([rng.uniform(-0.3, 0.3, 10), rng.uniform(-0.3, 0.3, 10),
                           rng.uniform(0.5, 2.0, 10)])
    batch = project_many(ETG_CAMERA, pts)
    for i in range(10):
        assert np.allclose(batch[i], project(ETG_CAMERA, pts[i]))


def test_camera_validation():
    with pytest.raises(ValueError):
        PinholeCamera(fx=-1, fy=1, cx=10, cy=10, width=100, height=100)


# --- meshes and boxes --------------------------------------------------------

def test_trimesh_rejects_bad_indices_and_degenerate():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    with pytest.raises(ValueError):
        TriMesh(v, np.array([[0, 1, 3]]))
    with pytest.raises(ValueError):
        TriMesh(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float),
                np.array([[0, 1, 2]]))


def test_mesh_centroid_and_transform():
    from gazearm.meshio import box_mesh
    m = box_mesh(0.2, 0.2, 0.2)
    assert np.allclose(m.centroid(), 0, atol=1e-12)
    T = RigidTransform.from_translation([1, 2, 3])
    assert np.allclose(m.transformed(T).centroid(), [1, 2, 3], atol=1e-12)


def test_aabb_distance_and_intersects():
    box = Aabb([0, 0, 0], [1, 1, 1])
    assert box.contains([0.5, 0.5, 0.5])
    assert box.distance_to([0.5, 0.5, 0.5]) == 0.0
    assert box.distance_to([2, 0.5, 0.5]) == pytest.approx(1.0)
    assert box.distance_to([2, 2, 0.5]) == pytest.approx(np.sqrt(2))
    assert box.intersects(Aabb([0.9, 0.9, 0.9], [2, 2, 2]))
    assert not box.intersects(Aabb([1.1, 0, 0], [2, 1, 1]))
    assert box.expanded(0.2).contains([-0.1, 0.5, 0.5])
    with pytest.raises(ValueError):
        Aabb([1, 0, 0], [0, 1, 1])


# --- raycast vs brute force --------------------------------------------------

def brute_force_hit(ray, mesh):
    """Independent oracle: per-triangle plane solve, nearest positive hit."""
    best = None
    v, f = mesh.vertices, mesh.triangles
    for i, (ia, ib, ic) in enumerate(f):
        a, b, c = v[ia], v[ib], v[ic]
        M = np.column_stack([-ray.direction, b - a, c - a])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        t, u, w = np.linalg.solve(M, ray.origin - a)
        if u >= -1e-12 and w >= -1e-12 and u + w <= 1 + 1e-12 and t > 1e-9:
            if best is None or t < best[0]:
                best = (t, i)
    return best


def test_ray_mesh_matches_brute_force():
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(100):
        mesh = random_mesh(rng, n_tris=rng.integers(3, 12))
        origin = rng.uniform(-1.5, 1.5, 3)
        if rng.random() < 0.7:
            # aim near a random vertex so a healthy share of rays actually hit
            direction = mesh.vertices[rng.integers(len(mesh.vertices))] - origin \
                + rng.normal(0, 0.05, 3)
        else:
            direction = rng.normal(size=3)
        ray = Ray(origin, direction)
        got = ray_mesh_intersect(ray, mesh)
        want = brute_force_hit(ray, mesh)
        if want is None:
            assert got is None
        else:
            assert got is not None
            assert got[0] == pytest.approx(want[0], abs=1e-9)
            assert got[2] == want[1]
            hits += 1
    assert hits > 20  # the scenes are small; make sure we exercised real hits


def test_raycast_tie_breaks_to_lowest_triangle():
    v = np.array([[-1, -1, 1], [1, -1, 1], [0, 1, 1]], dtype=float)
    mesh = TriMesh(v, np.array([[0, 1, 2], [0, 1, 2]]))  # duplicate triangle
    hit = ray_mesh_intersect(Ray([0, 0, 0], [0, 0, 1]), mesh)
    assert hit[2] == 0
    assert hit[0] == pytest.approx(1.0)


def test_raycast_empty_mesh_misses():
    mesh = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    assert ray_mesh_intersect(Ray([0, 0, 0], [0, 0, 1]), mesh) is None


# --- radius search vs linear scan --------------------------------------------

def test_radius_search_matches_linear_scan():
    rng = np.random.default_rng(12)
    for _ in range(100):
        pts = rng.uniform(-1, 1, (rng.integers(5, 200), 3))
        cloud = PointCloud(pts)
        index = build_kdtree(cloud)
        q = rng.uniform(-1, 1, 3)
        r = rng.uniform(0.05, 0.8)
        got = radius_search(index, q, r)
        want = sorted(np.flatnonzero(np.linalg.norm(pts - q, axis=1) <= r).tolist())
        assert got == want


def test_radius_search_validation():
    index = build_kdtree(PointCloud(np.zeros((3, 3))))
    with pytest.raises(ValueError):
        index.radius_search([0, 0, 0], 0.0)
    with pytest.raises(EmptyCloud):
        build_kdtree(PointCloud(np.zeros((0, 3))))


# --- voxel downsampling ------------------------------------------------------

def test_voxel_downsample_centroids_and_majority_labels():
    pts = np.array([
        [0.001, 0.001, 0.001], [0.003, 0.001, 0.001], [0.002, 0.004, 0.001],  # voxel A
        [0.101, 0.001, 0.001],                                                # voxel B
    ])
    labels = ("mug", "mug", "bowl", "can")
    out = voxel_downsample(PointCloud(pts, labels), 0.01)
    assert len(out) == 2
    order = np.argsort(out.points[:, 0])
    a, b = order[0], order[1]
    assert np.allclose(out.points[a], pts[:3].mean(axis=0))
    assert out.labels[a] == "mug"
    assert out.labels[b] == "can"


def test_voxel_downsample_deterministic_and_validated():
    rng = np.random.default_rng(13)
    cloud = PointCloud(rng.uniform(-0.2, 0.2, (500, 3)))
    a = voxel_downsample(cloud, 0.05)
    b = voxel_downsample(cloud, 0.05)
    assert np.array_equal(a.points, b.points)
    assert len(a) < len(cloud)
    with pytest.raises(ValueError):
        voxel_downsample(cloud, 0.0)
