"""Object database, oracle recognizer, and fixation-to-object association.

The recognizer stands in for a template-matching backend: it returns the
database-known objects with configurable pose noise and misdetection, and
never returns objects absent from the database (distractors).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud, RigidTransform, SpatialIndex, TriMesh, radius_search
from . import meshio

ASSOCIATION_RADIUS_M = 0.01


class UnknownModel(Exception):
    pass


@dataclass(frozen=True)
class GripSpec:
    approach: tuple        # unit approach axis in the model frame (gripper travel direction)
    contact_offset: tuple  # contact point relative to the model centroid, model frame


@dataclass(frozen=True)
class ObjectModel:
    id: str
    name: str
    mesh: TriMesh
    dimensions: tuple      # (w, d, h) meters
    grip: GripSpec | None
    task: str = "none"     # "mug-retrieval" | "cereal-pour" | "none"

    def __post_init__(self):
        if min(self.dimensions) <= 0:
            raise ValueError("dimensions must be positive")
        ext = self.mesh.bounds().max - self.mesh.bounds().min
        if np.any(np.abs(ext - np.array(self.dimensions)) > 0.1 * np.array(self.dimensions)):
            raise ValueError(f"mesh extents {ext} inconsistent with dimensions {self.dimensions}")


@dataclass(frozen=True)
class ObjectInstance:
    model_id: str                  # database id, or a scene-only id for distractors
    pose: RigidTransform           # model frame -> world
    centroid: np.ndarray           # world-frame mesh centroid
    recognized: bool

    @staticmethod
    def place(model_id: str, mesh: TriMesh, pose: RigidTransform, recognized: bool) -> "ObjectInstance":
        return ObjectInstance(model_id, pose, pose.apply(mesh.centroid()), recognized)


@dataclass(frozen=True)
class NoiseSpec:
    pose_sigma_m: float = 0.0
    misdetect_p: float = 0.0

    def __post_init__(self):
        if self.pose_sigma_m < 0:
            raise ValueError("pose sigma must be >= 0")
        if not (0.0 <= self.misdetect_p <= 1.0):
            raise ValueError("misdetection probability must be in [0, 1]")


def default_database() -> dict[str, ObjectModel]:
    """Parametric primitive stand-ins for the physical object set.

    Model frames have +z up.  Grip approach axes point from pre-grip toward
    the contact point (mug/can are entered from above, the cereal box is
    gripped on its largest face from the side).
    """
    mug_mesh = meshio.cylinder_mesh(0.04, 0.10)
    cereal_mesh = meshio.box_mesh(0.07, 0.20, 0.30)
    bowl_mesh = meshio.hemisphere_mesh(0.075)
    can_mesh = meshio.cylinder_mesh(0.033, 0.12)
    return {
        "mug": ObjectModel("mug", "coffee mug", mug_mesh, (0.08, 0.08, 0.10),
                           GripSpec((0.0, 0.0, -1.0), (0.0, 0.0, 0.05)), "mug-retrieval"),
        "cereal": ObjectModel("cereal", "cereal box", cereal_mesh, (0.07, 0.20, 0.30),
                              # side grip on the upper third keeps the wrist
                              # clear of the table
                              GripSpec((-1.0, 0.0, 0.0), (0.035, 0.0, 0.10)), "cereal-pour"),
        "bowl": ObjectModel("bowl", "bowl", bowl_mesh, (0.15, 0.15, 0.075),
                            None, "none"),
        "can": ObjectModel("can", "drink can", can_mesh, (0.066, 0.066, 0.12),
                           GripSpec((0.0, 0.0, -1.0), (0.0, 0.0, 0.06)), "none"),
    }


def save_database(db: dict[str, ObjectModel], directory):
    os.makedirs(directory, exist_ok=True)
    for m in db.values():
        meshio.write_stl(os.path.join(directory, f"{m.id}.stl"), m.mesh, m.id)
        desc = {
            "id": m.id, "name": m.name, "mesh": f"{m.id}.stl",
            "dimensions": list(m.dimensions), "task": m.task,
            "grip": None if m.grip is None else
                    {"approach": list(m.grip.approach),
                     "contact_offset": list(m.grip.contact_offset)},
        }
        with open(os.path.join(directory, f"{m.id}.json"), "w") as fh:
            json.dump(desc, fh, indent=2, sort_keys=True)


def load_database(directory) -> dict[str, ObjectModel]:
    db = {}
    for fname in sorted(os.listdir(directory)):
        if not fname.endswith(".json"):
            continue
        with open(os.path.join(directory, fname)) as fh:
            d = json.load(fh)
        mesh = meshio.read_mesh(os.path.join(directory, d["mesh"]))
        grip = None
        if d.get("grip"):
            grip = GripSpec(tuple(d["grip"]["approach"]), tuple(d["grip"]["contact_offset"]))
        db[d["id"]] = ObjectModel(d["id"], d["name"], mesh, tuple(d["dimensions"]),
                                  grip, d.get("task", "none"))
    return db


def recognize(ground_truth, db: dict[str, ObjectModel], noise: NoiseSpec,
              seed: int = 0) -> list[ObjectInstance]:
    """Oracle recognizer: database objects with perturbed poses; distractors
    (ids not in the database) are never returned."""
    rng = np.random.default_rng(seed)
    out = []
    for inst in ground_truth:
        if inst.model_id not in db:
            continue
        drop = rng.random() < noise.misdetect_p
        dt = rng.normal(0.0, noise.pose_sigma_m, 3) if noise.pose_sigma_m > 0 else np.zeros(3)
        if drop:
            continue
        pose = RigidTransform(inst.pose.rotation, inst.pose.translation + dt)
        out.append(ObjectInstance.place(inst.model_id, db[inst.model_id].mesh, pose, True))
    return out


def associate_fixation(fix_point, instances, labeled_cloud: PointCloud,
                       index: SpatialIndex, radius: float = ASSOCIATION_RADIUS_M):
    """Object id owning the fixated surface patch, or None.

    Neighbors within `radius` of the 3D fixation vote by label; among
    recognized instances owning at least one neighbor, the one with the
    nearest centroid wins (ties break by id order).
    """
    if labeled_cloud.labels is None:
        return None
    neighbors = radius_search(index, np.asarray(fix_point, dtype=float), radius)
    owners = {labeled_cloud.labels[i] for i in neighbors} - {None}
    if not owners:
        return None
    candidates = [inst for inst in instances if inst.model_id in owners and inst.recognized]
    if not candidates:
        return None
    p = np.asarray(fix_point, dtype=float)
    candidates.sort(key=lambda inst: (float(np.linalg.norm(p - inst.centroid)), inst.model_id))
    return candidates[0].model_id
