"""Scene data model: persons, ground plane, and posing.

A person carries body-frame joints ``J`` (meters, y up), a fixed rotation
``R``, and the two quantities the optimizer adjusts: a camera-frame
translation ``t`` and a uniform body scale ``s``.  The posed joint k is

    x_k = s * R @ J[k] + t

Joint indexing defaults to a 24-joint SMPL-ordered skeleton (ankles at 7/8,
head at 15); scene files may override the indices for other conventions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SchemaError
from .geometry import CameraModel, WeakPerspectiveCam, project_clamped

# Default joint indices (SMPL 24-joint order).
ANKLE_LEFT = 7
ANKLE_RIGHT = 8
HEAD = 15
# head -> neck -> left hip -> left knee -> left ankle
FOOT_CHAIN = (12, 1, 4, 7)


@dataclass
class GroundPlane:
    """Plane through ``point`` with unit ``normal``; distances are signed by n."""

    normal: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        norm = float(np.linalg.norm(n))
        if not np.isfinite(norm) or norm < 1e-12:
            raise SchemaError(f"plane normal must be nonzero, got {self.normal}")
        self.normal = n / norm
        self.point = np.asarray(self.point, dtype=float).reshape(3)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Signed point-to-plane distance, (...,3) -> (...)."""
        points = np.asarray(points, dtype=float)
        return (points - self.point) @ self.normal

    def copy(self) -> "GroundPlane":
        return GroundPlane(self.normal.copy(), self.point.copy())


@dataclass
class Person:
    """One person: body-frame joints plus the per-person pose/camera state."""

    joints: np.ndarray            # (K, 3) body frame, meters
    rotation: np.ndarray          # (3, 3) orthonormal
    translation: np.ndarray | None = None     # (3,) camera frame, meters
    scale: float = 1.0
    ref_keypoints: np.ndarray | None = None   # (K, 2) pixels
    confidences: np.ndarray | None = None     # (K,) in [0, 1]
    weak_cam: WeakPerspectiveCam | None = None  # upstream estimate, lifted on init
    ankle_left_idx: int = ANKLE_LEFT
    ankle_right_idx: int = ANKLE_RIGHT
    head_idx: int = HEAD
    foot_chain: tuple[int, ...] = FOOT_CHAIN

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=float)
        if self.joints.ndim != 2 or self.joints.shape[1] != 3 or self.joints.shape[0] < 2:
            raise SchemaError(f"joints must be (K>=2, 3), got shape {self.joints.shape}")
        k = self.joints.shape[0]
        self.rotation = np.asarray(self.rotation, dtype=float)
        if self.rotation.shape != (3, 3):
            raise SchemaError(f"rotation must be 3x3, got {self.rotation.shape}")
        if np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))) > 1e-6:
            raise SchemaError("rotation is not orthonormal within 1e-6")
        if self.translation is not None:
            self.translation = np.asarray(self.translation, dtype=float).reshape(3)
        self.scale = float(self.scale)
        if self.scale <= 0:
            raise SchemaError(f"scale must be > 0, got {self.scale}")
        if self.ref_keypoints is not None:
            self.ref_keypoints = np.asarray(self.ref_keypoints, dtype=float)
            if self.ref_keypoints.shape != (k, 2):
                raise SchemaError(
                    f"ref_keypoints must be ({k}, 2), got {self.ref_keypoints.shape}"
                )
        if self.confidences is None:
            self.confidences = np.ones(k)
        else:
            self.confidences = np.asarray(self.confidences, dtype=float).reshape(k)
            if np.any(self.confidences < 0) or np.any(self.confidences > 1):
                raise SchemaError("confidences must lie in [0, 1]")
        for name in ("ankle_left_idx", "ankle_right_idx", "head_idx"):
            idx = int(getattr(self, name))
            setattr(self, name, idx)
            if not 0 <= idx < k:
                raise SchemaError(f"{name}={idx} out of range for K={k}")
        if self.ankle_left_idx == self.ankle_right_idx:
            raise SchemaError("ankle indices must be distinct")
        self.foot_chain = tuple(int(i) for i in self.foot_chain)
        for idx in self.foot_chain:
            if not 0 <= idx < k:
                raise SchemaError(f"foot_chain index {idx} out of range for K={k}")

    @property
    def n_joints(self) -> int:
        return self.joints.shape[0]

    def copy(self) -> "Person":
        return replace(
            self,
            joints=self.joints.copy(),
            rotation=self.rotation.copy(),
            translation=None if self.translation is None else self.translation.copy(),
            ref_keypoints=None if self.ref_keypoints is None else self.ref_keypoints.copy(),
            confidences=self.confidences.copy(),
        )


@dataclass
class Scene:
    """All persons in one frame plus the shared camera and optional plane."""

    persons: list[Person]
    camera: CameraModel = field(default_factory=CameraModel)
    plane: GroundPlane | None = None

    def __post_init__(self):
        if len(self.persons) < 1:
            raise SchemaError("scene needs at least one person")

    def copy(self) -> "Scene":
        return Scene(
            persons=[p.copy() for p in self.persons],
            camera=self.camera,
            plane=None if self.plane is None else self.plane.copy(),
        )


def posed_joint(person: Person, k: int) -> np.ndarray:
    """Camera-frame position of joint k: s * R @ J[k] + t."""
    if not 0 <= k < person.n_joints:
        raise IndexError(f"joint index {k} out of range for K={person.n_joints}")
    if person.translation is None:
        raise SchemaError("person translation not set (initialize the scene first)")
    return person.scale * (person.rotation @ person.joints[k]) + person.translation


def posed_joints(person: Person) -> np.ndarray:
    """All posed joints at once, (K, 3)."""
    if person.translation is None:
        raise SchemaError("person translation not set (initialize the scene first)")
    # scale applied after the rotation so this matches the optimizer's
    # internal split (rotated joints cached for the scale gradient)
    return person.scale * (person.joints @ person.rotation.T) + person.translation


def posed_ankles(person: Person) -> np.ndarray:
    """Posed left and right ankle, (2, 3)."""
    return posed_joints(person)[[person.ankle_left_idx, person.ankle_right_idx]]


def person_reprojection_error(
    person: Person, camera: CameraModel, z_epsilon: float = 1e-3
) -> float:
    """Confidence-weighted sum of per-joint pixel errors for one person."""
    if person.ref_keypoints is None:
        raise SchemaError("person has no reference keypoints")
    pixels, _ = project_clamped(posed_joints(person), camera, z_epsilon)
    residuals = np.linalg.norm(person.ref_keypoints - pixels, axis=-1)
    return float(np.dot(person.confidences, residuals))


def select_reference_person(scene: Scene, z_epsilon: float = 1e-3) -> int:
    """Index of the person with lowest initial reprojection error.

    Ties break toward the lowest index (np.argmin picks the first minimum).
    """
    errors = [person_reprojection_error(p, scene.camera, z_epsilon) for p in scene.persons]
    return int(np.argmin(errors))


def person_height(person: Person) -> float:
    """Stature estimate: summed segment lengths along the head-to-foot chain.

    Measured on posed joints, so it scales linearly with person.scale
    (rotation and translation do not change segment lengths).
    """
    chain = (person.head_idx,) + person.foot_chain
    if len(chain) < 2:
        raise SchemaError("height chain needs at least two joints")
    pts = posed_joints(person)[list(chain)]
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
