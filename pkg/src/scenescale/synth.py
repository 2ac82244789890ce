"""Synthetic scenes with known ground truth.

Builds scenes of stick-figure persons standing with both ankles exactly on
a known tilted ground plane, renders their reference keypoints with the
scene camera, then applies the depth/size perturbation that a reprojection
loss cannot see: per person, translation and scale are multiplied by the
same factor k, which slides the person along its camera ray while growing
it to keep the projection fixed.  The perturbed scene is what an upstream
single-person estimator would hand us; the unperturbed scene is the oracle
the acceptance tests compare against.

Also rasterizes a plane-only depth map (with optional outlier corruption)
and a strided ground mask, so the plane-fitting path can run end to end on
the same scenes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, PlacementError, SchemaError
from .geometry import CameraModel, project
from .planefit import DepthObservation
from .scene import GroundPlane, Person, Scene, posed_joints

# Stick-figure template in SMPL 24-joint order, units of the target height,
# body frame: x left, y up, z anterior. Ankles are joints 7/8, both at
# y = -0.5 so a person stands on both feet at once.
_TEMPLATE = np.array(
    [
        [0.00, 0.00, 0.00],    # 0  pelvis
        [0.06, -0.02, 0.00],   # 1  hip l
        [-0.06, -0.02, 0.00],  # 2  hip r
        [0.00, 0.06, 0.01],    # 3  spine1
        [0.06, -0.27, 0.00],   # 4  knee l
        [-0.06, -0.27, 0.00],  # 5  knee r
        [0.00, 0.12, 0.01],    # 6  spine2
        [0.07, -0.50, 0.00],   # 7  ankle l
        [-0.07, -0.50, 0.00],  # 8  ankle r
        [0.00, 0.18, 0.01],    # 9  spine3
        [0.07, -0.52, 0.05],   # 10 foot l
        [-0.07, -0.52, 0.05],  # 11 foot r
        [0.00, 0.30, 0.00],    # 12 neck
        [0.08, 0.25, 0.00],    # 13 collar l
        [-0.08, 0.25, 0.00],   # 14 collar r
        [0.00, 0.38, 0.02],    # 15 head
        [0.18, 0.24, 0.00],    # 16 shoulder l
        [-0.18, 0.24, 0.00],   # 17 shoulder r
        [0.20, -0.02, 0.02],   # 18 elbow l
        [-0.20, -0.02, 0.02],  # 19 elbow r
        [0.21, -0.24, 0.03],   # 20 wrist l
        [-0.21, -0.24, 0.03],  # 21 wrist r
        [0.22, -0.31, 0.04],   # 22 hand l
        [-0.22, -0.31, 0.04],  # 23 hand r
    ]
)


# length of the head-neck-hip-knee-ankle measurement chain in template units;
# dividing by it makes person_height() return the requested stature exactly
_CHAIN = (15, 12, 1, 4, 7)
_CHAIN_MEASURE = float(
    np.sum(np.linalg.norm(np.diff(_TEMPLATE[list(_CHAIN)], axis=0), axis=1))
)


def joint_template(height: float) -> np.ndarray:
    """The 24-joint stick figure scaled so its measured height is `height`."""
    if height <= 0:
        raise SchemaError(f"height must be > 0, got {height}")
    return _TEMPLATE * (height / _CHAIN_MEASURE)


@dataclass
class SynthConfig:
    n_persons: int = 3
    height_range: tuple[float, float] = (1.5, 1.9)
    depth_range: tuple[float, float] = (3.5, 7.0)
    plane_tilt_deg: float = 5.0        # camera pitched down by this much
    keypoint_noise_px: float = 0.0
    ambiguity_factors: tuple[float, ...] | None = None  # None = all 1.0
    outlier_fraction: float = 0.0      # of masked depth pixels
    rng_seed: int = 0
    camera_focal: float = 1000.0
    image_size: tuple[int, int] = (1920, 1080)
    camera_height: float = 1.55        # meters above the ground plane
    metric_scale: float = 6.0
    mask_stride: int = 3               # ground-mask pixel stride

    def __post_init__(self):
        if self.n_persons < 1:
            raise SchemaError(f"n_persons must be >= 1, got {self.n_persons}")
        for name in ("height_range", "depth_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise SchemaError(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if not 0 <= self.plane_tilt_deg <= 45:
            raise SchemaError(f"plane_tilt_deg must be in [0, 45], got {self.plane_tilt_deg}")
        if self.keypoint_noise_px < 0:
            raise SchemaError("keypoint_noise_px must be >= 0")
        if self.ambiguity_factors is not None:
            self.ambiguity_factors = tuple(float(f) for f in self.ambiguity_factors)
            if len(self.ambiguity_factors) != self.n_persons:
                raise SchemaError(
                    f"{len(self.ambiguity_factors)} ambiguity factors for "
                    f"{self.n_persons} persons"
                )
            if any(f <= 0 for f in self.ambiguity_factors):
                raise SchemaError("ambiguity factors must be > 0")
        if not 0 <= self.outlier_fraction < 1:
            raise SchemaError("outlier_fraction must be in [0, 1)")
        if self.camera_height <= 0:
            raise SchemaError("camera_height must be > 0")
        if self.mask_stride < 1:
            raise SchemaError("mask_stride must be >= 1")


def _plane_frame(tilt_rad: float, camera_height: float):
    """Ground plane for a camera pitched down by tilt_rad, camera at origin.

    Returns (normal, point, e1, e2, body_x) where e1/e2 span the plane
    (e1 = image right, e2 = away from camera along the ground) and body_x
    completes a rotation [body_x, normal, e2] mapping body axes to camera
    axes (camera y points down, so the body up axis maps onto the normal).
    """
    c, s = np.cos(tilt_rad), np.sin(tilt_rad)
    normal = np.array([0.0, -c, -s])      # up, toward the camera
    point = -camera_height * normal       # foot of the camera's perpendicular
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, -s, c])
    body_x = np.array([-1.0, 0.0, 0.0])
    return normal, point, e1, e2, body_x


def _yaw_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def generate_scene(cfg: SynthConfig) -> tuple[Scene, Scene, DepthObservation]:
    """One synthetic frame: (ground truth, perturbed observation, depth).

    Both scenes share camera, keypoints, and the true plane; the observed
    scene's persons carry the factor-perturbed (t, s).  Placement, keypoint
    noise, and depth outliers draw from independent streams, so toggling
    noise or outliers leaves the scene geometry untouched.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    noise_rng = np.random.default_rng((cfg.rng_seed, 17))
    outlier_rng = np.random.default_rng((cfg.rng_seed, 31))
    camera = CameraModel(cfg.camera_focal, cfg.image_size)
    tilt = np.deg2rad(cfg.plane_tilt_deg)
    normal, p0, e1, e2, body_x = _plane_frame(tilt, cfg.camera_height)
    width, height_px = camera.image_size

    gt_persons: list[Person] = []
    for i in range(cfg.n_persons):
        person = None
        for _ in range(100):
            stature = rng.uniform(*cfg.height_range)
            z_target = rng.uniform(*cfg.depth_range)
            b = (z_target - cfg.camera_height * np.sin(tilt)) / np.cos(tilt)
            x_half = (width / 2 - 150.0) * z_target / camera.focal - 0.6
            a = rng.uniform(-x_half, x_half) if x_half > 0 else 0.0
            yaw = rng.uniform(0.0, 2 * np.pi)

            rotation = np.column_stack([body_x, normal, e2]) @ _yaw_matrix(yaw)
            joints = joint_template(stature)
            ankle_mid = 0.5 * (joints[7] + joints[8])
            ground_pt = p0 + a * e1 + b * e2
            translation = ground_pt - rotation @ ankle_mid

            candidate = Person(joints=joints, rotation=rotation, translation=translation)
            try:
                pixels = project(posed_joints(candidate), camera)
            except BehindCameraError:
                continue
            margin = 10.0
            if (
                pixels[:, 0].min() >= margin
                and pixels[:, 0].max() <= width - margin
                and pixels[:, 1].min() >= margin
                and pixels[:, 1].max() <= height_px - margin
            ):
                person = candidate
                person.ref_keypoints = pixels
                break
        if person is None:
            raise PlacementError(
                f"person {i}: no in-frustum placement in 100 attempts "
                f"(depth_range={cfg.depth_range}, image={camera.image_size})"
            )
        if cfg.keypoint_noise_px > 0:
            person.ref_keypoints = person.ref_keypoints + (
                cfg.keypoint_noise_px
                * noise_rng.standard_normal(person.ref_keypoints.shape)
            )
        gt_persons.append(person)

    factors = cfg.ambiguity_factors or tuple(1.0 for _ in range(cfg.n_persons))
    observed_persons = []
    for person, k in zip(gt_persons, factors):
        twin = person.copy()
        twin.translation = k * twin.translation
        twin.scale = k * twin.scale
        observed_persons.append(twin)

    gt_scene = Scene(gt_persons, camera, GroundPlane(normal, p0))
    observed = Scene(observed_persons, camera, GroundPlane(normal, p0))
    obs = _rasterize_ground(cfg, camera, normal, p0, gt_persons, outlier_rng)
    return gt_scene, observed, obs


def _rasterize_ground(
    cfg: SynthConfig,
    camera: CameraModel,
    normal: np.ndarray,
    p0: np.ndarray,
    persons: list[Person],
    rng: np.random.Generator,
) -> DepthObservation:
    width, height_px = camera.image_size
    cx, cy = camera.principal_point
    rx = (np.arange(width) - cx) / camera.focal
    ry = (np.arange(height_px) - cy) / camera.focal

    # ray (rx, ry, 1) meets the plane at depth z = (p0.n) / (r.n)
    denom = normal[0] * rx[None, :] + normal[1] * ry[:, None] + normal[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (p0 @ normal) / denom
    hit = np.isfinite(z) & (z > 0.3) & (z < 40.0)
    z = np.where(hit, z, 0.0)

    mask = hit.copy()
    stride = cfg.mask_stride
    if stride > 1:
        keep = np.zeros_like(mask)
        keep[::stride, ::stride] = True
        mask &= keep
    for person in persons:
        px = project(posed_joints(person), camera)
        u0 = max(int(px[:, 0].min()) - 25, 0)
        u1 = min(int(px[:, 0].max()) + 25, width)
        v0 = max(int(px[:, 1].min()) - 25, 0)
        v1 = min(int(px[:, 1].max()) + 25, height_px)
        mask[v0:v1, u0:u1] = False

    if cfg.outlier_fraction > 0:
        flat = np.flatnonzero(mask)
        n_out = int(round(cfg.outlier_fraction * flat.size))
        if n_out:
            chosen = rng.choice(flat.size, size=n_out, replace=False)
            rows, cols = np.unravel_index(flat[chosen], mask.shape)
            offset = rng.uniform(0.3, 3.0, n_out) * rng.choice([-1.0, 1.0], n_out)
            z[rows, cols] = np.maximum(z[rows, cols] + offset, 0.3)

    return DepthObservation(z / cfg.metric_scale, mask, cfg.metric_scale)


def evaluate_recovery(gt: Scene, recovered: Scene) -> np.ndarray:
    """Per-person (scale_error, depth_error, xy_error), shape (N, 3).

    scale_error and depth_error are relative (|est/true - 1|); xy_error is
    the absolute lateral offset in meters.
    """
    if len(gt.persons) != len(recovered.persons):
        raise SchemaError(
            f"{len(recovered.persons)} recovered persons vs {len(gt.persons)} ground truth"
        )
    out = np.zeros((len(gt.persons), 3))
    for i, (g, r) in enumerate(zip(gt.persons, recovered.persons)):
        out[i, 0] = abs(r.scale / g.scale - 1.0)
        out[i, 1] = abs(r.translation[2] / g.translation[2] - 1.0)
        out[i, 2] = float(np.linalg.norm(r.translation[:2] - g.translation[:2]))
    return out
