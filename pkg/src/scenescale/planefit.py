"""Ground-plane recovery from a masked depth map.

Pipeline: unproject masked ground pixels to a metric point cloud, fit a
plane by RANSAC over 3-point hypotheses, refine the winner on its inliers
by least squares, then re-anchor the plane at the reference person's ankle
so the feet constraint measures distances from a point with trusted depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientGroundError, LowConsensusError, SchemaError
from .geometry import CameraModel
from .scene import GroundPlane, Scene, posed_ankles, select_reference_person


@dataclass
class DepthObservation:
    """Relative depth grid + ground mask; metric_scale converts to meters."""

    depth: np.ndarray        # (H, W) relative units
    ground_mask: np.ndarray  # (H, W) bool, True = ground
    metric_scale: float = 6.0

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        self.ground_mask = np.asarray(self.ground_mask).astype(bool)
        if self.depth.ndim != 2:
            raise SchemaError(f"depth must be 2-D, got shape {self.depth.shape}")
        if self.ground_mask.shape != self.depth.shape:
            raise SchemaError(
                f"mask shape {self.ground_mask.shape} != depth shape {self.depth.shape}"
            )
        self.metric_scale = float(self.metric_scale)
        if self.metric_scale <= 0:
            raise SchemaError(f"metric_scale must be > 0, got {self.metric_scale}")
        masked = self.depth[self.ground_mask]
        if masked.size and (not np.all(np.isfinite(masked)) or np.any(masked <= 0)):
            raise SchemaError("masked depth values must be finite and > 0")


@dataclass
class RansacConfig:
    iterations: int = 500
    inlier_threshold: float = 0.05   # meters
    min_inlier_fraction: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise SchemaError(f"iterations must be >= 1, got {self.iterations}")
        if self.inlier_threshold <= 0:
            raise SchemaError(f"inlier_threshold must be > 0, got {self.inlier_threshold}")
        if not 0 <= self.min_inlier_fraction <= 1:
            raise SchemaError(
                f"min_inlier_fraction must be in [0, 1], got {self.min_inlier_fraction}"
            )


def unproject_ground(obs: DepthObservation, cam: CameraModel) -> np.ndarray:
    """Masked pixels to camera-frame points, (M, 3), row-major pixel order."""
    rows, cols = np.nonzero(obs.ground_mask)
    if rows.size < 3:
        raise InsufficientGroundError(f"need >= 3 ground pixels, mask has {rows.size}")
    z = obs.depth[rows, cols] * obs.metric_scale
    cx, cy = cam.principal_point
    x = (cols - cx) * z / cam.focal
    y = (rows - cy) * z / cam.focal
    return np.column_stack([x, y, z])


def _lsq_plane(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares plane: centroid + smallest-singular direction."""
    centroid = points.mean(axis=0)
    _, _, vh = np.linalg.svd(points - centroid, full_matrices=False)
    return vh[-1], centroid


def ransac_plane(
    points: np.ndarray, cfg: RansacConfig | None = None
) -> tuple[GroundPlane, np.ndarray]:
    """Robust plane fit; returns the plane and the final inlier indices.

    Consensus counting keeps the first-seen best hypothesis (strict >),
    so results are reproducible for a fixed rng_seed.  The winning
    hypothesis is refined by least squares on its inliers, inliers are
    recomputed against the refined plane, and one more refinement pass
    runs on that set.  The normal is flipped, if needed, so the camera
    origin lies on the positive side of the plane.
    """
    if cfg is None:
        cfg = RansacConfig()
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise SchemaError(f"points must be (M, 3), got {points.shape}")
    m = points.shape[0]
    if m < 3:
        raise InsufficientGroundError(f"need >= 3 points, got {m}")

    rng = np.random.default_rng(cfg.rng_seed)
    best_count = 0
    best_inliers: np.ndarray | None = None
    for _ in range(cfg.iterations):
        idx = rng.choice(m, size=3, replace=False)
        p0, p1, p2 = points[idx]
        a, b = p1 - p0, p2 - p0
        normal = np.cross(a, b)
        norm = np.linalg.norm(normal)
        if norm <= 1e-9 * max(1.0, np.linalg.norm(a) * np.linalg.norm(b)):
            continue  # collinear sample
        normal = normal / norm
        dist = np.abs((points - p0) @ normal)
        inliers = dist <= cfg.inlier_threshold
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers

    if best_inliers is None or best_count < max(3, int(np.ceil(cfg.min_inlier_fraction * m))):
        raise LowConsensusError(
            f"best consensus {best_count}/{m} below "
            f"min_inlier_fraction={cfg.min_inlier_fraction}"
        )

    inlier_set = best_inliers
    normal = centroid = None
    for _ in range(2):
        normal, centroid = _lsq_plane(points[inlier_set])
        dist = np.abs((points - centroid) @ normal)
        inlier_set = dist <= cfg.inlier_threshold
        if inlier_set.sum() < 3:
            # refinement degenerated; fall back to the consensus set
            inlier_set = best_inliers
            normal, centroid = _lsq_plane(points[inlier_set])
            break

    # camera origin on the positive side: (0 - centroid) . n >= 0
    if centroid @ normal > 0:
        normal = -normal
    return GroundPlane(normal, centroid), np.nonzero(inlier_set)[0]


def fit_rms(plane: GroundPlane, points: np.ndarray, inliers: np.ndarray) -> float:
    """RMS point-to-plane distance of the inlier set."""
    d = plane.signed_distance(points[inliers])
    return float(np.sqrt(np.mean(d * d)))


def anchor_plane(plane: GroundPlane, scene: Scene) -> GroundPlane:
    """Move the plane point to the reference person's supporting ankle.

    The supporting ankle is the one with the smaller signed distance to the
    fitted plane (the lower one, given the camera-positive orientation).
    The normal is unchanged.
    """
    ref = scene.persons[select_reference_person(scene)]
    ankles = posed_ankles(ref)
    support = ankles[int(np.argmin(plane.signed_distance(ankles)))]
    return GroundPlane(plane.normal.copy(), support.copy())
