"""Pinhole camera model, projection, and weak-perspective lifting.

Coordinate conventions (OpenCV-style):
  - camera frame: x right, y down, z forward, units in meters;
  - pixels: u right, v down, origin at the top-left corner;
  - a single fixed focal length ``f`` in pixels, square pixels.

A weak-perspective person camera ``[sigma, t_x, t_y]`` is lifted to a full
perspective translation ``[t_x, t_y, f / sigma]``.  Here ``t_x, t_y`` are
camera-frame meters at the lifted depth; upstream estimators that report
crop-normalized translations should be converted first with
``crop_to_weak_perspective``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCameraError, InvalidCameraError


@dataclass
class CameraModel:
    """Perspective camera: focal length (px), principal point (px), image size.

    ``principal_point`` defaults to the image center when omitted.
    """

    focal: float = 1000.0
    image_size: tuple[int, int] = (1920, 1080)  # (width, height)
    principal_point: np.ndarray | None = None

    def __post_init__(self):
        self.focal = float(self.focal)
        w, h = self.image_size
        self.image_size = (int(w), int(h))
        if self.focal <= 0:
            raise InvalidCameraError(f"focal must be > 0, got {self.focal}")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise InvalidCameraError(f"image size must be positive, got {self.image_size}")
        if self.principal_point is None:
            self.principal_point = np.array(
                [self.image_size[0] / 2.0, self.image_size[1] / 2.0]
            )
        else:
            self.principal_point = np.asarray(self.principal_point, dtype=float).reshape(2)


@dataclass
class WeakPerspectiveCam:
    """Weak-perspective person camera: uniform scale and normalized translation."""

    sigma: float
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self):
        self.sigma = float(self.sigma)
        self.tx = float(self.tx)
        self.ty = float(self.ty)
        if self.sigma <= 0:
            raise InvalidCameraError(f"sigma must be > 0, got {self.sigma}")


def weak_to_perspective(wp: WeakPerspectiveCam, cam: CameraModel) -> np.ndarray:
    """Lift a weak-perspective camera to a perspective translation.

    Returns ``t = [t_x, t_y, d]`` with depth ``d = f / sigma``; the lateral
    components pass through unchanged (camera-frame meters, see module
    docstring).
    """
    if wp.sigma <= 0:
        raise InvalidCameraError(f"sigma must be > 0, got {wp.sigma}")
    return np.array([wp.tx, wp.ty, cam.focal / wp.sigma])


def crop_to_weak_perspective(
    crop_scale: float,
    crop_tx: float,
    crop_ty: float,
    crop_center: tuple[float, float],
    crop_size: float,
    cam: CameraModel,
) -> WeakPerspectiveCam:
    """Convert an HMR-style crop camera to a full-image weak-perspective camera.

    Upstream convention assumed: a body point ``X`` (camera-aligned, meters)
    lands at pixel ``u = u0 + (b/2) * s * (X + t_x)`` for a square crop of
    side ``b`` centered at ``(u0, v0)``.  Matching against the perspective
    form ``u = c_x + f * (X + T_x) / T_z`` gives

        sigma = s * b / 2
        T_x   = t_x + 2 * (u0 - c_x) / (s * b)      (same for y)

    so the returned camera lifts through :func:`weak_to_perspective` to the
    translation the crop camera implies in the full image.
    """
    if crop_scale <= 0 or crop_size <= 0:
        raise InvalidCameraError("crop scale and size must be > 0")
    cx, cy = cam.principal_point
    sb = crop_scale * crop_size
    return WeakPerspectiveCam(
        sigma=sb / 2.0,
        tx=crop_tx + 2.0 * (crop_center[0] - cx) / sb,
        ty=crop_ty + 2.0 * (crop_center[1] - cy) / sb,
    )


def project(points: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Perspective-project camera-frame points to pixels.

    ``points`` has shape (..., 3); returns (..., 2) with
    ``(f*x/z + c_x, f*y/z + c_y)``.  Raises :class:`BehindCameraError` if any
    z <= 0 (the optimization objective uses :func:`project_clamped` instead).
    """
    points = np.asarray(points, dtype=float)
    z = points[..., 2]
    if np.any(z <= 0):
        bad = np.nonzero(np.atleast_1d(z) <= 0)[0]
        raise BehindCameraError(f"points behind camera (z <= 0) at indices {bad.tolist()}")
    return _pinhole(points, z, cam)


def project_clamped(
    points: np.ndarray, cam: CameraModel, z_epsilon: float = 1e-3
) -> tuple[np.ndarray, np.ndarray]:
    """Projection that clamps z to ``z_epsilon`` instead of raising.

    Returns ``(pixels, clamped)`` where ``clamped`` is a boolean mask of the
    points whose depth was clamped.  Keeps the objective finite while the
    optimizer recovers a person placed behind the camera.
    """
    points = np.asarray(points, dtype=float)
    z = points[..., 2]
    clamped = z < z_epsilon
    zc = np.maximum(z, z_epsilon)
    return _pinhole(points, zc, cam), clamped


def _pinhole(points: np.ndarray, z: np.ndarray, cam: CameraModel) -> np.ndarray:
    cx, cy = cam.principal_point
    u = cam.focal * points[..., 0] / z + cx
    v = cam.focal * points[..., 1] / z + cy
    return np.stack([u, v], axis=-1)


def project_jacobian(points: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Exact Jacobian of :func:`project` w.r.t. the 3D point.

    For each point returns the 2x3 matrix
    ``[[f/z, 0, -f*x/z^2], [0, f/z, -f*y/z^2]]``; shape (..., 2, 3).
    """
    points = np.asarray(points, dtype=float)
    z = points[..., 2]
    if np.any(z <= 0):
        bad = np.nonzero(np.atleast_1d(z) <= 0)[0]
        raise BehindCameraError(f"points behind camera (z <= 0) at indices {bad.tolist()}")
    return _pinhole_jacobian(points, z, cam)


def project_jacobian_clamped(
    points: np.ndarray, cam: CameraModel, z_epsilon: float = 1e-3
) -> np.ndarray:
    """Jacobian of :func:`project_clamped` w.r.t. the 3D point.

    Below the clamp the projected pixel no longer depends on z, so the z
    column is zeroed for clamped points (the other columns use the clamped
    depth).
    """
    points = np.asarray(points, dtype=float)
    z = points[..., 2]
    clamped = z < z_epsilon
    zc = np.maximum(z, z_epsilon)
    out = _pinhole_jacobian(points, zc, cam)
    out[clamped, :, 2] = 0.0
    return out


def _pinhole_jacobian(points: np.ndarray, z: np.ndarray, cam: CameraModel) -> np.ndarray:
    f = cam.focal
    out = np.zeros(points.shape[:-1] + (2, 3))
    out[..., 0, 0] = f / z
    out[..., 0, 2] = -f * points[..., 0] / z**2
    out[..., 1, 1] = f / z
    out[..., 1, 2] = -f * points[..., 1] / z**2
    return out
