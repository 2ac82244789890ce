"""Loss terms and their analytic gradients w.r.t. per-person (t, s).

Two terms over the posed joints x_i = s * R @ J_i + t:

  reprojection: sum over persons and joints of c_i * ||kp_i - project(x_i)||
                (unsquared Euclidean norm per joint);
  plane:        sum over persons of |dist(ankle_l)| + |dist(ankle_r)|,
                signed point-to-plane distance of the posed ankles.

The total is reprojection + lam * plane, with either term zeroed by mode.

Both terms have kinks where a residual is exactly zero; there we take the
zero subgradient.  Numerically, any residual norm or ankle distance below
KINK_EPS contributes nothing to the gradient, so a scene at an exact
optimum stays a fixed point of gradient descent instead of dithering on
sign flips of float-roundoff residuals.

Joints behind the camera are projected at z clamped to z_epsilon (where the
pixel no longer depends on z) and add a linear penalty
behind_penalty * c_i * (z_epsilon - z) that pushes them back in front.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingPlaneError, SchemaError
from .geometry import project_clamped, project_jacobian_clamped
from .scene import Scene

# Residuals smaller than this are treated as exactly zero in gradients
# (the zero-subgradient choice at the |.| kink).  Set well above float
# roundoff of the projection pipeline: an unsquared norm keeps unit-length
# gradient direction no matter how small the residual, so roundoff-scale
# residuals would otherwise inject full-strength noise into the optimizer.
KINK_EPS = 1e-9

MODES = ("full", "reprojection_only", "plane_only")


@dataclass
class ObjectiveConfig:
    lam: float = 1.0              # plane-term weight
    z_epsilon: float = 1e-3      # behind-camera depth clamp
    mode: str = "full"
    behind_penalty: float = 100.0  # per meter behind the clamp, per unit confidence

    def __post_init__(self):
        self.lam = float(self.lam)
        self.z_epsilon = float(self.z_epsilon)
        if self.lam < 0:
            raise SchemaError(f"lam must be >= 0, got {self.lam}")
        if self.z_epsilon <= 0:
            raise SchemaError(f"z_epsilon must be > 0, got {self.z_epsilon}")
        if self.mode not in MODES:
            raise SchemaError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def uses_reprojection(self) -> bool:
        return self.mode != "plane_only"

    @property
    def uses_plane(self) -> bool:
        return self.mode != "reprojection_only"


@dataclass
class LossBreakdown:
    reprojection: float
    plane: float
    total: float
    per_person: list[tuple[float, float]] = field(default_factory=list)


def reprojection_loss(
    scene: Scene, z_epsilon: float = 1e-3, behind_penalty: float = 100.0
) -> float:
    """Confidence-weighted sum of per-joint pixel errors over all persons."""
    total = 0.0
    for person in scene.persons:
        total += _person_reprojection(scene, person, z_epsilon, behind_penalty)[0]
    return total


def plane_loss(scene: Scene) -> float:
    """Sum of absolute ankle-to-plane distances over all persons."""
    if scene.plane is None:
        raise MissingPlaneError("scene has no ground plane")
    total = 0.0
    for person in scene.persons:
        total += _person_plane(scene, person)[0]
    return total


def total_loss(scene: Scene, cfg: ObjectiveConfig) -> LossBreakdown:
    """Mode-weighted sum; the omitted term reads as 0 in the breakdown."""
    return _evaluate(scene, cfg, want_grad=False)[0]


def gradients(scene: Scene, cfg: ObjectiveConfig) -> tuple[np.ndarray, np.ndarray]:
    """Analytic d(total)/dt (N,3) and d(total)/ds (N,) for all persons."""
    _, grad_t, grad_s = _evaluate(scene, cfg, want_grad=True)
    return grad_t, grad_s


def loss_and_gradients(
    scene: Scene, cfg: ObjectiveConfig
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    """Loss breakdown and both gradients in one evaluation (optimizer hot path)."""
    return _evaluate(scene, cfg, want_grad=True)


def _evaluate(
    scene: Scene, cfg: ObjectiveConfig, want_grad: bool
) -> tuple[LossBreakdown, np.ndarray, np.ndarray]:
    if cfg.uses_plane and scene.plane is None:
        raise MissingPlaneError(f"mode={cfg.mode!r} needs a ground plane in the scene")
    n = len(scene.persons)
    grad_t = np.zeros((n, 3))
    grad_s = np.zeros(n)
    rep_sum = 0.0
    plane_sum = 0.0
    per_person = []
    for idx, person in enumerate(scene.persons):
        rep_n = 0.0
        plane_n = 0.0
        if cfg.uses_reprojection:
            rep_n, gt_r, gs_r = _person_reprojection(
                scene, person, cfg.z_epsilon, cfg.behind_penalty, want_grad
            )
            grad_t[idx] += gt_r
            grad_s[idx] += gs_r
        if cfg.uses_plane:
            plane_n, gt_p, gs_p = _person_plane(scene, person, want_grad)
            grad_t[idx] += cfg.lam * gt_p
            grad_s[idx] += cfg.lam * gs_p
        rep_sum += rep_n
        plane_sum += plane_n
        per_person.append((rep_n, plane_n))
    total = rep_sum + cfg.lam * plane_sum
    breakdown = LossBreakdown(rep_sum, plane_sum, total, per_person)
    return breakdown, grad_t, grad_s


def _person_reprojection(
    scene: Scene,
    person,
    z_epsilon: float,
    behind_penalty: float,
    want_grad: bool = False,
) -> tuple[float, np.ndarray, float]:
    if person.ref_keypoints is None:
        raise SchemaError("person has no reference keypoints")
    rotated = person.joints @ person.rotation.T          # (K, 3) = R @ J_i
    posed = person.scale * rotated + person.translation
    pixels, clamped = project_clamped(posed, scene.camera, z_epsilon)
    residuals = person.ref_keypoints - pixels            # (K, 2)
    norms = np.linalg.norm(residuals, axis=-1)
    c = person.confidences
    loss = float(np.dot(c, norms))
    # linear push-back for joints clamped at the z floor
    behind = np.maximum(z_epsilon - posed[..., 2], 0.0)
    loss += behind_penalty * float(np.dot(c, behind))

    if not want_grad:
        return loss, np.zeros(3), 0.0

    grad_t = np.zeros(3)
    grad_s = 0.0
    active = norms >= KINK_EPS
    if np.any(active):
        jac = project_jacobian_clamped(posed, scene.camera, z_epsilon)  # (K, 2, 3)
        unit = residuals[active] / norms[active, None]
        # d(c*||kp - pi(x)||)/dx = -c * J_pi^T @ unit
        dx = -c[active, None] * np.einsum("kij,ki->kj", jac[active], unit)
        grad_t += dx.sum(axis=0)
        grad_s += float(np.sum(dx * rotated[active]))
    if np.any(clamped):
        cc = c[clamped]
        grad_t[2] += -behind_penalty * float(np.sum(cc))
        grad_s += -behind_penalty * float(np.dot(cc, rotated[clamped, 2]))
    return loss, grad_t, grad_s


def _person_plane(scene: Scene, person, want_grad: bool = False) -> tuple[float, np.ndarray, float]:
    plane = scene.plane
    ankle_idx = [person.ankle_left_idx, person.ankle_right_idx]
    rotated = person.joints[ankle_idx] @ person.rotation.T   # (2, 3)
    posed = person.scale * rotated + person.translation
    dist = (posed - plane.point) @ plane.normal
    loss = float(np.sum(np.abs(dist)))
    if not want_grad:
        return loss, np.zeros(3), 0.0
    grad_t = np.zeros(3)
    grad_s = 0.0
    for d, rj in zip(dist, rotated):
        if abs(d) < KINK_EPS:
            continue
        sign = 1.0 if d > 0 else -1.0
        grad_t += sign * plane.normal
        grad_s += sign * float(plane.normal @ rj)
    return loss, grad_t, grad_s
