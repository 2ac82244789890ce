"""Exception types shared across the package.

The CLI maps each class to a distinct exit code (see ``scenescale.cli``),
so errors raised by library code should pick the most specific class.
"""


class SceneScaleError(Exception):
    """Base class for all scenescale errors."""


class InvalidCameraError(SceneScaleError, ValueError):
    """Camera parameters violate an invariant (e.g. sigma <= 0)."""


class BehindCameraError(SceneScaleError, ValueError):
    """A point with z <= 0 was passed to a strict projection."""


class SchemaError(SceneScaleError, ValueError):
    """A scene/depth file failed schema or dimension validation."""


class InsufficientGroundError(SceneScaleError, ValueError):
    """Fewer ground pixels/points than a plane fit requires."""


class LowConsensusError(SceneScaleError, RuntimeError):
    """RANSAC consensus below the configured inlier fraction."""


class MissingPlaneError(SceneScaleError, ValueError):
    """An operation that needs a ground plane got a scene without one."""


class NonFiniteLossError(SceneScaleError, RuntimeError):
    """The objective became non-finite during optimization."""


class PlacementError(SceneScaleError, RuntimeError):
    """Synthetic person placement failed repeatedly (outside frustum)."""
