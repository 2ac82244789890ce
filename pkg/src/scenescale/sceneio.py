"""Scene and depth-map file formats.

Scenes are JSON documents (camera, persons, optional plane).  Depth maps
are raw row-major little-endian float32 payloads with a JSON sidecar at
"<depth_path>.json" declaring width, height, metric scale, and byte order;
ground masks are raw uint8 grids of the same shape (nonzero = ground).

Writers emit canonical JSON (sorted keys, two-space indent, repr floats)
so identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .geometry import CameraModel, WeakPerspectiveCam
from .planefit import DepthObservation
from .scene import GroundPlane, Person, Scene

JOINT_CONVENTIONS = {
    "smpl24": {
        "ankle_left_idx": 7,
        "ankle_right_idx": 8,
        "head_idx": 15,
        "foot_chain": (12, 1, 4, 7),
    },
}


def _tolist(arr: np.ndarray | None):
    if arr is None:
        return None
    return np.asarray(arr, dtype=float).tolist()


def _asarray(value, shape: tuple[int, ...] | None, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: not a numeric array ({exc})") from None
    if shape is not None and arr.shape != shape:
        raise SchemaError(f"{where}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{where}: non-finite values")
    return arr


def scene_to_dict(scene: Scene, plane_info: dict | None = None) -> dict:
    persons = []
    for p in scene.persons:
        entry = {
            "joints": _tolist(p.joints),
            "rotation": _tolist(p.rotation),
            "translation": _tolist(p.translation),
            "scale": float(p.scale),
            "ref_keypoints": _tolist(p.ref_keypoints),
            "confidences": _tolist(p.confidences),
            "ankle_left_idx": p.ankle_left_idx,
            "ankle_right_idx": p.ankle_right_idx,
            "head_idx": p.head_idx,
            "foot_chain": list(p.foot_chain),
        }
        if p.weak_cam is not None:
            entry["weak_cam"] = {
                "sigma": p.weak_cam.sigma,
                "tx": p.weak_cam.tx,
                "ty": p.weak_cam.ty,
            }
        persons.append(entry)
    doc = {
        "camera": {
            "focal": scene.camera.focal,
            "principal_point": _tolist(scene.camera.principal_point),
            "image_size": list(scene.camera.image_size),
        },
        "persons": persons,
        "plane": None,
    }
    if scene.plane is not None:
        doc["plane"] = {
            "normal": _tolist(scene.plane.normal),
            "point": _tolist(scene.plane.point),
        }
        if plane_info:
            doc["plane"].update(plane_info)
    return doc


def scene_from_dict(doc: dict, where: str = "scene") -> Scene:
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: document must be an object")
    for key in ("camera", "persons"):
        if key not in doc:
            raise SchemaError(f"{where}: missing '{key}'")
    cam_doc = doc["camera"]
    if not isinstance(cam_doc, dict) or "focal" not in cam_doc:
        raise SchemaError(f"{where}.camera: need an object with 'focal'")
    try:
        camera = CameraModel(
            focal=float(cam_doc["focal"]),
            image_size=tuple(cam_doc.get("image_size", (1920, 1080))),
            principal_point=(
                _asarray(cam_doc["principal_point"], (2,), f"{where}.camera.principal_point")
                if cam_doc.get("principal_point") is not None
                else None
            ),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}.camera: {exc}") from None

    if not isinstance(doc["persons"], list) or not doc["persons"]:
        raise SchemaError(f"{where}.persons: need a nonempty list")
    persons = []
    for i, entry in enumerate(doc["persons"]):
        ctx = f"{where}.persons[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{ctx}: must be an object")
        joints = _asarray(entry.get("joints"), None, f"{ctx}.joints")
        if joints.ndim != 2 or joints.shape[1] != 3:
            raise SchemaError(f"{ctx}.joints: expected (K, 3), got {joints.shape}")
        k = joints.shape[0]
        indices = dict(JOINT_CONVENTIONS["smpl24"])
        convention = entry.get("joint_convention")
        if convention is not None:
            if convention not in JOINT_CONVENTIONS:
                raise SchemaError(
                    f"{ctx}: unknown joint_convention {convention!r}; "
                    f"known: {sorted(JOINT_CONVENTIONS)}"
                )
            indices = dict(JOINT_CONVENTIONS[convention])
        for key in ("ankle_left_idx", "ankle_right_idx", "head_idx", "foot_chain"):
            if key in entry:
                indices[key] = entry[key]
        weak_cam = None
        if entry.get("weak_cam") is not None:
            wc = entry["weak_cam"]
            try:
                weak_cam = WeakPerspectiveCam(
                    sigma=float(wc["sigma"]),
                    tx=float(wc.get("tx", 0.0)),
                    ty=float(wc.get("ty", 0.0)),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"{ctx}.weak_cam: {exc}") from None
        translation = entry.get("translation")
        if translation is None and weak_cam is None:
            raise SchemaError(f"{ctx}: need 'translation' or 'weak_cam'")
        try:
            person = Person(
                joints=joints,
                rotation=_asarray(entry.get("rotation"), (3, 3), f"{ctx}.rotation"),
                translation=(
                    _asarray(translation, (3,), f"{ctx}.translation")
                    if translation is not None
                    else None
                ),
                scale=float(entry.get("scale", 1.0)),
                ref_keypoints=(
                    _asarray(entry["ref_keypoints"], (k, 2), f"{ctx}.ref_keypoints")
                    if entry.get("ref_keypoints") is not None
                    else None
                ),
                confidences=(
                    _asarray(entry["confidences"], (k,), f"{ctx}.confidences")
                    if entry.get("confidences") is not None
                    else None
                ),
                weak_cam=weak_cam,
                ankle_left_idx=indices["ankle_left_idx"],
                ankle_right_idx=indices["ankle_right_idx"],
                head_idx=indices["head_idx"],
                foot_chain=tuple(indices["foot_chain"]),
            )
        except SchemaError as exc:
            raise SchemaError(f"{ctx}: {exc}") from None
        persons.append(person)

    plane = None
    if doc.get("plane") is not None:
        pd = doc["plane"]
        if not isinstance(pd, dict) or "normal" not in pd or "point" not in pd:
            raise SchemaError(f"{where}.plane: need 'normal' and 'point'")
        plane = GroundPlane(
            _asarray(pd["normal"], (3,), f"{where}.plane.normal"),
            _asarray(pd["point"], (3,), f"{where}.plane.point"),
        )
    return Scene(persons, camera, plane)


def dumps_canonical(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def save_scene(scene: Scene, path: str | Path, plane_info: dict | None = None) -> None:
    Path(path).write_text(dumps_canonical(scene_to_dict(scene, plane_info)))


def load_scene(path: str | Path) -> Scene:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from None
    return scene_from_dict(doc, where=str(path))


def save_depth_observation(
    obs: DepthObservation, depth_path: str | Path, mask_path: str | Path
) -> None:
    depth_path = Path(depth_path)
    h, w = obs.depth.shape
    depth_path.write_bytes(obs.depth.astype("<f4").tobytes(order="C"))
    sidecar = {
        "width": int(w),
        "height": int(h),
        "metric_scale": float(obs.metric_scale),
        "byte_order": "little",
        "dtype": "float32",
    }
    Path(str(depth_path) + ".json").write_text(dumps_canonical(sidecar))
    Path(mask_path).write_bytes(obs.ground_mask.astype(np.uint8).tobytes(order="C"))


def load_depth_observation(depth_path: str | Path, mask_path: str | Path) -> DepthObservation:
    depth_path = Path(depth_path)
    sidecar_path = Path(str(depth_path) + ".json")
    try:
        sidecar = json.loads(sidecar_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{sidecar_path}: {exc}") from None
    for key in ("width", "height", "metric_scale"):
        if key not in sidecar:
            raise SchemaError(f"{sidecar_path}: missing '{key}'")
    w, h = int(sidecar["width"]), int(sidecar["height"])
    if sidecar.get("byte_order", "little") != "little":
        raise SchemaError(f"{sidecar_path}: only little-endian payloads supported")
    payload = depth_path.read_bytes()
    if len(payload) != w * h * 4:
        raise SchemaError(
            f"{depth_path}: payload is {len(payload)} bytes, expected {w * h * 4} "
            f"for {w}x{h} float32"
        )
    depth = np.frombuffer(payload, dtype="<f4").reshape(h, w).astype(np.float64)
    mask_bytes = Path(mask_path).read_bytes()
    if len(mask_bytes) != w * h:
        raise SchemaError(
            f"{mask_path}: payload is {len(mask_bytes)} bytes, expected {w * h} uint8"
        )
    mask = np.frombuffer(mask_bytes, dtype=np.uint8).reshape(h, w) != 0
    return DepthObservation(depth, mask, float(sidecar["metric_scale"]))
