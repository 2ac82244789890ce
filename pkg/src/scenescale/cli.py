"""Batch command-line front end.

Subcommands:
  fit-plane  depth + mask + scene -> plane written into the scene file
  optimize   refine per-person translation/scale in a scene file
  evaluate   score estimated scenes against ground-truth scenes
  synth      emit a seeded synthetic test set

Exit codes:
  0  success
  1  unexpected internal error
  2  invalid arguments or input file (schema)
  3  too few ground pixels to unproject
  4  plane consensus below the inlier threshold
  5  objective needs a plane but the scene file has none
  6  evaluation finished with skipped or degenerate frames
  7  non-finite loss during optimization
  8  synthetic person placement failed

If a --config path is relative and missing, it is also looked up under
$SCENESCALE_CONFIG_DIR.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .errors import (
    InsufficientGroundError,
    LowConsensusError,
    MissingPlaneError,
    NonFiniteLossError,
    PlacementError,
    SceneScaleError,
    SchemaError,
)
from .geometry import weak_to_perspective
from .metrics import evaluate_scenes
from .objective import MODES, ObjectiveConfig
from .optimizer import OptimConfig, initialize, optimize, optimize_baseline
from .planefit import RansacConfig, anchor_plane, fit_rms, ransac_plane, unproject_ground
from .sceneio import (
    dumps_canonical,
    load_depth_observation,
    load_scene,
    save_depth_observation,
    save_scene,
)
from .scene import Scene
from .synth import SynthConfig, generate_scene

_EXIT_CODES = (
    (SchemaError, 2),
    (InsufficientGroundError, 3),
    (LowConsensusError, 4),
    (MissingPlaneError, 5),
    (NonFiniteLossError, 7),
    (PlacementError, 8),
)


def _resolve_translations(scene: Scene) -> Scene:
    """Lift weak-perspective cameras wherever a translation is missing.

    Stored translations and scales are kept as-is, so re-running optimize
    on an already-optimized file continues from the stored state; --reset
    gives the full re-initialization instead.
    """
    out = scene.copy()
    for i, person in enumerate(out.persons):
        if person.translation is None:
            if person.weak_cam is None:
                raise SchemaError(f"person {i}: no translation and no weak_cam")
            person.translation = weak_to_perspective(person.weak_cam, out.camera)
    return out


def _float_list(text: str, where: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def cmd_fit_plane(args: argparse.Namespace) -> int:
    scene = _resolve_translations(load_scene(args.scene))
    obs = load_depth_observation(args.depth, args.mask)
    if args.metric_scale is not None:
        obs.metric_scale = float(args.metric_scale)
    points = unproject_ground(obs, scene.camera)
    cfg = RansacConfig(
        iterations=args.iterations,
        inlier_threshold=args.threshold,
        min_inlier_fraction=args.min_inlier_fraction,
        rng_seed=args.seed,
    )
    plane, inliers = ransac_plane(points, cfg)
    rms = fit_rms(plane, points, inliers)
    anchored = anchor_plane(plane, scene)
    scene.plane = anchored
    out = args.out or args.scene
    save_scene(
        scene,
        out,
        plane_info={"inlier_count": int(inliers.size), "fit_rms": rms},
    )
    print(f"points: {points.shape[0]}  inliers: {inliers.size}  rms: {rms:.6f} m")
    print(f"normal: [{anchored.normal[0]:.6f}, {anchored.normal[1]:.6f}, {anchored.normal[2]:.6f}]")
    print(f"anchor: [{anchored.point[0]:.6f}, {anchored.point[1]:.6f}, {anchored.point[2]:.6f}]")
    print(f"wrote {out}")
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    scene = _resolve_translations(load_scene(args.scene))
    if args.reset:
        scene = initialize(scene)
    if args.freeze_z != (args.depths is not None):
        raise SchemaError("--freeze-z and --depths must be used together")
    cfg = OptimConfig(
        learning_rate=args.lr,
        iterations=args.iterations,
        objective=ObjectiveConfig(lam=args.lam, z_epsilon=args.z_epsilon, mode=args.mode),
        scale_min=args.scale_min,
    )
    if args.freeze_z:
        depths = _float_list(args.depths, "--depths")
        report = optimize_baseline(scene, depths, cfg)
    else:
        report = optimize(scene, cfg)

    out = args.out or args.scene
    save_scene(report.final_scene, out)
    if args.trace:
        lines = ["iteration,reprojection,plane,total"]
        for i, bd in enumerate(report.loss_trace):
            lines.append(f"{i},{bd.reprojection!r},{bd.plane!r},{bd.total!r}")
        fl = report.final_loss
        lines.append(
            f"{report.converged_iteration},{fl.reprojection!r},{fl.plane!r},{fl.total!r}"
        )
        Path(args.trace).write_text("\n".join(lines) + "\n")

    initial = report.loss_trace[0]
    final = report.final_loss
    print(
        f"iterations: {report.converged_iteration}  "
        f"loss: {initial.total:.6f} -> {final.total:.6f}  "
        f"(reprojection {final.reprojection:.6f}, plane {final.plane:.6f})"
    )
    for i, person in enumerate(report.final_scene.persons):
        t = person.translation
        print(
            f"person {i}: t=[{t[0]:.6f}, {t[1]:.6f}, {t[2]:.6f}]  s={person.scale:.6f}"
        )
    print(f"wrote {out}")
    return 0


def _json_safe(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def cmd_evaluate(args: argparse.Namespace) -> int:
    if len(args.est) != len(args.gt):
        raise SchemaError(f"{len(args.est)} --est files vs {len(args.gt)} --gt files")
    est_all = [_resolve_translations(load_scene(p)) for p in args.est]
    gt_all = [_resolve_translations(load_scene(p)) for p in args.gt]

    est, gt, skipped = [], [], 0
    for i, (e, g) in enumerate(zip(est_all, gt_all)):
        if len(e.persons) != len(g.persons):
            print(
                f"frame {i} ({args.est[i]}): {len(e.persons)} persons vs "
                f"{len(g.persons)} in ground truth; skipping",
                file=sys.stderr,
            )
            skipped += 1
            continue
        if len(g.persons) < 2:
            print(f"frame {i} ({args.est[i]}): fewer than 2 persons, no pairs", file=sys.stderr)
        est.append(e)
        gt.append(g)

    report = (
        evaluate_scenes(est, gt, tie_epsilon=args.tie_epsilon)
        if est
        else evaluate_scenes([], [])
    )
    print(f"frames: {report.frames_evaluated} evaluated, {skipped} skipped")
    print(f"pairs: {report.pairs_evaluated}")
    print(f"d_ord: {report.d_ord:.4f}")
    print(f"d_norm: {report.d_norm:.6f}")
    print(f"h_ord: {report.h_ord:.4f}")
    if args.json:
        doc = {
            "d_ord": _json_safe(report.d_ord),
            "d_norm": _json_safe(report.d_norm),
            "h_ord": _json_safe(report.h_ord),
            "frames_evaluated": report.frames_evaluated,
            "frames_skipped": skipped,
            "pairs_evaluated": report.pairs_evaluated,
            "per_frame": [
                {
                    "depth_correct": fm.depth_correct,
                    "height_correct": fm.height_correct,
                    "pairs": fm.pairs,
                    "d_norm": _json_safe(fm.d_norm),
                }
                for fm in report.per_frame
            ],
        }
        Path(args.json).write_text(dumps_canonical(doc))
    return 6 if skipped or report.frames_evaluated == 0 else 0


def _locate_config(path_str: str) -> Path:
    path = Path(path_str)
    if path.exists() or path.is_absolute():
        return path
    env_dir = os.environ.get("SCENESCALE_CONFIG_DIR")
    if env_dir and (Path(env_dir) / path).exists():
        return Path(env_dir) / path
    return path


def cmd_synth(args: argparse.Namespace) -> int:
    doc: dict = {}
    if args.config:
        cfg_path = _locate_config(args.config)
        try:
            doc = json.loads(cfg_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{cfg_path}: {exc}") from None
        if not isinstance(doc, dict):
            raise SchemaError(f"{cfg_path}: config must be a JSON object")
    n_scenes = int(doc.pop("n_scenes", 1))
    if args.n_scenes is not None:
        n_scenes = args.n_scenes
    if args.n_persons is not None:
        doc["n_persons"] = args.n_persons
    if args.seed is not None:
        doc["rng_seed"] = args.seed
    if args.tilt is not None:
        doc["plane_tilt_deg"] = args.tilt
    if args.noise_px is not None:
        doc["keypoint_noise_px"] = args.noise_px
    if args.factors is not None:
        doc["ambiguity_factors"] = _float_list(args.factors, "--factors")
    if args.outlier_fraction is not None:
        doc["outlier_fraction"] = args.outlier_fraction
    for key in ("height_range", "depth_range", "image_size", "ambiguity_factors"):
        if doc.get(key) is not None:
            doc[key] = tuple(doc[key])
    try:
        base = SynthConfig(**doc)
    except TypeError as exc:
        raise SchemaError(f"synth config: {exc}") from None
    if n_scenes < 1:
        raise SchemaError(f"n_scenes must be >= 1, got {n_scenes}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(n_scenes):
        cfg = SynthConfig(**{**doc, "rng_seed": base.rng_seed + i})
        gt, observed, obs = generate_scene(cfg)
        save_scene(observed, out_dir / f"scene_{i:03d}.json")
        save_scene(gt, out_dir / f"gt_{i:03d}.json")
        save_depth_observation(
            obs, out_dir / f"depth_{i:03d}.f32", out_dir / f"mask_{i:03d}.u8"
        )
    manifest = dict(doc)
    manifest["n_scenes"] = n_scenes
    manifest["base_seed"] = base.rng_seed
    (out_dir / "generation_config.json").write_text(dumps_canonical(manifest))
    print(f"wrote {n_scenes} scene(s) to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenescale",
        description="Resolve body-size/depth ambiguity in multi-person scenes "
        "with a feet-on-ground constraint.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-plane", help="fit and anchor a ground plane from a depth map")
    p.add_argument("depth", help="raw float32 depth file (sidecar at <depth>.json)")
    p.add_argument("mask", help="raw uint8 ground mask, nonzero = ground")
    p.add_argument("scene", help="scene JSON to read and update")
    p.add_argument("--out", help="write here instead of updating the scene in place")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--threshold", type=float, default=0.05, help="inlier distance, meters")
    p.add_argument("--min-inlier-fraction", type=float, default=0.3)
    p.add_argument("--metric-scale", type=float, default=None, help="override depth sidecar")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit_plane)

    p = sub.add_parser("optimize", help="refine per-person translation and scale")
    p.add_argument("scene", help="scene JSON to read and update")
    p.add_argument("--out", help="write here instead of updating the scene in place")
    p.add_argument("--trace", help="write per-iteration loss CSV here")
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--iterations", type=int, default=600)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--freeze-z", action="store_true", help="baseline: keep depths fixed")
    p.add_argument("--depths", help="comma-separated per-person depths for --freeze-z")
    p.add_argument("--reset", action="store_true", help="reset scales to 1 and re-lift translations")
    p.add_argument("--scale-min", type=float, default=0.1)
    p.add_argument("--z-epsilon", type=float, default=1e-3)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="score estimated scenes against ground truth")
    p.add_argument("--est", nargs="+", required=True, help="estimated scene files")
    p.add_argument("--gt", nargs="+", required=True, help="ground-truth scene files")
    p.add_argument("--json", help="write the structured report here")
    p.add_argument("--tie-epsilon", type=float, default=1e-6)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a seeded synthetic test set")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config (fields of the synth generator)")
    p.add_argument("--n-scenes", type=int, default=None)
    p.add_argument("--n-persons", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tilt", type=float, default=None, help="plane tilt, degrees")
    p.add_argument("--noise-px", type=float, default=None, help="keypoint noise, pixels")
    p.add_argument("--factors", default=None, help="comma-separated ambiguity factors")
    p.add_argument("--outlier-fraction", type=float, default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SceneScaleError as exc:
        for klass, code in _EXIT_CODES:
            if isinstance(exc, klass):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
