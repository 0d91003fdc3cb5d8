"""Batch command-line front-end for evaluation, alignment, lifting,
heatmap generation and the self-validation study.

Exit codes are stable for scripting: 0 success, 2 malformed or unreadable
input, 3 unresolvable object id, 4 numerical degeneracy (rank-deficient
point sets, anti-parallel rays). Every command is deterministic given its
flags and seed — re-runs produce byte-identical output files — and output
files are only written once all computation has succeeded.

File formats: pose records are JSON lines of
{"id": ..., "gt": {"R": [9 row-major], "t": [3]}, "pred": {...}}; point
lists are CSV rows "x,y,z"; meshes are ASCII OBJ or PLY; masks and
heatmaps are 16-bit PGM; intrinsics, symmetry tables, reports and studies
are JSON. Record rotations more than 1e-4 from orthonormal are rejected
with their line number unless --reorthonormalize projects them onto the
closest proper rotation; rotations inside the gate are also projected, so
downstream math always sees exact rotations.
"""

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from .align import procrustes_align, procrustes_residual
from .geometry import DegenerateGeometryError, Pose6D, nearest_rotation
from .lift import (
    CameraIntrinsics,
    default_reference_distance,
    estimate_distance,
    lift_pose,
    make_centroid_heatmap,
    mask_bbox_diagonal,
    projected_bbox_diagonal,
    ray_from_pixel,
    read_pgm,
    write_pgm,
)
from .mesh import SymmetrySpec, center_mesh, load_mesh_file
from .metrics import EvalRecord, aggregate
from .sim import correlation_study, default_noise_sweep

ROTATION_GATE = 1e-4


@dataclass
class RunConfig:
    """Validated run parameters: thresholds must be positive and every
    referenced input path must resolve before any work starts."""

    command: str
    input_paths: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    subsample: int | None = None

    def __post_init__(self):
        for name, value in self.thresholds.items():
            if value <= 0:
                raise ValueError(f"--{name} must be positive, got {value}")
        if self.subsample is not None and self.subsample < 1:
            raise ValueError(f"--subsample must be at least 1, got {self.subsample}")
        for name, path in self.input_paths.items():
            if not os.path.exists(path):
                raise FileNotFoundError(f"{name} path does not exist: {path}")


def _fail(message, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_files(files: dict):
    """Write all output files, removing everything on any failure."""
    attempted = []
    try:
        for path, data in files.items():
            attempted.append(path)
            if callable(data):
                data(path)
            else:
                with open(path, "wb" if isinstance(data, bytes) else "w") as f:
                    f.write(data)
    except BaseException:
        for path in attempted:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _sibling(path: str, ext: str) -> str:
    return os.path.splitext(path)[0] + ext


def _parse_numbers(text: str, count: int, label: str) -> np.ndarray:
    tokens = [t for t in re.split(r"[\s,]+", text.strip()) if t]
    if len(tokens) != count:
        raise ValueError(f"{label}: expected {count} numbers, got {len(tokens)}")
    try:
        values = np.array([float(t) for t in tokens])
    except ValueError:
        raise ValueError(f"{label}: values must be numeric") from None
    if not np.isfinite(values).all():
        raise ValueError(f"{label}: values must be finite")
    return values


def _clean_rotation(matrix: np.ndarray, label: str, reorthonormalize: bool) -> np.ndarray:
    """Gate a parsed rotation at the 1e-4 tolerance, then snap it to the
    closest exact rotation so downstream validation never trips."""
    if not reorthonormalize:
        deviation = float(np.abs(matrix.T @ matrix - np.eye(3)).max())
        det_deviation = abs(float(np.linalg.det(matrix)) - 1.0)
        worst = max(deviation, det_deviation)
        if worst > ROTATION_GATE:
            raise ValueError(
                f"{label}: rotation deviates from orthonormal by {worst:.3e} "
                f"(tolerance {ROTATION_GATE:g}); fix the input or pass --reorthonormalize"
            )
    return nearest_rotation(matrix)


def _parse_pose(obj: dict, key: str, lineno: int, reorthonormalize: bool) -> Pose6D:
    block = obj.get(key)
    if not isinstance(block, dict) or "R" not in block or "t" not in block:
        raise ValueError(f"records line {lineno}: missing '{key}' object with 'R' and 't'")
    r = np.asarray(block["R"], dtype=float).ravel()
    t = np.asarray(block["t"], dtype=float).ravel()
    if r.shape != (9,):
        raise ValueError(f"records line {lineno}: '{key}.R' must hold 9 row-major numbers")
    if t.shape != (3,):
        raise ValueError(f"records line {lineno}: '{key}.t' must hold 3 numbers")
    if not (np.isfinite(r).all() and np.isfinite(t).all()):
        raise ValueError(f"records line {lineno}: pose values must be finite")
    rotation = _clean_rotation(r.reshape(3, 3), f"records line {lineno} ('{key}')", reorthonormalize)
    return Pose6D(rotation=rotation, translation=t)


def _load_records(path: str, reorthonormalize: bool) -> list[EvalRecord]:
    records = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"records line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
                raise ValueError(f"records line {lineno}: record needs a string 'id'")
            records.append(EvalRecord(
                object_id=obj["id"],
                groundtruth=_parse_pose(obj, "gt", lineno, reorthonormalize),
                predicted=_parse_pose(obj, "pred", lineno, reorthonormalize),
            ))
    if not records:
        raise ValueError(f"records file is empty: {path}")
    return records


def _load_points_csv(path: str) -> np.ndarray:
    points = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split(",")
            if len(tokens) != 3:
                raise ValueError(f"{path} line {lineno}: expected 'x,y,z', got {line!r}")
            try:
                points.append([float(t) for t in tokens])
            except ValueError:
                raise ValueError(f"{path} line {lineno}: bad coordinate in {line!r}") from None
    if not points:
        raise ValueError(f"point file is empty: {path}")
    return np.array(points)


def _load_symmetry(path: str) -> dict:
    with open(path) as f:
        table = json.load(f)
    if not isinstance(table, dict):
        raise ValueError("symmetry table must be a JSON object mapping id to flag or spec")
    out = {}
    for object_id, value in table.items():
        if isinstance(value, bool):
            out[object_id] = value
        elif isinstance(value, dict):
            spec = SymmetrySpec(
                axis=np.asarray(value.get("axis", [0.0, 0.0, 1.0]), dtype=float),
                order=value.get("order", 1),
                continuous=value.get("continuous", False),
                samples=value.get("samples", 36),
            )
            out[object_id] = spec.is_symmetric
        else:
            raise ValueError(f"symmetry entry {object_id!r} must be a boolean or an object")
    return out


def _find_mesh_path(meshes_dir: str, object_id: str) -> str:
    for ext in (".obj", ".ply"):
        path = os.path.join(meshes_dir, object_id + ext)
        if os.path.exists(path):
            return path
    raise KeyError(f"no mesh file for object id {object_id!r} under {meshes_dir}")


def _rotation_list(r: np.ndarray) -> list[float]:
    return [float(x) for x in np.asarray(r).ravel()]


def _emit(payload: dict, out: str | None):
    text = _json_text(payload)
    if out:
        _write_files({out: text})
    sys.stdout.write(text)


def cmd_evaluate(args) -> int:
    config = RunConfig(
        command="evaluate",
        input_paths={
            "--records": args.records,
            "--meshes": args.meshes,
            "--intrinsics": args.intrinsics,
            **({"--symmetry": args.symmetry} if args.symmetry else {}),
        },
        thresholds={
            "add-fraction": args.add_fraction,
            "proj-threshold": args.proj_threshold,
            "auc-max": args.auc_max,
        },
        seed=args.seed,
        out=args.out,
        subsample=args.subsample,
    )
    records = _load_records(args.records, args.reorthonormalize)
    intrinsics = CameraIntrinsics.load(args.intrinsics)
    symmetric = _load_symmetry(args.symmetry) if args.symmetry else {}
    meshes = {}
    for object_id in sorted({r.object_id for r in records}):
        mesh = load_mesh_file(_find_mesh_path(args.meshes, object_id))
        meshes[object_id] = mesh if args.no_recenter else center_mesh(mesh)
    report = aggregate(
        records,
        meshes,
        symmetric=symmetric,
        intrinsics=intrinsics,
        add_fraction=config.thresholds["add-fraction"],
        proj_threshold=config.thresholds["proj-threshold"],
        auc_max=config.thresholds["auc-max"],
        subsample=config.subsample,
        seed=config.seed,
    )
    table = report.to_text()
    _write_files({config.out: _json_text(report.to_dict()), _sibling(config.out, ".txt"): table})
    sys.stdout.write(table)
    return 0


def cmd_align(args) -> int:
    RunConfig(
        command="align",
        input_paths={"reconstructed": args.reconstructed, "canonical": args.canonical},
        out=args.out,
    )
    a = _load_points_csv(args.reconstructed)
    b = _load_points_csv(args.canonical)
    if not args.no_recenter:
        a = a - a.mean(axis=0)
        b = b - b.mean(axis=0)
    rotation = procrustes_align(a, b)
    payload = {
        "rotation": _rotation_list(rotation),
        "residual": procrustes_residual(a, b, rotation),
    }
    _emit(payload, args.out)
    return 0


def cmd_lift(args) -> int:
    config = RunConfig(
        command="lift",
        input_paths={
            "--mesh": args.mesh,
            "--intrinsics": args.intrinsics,
            **({"--mask": args.mask} if args.mask else {}),
        },
        out=args.out,
    )
    intrinsics = CameraIntrinsics.load(args.intrinsics)
    mesh = load_mesh_file(args.mesh)
    if not args.no_recenter:
        mesh = center_mesh(mesh)
    allocentric = _clean_rotation(
        _parse_numbers(args.rotation, 9, "--rotation").reshape(3, 3),
        "--rotation", args.reorthonormalize,
    )
    offset = _parse_numbers(args.roi_offset, 2, "--roi-offset")
    centroid = _parse_numbers(args.centroid, 2, "--centroid") + offset
    if args.mask is not None:
        observed = mask_bbox_diagonal(read_pgm(args.mask))
    else:
        if args.diagonal <= 0:
            raise ValueError(f"--diagonal must be positive, got {args.diagonal}")
        observed = args.diagonal
    reference_distance = args.reference_distance
    if reference_distance is None:
        reference_distance = default_reference_distance(intrinsics, mesh)
    elif reference_distance <= 0:
        raise ValueError(f"--reference-distance must be positive, got {reference_distance}")
    pose = lift_pose(allocentric, tuple(centroid), observed, intrinsics, mesh, reference_distance)
    payload = {
        "rotation": _rotation_list(pose.rotation),
        "translation": [float(x) for x in pose.translation],
    }
    if args.verbose:
        ray = ray_from_pixel(intrinsics, centroid)
        reference_diagonal = projected_bbox_diagonal(intrinsics, mesh, allocentric, reference_distance)
        payload["details"] = {
            "ray": [float(x) for x in ray],
            "ray_rotation": _rotation_list(pose.rotation @ allocentric.T),
            "reference_distance": float(reference_distance),
            "reference_diagonal": float(reference_diagonal),
            "observed_diagonal": float(observed),
            "distance": estimate_distance(reference_diagonal, reference_distance, observed),
        }
    _emit(payload, config.out)
    return 0


def cmd_selfcheck(args) -> int:
    config = RunConfig(
        command="selfcheck",
        input_paths={"--mesh": args.mesh},
        seed=args.seed,
        out=args.out,
    )
    mesh = load_mesh_file(args.mesh)
    study = correlation_study(mesh, args.trials, default_noise_sweep(config.seed), bins=args.bins)
    _write_files({
        config.out: _json_text(study.to_dict()),
        _sibling(config.out, ".csv"): study.to_csv(),
    })
    rho = study.vertex_loss_correlation
    print(f"samples: {len(study.pose_losses)}")
    print(f"vertex-loss rank correlation: {'undefined' if rho is None else format(rho, '.4f')}")
    return 0


def cmd_heatmap(args) -> int:
    config = RunConfig(command="heatmap", out=args.out)
    center = _parse_numbers(args.center, 2, "--center")
    heatmap = make_centroid_heatmap(center, args.width, args.height, args.sigma)
    _write_files({config.out: lambda path: write_pgm(path, heatmap)})
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshpose",
        description="6D object-pose evaluation, alignment and lifting toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score pose records against canonical meshes")
    p.add_argument("--records", required=True, help="JSON-lines pose records")
    p.add_argument("--meshes", required=True, help="directory with <id>.obj or <id>.ply meshes")
    p.add_argument("--intrinsics", required=True, help="camera intrinsics JSON")
    p.add_argument("--symmetry", help="JSON table: id -> boolean or symmetry spec")
    p.add_argument("--add-fraction", type=float, default=0.1,
                   help="ADD correctness threshold as a fraction of the diameter (default 0.1)")
    p.add_argument("--proj-threshold", type=float, default=5.0,
                   help="2D projection correctness threshold in px (default 5)")
    p.add_argument("--auc-max", type=float, default=0.1,
                   help="AUC distance cap in meters (default 0.1)")
    p.add_argument("--subsample", type=int, default=None,
                   help="seeded per-object vertex cap for large meshes")
    p.add_argument("--seed", type=int, default=0, help="seed for vertex subsampling")
    p.add_argument("--reorthonormalize", action="store_true",
                   help="project off-orthonormal record rotations instead of rejecting them")
    p.add_argument("--no-recenter", action="store_true",
                   help="keep mesh files in their authored frame instead of centering")
    p.add_argument("--out", required=True, help="report JSON path (text table lands beside it)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("align", help="solve the orthogonal Procrustes rotation for two point lists")
    p.add_argument("reconstructed", help="CSV x,y,z point list")
    p.add_argument("canonical", help="CSV x,y,z point list (same length and order)")
    p.add_argument("--no-recenter", action="store_true",
                   help="require pre-centered inputs instead of centering here")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("lift", help="lift an allocentric rotation + 2D cues to a 6D pose")
    p.add_argument("--mesh", required=True, help="canonical mesh (OBJ/PLY)")
    p.add_argument("--intrinsics", required=True, help="camera intrinsics JSON")
    p.add_argument("--rotation", required=True, help="9 row-major numbers (allocentric)")
    p.add_argument("--centroid", required=True, help="projected-center pixel 'x,y'")
    p.add_argument("--roi-offset", default="0,0",
                   help="offset added to the centroid when it is ROI-relative (default 0,0)")
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--mask", help="segmentation mask PGM; its bbox diagonal is the observed size")
    size.add_argument("--diagonal", type=float, help="observed bbox diagonal in px")
    p.add_argument("--reference-distance", type=float, default=None,
                   help="override the synthetic reference render distance in meters")
    p.add_argument("--reorthonormalize", action="store_true",
                   help="project an off-orthonormal rotation instead of rejecting it")
    p.add_argument("--no-recenter", action="store_true",
                   help="keep the mesh in its authored frame instead of centering")
    p.add_argument("--verbose", action="store_true",
                   help="include the ray, ray rotation, reference diagonal and distance")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("selfcheck", help="run the reconstruction/orientation correlation study")
    p.add_argument("--mesh", required=True, help="canonical mesh (OBJ/PLY)")
    p.add_argument("--trials", type=int, default=300, help="trials per noise level (default 300)")
    p.add_argument("--bins", type=int, default=10, help="equal-count bins (default 10)")
    p.add_argument("--seed", type=int, default=0, help="master seed for the noise sweep")
    p.add_argument("--out", required=True, help="study JSON path (CSV lands beside it)")
    p.set_defaults(func=cmd_selfcheck)

    p = sub.add_parser("heatmap", help="write a Gaussian centroid heatmap as PGM")
    p.add_argument("--center", required=True, help="center pixel 'x,y'")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--sigma", type=float, default=5.0, help="Gaussian stddev in px (default 5)")
    p.add_argument("--out", required=True, help="output PGM path")
    p.set_defaults(func=cmd_heatmap)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateGeometryError as exc:
        return _fail(exc, 4)
    except KeyError as exc:
        return _fail(exc.args[0] if exc.args else exc, 3)
    except (ValueError, OSError) as exc:
        return _fail(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
