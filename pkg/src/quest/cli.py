"""Command-line front end: estimate, bench, eval, simulate.

File formats:

- correspondences: text, '#' comments, one match per line as
  "x1 y1 x2 y2" (floats). Coordinates are pixels unless a comment line
  "# normalized" appears, in which case they are already normalized and
  no calibration file is needed.
- calibration: one line "fx fy cx cy skew" (pixels).
- ground-truth pose: one line "w x y z tx ty tz".
- estimates: JSON with ranked candidates (written by `estimate`, read by
  `eval`).
- benchmark output: CSV with one row per (method, sigma, trial) plus a
  companion *_summary.csv with per-method medians and quartiles.

Exit codes: 0 success, 1 malformed input / insufficient points / IO
problems, 2 data-dependent degeneracies (e.g. the 7-point solver on a
critical surface). Seeds default to the QUEST_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bench as bench_mod
from .bench import SceneConfig, SyntheticCamera, add_pixel_noise, generate_scene
from .core import Correspondence, Quaternion, normalize_pixels, rot_error, trans_error
from .errors import DegeneracyError, CriticalSurfaceError, InsufficientPointsError, QuestError
from .solver import estimate_pose, ransac_pose


class FileFormatError(Exception):
    """Malformed input file; carries the offending line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def read_correspondence_file(path):
    """Returns (rows, normalized_flag); rows are (x1, y1, x2, y2) floats."""
    rows = []
    normalized = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().lower() == "normalized":
                    normalized = True
                continue
            parts = line.split()
            if len(parts) != 4:
                raise FileFormatError(path, line_no, f"expected 4 values, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError as e:
                raise FileFormatError(path, line_no, str(e)) from e
            if not all(math.isfinite(v) for v in vals):
                raise FileFormatError(path, line_no, "NaN/Inf coordinate")
            rows.append(vals)
    return rows, normalized


def read_calibration_file(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 5:
                raise FileFormatError(path, line_no, f"expected 'fx fy cx cy skew', got {len(parts)} values")
            try:
                fx, fy, cx, cy, skew = (float(p) for p in parts)
            except ValueError as e:
                raise FileFormatError(path, line_no, str(e)) from e
            if fx <= 0 or fy <= 0:
                raise FileFormatError(path, line_no, "focal lengths must be positive")
            return np.array([[fx, skew, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])
    raise FileFormatError(path, 0, "empty calibration file")


def read_pose_file(path):
    """Returns (Quaternion, translation). Quaternion is normalized on load;
    deviations beyond 1e-3 from unit norm are rejected."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 7:
                raise FileFormatError(path, line_no, f"expected 'w x y z tx ty tz', got {len(parts)} values")
            try:
                vals = [float(p) for p in parts]
            except ValueError as e:
                raise FileFormatError(path, line_no, str(e)) from e
            q = Quaternion(*vals[:4])
            if abs(q.norm() - 1.0) > 1e-3:
                raise FileFormatError(path, line_no, f"quaternion norm {q.norm():.6f} too far from 1")
            return q.normalized().canonical(), np.array(vals[4:])
    raise FileFormatError(path, 0, "empty pose file")


def load_correspondences(corr_path, calib_path=None):
    rows, normalized = read_correspondence_file(corr_path)
    if normalized:
        return [
            Correspondence([x1, y1, 1.0], [x2, y2, 1.0]) for (x1, y1, x2, y2) in rows
        ]
    if calib_path is None:
        raise FileFormatError(corr_path, 0, "pixel input requires --calib (or a '# normalized' header)")
    K = read_calibration_file(calib_path)
    return [
        Correspondence(normalize_pixels((x1, y1), K), normalize_pixels((x2, y2), K))
        for (x1, y1, x2, y2) in rows
    ]


def _candidate_dict(c):
    return {
        "quaternion": [c.q.w, c.q.x, c.q.y, c.q.z],
        "translation": None if c.t is None else [float(v) for v in c.t],
        "depths_first": None if c.depths_u is None else [float(v) for v in c.depths_u],
        "depths_second": None if c.depths_v is None else [float(v) for v in c.depths_v],
        "residual": c.algebraic_residual,
        "chirality_ok": c.chirality_ok,
        "scale_note": c.scale_note,
        "t_depth_ratio": None if math.isnan(c.t_depth_ratio) else c.t_depth_ratio,
        "ambiguous_depths": c.ambiguous_depths,
    }


def _default_seed(value):
    if value is not None:
        return value
    env = os.environ.get("QUEST_SEED")
    return int(env) if env else 0


def cmd_estimate(args) -> int:
    points = load_correspondences(args.input, args.calib)
    result = {"method": args.method, "input": args.input}
    if args.method == "eightpt":
        if args.ransac:
            raise ValueError("RANSAC sampling is only defined for quest6/quest7")
        from .baseline import decompose_essential, eight_point

        cand = decompose_essential(eight_point(points), points)
        result["candidates"] = [_candidate_dict(cand)]
    elif args.ransac:
        seed = _default_seed(args.seed)
        cand, mask = ransac_pose(
            points, args.method, threshold=args.threshold, max_iters=args.max_iters, seed=seed
        )
        result["candidates"] = [_candidate_dict(cand)]
        result["inlier_mask"] = [bool(v) for v in mask]
        result["seed"] = seed
    else:
        cands = estimate_pose(points, args.method)
        result["candidates"] = [_candidate_dict(c) for c in cands]
    payload = json.dumps(result, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def write_records_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,sigma_px,trial,rot_err,trans_err,runtime_s,failed\n")
        for r in records:
            fh.write(
                f"{r.method},{_fmt(r.sigma_px)},{r.trial},{_fmt(r.rot_error)},"
                f"{_fmt(r.trans_error)},{_fmt(r.runtime_s)},{int(r.failed)}\n"
            )


def _summary_path(path: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_summary{ext or '.csv'}"


def write_noise_summary(records, path):
    """Per method x sigma: median and quartiles of both errors (failed
    trials excluded from the quantiles, counted separately)."""
    keys = sorted({(r.method, r.sigma_px) for r in records})
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "method,sigma_px,n,failures,rot_median,rot_q25,rot_q75,"
            "trans_median,trans_q25,trans_q75,mean_runtime_s\n"
        )
        for method, sigma in keys:
            grp = [r for r in records if r.method == method and r.sigma_px == sigma]
            ok = [r for r in grp if not r.failed]
            runtime = float(np.mean([r.runtime_s for r in grp]))
            if ok:
                rot = np.percentile([r.rot_error for r in ok], [50, 25, 75])
                trn = np.percentile([r.trans_error for r in ok], [50, 25, 75])
            else:
                rot = trn = [math.nan] * 3
            fh.write(
                f"{method},{_fmt(sigma)},{len(grp)},{len(grp) - len(ok)},"
                f"{_fmt(rot[0])},{_fmt(rot[1])},{_fmt(rot[2])},"
                f"{_fmt(trn[0])},{_fmt(trn[1])},{_fmt(trn[2])},{_fmt(runtime)}\n"
            )


def write_time_summary(stats, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,mean_runtime_s,median_runtime_s,n,failures\n")
        for method, st in stats.items():
            fh.write(
                f"{method},{_fmt(st.mean_s)},{_fmt(st.median_s)},{st.n},{st.n_failed}\n"
            )


def _scene_config_from_args(args) -> SceneConfig:
    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    cfg.setdefault("n_points", args.points)
    cfg.setdefault("geometry", "general" if args.geometry == "mix" else args.geometry)
    for key in ("box_x", "box_y", "box_z"):
        if key in cfg:
            cfg[key] = tuple(cfg[key])
    if "translation_box" in cfg:
        cfg["translation_box"] = tuple(tuple(p) for p in cfg["translation_box"])
    return SceneConfig(**cfg)


def cmd_bench(args) -> int:
    seed = _default_seed(args.seed)
    cfg = _scene_config_from_args(args)
    cam = SyntheticCamera()
    methods = args.methods.split(",")
    for m in methods:
        if m not in bench_mod.BENCH_METHODS:
            raise ValueError(f"unknown method {m!r}")
    if args.kind == "noise":
        sigmas = [float(s) for s in args.sigmas.split(",")]
        records = bench_mod.run_noise_benchmark(methods, sigmas, args.trials, cfg, cam, seed)
        write_records_csv(records, args.output)
        write_noise_summary(records, _summary_path(args.output))
    else:
        records, stats = bench_mod.run_time_benchmark(methods, args.trials, cfg, cam, seed)
        write_records_csv(records, args.output)
        write_time_summary(stats, _summary_path(args.output))
    print(f"wrote {args.output} and {_summary_path(args.output)}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    with open(args.estimates, "r", encoding="utf-8") as fh:
        estimates = json.load(fh)
    q_star, t_star = read_pose_file(args.ground_truth)
    out = {"candidates": [], "ground_truth": args.ground_truth}
    best_idx, best_err = None, math.inf
    for i, cand in enumerate(estimates.get("candidates", [])):
        q = Quaternion(*cand["quaternion"]).normalized()
        re_ = rot_error(q, q_star)
        te = None
        if cand.get("translation") is not None and np.linalg.norm(t_star) > 0.0:
            t = np.array(cand["translation"])
            if np.linalg.norm(t) > 0.0:
                te = trans_error(t, t_star)
        out["candidates"].append({"rot_error": re_, "trans_error": te})
        if re_ < best_err:
            best_idx, best_err = i, re_
    out["best_index"] = best_idx
    payload = json.dumps(out, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_simulate(args) -> int:
    seed = _default_seed(args.seed)
    cfg = SceneConfig(n_points=args.points, geometry=args.geometry, rng_seed=seed)
    cam = SyntheticCamera()
    scene = generate_scene(cfg)
    corr = scene.correspondences
    if args.sigma > 0.0:
        corr = add_pixel_noise(corr, args.sigma, cam, seed + 1)
    os.makedirs(args.out_dir, exist_ok=True)
    corr_path = os.path.join(args.out_dir, "correspondences.txt")
    pose_path = os.path.join(args.out_dir, "pose.txt")
    with open(corr_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# synthetic scene: geometry={args.geometry} points={args.points} "
                 f"seed={seed} sigma_px={_fmt(args.sigma)}\n")
        fh.write("# normalized\n")
        for c in corr:
            fh.write(f"{_fmt(c.m[0])} {_fmt(c.m[1])} {_fmt(c.n[0])} {_fmt(c.n[1])}\n")
    p = scene.pose
    with open(pose_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# w x y z tx ty tz\n")
        fh.write(" ".join(_fmt(v) for v in [p.q.w, p.q.x, p.q.y, p.q.z, *p.t]) + "\n")
    print(f"wrote {corr_path} and {pose_path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quest", description="Two-view relative pose estimation from point matches."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate pose from a correspondence file")
    p.add_argument("input", help="correspondence file (pixels, or '# normalized')")
    p.add_argument("--calib", help="calibration file 'fx fy cx cy skew'")
    p.add_argument("--method", choices=["quest6", "quest7", "eightpt"], default="quest6")
    p.add_argument("--ransac", action="store_true", help="robustify with RANSAC")
    p.add_argument("--threshold", type=float, default=0.005, help="RANSAC inlier angle (rad)")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="run a Monte Carlo benchmark, write CSV")
    p.add_argument("kind", choices=["noise", "time"])
    p.add_argument("--methods", default="quest6,quest7,eightpt")
    p.add_argument("--sigmas", default="0,1,2,4,8", help="comma-separated pixel sigmas (noise kind)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--geometry", choices=["general", "coplanar", "mix"], default="general")
    p.add_argument("--config", help="JSON file with SceneConfig overrides")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score an estimates JSON against ground truth")
    p.add_argument("estimates")
    p.add_argument("ground_truth")
    p.add_argument("--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="dump a synthetic fixture (correspondences + pose)")
    p.add_argument("out_dir")
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--geometry", choices=["general", "coplanar"], default="general")
    p.add_argument("--sigma", type=float, default=0.0, help="pixel noise stddev")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except InsufficientPointsError as e:
        print(f"error: insufficient points: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except CriticalSurfaceError as e:
        print(f"error: CriticalSurfaceError: {e}", file=sys.stderr)
        print("hint: quest6 handles coplanar points; retry with --method quest6", file=sys.stderr)
        return 2
    except DegeneracyError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except QuestError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
