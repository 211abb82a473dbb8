"""Command-line entry point.

Subcommands: phantom, sdf-build, calib (pivot | hand-eye | register |
gravity), experiment, report, serve. Every command is deterministic given
its inputs and seed, and re-running overwrites outputs byte-identically.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import calibration as cal
from .distance import save_sdf_cache, signed_distance
from .phantom import make_phantom
from .scenario import (ScenarioError, build_session, load_bundled_scenario,
                       load_scenario, resolve_volume, run_trajectory)
from .simulation import read_trace, trace_csv_lines, write_trace
from .transforms import RigidTransform
from .volume import load_label_volume, write_nrrd

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def _dump_json(obj, path=None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
    sys.stdout.write(text)


def _resolve_scenario(ref: str) -> dict:
    if Path(ref).exists():
        return load_scenario(ref)
    return load_bundled_scenario(ref)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_phantom(args) -> int:
    with open(args.spec) as f:
        spec = json.load(f)
    volume, segments = make_phantom(spec)
    write_nrrd(volume, segments, args.out)
    counts = {int(lbl): int((volume.labels == lbl).sum()) for lbl in volume.present_labels()}
    print(f"wrote {args.out}: dims {volume.dims}, labels {counts}")
    return EXIT_OK


def cmd_sdf_build(args) -> int:
    volume, _ = load_label_volume(args.volume)
    labels = [int(s) for s in args.labels.split(",")] if args.labels \
        else volume.present_labels()
    if not labels:
        raise ScenarioError("volume has no nonzero labels")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for label in labels:
        t0 = time.perf_counter()
        sdf = signed_distance(volume, label, args.threads)
        elapsed = time.perf_counter() - t0
        path = out_dir / f"sdf_label{label}.bin"
        save_sdf_cache(sdf, path)
        print(f"label {label}: min {sdf.values.min():.3f} mm, "
              f"max {sdf.values.max():.3f} mm, built in {elapsed:.2f} s -> {path}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    scn = _resolve_scenario(args.scenario)
    if args.seed is not None:
        scn["seed"] = args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    arms: list[tuple[str, bool]] = []
    if args.vf and args.no_vf:
        arms = [("vf", True), ("novf", False)]  # paired run, shared seed
    elif args.vf:
        arms = [("vf", True)]
    elif args.no_vf:
        arms = [("novf", False)]
    else:
        arms = [("run", scn["vf_enabled"])]

    session = build_session(scn, vf_override=arms[0][1], workers=args.threads)
    for tag, vf in arms:
        trace, metrics = run_trajectory(scn, vf_override=vf, session=session)
        suffix = "" if tag == "run" else f"_{tag}"
        trace_path = out_dir / f"trace{suffix}.jsonl"
        write_trace(trace_path, trace)
        _dump_json(metrics.to_json_obj(), out_dir / f"metrics{suffix}.json")
        if args.csv:
            (out_dir / f"trace{suffix}.csv").write_text(
                "\n".join(trace_csv_lines(trace)) + "\n")
        print(f"[{tag}] drilled {metrics.drilled_volume_mm3:.2f} mm^3, "
              f"damage {sum(metrics.damage_volume_mm3.values()):.2f} mm^3 "
              f"-> {trace_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    trace = read_trace(args.trace)
    tau0 = {int(c["label"]): float(c["tau0_mm"])
            for c in trace.meta.get("constraints", [])}
    labels = sorted({lbl for r in trace.records for lbl in r.clearances})
    print(f"ticks: {len(trace.records)}")
    breach_total = 0
    for lbl in labels:
        vals = [r.clearances[lbl] for r in trace.records]
        thr = tau0.get(lbl)
        breaches = sum(1 for v in vals if thr is not None and v < thr)
        breach_total += breaches
        flag = "  ** BREACH **" if breaches else ""
        thr_txt = f"{thr:.3f}" if thr is not None else "n/a"
        print(f"label {lbl}: min clearance {min(vals):.3f} mm "
              f"(tau0 {thr_txt}), breach ticks {breaches}{flag}")
    if trace.records:
        mean_fc = float(np.mean([np.linalg.norm(r.f_comp) for r in trace.records]))
    else:
        mean_fc = 0.0
    print(f"mean |F_C|: {mean_fc:.4f} N")
    if args.csv:
        Path(args.csv).write_text("\n".join(trace_csv_lines(trace)) + "\n")
        print(f"csv -> {args.csv}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import SessionService

    scn = _resolve_scenario(args.scenario)
    if args.seed is not None:
        scn["seed"] = args.seed
    service = SessionService(scn, host=args.host, port=args.port,
                             lockstep=args.lockstep, trace_out=args.trace_out,
                             metrics_out=args.metrics_out, workers=args.threads)
    print(f"serving scenario {scn['name']!r} on ws://{args.host}:{args.port} "
          f"({'lockstep' if args.lockstep else 'realtime'})")
    service.run()
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibration commands
# ---------------------------------------------------------------------------

def _pose_from_json(obj) -> RigidTransform:
    return RigidTransform.from_json_obj(obj)


def cmd_calib_pivot(args) -> int:
    rng = np.random.default_rng(args.seed)
    report: dict = {}
    if args.synthetic:
        tip = np.array([10.0, 5.0, 120.0])
        pivot = np.array([400.0, -120.0, 80.0])
        poses = cal.make_pivot_poses(tip, pivot, 20, rng, noise_mm=args.noise)
        report["truth_tip_offset_mm"] = tip.tolist()
    else:
        with open(args.input) as f:
            poses = [_pose_from_json(p) for p in json.load(f)["poses"]]
    offset, pivot_pt, rmse = cal.pivot_calibrate(poses)
    report.update({"tip_offset_mm": offset.tolist(), "pivot_point_mm": pivot_pt.tolist(),
                   "rmse_mm": rmse, "sample_count": len(poses)})
    if args.synthetic:
        report["truth_error_mm"] = float(
            np.linalg.norm(offset - report["truth_tip_offset_mm"]))
    _dump_json(report, args.out)
    return EXIT_OK


def cmd_calib_hand_eye(args) -> int:
    rng = np.random.default_rng(args.seed)
    report: dict = {}
    if args.synthetic:
        x_true = cal.RigidTransform(cal.random_rotation(rng),
                                    rng.uniform(-120, 120, size=3))
        pairs = cal.make_hand_eye_pairs(x_true, 30, rng, pos_noise_mm=args.noise,
                                        rot_noise_deg=args.rot_noise_deg)
        report["truth_x"] = x_true.to_json_obj()
    else:
        with open(args.input) as f:
            pairs = [(_pose_from_json(p["a"]), _pose_from_json(p["b"]))
                     for p in json.load(f)["pairs"]]
    x, rot_rmse, trans_rmse = cal.hand_eye_calibrate(pairs)
    report.update({"x": x.to_json_obj(), "rot_rmse_deg": rot_rmse,
                   "trans_rmse_mm": trans_rmse, "sample_count": len(pairs)})
    _dump_json(report, args.out)
    return EXIT_OK


def cmd_calib_register(args) -> int:
    rng = np.random.default_rng(args.seed)
    report: dict = {}
    if args.synthetic:
        t_true = cal.RigidTransform(cal.random_rotation(rng),
                                    rng.uniform(-50, 50, size=3))
        p, q = cal.make_registration_points(t_true, 8, rng, noise_mm=args.noise)
        report["truth_t"] = t_true.to_json_obj()
    else:
        with open(args.input) as f:
            data = json.load(f)
        p, q = np.asarray(data["source"], dtype=float), np.asarray(data["target"], dtype=float)
    transform, rmse = cal.register_points(p, q)
    report.update({"transform": transform.to_json_obj(), "rmse_mm": rmse,
                   "sample_count": int(len(p))})
    _dump_json(report, args.out)
    return EXIT_OK


def cmd_calib_gravity(args) -> int:
    rng = np.random.default_rng(args.seed)
    report: dict = {}
    if args.synthetic:
        true_coef = rng.uniform(-2.0, 2.0, size=(3, args.degree + 1, args.degree + 1))
        true_model = cal.GravityModel(degree=args.degree, coefficients=true_coef)
        uv = rng.uniform(0.0, 1.0, size=(400, 2))
        samples = [(u, v, true_model.predict(u, v) + rng.normal(0, args.noise, 3))
                   for u, v in uv]
        train, holdout = samples[:300], samples[300:]
        model = cal.fit_gravity_model(train, degree=args.degree)
        # readings are pure bias + noise, so the compensated output is the residual
        resid = np.array([cal.compensate(model, (u, v), f) for u, v, f in holdout])
        report["holdout_residual_rms_n"] = float(
            np.sqrt(np.mean(np.sum(resid ** 2, axis=1) / 3.0)))
        sample_count = len(train)
    else:
        with open(args.input) as f:
            data = json.load(f)
        samples = [(s["u"], s["v"], np.asarray(s["f"], dtype=float))
                   for s in data["samples"]]
        model = cal.fit_gravity_model(samples, degree=int(data.get("degree", args.degree)))
        sample_count = len(samples)
    report.update({"degree": model.degree, "fit_rmse_n": model.fit_rmse,
                   "sample_count": sample_count, "model": model.to_json_obj()})
    _dump_json(report, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdfguide",
        description="Distance-field virtual fixtures for a simulated cooperative drill")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for distance-field builds")

    p = sub.add_parser("phantom", parents=[common], help="rasterize a phantom spec to NRRD")
    p.add_argument("spec", help="phantom spec JSON path")
    p.add_argument("--out", required=True, help="output .nrrd path")
    p.set_defaults(fn=cmd_phantom)

    p = sub.add_parser("sdf-build", parents=[common],
                       help="build signed-distance caches from a label volume")
    p.add_argument("volume", help="label volume .nrrd path")
    p.add_argument("--labels", default=None, help="comma-separated label IDs (default: all)")
    p.add_argument("--out", required=True, help="output directory for caches")
    p.set_defaults(fn=cmd_sdf_build)

    p = sub.add_parser("experiment", parents=[common],
                       help="run a scripted scenario and write trace + metrics")
    p.add_argument("scenario", help="scenario JSON path or bundled name")
    p.add_argument("--vf", action="store_true", help="run with the fixture enabled")
    p.add_argument("--no-vf", action="store_true", help="run with the fixture disabled")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--csv", action="store_true", help="also write per-tick CSV")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("report", parents=[common], help="summarize a trace file")
    p.add_argument("trace", help="trace .jsonl path")
    p.add_argument("--csv", default=None, help="also export per-tick CSV to this path")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", parents=[common], help="host an interactive session")
    p.add_argument("scenario", help="scenario JSON path or bundled name")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--lockstep", action="store_true",
                   help="advance only on client 'advance' commands (deterministic replay)")
    p.add_argument("--trace-out", default=None, help="write the trace here on 'finish'")
    p.add_argument("--metrics-out", default=None, help="write metrics here on 'finish'")
    p.set_defaults(fn=cmd_serve)

    calib = sub.add_parser("calib", help="calibration solvers").add_subparsers(
        dest="calib_command", required=True)
    for name, fn in (("pivot", cmd_calib_pivot), ("hand-eye", cmd_calib_hand_eye),
                     ("register", cmd_calib_register), ("gravity", cmd_calib_gravity)):
        p = calib.add_parser(name, parents=[common])
        p.add_argument("--input", default=None, help="input data JSON")
        p.add_argument("--synthetic", action="store_true",
                       help="generate synthetic data instead of reading --input")
        p.add_argument("--noise", type=float, default=0.0,
                       help="synthetic noise sigma (mm or N)")
        p.add_argument("--out", default=None, help="write the report JSON here")
        if name == "hand-eye":
            p.add_argument("--rot-noise-deg", type=float, default=0.0)
        if name == "gravity":
            p.add_argument("--degree", type=int, default=3)
        p.set_defaults(fn=fn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "synthetic", False) is False and getattr(args, "fn", None) in (
            cmd_calib_pivot, cmd_calib_hand_eye, cmd_calib_register, cmd_calib_gravity):
        if not args.input:
            parser.error("calib commands need --input or --synthetic")
    if getattr(args, "seed", None) is None:
        args.seed = 0 if getattr(args, "fn", None) in (
            cmd_calib_pivot, cmd_calib_hand_eye, cmd_calib_register, cmd_calib_gravity) \
            else None
    try:
        return args.fn(args)
    except cal.CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:  # scenario/volume/phantom validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def console_main() -> None:
    raise SystemExit(main())
