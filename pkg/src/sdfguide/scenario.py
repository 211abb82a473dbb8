"""Scenario documents: validation, defaults, force scripts, session building.

A scenario JSON ties a volume (inline phantom spec or NRRD path), guidance
constraints, robot, tool, timing and a force script together::

    {
      "name": "...",
      "seed": 1234,
      "dt_s": 0.001,
      "duration_s": 60.0,
      "vf_enabled": true,
      "drill_on": true,
      "eq3_literal": false,
      "matrix_label": 1,
      "volume": {"phantom": {...}} | {"path": "vol.nrrd"},
      "constraints": [{"label": 2, "tau0_mm": 1.0, "tauf_mm": 4.0, "lambda_per_mm": 1.0}],
      "robot": {"kind": "gantry", "gains": [...], "limits": [...], "start_q": [...]},
      "tool": {"tip_offset_mm": [0,0,0], "burr_radius_mm": 1.0,
               "clearance_mode": "burr-surface"},
      "force_script": {"type": "keyframes", "keys": [{"t": 0.0, "f": [0,0,0]}]}
                    | {"type": "operator", "target_mm": [...], "push_n": 5.0,
                       "tangential_jitter_n": 0.5},
      "registration": {"q": [1,0,0,0], "t": [0,0,0]},   # optional
      "max_force_n": 20.0
    }

Omitted constraint thresholds fall back to the stone-phantom tuning
(tau0 1.0 mm, tauf 4.0 mm, lambda 1.0/mm). Keyframe times snap to the
nearest tick so script evaluation is pure integer logic.
"""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .calibration import GravityModel
from .distance import DistanceFieldError, signed_distance
from .forces import DEFAULT_PARAMS, AnatomyConstraint, ForceLawParams
from .phantom import PhantomSpecError, make_phantom
from .robot import robot_from_config
from .simulation import DrillTool, Metrics, Session, SessionTrace
from .transforms import RigidTransform
from .volume import SegmentTable, VolumeFormatError, load_label_volume


class ScenarioError(ValueError):
    """Raised for invalid scenario documents."""


# ---------------------------------------------------------------------------
# force scripts
# ---------------------------------------------------------------------------

class KeyframeScript:
    """Zero-order-hold force schedule keyed by tick index."""

    def __init__(self, keys: list[dict], dt: float):
        if not keys:
            raise ScenarioError("keyframe script needs at least one key")
        ticks = []
        for k in keys:
            try:
                tick = int(round(float(k["t"]) / dt))
                f = np.asarray(k["f"], dtype=float).reshape(3)
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioError(f"bad keyframe {k!r}: {exc}") from exc
            ticks.append((tick, f))
        ticks.sort(key=lambda kv: kv[0])
        self._ticks = [t for t, _ in ticks]
        self._forces = [f for _, f in ticks]

    def force(self, tick: int, tip: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        idx = -1
        for i, t in enumerate(self._ticks):
            if t <= tick:
                idx = i
            else:
                break
        return np.zeros(3) if idx < 0 else self._forces[idx].copy()


class OperatorScript:
    """Synthetic operator: constant push toward a target plus tangential jitter."""

    def __init__(self, cfg: dict):
        try:
            self.target = np.asarray(cfg["target_mm"], dtype=float).reshape(3)
            self.push_n = float(cfg["push_n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad operator script: {exc}") from exc
        self.jitter_n = float(cfg.get("tangential_jitter_n", 0.0))

    def force(self, tick: int, tip: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        to_target = self.target - tip
        dist = float(np.linalg.norm(to_target))
        u = to_target / dist if dist > 1e-9 else np.zeros(3)
        f = self.push_n * u
        if self.jitter_n > 0:
            g = rng.standard_normal(3)
            f = f + self.jitter_n * (g - float(g @ u) * u)
        return f


def make_force_script(cfg: dict, dt: float):
    kind = cfg.get("type")
    if kind == "keyframes":
        return KeyframeScript(cfg.get("keys", []), dt)
    if kind == "operator":
        return OperatorScript(cfg)
    raise ScenarioError(f"unknown force script type {kind!r}")


# ---------------------------------------------------------------------------
# scenario loading / validation
# ---------------------------------------------------------------------------

_DEFAULT_TOOL = {"tip_offset_mm": [0.0, 0.0, 0.0], "burr_radius_mm": 1.0,
                 "clearance_mode": "burr-surface"}


def load_scenario(src) -> dict:
    """Load from a path or dict, validate, and apply defaults. Returns a
    normalized plain dict (safe to serialize)."""
    if isinstance(src, (str, Path)):
        path = Path(src)
        try:
            with open(path, "r") as f:
                obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        base = path.parent
    elif isinstance(src, dict):
        obj = copy.deepcopy(src)
        base = Path.cwd()
    else:
        raise ScenarioError(f"scenario must be a path or dict, not {type(src).__name__}")

    scn: dict = {}
    scn["name"] = str(obj.get("name", "scenario"))
    scn["seed"] = int(obj.get("seed", 0))
    scn["dt_s"] = float(obj.get("dt_s", 0.001))
    if scn["dt_s"] <= 0:
        raise ScenarioError("dt_s must be positive")
    scn["duration_s"] = float(obj.get("duration_s", 10.0))
    if scn["duration_s"] < 0:
        raise ScenarioError("duration_s must be >= 0")
    scn["vf_enabled"] = bool(obj.get("vf_enabled", True))
    scn["drill_on"] = bool(obj.get("drill_on", True))
    scn["eq3_literal"] = bool(obj.get("eq3_literal", False))
    scn["max_force_n"] = float(obj.get("max_force_n", 20.0))

    vol = obj.get("volume")
    if not isinstance(vol, dict) or ("phantom" in vol) == ("path" in vol):
        raise ScenarioError('volume must be {"phantom": {...}} or {"path": "..."}')
    if "path" in vol:
        scn["volume"] = {"path": str((base / vol["path"]).resolve())}
    else:
        scn["volume"] = {"phantom": vol["phantom"]}

    matrix = obj.get("matrix_label")
    scn["matrix_label"] = int(matrix) if matrix is not None else None

    constraints = []
    for i, c in enumerate(obj.get("constraints", [])):
        if "label" not in c:
            raise ScenarioError(f"constraints[{i}]: missing label")
        constraints.append({
            "label": int(c["label"]),
            "tau0_mm": float(c.get("tau0_mm", DEFAULT_PARAMS.tau0)),
            "tauf_mm": float(c.get("tauf_mm", DEFAULT_PARAMS.tauf)),
            "lambda_per_mm": float(c.get("lambda_per_mm", DEFAULT_PARAMS.lam)),
        })
    labels = [c["label"] for c in constraints]
    if len(set(labels)) != len(labels):
        raise ScenarioError("constraint labels must be unique")
    scn["constraints"] = constraints

    scn["robot"] = obj.get("robot", {"kind": "gantry"})
    tool = dict(_DEFAULT_TOOL)
    tool.update(obj.get("tool", {}))
    scn["tool"] = tool
    scn["force_script"] = obj.get("force_script",
                                  {"type": "keyframes", "keys": [{"t": 0.0, "f": [0, 0, 0]}]})
    if "registration" in obj:
        scn["registration"] = obj["registration"]
    if "gravity_model" in obj:
        scn["gravity_model"] = obj["gravity_model"]
    return scn


def resolve_volume(scn: dict) -> tuple:
    """Materialize the scenario's label volume (and segment table)."""
    vol = scn["volume"]
    try:
        if "phantom" in vol:
            return make_phantom(vol["phantom"])
        return load_label_volume(vol["path"])
    except (PhantomSpecError, VolumeFormatError) as exc:
        raise ScenarioError(f"volume: {exc}") from exc
    except FileNotFoundError as exc:
        raise ScenarioError(f"volume file not found: {exc.filename}") from exc


def build_session(scn: dict, *, vf_override: bool | None = None,
                  workers: int | None = None) -> Session:
    """Build a ready-to-step session: volume, per-anatomy SDFs, robot, tool."""
    volume, _segments = resolve_volume(scn)
    constraints = []
    for c in scn["constraints"]:
        try:
            sdf = signed_distance(volume, c["label"], workers)
        except DistanceFieldError as exc:
            raise ScenarioError(f"constraint label {c['label']}: {exc}") from exc
        params = ForceLawParams(tau0=c["tau0_mm"], tauf=c["tauf_mm"], lam=c["lambda_per_mm"])
        constraints.append(AnatomyConstraint(label=c["label"], sdf=sdf, params=params))
    try:
        model, start_q = robot_from_config(scn["robot"])
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"robot: {exc}") from exc
    tool_cfg = scn["tool"]
    tool = DrillTool(tip_offset=tool_cfg["tip_offset_mm"],
                     burr_radius=float(tool_cfg["burr_radius_mm"]),
                     clearance_mode=tool_cfg.get("clearance_mode", "burr-surface"))
    registration = RigidTransform.from_json_obj(scn["registration"]) \
        if "registration" in scn else RigidTransform.identity()
    gravity = GravityModel.from_json_obj(scn["gravity_model"]) \
        if "gravity_model" in scn else None
    vf = scn["vf_enabled"] if vf_override is None else bool(vf_override)
    meta = trace_meta(scn, vf)
    return Session(volume=volume, matrix_label=scn["matrix_label"],
                   constraints=constraints, model=model, tool=tool, start_q=start_q,
                   dt=scn["dt_s"], registration=registration, gravity_model=gravity,
                   vf_enabled=vf, drill_on=scn["drill_on"],
                   eq3_literal=scn["eq3_literal"], seed=scn["seed"], meta=meta)


def trace_meta(scn: dict, vf_enabled: bool) -> dict:
    return {
        "schema": "sdfguide-trace-1",
        "name": scn["name"],
        "seed": scn["seed"],
        "dt_s": scn["dt_s"],
        "matrix_label": scn["matrix_label"],
        "constraints": scn["constraints"],
        "tool": scn["tool"],
        "vf_enabled": bool(vf_enabled),
    }


def run_trajectory(scn: dict, force_script: dict | None = None, *,
                   vf_override: bool | None = None,
                   workers: int | None = None,
                   session: Session | None = None) -> tuple[SessionTrace, Metrics]:
    """Run a force script (the scenario's own unless overridden) to the
    configured duration.

    Deterministic for a given scenario + seed; a prebuilt session may be
    passed to reuse its SDFs (it is reset first).
    """
    if session is None:
        session = build_session(scn, vf_override=vf_override, workers=workers)
    else:
        session.reset()
        if vf_override is not None:
            session.vf_enabled = bool(vf_override)
            session.meta = trace_meta(scn, bool(vf_override))
    script = make_force_script(force_script or scn["force_script"], scn["dt_s"])
    n_ticks = int(round(scn["duration_s"] / scn["dt_s"]))
    for k in range(n_ticks):
        f = script.force(k, session.tip_position(), session.rng)
        session.step(f)
    return session.trace(), session.metrics()


# ---------------------------------------------------------------------------
# bundled scenarios
# ---------------------------------------------------------------------------

def bundled_scenario_names() -> list[str]:
    files = resources.files("sdfguide").joinpath("scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_bundled_scenario(name: str) -> dict:
    res = resources.files("sdfguide").joinpath("scenarios", f"{name}.json")
    if not res.is_file():
        raise ScenarioError(
            f"unknown bundled scenario {name!r}; available: {bundled_scenario_names()}")
    return load_scenario(json.loads(res.read_text()))
