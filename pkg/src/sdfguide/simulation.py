"""Closed-loop drilling simulation: admittance-driven tip motion, guidance
forces, voxel removal and safety/efficiency metrics.

Each tick is a pure function of the current state: compensate the raw hand
force, locate the tip, evaluate guidance at the tip, solve the admittance
law for joint velocities, integrate, then grind away voxels under the burr.
Trace records capture the state at the tick's start time together with the
forces applied over that tick.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .calibration import GravityModel, compensate, orientation_params
from .distance import sample_trilinear
from .forces import AnatomyConstraint, total_sdf_force
from .robot import RobotModel, fk, solve_admittance
from .transforms import RigidTransform
from .volume import LabelVolume

TRACE_SCHEMA = "sdfguide-trace-1"


@dataclass
class DrillTool:
    tip_offset: np.ndarray  # mm, in the end-effector frame
    burr_radius: float
    clearance_mode: str = "burr-surface"  # or "tip-point"

    def __post_init__(self):
        self.tip_offset = np.asarray(self.tip_offset, dtype=float).reshape(3)
        if self.burr_radius < 0:
            raise ValueError("burr radius must be >= 0")
        if self.clearance_mode not in ("burr-surface", "tip-point"):
            raise ValueError(f"unknown clearance mode {self.clearance_mode!r}")


@dataclass
class TickRecord:
    t: float
    q: np.ndarray
    tip: np.ndarray
    clearances: dict[int, float]
    f_hand: np.ndarray
    f_sdf: np.ndarray
    f_comp: np.ndarray
    vf_enabled: bool

    def to_json_obj(self) -> dict:
        return {
            "type": "tick",
            "t": float(self.t),
            "q": [float(v) for v in self.q],
            "tip": [float(v) for v in self.tip],
            "d": {str(k): float(v) for k, v in self.clearances.items()},
            "f_h": [float(v) for v in self.f_hand],
            "f_sdf": [float(v) for v in self.f_sdf],
            "f_c": [float(v) for v in self.f_comp],
            "vf": bool(self.vf_enabled),
        }


@dataclass
class Metrics:
    drilled_volume_mm3: float
    damage_volume_mm3: dict[int, float]
    min_clearance_mm: dict[int, float | None]
    duration_s: float
    removed_voxels: dict[int, int] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "drilled_volume_mm3": float(self.drilled_volume_mm3),
            "damage_volume_mm3": {str(k): float(v) for k, v in self.damage_volume_mm3.items()},
            "min_clearance_mm": {str(k): (None if v is None else float(v))
                                 for k, v in self.min_clearance_mm.items()},
            "duration_s": float(self.duration_s),
            "removed_voxels": {str(k): int(v) for k, v in self.removed_voxels.items()},
        }


@dataclass
class SessionTrace:
    meta: dict
    records: list[TickRecord]


def drill_removal(volume: LabelVolume, tip, burr_radius: float) -> dict[int, int]:
    """Clear every nonzero voxel whose center lies within the burr sphere.

    Returns per-label removed-voxel counts; idempotent for a fixed tip.
    """
    if burr_radius < 0:
        raise ValueError("burr radius must be >= 0")
    tip = np.asarray(tip, dtype=float).reshape(3)
    dims = np.array(volume.dims)
    lo = np.ceil((tip - burr_radius - volume.origin) / volume.spacing).astype(np.int64)
    hi = np.floor((tip + burr_radius - volume.origin) / volume.spacing).astype(np.int64)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, dims - 1)
    if np.any(lo > hi):
        return {}
    sub = volume.labels[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
    ax = [volume.origin[i] + volume.spacing[i] * np.arange(lo[i], hi[i] + 1) - tip[i]
          for i in range(3)]
    d2 = (ax[0][:, None, None] ** 2 + ax[1][None, :, None] ** 2
          + ax[2][None, None, :] ** 2)
    mask = (d2 <= burr_radius * burr_radius) & (sub != 0)
    if not mask.any():
        return {}
    vals, counts = np.unique(sub[mask], return_counts=True)
    sub[mask] = 0
    return {int(v): int(c) for v, c in zip(vals, counts)}


class Session:
    """Owns all mutable simulation state; strictly tick-ordered, single-writer."""

    def __init__(self, *, volume: LabelVolume, matrix_label: int | None,
                 constraints: list[AnatomyConstraint], model: RobotModel,
                 tool: DrillTool, start_q, dt: float,
                 registration: RigidTransform | None = None,
                 gravity_model: GravityModel | None = None,
                 vf_enabled: bool = True, drill_on: bool = True,
                 eq3_literal: bool = False, seed: int = 0, meta: dict | None = None):
        self.volume = volume
        self.matrix_label = matrix_label
        self.constraints = constraints
        self.model = model
        self.tool = tool
        self.start_q = np.asarray(start_q, dtype=float).copy()
        self.q = self.start_q.copy()
        self.dt = float(dt)
        self.registration = registration or RigidTransform.identity()
        self.gravity_model = gravity_model
        self.vf_enabled = bool(vf_enabled)
        self.drill_on = bool(drill_on)
        self.eq3_literal = bool(eq3_literal)
        self.seed = int(seed)
        self.rng = np.random.default_rng(seed)
        self.tick_index = 0
        self.removed_counts: dict[int, int] = {}
        self.records: list[TickRecord] = []
        self.meta = dict(meta or {})
        self._initial_vf = bool(vf_enabled)
        self._initial_drill = bool(drill_on)
        self._pristine_labels = volume.labels.copy()

    # -- state ---------------------------------------------------------------

    @property
    def time(self) -> float:
        return self.tick_index * self.dt

    def tip_position(self, q=None) -> np.ndarray:
        pose = fk(self.model, self.q if q is None else q)
        return self.registration.apply(pose.apply(self.tool.tip_offset))

    def reset(self) -> None:
        """Back to the initial state: pose, volume, counters, trace, rng."""
        self.q = self.start_q.copy()
        self.tick_index = 0
        self.volume.labels[...] = self._pristine_labels
        self.removed_counts = {}
        self.records = []
        self.rng = np.random.default_rng(self.seed)
        self.vf_enabled = self._initial_vf
        self.drill_on = self._initial_drill

    # -- stepping ------------------------------------------------------------

    def step(self, raw_force) -> TickRecord:
        t = self.tick_index * self.dt
        q_before = self.q.copy()
        ee = fk(self.model, self.q)
        tip = self.registration.apply(ee.apply(self.tool.tip_offset))

        if self.gravity_model is not None:
            f_h = compensate(self.gravity_model, orientation_params(ee.rotation), raw_force)
        else:
            f_h = np.asarray(raw_force, dtype=float).reshape(3)

        offset = self.tool.burr_radius if self.tool.clearance_mode == "burr-surface" else 0.0
        state = total_sdf_force(self.constraints, tip, f_h,
                                clearance_offset=offset, literal_clamp=self.eq3_literal)
        if self.vf_enabled:
            f_sdf, f_c = state.sdf_force, state.compliance_force
        else:
            f_sdf, f_c = np.zeros(3), np.zeros(3)

        wrench = np.concatenate([f_h + f_c, np.zeros(3)])
        dq = solve_admittance(self.model, self.q, wrench)
        self.q = np.clip(self.q + dq * self.dt,
                         self.model.limits[:, 0], self.model.limits[:, 1])

        if self.drill_on and self.tool.burr_radius > 0:
            new_tip = self.tip_position()
            for lbl, cnt in drill_removal(self.volume, new_tip, self.tool.burr_radius).items():
                self.removed_counts[lbl] = self.removed_counts.get(lbl, 0) + cnt

        rec = TickRecord(
            t=t, q=q_before, tip=tip,
            clearances={lbl: d for lbl, d, _ in state.per_anatomy},
            f_hand=f_h, f_sdf=f_sdf, f_comp=f_c, vf_enabled=self.vf_enabled,
        )
        self.records.append(rec)
        self.tick_index += 1
        return rec

    # -- outputs -------------------------------------------------------------

    def clearances_now(self) -> dict[int, float]:
        tip = self.tip_position()
        offset = self.tool.burr_radius if self.tool.clearance_mode == "burr-surface" else 0.0
        out = {}
        for c in self.constraints:
            out[c.label] = float(sample_trilinear(c.sdf, tip)) - offset
        return out

    def metrics(self) -> Metrics:
        voxvol = self.volume.voxel_volume_mm3
        drilled = self.removed_counts.get(self.matrix_label, 0) * voxvol \
            if self.matrix_label is not None else 0.0
        damage = {c.label: self.removed_counts.get(c.label, 0) * voxvol
                  for c in self.constraints}
        min_clear: dict[int, float | None] = {}
        for c in self.constraints:
            vals = [r.clearances[c.label] for r in self.records if c.label in r.clearances]
            min_clear[c.label] = min(vals) if vals else None
        return Metrics(drilled_volume_mm3=drilled, damage_volume_mm3=damage,
                       min_clearance_mm=min_clear, duration_s=self.time,
                       removed_voxels=dict(sorted(self.removed_counts.items())))

    def snapshot(self) -> dict:
        """Immutable state summary published to observers."""
        voxvol = self.volume.voxel_volume_mm3
        if self.records:
            rec = self.records[-1]
            clear = rec.clearances
            f_h, f_sdf, f_c = rec.f_hand, rec.f_sdf, rec.f_comp
        else:
            clear = self.clearances_now()
            f_h = f_sdf = f_c = np.zeros(3)
        tau0 = {c.label: c.params.tau0 for c in self.constraints}
        breach = any(clear[lbl] < tau0[lbl] for lbl in clear)
        return {
            "type": "snapshot",
            "time_s": float(self.time),
            "tip_mm": [float(v) for v in self.tip_position()],
            "clearance_mm": {str(k): float(v) for k, v in clear.items()},
            "f_hand_n": [float(v) for v in f_h],
            "f_sdf_n": [float(v) for v in f_sdf],
            "f_comp_n": [float(v) for v in f_c],
            "vf_enabled": bool(self.vf_enabled),
            "drill_on": bool(self.drill_on),
            "drilled_mm3": float(self.removed_counts.get(self.matrix_label, 0) * voxvol
                                 if self.matrix_label is not None else 0.0),
            "damage_mm3": {str(c.label): float(self.removed_counts.get(c.label, 0) * voxvol)
                           for c in self.constraints},
            "breach": bool(breach),
        }

    def trace(self) -> SessionTrace:
        return SessionTrace(meta=dict(self.meta), records=list(self.records))


# ---------------------------------------------------------------------------
# trace serialization
# ---------------------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def trace_lines(trace: SessionTrace) -> list[str]:
    lines = [_dumps({"type": "meta", **trace.meta})]
    lines.extend(_dumps(r.to_json_obj()) for r in trace.records)
    return lines


def write_trace(path, trace: SessionTrace) -> None:
    with open(path, "w", encoding="ascii") as f:
        for line in trace_lines(trace):
            f.write(line)
            f.write("\n")


def read_trace(path) -> SessionTrace:
    meta: dict = {}
    records: list[TickRecord] = []
    with open(path, "r", encoding="ascii") as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"corrupt trace at line {i + 1}: {exc}") from exc
            if obj.get("type") == "meta":
                meta = {k: v for k, v in obj.items() if k != "type"}
            elif obj.get("type") == "tick":
                records.append(TickRecord(
                    t=float(obj["t"]), q=np.asarray(obj["q"], dtype=float),
                    tip=np.asarray(obj["tip"], dtype=float),
                    clearances={int(k): float(v) for k, v in obj["d"].items()},
                    f_hand=np.asarray(obj["f_h"], dtype=float),
                    f_sdf=np.asarray(obj["f_sdf"], dtype=float),
                    f_comp=np.asarray(obj["f_c"], dtype=float),
                    vf_enabled=bool(obj["vf"]),
                ))
            else:
                raise ValueError(f"corrupt trace at line {i + 1}: unknown record type")
    return SessionTrace(meta=meta, records=records)


def trace_csv_lines(trace: SessionTrace) -> list[str]:
    """CSV export: one row per tick. Column order: t, q*, tip_xyz, d_<label>*,
    f_h xyz, f_sdf xyz, f_c xyz, vf."""
    labels = sorted({lbl for r in trace.records for lbl in r.clearances})
    nq = len(trace.records[0].q) if trace.records else 0
    header = (["t"] + [f"q{i}" for i in range(nq)] + ["tip_x", "tip_y", "tip_z"]
              + [f"d_{lbl}" for lbl in labels]
              + ["fh_x", "fh_y", "fh_z", "fsdf_x", "fsdf_y", "fsdf_z",
                 "fc_x", "fc_y", "fc_z", "vf"])
    lines = [",".join(header)]
    for r in trace.records:
        row = ([repr(float(r.t))] + [repr(float(v)) for v in r.q]
               + [repr(float(v)) for v in r.tip]
               + [repr(float(r.clearances[lbl])) for lbl in labels]
               + [repr(float(v)) for v in r.f_hand]
               + [repr(float(v)) for v in r.f_sdf]
               + [repr(float(v)) for v in r.f_comp]
               + ["1" if r.vf_enabled else "0"])
        lines.append(",".join(row))
    return lines
