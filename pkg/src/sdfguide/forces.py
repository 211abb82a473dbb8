"""Distance-driven guidance forces and the compliance clamp.

Per anatomy, with clearance d (mm) and unit direction u pointing away from
the anatomy (the direction of increasing distance), the repulsive term is

    F(d) = f_max * u                          d <  tau0
    F(d) = f_max * exp(lambda*(tau0 - d)) * u tau0 <= d < tauf
    F(d) = 0                                  d >= tauf

The magnitude cap f_max tracks the operator's instantaneous hand-force
magnitude, so guidance never overpowers the hand. Individual anatomy terms
sum into the total guidance force; the compliance clamp then guarantees the
commanded net force never reverses the hand force's component along the
guidance direction: it passes the full guidance force through when that is
safe and otherwise cancels exactly the parallel hand component (hard stop).

The clamp's case split is also available in `literal` form (swapped
branches) for side-by-side comparison; the default form is the one that
satisfies the no-reversal guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distance import SdfVolume, gradient


@dataclass(frozen=True)
class ForceLawParams:
    """Per-anatomy thresholds: hard-constraint distance tau0, activation
    distance tauf (both mm) and exponential decay rate lambda (1/mm)."""

    tau0: float
    tauf: float
    lam: float

    def __post_init__(self):
        if not (0 <= self.tau0 < self.tauf):
            raise ValueError(f"need 0 <= tau0 < tauf, got tau0={self.tau0}, tauf={self.tauf}")
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")


# Stone-phantom defaults; the temporal-bone tuning is (0.5, 4.0, 2.0).
DEFAULT_PARAMS = ForceLawParams(tau0=1.0, tauf=4.0, lam=1.0)


@dataclass
class AnatomyConstraint:
    label: int
    sdf: SdfVolume
    params: ForceLawParams

    def __post_init__(self):
        if self.sdf.label != self.label:
            raise ValueError(f"constraint label {self.label} != sdf label {self.sdf.label}")


@dataclass
class ForceState:
    """One tick's force decomposition at the drill tip."""

    hand_force: np.ndarray
    sdf_force: np.ndarray
    compliance_force: np.ndarray
    per_anatomy: list[tuple[int, float, np.ndarray]] = field(default_factory=list)
    f_max: float = 0.0

    @staticmethod
    def zero() -> "ForceState":
        return ForceState(np.zeros(3), np.zeros(3), np.zeros(3), [], 0.0)


def per_anatomy_force(distance: float, away_dir: np.ndarray, f_max: float,
                      params: ForceLawParams) -> np.ndarray:
    """Evaluate the repulsion law for one anatomy. Total function: a degenerate
    (non-unit) direction yields zero force."""
    u = np.asarray(away_dir, dtype=float).reshape(3)
    if abs(np.linalg.norm(u) - 1.0) > 1e-6:
        return np.zeros(3)
    if distance >= params.tauf:
        return np.zeros(3)
    if distance < params.tau0:
        return f_max * u
    return f_max * np.exp(params.lam * (params.tau0 - distance)) * u


def compliance_force(hand_force, sdf_force, *, literal: bool = False) -> np.ndarray:
    """Clamp the guidance force so the net command stays aligned with the hand.

    With u the guidance direction and h_par the hand component along u:
    pass the guidance force through when (hand + guidance) . h_par >= 0,
    otherwise return -h_par, which zeroes the parallel net component.
    ``literal=True`` swaps the two branches.
    """
    f_h = np.asarray(hand_force, dtype=float).reshape(3)
    f_sdf = np.asarray(sdf_force, dtype=float).reshape(3)
    norm = np.linalg.norm(f_sdf)
    if norm == 0.0:
        return np.zeros(3)
    u = f_sdf / norm
    h_par = float(f_h @ u) * u
    no_reversal = float((f_h + f_sdf) @ h_par) >= 0.0
    if literal:
        return f_sdf.copy() if not no_reversal else -h_par
    return f_sdf.copy() if no_reversal else -h_par


def total_sdf_force(constraints: list[AnatomyConstraint], tip, hand_force,
                    *, clearance_offset: float = 0.0,
                    literal_clamp: bool = False) -> ForceState:
    """Aggregate guidance over all anatomies at the tip and apply the clamp.

    ``clearance_offset`` shifts sampled distances (burr-surface clearance:
    pass the burr radius). Every anatomy term is capped at f_max = |hand
    force|; terms then sum, so the aggregate may exceed f_max when several
    anatomies are active at once.
    """
    f_h = np.asarray(hand_force, dtype=float).reshape(3)
    f_max = float(np.linalg.norm(f_h))
    total = np.zeros(3)
    per: list[tuple[int, float, np.ndarray]] = []
    for c in constraints:
        q = gradient(c.sdf, tip)
        d = q.distance - clearance_offset
        if q.valid:
            f = per_anatomy_force(d, q.direction, f_max, c.params)
        else:
            f = np.zeros(3)
        per.append((c.label, d, f))
        total = total + f
    f_c = compliance_force(f_h, total, literal=literal_clamp)
    return ForceState(hand_force=f_h, sdf_force=total, compliance_force=f_c,
                      per_anatomy=per, f_max=f_max)
