"""Synthetic test phantoms rasterized onto label grids.

A phantom spec is a JSON-able dict::

    {
      "dims": [nx, ny, nz],
      "spacing_mm": [sx, sy, sz],
      "origin_mm": [ox, oy, oz],            # optional, default 0
      "primitives": [
        {"kind": "box",       "label": 1, "name": "stone", "min_mm": [...], "max_mm": [...]},
        {"kind": "sphere",    "label": 2, "center_mm": [...], "radius_mm": 3.0},
        {"kind": "ellipsoid", "label": 3, "center_mm": [...], "radii_mm": [...]},
        {"kind": "capsule",   "label": 4, "points_mm": [[...], ...], "radius_mm": 1.0}
      ]
    }

Primitives are applied in order with last-one-wins overwrite, so an anatomy
listed after a filler box ends up embedded in it. Membership is tested at
voxel centers, which keeps rasterization deterministic and easy to check
against analytic volumes.
"""

from __future__ import annotations

import warnings

import numpy as np

from .volume import LabelVolume, Segment, SegmentTable, VolumeFormatError


class PhantomSpecError(ValueError):
    """Raised for malformed phantom specifications."""


def _center_grids(dims, spacing, origin):
    axes = [origin[i] + spacing[i] * np.arange(dims[i]) for i in range(3)]
    return (axes[0][:, None, None], axes[1][None, :, None], axes[2][None, None, :])


def _sphere_mask(x, y, z, prim):
    c = np.asarray(prim["center_mm"], dtype=float)
    r = float(prim["radius_mm"])
    return (x - c[0]) ** 2 + (y - c[1]) ** 2 + (z - c[2]) ** 2 <= r * r


def _ellipsoid_mask(x, y, z, prim):
    c = np.asarray(prim["center_mm"], dtype=float)
    r = np.asarray(prim["radii_mm"], dtype=float)
    if np.any(r <= 0):
        raise PhantomSpecError("ellipsoid radii must be positive")
    return (((x - c[0]) / r[0]) ** 2 + ((y - c[1]) / r[1]) ** 2
            + ((z - c[2]) / r[2]) ** 2) <= 1.0


def _box_mask(x, y, z, prim):
    lo = np.asarray(prim["min_mm"], dtype=float)
    hi = np.asarray(prim["max_mm"], dtype=float)
    return ((x >= lo[0]) & (x <= hi[0]) & (y >= lo[1]) & (y <= hi[1])
            & (z >= lo[2]) & (z <= hi[2]))


def _capsule_mask(x, y, z, prim):
    pts = np.asarray(prim["points_mm"], dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        raise PhantomSpecError("capsule needs at least 2 polyline points")
    r = float(prim["radius_mm"])
    r2 = r * r
    mask = np.zeros(np.broadcast_shapes(x.shape, y.shape, z.shape), dtype=bool)
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        denom = float(ab @ ab)
        dx, dy, dz = x - a[0], y - a[1], z - a[2]
        if denom == 0.0:
            d2 = dx * dx + dy * dy + dz * dz
        else:
            t = np.clip((dx * ab[0] + dy * ab[1] + dz * ab[2]) / denom, 0.0, 1.0)
            d2 = ((dx - t * ab[0]) ** 2 + (dy - t * ab[1]) ** 2 + (dz - t * ab[2]) ** 2)
        mask |= d2 <= r2
    return mask


_MASK_FNS = {"sphere": _sphere_mask, "ellipsoid": _ellipsoid_mask,
             "box": _box_mask, "capsule": _capsule_mask}


def make_phantom(spec: dict) -> tuple[LabelVolume, SegmentTable]:
    """Rasterize a phantom spec into a label volume plus segment table.

    Deterministic for a given spec. A primitive that labels no voxel (outside
    the grid, or thinner than the voxel pitch) produces a warning, not an
    error.
    """
    try:
        dims = tuple(int(d) for d in spec["dims"])
        spacing = np.asarray(spec["spacing_mm"], dtype=float).reshape(3)
    except (KeyError, TypeError, ValueError) as exc:
        raise PhantomSpecError(f"bad phantom spec: {exc}") from exc
    origin = np.asarray(spec.get("origin_mm", (0.0, 0.0, 0.0)), dtype=float).reshape(3)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise PhantomSpecError(f"dims must be 3 positive integers, got {dims}")
    if np.any(spacing <= 0):
        raise PhantomSpecError("spacing_mm must be positive")

    primitives = spec.get("primitives", [])
    labels_used = [int(p.get("label", 0)) for p in primitives]
    dtype = np.uint8 if all(v < 256 for v in labels_used) else np.uint16
    grid = np.zeros(dims, dtype=dtype)
    x, y, z = _center_grids(dims, spacing, origin)

    segments: list[Segment] = []
    seen: set[int] = set()
    for k, prim in enumerate(primitives):
        kind = prim.get("kind")
        if kind not in _MASK_FNS:
            raise PhantomSpecError(f"unknown primitive kind {kind!r}")
        label = int(prim.get("label", 0))
        if label == 0:
            raise PhantomSpecError(f"primitive #{k} uses reserved label 0")
        try:
            mask = _MASK_FNS[kind](x, y, z, prim)
        except KeyError as exc:
            raise PhantomSpecError(f"primitive #{k} ({kind}) missing parameter {exc}") from exc
        count = int(mask.sum())
        if count == 0:
            warnings.warn(f"primitive #{k} ({kind}, label {label}) labels no voxels",
                          stacklevel=2)
        grid[mask] = label
        if label not in seen:
            seen.add(label)
            segments.append(Segment(name=str(prim.get("name", f"label_{label}")),
                                    label_value=label))

    try:
        table = SegmentTable(segments)
    except VolumeFormatError as exc:  # duplicate names are fine, labels deduped above
        raise PhantomSpecError(str(exc)) from exc
    return LabelVolume(dims=dims, spacing=spacing, origin=origin, labels=grid), table
