import numpy as np
import pytest


def brute_force_edt_sq(mask: np.ndarray, spacing) -> np.ndarray:
    """Independent O(N*M) oracle: per voxel, min squared distance (mm^2) to a
    True voxel, scanning every feature voxel. Chunked but otherwise literal."""
    mask = np.asarray(mask, dtype=bool)
    spacing = np.asarray(spacing, dtype=float)
    feat = np.argwhere(mask).astype(np.float64) * spacing
    coords = (np.indices(mask.shape).reshape(3, -1).T).astype(np.float64) * spacing
    out = np.empty(coords.shape[0])
    chunk = max(1, 2_000_000 // max(1, feat.shape[0]))
    for lo in range(0, coords.shape[0], chunk):
        sub = coords[lo:lo + chunk]
        dx = sub[:, None, 0] - feat[None, :, 0]
        dy = sub[:, None, 1] - feat[None, :, 1]
        dz = sub[:, None, 2] - feat[None, :, 2]
        d2 = dx * dx + dy * dy
        d2 += dz * dz
        out[lo:lo + chunk] = d2.min(axis=1)
    return out.reshape(mask.shape)


def brute_force_signed(labels: np.ndarray, label: int, spacing) -> np.ndarray:
    """Signed-distance oracle with a virtual out-of-grid background layer."""
    mask = labels == label
    outside = np.sqrt(brute_force_edt_sq(mask, spacing))
    padded = np.pad(mask, 1, constant_values=False)
    inside = np.sqrt(brute_force_edt_sq(~padded, spacing))[1:-1, 1:-1, 1:-1]
    return np.where(mask, -inside, outside)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
