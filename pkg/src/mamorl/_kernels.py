"""Hot loops for Pareto filtering and hypervolume.

Each kernel has a numba version and a vectorised numpy version with the same
signature. The public names (``pareto_mask`` etc.) resolve to one or the other
at import time according to :mod:`mamorl._jit`; both sets stay importable for
tests and benchmarks as ``NUMBA_KERNELS`` / ``NUMPY_KERNELS``.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np

from ._jit import USE_NUMBA, njit

# ---------------------------------------------------------------- numpy path


def _pareto_mask_np(points: np.ndarray) -> np.ndarray:
    n = points.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.bool_)
    ge = np.all(points[:, None, :] >= points[None, :, :], axis=2)
    gt = np.any(points[:, None, :] > points[None, :, :], axis=2)
    dominated = np.any(ge & gt, axis=0)
    eq = np.all(points[:, None, :] == points[None, :, :], axis=2)
    earlier_duplicate = np.any(np.tril(eq, k=-1), axis=1)
    return ~(dominated | earlier_duplicate)


def _hv2d_np(points: np.ndarray, ref: np.ndarray) -> float:
    if points.shape[0] == 0:
        return 0.0
    order = np.lexsort((-points[:, 1], -points[:, 0]))
    x = points[order, 0] - ref[0]
    y = points[order, 1]
    cm = np.maximum.accumulate(np.maximum(y, ref[1]))
    prev = np.concatenate(([ref[1]], cm[:-1]))
    return float(np.sum(np.maximum(x, 0.0) * (cm - prev)))


def _hv3d_np(points: np.ndarray, ref: np.ndarray) -> float:
    n = points.shape[0]
    if n == 0:
        return 0.0
    order = np.argsort(-points[:, 2], kind="stable")
    pts = points[order]
    total = 0.0
    for k in range(n):
        lower = pts[k + 1, 2] if k + 1 < n else ref[2]
        height = pts[k, 2] - lower
        if height > 0.0:
            total += height * _hv2d_np(pts[: k + 1, :2], ref[:2])
    return total


def _mc_hits_np(samples: np.ndarray, points: np.ndarray) -> int:
    hits = 0
    chunk = 65536
    for start in range(0, samples.shape[0], chunk):
        s = samples[start : start + chunk]
        covered = np.all(s[:, None, :] <= points[None, :, :], axis=2).any(axis=1)
        hits += int(covered.sum())
    return hits


# ---------------------------------------------------------------- numba path


@njit
def _pareto_mask_nb(points):
    n, m = points.shape
    keep = np.ones(n, dtype=np.bool_)
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            all_ge = True
            any_gt = False
            for k in range(m):
                if points[i, k] < points[j, k]:
                    all_ge = False
                    break
                if points[i, k] > points[j, k]:
                    any_gt = True
            if all_ge and (any_gt or i < j):
                keep[j] = False
                break
    return keep


@njit
def _hv2d_nb(points, ref):
    n = points.shape[0]
    if n == 0:
        return 0.0
    order = np.argsort(-points[:, 0], kind="mergesort")
    total = 0.0
    y_max = ref[1]
    for idx in range(n):
        p = order[idx]
        x = points[p, 0]
        y = points[p, 1]
        if y > y_max:
            if x > ref[0]:
                total += (x - ref[0]) * (y - y_max)
            y_max = y
    return total


@njit
def _hv3d_nb(points, ref):
    n = points.shape[0]
    if n == 0:
        return 0.0
    order = np.argsort(-points[:, 2], kind="mergesort")
    pts = points[order]
    total = 0.0
    for k in range(n):
        lower = pts[k + 1, 2] if k + 1 < n else ref[2]
        height = pts[k, 2] - lower
        if height > 0.0:
            total += height * _hv2d_nb(pts[: k + 1, :2].copy(), ref[:2].copy())
    return total


@njit
def _mc_hits_nb(samples, points):
    s_count, m = samples.shape
    n = points.shape[0]
    hits = 0
    for s in range(s_count):
        for p in range(n):
            inside = True
            for k in range(m):
                if samples[s, k] > points[p, k]:
                    inside = False
                    break
            if inside:
                hits += 1
                break
    return hits


NUMPY_KERNELS = SimpleNamespace(
    name="numpy",
    pareto_mask=_pareto_mask_np,
    hv2d=_hv2d_np,
    hv3d=_hv3d_np,
    mc_hits=_mc_hits_np,
)
NUMBA_KERNELS = SimpleNamespace(
    name="numba",
    pareto_mask=_pareto_mask_nb,
    hv2d=_hv2d_nb,
    hv3d=_hv3d_nb,
    mc_hits=_mc_hits_nb,
)

ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
